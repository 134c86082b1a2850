#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tar4c/errors.hpp"
#include "tar4c/series.hpp"

namespace tar4c {

/// Per-delay rejection counts behind one directed edge.
struct DelayTally {
  std::vector<int> n_by_delay;     // subjects rejecting linearity at each delay
  std::vector<int> wald_by_delay;  // of those, subjects also passing the Wald test
  int n_subjects = 0;

  int d_max() const { return static_cast<int>(n_by_delay.size()); }

  void validate() const {
    if (n_by_delay.empty() || n_by_delay.size() != wald_by_delay.size())
      throw data_error(ErrorCode::DimensionMismatch, "DelayTally: ragged counts");
    if (n_subjects < 1)
      throw data_error(ErrorCode::OutOfRange, "DelayTally: n_subjects < 1");
    for (std::size_t d = 0; d < n_by_delay.size(); ++d) {
      if (n_by_delay[d] < 0 || n_by_delay[d] > n_subjects)
        throw data_error(ErrorCode::OutOfRange, "DelayTally: n out of range");
      if (wald_by_delay[d] < 0 || wald_by_delay[d] > n_by_delay[d])
        throw data_error(ErrorCode::OutOfRange, "DelayTally: wald count exceeds n");
    }
  }
};

/// Directed edge with its connectivity indices.
struct EdgeIndex {
  std::string source, target;
  double tci = 0.0;
  double tgci = 0.0;
  DelayTally tally;
};

namespace detail {

inline double tally_index(const DelayTally& tally, const std::vector<int>& counts,
                          double majority) {
  tally.validate();
  if (!(majority >= 0.0 && majority <= 1.0))
    throw config_error(ErrorCode::BadConfig, "majority must lie in [0,1]");
  const double cutoff = majority * tally.n_subjects;
  double s = 0.0;
  for (std::size_t d = 0; d < counts.size(); ++d)
    if (static_cast<double>(tally.n_by_delay[d]) >= cutoff) s += counts[d];
  return s / (static_cast<double>(tally.d_max()) * tally.n_subjects) * 100.0;
}

}  // namespace detail

/// Threshold connectivity index: average qualifying rejection count, scaled
/// to [0, 100]. A delay qualifies when at least majority*N subjects reject.
inline double tci(const DelayTally& tally, double majority = 0.7) {
  return detail::tally_index(tally, tally.n_by_delay, majority);
}

/// Threshold Granger causality index: same gate on the linearity counts, but
/// summing the Wald pass counts.
inline double tgci(const DelayTally& tally, double majority = 0.7) {
  return detail::tally_index(tally, tally.wald_by_delay, majority);
}

/// One subject's combined verdicts for a directed pair: a combined linearity
/// p-value per delay and, where the Wald stage ran, its combined p-value
/// (NaN elsewhere).
struct SubjectPairResult {
  std::string subject;
  std::string source, target;
  std::vector<double> p_by_delay;
  std::vector<double> wald_p_by_delay;
};

/// Assemble per-delay tallies and indices for the given ordered pairs. Every
/// subject must report on every listed pair with a common delay-grid length.
inline std::vector<EdgeIndex> build_edge_table(
    const std::vector<SubjectPairResult>& results,
    const std::vector<std::pair<std::string, std::string>>& pairs, double alpha = 0.05,
    double majority = 0.7) {
  std::vector<EdgeIndex> edges;
  if (pairs.empty()) return edges;

  std::map<std::pair<std::string, std::string>, std::vector<const SubjectPairResult*>>
      by_pair;
  for (const auto& r : results) by_pair[{r.source, r.target}].push_back(&r);

  std::set<std::string> subjects;
  for (const auto& r : results) subjects.insert(r.subject);
  std::size_t d_len = 0;

  for (const auto& pr : pairs) {
    auto it = by_pair.find(pr);
    if (it == by_pair.end())
      throw data_error(ErrorCode::InconsistentSubjectSets,
                       "build_edge_table: no results for pair " + pr.first + "->" +
                           pr.second);
    std::set<std::string> here;
    for (const auto* r : it->second) {
      here.insert(r->subject);
      if (d_len == 0) d_len = r->p_by_delay.size();
      if (r->p_by_delay.size() != d_len || r->wald_p_by_delay.size() != d_len)
        throw data_error(ErrorCode::DimensionMismatch,
                         "build_edge_table: delay grids differ");
    }
    if (here != subjects)
      throw data_error(ErrorCode::InconsistentSubjectSets,
                       "build_edge_table: subject sets differ across pairs");

    EdgeIndex e;
    e.source = pr.first;
    e.target = pr.second;
    e.tally.n_subjects = static_cast<int>(subjects.size());
    e.tally.n_by_delay.assign(d_len, 0);
    e.tally.wald_by_delay.assign(d_len, 0);
    for (const auto* r : it->second) {
      for (std::size_t d = 0; d < d_len; ++d) {
        const bool lin_reject = r->p_by_delay[d] <= alpha;
        if (!lin_reject) continue;
        e.tally.n_by_delay[d] += 1;
        const double wp = r->wald_p_by_delay[d];
        if (!std::isnan(wp) && wp <= alpha) e.tally.wald_by_delay[d] += 1;
      }
    }
    e.tci = tci(e.tally, majority);
    e.tgci = tgci(e.tally, majority);
    edges.push_back(std::move(e));
  }
  return edges;
}

/// Graph metadata carried into the JSON export.
struct GraphMeta {
  int n_subjects = 0;
  int d_max = 12;
  double alpha = 0.05;
  double majority = 0.7;
};

inline std::string export_dot(const std::vector<EdgeIndex>& edges, double threshold = 0.0) {
  std::ostringstream out;
  out << "digraph connectivity {\n";
  out << "  rankdir=LR;\n";
  std::set<std::string> nodes;
  for (const auto& e : edges) {
    nodes.insert(e.source);
    nodes.insert(e.target);
  }
  for (const auto& n : nodes) out << "  \"" << n << "\";\n";
  for (const auto& e : edges) {
    if (e.tci < threshold) continue;
    const double penwidth = 0.5 + (e.tci / 100.0) * 4.5;
    out << "  \"" << e.source << "\" -> \"" << e.target << "\" [penwidth="
        << detail::format_double(penwidth) << ", tci=\"" << detail::format_double(e.tci)
        << "\", tgci=\"" << detail::format_double(e.tgci) << "\", direction=\""
        << e.source << "->" << e.target << "\"];\n";
  }
  out << "}\n";
  return out.str();
}

inline std::string export_graph_json(const std::vector<EdgeIndex>& edges,
                                     const GraphMeta& meta) {
  nlohmann::ordered_json doc;
  doc["edges"] = nlohmann::ordered_json::array();
  for (const auto& e : edges) {
    nlohmann::ordered_json je;
    je["source"] = e.source;
    je["target"] = e.target;
    je["tci"] = e.tci;
    je["tgci"] = e.tgci;
    je["n_by_delay"] = e.tally.n_by_delay;
    je["wald_by_delay"] = e.tally.wald_by_delay;
    doc["edges"].push_back(std::move(je));
  }
  doc["meta"] = {{"N", meta.n_subjects},
                 {"D", meta.d_max},
                 {"alpha", meta.alpha},
                 {"majority", meta.majority}};
  return doc.dump(2) + "\n";
}

inline std::string export_graph(const std::vector<EdgeIndex>& edges, const std::string& fmt,
                                const GraphMeta& meta, double threshold = 0.0) {
  if (fmt == "dot") return export_dot(edges, threshold);
  if (fmt == "json") return export_graph_json(edges, meta);
  throw config_error(ErrorCode::UnknownFormat, "export_graph: unknown format '" + fmt + "'");
}

}  // namespace tar4c
