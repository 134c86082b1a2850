#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "tar4c/config_json.hpp"
#include "tar4c/connectivity.hpp"
#include "tar4c/inference.hpp"
#include "tar4c/parallel.hpp"
#include "tar4c/rng.hpp"
#include "tar4c/series.hpp"
#include "tar4c/simulate.hpp"
#include "tar4c/spectral.hpp"
#include "tar4c/tar.hpp"

namespace tar4c {

namespace detail {

inline std::string resolve_path(const std::string& base_dir, const std::string& p) {
  std::filesystem::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return p;
  return (std::filesystem::path(base_dir) / fp).string();
}

inline void write_text(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error(ErrorCode::EmptyFile, "cannot open for writing: " + path);
  out << content;
  if (!out) throw data_error(ErrorCode::EmptyFile, "write failed: " + path);
}

inline std::uint64_t item_seed(std::uint64_t master, const std::string& subject,
                               const std::string& source, const std::string& target,
                               std::size_t epoch, const std::string& stage) {
  std::uint64_t s = master;
  s = hash_combine(s, subject);
  s = hash_combine(s, source);
  s = hash_combine(s, target);
  s = hash_combine(s, static_cast<std::uint64_t>(epoch));
  s = hash_combine(s, stage);
  return s;
}

}  // namespace detail

/// Outcome of one delay for one subject/pair/direction, aggregated over epochs.
struct DelayOutcome {
  int d = 0;
  std::vector<double> lr_epoch;
  std::vector<double> r_hat_epoch;
  std::vector<double> p_epoch;
  double p_combined = 1.0;
  bool lin_reject = false;

  bool wald_ran = false;
  std::vector<double> wald_delta_epoch;
  std::vector<double> wald_p_epoch;
  double wald_p_combined = std::numeric_limits<double>::quiet_NaN();
  bool wald_pass = false;
};

struct MscOutcome {
  bool ran = false;
  OrderSet gamma;
  double msc = 0.0;
  double delta = 0.0;
  double r_hat = 0.0;
  int d_hat = 0;
  int at_delay = 0;          // delay the selection was run at
  std::size_t at_epoch = 0;  // epoch index used
};

/// One work item: a subject tested on one ordered channel pair.
struct PairDirectionResult {
  std::string subject;
  std::string source, target;
  std::size_t epochs_total = 0;
  std::size_t epochs_used = 0;
  std::size_t epochs_skipped_short = 0;
  std::size_t epochs_failed = 0;
  std::vector<DelayOutcome> delays;
  std::string decision = "none";  // TGC | TC | none
  MscOutcome msc;
  std::vector<std::string> notes;
};

struct RunResult {
  std::vector<PairDirectionResult> items;
  std::vector<EdgeIndex> edges;
  GraphMeta meta;
  json audit;
};

namespace detail {

struct EpochPair {
  Eigen::VectorXd x, y;
};

/// Neutralized (or centered, when no bystander channels exist) source/target
/// series for each usable epoch.
inline std::vector<EpochPair> prepare_epochs(const EpochSet& set, const std::string& source,
                                             const std::string& target,
                                             const RunConfig& cfg,
                                             PairDirectionResult& item) {
  std::vector<EpochPair> out;
  const std::size_t min_len = min_epoch_length(
      std::max(cfg.tar.max_p(), cfg.tar.max_q()), cfg.tar.max_delay());
  for (std::size_t e = 0; e < set.epochs.size(); ++e) {
    const ChannelMatrix& ep = set.epochs[e];
    if (static_cast<std::size_t>(ep.samples()) < min_len) {
      ++item.epochs_skipped_short;
      continue;
    }
    try {
      const int ix = ep.channel_index(source);
      const int iy = ep.channel_index(target);
      std::vector<Eigen::Index> others;
      for (Eigen::Index c = 0; c < ep.channels(); ++c)
        if (c != ix && c != iy) others.push_back(c);

      EpochPair pair;
      if (others.empty()) {
        pair.x = ep.data.col(ix).array() - ep.data.col(ix).mean();
        pair.y = ep.data.col(iy).array() - ep.data.col(iy).mean();
      } else {
        Eigen::MatrixXd z(ep.samples(), static_cast<Eigen::Index>(others.size()));
        for (std::size_t c = 0; c < others.size(); ++c)
          z.col(static_cast<Eigen::Index>(c)) = ep.data.col(others[c]);
        int span = cfg.span > 0 ? cfg.span : default_span(ep.samples());
        span = std::min<int>(span, static_cast<int>(ep.samples() / 4));
        span = std::max(span, 1);
        const SpectralDensity sd = estimate_spectrum(z, span);
        const DpcaScores scores =
            dpca_scores(sd, z, cfg.target_var, cfg.filter_len, cfg.max_components);
        pair.x = neutralize(ep.data.col(ix), scores, cfg.reg_lags);
        pair.y = neutralize(ep.data.col(iy), scores, cfg.reg_lags);
      }
      out.push_back(std::move(pair));
    } catch (const Error& err) {
      ++item.epochs_failed;
      item.notes.push_back("epoch " + std::to_string(e) + " skipped: " + err.what());
    }
  }
  return out;
}

inline std::vector<double> finite_only(const std::vector<double>& v) {
  std::vector<double> out;
  for (double x : v)
    if (std::isfinite(x)) out.push_back(x);
  return out;
}

/// Run the full per-item testing chain for one subject and ordered pair.
inline PairDirectionResult run_item(const std::string& subject, const EpochSet& set,
                                    const std::string& source, const std::string& target,
                                    const RunConfig& cfg) {
  PairDirectionResult item;
  item.subject = subject;
  item.source = source;
  item.target = target;
  item.epochs_total = set.epochs.size();

  const std::vector<EpochPair> epochs = prepare_epochs(set, source, target, cfg, item);
  const std::size_t D = cfg.tar.delays.size();
  item.delays.resize(D);
  for (std::size_t i = 0; i < D; ++i) item.delays[i].d = cfg.tar.delays[i];

  // Stage 1: per-epoch, per-delay linearity bootstrap.
  struct EpochTests {
    std::vector<LrTestResult> by_delay;
    const EpochPair* series = nullptr;
    std::size_t index = 0;
  };
  std::vector<EpochTests> tested;
  for (std::size_t e = 0; e < epochs.size(); ++e) {
    BootstrapOptions opt;
    opt.B = cfg.B;
    opt.seed = item_seed(cfg.seed, subject, source, target, e, "linearity");
    opt.hetero_robust = cfg.hetero_robust;
    opt.jobs = 1;
    try {
      EpochTests t;
      t.by_delay = bootstrap_linearity_by_delay(epochs[e].y, epochs[e].x, cfg.tar, opt);
      t.series = &epochs[e];
      t.index = e;
      tested.push_back(std::move(t));
    } catch (const Error& err) {
      ++item.epochs_failed;
      item.notes.push_back("epoch " + std::to_string(e) +
                           " linearity stage failed: " + err.what());
    }
  }
  item.epochs_used = tested.size();

  for (std::size_t i = 0; i < D; ++i) {
    DelayOutcome& out = item.delays[i];
    for (const auto& t : tested) {
      out.lr_epoch.push_back(t.by_delay[i].lr);
      out.r_hat_epoch.push_back(t.by_delay[i].r_hat);
      out.p_epoch.push_back(t.by_delay[i].p_boot);
    }
    if (!out.p_epoch.empty()) {
      out.p_combined = combine_pvalues(out.p_epoch).p;
      out.lin_reject = out.p_combined <= cfg.alpha;
    }
  }

  // Stage 2: Wald TGC test at each rejecting delay, at that delay's fitted
  // threshold per epoch.
  const bool wald_possible = cfg.tar.q1 + cfg.tar.q2 > 0;
  for (std::size_t i = 0; i < D; ++i) {
    DelayOutcome& out = item.delays[i];
    if (!out.lin_reject || !wald_possible) continue;
    out.wald_ran = true;
    const TarConfig cfg_d = cfg.tar.with_delay(out.d);
    for (const auto& t : tested) {
      try {
        const TarData data = make_tar_data(t.series->y, t.series->x, cfg.tar);
        const TarFit fit = grid_fit(data, cfg_d);
        const WaldTestResult w = wald_tgc(data.X, fit, cfg.tar);
        out.wald_delta_epoch.push_back(w.delta);
        out.wald_p_epoch.push_back(w.p);
      } catch (const Error& err) {
        item.notes.push_back("epoch " + std::to_string(t.index) + " wald at d=" +
                             std::to_string(out.d) + " failed: " + err.what());
      }
    }
    if (!out.wald_p_epoch.empty()) {
      out.wald_p_combined = combine_pvalues(out.wald_p_epoch).p;
      out.wald_pass = out.wald_p_combined <= cfg.alpha;
    }
  }

  bool any_reject = false, any_wald = false;
  for (const auto& d : item.delays) {
    any_reject = any_reject || d.lin_reject;
    any_wald = any_wald || d.wald_pass;
  }
  item.decision = any_wald ? "TGC" : (any_reject ? "TC" : "none");

  // Stage 3: parsimonious representation at the strongest delay.
  if (cfg.run_msc && any_reject && wald_possible && !tested.empty()) {
    std::size_t best_i = 0;
    bool have = false;
    for (std::size_t i = 0; i < D; ++i) {
      if (!item.delays[i].lin_reject) continue;
      if (!have || item.delays[i].p_combined < item.delays[best_i].p_combined) {
        best_i = i;
        have = true;
      }
    }
    std::size_t best_e = 0;
    for (std::size_t e = 1; e < tested.size(); ++e)
      if (item.delays[best_i].p_epoch[e] < item.delays[best_i].p_epoch[best_e])
        best_e = e;

    const int p = cfg.tar.p1, q = cfg.tar.q1;
    std::vector<OrderSet> grid = {{p, p, q, q}, {p, p, 0, 0}};
    if (q > 0) {
      grid.push_back({p, p, q, 0});
      grid.push_back({p, p, 0, q});
    }
    TarConfig base = cfg.tar.with_delay(item.delays[best_i].d);
    try {
      const MscRecord rec =
          msc_select(tested[best_e].series->y, tested[best_e].series->x, base, grid,
                     cfg.max_r_per_delay);
      item.msc.ran = true;
      item.msc.gamma = rec.gamma;
      item.msc.msc = rec.msc;
      item.msc.delta = rec.delta;
      item.msc.r_hat = rec.fit.r_hat;
      item.msc.d_hat = rec.fit.d_hat;
      item.msc.at_delay = item.delays[best_i].d;
      item.msc.at_epoch = tested[best_e].index;
    } catch (const Error& err) {
      item.notes.push_back(std::string("msc stage failed: ") + err.what());
    }
  }
  return item;
}

inline json delay_to_json(const DelayOutcome& d) {
  json j;
  j["d"] = d.d;
  j["lr"] = d.lr_epoch;
  j["r_hat"] = d.r_hat_epoch;
  j["p"] = d.p_epoch;
  j["p_combined"] = d.p_combined;
  j["lin_reject"] = d.lin_reject;
  if (d.wald_ran) {
    json w;
    w["delta"] = d.wald_delta_epoch;
    w["p"] = d.wald_p_epoch;
    if (std::isnan(d.wald_p_combined))
      w["p_combined"] = nullptr;
    else
      w["p_combined"] = d.wald_p_combined;
    w["pass"] = d.wald_pass;
    j["wald"] = std::move(w);
  } else {
    j["wald"] = nullptr;
  }
  return j;
}

inline json item_to_json(const PairDirectionResult& it) {
  json j;
  j["subject"] = it.subject;
  j["source"] = it.source;
  j["target"] = it.target;
  j["epochs"] = {{"total", it.epochs_total},
                 {"used", it.epochs_used},
                 {"skipped_short", it.epochs_skipped_short},
                 {"failed", it.epochs_failed}};
  j["delays"] = json::array();
  for (const auto& d : it.delays) j["delays"].push_back(delay_to_json(d));
  j["decision"] = it.decision;
  if (it.msc.ran) {
    j["msc"] = {{"gamma",
                 {{"p1", it.msc.gamma.p1},
                  {"p2", it.msc.gamma.p2},
                  {"q1", it.msc.gamma.q1},
                  {"q2", it.msc.gamma.q2}}},
                {"msc", it.msc.msc},
                {"delta", it.msc.delta},
                {"r_hat", it.msc.r_hat},
                {"d_hat", it.msc.d_hat},
                {"at_delay", it.msc.at_delay},
                {"at_epoch", it.msc.at_epoch}};
  } else {
    j["msc"] = nullptr;
  }
  j["notes"] = it.notes;
  return j;
}

inline SubjectPairResult to_subject_result(const PairDirectionResult& it) {
  SubjectPairResult r;
  r.subject = it.subject;
  r.source = it.source;
  r.target = it.target;
  for (const auto& d : it.delays) {
    r.p_by_delay.push_back(d.p_combined);
    r.wald_p_by_delay.push_back(d.wald_ran ? d.wald_p_combined
                                           : std::numeric_limits<double>::quiet_NaN());
  }
  return r;
}

}  // namespace detail

/// Full batch run; paths inside cfg resolve against base_dir. Returns results
/// in memory; writing happens in write_run_outputs so tests can inspect both.
inline RunResult run_pipeline(const RunConfig& cfg, const std::string& base_dir = "") {
  cfg.validate();

  struct SubjectData {
    std::string id;
    EpochSet epochs;
  };
  std::vector<SubjectData> subjects;
  for (const auto& s : cfg.subjects) {
    SubjectData sd;
    sd.id = s.id;
    const ChannelMatrix rec =
        load_csv(detail::resolve_path(base_dir, s.recording), CsvSchema{});
    if (!s.annotations.empty()) {
      const auto marks = load_annotations(detail::resolve_path(base_dir, s.annotations));
      sd.epochs = slice_epochs(rec, marks, 1);
    } else {
      sd.epochs.epochs.push_back(rec);
    }
    subjects.push_back(std::move(sd));
  }

  std::vector<std::pair<std::string, std::string>> directed;
  for (const auto& p : cfg.pairs) {
    directed.emplace_back(p.first, p.second);
    directed.emplace_back(p.second, p.first);
  }

  struct WorkItem {
    const SubjectData* subject;
    std::pair<std::string, std::string> dir;
  };
  std::vector<WorkItem> work;
  for (const auto& s : subjects)
    for (const auto& d : directed) work.push_back({&s, d});

  RunResult result;
  result.items.resize(work.size());
  parallel_for(work.size(), cfg.jobs, [&](std::size_t i) {
    result.items[i] = detail::run_item(work[i].subject->id, work[i].subject->epochs,
                                       work[i].dir.first, work[i].dir.second, cfg);
  });

  std::vector<SubjectPairResult> flat;
  for (const auto& it : result.items) flat.push_back(detail::to_subject_result(it));
  result.edges = build_edge_table(flat, directed, cfg.alpha, cfg.majority);
  result.meta.n_subjects = static_cast<int>(subjects.size());
  result.meta.d_max = static_cast<int>(cfg.tar.delays.size());
  result.meta.alpha = cfg.alpha;
  result.meta.majority = cfg.majority;

  json audit;
  audit["schema"] = "tar4c-audit-v1";
  audit["config"] = run_config_to_json(cfg);
  audit["meta"] = {{"N", result.meta.n_subjects}, {"D", result.meta.d_max},
                   {"alpha", cfg.alpha},          {"majority", cfg.majority},
                   {"seed", cfg.seed},            {"B", cfg.B},
                   {"n_perm", cfg.n_perm},        {"delays", cfg.tar.delays}};
  audit["items"] = json::array();
  for (const auto& it : result.items) audit["items"].push_back(detail::item_to_json(it));
  result.audit = std::move(audit);
  return result;
}

/// Write edges.json / edges.dot / audit.json under out_dir per cfg.format.
inline void write_run_outputs(const RunResult& res, const RunConfig& cfg) {
  std::filesystem::create_directories(cfg.out_dir);
  const std::filesystem::path out(cfg.out_dir);
  if (cfg.format == "json" || cfg.format == "both")
    detail::write_text((out / "edges.json").string(),
                       export_graph_json(res.edges, res.meta));
  if (cfg.format == "dot" || cfg.format == "both")
    detail::write_text((out / "edges.dot").string(), export_dot(res.edges));
  detail::write_text((out / "audit.json").string(), res.audit.dump(2) + "\n");
}

/// Recompute the edge table from an audit log and compare against the written
/// edge file. Returns a list of discrepancies; empty means exact agreement.
inline std::vector<std::string> replay_audit(const std::string& audit_path,
                                             const std::string& edges_path) {
  std::vector<std::string> issues;
  const json audit = detail::load_json_file(audit_path);
  const json edges_doc = detail::load_json_file(edges_path);

  const double alpha = audit.at("meta").at("alpha").get<double>();
  const double majority = audit.at("meta").at("majority").get<double>();

  std::vector<SubjectPairResult> flat;
  std::vector<std::pair<std::string, std::string>> directed;
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& ij : audit.at("items")) {
    SubjectPairResult r;
    r.subject = ij.at("subject").get<std::string>();
    r.source = ij.at("source").get<std::string>();
    r.target = ij.at("target").get<std::string>();
    for (const auto& dj : ij.at("delays")) {
      const auto ps = dj.at("p").get<std::vector<double>>();
      double pc = dj.at("p_combined").get<double>();
      if (!ps.empty()) {
        const double rec = combine_pvalues(ps).p;
        if (rec != pc)
          issues.push_back(r.subject + " " + r.source + "->" + r.target + " d=" +
                           std::to_string(dj.at("d").get<int>()) +
                           ": stored combined p does not replay");
        pc = rec;
      }
      r.p_by_delay.push_back(pc);
      double wp = std::numeric_limits<double>::quiet_NaN();
      if (!dj.at("wald").is_null()) {
        const auto wps = dj.at("wald").at("p").get<std::vector<double>>();
        if (!wps.empty()) {
          wp = combine_pvalues(wps).p;
          if (!dj.at("wald").at("p_combined").is_null() &&
              wp != dj.at("wald").at("p_combined").get<double>())
            issues.push_back(r.subject + " " + r.source + "->" + r.target +
                             ": stored combined wald p does not replay");
        }
      }
      r.wald_p_by_delay.push_back(wp);
    }
    if (seen.insert({r.source, r.target}).second) directed.push_back({r.source, r.target});
    flat.push_back(std::move(r));
  }

  const auto edges = build_edge_table(flat, directed, alpha, majority);
  GraphMeta meta;
  meta.n_subjects = audit.at("meta").at("N").get<int>();
  meta.d_max = audit.at("meta").at("D").get<int>();
  meta.alpha = alpha;
  meta.majority = majority;
  const json rebuilt = json::parse(export_graph_json(edges, meta));
  if (rebuilt != edges_doc)
    issues.push_back("edge table rebuilt from audit differs from " + edges_path);
  return issues;
}

/// Comparison of two run bundles per the four-way directional scheme: within
/// each bundle the two directions of every pair, and across bundles each
/// direction of every pair.
inline json compare_bundles(const std::string& audit_a, const std::string& audit_b,
                            int n_perm, std::uint64_t seed, double alpha = 0.05) {
  const json a = detail::load_json_file(audit_a);
  const json b = detail::load_json_file(audit_b);

  // subject x delay matrix of mean epoch LR statistics, zeroed where the
  // subject does not reject linearity or fails the Wald gate at that delay.
  auto matrices = [alpha](const json& audit) {
    std::map<std::pair<std::string, std::string>, std::map<std::string, std::vector<double>>>
        by_dir;
    std::size_t d_len = 0;
    for (const auto& ij : audit.at("items")) {
      const std::string subject = ij.at("subject").get<std::string>();
      const std::pair<std::string, std::string> dir{ij.at("source").get<std::string>(),
                                                    ij.at("target").get<std::string>()};
      std::vector<double> row;
      bool has_wald_stage = false;
      for (const auto& dj : ij.at("delays")) {
        if (!dj.at("wald").is_null()) has_wald_stage = true;
      }
      for (const auto& dj : ij.at("delays")) {
        double v = 0.0;
        const bool lin = dj.at("lin_reject").get<bool>();
        bool wald_ok = !has_wald_stage;  // no Wald stage anywhere: gate on linearity only
        if (!dj.at("wald").is_null() && !dj.at("wald").at("p_combined").is_null())
          wald_ok = dj.at("wald").at("pass").get<bool>();
        if (lin && wald_ok) {
          double s = 0.0;
          int c = 0;
          for (double lr : dj.at("lr").get<std::vector<double>>())
            if (std::isfinite(lr)) {
              s += lr;
              ++c;
            }
          v = c > 0 ? s / c : 0.0;
        }
        row.push_back(v);
      }
      if (d_len == 0) d_len = row.size();
      if (row.size() != d_len)
        throw data_error(ErrorCode::DimensionMismatch,
                         "compare_bundles: delay grids differ across items");
      by_dir[dir][subject] = std::move(row);
    }
    std::map<std::pair<std::string, std::string>, Eigen::MatrixXd> out;
    for (const auto& [dir, rows] : by_dir) {
      Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(d_len));
      Eigen::Index r = 0;
      for (const auto& [subj, row] : rows) {  // std::map: sorted by subject id
        for (std::size_t c = 0; c < d_len; ++c)
          m(r, static_cast<Eigen::Index>(c)) = row[c];
        ++r;
      }
      out[dir] = std::move(m);
    }
    return out;
  };

  const auto ma = matrices(a);
  const auto mb = matrices(b);

  std::set<std::pair<std::string, std::string>> pairs;
  for (const auto& [dir, m] : ma) {
    const std::pair<std::string, std::string> rev{dir.second, dir.first};
    if (ma.count(rev) && mb.count(dir) && mb.count(rev))
      pairs.insert(dir.first < dir.second ? dir : rev);
  }

  json report;
  report["alpha"] = alpha;
  report["n_perm"] = n_perm;
  report["within"] = json::array();
  report["across"] = json::array();
  report["classification"] = json::array();

  std::uint64_t stream = 0;
  auto run_test = [&](const Eigen::MatrixXd& u, const Eigen::MatrixXd& v) {
    const HotellingResult h =
        hotelling_permutation(u, v, n_perm, hash_combine(seed, stream++));
    return h;
  };

  for (const auto& pr : pairs) {
    const std::pair<std::string, std::string> fwd = pr;
    const std::pair<std::string, std::string> rev{pr.second, pr.first};

    const HotellingResult wa = run_test(ma.at(fwd), ma.at(rev));
    const HotellingResult wb = run_test(mb.at(fwd), mb.at(rev));
    const HotellingResult xf = run_test(ma.at(fwd), mb.at(fwd));
    const HotellingResult xr = run_test(ma.at(rev), mb.at(rev));

    auto entry = [&](const char* kind, const HotellingResult& h,
                     const std::string& lhs, const std::string& rhs) {
      json e = to_json(h);
      e["kind"] = kind;
      e["pair"] = {pr.first, pr.second};
      e["lhs"] = lhs;
      e["rhs"] = rhs;
      e["significant"] = h.p <= alpha;
      return e;
    };
    const std::string f = pr.first + "->" + pr.second;
    const std::string g = pr.second + "->" + pr.first;
    report["within"].push_back(entry("within_a", wa, f, g));
    report["within"].push_back(entry("within_b", wb, f, g));
    report["across"].push_back(entry("across", xf, "a:" + f, "b:" + f));
    report["across"].push_back(entry("across", xr, "a:" + g, "b:" + g));

    const bool sa = wa.p <= alpha, sb = wb.p <= alpha;
    std::string label = sa && sb ? "asymmetric_in_both"
                        : sa     ? "asymmetric_in_a_only"
                        : sb     ? "asymmetric_in_b_only"
                                 : "symmetric";
    report["classification"].push_back(
        {{"pair", {pr.first, pr.second}}, {"label", label}});
  }
  return report;
}

/// Materialize a simulation spec: per-subject recording CSVs, optional epoch
/// annotations, and a manifest ready to feed cmd_run.
inline json simulate_to_dir(const SimSpec& spec, const std::string& out_dir) {
  std::filesystem::create_directories(out_dir);
  const std::filesystem::path out(out_dir);
  json manifest;
  manifest["subjects"] = json::array();
  for (int s = 0; s < spec.n_subjects; ++s) {
    const std::uint64_t sub_seed = hash_combine(spec.seed, static_cast<std::uint64_t>(s));
    ConfoundedNetwork net =
        gen_confounded_network(spec.network, spec.T, sub_seed, spec.burn_in);
    net.channels.rate_hz = spec.rate_hz;
    const std::string id = spec.out_prefix + std::to_string(s + 1);
    const std::string rec_name = id + ".csv";
    write_csv(net.channels, (out / rec_name).string());

    std::string ann_name;
    if (spec.epoch_len > 0) {
      ann_name = id + "_epochs.csv";
      std::ostringstream ann;
      ann << "start,end,task,gesture\n";
      for (Eigen::Index t = 0; t + spec.epoch_len <= spec.T; t += spec.epoch_len)
        ann << t << "," << (t + spec.epoch_len) << ",sim,none\n";
      detail::write_text((out / ann_name).string(), ann.str());
    }
    manifest["subjects"].push_back(
        {{"id", id}, {"recording", rec_name}, {"annotations", ann_name}});
  }
  manifest["pairs"] = json::array();
  json pr = json::array();
  pr.push_back(spec.network.labels.empty() ? "X" : spec.network.labels[0]);
  pr.push_back(spec.network.labels.empty() ? "Y" : spec.network.labels[1]);
  manifest["pairs"].push_back(pr);
  detail::write_text((out / "manifest.json").string(), manifest.dump(2) + "\n");
  return manifest;
}

}  // namespace tar4c
