#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "tar4c/errors.hpp"

namespace tar4c {

/// Multichannel recording: T samples by n channels, plus labels and rate.
struct ChannelMatrix {
  Eigen::MatrixXd data;              // T x n
  std::vector<std::string> labels;   // n unique, nonempty names
  double rate_hz = 160.0;

  Eigen::Index samples() const { return data.rows(); }
  Eigen::Index channels() const { return data.cols(); }

  int channel_index(const std::string& label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (labels[i] == label) return static_cast<int>(i);
    throw data_error(ErrorCode::MissingColumn, "unknown channel '" + label + "'");
  }

  Eigen::VectorXd column(const std::string& label) const {
    return data.col(channel_index(label));
  }

  void validate() const {
    if (data.rows() < 1)
      throw data_error(ErrorCode::EmptyFile, "channel matrix has no samples");
    if (static_cast<Eigen::Index>(labels.size()) != data.cols())
      throw data_error(ErrorCode::DimensionMismatch, "label count != column count");
    std::set<std::string> seen;
    for (const auto& l : labels) {
      if (l.empty())
        throw data_error(ErrorCode::MissingColumn, "empty channel label");
      if (!seen.insert(l).second)
        throw data_error(ErrorCode::MissingColumn, "duplicate channel label '" + l + "'");
    }
    if (!data.allFinite())
      throw data_error(ErrorCode::NonNumericCell, "non-finite sample in channel matrix");
  }
};

/// Epochs cut from one recording; all share labels and rate.
struct EpochSet {
  std::vector<ChannelMatrix> epochs;
  std::string task_label;
  std::string gesture_label;
};

struct EpochMark {
  std::size_t start = 0;  // inclusive sample index
  std::size_t end = 0;    // exclusive
  std::string task;
  std::string gesture;
};

struct CsvSchema {
  std::vector<std::string> channels;  // output order; empty selects all file columns
  double rate_hz = 160.0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_cell(const std::string& raw, std::size_t row, std::size_t col) {
  const std::string s = trim(raw);
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v))
    throw data_error(ErrorCode::NonNumericCell,
                     "non-numeric cell '" + s + "' at row " + std::to_string(row) +
                         ", column " + std::to_string(col));
  return v;
}

inline std::string format_double(double v) {
  char buf[40];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace detail

/// Read a recording from CSV: one header row of channel labels, one row per
/// sample. Columns are returned in schema order; unlisted columns are ignored.
inline ChannelMatrix load_csv(const std::string& path, const CsvSchema& schema = {}) {
  std::ifstream in(path);
  if (!in)
    throw data_error(ErrorCode::EmptyFile, "cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line))
    throw data_error(ErrorCode::EmptyFile, "'" + path + "' is empty");

  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);

  std::vector<std::string> want = schema.channels.empty() ? header : schema.channels;
  std::vector<int> col_of(want.size(), -1);
  for (std::size_t i = 0; i < want.size(); ++i) {
    auto it = std::find(header.begin(), header.end(), want[i]);
    if (it == header.end())
      throw data_error(ErrorCode::MissingColumn,
                       "column '" + want[i] + "' not found in '" + path + "'");
    col_of[i] = static_cast<int>(it - header.begin());
  }

  std::vector<std::vector<double>> rows;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    std::vector<double> row(want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      const int c = col_of[i];
      if (c >= static_cast<int>(cells.size()))
        throw data_error(ErrorCode::NonNumericCell,
                         "row " + std::to_string(row_no) + " has too few cells");
      row[i] = detail::parse_cell(cells[c], row_no, static_cast<std::size_t>(c));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw data_error(ErrorCode::EmptyFile, "'" + path + "' has no data rows");

  ChannelMatrix m;
  m.labels = want;
  m.rate_hz = schema.rate_hz;
  m.data.resize(static_cast<Eigen::Index>(rows.size()),
                static_cast<Eigen::Index>(want.size()));
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < want.size(); ++c)
      m.data(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
  m.validate();
  return m;
}

/// Shortest round-trip decimal output; load_csv(write_csv(m)) restores every
/// sample bit-exactly.
inline void write_csv(const ChannelMatrix& m, const std::string& path) {
  std::ofstream out(path);
  if (!out)
    throw data_error(ErrorCode::EmptyFile, "cannot write '" + path + "'");
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    if (i) out << ',';
    out << m.labels[i];
  }
  out << '\n';
  for (Eigen::Index r = 0; r < m.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.data.cols(); ++c) {
      if (c) out << ',';
      out << detail::format_double(m.data(r, c));
    }
    out << '\n';
  }
}

/// Minimum usable epoch length for given lag orders and delay range.
inline std::size_t min_epoch_length(int max_lag, int max_delay) {
  return static_cast<std::size_t>(std::max(max_lag, 0) + std::max(max_delay, 0) + 30);
}

/// Cut half-open [start, end) segments out of a recording. Epochs are copies;
/// mutating one never touches the parent. Task/gesture labels are kept when
/// uniform across marks, left empty when mixed.
inline EpochSet slice_epochs(const ChannelMatrix& m, const std::vector<EpochMark>& marks,
                             std::size_t min_len = min_epoch_length(12, 12)) {
  EpochSet set;
  bool first = true;
  for (const auto& mk : marks) {
    if (mk.start >= mk.end || mk.end > static_cast<std::size_t>(m.samples()))
      throw data_error(ErrorCode::OutOfRange,
                       "epoch mark [" + std::to_string(mk.start) + ", " +
                           std::to_string(mk.end) + ") out of range for T=" +
                           std::to_string(m.samples()));
    const std::size_t len = mk.end - mk.start;
    if (len < min_len)
      throw data_error(ErrorCode::EpochTooShort,
                       "epoch of length " + std::to_string(len) +
                           " below minimum usable length " + std::to_string(min_len));
    ChannelMatrix e;
    e.labels = m.labels;
    e.rate_hz = m.rate_hz;
    e.data = m.data.middleRows(static_cast<Eigen::Index>(mk.start),
                               static_cast<Eigen::Index>(len));
    set.epochs.push_back(std::move(e));
    if (first) {
      set.task_label = mk.task;
      set.gesture_label = mk.gesture;
      first = false;
    } else {
      if (set.task_label != mk.task) set.task_label.clear();
      if (set.gesture_label != mk.gesture) set.gesture_label.clear();
    }
  }
  return set;
}

/// Load epoch marks from an annotation CSV with columns start,end,task,gesture.
inline std::vector<EpochMark> load_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in)
    throw data_error(ErrorCode::EmptyFile, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line))
    throw data_error(ErrorCode::EmptyFile, "'" + path + "' is empty");
  std::vector<std::string> header = detail::split_csv_line(line);
  for (auto& h : header) h = detail::trim(h);
  auto col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw data_error(ErrorCode::MissingColumn,
                       "annotation column '" + name + "' not found in '" + path + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t c_start = col("start"), c_end = col("end");
  const std::size_t c_task = col("task"), c_gesture = col("gesture");

  std::vector<EpochMark> marks;
  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (detail::trim(line).empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(line);
    const std::size_t need = std::max(std::max(c_start, c_end), std::max(c_task, c_gesture));
    if (cells.size() <= need)
      throw data_error(ErrorCode::NonNumericCell,
                       "annotation row " + std::to_string(row_no) + " has too few cells");
    EpochMark mk;
    mk.start = static_cast<std::size_t>(detail::parse_cell(cells[c_start], row_no, c_start));
    mk.end = static_cast<std::size_t>(detail::parse_cell(cells[c_end], row_no, c_end));
    mk.task = detail::trim(cells[c_task]);
    mk.gesture = detail::trim(cells[c_gesture]);
    marks.push_back(std::move(mk));
  }
  return marks;
}

/// Response vector and design matrix for the distributed-lag regression.
/// Row t holds (1, y_{t-1..t-p}, x_{t-1..t-q}) aligned with response y_t;
/// the first usable response index is max(p, q), so there are T - max(p, q)
/// rows of width p + q + 1.
struct DesignData {
  Eigen::VectorXd responses;
  Eigen::MatrixXd design;
};

inline DesignData build_design(const Eigen::VectorXd& y, const Eigen::VectorXd& x,
                               int p, int q) {
  if (y.size() != x.size())
    throw data_error(ErrorCode::DimensionMismatch, "build_design: series length mismatch");
  if (p < 0 || q < 0)
    throw config_error(ErrorCode::BadConfig, "build_design: negative lag order");
  const Eigen::Index T = y.size();
  const int start = std::max(p, q);
  if (T <= start)
    throw data_error(ErrorCode::SeriesTooShort,
                     "build_design: T=" + std::to_string(T) + " too short for lags p=" +
                         std::to_string(p) + ", q=" + std::to_string(q));

  const Eigen::Index rows = T - start;
  const Eigen::Index width = p + q + 1;
  DesignData out;
  out.responses.resize(rows);
  out.design.resize(rows, width);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const Eigen::Index t = start + r;
    out.responses(r) = y(t);
    out.design(r, 0) = 1.0;
    for (int i = 1; i <= p; ++i) out.design(r, i) = y(t - i);
    for (int j = 1; j <= q; ++j) out.design(r, p + j) = x(t - j);
  }
  return out;
}

}  // namespace tar4c
