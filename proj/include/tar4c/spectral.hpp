#pragma once

#include <Eigen/Dense>
#include <unsupported/Eigen/FFT>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>
#include <string>
#include <vector>

#include "tar4c/errors.hpp"
#include "tar4c/ols.hpp"

namespace tar4c {

/// Smoothed cross-spectral density at positive Fourier frequencies.
struct SpectralDensity {
  Eigen::VectorXd freqs;                  // 2*pi*k/T for k = 1..floor(T/2)
  std::vector<Eigen::MatrixXcd> matrices; // one Hermitian matrix per frequency
  Eigen::Index t_len = 0;                 // sample length behind the estimate

  Eigen::Index n_channels() const {
    return matrices.empty() ? 0 : matrices.front().rows();
  }
};

/// Dynamic principal component score series and the filter that produced them.
struct DpcaScores {
  Eigen::MatrixXd scores;              // T x c
  Eigen::VectorXd explained_fraction;  // cumulative eigenvalue mass per component
  int filter_len = 0;                  // one-sided truncation L
  std::vector<Eigen::MatrixXd> taps;   // 2L+1 real (n_ch x c) matrices, index u+L
};

inline int default_span(Eigen::Index T) {
  return std::max(1, static_cast<int>(std::floor(std::sqrt(static_cast<double>(T)))));
}

/// Daniell-smoothed cross-periodogram of mean-centered channels. The kernel is
/// the modified Daniell window of half-width span, truncated and renormalized
/// at the frequency boundaries.
inline SpectralDensity estimate_spectrum(const Eigen::MatrixXd& z, int span) {
  const Eigen::Index T = z.rows();
  const Eigen::Index nch = z.cols();
  if (span < 1) throw config_error(ErrorCode::BadConfig, "estimate_spectrum: span < 1");
  if (nch < 1) throw data_error(ErrorCode::TooShort, "estimate_spectrum: no channels");
  if (T < 4 * static_cast<Eigen::Index>(span))
    throw data_error(ErrorCode::TooShort,
                     "estimate_spectrum: need T >= 4*span, got T=" + std::to_string(T));

  Eigen::MatrixXd c = z;
  for (Eigen::Index j = 0; j < nch; ++j) {
    c.col(j).array() -= c.col(j).mean();
    if (c.col(j).squaredNorm() == 0.0)
      throw data_error(ErrorCode::ZeroVarianceChannel,
                       "estimate_spectrum: channel " + std::to_string(j) + " is constant");
  }

  const Eigen::Index K = T / 2;
  Eigen::MatrixXcd d(K, nch);  // DFT at k = 1..K per channel
  {
    Eigen::FFT<double> fft;
    std::vector<double> in(static_cast<std::size_t>(T));
    std::vector<std::complex<double>> out(static_cast<std::size_t>(T));
    for (Eigen::Index j = 0; j < nch; ++j) {
      for (Eigen::Index t = 0; t < T; ++t) in[static_cast<std::size_t>(t)] = c(t, j);
      fft.fwd(out, in);
      for (Eigen::Index k = 1; k <= K; ++k) d(k - 1, j) = out[static_cast<std::size_t>(k)];
    }
  }

  const double norm = 1.0 / (2.0 * std::numbers::pi * static_cast<double>(T));
  std::vector<Eigen::MatrixXcd> raw(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    const Eigen::VectorXcd dk = d.row(k).transpose();
    raw[static_cast<std::size_t>(k)] = norm * (dk * dk.adjoint());
  }

  // Modified Daniell weights: flat interior, half weight at the ends.
  const int h = span;
  std::vector<double> w(static_cast<std::size_t>(2 * h + 1), 1.0 / (2.0 * h));
  w.front() = 1.0 / (4.0 * h);
  w.back() = 1.0 / (4.0 * h);

  SpectralDensity sd;
  sd.t_len = T;
  sd.freqs.resize(K);
  sd.matrices.resize(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    sd.freqs(k) = 2.0 * std::numbers::pi * static_cast<double>(k + 1) /
                  static_cast<double>(T);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(nch, nch);
    double wsum = 0.0;
    for (int j = -h; j <= h; ++j) {
      const Eigen::Index kk = k + j;
      if (kk < 0 || kk >= K) continue;
      const double wj = w[static_cast<std::size_t>(j + h)];
      acc += wj * raw[static_cast<std::size_t>(kk)];
      wsum += wj;
    }
    acc /= wsum;
    sd.matrices[static_cast<std::size_t>(k)] = 0.5 * (acc + acc.adjoint().eval());
  }
  return sd;
}

namespace detail {

/// Rotate an eigenvector so its largest-magnitude entry is real positive;
/// removes the arbitrary complex phase for reproducible filters.
inline void fix_phase(Eigen::VectorXcd& v) {
  Eigen::Index best = 0;
  double mag = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double a = std::abs(v(i));
    if (a > mag) {
      mag = a;
      best = i;
    }
  }
  if (mag == 0.0) return;
  const std::complex<double> phase = v(best) / mag;
  v /= phase;
}

}  // namespace detail

/// Frequency-domain principal components: per-frequency eigenvectors of the
/// spectral matrices, inverse-transformed into a two-sided filter truncated to
/// lags -L..L, then convolved with the centered channels. The component count
/// is the smallest whose cumulative eigenvalue mass reaches target_var,
/// optionally capped by max_components (0 means no cap).
inline DpcaScores dpca_scores(const SpectralDensity& sd, const Eigen::MatrixXd& z,
                              double target_var, int L, int max_components = 0) {
  if (!(target_var > 0.0 && target_var <= 1.0))
    throw config_error(ErrorCode::BadConfig, "dpca_scores: target_var outside (0,1]");
  if (L < 1) throw config_error(ErrorCode::BadConfig, "dpca_scores: L < 1");
  const Eigen::Index K = static_cast<Eigen::Index>(sd.matrices.size());
  const Eigen::Index nch = sd.n_channels();
  if (K == 0 || nch == 0)
    throw data_error(ErrorCode::TooShort, "dpca_scores: empty spectral density");
  if (z.cols() != nch)
    throw data_error(ErrorCode::DimensionMismatch, "dpca_scores: channel count mismatch");

  std::vector<Eigen::VectorXd> evals(static_cast<std::size_t>(K));
  std::vector<Eigen::MatrixXcd> evecs(static_cast<std::size_t>(K));
  Eigen::VectorXd mass = Eigen::VectorXd::Zero(nch);
  for (Eigen::Index k = 0; k < K; ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sd.matrices[static_cast<std::size_t>(k)]);
    if (es.info() != Eigen::Success)
      throw numeric_error(ErrorCode::EigenFailure,
                          "dpca_scores: eigendecomposition failed at frequency index " +
                              std::to_string(k));
    // Eigen sorts ascending; store descending.
    Eigen::VectorXd ev(nch);
    Eigen::MatrixXcd V(nch, nch);
    for (Eigen::Index j = 0; j < nch; ++j) {
      ev(j) = std::max(0.0, es.eigenvalues()(nch - 1 - j));
      V.col(j) = es.eigenvectors().col(nch - 1 - j);
    }
    evals[static_cast<std::size_t>(k)] = ev;
    evecs[static_cast<std::size_t>(k)] = V;
    mass += ev;
  }
  const double total = mass.sum();
  if (!(total > 0.0))
    throw numeric_error(ErrorCode::EigenFailure, "dpca_scores: zero spectral mass");

  Eigen::Index c = nch;
  double cum = 0.0;
  for (Eigen::Index j = 0; j < nch; ++j) {
    cum += mass(j);
    if (cum >= target_var * total) {
      c = j + 1;
      break;
    }
  }
  if (max_components > 0) c = std::min<Eigen::Index>(c, max_components);
  c = std::max<Eigen::Index>(c, 1);

  DpcaScores out;
  out.filter_len = L;
  out.explained_fraction.resize(c);
  double acc = 0.0;
  for (Eigen::Index j = 0; j < c; ++j) {
    acc += mass(j);
    out.explained_fraction(j) = acc / total;
  }

  // Inverse transform of the per-frequency eigenvectors. Negative frequencies
  // enter through conjugate symmetry; the Nyquist term appears once.
  const Eigen::Index T = sd.t_len;
  const bool has_nyquist = (T % 2 == 0) && (K == T / 2);
  out.taps.assign(static_cast<std::size_t>(2 * L + 1),
                  Eigen::MatrixXd::Zero(nch, c));
  for (Eigen::Index k = 0; k < K; ++k) {
    const double wk = sd.freqs(k);
    const bool nyq = has_nyquist && (k == K - 1);
    for (Eigen::Index j = 0; j < c; ++j) {
      Eigen::VectorXcd phi = evecs[static_cast<std::size_t>(k)].col(j);
      detail::fix_phase(phi);
      for (int u = -L; u <= L; ++u) {
        const std::complex<double> rot(std::cos(wk * u), std::sin(wk * u));
        const Eigen::VectorXd term =
            nyq ? (phi * rot).real().eval() : (2.0 * (phi * rot).real()).eval();
        out.taps[static_cast<std::size_t>(u + L)].col(j) +=
            term / static_cast<double>(T);
      }
    }
  }

  // Score series by convolution with truncated taps at the edges.
  Eigen::MatrixXd cz = z;
  for (Eigen::Index jj = 0; jj < nch; ++jj) cz.col(jj).array() -= cz.col(jj).mean();
  const Eigen::Index n = cz.rows();
  out.scores = Eigen::MatrixXd::Zero(n, c);
  for (int u = -L; u <= L; ++u) {
    const Eigen::MatrixXd& B = out.taps[static_cast<std::size_t>(u + L)];
    const Eigen::Index lo = std::max<Eigen::Index>(0, u);
    const Eigen::Index hi = std::min<Eigen::Index>(n, n + u);
    if (lo >= hi) continue;
    out.scores.middleRows(lo, hi - lo).noalias() +=
        cz.middleRows(lo - u, hi - lo) * B;
  }
  return out;
}

/// Residual of y_star regressed on an intercept plus the score series at lags
/// -reg_lags..+reg_lags (out-of-range lags contribute zeros). Dependent
/// columns drop inside the pivoted solve; only a fully degenerate design is an
/// error.
inline Eigen::VectorXd neutralize(const Eigen::VectorXd& y_star, const DpcaScores& scores,
                                  int reg_lags) {
  if (reg_lags < 0)
    throw config_error(ErrorCode::BadConfig, "neutralize: reg_lags < 0");
  const Eigen::Index n = y_star.size();
  if (scores.scores.rows() != n)
    throw data_error(ErrorCode::DimensionMismatch,
                     "neutralize: series length != score length");
  const Eigen::Index c = scores.scores.cols();
  const int win = 2 * reg_lags + 1;
  Eigen::MatrixXd X(n, 1 + c * win);
  X.col(0).setOnes();
  Eigen::Index col = 1;
  for (int lag = -reg_lags; lag <= reg_lags; ++lag) {
    for (Eigen::Index j = 0; j < c; ++j, ++col) {
      for (Eigen::Index t = 0; t < n; ++t) {
        const Eigen::Index s = t - lag;
        X(t, col) = (s >= 0 && s < n) ? scores.scores(s, j) : 0.0;
      }
    }
  }
  OlsFit fit;
  try {
    fit = ols_fit(X, y_star);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::AllColumnsDropped)
      throw numeric_error(ErrorCode::RankDeficientDesign,
                          "neutralize: every regressor dropped");
    throw;
  }
  return fit.residuals;
}

/// Debug dump: one CSV row per frequency with the spectral eigenvalues.
inline void write_spectrum_eigenvalues(const SpectralDensity& sd, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw data_error(ErrorCode::EmptyFile, "cannot open " + path);
  const Eigen::Index nch = sd.n_channels();
  out << "freq";
  for (Eigen::Index j = 0; j < nch; ++j) out << ",lambda" << (j + 1);
  out << "\n";
  for (std::size_t k = 0; k < sd.matrices.size(); ++k) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(sd.matrices[k]);
    out << sd.freqs(static_cast<Eigen::Index>(k));
    for (Eigen::Index j = 0; j < nch; ++j)
      out << "," << es.eigenvalues()(nch - 1 - j);
    out << "\n";
  }
}

}  // namespace tar4c
