#include "frvf/vector_fitting.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace frvf {

namespace {

struct HalfPole {
  Complex pole;  // Im >= 0 representative
  bool is_pair;
};

// Canonical half spectrum: one entry per conjugate pair (Im > 0 member) or
// real pole, sorted by (Im, Re).
std::vector<HalfPole> half_spectrum(const PoleSet& set) {
  std::vector<HalfPole> out;
  const CVec& p = set.poles;
  std::vector<bool> used(p.size(), false);
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (used[i]) continue;
    if (p[i].imag() == 0.0) {
      out.push_back({p[i], false});
      used[i] = true;
      continue;
    }
    const Complex want = std::conj(p[i]);
    const double tol = 1e-8 * std::max(1.0, std::abs(p[i]));
    Eigen::Index partner = -1;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
      if (j == i || used[j]) continue;
      if (std::abs(p[j] - want) <= tol) {
        partner = j;
        break;
      }
    }
    if (partner < 0)
      throw PreconditionError("PoleSet: pole set is not closed under conjugation");
    const Complex rep(0.5 * (p[i].real() + p[partner].real()),
                      std::abs(0.5 * (p[i].imag() - p[partner].imag())));
    out.push_back({rep, true});
    used[i] = used[partner] = true;
  }
  std::sort(out.begin(), out.end(), [](const HalfPole& a, const HalfPole& b) {
    if (a.pole.imag() != b.pole.imag()) return a.pole.imag() < b.pole.imag();
    return a.pole.real() < b.pole.real();
  });
  return out;
}

PoleSet expand(const std::vector<HalfPole>& hp) {
  int n = 0;
  for (const auto& e : hp) n += e.is_pair ? 2 : 1;
  PoleSet set;
  set.poles.resize(n);
  int k = 0;
  for (const auto& e : hp) {
    set.poles[k++] = e.pole;
    if (e.is_pair) set.poles[k++] = std::conj(e.pole);
  }
  return set;
}

// Real conjugate-pair basis evaluated on the grid: a pair contributes the
// columns (phi + phi*) and i (phi - phi*), a real pole contributes phi, so
// every unknown multiplying a column is real.
CMat pair_basis(const std::vector<HalfPole>& hp, const CVec& s) {
  int n_cols = 0;
  for (const auto& e : hp) n_cols += e.is_pair ? 2 : 1;
  CMat basis(s.size(), n_cols);
  int c = 0;
  for (const auto& e : hp) {
    if (e.is_pair) {
      for (Eigen::Index k = 0; k < s.size(); ++k) {
        const Complex phi = 1.0 / (s[k] - e.pole);
        const Complex phis = 1.0 / (s[k] - std::conj(e.pole));
        basis(k, c) = phi + phis;
        basis(k, c + 1) = Complex(0, 1) * (phi - phis);
      }
      c += 2;
    } else {
      for (Eigen::Index k = 0; k < s.size(); ++k)
        basis(k, c) = 1.0 / (s[k] - e.pole);
      c += 1;
    }
  }
  return basis;
}

// Complex residues for the canonical pole order from real pair-basis
// coefficients: a pair with coefficients (x1, x2) has residue x1 + i x2 at
// the Im > 0 member and the conjugate at its partner.
CVec coeffs_to_residues(const std::vector<HalfPole>& hp, const Vec& x) {
  int n = 0;
  for (const auto& e : hp) n += e.is_pair ? 2 : 1;
  CVec res(n);
  int c = 0, k = 0;
  for (const auto& e : hp) {
    if (e.is_pair) {
      const Complex r(x[c], x[c + 1]);
      res[k++] = r;
      res[k++] = std::conj(r);
      c += 2;
    } else {
      res[k++] = Complex(x[c], 0.0);
      c += 1;
    }
  }
  return res;
}

CVec s_grid(const Vec& freq_hz) {
  CVec s(freq_hz.size());
  for (Eigen::Index k = 0; k < freq_hz.size(); ++k)
    s[k] = Complex(0.0, kTwoPi * freq_hz[k]);
  return s;
}

Mat row_weights(const StackedFrf& data, const FitConfig& cfg) {
  Mat w(data.n_rows(), data.n_freq());
  if (cfg.weighting == Weighting::none) {
    w.setOnes();
  } else {
    for (int r = 0; r < data.n_rows(); ++r)
      w.row(r) = compute_weights(data.rows.row(r));
  }
  return w;
}

// Stacks Re and Im of (w .* block) as separate real rows.
Mat realify(const CMat& block, const Vec& w) {
  const Eigen::Index n = block.rows();
  Mat out(2 * n, block.cols());
  out.topRows(n) = w.asDiagonal() * block.real();
  out.bottomRows(n) = w.asDiagonal() * block.imag();
  return out;
}

}  // namespace

PoleSet PoleSet::canonical(const CVec& raw) {
  PoleSet tmp;
  tmp.poles = raw;
  return expand(half_spectrum(tmp));
}

void FitConfig::validate() const {
  if (order < 2) throw PreconditionError("FitConfig: order must be >= 2");
  if (iterations < 1) throw PreconditionError("FitConfig: iterations must be >= 1");
  if (imag_ratio <= 0) throw PreconditionError("FitConfig: imag_ratio must be > 0");
}

PoleSet initial_poles(double f_min_hz, double f_max_hz, int order,
                      double imag_ratio) {
  if (order < 2) throw PreconditionError("initial_poles: order must be >= 2");
  if (!(f_min_hz < f_max_hz) || f_min_hz <= 0)
    throw PreconditionError("initial_poles: require 0 < f_min < f_max");
  const int n_pairs = order / 2;
  std::vector<HalfPole> hp;
  hp.reserve(n_pairs + 1);
  for (int m = 0; m < n_pairs; ++m) {
    double beta;
    if (n_pairs == 1) {
      beta = kTwoPi * 0.5 * (f_min_hz + f_max_hz);  // midpoint for a lone pair
    } else {
      const double t = static_cast<double>(m) / (n_pairs - 1);
      beta = kTwoPi * (f_min_hz + t * (f_max_hz - f_min_hz));
    }
    hp.push_back({Complex(-imag_ratio * beta, beta), true});
  }
  if (order % 2 != 0) hp.push_back({Complex(-kTwoPi * f_max_hz, 0.0), false});
  return expand(hp);
}

Vec compute_weights(const CVec& row) {
  const Vec mag = row.cwiseAbs();
  const double peak = mag.maxCoeff();
  if (peak == 0.0)
    throw PreconditionError("cannot weight identically-zero channel");
  const double floor = 1e-12 * peak;
  return mag.cwiseMax(floor).cwiseSqrt().cwiseInverse();
}

PoleSet enforce_stability(const PoleSet& poles) {
  auto hp = half_spectrum(poles);
  for (auto& e : hp) {
    const double re = e.pole.real();
    if (re > 0.0) {
      e.pole = Complex(-re, e.pole.imag());
    } else if (re == 0.0) {
      e.pole = Complex(-1e-6 * std::abs(e.pole), e.pole.imag());
    }
  }
  return expand(hp);
}

RelocationResult pole_relocation_step(const StackedFrf& data,
                                      const PoleSet& poles,
                                      const FitConfig& cfg) {
  const int n_s = data.n_freq();
  const int n_rows = data.n_rows();
  if (n_rows < 1 || n_s < 1)
    throw PreconditionError("pole_relocation_step: empty data");

  const auto hp = half_spectrum(poles);
  const int order = poles.size();
  const CVec s = s_grid(data.freq_hz);
  const CMat basis = pair_basis(hp, s);

  const int n_x = order + (cfg.include_d ? 1 : 0) + (cfg.include_e ? 1 : 0);
  const int n_sig = order + (cfg.relax ? 1 : 0);
  const int n_cols = n_x + n_sig + 1;  // trailing RHS column
  if (2 * n_s < n_x + n_sig)
    throw NumericError("pole_relocation_step: fewer equations than unknowns");

  const Mat weights = row_weights(data, cfg);

  CMat block(n_s, n_cols);
  Mat reduced(n_rows * n_sig + (cfg.relax ? 1 : 0), n_sig);
  Vec reduced_rhs(reduced.rows());
  for (int r = 0; r < n_rows; ++r) {
    block.leftCols(order) = basis;
    int c = order;
    if (cfg.include_d) block.col(c++).setOnes();
    if (cfg.include_e) block.col(c++) = s;
    const auto f = data.rows.row(r).transpose();
    block.middleCols(c, order) = (-f).asDiagonal() * basis;
    c += order;
    if (cfg.relax) {
      block.col(c++) = -f;
      block.col(c).setZero();  // relaxed RHS is zero
    } else {
      block.col(c) = f;  // sigma = 1 + sum c phi moves f to the RHS
    }
    const Mat real_block = realify(block, weights.row(r));
    Eigen::HouseholderQR<Mat> qr(real_block);
    const Mat upper = qr.matrixQR()
                          .topLeftCorner(n_cols, n_cols)
                          .triangularView<Eigen::Upper>();
    reduced.middleRows(r * n_sig, n_sig) = upper.block(n_x, n_x, n_sig, n_sig);
    reduced_rhs.segment(r * n_sig, n_sig) = upper.block(n_x, n_x + n_sig, n_sig, 1);
  }

  if (cfg.relax) {
    // Nontriviality row replacing the classical sigma_const = 1:
    // Re(sum_k wbar (sum_n c~_n phi_n(s_k) + d~)) = N_freq.
    const double wbar = weights.mean();
    Vec row(n_sig);
    for (int c = 0; c < order; ++c) row[c] = wbar * basis.col(c).real().sum();
    row[order] = wbar * n_s;
    reduced.bottomRows(1) = row.transpose();
    reduced_rhs[reduced.rows() - 1] = static_cast<double>(n_s);
  }

  // Truncated-SVD solve: surplus poles leave near-null directions in the
  // reduced system, which are harmless once cut at the usual
  // max(m,n)*eps relative threshold.
  Eigen::JacobiSVD<Mat> svd(reduced, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& sv = svd.singularValues();
  const double cond =
      sv[sv.size() - 1] > 0 ? sv[0] / sv[sv.size() - 1]
                            : std::numeric_limits<double>::infinity();
  svd.setThreshold(static_cast<double>(std::max(reduced.rows(), reduced.cols())) *
                   std::numeric_limits<double>::epsilon());
  const Vec x = svd.solve(reduced_rhs);
  if (sv[0] == 0.0 || !x.allFinite())
    throw NumericError("pole_relocation_step: rank-deficient reduced system"
                       " (condition estimate " + std::to_string(cond) + ")");

  double d_tilde = 1.0;
  bool guard = false;
  if (cfg.relax) {
    d_tilde = x[order];
    if (std::abs(d_tilde) < 1e-8) {
      d_tilde = std::copysign(1e-8, d_tilde == 0.0 ? 1.0 : d_tilde);
      guard = true;
    }
  }

  // Real state-space realisation of the pair basis; relocated poles are the
  // zeros of sigma, i.e. the eigenvalues of A - b c~^T / d~.
  Mat a_mat = Mat::Zero(order, order);
  Vec b_vec = Vec::Zero(order);
  Vec c_row = Vec::Zero(order);
  {
    int k = 0, c = 0;
    for (const auto& e : hp) {
      if (e.is_pair) {
        const double al = e.pole.real(), be = e.pole.imag();
        a_mat(k, k) = al;
        a_mat(k, k + 1) = be;
        a_mat(k + 1, k) = -be;
        a_mat(k + 1, k + 1) = al;
        b_vec[k] = 2.0;
        c_row[k] = x[c];
        c_row[k + 1] = x[c + 1];
        k += 2;
        c += 2;
      } else {
        a_mat(k, k) = e.pole.real();
        b_vec[k] = 1.0;
        c_row[k] = x[c];
        k += 1;
        c += 1;
      }
    }
  }
  Eigen::EigenSolver<Mat> eig(a_mat - (b_vec / d_tilde) * c_row.transpose());
  if (eig.info() != Eigen::Success)
    throw NumericError("pole_relocation_step: eigenvalue computation failed");

  RelocationResult result;
  result.poles = PoleSet::canonical(eig.eigenvalues());
  result.sigma.sigma_residues = coeffs_to_residues(hp, x.head(order));
  result.sigma.sigma_const = d_tilde;
  result.condition = cond;
  result.d_guard_active = guard;
  return result;
}

RationalModel residue_fit(const StackedFrf& data, const PoleSet& poles,
                          const FitConfig& cfg) {
  const int n_s = data.n_freq();
  const int n_rows = data.n_rows();
  const auto hp = half_spectrum(poles);
  const int order = poles.size();
  const CVec s = s_grid(data.freq_hz);
  const CMat basis = pair_basis(hp, s);
  const int n_x = order + (cfg.include_d ? 1 : 0) + (cfg.include_e ? 1 : 0);
  const Mat weights = row_weights(data, cfg);

  CMat block(n_s, n_x);
  block.leftCols(order) = basis;
  {
    int c = order;
    if (cfg.include_d) block.col(c++).setOnes();
    if (cfg.include_e) block.col(c) = s;
  }

  RationalModel model;
  model.poles = expand(hp);
  model.residues.resize(n_rows, order);
  model.d_terms = CVec::Zero(n_rows);
  model.e_terms = CVec::Zero(n_rows);
  model.row_to_output = data.row_to_output;
  model.stacking_kind = data.stacking_kind;
  model.n_outputs = data.n_outputs;
  model.n_inputs = data.n_inputs;

  for (int r = 0; r < n_rows; ++r) {
    const Vec w = weights.row(r);
    const Mat lhs = realify(block, w);
    Vec rhs(2 * n_s);
    rhs.head(n_s) = w.asDiagonal() * data.rows.row(r).real().transpose();
    rhs.tail(n_s) = w.asDiagonal() * data.rows.row(r).imag().transpose();
    Eigen::ColPivHouseholderQR<Mat> qr(lhs);
    if (qr.rank() < n_x)
      throw NumericError("residue_fit: rank-deficient system for row " +
                         std::to_string(r));
    const Vec x = qr.solve(rhs);
    model.residues.row(r) = coeffs_to_residues(hp, x.head(order)).transpose();
    int c = order;
    if (cfg.include_d) model.d_terms[r] = x[c++];
    if (cfg.include_e) model.e_terms[r] = x[c];
  }
  return model;
}

namespace {

double max_relative_move(const PoleSet& before, const PoleSet& after) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < after.poles.size(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < before.poles.size(); ++j) {
      const double denom = std::max(std::abs(before.poles[j]), 1e-300);
      best = std::min(best, std::abs(after.poles[i] - before.poles[j]) / denom);
    }
    worst = std::max(worst, best);
  }
  return worst;
}

}  // namespace

std::pair<RationalModel, FitDiagnostics> fit_frf(const StackedFrf& data,
                                                 const FitConfig& cfg) {
  cfg.validate();
  if (data.n_rows() < 1 || data.n_freq() < 2)
    throw PreconditionError("fit_frf: empty fitting target");

  PoleSet poles = initial_poles(data.freq_hz[0], data.freq_hz[data.freq_hz.size() - 1],
                                cfg.order, cfg.imag_ratio);
  FitDiagnostics diag;
  diag.order = cfg.order;
  diag.n_rows = data.n_rows();
  diag.n_freq = data.n_freq();
  for (int it = 0; it < cfg.iterations; ++it) {
    RelocationResult step;
    try {
      step = pole_relocation_step(data, poles, cfg);
    } catch (const NumericError& err) {
      throw NumericError("iteration " + std::to_string(it + 1) + ": " + err.what());
    }
    PoleSet next = enforce_stability(step.poles);
    IterationDiag id;
    id.iteration = it + 1;
    id.max_pole_move_rel = max_relative_move(poles, next);
    id.sigma_const = step.sigma.sigma_const;
    id.condition = step.condition;
    id.d_guard_active = step.d_guard_active;
    diag.iterations.push_back(id);
    poles = std::move(next);
  }
  RationalModel model = residue_fit(data, poles, cfg);

  const auto hp = half_spectrum(model.poles);
  const CMat basis = pair_basis(hp, s_grid(data.freq_hz));
  diag.per_row_condition.resize(data.n_rows());
  {
    // Condition estimate of the (unweighted) residue basis, shared by rows.
    Eigen::ColPivHouseholderQR<Mat> qr(realify(basis, Vec::Ones(data.n_freq())));
    const Vec d = qr.matrixR().diagonal().cwiseAbs();
    const double c = d.minCoeff() > 0 ? d.maxCoeff() / d.minCoeff()
                                      : std::numeric_limits<double>::infinity();
    diag.per_row_condition.setConstant(c);
  }
  diag.per_row_rmse = model_rmse(model, data);
  return {std::move(model), std::move(diag)};
}

CMat evaluate_model(const RationalModel& m, const Vec& freq_hz) {
  const CVec s = s_grid(freq_hz);
  CMat out(m.n_rows(), freq_hz.size());
  for (int r = 0; r < m.n_rows(); ++r) {
    for (Eigen::Index k = 0; k < s.size(); ++k) {
      Complex acc = m.d_terms[r] + m.e_terms[r] * s[k];
      for (Eigen::Index n = 0; n < m.poles.poles.size(); ++n) {
        const Complex den = s[k] - m.poles.poles[n];
        if (den == Complex(0.0, 0.0))
          throw NumericError("evaluate_model: evaluation exactly at a pole");
        acc += m.residues(r, n) / den;
      }
      out(r, k) = acc;
    }
  }
  return out;
}

Vec model_rmse(const RationalModel& m, const StackedFrf& data) {
  if (m.n_rows() != data.n_rows() || data.freq_hz.size() == 0)
    throw PreconditionError("model_rmse: model and data do not match");
  const CMat fit = evaluate_model(m, data.freq_hz);
  return ((fit - data.rows).cwiseAbs2().rowwise().mean()).cwiseSqrt();
}

}  // namespace frvf
