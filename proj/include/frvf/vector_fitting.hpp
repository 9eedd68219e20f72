#pragma once

#include <utility>
#include <vector>

#include "frvf/frf_tensor.hpp"
#include "frvf/types.hpp"

namespace frvf {

/// A conjugate-closed pole set in rad/s. Complex poles appear with their
/// conjugate partner; real poles may appear singly. Canonical order: sorted
/// by |Im| then Re, the positive-imaginary member directly before its
/// conjugate.
struct PoleSet {
  CVec poles;

  int size() const { return static_cast<int>(poles.size()); }

  /// Normalises ordering and re-symmetrises near-conjugate pairs. Throws
  /// PreconditionError if the set is not closed under conjugation.
  static PoleSet canonical(const CVec& raw);
};

enum class Weighting { none, inverse_sqrt_magnitude };

struct FitConfig {
  int order = 2;       // number of poles, pair members counted individually
  int iterations = 5;  // pole-relocation passes
  Weighting weighting = Weighting::inverse_sqrt_magnitude;
  bool include_d = true;
  bool include_e = true;
  bool relax = true;
  double imag_ratio = 0.01;  // initial-pole real part = -imag_ratio * Im

  void validate() const;
};

/// Sigma-function estimate from one relocation step: residues of the current
/// pole basis plus the relaxed free constant.
struct SigmaEstimate {
  CVec sigma_residues;
  double sigma_const = 1.0;
};

/// Shared-pole rational model, one row per stacked channel:
/// H_r(s) = sum_n c_rn / (s - a_n) + d_r + s e_r.
struct RationalModel {
  PoleSet poles;
  CMat residues;  // [n_rows, order]
  CVec d_terms;   // [n_rows]
  CVec e_terms;   // [n_rows]
  Eigen::VectorXi row_to_output;
  StackingKind stacking_kind = StackingKind::passthrough;
  int n_outputs = 0;
  int n_inputs = 0;

  int n_rows() const { return static_cast<int>(residues.rows()); }
};

struct IterationDiag {
  int iteration = 0;
  double max_pole_move_rel = 0.0;
  double sigma_const = 0.0;
  double condition = 0.0;
  bool d_guard_active = false;
};

struct FitDiagnostics {
  std::vector<IterationDiag> iterations;
  Vec per_row_rmse;
  Vec per_row_condition;
  int order = 0;
  int n_rows = 0;
  int n_freq = 0;
};

/// Conjugate pairs with imaginary parts linearly spaced over
/// [2 pi f_min, 2 pi f_max] (a single pair goes to the band midpoint) and
/// real parts -imag_ratio * Im; odd orders append one real pole at
/// -2 pi f_max.
PoleSet initial_poles(double f_min_hz, double f_max_hz, int order,
                      double imag_ratio = 0.01);

/// Weak inverse-magnitude weights 1/sqrt(|f|), with |f| floored at
/// 1e-12 * max|f| so isolated zeros stay finite. Throws on an all-zero row.
Vec compute_weights(const CVec& row);

/// Reflects unstable poles into the left half-plane; poles exactly on the
/// imaginary axis are nudged to Re = -1e-6 |a|.
PoleSet enforce_stability(const PoleSet& poles);

struct RelocationResult {
  PoleSet poles;
  SigmaEstimate sigma;
  double condition = 0.0;
  bool d_guard_active = false;
};

/// One fast/relaxed VF step: per-row weighted blocks in the real conjugate
/// pair basis, QR elimination of the row unknowns, one reduced solve for the
/// sigma unknowns, and pole relocation to the zeros of sigma.
RelocationResult pole_relocation_step(const StackedFrf& data,
                                      const PoleSet& poles,
                                      const FitConfig& cfg);

/// Final linear stage: per-row weighted least squares for residues, d and e
/// with the poles held fixed. Residues of conjugate poles are conjugate by
/// construction of the basis.
RationalModel residue_fit(const StackedFrf& data, const PoleSet& poles,
                          const FitConfig& cfg);

/// Full pipeline: initial poles, cfg.iterations relocation/stabilisation
/// passes, then the residue fit.
std::pair<RationalModel, FitDiagnostics> fit_frf(const StackedFrf& data,
                                                 const FitConfig& cfg);

/// Evaluates the model at s = 2 pi i f.
CMat evaluate_model(const RationalModel& m, const Vec& freq_hz);

/// Per-row sqrt(mean_k |H_fit - H_data|^2).
Vec model_rmse(const RationalModel& m, const StackedFrf& data);

}  // namespace frvf
