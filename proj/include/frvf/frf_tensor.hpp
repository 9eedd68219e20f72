#pragma once

#include <vector>

#include "frvf/types.hpp"

namespace frvf {

enum class UnitKind { receptance, mobility, inertance };

enum class StackingKind { superposed, upper_triangular, passthrough };

/// Three-dimensional complex FRF data H_ij(s_k) on a common frequency grid.
///
/// Channels are stored as rows of a dense complex matrix, row-major over
/// (output, input): channel (i, j) lives in row i * n_in + j. The grid is
/// strictly increasing and strictly positive.
struct FrfTensor {
  int n_out = 0;
  int n_in = 0;
  CMat values;   // [n_out * n_in, n_freq]
  Vec freq_hz;   // [n_freq], strictly increasing, > 0
  UnitKind unit_kind = UnitKind::receptance;

  int n_freq() const { return static_cast<int>(freq_hz.size()); }

  /// Row view of channel (out, in), both 0-based.
  auto channel(int out, int in) const { return values.row(out * n_in + in); }
  auto channel(int out, int in) { return values.row(out * n_in + in); }

  /// Throws PreconditionError if any structural invariant is violated.
  void validate() const;
};

/// Two-dimensional fitting target: one complex FRF per row, all rows sharing
/// the source tensor's frequency grid. Produced by the stacking transforms.
struct StackedFrf {
  CMat rows;                    // [n_rows, n_freq]
  Vec freq_hz;                  // [n_freq]
  Eigen::VectorXi row_to_output;  // physical output channel of each row
  StackingKind stacking_kind = StackingKind::passthrough;
  int n_outputs = 0;  // of the source tensor
  int n_inputs = 0;   // of the source tensor

  int n_rows() const { return static_cast<int>(rows.rows()); }
  int n_freq() const { return static_cast<int>(rows.cols()); }
};

/// Restricts the tensor to samples with f_min <= f <= f_max (inclusive).
/// Throws PreconditionError if fewer than two samples remain.
FrfTensor truncate_band(const FrfTensor& t, double f_min_hz, double f_max_hz);

/// Element-wise complex arithmetic mean over a repetition list. All tensors
/// must share dimensions, grid, and unit kind.
FrfTensor average_repetitions(const std::vector<FrfTensor>& reps);

/// Input-channel superposition: row i is the frequency-wise sum over all
/// inputs j of H_ij. One row per output; poles are preserved because transfer
/// functions are invariant under linear combinations.
StackedFrf stack_superposed(const FrfTensor& t);

/// Upper-triangular stacking of a square tensor: rows (col..N_c, col) for
/// col = 1..N_c, giving N_c (N_c + 1) / 2 rows. Requires n_out == n_in.
StackedFrf stack_upper_triangular(const FrfTensor& t);

/// All n_out * n_in channels as rows, row-major over (output, input). Used
/// when per-channel residues are needed for full residue-matrix mode shapes.
StackedFrf flatten_all(const FrfTensor& t);

}  // namespace frvf
