#include "frvf/frf_tensor.hpp"

#include <cmath>
#include <string>

namespace frvf {

void FrfTensor::validate() const {
  if (n_out < 1 || n_in < 1)
    throw PreconditionError("FrfTensor: n_out and n_in must be >= 1");
  if (freq_hz.size() < 2)
    throw PreconditionError("FrfTensor: need at least 2 frequency samples");
  if (values.rows() != static_cast<Eigen::Index>(n_out) * n_in ||
      values.cols() != freq_hz.size())
    throw PreconditionError("FrfTensor: values shape does not match n_out*n_in x n_freq");
  for (Eigen::Index k = 0; k < freq_hz.size(); ++k) {
    if (!std::isfinite(freq_hz[k]) || freq_hz[k] <= 0.0)
      throw PreconditionError("FrfTensor: frequency grid must be finite and > 0");
    if (k > 0 && freq_hz[k] <= freq_hz[k - 1])
      throw PreconditionError("FrfTensor: frequency grid must be strictly increasing");
  }
  if (!values.allFinite())
    throw PreconditionError("FrfTensor: values contain NaN/Inf");
}

FrfTensor truncate_band(const FrfTensor& t, double f_min_hz, double f_max_hz) {
  if (!(f_min_hz < f_max_hz))
    throw PreconditionError("truncate_band: require f_min < f_max");
  Eigen::Index lo = 0;
  while (lo < t.freq_hz.size() && t.freq_hz[lo] < f_min_hz) ++lo;
  Eigen::Index hi = t.freq_hz.size();
  while (hi > lo && t.freq_hz[hi - 1] > f_max_hz) --hi;
  const Eigen::Index n = hi - lo;
  if (n < 2)
    throw PreconditionError("truncate_band: no samples in [" +
                            std::to_string(f_min_hz) + ", " +
                            std::to_string(f_max_hz) + "]");
  FrfTensor out;
  out.n_out = t.n_out;
  out.n_in = t.n_in;
  out.unit_kind = t.unit_kind;
  out.freq_hz = t.freq_hz.segment(lo, n);
  out.values = t.values.middleCols(lo, n);
  return out;
}

FrfTensor average_repetitions(const std::vector<FrfTensor>& reps) {
  if (reps.empty())
    throw PreconditionError("average_repetitions: empty repetition list");
  const FrfTensor& first = reps.front();
  FrfTensor out = first;
  for (size_t r = 1; r < reps.size(); ++r) {
    const FrfTensor& t = reps[r];
    if (t.n_out != first.n_out || t.n_in != first.n_in ||
        t.freq_hz.size() != first.freq_hz.size() ||
        t.unit_kind != first.unit_kind)
      throw PreconditionError("average_repetitions: repetition " +
                              std::to_string(r) + " has mismatched shape or unit");
    if ((t.freq_hz - first.freq_hz).cwiseAbs().maxCoeff() != 0.0)
      throw PreconditionError("average_repetitions: repetition " +
                              std::to_string(r) + " has a different frequency grid");
    out.values += t.values;
  }
  out.values /= static_cast<double>(reps.size());
  return out;
}

namespace {

StackedFrf make_stacked(const FrfTensor& t, StackingKind kind, int n_rows) {
  StackedFrf s;
  s.freq_hz = t.freq_hz;
  s.stacking_kind = kind;
  s.n_outputs = t.n_out;
  s.n_inputs = t.n_in;
  s.rows.resize(n_rows, t.freq_hz.size());
  s.row_to_output.resize(n_rows);
  return s;
}

}  // namespace

StackedFrf stack_superposed(const FrfTensor& t) {
  StackedFrf s = make_stacked(t, StackingKind::superposed, t.n_out);
  for (int i = 0; i < t.n_out; ++i) {
    s.rows.row(i).setZero();
    for (int j = 0; j < t.n_in; ++j) s.rows.row(i) += t.channel(i, j);
    s.row_to_output[i] = i;
  }
  return s;
}

StackedFrf stack_upper_triangular(const FrfTensor& t) {
  if (t.n_out != t.n_in)
    throw PreconditionError("upper-triangular stacking requires N_out = N_in");
  const int nc = t.n_out;
  StackedFrf s = make_stacked(t, StackingKind::upper_triangular, nc * (nc + 1) / 2);
  int tell = 0;
  for (int col = 0; col < nc; ++col) {
    for (int row = col; row < nc; ++row) {
      s.rows.row(tell) = t.channel(row, col);
      s.row_to_output[tell] = row;
      ++tell;
    }
  }
  return s;
}

StackedFrf flatten_all(const FrfTensor& t) {
  StackedFrf s = make_stacked(t, StackingKind::passthrough, t.n_out * t.n_in);
  s.rows = t.values;
  for (int i = 0; i < t.n_out; ++i)
    for (int j = 0; j < t.n_in; ++j) s.row_to_output[i * t.n_in + j] = i;
  return s;
}

}  // namespace frvf
