#pragma once

#include <utility>
#include <vector>

#include "frvf/types.hpp"
#include "frvf/vector_fitting.hpp"

namespace frvf {

/// One identified vibration mode. The shape has unit Euclidean norm with its
/// largest-magnitude component rotated onto the positive real axis.
struct Mode {
  double f_hz = 0.0;
  double zeta = 0.0;
  CVec shape;
  Complex pole;  // rad/s
  std::vector<int> source_orders;
};

struct ModalSet {
  std::vector<Mode> modes;        // ascending f_hz, duplicates merged
  int dropped_real_poles = 0;     // provenance: real poles carry no mode

  int size() const { return static_cast<int>(modes.size()); }
};

/// (f_n, zeta_n) from a pole: f = |a| / 2 pi, zeta = -Re(a) / |a|.
std::pair<double, double> poles_to_modal(Complex pole);

/// Unit-norm, phase-rotated copy of a shape vector.
CVec normalize_shape(const CVec& shape);

/// Mode shape from the residue column of one conjugate pair. For superposed
/// stacking the rows are the outputs; for passthrough stacking residues are
/// recombined by summing each output's input columns. Undefined for
/// upper-triangular stacking.
CVec residues_to_shape(const RationalModel& m, int pole_index);

/// Modal assurance criterion |a^H b|^2 / ((a^H a)(b^H b)) in [0, 1].
double mac(const CVec& phi_a, const CVec& phi_b);

/// One mode per conjugate pair with Im > 0; real poles are dropped and
/// counted in the provenance field.
ModalSet model_to_modal(const RationalModel& m);

struct StabilizationCriteria {
  double freq_tol_hz = 1.0;  // |df| below this between consecutive orders
  double damp_tol = 0.05;    // |dzeta| below this
  double mac_min = 0.95;     // MAC above this
};

struct StabEntry {
  int order = 0;
  Mode mode;
  bool freq_stable = false;
  bool damp_stable = false;
  bool shape_stable = false;

  bool fully_stable() const { return freq_stable && damp_stable && shape_stable; }
};

struct StabilizationDiagram {
  std::vector<StabEntry> entries;  // grouped by ascending order
  StabilizationCriteria criteria;
};

/// Flags each candidate against the nearest-frequency candidate of the
/// previous order (ties broken by higher MAC). Entries of the lowest order
/// carry no flags. Exposed separately so synthetic diagrams can be built in
/// tests.
StabilizationDiagram flag_candidates(
    const std::vector<std::pair<int, ModalSet>>& per_order,
    const StabilizationCriteria& criteria = {});

/// Fits every order in ascending `orders` (cfg.order is overridden), converts
/// each model to modal candidates, and flags stability across orders.
StabilizationDiagram build_stabilization(const StackedFrf& data,
                                         const std::vector<int>& orders,
                                         const FitConfig& cfg,
                                         const StabilizationCriteria& criteria = {});

/// Clusters fully-stable entries across orders (1 Hz radius, MAC > 0.95 to
/// the cluster seed), keeps clusters seen at >= min_occurrences orders, and
/// reports the median-frequency member of each cluster.
ModalSet select_stable(const StabilizationDiagram& diag, int min_occurrences = 3);

/// Average normalised PSD: each channel scaled to unit sum over frequency,
/// then averaged across channels.
Vec anpsd(const Mat& psd);

}  // namespace frvf
