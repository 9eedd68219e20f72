#include "frvf/modal.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace frvf {

std::pair<double, double> poles_to_modal(Complex pole) {
  const double mag = std::abs(pole);
  if (mag == 0.0) throw PreconditionError("poles_to_modal: zero pole");
  return {mag / kTwoPi, -pole.real() / mag};
}

CVec normalize_shape(const CVec& shape) {
  const double norm = shape.norm();
  if (norm == 0.0) throw PreconditionError("normalize_shape: zero shape vector");
  CVec out = shape / norm;
  Eigen::Index imax = 0;
  shape.cwiseAbs().maxCoeff(&imax);
  const Complex top = out[imax];
  out *= std::abs(top) / top;  // rotate the dominant entry to the real axis
  return out;
}

CVec residues_to_shape(const RationalModel& m, int pole_index) {
  if (pole_index < 0 || pole_index >= m.poles.size())
    throw PreconditionError("residues_to_shape: pole_index out of range");
  if (m.stacking_kind == StackingKind::upper_triangular)
    throw PreconditionError("shape extraction undefined for triangular stacking");
  const CVec column = m.residues.col(pole_index);
  if (m.stacking_kind == StackingKind::superposed)
    return normalize_shape(column);
  // Passthrough rows are (out, in) channels row-major; the virtual-input
  // recombination sums each output's input columns.
  CVec combined = CVec::Zero(m.n_outputs);
  for (int i = 0; i < m.n_outputs; ++i)
    for (int j = 0; j < m.n_inputs; ++j) combined[i] += column[i * m.n_inputs + j];
  return normalize_shape(combined);
}

double mac(const CVec& phi_a, const CVec& phi_b) {
  if (phi_a.size() != phi_b.size())
    throw PreconditionError("mac: shape length mismatch");
  const double na = phi_a.squaredNorm(), nb = phi_b.squaredNorm();
  if (na == 0.0 || nb == 0.0) throw PreconditionError("mac: zero shape vector");
  return std::norm(phi_a.dot(phi_b)) / (na * nb);
}

namespace {

void merge_duplicates(ModalSet& set) {
  std::vector<Mode> merged;
  for (auto& mode : set.modes) {
    bool dup = false;
    for (auto& kept : merged) {
      if (std::abs(kept.f_hz - mode.f_hz) < 1e-9 &&
          mac(kept.shape, mode.shape) > 0.999) {
        kept.source_orders.insert(kept.source_orders.end(),
                                  mode.source_orders.begin(),
                                  mode.source_orders.end());
        dup = true;
        break;
      }
    }
    if (!dup) merged.push_back(std::move(mode));
  }
  set.modes = std::move(merged);
}

}  // namespace

ModalSet model_to_modal(const RationalModel& m) {
  ModalSet set;
  for (int n = 0; n < m.poles.size(); ++n) {
    const Complex a = m.poles.poles[n];
    if (a.imag() == 0.0) {
      ++set.dropped_real_poles;
      continue;
    }
    if (a.imag() < 0.0) continue;  // one mode per conjugate pair
    Mode mode;
    std::tie(mode.f_hz, mode.zeta) = poles_to_modal(a);
    mode.pole = a;
    if (m.stacking_kind == StackingKind::upper_triangular) {
      // No physical shape is recoverable from triangular rows; keep the raw
      // residue column as a consistent comparator for stability flags.
      mode.shape = normalize_shape(m.residues.col(n));
    } else {
      mode.shape = residues_to_shape(m, n);
    }
    set.modes.push_back(std::move(mode));
  }
  std::sort(set.modes.begin(), set.modes.end(),
            [](const Mode& a, const Mode& b) { return a.f_hz < b.f_hz; });
  merge_duplicates(set);
  return set;
}

StabilizationDiagram flag_candidates(
    const std::vector<std::pair<int, ModalSet>>& per_order,
    const StabilizationCriteria& criteria) {
  StabilizationDiagram diag;
  diag.criteria = criteria;
  const ModalSet* prev = nullptr;
  for (const auto& [order, set] : per_order) {
    for (const Mode& mode : set.modes) {
      StabEntry entry;
      entry.order = order;
      entry.mode = mode;
      entry.mode.source_orders = {order};
      if (prev && !prev->modes.empty()) {
        // Nearest previous-order candidate by frequency, ties by higher MAC.
        const Mode* best = nullptr;
        double best_df = std::numeric_limits<double>::infinity();
        for (const Mode& cand : prev->modes) {
          const double df = std::abs(cand.f_hz - mode.f_hz);
          if (df < best_df ||
              (df == best_df && best &&
               mac(cand.shape, mode.shape) > mac(best->shape, mode.shape))) {
            best = &cand;
            best_df = df;
          }
        }
        entry.freq_stable = best_df < criteria.freq_tol_hz;
        entry.damp_stable = std::abs(best->zeta - mode.zeta) < criteria.damp_tol;
        entry.shape_stable = mac(best->shape, mode.shape) > criteria.mac_min;
      }
      diag.entries.push_back(std::move(entry));
    }
    prev = &set;
  }
  return diag;
}

StabilizationDiagram build_stabilization(const StackedFrf& data,
                                         const std::vector<int>& orders,
                                         const FitConfig& cfg,
                                         const StabilizationCriteria& criteria) {
  if (orders.size() < 2)
    throw PreconditionError("build_stabilization: need at least 2 orders");
  if (!std::is_sorted(orders.begin(), orders.end()))
    throw PreconditionError("build_stabilization: orders must be ascending");
  std::vector<std::pair<int, ModalSet>> per_order;
  per_order.reserve(orders.size());
  for (int order : orders) {
    FitConfig c = cfg;
    c.order = order;
    try {
      auto [model, diag] = fit_frf(data, c);
      per_order.emplace_back(order, model_to_modal(model));
    } catch (const NumericError& err) {
      throw NumericError("order " + std::to_string(order) + ": " + err.what());
    }
  }
  return flag_candidates(per_order, criteria);
}

ModalSet select_stable(const StabilizationDiagram& diag, int min_occurrences) {
  if (min_occurrences < 2)
    throw PreconditionError("select_stable: min_occurrences must be >= 2");
  struct Cluster {
    std::vector<const StabEntry*> members;
    double mean_f = 0.0;
  };
  std::vector<Cluster> clusters;
  for (const StabEntry& entry : diag.entries) {
    if (!entry.fully_stable()) continue;
    Cluster* home = nullptr;
    double best_df = std::numeric_limits<double>::infinity();
    for (Cluster& cl : clusters) {
      const double df = std::abs(cl.mean_f - entry.mode.f_hz);
      if (df <= diag.criteria.freq_tol_hz && df < best_df &&
          mac(cl.members.front()->mode.shape, entry.mode.shape) >
              diag.criteria.mac_min) {
        home = &cl;
        best_df = df;
      }
    }
    if (!home) {
      clusters.push_back({});
      home = &clusters.back();
    }
    home->members.push_back(&entry);
    home->mean_f = 0.0;
    for (const StabEntry* m : home->members) home->mean_f += m->mode.f_hz;
    home->mean_f /= static_cast<double>(home->members.size());
  }

  ModalSet set;
  for (Cluster& cl : clusters) {
    if (static_cast<int>(cl.members.size()) < min_occurrences) continue;
    std::sort(cl.members.begin(), cl.members.end(),
              [](const StabEntry* a, const StabEntry* b) {
                return a->mode.f_hz < b->mode.f_hz;
              });
    const StabEntry* median = cl.members[(cl.members.size() - 1) / 2];
    Mode mode = median->mode;
    mode.source_orders.clear();
    for (const StabEntry* m : cl.members) mode.source_orders.push_back(m->order);
    std::sort(mode.source_orders.begin(), mode.source_orders.end());
    set.modes.push_back(std::move(mode));
  }
  std::sort(set.modes.begin(), set.modes.end(),
            [](const Mode& a, const Mode& b) { return a.f_hz < b.f_hz; });
  merge_duplicates(set);
  return set;
}

Vec anpsd(const Mat& psd) {
  if (psd.rows() < 1 || psd.cols() < 1)
    throw PreconditionError("anpsd: empty PSD matrix");
  if ((psd.array() < 0.0).any())
    throw PreconditionError("anpsd: PSD values must be >= 0");
  Vec avg = Vec::Zero(psd.cols());
  for (Eigen::Index c = 0; c < psd.rows(); ++c) {
    const double total = psd.row(c).sum();
    if (total == 0.0)
      throw PreconditionError("anpsd: channel " + std::to_string(c + 1) +
                              " is identically zero");
    avg += (psd.row(c) / total).transpose();
  }
  return avg / static_cast<double>(psd.rows());
}

}  // namespace frvf
