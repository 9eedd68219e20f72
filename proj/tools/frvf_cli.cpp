// Command-line front end: simulate the built-in beam oracle, identify modal
// parameters from FRF files, run stabilization and noise sweeps, compare
// modal sets, and emit plot-ready CSV/JSON.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "frvf/beam.hpp"
#include "frvf/frf_tensor.hpp"
#include "frvf/io.hpp"
#include "frvf/modal.hpp"
#include "frvf/types.hpp"
#include "frvf/vector_fitting.hpp"
#include "frvf/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace frvf;

namespace {

bool g_quiet = false;

void note(const std::string& msg) {
  if (!g_quiet) std::cerr << msg << "\n";
}

std::uint64_t fnv1a64_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

struct Manifest {
  std::string command;
  json config = json::object();
  std::vector<fs::path> inputs;
  std::uint64_t seed = 0;
  std::vector<std::string> outputs;
};

fs::path prepare_out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw IoError("cannot create output directory: " + dir);
  return p;
}

void write_manifest(const fs::path& dir, const Manifest& m) {
  json j;
  j["command"] = m.command;
  j["tool_version"] = kVersion;
  j["config"] = m.config;
  j["seed"] = m.seed;
  json ins = json::array();
  for (const auto& p : m.inputs) {
    char digest[20];
    std::snprintf(digest, sizeof(digest), "%016llx",
                  static_cast<unsigned long long>(fnv1a64_file(p)));
    ins.push_back({{"path", p.string()}, {"fnv1a64", digest}});
  }
  j["inputs"] = ins;
  j["outputs"] = m.outputs;
  std::ofstream out(dir / "manifest.json");
  if (!out) throw IoError("cannot write manifest in " + dir.string());
  out << j.dump(2) << "\n";
}

StackedFrf apply_stacking(const FrfTensor& t, const std::string& kind) {
  if (kind == "superposed") return stack_superposed(t);
  if (kind == "triangular") return stack_upper_triangular(t);
  if (kind == "flat") return flatten_all(t);
  throw PreconditionError("unknown stacking '" + kind + "'");
}

FrfTensor band_limited(const FrfTensor& t, std::optional<double> fmin,
                       std::optional<double> fmax) {
  if (!fmin && !fmax) return t;
  const double lo = fmin.value_or(t.freq_hz[0]);
  const double hi = fmax.value_or(t.freq_hz[t.freq_hz.size() - 1]);
  return truncate_band(t, lo, hi);
}

FrfTensor decimate_grid(const FrfTensor& t, int factor) {
  if (factor <= 1) return t;
  const int n = (t.n_freq() + factor - 1) / factor;
  if (n < 2) throw PreconditionError("decimation leaves fewer than 2 samples");
  FrfTensor out;
  out.n_out = t.n_out;
  out.n_in = t.n_in;
  out.unit_kind = t.unit_kind;
  out.freq_hz.resize(n);
  out.values.resize(t.values.rows(), n);
  for (int k = 0; k < n; ++k) {
    out.freq_hz[k] = t.freq_hz[k * factor];
    out.values.col(k) = t.values.col(k * factor);
  }
  return out;
}

/// Reference modes of the assembled beam: eigensolution below Nyquist with
/// translational shape entries and the uniform damping ratio.
ModalSet eigen_reference(const StructuralModel& model, const BeamConfig& cfg) {
  const EigenSolution eig = eigen_modes(model);
  ModalSet set;
  for (int n = 0; n < model.n_dof(); ++n) {
    const double f = eig.omega[n] / kTwoPi;
    if (f >= cfg.fs_hz / 2.0) break;
    Mode mode;
    mode.f_hz = f;
    mode.zeta = cfg.zeta_all;
    CVec shape(model.output_dofs.size());
    for (size_t i = 0; i < model.output_dofs.size(); ++i)
      shape[i] = eig.phi(model.output_dofs[i], n);
    mode.shape = normalize_shape(shape);
    const double wn = eig.omega[n];
    mode.pole = Complex(-cfg.zeta_all * wn,
                        wn * std::sqrt(1.0 - cfg.zeta_all * cfg.zeta_all));
    set.modes.push_back(std::move(mode));
  }
  return set;
}

/// FFT-estimated tensor from one single-input simulation per excitation DoF,
/// optionally corrupting inputs and outputs with AWGN before estimation.
FrfTensor estimated_tensor(const StructuralModel& model, const BeamConfig& cfg,
                           double noise_pct, std::uint64_t seed) {
  FrfTensor t;
  const int n_in = static_cast<int>(model.input_dofs.size());
  for (int j = 0; j < n_in; ++j) {
    TimeHistories th = simulate_impulse(model, cfg, j);
    if (noise_pct > 0.0) {
      th.outputs = add_awgn(th.outputs, noise_pct, derive_seed(seed, j, 0));
      th.inputs = add_awgn(th.inputs, noise_pct, derive_seed(seed, j, 1));
    }
    const FrfTensor col = estimate_frf(th);
    if (j == 0) {
      t = col;
    } else {
      for (int i = 0; i < t.n_out; ++i)
        t.values.row(i * t.n_in + j) = col.values.row(i * col.n_in + j);
    }
  }
  return t;
}

ModalSet in_band(const ModalSet& set, double fmin, double fmax) {
  ModalSet out;
  out.dropped_real_poles = set.dropped_real_poles;
  for (const Mode& m : set.modes)
    if (m.f_hz >= fmin && m.f_hz <= fmax) out.modes.push_back(m);
  return out;
}

std::vector<int> parse_orders(const std::string& text) {
  int lo = 0, hi = 0, step = 0;
  if (std::sscanf(text.c_str(), "%d:%d:%d", &lo, &hi, &step) != 3 || step <= 0 ||
      hi < lo)
    throw PreconditionError("--orders expects lo:hi:step with step > 0");
  std::vector<int> orders;
  for (int o = lo; o <= hi; o += step) orders.push_back(o);
  return orders;
}

void write_fit_vs_data(const fs::path& path, const StackedFrf& data,
                       const RationalModel& model) {
  const CMat fit = evaluate_model(model, data.freq_hz);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "row,freq_hz,abs_data,abs_fit,abs_dev\n";
  for (int r = 0; r < data.n_rows(); ++r)
    for (int k = 0; k < data.n_freq(); ++k)
      out << (r + 1) << ',' << format_float17(data.freq_hz[k]) << ','
          << format_float17(std::abs(data.rows(r, k))) << ','
          << format_float17(std::abs(fit(r, k))) << ','
          << format_float17(std::abs(fit(r, k) - data.rows(r, k))) << '\n';
}

json diagnostics_json(const FitDiagnostics& d) {
  json j;
  j["order"] = d.order;
  j["n_rows"] = d.n_rows;
  j["n_freq"] = d.n_freq;
  json iters = json::array();
  for (const auto& it : d.iterations)
    iters.push_back({{"iteration", it.iteration},
                     {"max_pole_move_rel", it.max_pole_move_rel},
                     {"sigma_const", it.sigma_const},
                     {"condition", it.condition},
                     {"d_guard_active", it.d_guard_active}});
  j["iterations"] = iters;
  j["per_row_rmse"] = std::vector<double>(d.per_row_rmse.begin(),
                                          d.per_row_rmse.end());
  j["per_row_condition"] = std::vector<double>(d.per_row_condition.begin(),
                                               d.per_row_condition.end());
  return j;
}

// ---------------------------------------------------------------------------
// simulate-beam

struct SimulateArgs {
  std::string config_file;
  std::string out_dir;
  double noise_pct = 0.0;
  std::uint64_t seed = 12345;
  int n_elem_override = 0;
};

void cmd_simulate_beam(const SimulateArgs& args) {
  BeamConfig cfg;
  Manifest manifest;
  manifest.command = "simulate-beam";
  if (!args.config_file.empty()) {
    cfg = read_beam_config(args.config_file);
    manifest.inputs.push_back(args.config_file);
  }
  if (args.n_elem_override > 0) cfg.n_elem = args.n_elem_override;
  cfg.validate();

  const fs::path dir = prepare_out_dir(args.out_dir);
  const StructuralModel model = assemble_beam(cfg);

  TimeHistories th = simulate_impulse(model, cfg);
  if (args.noise_pct > 0.0) {
    th.outputs = add_awgn(th.outputs, args.noise_pct, derive_seed(args.seed, 101, 0));
    th.inputs = add_awgn(th.inputs, args.noise_pct, derive_seed(args.seed, 101, 1));
  }
  write_th_csv(th.outputs, th.fs_hz, ThKind::output, dir / "th_outputs.csv");
  write_th_csv(th.inputs, th.fs_hz, ThKind::input, dir / "th_inputs.csv");

  const int n_samp = static_cast<int>(th.outputs.cols());
  const Vec grid = fft_frequency_grid(cfg.fs_hz, n_samp);
  write_frf_csv(synthesize_frf_analytic(model, grid, cfg.zeta_all),
                dir / "frf_analytic.csv");
  write_frf_csv(estimated_tensor(model, cfg, args.noise_pct, args.seed),
                dir / "frf_estimated.csv");
  write_modes_json(eigen_reference(model, cfg), dir / "modes_reference.json");

  manifest.seed = args.seed;
  manifest.config = {{"length_m", cfg.length_m},   {"b_ext_m", cfg.b_ext_m},
                     {"h_ext_m", cfg.h_ext_m},     {"wall_t_m", cfg.wall_t_m},
                     {"rho_kg_m3", cfg.rho_kg_m3}, {"e_pa", cfg.e_pa},
                     {"nu", cfg.nu},               {"n_elem", cfg.n_elem},
                     {"zeta_all", cfg.zeta_all},   {"fs_hz", cfg.fs_hz},
                     {"duration_s", cfg.duration_s},
                     {"noise_pct", args.noise_pct}};
  manifest.outputs = {"th_outputs.csv", "th_inputs.csv", "frf_analytic.csv",
                      "frf_estimated.csv", "modes_reference.json"};
  write_manifest(dir, manifest);
  note("simulate-beam: wrote " + std::to_string(manifest.outputs.size()) +
       " files to " + dir.string());
}

// ---------------------------------------------------------------------------
// identify

struct IdentifyArgs {
  std::string frf_file;
  std::string out_dir;
  std::optional<double> fmin, fmax;
  int order = 24;
  int iterations = 5;
  std::string stacking = "superposed";
};

void cmd_identify(const IdentifyArgs& args) {
  const FrfTensor full = read_frf_csv(args.frf_file);
  const FrfTensor t = band_limited(full, args.fmin, args.fmax);
  const StackedFrf stacked = apply_stacking(t, args.stacking);

  FitConfig cfg;
  cfg.order = args.order;
  cfg.iterations = args.iterations;
  auto [model, diag] = fit_frf(stacked, cfg);
  const ModalSet modes =
      in_band(model_to_modal(model), t.freq_hz[0], t.freq_hz[t.n_freq() - 1]);

  const fs::path dir = prepare_out_dir(args.out_dir);
  write_modes_json(modes, dir / "modes.json");
  {
    std::ofstream out(dir / "diagnostics.json");
    if (!out) throw IoError("cannot write diagnostics.json");
    out << diagnostics_json(diag).dump(2) << "\n";
  }
  write_fit_vs_data(dir / "fit_vs_data.csv", stacked, model);

  Manifest manifest;
  manifest.command = "identify";
  manifest.inputs = {args.frf_file};
  manifest.config = {{"fmin_hz", t.freq_hz[0]},
                     {"fmax_hz", t.freq_hz[t.n_freq() - 1]},
                     {"order", args.order},
                     {"iterations", args.iterations},
                     {"stacking", args.stacking}};
  manifest.outputs = {"modes.json", "diagnostics.json", "fit_vs_data.csv"};
  write_manifest(dir, manifest);
  note("identify: " + std::to_string(modes.size()) + " modes in band");
}

// ---------------------------------------------------------------------------
// stabilize

struct StabilizeArgs {
  std::string frf_file;
  std::string out_dir;
  std::string orders = "20:40:2";
  int min_occurrences = 3;
  std::optional<double> fmin, fmax;
  int iterations = 5;
  std::string stacking = "superposed";
  int decimate = 1;
};

void cmd_stabilize(const StabilizeArgs& args) {
  const std::vector<int> orders = parse_orders(args.orders);
  if (orders.size() < 2)
    throw PreconditionError("--orders must span at least 2 orders");
  FrfTensor t = band_limited(read_frf_csv(args.frf_file), args.fmin, args.fmax);
  t = decimate_grid(t, args.decimate);
  const StackedFrf stacked = apply_stacking(t, args.stacking);

  FitConfig cfg;
  cfg.iterations = args.iterations;
  const StabilizationDiagram diag = build_stabilization(stacked, orders, cfg);
  const ModalSet selected = select_stable(diag, args.min_occurrences);
  if (selected.modes.empty())
    note("warning: no mode was stable at >= " +
         std::to_string(args.min_occurrences) + " orders");

  const fs::path dir = prepare_out_dir(args.out_dir);
  write_stab_csv(diag, dir / "stabilization.csv");
  write_modes_json(selected, dir / "modes_selected.json");

  Manifest manifest;
  manifest.command = "stabilize";
  manifest.inputs = {args.frf_file};
  manifest.config = {{"orders", args.orders},
                     {"min_occurrences", args.min_occurrences},
                     {"fmin_hz", t.freq_hz[0]},
                     {"fmax_hz", t.freq_hz[t.n_freq() - 1]},
                     {"iterations", args.iterations},
                     {"stacking", args.stacking},
                     {"decimate", args.decimate}};
  manifest.outputs = {"stabilization.csv", "modes_selected.json"};
  write_manifest(dir, manifest);
  note("stabilize: " + std::to_string(orders.size()) + " fits, " +
       std::to_string(selected.size()) + " modes selected");
}

// ---------------------------------------------------------------------------
// noise-sweep

struct SweepArgs {
  std::string config_file;
  std::string out_dir;
  std::vector<double> levels = {0, 0.1, 0.3, 0.5, 0.7, 1, 3, 5};
  int reps = 5;
  std::uint64_t seed = 12345;
  int order = 48;
  double fmin = 2.0, fmax = 480.0;
  int decimate = 3;
};

void cmd_noise_sweep(const SweepArgs& args) {
  BeamConfig cfg;
  Manifest manifest;
  manifest.command = "noise-sweep";
  if (!args.config_file.empty()) {
    cfg = read_beam_config(args.config_file);
    manifest.inputs.push_back(args.config_file);
  }
  if (args.reps < 1) throw PreconditionError("--reps must be >= 1");
  const StructuralModel model = assemble_beam(cfg);
  const ModalSet reference = eigen_reference(model, cfg);

  const fs::path dir = prepare_out_dir(args.out_dir);
  std::ofstream csv(dir / "sweep.csv");
  if (!csv) throw IoError("cannot write sweep.csv");
  csv << "level_pct,rep,mode,f_err_pct,zeta_err_pct,mac\n";

  FitConfig fit_cfg;
  fit_cfg.order = args.order;

  for (size_t li = 0; li < args.levels.size(); ++li) {
    const double level = args.levels[li];
    if (level < 0) throw PreconditionError("noise level must be >= 0");
    for (int rep = 0; rep < args.reps; ++rep) {
      const std::uint64_t cell_seed = derive_seed(args.seed, li, rep);
      FrfTensor t = estimated_tensor(model, cfg, level, cell_seed);
      t = decimate_grid(truncate_band(t, args.fmin, args.fmax), args.decimate);
      auto [m, fit_diag] = fit_frf(stack_superposed(t), fit_cfg);
      const ModalSet found = in_band(model_to_modal(m), args.fmin, args.fmax);
      for (int k = 0; k < reference.size(); ++k) {
        const Mode& ref = reference.modes[k];
        const Mode* best = nullptr;
        for (const Mode& cand : found.modes)
          if (!best || std::abs(cand.f_hz - ref.f_hz) < std::abs(best->f_hz - ref.f_hz))
            best = &cand;
        if (!best) continue;
        csv << format_float17(level) << ',' << (rep + 1) << ',' << (k + 1) << ','
            << format_float17(100.0 * std::abs(best->f_hz - ref.f_hz) / ref.f_hz)
            << ','
            << format_float17(100.0 * std::abs(best->zeta - ref.zeta) / ref.zeta)
            << ',' << format_float17(mac(best->shape, ref.shape)) << '\n';
      }
      note("noise-sweep: level " + std::to_string(level) + "% rep " +
           std::to_string(rep + 1) + " done");
    }
  }
  csv.close();

  manifest.seed = args.seed;
  manifest.config = {{"levels", args.levels}, {"reps", args.reps},
                     {"order", args.order},   {"fmin_hz", args.fmin},
                     {"fmax_hz", args.fmax},  {"decimate", args.decimate},
                     {"n_elem", cfg.n_elem}};
  manifest.outputs = {"sweep.csv"};
  write_manifest(dir, manifest);
}

// ---------------------------------------------------------------------------
// compare

struct CompareArgs {
  std::string file_a, file_b;
  std::string out_dir;
  double f_tol_pct = 2.0;
};

void cmd_compare(const CompareArgs& args) {
  const ModalSet a = read_modes_json(args.file_a);
  const ModalSet b = read_modes_json(args.file_b);

  struct Pair {
    int ia, ib;
    double df_pct;
  };
  std::vector<Pair> candidates;
  for (int i = 0; i < a.size(); ++i)
    for (int j = 0; j < b.size(); ++j) {
      const double df =
          100.0 * std::abs(a.modes[i].f_hz - b.modes[j].f_hz) / a.modes[i].f_hz;
      if (df <= args.f_tol_pct) candidates.push_back({i, j, df});
    }
  std::sort(candidates.begin(), candidates.end(),
            [](const Pair& x, const Pair& y) { return x.df_pct < y.df_pct; });
  std::vector<int> match_a(a.size(), -1), match_b(b.size(), -1);
  for (const Pair& p : candidates)
    if (match_a[p.ia] < 0 && match_b[p.ib] < 0) {
      match_a[p.ia] = p.ib;
      match_b[p.ib] = p.ia;
    }

  const fs::path dir = prepare_out_dir(args.out_dir);
  std::ofstream csv(dir / "comparison.csv");
  if (!csv) throw IoError("cannot write comparison.csv");
  csv << "status,mode_a,mode_b,f_a_hz,f_b_hz,df_pct,zeta_a,zeta_b,dzeta,mac\n";
  int paired = 0;
  for (int i = 0; i < a.size(); ++i) {
    if (match_a[i] < 0) continue;
    const Mode& ma = a.modes[i];
    const Mode& mb = b.modes[match_a[i]];
    ++paired;
    std::string mac_text;
    if (ma.shape.size() == mb.shape.size() && ma.shape.size() > 0)
      mac_text = format_float17(mac(ma.shape, mb.shape));
    csv << "paired," << (i + 1) << ',' << (match_a[i] + 1) << ','
        << format_float17(ma.f_hz) << ',' << format_float17(mb.f_hz) << ','
        << format_float17(100.0 * std::abs(ma.f_hz - mb.f_hz) / ma.f_hz) << ','
        << format_float17(ma.zeta) << ',' << format_float17(mb.zeta) << ','
        << format_float17(mb.zeta - ma.zeta) << ',' << mac_text << '\n';
  }
  for (int i = 0; i < a.size(); ++i)
    if (match_a[i] < 0)
      csv << "only_a," << (i + 1) << ",," << format_float17(a.modes[i].f_hz)
          << ",,," << format_float17(a.modes[i].zeta) << ",,,\n";
  for (int j = 0; j < b.size(); ++j)
    if (match_b[j] < 0)
      csv << "only_b,," << (j + 1) << ",," << format_float17(b.modes[j].f_hz)
          << ",,," << format_float17(b.modes[j].zeta) << ",,\n";

  Manifest manifest;
  manifest.command = "compare";
  manifest.inputs = {args.file_a, args.file_b};
  manifest.config = {{"f_tol_pct", args.f_tol_pct}};
  manifest.outputs = {"comparison.csv"};
  write_manifest(dir, manifest);
  note("compare: " + std::to_string(paired) + " pairs, " +
       std::to_string(a.size() - paired) + " unpaired in A, " +
       std::to_string(b.size() - paired) + " unpaired in B");
}

// ---------------------------------------------------------------------------
// anpsd

struct AnpsdArgs {
  std::string input_file;
  std::string out_dir;
};

bool file_has_magic(const fs::path& path, const std::string& magic) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line.rfind("# " + magic, 0) == 0;
}

void cmd_anpsd(const AnpsdArgs& args) {
  Vec freq;
  Mat psd;
  if (file_has_magic(args.input_file, "th-csv")) {
    const ThRecord rec = read_th_csv(args.input_file);
    psd = periodogram(rec.channels, rec.fs_hz, &freq);
  } else if (file_has_magic(args.input_file, "frf-csv")) {
    const FrfTensor t = read_frf_csv(args.input_file);
    freq = t.freq_hz;
    psd = t.values.cwiseAbs2();  // |H|^2 proxy
  } else {
    throw IoError(args.input_file + ": expected a th-csv v1 or frf-csv v1 file");
  }
  const Vec avg = anpsd(psd);

  const fs::path dir = prepare_out_dir(args.out_dir);
  {
    std::ofstream out(dir / "anpsd.csv");
    if (!out) throw IoError("cannot write anpsd.csv");
    out << "freq_hz,anpsd\n";
    for (Eigen::Index k = 0; k < freq.size(); ++k)
      out << format_float17(freq[k]) << ',' << format_float17(avg[k]) << '\n';
  }
  {
    std::ofstream out(dir / "psd.csv");
    if (!out) throw IoError("cannot write psd.csv");
    out << "freq_hz,ch_idx,psd\n";
    for (Eigen::Index c = 0; c < psd.rows(); ++c)
      for (Eigen::Index k = 0; k < psd.cols(); ++k)
        out << format_float17(freq[k]) << ',' << (c + 1) << ','
            << format_float17(psd(c, k)) << '\n';
  }

  Manifest manifest;
  manifest.command = "anpsd";
  manifest.inputs = {args.input_file};
  manifest.outputs = {"anpsd.csv", "psd.csv"};
  write_manifest(dir, manifest);
}

// ---------------------------------------------------------------------------
// stack

struct StackArgs {
  std::string frf_file;
  std::string out_dir;
  std::string stacking = "superposed";
};

void cmd_stack(const StackArgs& args) {
  const FrfTensor t = read_frf_csv(args.frf_file);
  const StackedFrf s = apply_stacking(t, args.stacking);

  // Each stacked row is a virtual SISO channel; emit as an n_rows x 1 tensor.
  FrfTensor out;
  out.n_out = s.n_rows();
  out.n_in = 1;
  out.freq_hz = s.freq_hz;
  out.unit_kind = t.unit_kind;
  out.values = s.rows;
  const fs::path dir = prepare_out_dir(args.out_dir);
  write_frf_csv(out, dir / "stacked.csv");

  Manifest manifest;
  manifest.command = "stack";
  manifest.inputs = {args.frf_file};
  manifest.config = {{"stacking", args.stacking}};
  manifest.outputs = {"stacked.csv"};
  write_manifest(dir, manifest);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modal identification from FRF data via fast relaxed vector "
               "fitting with enhanced input stacking"};
  app.require_subcommand(1);
  app.add_flag("--quiet", g_quiet, "Suppress progress notes");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate-beam",
                                   "Simulate the built-in cantilever beam oracle");
  c_sim->add_option("--config", sim.config_file, "key=value beam config file");
  c_sim->add_option("--out-dir", sim.out_dir, "Output directory")->required();
  c_sim->add_option("--noise", sim.noise_pct,
                    "AWGN level in percent of signal std");
  c_sim->add_option("--seed", sim.seed, "Noise seed");
  c_sim->add_option("--n-elem", sim.n_elem_override, "Override element count");

  IdentifyArgs ident;
  auto* c_id = app.add_subcommand("identify",
                                  "Identify modal parameters from an FRF file");
  c_id->add_option("frf-file", ident.frf_file, "frf-csv v1 input")->required();
  c_id->add_option("--out-dir", ident.out_dir, "Output directory")->required();
  c_id->add_option("--fmin", ident.fmin, "Lower band edge in Hz");
  c_id->add_option("--fmax", ident.fmax, "Upper band edge in Hz");
  c_id->add_option("--order", ident.order, "Model order (number of poles)");
  c_id->add_option("--iterations", ident.iterations, "Relocation iterations");
  c_id->add_option("--stacking", ident.stacking,
                   "superposed | triangular | flat");

  StabilizeArgs stab;
  auto* c_st = app.add_subcommand("stabilize",
                                  "Stabilization diagram over a range of orders");
  c_st->add_option("frf-file", stab.frf_file, "frf-csv v1 input")->required();
  c_st->add_option("--out-dir", stab.out_dir, "Output directory")->required();
  c_st->add_option("--orders", stab.orders, "lo:hi:step sweep")->required();
  c_st->add_option("--min-occurrences", stab.min_occurrences,
                   "Orders a mode must stay stable at");
  c_st->add_option("--fmin", stab.fmin, "Lower band edge in Hz");
  c_st->add_option("--fmax", stab.fmax, "Upper band edge in Hz");
  c_st->add_option("--iterations", stab.iterations, "Relocation iterations");
  c_st->add_option("--stacking", stab.stacking, "superposed | triangular | flat");
  c_st->add_option("--decimate", stab.decimate, "Frequency grid decimation");

  SweepArgs sweep;
  auto* c_sw = app.add_subcommand("noise-sweep",
                                  "Noise robustness study on the beam oracle");
  c_sw->add_option("--config", sweep.config_file, "key=value beam config file");
  c_sw->add_option("--out-dir", sweep.out_dir, "Output directory")->required();
  c_sw->add_option("--levels", sweep.levels, "Noise levels in percent")
      ->delimiter(',');
  c_sw->add_option("--reps", sweep.reps, "Repetitions per level");
  c_sw->add_option("--seed", sweep.seed, "Base seed");
  c_sw->add_option("--order", sweep.order, "Model order per cell");
  c_sw->add_option("--fmin", sweep.fmin, "Lower band edge in Hz");
  c_sw->add_option("--fmax", sweep.fmax, "Upper band edge in Hz");
  c_sw->add_option("--decimate", sweep.decimate, "Frequency grid decimation");

  CompareArgs cmp;
  auto* c_cp = app.add_subcommand("compare", "Pair and compare two modal sets");
  c_cp->add_option("modes-a", cmp.file_a, "modes-json v1")->required();
  c_cp->add_option("modes-b", cmp.file_b, "modes-json v1")->required();
  c_cp->add_option("--out-dir", cmp.out_dir, "Output directory")->required();
  c_cp->add_option("--f-tol-pct", cmp.f_tol_pct,
                   "Frequency pairing tolerance in percent");

  AnpsdArgs anp;
  auto* c_an = app.add_subcommand("anpsd",
                                  "Average normalised PSD of a th/frf file");
  c_an->add_option("input-file", anp.input_file, "th-csv or frf-csv")->required();
  c_an->add_option("--out-dir", anp.out_dir, "Output directory")->required();

  StackArgs stk;
  auto* c_sk = app.add_subcommand("stack", "Standalone stacking transform");
  c_sk->add_option("frf-file", stk.frf_file, "frf-csv v1 input")->required();
  c_sk->add_option("--out-dir", stk.out_dir, "Output directory")->required();
  c_sk->add_option("--stacking", stk.stacking, "superposed | triangular | flat");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (c_sim->parsed()) cmd_simulate_beam(sim);
    if (c_id->parsed()) cmd_identify(ident);
    if (c_st->parsed()) cmd_stabilize(stab);
    if (c_sw->parsed()) cmd_noise_sweep(sweep);
    if (c_cp->parsed()) cmd_compare(cmp);
    if (c_an->parsed()) cmd_anpsd(anp);
    if (c_sk->parsed()) cmd_stack(stk);
  } catch (const IoError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  } catch (const PreconditionError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  } catch (const NumericError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 3;
  }
  return 0;
}
