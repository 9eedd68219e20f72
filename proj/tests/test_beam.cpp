#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "frvf/beam.hpp"
#include "frvf/frf_tensor.hpp"

using namespace frvf;

namespace {

// First ten eigenfrequencies of the default 6-element model, as reproduced
// by the consistent-mass Euler-Bernoulli formulation.
const double kReferenceFreqs[10] = {5.001,   11.367,  31.347,  71.253, 87.912,
                                    173.065, 199.826, 288.530, 393.383, 431.710};

}  // namespace

TEST_CASE("section properties of the hollow rectangle") {
  const SectionProperties sp = section_properties(BeamConfig{});
  CHECK(sp.area == doctest::Approx(6.0e-4).epsilon(1e-12));
  CHECK(sp.i_y == doctest::Approx(3.0e-8).epsilon(1e-12));
  CHECK(sp.i_z == doctest::Approx(1.55e-7).epsilon(1e-12));
}

TEST_CASE("assembly retains the expected DoFs") {
  BeamConfig cfg;
  SUBCASE("default: 24 DoFs, 12 translational outputs") {
    const StructuralModel m = assemble_beam(cfg);
    CHECK(m.n_dof() == 24);
    CHECK(m.output_dofs.size() == 12);
    CHECK(m.input_dofs.size() == 2);
    CHECK(m.dof_map[m.input_dofs[0]].node == 1);
    CHECK(m.dof_map[m.input_dofs[0]].direction == DofDirection::z);
    CHECK(m.dof_map[m.input_dofs[1]].direction == DofDirection::y);
  }
  SUBCASE("single element: 4 DoFs at the free node") {
    cfg.n_elem = 1;
    const StructuralModel m = assemble_beam(cfg);
    CHECK(m.n_dof() == 4);
    CHECK(m.output_dofs.size() == 2);
  }
  SUBCASE("invalid geometry is rejected") {
    cfg.wall_t_m = 0.02;
    CHECK_THROWS_AS(assemble_beam(cfg), PreconditionError);
  }
}

TEST_CASE("eigenfrequencies reproduce the reference table within 0.05%") {
  const StructuralModel m = assemble_beam(BeamConfig{});
  const EigenSolution eig = eigen_modes(m);
  for (int n = 0; n < 10; ++n) {
    const double f = eig.omega[n] / kTwoPi;
    CHECK(std::abs(f - kReferenceFreqs[n]) / kReferenceFreqs[n] < 5e-4);
  }
  SUBCASE("exactly 10 modes lie below Nyquist") {
    int below = 0;
    for (int n = 0; n < m.n_dof(); ++n)
      if (eig.omega[n] / kTwoPi < 500.0) ++below;
    CHECK(below == 10);
  }
}

TEST_CASE("eigen solution cross-checks against closed forms") {
  BeamConfig cfg;
  const StructuralModel m = assemble_beam(cfg);
  const EigenSolution eig = eigen_modes(m);
  const SectionProperties sp = section_properties(cfg);

  SUBCASE("f1 matches the analytic cantilever formula within 0.5%") {
    const double lambda1 = 1.8751040687119611;
    const double f1 = lambda1 * lambda1 / kTwoPi *
                      std::sqrt(cfg.e_pa * sp.i_y /
                                (cfg.rho_kg_m3 * sp.area *
                                 std::pow(cfg.length_m, 4)));
    CHECK(std::abs(eig.omega[0] / kTwoPi - f1) / f1 < 5e-3);
  }
  SUBCASE("f2/f1 equals the orthogonal-plane stiffness ratio within 0.5%") {
    const double expected = std::sqrt(sp.i_z / sp.i_y);
    const double got = eig.omega[1] / eig.omega[0];
    CHECK(std::abs(got - expected) / expected < 5e-3);
  }
  SUBCASE("mass normalisation: Phi^T M Phi = I, Phi^T K Phi = diag(w^2)") {
    const Mat gram = eig.phi.transpose() * m.mass * eig.phi;
    CHECK((gram - Mat::Identity(24, 24)).cwiseAbs().maxCoeff() < 1e-9);
    const Mat kk = eig.phi.transpose() * m.stiffness * eig.phi;
    for (int n = 0; n < 24; ++n) {
      const double w2 = eig.omega[n] * eig.omega[n];
      CHECK(std::abs(kk(n, n) - w2) / w2 < 1e-6);
    }
  }
  SUBCASE("doubling n_elem moves the first three frequencies < 0.5%") {
    BeamConfig fine = cfg;
    fine.n_elem = 12;
    const EigenSolution ref = eigen_modes(assemble_beam(fine));
    for (int n = 0; n < 3; ++n) {
      const double rel = std::abs(eig.omega[n] - ref.omega[n]) / ref.omega[n];
      CHECK(rel < 5e-3);
      CHECK(eig.omega[n] >= ref.omega[n]);  // convergence from above
    }
  }
}

TEST_CASE("modal damping matrix diagonalises as constructed") {
  BeamConfig cfg;
  const StructuralModel m = assemble_beam(cfg);
  const EigenSolution eig = eigen_modes(m);

  SUBCASE("zeta = 0 gives C = 0") {
    CHECK(modal_damping_matrix(m, eig, 0.0).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("Phi^T C Phi = diag(2 zeta w)") {
    const Mat c = modal_damping_matrix(m, eig, cfg.zeta_all);
    CHECK((c - c.transpose()).cwiseAbs().maxCoeff() < 1e-9 * c.cwiseAbs().maxCoeff());
    const Mat proj = eig.phi.transpose() * c * eig.phi;
    for (int n = 0; n < m.n_dof(); ++n) {
      const double expect = 2.0 * cfg.zeta_all * eig.omega[n];
      CHECK(std::abs(proj(n, n) - expect) / expect < 1e-9);
      for (int k = 0; k < m.n_dof(); ++k)
        if (k != n) CHECK(std::abs(proj(n, k)) < 1e-9 * expect);
    }
  }
}

TEST_CASE("impulse simulation behaves like a damped linear system") {
  BeamConfig cfg;
  cfg.duration_s = 4.0;
  const StructuralModel m = assemble_beam(cfg);

  SUBCASE("impulse doubling doubles the response exactly") {
    const TimeHistories one = simulate_impulse(m, cfg, 0);
    BeamConfig cfg2 = cfg;
    const TimeHistories base = simulate_impulse(m, cfg2, 0);
    // Linearity holds trivially for the same model; verify via superposition
    // of the two single-input runs against the simultaneous run.
    const TimeHistories both = simulate_impulse(m, cfg, -1);
    const TimeHistories second = simulate_impulse(m, cfg, 1);
    const Mat sum = one.outputs + second.outputs;
    CHECK((both.outputs - sum).cwiseAbs().maxCoeff() <
          1e-12 * sum.cwiseAbs().maxCoeff());
    CHECK((one.outputs - base.outputs).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("input records carry the unit impulse at sample 0") {
    const TimeHistories th = simulate_impulse(m, cfg, -1);
    CHECK(th.inputs(0, 0) == 1.0);
    CHECK(th.inputs(1, 0) == 1.0);
    CHECK(th.inputs.rightCols(th.inputs.cols() - 1).cwiseAbs().maxCoeff() == 0.0);
    CHECK(th.outputs.cols() == static_cast<Eigen::Index>(cfg.fs_hz * cfg.duration_s));
  }
  SUBCASE("log-decrement of the dominant mode matches 3% damping within 2%") {
    BeamConfig long_run = cfg;
    long_run.duration_s = 20.0;
    const TimeHistories th = simulate_impulse(m, long_run, 0);
    // Tip z-displacement is dominated by mode 1 at ~5 Hz after a short time.
    const Vec tip = th.outputs.row(10);
    const double f1 = 5.0008;
    const int period = static_cast<int>(std::round(long_run.fs_hz / f1));
    // Peak amplitudes one period apart, away from the start-up transient.
    int k0 = 6 * period;
    auto local_peak = [&](int around) {
      double best = 0.0;
      for (int k = around - period / 4; k <= around + period / 4; ++k)
        best = std::max(best, std::abs(tip[k]));
      return best;
    };
    const double a0 = local_peak(k0);
    const double a1 = local_peak(k0 + 4 * period);
    const double zeta = cfg.zeta_all;
    const double expected = std::exp(-4.0 * kTwoPi * zeta / std::sqrt(1 - zeta * zeta));
    CHECK(std::abs(a1 / a0 - expected) / expected < 0.02);
  }
  SUBCASE("undamped single-mode response conserves amplitude") {
    // fs = 16 Hz leaves only the 5.0008 Hz mode below Nyquist, so the tip
    // motion is one pure sampled tone; its amplitude follows exactly from
    // any two neighbouring samples.
    BeamConfig undamped = cfg;
    undamped.zeta_all = 0.0;
    undamped.fs_hz = 16.0;
    undamped.duration_s = 30.0;
    const StructuralModel single = assemble_beam(undamped);
    const TimeHistories th = simulate_impulse(single, undamped, 0);
    const Vec tip = th.outputs.row(10);
    const double w_dt = eigen_modes(single).omega[0] / undamped.fs_hz;
    auto amplitude_sq = [&](int k) {
      const double c = std::cos(w_dt), s2 = std::sin(w_dt) * std::sin(w_dt);
      return (tip[k] * tip[k] + tip[k + 1] * tip[k + 1] -
              2.0 * tip[k] * tip[k + 1] * c) / s2;
    };
    const double early = amplitude_sq(10);
    const double late = amplitude_sq(450);
    CHECK(early > 0.0);
    CHECK(std::abs(late - early) / early < 1e-6);
  }
}

TEST_CASE("analytic receptance satisfies static and resonance limits") {
  BeamConfig cfg;
  const StructuralModel m = assemble_beam(cfg);

  SUBCASE("low-frequency limit equals the static flexibility") {
    Vec freq(2);
    freq << 1e-5, 2e-5;  // 2 zeta w / w_1 stays below the 1e-6 tolerance
    const FrfTensor t = synthesize_frf_analytic(m, freq, cfg.zeta_all);
    const Mat flex = m.stiffness.ldlt().solve(Mat::Identity(24, 24));
    const double scale = flex.cwiseAbs().maxCoeff();
    for (int i = 0; i < t.n_out; ++i)
      for (int j = 0; j < t.n_in; ++j) {
        const double expect = flex(m.output_dofs[i], m.input_dofs[j]);
        const Complex got = t.values(i * t.n_in + j, 0);
        // Cross-plane entries are exactly zero; compare those absolutely.
        const double denom = std::max(std::abs(expect), 1e-9 * scale);
        CHECK(std::abs(got - expect) / denom < 1e-6);
      }
  }
  SUBCASE("|H| peaks within one grid step of the damped resonance") {
    const EigenSolution eig = eigen_modes(m);
    Vec freq(4001);
    for (int k = 0; k <= 4000; ++k) freq[k] = 2.0 + k * 0.002;  // 2..10 Hz
    const FrfTensor t = synthesize_frf_analytic(m, freq, cfg.zeta_all);
    const auto row = t.channel(10, 0);  // tip z over z impulse, mode 1 dominant
    Eigen::Index kmax = 0;
    row.cwiseAbs().maxCoeff(&kmax);
    const double zeta = cfg.zeta_all;
    const double f_peak =
        eig.omega[0] * std::sqrt(1.0 - 2.0 * zeta * zeta) / kTwoPi;
    CHECK(std::abs(freq[kmax] - f_peak) <= 0.002 + 1e-12);
  }
  SUBCASE("reciprocity at the collocated driving points") {
    Vec freq(3);
    freq << 5.0, 50.0, 400.0;
    const FrfTensor t = synthesize_frf_analytic(m, freq, cfg.zeta_all);
    // Outputs 0 and 1 are the node-1 z and y translations, i.e. the
    // excitation DoFs: H(out0, in1) must equal H(out1, in0).
    for (int k = 0; k < 3; ++k)
      CHECK(std::abs(t.values(0 * 2 + 1, k) - t.values(1 * 2 + 0, k)) <=
            1e-12 * std::abs(t.values(1, k)));
  }
}

TEST_CASE("FFT estimate agrees with the analytic receptance") {
  BeamConfig cfg;
  const StructuralModel m = assemble_beam(cfg);
  const FrfTensor est = beam_frf_fft(m, cfg);
  const FrfTensor ana = synthesize_frf_analytic(m, est.freq_hz, cfg.zeta_all);

  // Spectral folding of the sampled record bounds the attainable agreement;
  // at fs = 1 kHz with the highest mode at 431.7 Hz the worst channel (the
  // near-clamp driving point) folds at the percent level. Identification
  // accuracy is tested elsewhere; here the estimator itself is pinned.
  auto band_rel_rmse = [&](double lo, double hi) {
    double worst = 0.0;
    Eigen::Index k0 = 0;
    while (est.freq_hz[k0] < lo) ++k0;
    Eigen::Index k1 = est.freq_hz.size();
    while (est.freq_hz[k1 - 1] > hi) --k1;
    for (int ch = 0; ch < est.n_out * est.n_in; ++ch) {
      const auto dev = (est.values.row(ch) - ana.values.row(ch))
                           .segment(k0, k1 - k0).cwiseAbs();
      const double peak = ana.values.row(ch).segment(k0, k1 - k0)
                              .cwiseAbs().maxCoeff();
      worst = std::max(worst, std::sqrt(dev.cwiseAbs2().mean()) / peak);
    }
    return worst;
  };
  CHECK(band_rel_rmse(5.0, 450.0) < 2.5e-2);

  SUBCASE("pure-tone output over flat input peaks at the tone") {
    TimeHistories th;
    th.fs_hz = 100.0;
    const int n = 1000;
    th.outputs.resize(1, n);
    th.inputs = Mat::Zero(1, n);
    th.inputs(0, 0) = 1.0;
    for (int k = 0; k < n; ++k)
      th.outputs(0, k) = std::sin(kTwoPi * 10.0 * k / th.fs_hz);
    const FrfTensor t = estimate_frf(th);
    Eigen::Index kmax = 0;
    t.values.row(0).cwiseAbs().maxCoeff(&kmax);
    CHECK(t.freq_hz[kmax] == doctest::Approx(10.0).epsilon(1e-6));
  }
  SUBCASE("scaling the input rescales nothing in the ratio") {
    TimeHistories th = simulate_impulse(m, cfg, 0);
    const FrfTensor base = estimate_frf(th);
    th.outputs *= 2.0;
    th.inputs *= 2.0;
    const FrfTensor scaled = estimate_frf(th);
    CHECK((scaled.values - base.values).cwiseAbs().maxCoeff() <
          1e-12 * base.values.cwiseAbs().maxCoeff());
  }
}

TEST_CASE("FFT estimate converges on the analytic FRF as fs grows") {
  // Folding shrinks when the modes sit deeper below Nyquist.
  BeamConfig coarse;
  coarse.duration_s = 15.0;
  BeamConfig fine = coarse;
  fine.fs_hz = 4000.0;
  const StructuralModel m = assemble_beam(coarse);

  auto worst_rel = [&](const BeamConfig& cfg) {
    const FrfTensor est = beam_frf_fft(m, cfg);
    const FrfTensor ana = synthesize_frf_analytic(m, est.freq_hz, cfg.zeta_all);
    double worst = 0.0;
    Eigen::Index k0 = 0;
    while (est.freq_hz[k0] < 5.0) ++k0;
    Eigen::Index k1 = est.freq_hz.size();
    while (est.freq_hz[k1 - 1] > 450.0) --k1;
    for (int ch = 0; ch < est.n_out * est.n_in; ++ch) {
      const auto dev = (est.values.row(ch) - ana.values.row(ch))
                           .segment(k0, k1 - k0).cwiseAbs();
      const double peak = ana.values.row(ch).segment(k0, k1 - k0)
                              .cwiseAbs().maxCoeff();
      worst = std::max(worst, std::sqrt(dev.cwiseAbs2().mean()) / peak);
    }
    return worst;
  };
  const double at_1k = worst_rel(coarse);
  const double at_4k = worst_rel(fine);
  CHECK(at_4k < at_1k / 5.0);
  CHECK(at_4k < 2e-3);
}

TEST_CASE("add_awgn is seeded, scaled, and exact at zero") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> gauss;
  Vec signal(30000);
  for (Eigen::Index k = 0; k < signal.size(); ++k) signal[k] = gauss(rng);

  SUBCASE("percent = 0 returns the signal bit-exactly") {
    const Vec out = add_awgn(signal, 0.0, 42);
    CHECK((out - signal).cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("identical seeds give identical noise") {
    const Vec a = add_awgn(signal, 1.0, 42);
    const Vec b = add_awgn(signal, 1.0, 42);
    const Vec c = add_awgn(signal, 1.0, 43);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
  }
  SUBCASE("noise std tracks the requested percentage within 2%") {
    const double sd = std::sqrt((signal.array() - signal.mean()).square().mean());
    const Vec noisy = add_awgn(signal, 100.0, 13);
    const Vec noise = noisy - signal;
    const double nsd = std::sqrt((noise.array() - noise.mean()).square().mean());
    CHECK(std::abs(nsd - sd) / sd < 0.02);
  }
  SUBCASE("matrix channels are independent but reproducible") {
    Mat channels(2, 30000);
    channels.row(0) = signal;
    channels.row(1) = signal;
    const Mat noisy = add_awgn(channels, 5.0, 7);
    const Mat again = add_awgn(channels, 5.0, 7);
    CHECK((noisy - again).cwiseAbs().maxCoeff() == 0.0);
    CHECK(((noisy.row(0) - signal.transpose()) -
           (noisy.row(1) - signal.transpose())).cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("beam config file parsing") {
  namespace fsys = std::filesystem;
  const fsys::path path = fsys::temp_directory_path() / "beam_cfg_test.txt";
  {
    std::ofstream out(path);
    out << "# comment\n\nn_elem = 12\nfs_hz=2000\nzeta_all = 0.01\n";
  }
  const BeamConfig cfg = read_beam_config(path);
  CHECK(cfg.n_elem == 12);
  CHECK(cfg.fs_hz == 2000.0);
  CHECK(cfg.zeta_all == 0.01);
  CHECK(cfg.length_m == 2.0);  // untouched default
  {
    std::ofstream out(path);
    out << "bogus_key=1\n";
  }
  CHECK_THROWS_AS(read_beam_config(path), IoError);
  fsys::remove(path);
}
