#include "frvf/beam.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include <unsupported/Eigen/FFT>

namespace frvf {

void BeamConfig::validate() const {
  if (length_m <= 0 || b_ext_m <= 0 || h_ext_m <= 0 || wall_t_m <= 0 ||
      rho_kg_m3 <= 0 || e_pa <= 0 || zeta_all < 0 || fs_hz <= 0 ||
      duration_s <= 0)
    throw PreconditionError("BeamConfig: all physical quantities must be positive");
  if (n_elem < 1) throw PreconditionError("BeamConfig: n_elem must be >= 1");
  if (wall_t_m >= std::min(b_ext_m, h_ext_m) / 2.0)
    throw PreconditionError("BeamConfig: wall thickness leaves no hollow interior");
}

SectionProperties section_properties(const BeamConfig& cfg) {
  const double b = cfg.b_ext_m, h = cfg.h_ext_m, t = cfg.wall_t_m;
  const double bi = b - 2.0 * t, hi = h - 2.0 * t;
  SectionProperties sp;
  sp.area = b * h - bi * hi;
  sp.i_z = (b * h * h * h - bi * hi * hi * hi) / 12.0;
  sp.i_y = (h * b * b * b - hi * bi * bi * bi) / 12.0;
  return sp;
}

namespace {

// Consistent Euler-Bernoulli element matrices for one bending plane,
// DoFs (w1, w1', w2, w2').
void element_matrices(double ei, double rho_a, double l, Eigen::Matrix4d& ke,
                      Eigen::Matrix4d& me) {
  const double l2 = l * l;
  ke << 12, 6 * l, -12, 6 * l,
        6 * l, 4 * l2, -6 * l, 2 * l2,
        -12, -6 * l, 12, -6 * l,
        6 * l, 2 * l2, -6 * l, 4 * l2;
  ke *= ei / (l2 * l);
  me << 156, 22 * l, 54, -13 * l,
        22 * l, 4 * l2, 13 * l, -3 * l2,
        54, 13 * l, 156, -22 * l,
        -13 * l, -3 * l2, -22 * l, 4 * l2;
  me *= rho_a * l / 420.0;
}

}  // namespace

StructuralModel assemble_beam(const BeamConfig& cfg) {
  cfg.validate();
  const SectionProperties sp = section_properties(cfg);
  const double le = cfg.length_m / cfg.n_elem;
  const double rho_a = cfg.rho_kg_m3 * sp.area;

  Eigen::Matrix4d kz, mz, ky, my;
  element_matrices(cfg.e_pa * sp.i_y, rho_a, le, kz, mz);  // x-z plane
  element_matrices(cfg.e_pa * sp.i_z, rho_a, le, ky, my);  // x-y plane

  // Per node: [w_z, theta(z-plane), w_y, theta(y-plane)]. Node 0 is clamped
  // and removed after assembly.
  const int n_nodes = cfg.n_elem + 1;
  const int full = 4 * n_nodes;
  Mat kg = Mat::Zero(full, full), mg = Mat::Zero(full, full);
  for (int e = 0; e < cfg.n_elem; ++e) {
    const int iz[4] = {4 * e + 0, 4 * e + 1, 4 * (e + 1) + 0, 4 * (e + 1) + 1};
    const int iy[4] = {4 * e + 2, 4 * e + 3, 4 * (e + 1) + 2, 4 * (e + 1) + 3};
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        kg(iz[a], iz[b]) += kz(a, b);
        mg(iz[a], iz[b]) += mz(a, b);
        kg(iy[a], iy[b]) += ky(a, b);
        mg(iy[a], iy[b]) += my(a, b);
      }
  }

  StructuralModel m;
  const int n = full - 4;
  m.stiffness = kg.bottomRightCorner(n, n);
  m.mass = mg.bottomRightCorner(n, n);
  m.damping = Mat::Zero(n, n);
  m.dof_map.reserve(n);
  for (int node = 1; node < n_nodes; ++node) {
    m.dof_map.push_back({node, DofDirection::z, DofKind::translation});
    m.dof_map.push_back({node, DofDirection::z, DofKind::rotation});
    m.dof_map.push_back({node, DofDirection::y, DofKind::translation});
    m.dof_map.push_back({node, DofDirection::y, DofKind::rotation});
  }
  for (int d = 0; d < n; ++d)
    if (m.dof_map[d].kind == DofKind::translation) m.output_dofs.push_back(d);
  // Two orthogonal impulses at the first free node.
  m.input_dofs = {0, 2};
  return m;
}

EigenSolution eigen_modes(const StructuralModel& m) {
  Eigen::GeneralizedSelfAdjointEigenSolver<Mat> solver(m.stiffness, m.mass);
  if (solver.info() != Eigen::Success)
    throw NumericError("eigen_modes: generalized eigensolver did not converge");
  Vec lambda = solver.eigenvalues().cwiseMax(0.0);
  Mat phi = solver.eigenvectors();  // B-normalised: Phi^T M Phi = I

  // One inverse-iteration pass per isolated eigenpair. The transformed-space
  // solve loses several digits on wide spectra, which shows up as
  // cancellation error in modal flexibility sums; the refinement restores
  // near machine-precision eigenvectors.
  const int n = static_cast<int>(lambda.size());
  for (int k = 0; k < n; ++k) {
    const double gap_lo = k > 0 ? std::abs(lambda[k] - lambda[k - 1]) : 1e300;
    const double gap_hi = k + 1 < n ? std::abs(lambda[k + 1] - lambda[k]) : 1e300;
    if (std::min(gap_lo, gap_hi) < 1e-6 * lambda[k]) continue;  // clustered
    const Mat shifted = m.stiffness - lambda[k] * m.mass;
    // Plain LU: the near-singular pivot is what amplifies the wanted
    // eigendirection (rank-revealing solvers would suppress it).
    const Vec z = shifted.partialPivLu().solve(Vec(m.mass * phi.col(k)));
    if (!z.allFinite()) continue;
    const double mnorm = std::sqrt(z.dot(m.mass * z));
    if (mnorm <= 0.0) continue;
    const double sign = z.dot(m.mass * phi.col(k)) >= 0 ? 1.0 : -1.0;
    const Vec refined = sign / mnorm * z;
    const double rq = refined.dot(m.stiffness * refined);
    if (std::abs(rq - lambda[k]) > 1e-6 * lambda[k]) continue;  // did not help
    phi.col(k) = refined;
    lambda[k] = rq;
  }

  EigenSolution out;
  out.omega = lambda.cwiseSqrt();
  out.phi = std::move(phi);
  return out;
}

Mat modal_damping_matrix(const StructuralModel& m, const EigenSolution& eig,
                         double zeta) {
  const Mat mp = m.mass * eig.phi;
  return mp * (2.0 * zeta * eig.omega.array()).matrix().asDiagonal() * mp.transpose();
}

TimeHistories simulate_impulse(const StructuralModel& m, const BeamConfig& cfg,
                               int input_index) {
  cfg.validate();
  if (input_index >= static_cast<int>(m.input_dofs.size()))
    throw PreconditionError("simulate_impulse: input_index out of range");
  const EigenSolution eig = eigen_modes(m);
  const double dt = 1.0 / cfg.fs_hz;
  const int n_samp = static_cast<int>(std::lround(cfg.fs_hz * cfg.duration_s));
  const int n_out = static_cast<int>(m.output_dofs.size());
  const int n_in = static_cast<int>(m.input_dofs.size());

  Vec force = Vec::Zero(m.n_dof());
  if (input_index < 0) {
    for (int d : m.input_dofs) force[d] = 1.0;
  } else {
    force[m.input_dofs[input_index]] = 1.0;
  }

  TimeHistories th;
  th.fs_hz = cfg.fs_hz;
  th.outputs = Mat::Zero(n_out, n_samp);
  th.inputs = Mat::Zero(n_in, n_samp);
  for (int j = 0; j < n_in; ++j)
    if (input_index < 0 || input_index == j) th.inputs(j, 0) = 1.0;

  // Exact modal superposition of the modes representable below Nyquist; the
  // discrete impulse becomes an initial modal velocity of magnitude
  // phi_n^T F * dt per unit modal mass.
  const double nyquist = kPi * cfg.fs_hz;  // rad/s
  Vec t_grid(n_samp);
  for (int k = 0; k < n_samp; ++k) t_grid[k] = k * dt;
  for (int n = 0; n < m.n_dof(); ++n) {
    const double wn = eig.omega[n];
    if (wn >= nyquist || wn <= 0.0) continue;
    const double v0 = eig.phi.col(n).dot(force) * dt;
    if (v0 == 0.0) continue;
    const double zeta = cfg.zeta_all;
    const double wd = wn * std::sqrt(1.0 - zeta * zeta);
    Vec q(n_samp);
    for (int k = 0; k < n_samp; ++k)
      q[k] = (v0 / wd) * std::exp(-zeta * wn * t_grid[k]) * std::sin(wd * t_grid[k]);
    for (int i = 0; i < n_out; ++i)
      th.outputs.row(i) += eig.phi(m.output_dofs[i], n) * q.transpose();
  }
  return th;
}

FrfTensor synthesize_frf_analytic(const StructuralModel& m, const Vec& freq_hz,
                                  double zeta) {
  const EigenSolution eig = eigen_modes(m);
  const int n_out = static_cast<int>(m.output_dofs.size());
  const int n_in = static_cast<int>(m.input_dofs.size());
  FrfTensor t;
  t.n_out = n_out;
  t.n_in = n_in;
  t.freq_hz = freq_hz;
  t.unit_kind = UnitKind::receptance;
  t.values = CMat::Zero(n_out * n_in, freq_hz.size());
  const Vec omega = kTwoPi * freq_hz;
  for (int n = 0; n < m.n_dof(); ++n) {
    const double wn = eig.omega[n];
    CVec den(freq_hz.size());
    for (Eigen::Index k = 0; k < freq_hz.size(); ++k)
      den[k] = Complex(wn * wn - omega[k] * omega[k], 2.0 * zeta * wn * omega[k]);
    const CVec inv_den = den.cwiseInverse();
    for (int i = 0; i < n_out; ++i) {
      const double phi_i = eig.phi(m.output_dofs[i], n);
      if (phi_i == 0.0) continue;
      for (int j = 0; j < n_in; ++j) {
        const double num = phi_i * eig.phi(m.input_dofs[j], n);
        t.values.row(i * n_in + j) += num * inv_den.transpose();
      }
    }
  }
  return t;
}

Vec fft_frequency_grid(double fs_hz, int n_samp) {
  const int n_keep = n_samp / 2;
  Vec f(n_keep);
  for (int k = 1; k <= n_keep; ++k) f[k - 1] = k * fs_hz / n_samp;
  return f;
}

namespace {

CMat rfft_rows(const Mat& x) {
  Eigen::FFT<double> fft;
  const int n = static_cast<int>(x.cols());
  CMat out(x.rows(), n);
  std::vector<double> in(n);
  std::vector<Complex> spec(n);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    Eigen::Map<Vec>(in.data(), n) = x.row(r);
    fft.fwd(spec, in);
    out.row(r) = Eigen::Map<CVec>(spec.data(), n);
  }
  return out;
}

}  // namespace

FrfTensor estimate_frf(const TimeHistories& th) {
  if (th.outputs.cols() != th.inputs.cols() || th.outputs.cols() < 2)
    throw PreconditionError("estimate_frf: outputs/inputs must share a record length >= 2");
  const int n_samp = static_cast<int>(th.outputs.cols());
  const int n_keep = n_samp / 2;
  const CMat yf = rfft_rows(th.outputs);
  const CMat uf = rfft_rows(th.inputs);

  FrfTensor t;
  t.n_out = static_cast<int>(th.outputs.rows());
  t.n_in = static_cast<int>(th.inputs.rows());
  t.freq_hz = fft_frequency_grid(th.fs_hz, n_samp);
  t.unit_kind = UnitKind::receptance;
  t.values.resize(t.n_out * t.n_in, n_keep);
  for (int j = 0; j < t.n_in; ++j) {
    double umax = 0.0;
    for (int k = 1; k <= n_keep; ++k) umax = std::max(umax, std::abs(uf(j, k)));
    for (int k = 1; k <= n_keep; ++k) {
      if (std::abs(uf(j, k)) < 1e-12 * umax)
        throw NumericError("estimate_frf: input spectrum of channel " +
                           std::to_string(j + 1) + " vanishes at " +
                           std::to_string(t.freq_hz[k - 1]) + " Hz");
    }
    for (int i = 0; i < t.n_out; ++i)
      for (int k = 1; k <= n_keep; ++k)
        t.values(i * t.n_in + j, k - 1) = yf(i, k) / uf(j, k);
  }
  return t;
}

FrfTensor beam_frf_fft(const StructuralModel& m, const BeamConfig& cfg) {
  const int n_in = static_cast<int>(m.input_dofs.size());
  FrfTensor t;
  for (int j = 0; j < n_in; ++j) {
    TimeHistories th = simulate_impulse(m, cfg, j);
    const FrfTensor col = estimate_frf(th);  // n_out x n_in, only column j valid
    if (j == 0) {
      t = col;
    } else {
      for (int i = 0; i < t.n_out; ++i)
        t.values.row(i * t.n_in + j) = col.values.row(i * col.n_in + j);
    }
  }
  return t;
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  return base ^ splitmix64(splitmix64(a) + 0x100000001b3ULL * (b + 1));
}

Vec add_awgn(const Vec& signal, double percent, std::uint64_t seed) {
  if (percent < 0) throw PreconditionError("add_awgn: percent must be >= 0");
  if (percent == 0.0) return signal;
  const double mean = signal.mean();
  const double sd = std::sqrt((signal.array() - mean).square().mean());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Vec out(signal.size());
  const double scale = percent / 100.0 * sd;
  for (Eigen::Index k = 0; k < signal.size(); ++k)
    out[k] = signal[k] + scale * gauss(rng);
  return out;
}

Mat add_awgn(const Mat& channels, double percent, std::uint64_t seed) {
  Mat out(channels.rows(), channels.cols());
  for (Eigen::Index c = 0; c < channels.rows(); ++c)
    out.row(c) = add_awgn(Vec(channels.row(c)), percent,
                          derive_seed(seed, static_cast<std::uint64_t>(c), 0x5eedULL));
  return out;
}

Mat periodogram(const Mat& channels, double fs_hz, Vec* freq_hz_out) {
  const int n_samp = static_cast<int>(channels.cols());
  const int n_keep = n_samp / 2;
  const CMat spec = rfft_rows(channels);
  Mat psd(channels.rows(), n_keep);
  const double scale = 1.0 / (fs_hz * n_samp);
  for (Eigen::Index r = 0; r < channels.rows(); ++r)
    for (int k = 1; k <= n_keep; ++k) {
      const double one_sided = (k == n_samp - k) ? 1.0 : 2.0;
      psd(r, k - 1) = one_sided * scale * std::norm(spec(r, k));
    }
  if (freq_hz_out) *freq_hz_out = fft_frequency_grid(fs_hz, n_samp);
  return psd;
}

BeamConfig read_beam_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file: " + path.string());
  BeamConfig cfg;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw IoError("config line " + std::to_string(line_no) + ": expected key=value");
    std::string key = line.substr(first, eq - first);
    key.erase(key.find_last_not_of(" \t") + 1);
    std::string value = line.substr(eq + 1);
    const auto vfirst = value.find_first_not_of(" \t");
    value = (vfirst == std::string::npos) ? "" : value.substr(vfirst);
    value.erase(value.find_last_not_of(" \t\r") + 1);
    try {
      if (key == "length_m") cfg.length_m = std::stod(value);
      else if (key == "b_ext_m") cfg.b_ext_m = std::stod(value);
      else if (key == "h_ext_m") cfg.h_ext_m = std::stod(value);
      else if (key == "wall_t_m") cfg.wall_t_m = std::stod(value);
      else if (key == "rho_kg_m3") cfg.rho_kg_m3 = std::stod(value);
      else if (key == "e_pa") cfg.e_pa = std::stod(value);
      else if (key == "nu") cfg.nu = std::stod(value);
      else if (key == "n_elem") cfg.n_elem = std::stoi(value);
      else if (key == "zeta_all") cfg.zeta_all = std::stod(value);
      else if (key == "fs_hz") cfg.fs_hz = std::stod(value);
      else if (key == "duration_s") cfg.duration_s = std::stod(value);
      else
        throw IoError("config line " + std::to_string(line_no) +
                      ": unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw IoError("config line " + std::to_string(line_no) +
                    ": cannot parse value '" + value + "'");
    }
  }
  cfg.validate();
  return cfg;
}

}  // namespace frvf
