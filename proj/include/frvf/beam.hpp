#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "frvf/frf_tensor.hpp"
#include "frvf/types.hpp"

namespace frvf {

/// Cantilever beam with a rectangular hollow cross-section, discretised with
/// Euler-Bernoulli elements bending in two orthogonal planes. Defaults match
/// the built-in validation case (aluminium, 2 m span, 6 elements, 3% modal
/// damping, impulse test at 1 kHz for 30 s).
struct BeamConfig {
  double length_m = 2.0;
  double b_ext_m = 0.02;
  double h_ext_m = 0.05;
  double wall_t_m = 0.005;
  double rho_kg_m3 = 2700.0;
  double e_pa = 69e9;
  double nu = 0.3;
  int n_elem = 6;
  double zeta_all = 0.03;
  double fs_hz = 1000.0;
  double duration_s = 30.0;

  void validate() const;
};

struct SectionProperties {
  double area;  // m^2
  double i_y;   // m^4, bending in the x-z plane
  double i_z;   // m^4, bending in the x-y plane
};

SectionProperties section_properties(const BeamConfig& cfg);

enum class DofDirection { z, y };
enum class DofKind { translation, rotation };

struct DofLabel {
  int node;  // 1-based free node index (node 0 is the clamped root)
  DofDirection direction;
  DofKind kind;
};

/// Assembled global matrices with the clamped root removed. Output channels
/// are the translational DoFs; the excitation DoFs are the z and y
/// translations of the first free node.
struct StructuralModel {
  Mat mass;
  Mat stiffness;
  Mat damping;  // zero until modal_damping_matrix is applied
  std::vector<DofLabel> dof_map;
  std::vector<int> output_dofs;
  std::vector<int> input_dofs;

  int n_dof() const { return static_cast<int>(mass.rows()); }
};

/// Mass-normalised eigensolution of K phi = omega^2 M phi, ascending omega.
struct EigenSolution {
  Vec omega;  // rad/s
  Mat phi;    // [n_dof, n_dof], Phi^T M Phi = I
};

StructuralModel assemble_beam(const BeamConfig& cfg);

EigenSolution eigen_modes(const StructuralModel& m);

/// C = M Phi diag(2 zeta omega_n) Phi^T M for mass-normalised Phi, i.e. a
/// uniform modal damping ratio projected back to physical coordinates.
Mat modal_damping_matrix(const StructuralModel& m, const EigenSolution& eig,
                         double zeta);

struct TimeHistories {
  double fs_hz = 0.0;
  Mat outputs;  // [n_out, n_samp], displacements
  Mat inputs;   // [n_in, n_samp], forces
};

/// Unit impulse (1 N for one sampling interval) on the given input DoF,
/// propagated by exact modal superposition of the modes below Nyquist and
/// sampled at cfg.fs_hz over cfg.duration_s. input_index = -1 applies the
/// impulse to every excitation DoF simultaneously.
TimeHistories simulate_impulse(const StructuralModel& m, const BeamConfig& cfg,
                               int input_index = -1);

/// Receptance synthesised from the full eigensolution:
/// H_ij = sum_n phi_n(i) phi_n(j) / (omega_n^2 - omega^2 + 2 i zeta omega_n omega).
FrfTensor synthesize_frf_analytic(const StructuralModel& m, const Vec& freq_hz,
                                  double zeta);

/// FFT-ratio FRF estimate H_ij(w_k) = FFT(output_i)(k) / FFT(input_j)(k) on
/// the grid k/T for k = 1..N/2, rectangular window, full record length.
FrfTensor estimate_frf(const TimeHistories& th);

/// Full per-input estimate: one single-input simulation per excitation DoF,
/// columns assembled into an [n_out x n_in] tensor.
FrfTensor beam_frf_fft(const StructuralModel& m, const BeamConfig& cfg);

/// The DFT grid used by estimate_frf (DC excluded): k / (n/fs), k = 1..n/2.
Vec fft_frequency_grid(double fs_hz, int n_samp);

/// signal + zero-mean Gaussian noise with std = (percent/100) * std(signal).
/// percent = 0 returns the signal unchanged, bit-exactly.
Vec add_awgn(const Vec& signal, double percent, std::uint64_t seed);

/// Per-channel variant; channel c uses a seed derived from (seed, c) so that
/// channels are independent and the result is reproducible.
Mat add_awgn(const Mat& channels, double percent, std::uint64_t seed);

/// Mixes a base seed with sweep cell indices (level, repetition, ...).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

/// One-sided periodogram PSD of each channel, DC excluded; grid as
/// fft_frequency_grid.
Mat periodogram(const Mat& channels, double fs_hz, Vec* freq_hz_out = nullptr);

/// Flat key=value file with all keys optional; unknown keys are an error.
BeamConfig read_beam_config(const std::filesystem::path& path);

}  // namespace frvf
