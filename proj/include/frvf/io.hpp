#pragma once

#include <filesystem>
#include <string>

#include "frvf/beam.hpp"
#include "frvf/frf_tensor.hpp"
#include "frvf/modal.hpp"

namespace frvf {

/// 17-significant-digit scientific notation; round-trip exact for doubles.
std::string format_float17(double value);

/// frf-csv v1: `# frf-csv v1`, `# n_out=.. n_in=.. n_freq=..`, `# unit=..`,
/// then `freq_hz,out_idx,in_idx,re,im` data lines with 1-based indices.
void write_frf_csv(const FrfTensor& t, const std::filesystem::path& path);
FrfTensor read_frf_csv(const std::filesystem::path& path);

enum class ThKind { output, input };

/// th-csv v1: `# th-csv v1`, `# fs_hz=.. n_ch=.. n_samp=.. kind=..`, then
/// `t_s,ch_idx,value` data lines. One file per signal kind.
void write_th_csv(const Mat& channels, double fs_hz, ThKind kind,
                  const std::filesystem::path& path);
struct ThRecord {
  double fs_hz = 0.0;
  Mat channels;
  ThKind kind = ThKind::output;
};
ThRecord read_th_csv(const std::filesystem::path& path);

/// modes-json v1: a JSON array of
/// {f_hz, zeta, shape_re[], shape_im[], source_orders[]}.
void write_modes_json(const ModalSet& set, const std::filesystem::path& path);
ModalSet read_modes_json(const std::filesystem::path& path);

/// stab-csv v1: `order,f_hz,zeta,freq_stable,damp_stable,shape_stable`.
void write_stab_csv(const StabilizationDiagram& diag,
                    const std::filesystem::path& path);

}  // namespace frvf
