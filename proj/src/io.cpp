#include "frvf/io.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace frvf {

std::string format_float17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", value);
  return buf;
}

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open: " + path.string());
  return in;
}

const char* unit_name(UnitKind k) {
  switch (k) {
    case UnitKind::receptance: return "receptance";
    case UnitKind::mobility: return "mobility";
    case UnitKind::inertance: return "inertance";
  }
  return "receptance";
}

UnitKind parse_unit(const std::string& s, int line_no) {
  if (s == "receptance") return UnitKind::receptance;
  if (s == "mobility") return UnitKind::mobility;
  if (s == "inertance") return UnitKind::inertance;
  throw IoError("line " + std::to_string(line_no) + ": unknown unit '" + s + "'");
}

// Strict field parsing; from_chars is locale-independent and round-trip
// exact, matching the 17-digit writer.
double parse_double(std::string_view field, int line_no) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw IoError("line " + std::to_string(line_no) + ": bad numeric field '" +
                  std::string(field) + "'");
  return v;
}

long parse_int(std::string_view field, int line_no) {
  long v = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr != end)
    throw IoError("line " + std::to_string(line_no) + ": bad integer field '" +
                  std::string(field) + "'");
  return v;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

}  // namespace

void write_frf_csv(const FrfTensor& t, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# frf-csv v1\n";
  out << "# n_out=" << t.n_out << " n_in=" << t.n_in
      << " n_freq=" << t.n_freq() << "\n";
  out << "# unit=" << unit_name(t.unit_kind) << "\n";
  for (int i = 0; i < t.n_out; ++i)
    for (int j = 0; j < t.n_in; ++j)
      for (int k = 0; k < t.n_freq(); ++k) {
        const Complex v = t.values(i * t.n_in + j, k);
        out << format_float17(t.freq_hz[k]) << ',' << (i + 1) << ',' << (j + 1)
            << ',' << format_float17(v.real()) << ',' << format_float17(v.imag())
            << '\n';
      }
  if (!out) throw IoError("write failed: " + path.string());
}

FrfTensor read_frf_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  std::string line;
  int line_no = 0;
  int n_out = -1, n_in = -1, n_freq = -1;
  UnitKind unit = UnitKind::receptance;
  bool saw_magic = false, saw_dims = false;

  struct Sample {
    double freq;
    int out, in;
    Complex value;
    int line_no;
  };
  std::vector<Sample> samples;

  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto first = body.find_first_not_of(' ');
      body = (first == std::string::npos) ? "" : body.substr(first);
      if (body == "frf-csv v1") {
        saw_magic = true;
      } else if (body.rfind("n_out=", 0) == 0) {
        if (std::sscanf(body.c_str(), "n_out=%d n_in=%d n_freq=%d", &n_out,
                        &n_in, &n_freq) != 3)
          throw IoError("line " + std::to_string(line_no) +
                        ": malformed dimension header");
        saw_dims = true;
      } else if (body.rfind("unit=", 0) == 0) {
        unit = parse_unit(body.substr(5), line_no);
      }
      continue;
    }
    const auto fields = split_fields(line);
    if (fields.size() != 5)
      throw IoError("line " + std::to_string(line_no) +
                    ": expected 5 fields freq_hz,out_idx,in_idx,re,im");
    Sample s;
    s.freq = parse_double(fields[0], line_no);
    s.out = static_cast<int>(parse_int(fields[1], line_no));
    s.in = static_cast<int>(parse_int(fields[2], line_no));
    s.value = Complex(parse_double(fields[3], line_no),
                      parse_double(fields[4], line_no));
    s.line_no = line_no;
    samples.push_back(s);
  }
  if (!saw_magic) throw IoError(path.string() + ": missing '# frf-csv v1' header");
  if (!saw_dims) throw IoError(path.string() + ": missing dimension header");
  if (n_out < 1 || n_in < 1 || n_freq < 2)
    throw IoError(path.string() + ": invalid declared dimensions");

  const size_t expected = static_cast<size_t>(n_out) * n_in * n_freq;
  if (samples.size() != expected)
    throw IoError("incomplete tensor: expected " + std::to_string(expected) +
                  " samples, found " + std::to_string(samples.size()));

  // Rows may appear in any order; sort by (out, in, freq) keeping original
  // line numbers for error reporting.
  std::stable_sort(samples.begin(), samples.end(),
                   [](const Sample& a, const Sample& b) {
                     return std::tie(a.out, a.in, a.freq) <
                            std::tie(b.out, b.in, b.freq);
                   });

  FrfTensor t;
  t.n_out = n_out;
  t.n_in = n_in;
  t.unit_kind = unit;
  t.freq_hz.resize(n_freq);
  t.values.resize(n_out * n_in, n_freq);
  size_t idx = 0;
  for (int i = 1; i <= n_out; ++i)
    for (int j = 1; j <= n_in; ++j)
      for (int k = 0; k < n_freq; ++k, ++idx) {
        const Sample& s = samples[idx];
        if (s.out != i || s.in != j)
          throw IoError("line " + std::to_string(s.line_no) +
                        ": unexpected channel (" + std::to_string(s.out) + "," +
                        std::to_string(s.in) + "); tensor is incomplete or has "
                        "duplicate samples");
        if (k > 0 && s.freq <= t.freq_hz[k - 1] && i == 1 && j == 1)
          throw IoError("non-monotone frequency grid at line " +
                        std::to_string(s.line_no));
        if (i == 1 && j == 1) {
          t.freq_hz[k] = s.freq;
        } else if (s.freq != t.freq_hz[k]) {
          throw IoError("line " + std::to_string(s.line_no) +
                        ": frequency grid differs between channels");
        }
        t.values((i - 1) * n_in + (j - 1), k) = s.value;
      }
  try {
    t.validate();
  } catch (const PreconditionError& err) {
    throw IoError(path.string() + ": " + err.what());
  }
  return t;
}

void write_th_csv(const Mat& channels, double fs_hz, ThKind kind,
                  const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "# th-csv v1\n";
  out << "# fs_hz=" << format_float17(fs_hz) << " n_ch=" << channels.rows()
      << " n_samp=" << channels.cols()
      << " kind=" << (kind == ThKind::output ? "output" : "input") << "\n";
  for (Eigen::Index c = 0; c < channels.rows(); ++c)
    for (Eigen::Index k = 0; k < channels.cols(); ++k)
      out << format_float17(k / fs_hz) << ',' << (c + 1) << ','
          << format_float17(channels(c, k)) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

ThRecord read_th_csv(const std::filesystem::path& path) {
  auto in = open_in(path);
  ThRecord rec;
  std::string line;
  int line_no = 0;
  long n_ch = -1, n_samp = -1;
  bool saw_magic = false;
  std::vector<std::tuple<long, long, double>> rows;  // (ch, k, value)
  std::vector<long> next_sample;
  while (std::getline(in, line)) {
    ++line_no;
    line = strip_cr(line);
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::string body = line.substr(1);
      const auto first = body.find_first_not_of(' ');
      body = (first == std::string::npos) ? "" : body.substr(first);
      if (body == "th-csv v1") {
        saw_magic = true;
      } else if (body.rfind("fs_hz=", 0) == 0) {
        char kind_buf[16] = {0};
        if (std::sscanf(body.c_str(), "fs_hz=%lf n_ch=%ld n_samp=%ld kind=%15s",
                        &rec.fs_hz, &n_ch, &n_samp, kind_buf) != 4)
          throw IoError("line " + std::to_string(line_no) +
                        ": malformed th-csv header");
        const std::string kind(kind_buf);
        if (kind == "output") rec.kind = ThKind::output;
        else if (kind == "input") rec.kind = ThKind::input;
        else
          throw IoError("line " + std::to_string(line_no) +
                        ": kind must be output or input");
        if (n_ch < 1 || n_samp < 1 || rec.fs_hz <= 0)
          throw IoError("line " + std::to_string(line_no) +
                        ": invalid th-csv dimensions");
        rec.channels.resize(n_ch, n_samp);
        next_sample.assign(n_ch, 0);
      }
      continue;
    }
    if (n_ch < 0)
      throw IoError("line " + std::to_string(line_no) + ": data before header");
    const auto fields = split_fields(line);
    if (fields.size() != 3)
      throw IoError("line " + std::to_string(line_no) +
                    ": expected t_s,ch_idx,value");
    parse_double(fields[0], line_no);  // time column is informative only
    const long ch = parse_int(fields[1], line_no);
    if (ch < 1 || ch > n_ch)
      throw IoError("line " + std::to_string(line_no) + ": channel out of range");
    const long k = next_sample[ch - 1]++;
    if (k >= n_samp)
      throw IoError("line " + std::to_string(line_no) +
                    ": more samples than declared for channel " +
                    std::to_string(ch));
    rec.channels(ch - 1, k) = parse_double(fields[2], line_no);
  }
  if (!saw_magic) throw IoError(path.string() + ": missing '# th-csv v1' header");
  for (long c = 0; c < n_ch; ++c)
    if (next_sample[c] != n_samp)
      throw IoError(path.string() + ": channel " + std::to_string(c + 1) +
                    " has " + std::to_string(next_sample[c]) + " of " +
                    std::to_string(n_samp) + " samples");
  return rec;
}

void write_modes_json(const ModalSet& set, const std::filesystem::path& path) {
  nlohmann::json arr = nlohmann::json::array();
  for (const Mode& m : set.modes) {
    nlohmann::json obj;
    obj["f_hz"] = m.f_hz;
    obj["zeta"] = m.zeta;
    std::vector<double> re(m.shape.size()), im(m.shape.size());
    for (Eigen::Index i = 0; i < m.shape.size(); ++i) {
      re[i] = m.shape[i].real();
      im[i] = m.shape[i].imag();
    }
    obj["shape_re"] = re;
    obj["shape_im"] = im;
    obj["source_orders"] = m.source_orders;
    arr.push_back(std::move(obj));
  }
  auto out = open_out(path);
  out << arr.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

ModalSet read_modes_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json arr;
  try {
    in >> arr;
  } catch (const nlohmann::json::exception& err) {
    throw IoError(path.string() + ": " + err.what());
  }
  if (!arr.is_array())
    throw IoError(path.string() + ": modes-json v1 must be a JSON array");
  ModalSet set;
  try {
    for (const auto& obj : arr) {
      Mode m;
      m.f_hz = obj.at("f_hz").get<double>();
      m.zeta = obj.at("zeta").get<double>();
      const auto re = obj.at("shape_re").get<std::vector<double>>();
      const auto im = obj.at("shape_im").get<std::vector<double>>();
      if (re.size() != im.size())
        throw IoError(path.string() + ": shape_re/shape_im length mismatch");
      m.shape.resize(re.size());
      for (size_t i = 0; i < re.size(); ++i) m.shape[i] = Complex(re[i], im[i]);
      if (obj.contains("source_orders"))
        m.source_orders = obj.at("source_orders").get<std::vector<int>>();
      set.modes.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception& err) {
    throw IoError(path.string() + ": " + err.what());
  }
  return set;
}

void write_stab_csv(const StabilizationDiagram& diag,
                    const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "order,f_hz,zeta,freq_stable,damp_stable,shape_stable\n";
  for (const StabEntry& e : diag.entries)
    out << e.order << ',' << format_float17(e.mode.f_hz) << ','
        << format_float17(e.mode.zeta) << ',' << (e.freq_stable ? 1 : 0) << ','
        << (e.damp_stable ? 1 : 0) << ',' << (e.shape_stable ? 1 : 0) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace frvf
