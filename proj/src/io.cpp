#include "sptcov/io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace sptcov {

namespace {

static_assert(std::endian::native == std::endian::little || std::endian::native == std::endian::big);

template <class T>
void put_le(std::string& out, T v) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U u;
  std::memcpy(&u, &v, sizeof u);
  for (std::size_t i = 0; i < sizeof u; ++i) out.push_back(static_cast<char>((u >> (8 * i)) & 0xFFu));
}

template <class T>
T get_le(std::string_view in, std::size_t off) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint16_t>>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof u; ++i)
    u |= static_cast<U>(static_cast<U>(static_cast<unsigned char>(in[off + i])) << (8 * i));
  T v;
  std::memcpy(&v, &u, sizeof v);
  return v;
}

}  // namespace

std::string encode_stack(const SampleStack& s) {
  std::string out(kStackMagic);
  put_le<std::uint16_t>(out, kStackVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.n()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.k1()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(s.k2()));
  put_le<std::uint32_t>(out, s.centered() ? kStackCentered : 0u);
  out.reserve(out.size() + s.data().size() * 8);
  for (double v : s.data()) put_le<double>(out, v);
  return out;
}

SampleStack decode_stack(std::string_view bytes) {
  if (bytes.size() < kStackMagic.size() || bytes.substr(0, kStackMagic.size()) != kStackMagic) {
    std::size_t off = 0;
    while (off < std::min(bytes.size(), kStackMagic.size()) && bytes[off] == kStackMagic[off]) ++off;
    throw FormatError("stack file: bad magic, expected \"SPTC1\"", off);
  }
  if (bytes.size() < kStackHeaderBytes) throw FormatError("stack file: truncated header", bytes.size());
  const auto version = get_le<std::uint16_t>(bytes, 5);
  if (version != kStackVersion) throw FormatError("stack file: unsupported version " + std::to_string(version), 5);
  const auto n = get_le<std::uint32_t>(bytes, 7);
  const auto k1 = get_le<std::uint32_t>(bytes, 11);
  const auto k2 = get_le<std::uint32_t>(bytes, 15);
  const auto flags = get_le<std::uint32_t>(bytes, 19);
  if (n == 0) throw FormatError("stack file: n must be >= 1", 7);
  if (k1 == 0) throw FormatError("stack file: k1 must be >= 1", 11);
  if (k2 == 0) throw FormatError("stack file: k2 must be >= 1", 15);
  if (flags & ~kStackCentered) throw FormatError("stack file: unknown flag bits", 19);
  const std::uint64_t count = std::uint64_t{n} * k1 * k2;
  const std::uint64_t expected = kStackHeaderBytes + count * 8;
  if (bytes.size() != expected)
    throw FormatError("stack file: payload has " + std::to_string(bytes.size() - kStackHeaderBytes) +
                          " bytes, expected " + std::to_string(count * 8),
                      std::min<std::uint64_t>(bytes.size(), expected));
  std::vector<double> data(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = get_le<double>(bytes, kStackHeaderBytes + 8 * i);
    if (!std::isfinite(data[i])) throw FormatError("stack file: non-finite value", kStackHeaderBytes + 8 * i);
  }
  return SampleStack(n, k1, k2, std::move(data), (flags & kStackCentered) != 0);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open '" + path.string() + "' for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

void write_stack(const std::filesystem::path& path, const SampleStack& s) { write_file(path, encode_stack(s)); }
SampleStack read_stack(const std::filesystem::path& path) { return decode_stack(read_file(path)); }

std::string hexfloat(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  return std::string(buf, res.ptr);
}

double parse_hexfloat(std::string_view s) {
  bool neg = false;
  if (!s.empty() && s.front() == '-') {
    neg = true;
    s.remove_prefix(1);
  }
  if (s.starts_with("0x") || s.starts_with("0X")) s.remove_prefix(2);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v, std::chars_format::hex);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw FormatError("invalid hexadecimal float '" + std::string(s) + "'", static_cast<std::size_t>(res.ptr - s.data()));
  return neg ? -v : v;
}

namespace {

using nlohmann::json;

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) a.push_back(hexfloat(m(i, j)));
  return a;
}

Matrix matrix_from_json(const json& a, Index rows, Index cols, const std::string& field) {
  if (!a.is_array() || static_cast<Index>(a.size()) != rows * cols)
    throw FormatError("model file: field '" + field + "' must hold " + std::to_string(rows * cols) + " values", 0);
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) {
      const json& v = a[static_cast<std::size_t>(i * cols + j)];
      if (v.is_string())
        m(i, j) = parse_hexfloat(v.get<std::string>());
      else if (v.is_number())
        m(i, j) = v.get<double>();
      else
        throw FormatError("model file: non-numeric entry in '" + field + "'", static_cast<std::size_t>(i * cols + j));
    }
  return m;
}

template <class T>
T require(const json& j, const char* key) {
  if (!j.contains(key)) throw FormatError(std::string("model file: missing field '") + key + "'", 0);
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw FormatError(std::string("model file: field '") + key + "' has the wrong type", 0);
  }
}

}  // namespace

nlohmann::json model_to_json(const SepPlusBandedCov& c, const nlohmann::json& provenance) {
  json j;
  j["format"] = "sptcov-model";
  j["version"] = kModelVersion;
  j["k1"] = c.k1();
  j["k2"] = c.k2();
  j["d"] = c.d.d;
  j["a2_trace_normalized"] = c.a2_trace_normalized;
  j["a1"] = matrix_json(c.a1.matrix());
  j["a2"] = matrix_json(c.a2.matrix());
  json b;
  if (const auto* s = c.symbol()) {
    b["kind"] = "stationary";
    if (s->band()) b["band"] = *s->band();
    b["lags"] = matrix_json(s->lags());
  } else if (const auto* t = c.banded_tensor()) {
    b["kind"] = "banded";
    b["band"] = t->band().d;
    json e = json::array();
    for (double v : t->raw()) e.push_back(hexfloat(v));
    b["entries"] = std::move(e);
  } else {
    b["kind"] = "none";
  }
  j["banded"] = std::move(b);
  j["provenance"] = provenance;
  return j;
}

SepPlusBandedCov model_from_json(const nlohmann::json& j) {
  if (!j.is_object() || require<std::string>(j, "format") != "sptcov-model")
    throw FormatError("model file: not an sptcov model document", 0);
  const int version = require<int>(j, "version");
  if (version != kModelVersion) throw FormatError("model file: unsupported version " + std::to_string(version), 0);
  const Index k1 = require<Index>(j, "k1");
  const Index k2 = require<Index>(j, "k2");
  if (k1 < 1 || k2 < 1) throw FormatError("model file: k1 and k2 must be >= 1", 0);
  SepPlusBandedCov c;
  c.d = Bandwidth{require<Index>(j, "d")};
  check_bandwidth(c.d, std::min(k1, k2));
  c.a2_trace_normalized = j.value("a2_trace_normalized", true);
  c.a1 = SymMatrix(matrix_from_json(j.at("a1"), k1, k1, "a1"));
  c.a2 = SymMatrix(matrix_from_json(j.contains("a2") ? j.at("a2") : json(), k2, k2, "a2"));
  const json b = j.value("banded", json{{"kind", "none"}});
  const std::string kind = require<std::string>(b, "kind");
  if (kind == "stationary") {
    std::optional<Index> band;
    if (b.contains("band")) band = b.at("band").get<Index>();
    c.banded = StationarySymbol(k1, k2, matrix_from_json(b.at("lags"), 2 * k1 - 1, 2 * k2 - 1, "lags"), band);
  } else if (kind == "banded") {
    BandedTensor t(k1, k2, Bandwidth{require<Index>(b, "band")});
    const json& e = b.at("entries");
    if (!e.is_array() || e.size() != t.raw().size())
      throw FormatError("model file: banded entries have the wrong length", 0);
    for (std::size_t i = 0; i < e.size(); ++i)
      t.raw()[i] = e[i].is_string() ? parse_hexfloat(e[i].get<std::string>()) : e[i].get<double>();
    c.banded = std::move(t);
  } else if (kind != "none") {
    throw FormatError("model file: unknown banded kind '" + kind + "'", 0);
  }
  return c;
}

void write_model(const std::filesystem::path& path, const SepPlusBandedCov& c, const nlohmann::json& provenance) {
  write_file(path, model_to_json(c, provenance).dump(1) + "\n");
}

SepPlusBandedCov read_model(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError("model file: invalid JSON", e.byte);
  }
  return model_from_json(j);
}

std::string format_csv(const Matrix& m) {
  std::string out;
  char buf[64];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) out.push_back(',');
      const auto res = std::to_chars(buf, buf + sizeof buf, m(i, j));
      out.append(buf, res.ptr);
    }
    out.push_back('\n');
  }
  return out;
}

Matrix parse_csv(std::string_view text) {
  std::vector<std::vector<double>> rows;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    if (!line.empty()) {
      std::vector<double> row;
      std::size_t c = 0;
      while (true) {
        std::size_t comma = line.find(',', c);
        std::string_view field = line.substr(c, comma == std::string_view::npos ? std::string_view::npos : comma - c);
        while (!field.empty() && field.front() == ' ') field.remove_prefix(1);
        while (!field.empty() && field.back() == ' ') field.remove_suffix(1);
        if (!field.empty() && field.front() == '+') field.remove_prefix(1);
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v))
          throw FormatError("csv: cannot parse '" + std::string(field) + "' on line " + std::to_string(line_no),
                            pos + c);
        row.push_back(v);
        if (comma == std::string_view::npos) break;
        c = comma + 1;
      }
      if (!rows.empty() && row.size() != rows.front().size())
        throw FormatError("csv: line " + std::to_string(line_no) + " has " + std::to_string(row.size()) +
                              " fields, expected " + std::to_string(rows.front().size()),
                          pos);
      rows.push_back(std::move(row));
    }
    pos = end + 1;
  }
  if (rows.empty()) throw FormatError("csv: no data", 0);
  Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  return m;
}

void write_csv(const std::filesystem::path& path, const Matrix& m) { write_file(path, format_csv(m)); }

Matrix read_csv(const std::filesystem::path& path) {
  try {
    return parse_csv(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what(), e.offset());
  }
}

SampleStack import_csv_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) throw Error("'" + dir.string() + "' is not a directory");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .csv files in '" + dir.string() + "'");
  std::vector<Matrix> samples;
  for (const auto& f : files) {
    samples.push_back(read_csv(f));
    if (samples.back().rows() != samples.front().rows() || samples.back().cols() != samples.front().cols())
      throw ShapeMismatch(f.string() + " is " + std::to_string(samples.back().rows()) + "x" +
                          std::to_string(samples.back().cols()) + ", expected " +
                          std::to_string(samples.front().rows()) + "x" + std::to_string(samples.front().cols()));
  }
  return SampleStack(samples);
}

void export_csv_dir(const SampleStack& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  char name[32];
  for (Index n = 0; n < s.n(); ++n) {
    std::snprintf(name, sizeof name, "sample_%06ld.csv", static_cast<long>(n));
    write_csv(dir / name, Matrix(s.sample(n)));
  }
}

std::string content_hash(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace sptcov
