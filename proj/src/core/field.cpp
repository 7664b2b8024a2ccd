#include "field.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

#include "error.hpp"

namespace fdi {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::format: return "format";
    case ErrorKind::degenerate_grid: return "degenerate_grid";
    case ErrorKind::unstable: return "unstable";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::degenerate_system: return "degenerate_system";
    case ErrorKind::io: return "io";
  }
  return "unknown";
}

char axis_char(Axis a) noexcept {
  static constexpr std::array<char, 4> names{'x', 'y', 'z', 't'};
  return names[static_cast<std::size_t>(a)];
}

Axis parse_axis(char c) {
  switch (c) {
    case 'x': return Axis::x;
    case 'y': return Axis::y;
    case 'z': return Axis::z;
    case 't': return Axis::t;
    default: fail(ErrorKind::invalid_argument, std::string("unknown axis label '") + c + "'");
  }
}

Field::Field(std::vector<std::size_t> dims, std::vector<double> spacings,
             std::vector<Axis> labels, std::vector<double> data)
    : dims_(std::move(dims)),
      spacings_(std::move(spacings)),
      labels_(std::move(labels)),
      data_(std::move(data)) {
  const std::size_t n = dims_.size();
  if (n < 2 || n > kMaxAxes)
    fail(ErrorKind::invalid_argument,
         "field needs between 2 and 4 axes, got " + std::to_string(n));
  if (spacings_.size() != n || labels_.size() != n)
    fail(ErrorKind::invalid_argument, "dims, spacings and labels differ in length");
  if (labels_.back() != Axis::t)
    fail(ErrorKind::invalid_argument, "time axis must be last");
  for (std::size_t a = 0; a + 1 < n; ++a) {
    if (labels_[a] == Axis::t)
      fail(ErrorKind::invalid_argument, "time label on a spatial axis");
    for (std::size_t b = 0; b < a; ++b)
      if (labels_[a] == labels_[b])
        fail(ErrorKind::invalid_argument, "duplicate axis label");
  }
  std::size_t total = 1;
  for (std::size_t a = 0; a < n; ++a) {
    if (dims_[a] == 0) fail(ErrorKind::invalid_argument, "zero-length axis");
    if (!(spacings_[a] > 0.0) || !std::isfinite(spacings_[a]))
      fail(ErrorKind::invalid_argument, "spacings must be positive and finite");
    if (total > std::numeric_limits<std::size_t>::max() / dims_[a])
      fail(ErrorKind::invalid_argument, "dimension product overflows");
    total *= dims_[a];
  }
  if (total != data_.size())
    fail(ErrorKind::invalid_argument, "data length " + std::to_string(data_.size()) +
                                          " does not match product of dims " +
                                          std::to_string(total));
  if (!std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); }))
    fail(ErrorKind::invalid_argument, "field contains non-finite samples");
  strides_.assign(n, 1);
  for (std::size_t a = n - 1; a > 0; --a) strides_[a - 1] = strides_[a] * dims_[a];
}

std::optional<std::size_t> Field::axis_index(Axis a) const noexcept {
  for (std::size_t i = 0; i < labels_.size(); ++i)
    if (labels_[i] == a) return i;
  return std::nullopt;
}

Field Field::with_data(std::vector<double> data) const {
  return Field(dims_, spacings_, labels_, std::move(data));
}

FieldStats field_stats(const Field& f) {
  const auto d = f.data();
  const double n = static_cast<double>(d.size());
  FieldStats s;
  s.min = d[0];
  s.max = d[0];
  double sum = 0.0;
  for (double v : d) {
    sum += v;
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
  }
  s.mean = sum / n;
  double ss = 0.0;
  for (double v : d) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  // Rounding can put the mean a hair outside [min, max] for constant data.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

Field trim_interior(const Field& f, std::span<const Margin> margins) {
  const std::size_t n = f.rank();
  if (margins.size() != n)
    fail(ErrorKind::invalid_argument, "trim_interior needs one margin pair per axis");
  std::vector<std::size_t> out_dims(n);
  for (std::size_t a = 0; a < n; ++a) {
    const std::size_t cut = margins[a].lo + margins[a].hi;
    if (cut >= f.dims()[a] || f.dims()[a] - cut < 4)
      fail(ErrorKind::degenerate_grid,
           "margins on axis " + std::string(1, axis_char(f.labels()[a])) +
               " leave fewer than 4 samples");
    out_dims[a] = f.dims()[a] - cut;
  }
  std::size_t total = 1;
  for (auto d : out_dims) total *= d;
  std::vector<double> out(total);
  const auto src = f.data();
  const std::size_t inner = out_dims[n - 1];
  std::vector<std::size_t> idx(n, 0);  // output multi-index over all but last axis
  for (std::size_t o = 0; o < total; o += inner) {
    std::size_t base = margins[n - 1].lo;
    for (std::size_t a = 0; a + 1 < n; ++a) base += (idx[a] + margins[a].lo) * f.stride(a);
    std::copy_n(src.begin() + static_cast<std::ptrdiff_t>(base), inner,
                out.begin() + static_cast<std::ptrdiff_t>(o));
    for (std::size_t a = n - 1; a-- > 0;) {
      if (++idx[a] < out_dims[a]) break;
      idx[a] = 0;
    }
  }
  return Field(std::move(out_dims), f.spacings(), f.labels(), std::move(out));
}

namespace {

constexpr std::array<char, 4> kMagic{'F', 'D', 'I', '1'};

template <typename T>
void put(std::vector<std::uint8_t>& buf, T value) {
  std::array<std::uint8_t, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  buf.insert(buf.end(), bytes.begin(), bytes.end());
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  template <typename T>
  T get(const char* what) {
    if (bytes_.size() - pos_ < sizeof(T)) error(std::string("truncated while reading ") + what);
    std::array<std::uint8_t, sizeof(T)> raw;
    std::memcpy(raw.data(), bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(raw.begin(), raw.end());
    T value;
    std::memcpy(&value, raw.data(), sizeof(T));
    pos_ += sizeof(T);
    return value;
  }

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  [[noreturn]] void error(const std::string& msg) const {
    std::ostringstream os;
    os << "field bundle: " << msg << " at byte offset " << pos_;
    fail(ErrorKind::format, os.str());
  }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> encode_field(const Field& f) {
  std::vector<std::uint8_t> buf;
  buf.reserve(5 + f.rank() * 17 + f.size() * 8);
  buf.insert(buf.end(), kMagic.begin(), kMagic.end());
  put<std::uint8_t>(buf, static_cast<std::uint8_t>(f.rank()));
  for (auto d : f.dims()) put<std::uint64_t>(buf, d);
  for (auto h : f.spacings()) put<double>(buf, h);
  for (auto l : f.labels()) put<std::uint8_t>(buf, static_cast<std::uint8_t>(l));
  for (double v : f.data()) put<double>(buf, v);
  return buf;
}

Field decode_field(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  for (char m : kMagic)
    if (r.get<char>("magic") != m) r.error("bad magic");
  const auto n = r.get<std::uint8_t>("axis count");
  if (n < 2 || n > kMaxAxes) r.error("axis count " + std::to_string(n) + " out of range");
  std::vector<std::size_t> dims(n);
  std::uint64_t total = 1;
  for (auto& d : dims) {
    const auto v = r.get<std::uint64_t>("dims");
    if (v == 0) r.error("empty axis");
    if (total > std::numeric_limits<std::uint64_t>::max() / 8 / v) r.error("dim overflow");
    total *= v;
    d = static_cast<std::size_t>(v);
  }
  std::vector<double> spacings(n);
  for (auto& h : spacings) h = r.get<double>("spacings");
  std::vector<Axis> labels(n);
  for (auto& l : labels) {
    const auto code = r.get<std::uint8_t>("axis labels");
    if (code > 3) r.error("unknown axis label code " + std::to_string(code));
    l = static_cast<Axis>(code);
  }
  if (r.remaining() < total * 8) r.error("truncated payload");
  if (r.remaining() > total * 8) r.error("trailing bytes after payload");
  std::vector<double> data(static_cast<std::size_t>(total));
  for (auto& v : data) v = r.get<double>("samples");
  try {
    return Field(std::move(dims), std::move(spacings), std::move(labels), std::move(data));
  } catch (const Error& e) {
    fail(ErrorKind::format, std::string("field bundle: ") + e.what());
  }
}

void write_field(const Field& f, const std::filesystem::path& path) {
  const auto buf = encode_field(f);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::io, "cannot open " + path.string() + " for writing");
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) fail(ErrorKind::io, "write failed for " + path.string());
}

Field read_field(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorKind::io, "cannot open " + path.string());
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_field(buf);
}

std::filesystem::path sidecar_path(const std::filesystem::path& bundle) {
  auto p = bundle;
  p.replace_extension(".json");
  return p;
}

}  // namespace fdi
