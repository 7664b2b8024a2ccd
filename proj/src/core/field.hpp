#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdi {

enum class Axis : std::uint8_t { x = 0, y = 1, z = 2, t = 3 };

char axis_char(Axis a) noexcept;
Axis parse_axis(char c);

inline constexpr std::size_t kMaxAxes = 4;

/// Real samples on a uniform grid. Spatial axes come first, time is the last
/// axis, and data is row-major with the last axis varying fastest.
/// Immutable once constructed.
class Field {
 public:
  Field(std::vector<std::size_t> dims, std::vector<double> spacings,
        std::vector<Axis> labels, std::vector<double> data);

  std::size_t rank() const noexcept { return dims_.size(); }
  std::size_t spatial_rank() const noexcept { return dims_.size() - 1; }
  std::size_t size() const noexcept { return data_.size(); }

  const std::vector<std::size_t>& dims() const noexcept { return dims_; }
  const std::vector<double>& spacings() const noexcept { return spacings_; }
  const std::vector<Axis>& labels() const noexcept { return labels_; }
  std::span<const double> data() const noexcept { return data_; }

  /// Element stride of an axis in the flat buffer.
  std::size_t stride(std::size_t axis) const noexcept { return strides_[axis]; }
  std::optional<std::size_t> axis_index(Axis a) const noexcept;
  std::size_t time_axis() const noexcept { return dims_.size() - 1; }

  double operator[](std::size_t i) const noexcept { return data_[i]; }

  /// Same geometry, new samples.
  Field with_data(std::vector<double> data) const;

  bool operator==(const Field&) const = default;

 private:
  std::vector<std::size_t> dims_;
  std::vector<double> spacings_;
  std::vector<Axis> labels_;
  std::vector<double> data_;
  std::vector<std::size_t> strides_;
};

struct FieldStats {
  double mean = 0.0;
  double std = 0.0;  // population (N denominator)
  double min = 0.0;
  double max = 0.0;
};

FieldStats field_stats(const Field& f);

struct Margin {
  std::size_t lo = 0;
  std::size_t hi = 0;
  bool operator==(const Margin&) const = default;
};

/// Removes `margins[a].lo` leading and `margins[a].hi` trailing samples along
/// every axis. Each resulting axis must keep at least 4 samples.
Field trim_interior(const Field& f, std::span<const Margin> margins);

// Bundle I/O. See README for the byte layout.
Field read_field(const std::filesystem::path& path);
void write_field(const Field& f, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_field(const Field& f);
Field decode_field(std::span<const std::uint8_t> bytes);

/// `<stem>.json` next to a bundle path.
std::filesystem::path sidecar_path(const std::filesystem::path& bundle);

}  // namespace fdi
