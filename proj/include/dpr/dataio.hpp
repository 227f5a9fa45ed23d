// Dataset ingestion and file formats.
//
//   IDX   big-endian MNIST distribution format (read)
//   SCTM  little-endian matrix container (read/write):
//           "SCTM" | version 0x01 | dtype | rows u32 | cols u32 | payload
//         dtype 0 = complex (re, im float64 pairs), 1 = float64, 2 = {0,1} bytes
//   P5    binary portable graymap, maxval 255 (write, plus a reader for checks)
//   CSV   '.' decimal separator, shortest round-trip formatting
#pragma once

#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dpr/model.hpp"

namespace dpr {

/// Malformed file content; offset is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Grayscale u8 images, one flattened image (row-major) per matrix row.
struct GrayImageSet {
  std::size_t height = 0;
  std::size_t width = 0;
  Matrix<std::uint8_t> pixels;

  std::size_t count() const { return pixels.rows(); }
};

/// Binary images, one flattened image per pattern.
struct BinaryImageSet {
  std::size_t height = 0;
  std::size_t width = 0;
  PatternSet images;

  std::size_t count() const { return images.count(); }
  std::size_t pixels() const { return height * width; }
};

struct LabelSet {
  std::vector<std::uint8_t> labels;
};

using IdxData = std::variant<GrayImageSet, LabelSet>;

namespace detail {

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

inline void put_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<std::uint8_t>(v >> (8 * k)));
}
inline std::uint32_t get_le32(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= std::uint32_t{b[at + k]} << (8 * k);
  return v;
}
inline void put_f64(std::vector<std::uint8_t>& out, double x) {
  const auto bits = std::bit_cast<std::uint64_t>(x);
  for (int k = 0; k < 8; ++k) out.push_back(static_cast<std::uint8_t>(bits >> (8 * k)));
}
inline double get_f64(std::span<const std::uint8_t> b, std::size_t at) {
  std::uint64_t bits = 0;
  for (int k = 0; k < 8; ++k) bits |= std::uint64_t{b[at + k]} << (8 * k);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

// ---------------------------------------------------------------- IDX

inline IdxData parse_idx(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 8) throw FormatError("IDX header truncated: " + std::to_string(bytes.size()) + " bytes", bytes.size());
  const std::uint32_t magic = detail::read_be32(bytes, 0);
  if (magic == 0x00000801u) {
    const std::uint32_t n = detail::read_be32(bytes, 4);
    const std::size_t expected = 8 + std::size_t{n};
    if (bytes.size() != expected) {
      throw FormatError("IDX label payload size mismatch: expected " + std::to_string(expected) +
                            " bytes, got " + std::to_string(bytes.size()),
                        std::min(bytes.size(), expected));
    }
    return LabelSet{{bytes.begin() + 8, bytes.end()}};
  }
  if (magic == 0x00000803u) {
    if (bytes.size() < 16) throw FormatError("IDX image header truncated", bytes.size());
    const std::size_t n = detail::read_be32(bytes, 4);
    const std::size_t rows = detail::read_be32(bytes, 8);
    const std::size_t cols = detail::read_be32(bytes, 12);
    const std::size_t expected = 16 + n * rows * cols;
    if (bytes.size() != expected) {
      throw FormatError("IDX image payload size mismatch: expected " + std::to_string(expected) +
                            " bytes, got " + std::to_string(bytes.size()),
                        std::min(bytes.size(), expected));
    }
    GrayImageSet set{rows, cols, Matrix<std::uint8_t>(n, rows * cols, std::vector<std::uint8_t>(bytes.begin() + 16, bytes.end()))};
    return set;
  }
  char hex[16];
  std::snprintf(hex, sizeof hex, "0x%08x", magic);
  throw FormatError(std::string("bad IDX magic ") + hex, 0);
}

inline IdxData load_idx(const std::filesystem::path& path) { return parse_idx(detail::read_file(path)); }

// ---------------------------------------------------------------- D1 / D2

namespace detail {

inline std::uint8_t binarize(std::uint8_t v) { return v / 255.0 >= 0.5 ? 1 : 0; }

inline BinaryImageSet binarize_set(const GrayImageSet& in) {
  Matrix<std::uint8_t> bits(in.count(), in.height * in.width);
  for (std::size_t k = 0; k < bits.size(); ++k) bits.data()[k] = binarize(in.pixels.data()[k]);
  return {in.height, in.width, PatternSet(std::move(bits))};
}

}  // namespace detail

/// Central 20x20 crop (rows and columns 4..23) of 28x28 images, binarized at
/// half scale. 20x20 inputs are only binarized.
inline BinaryImageSet make_d1(const GrayImageSet& images) {
  if (images.height == 20 && images.width == 20) return detail::binarize_set(images);
  if (images.height != 28 || images.width != 28) {
    throw ArgumentError("make_d1: expected 28x28 images, got " + std::to_string(images.height) + "x" +
                        std::to_string(images.width));
  }
  GrayImageSet crop{20, 20, Matrix<std::uint8_t>(images.count(), 400)};
  for (std::size_t k = 0; k < images.count(); ++k) {
    for (std::size_t r = 0; r < 20; ++r) {
      for (std::size_t c = 0; c < 20; ++c) crop.pixels(k, r * 20 + c) = images.pixels(k, (r + 4) * 28 + c + 4);
    }
  }
  return detail::binarize_set(crop);
}

/// Nearest-neighbour rescale of 28x28 images to 32x32, binarized at half
/// scale. 32x32 inputs are only binarized.
inline BinaryImageSet make_d2(const GrayImageSet& images) {
  if (images.height == 32 && images.width == 32) return detail::binarize_set(images);
  if (images.height != 28 || images.width != 28) {
    throw ArgumentError("make_d2: expected 28x28 images, got " + std::to_string(images.height) + "x" +
                        std::to_string(images.width));
  }
  std::array<std::size_t, 32> src{};
  for (std::size_t d = 0; d < 32; ++d) src[d] = (2 * d + 1) * 28 / 64;  // floor((d + 0.5) * 28 / 32)
  GrayImageSet scaled{32, 32, Matrix<std::uint8_t>(images.count(), 1024)};
  for (std::size_t k = 0; k < images.count(); ++k) {
    for (std::size_t r = 0; r < 32; ++r) {
      for (std::size_t c = 0; c < 32; ++c) scaled.pixels(k, r * 32 + c) = images.pixels(k, src[r] * 28 + src[c]);
    }
  }
  return detail::binarize_set(scaled);
}

// ---------------------------------------------------------------- SCTM

enum class Dtype : std::uint8_t { Complex = 0, Real = 1, Binary = 2 };

inline constexpr std::size_t kSctmHeaderBytes = 14;

template <class T>
constexpr Dtype dtype_of() {
  if constexpr (std::is_same_v<T, complex>) return Dtype::Complex;
  else if constexpr (std::is_same_v<T, double>) return Dtype::Real;
  else {
    static_assert(std::is_same_v<T, std::uint8_t>, "SCTM stores complex, double or binary bytes");
    return Dtype::Binary;
  }
}

template <class T>
std::vector<std::uint8_t> encode_matrix(const Matrix<T>& m) {
  if (m.rows() > 0xffffffffu || m.cols() > 0xffffffffu) throw ArgumentError("SCTM: dimension exceeds 32 bits");
  std::vector<std::uint8_t> out{'S', 'C', 'T', 'M', 0x01, static_cast<std::uint8_t>(dtype_of<T>())};
  detail::put_le32(out, static_cast<std::uint32_t>(m.rows()));
  detail::put_le32(out, static_cast<std::uint32_t>(m.cols()));
  for (const auto& v : m.data()) {
    if constexpr (std::is_same_v<T, complex>) {
      detail::put_f64(out, v.real());
      detail::put_f64(out, v.imag());
    } else if constexpr (std::is_same_v<T, double>) {
      detail::put_f64(out, v);
    } else {
      if (v > 1) throw ArgumentError("SCTM binary matrix holds a value outside {0,1}");
      out.push_back(v);
    }
  }
  return out;
}

using AnyMatrix = std::variant<Matrix<complex>, Matrix<double>, Matrix<std::uint8_t>>;

inline AnyMatrix decode_matrix(std::span<const std::uint8_t> b) {
  if (b.size() < kSctmHeaderBytes) throw FormatError("SCTM header truncated", b.size());
  if (std::memcmp(b.data(), "SCTM", 4) != 0) throw FormatError("bad SCTM magic", 0);
  if (b[4] != 0x01) throw FormatError("unsupported SCTM version " + std::to_string(b[4]), 4);
  if (b[5] > 2) throw FormatError("unknown SCTM dtype " + std::to_string(b[5]), 5);
  const auto dtype = static_cast<Dtype>(b[5]);
  const std::size_t rows = detail::get_le32(b, 6);
  const std::size_t cols = detail::get_le32(b, 10);
  const std::size_t width = dtype == Dtype::Complex ? 16 : dtype == Dtype::Real ? 8 : 1;
  const std::size_t expected = kSctmHeaderBytes + rows * cols * width;
  if (b.size() != expected) {
    throw FormatError("SCTM payload size mismatch: expected " + std::to_string(expected) + " bytes, got " +
                          std::to_string(b.size()),
                      std::min(b.size(), expected));
  }
  const std::size_t n = rows * cols;
  std::size_t at = kSctmHeaderBytes;
  switch (dtype) {
    case Dtype::Complex: {
      std::vector<complex> v(n);
      for (auto& z : v) {
        z = {detail::get_f64(b, at), detail::get_f64(b, at + 8)};
        at += 16;
      }
      return Matrix<complex>(rows, cols, std::move(v));
    }
    case Dtype::Real: {
      std::vector<double> v(n);
      for (auto& x : v) {
        x = detail::get_f64(b, at);
        at += 8;
      }
      return Matrix<double>(rows, cols, std::move(v));
    }
    case Dtype::Binary: {
      std::vector<std::uint8_t> v(b.begin() + static_cast<std::ptrdiff_t>(at), b.end());
      for (std::size_t k = 0; k < n; ++k) {
        if (v[k] > 1) throw FormatError("SCTM binary value " + std::to_string(v[k]) + " outside {0,1}", at + k);
      }
      return Matrix<std::uint8_t>(rows, cols, std::move(v));
    }
  }
  throw FormatError("unknown SCTM dtype", 5);
}

template <class T>
void save_matrix(const std::filesystem::path& path, const Matrix<T>& m) {
  detail::write_file(path, encode_matrix(m));
}

inline AnyMatrix load_any_matrix(const std::filesystem::path& path) {
  return decode_matrix(detail::read_file(path));
}

/// Typed load; a dtype other than T's is a FormatError.
template <class T>
Matrix<T> load_matrix(const std::filesystem::path& path) {
  auto any = load_any_matrix(path);
  if (auto* m = std::get_if<Matrix<T>>(&any)) return std::move(*m);
  throw FormatError(path.string() + ": SCTM dtype " + std::to_string(any.index()) + ", expected " +
                        std::to_string(static_cast<int>(dtype_of<T>())),
                    5);
}

inline void save_transmission_matrix(const std::filesystem::path& path, const TransmissionMatrix& h) {
  save_matrix(path, h.values());
}
inline TransmissionMatrix load_transmission_matrix(const std::filesystem::path& path) {
  return TransmissionMatrix(load_matrix<complex>(path));
}
inline void save_patterns(const std::filesystem::path& path, const PatternSet& x) { save_matrix(path, x.bits()); }
inline PatternSet load_patterns(const std::filesystem::path& path) {
  return PatternSet(load_matrix<std::uint8_t>(path));
}
inline void save_measurements(const std::filesystem::path& path, const MeasurementSet& y) {
  save_matrix(path, y.values());
}
inline MeasurementSet load_measurements(const std::filesystem::path& path) {
  return MeasurementSet(load_matrix<double>(path));
}

// ---------------------------------------------------------------- PGM

struct GrayImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;
};

/// Values in [0,1] (clamped) scaled by 255 and rounded.
inline std::vector<std::uint8_t> encode_pgm(std::span<const double> values, std::size_t width, std::size_t height) {
  if (values.size() != width * height) throw ArgumentError("PGM: pixel count does not match width*height");
  const std::string header = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : values) {
    const double c = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
    out.push_back(static_cast<std::uint8_t>(std::lround(c * 255.0)));
  }
  return out;
}

inline void save_image_pgm(const std::filesystem::path& path, std::span<const double> values, std::size_t width,
                           std::size_t height) {
  detail::write_file(path, encode_pgm(values, width, height));
}

inline void save_image_pgm(const std::filesystem::path& path, std::span<const std::uint8_t> bits, std::size_t width,
                           std::size_t height) {
  std::vector<double> values(bits.begin(), bits.end());
  save_image_pgm(path, values, width, height);
}

inline GrayImage decode_pgm(std::span<const std::uint8_t> b) {
  std::size_t at = 0;
  auto skip_space = [&] {
    while (at < b.size()) {
      if (b[at] == '#') {
        while (at < b.size() && b[at] != '\n') ++at;
      } else if (std::isspace(b[at])) {
        ++at;
      } else {
        break;
      }
    }
  };
  auto read_uint = [&]() -> std::size_t {
    skip_space();
    const std::size_t start = at;
    std::size_t v = 0;
    while (at < b.size() && b[at] >= '0' && b[at] <= '9') v = v * 10 + (b[at++] - '0');
    if (at == start) throw FormatError("PGM: expected an integer", at);
    return v;
  };
  if (b.size() < 2 || b[0] != 'P' || b[1] != '5') throw FormatError("PGM: missing P5 magic", 0);
  at = 2;
  GrayImage img;
  img.width = read_uint();
  img.height = read_uint();
  const std::size_t maxval = read_uint();
  if (maxval != 255) throw FormatError("PGM: only maxval 255 is supported", at);
  if (at >= b.size() || !std::isspace(b[at])) throw FormatError("PGM: missing header terminator", at);
  ++at;
  if (b.size() - at != img.width * img.height) {
    throw FormatError("PGM: payload size mismatch: expected " + std::to_string(img.width * img.height) +
                          " bytes, got " + std::to_string(b.size() - at),
                      at);
  }
  img.pixels.assign(b.begin() + static_cast<std::ptrdiff_t>(at), b.end());
  return img;
}

inline GrayImage load_image_pgm(const std::filesystem::path& path) { return decode_pgm(detail::read_file(path)); }

/// Tiles equally sized images into a grid with a one-pixel mid-gray border.
inline GrayImage montage(const std::vector<std::vector<std::vector<double>>>& grid, std::size_t width,
                         std::size_t height) {
  std::size_t cols = 0;
  for (const auto& row : grid) cols = std::max(cols, row.size());
  GrayImage out;
  out.width = cols * (width + 1) + 1;
  out.height = grid.size() * (height + 1) + 1;
  out.pixels.assign(out.width * out.height, 128);
  for (std::size_t gr = 0; gr < grid.size(); ++gr) {
    for (std::size_t gc = 0; gc < grid[gr].size(); ++gc) {
      const auto& img = grid[gr][gc];
      if (img.size() != width * height) throw ArgumentError("montage: image size mismatch");
      for (std::size_t r = 0; r < height; ++r) {
        for (std::size_t c = 0; c < width; ++c) {
          const double v = std::clamp(img[r * width + c], 0.0, 1.0);
          out.pixels[(gr * (height + 1) + 1 + r) * out.width + gc * (width + 1) + 1 + c] =
              static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
      }
    }
  }
  return out;
}

inline void save_gray_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::vector<double> values(img.pixels.size());
  std::transform(img.pixels.begin(), img.pixels.end(), values.begin(), [](auto p) { return p / 255.0; });
  save_image_pgm(path, values, img.width, img.height);
}

// ---------------------------------------------------------------- CSV

/// Shortest round-trip decimal, independent of the global locale.
inline std::string format_number(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

inline void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<std::string>>& rows) {
  std::string text;
  auto append = [&text](const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      if (k) text += ',';
      text += fields[k];
    }
    text += '\n';
  };
  append(header);
  for (const auto& r : rows) append(r);
  detail::write_file(path, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

}  // namespace dpr
