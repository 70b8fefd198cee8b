#pragma once

// Pixel grids, PNG/JPEG codecs and the bilinear resampler shared by the
// perceptual hash and the fixture generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "tgmon/error.hpp"

namespace tgmon {

/// 8-bit interleaved pixels, 1 (gray) or 3 (RGB) channels, row-major.
struct Image {
  int width = 0;
  int height = 0;
  int channels = 1;
  std::vector<std::uint8_t> pixels;

  Image() = default;
  Image(int w, int h, int c)
      : width(w), height(h), channels(c), pixels(static_cast<std::size_t>(w) * h * c, 0) {}

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Single-channel floating-point grid.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  GrayImage() = default;
  GrayImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int x, int y) { return values[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

enum class ImageFormat { png, jpeg, unknown };

inline ImageFormat sniff_image_format(std::span<const std::uint8_t> bytes) {
  static constexpr std::uint8_t kPng[] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPng), std::end(kPng), bytes.begin())) {
    return ImageFormat::png;
  }
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return ImageFormat::jpeg;
  }
  return ImageFormat::unknown;
}

/// Decodes PNG or JPEG. Alpha is dropped, 16-bit samples are reduced to 8
/// bits, EXIF orientation is ignored. Anything else yields nullopt.
inline std::optional<Image> decode_image(std::span<const std::uint8_t> bytes) {
  if (sniff_image_format(bytes) == ImageFormat::unknown) return std::nullopt;
  cv::Mat buf(1, static_cast<int>(bytes.size()), CV_8UC1, const_cast<std::uint8_t*>(bytes.data()));
  cv::Mat mat;
  try {
    mat = cv::imdecode(buf, cv::IMREAD_UNCHANGED);
  } catch (const cv::Exception&) {
    return std::nullopt;
  }
  if (mat.empty() || mat.rows < 1 || mat.cols < 1) return std::nullopt;
  if (mat.depth() == CV_16U) {
    mat.convertTo(mat, CV_8U, 1.0 / 257.0);
  } else if (mat.depth() != CV_8U) {
    return std::nullopt;
  }

  const int ch = mat.channels();
  Image out(mat.cols, mat.rows, ch >= 3 ? 3 : 1);
  for (int y = 0; y < mat.rows; ++y) {
    const std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < mat.cols; ++x) {
      const std::uint8_t* px = row + static_cast<std::size_t>(x) * ch;
      if (ch >= 3) {
        // OpenCV order is BGR(A).
        out.at(x, y, 0) = px[2];
        out.at(x, y, 1) = px[1];
        out.at(x, y, 2) = px[0];
      } else {
        out.at(x, y, 0) = px[0];
      }
    }
  }
  return out;
}

namespace detail {
inline cv::Mat to_bgr_mat(const Image& img) {
  if (img.channels != 1 && img.channels != 3) throw Error("unsupported channel count");
  cv::Mat mat(img.height, img.width, img.channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < img.height; ++y) {
    std::uint8_t* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 3) {
        row[3 * x + 0] = img.at(x, y, 2);
        row[3 * x + 1] = img.at(x, y, 1);
        row[3 * x + 2] = img.at(x, y, 0);
      } else {
        row[x] = img.at(x, y, 0);
      }
    }
  }
  return mat;
}

inline std::vector<std::uint8_t> encode(const Image& img, const char* ext,
                                        const std::vector<int>& params) {
  std::vector<std::uint8_t> out;
  if (!cv::imencode(ext, to_bgr_mat(img), out, params)) {
    throw Error(std::string("image encoding failed for ") + ext);
  }
  return out;
}
}  // namespace detail

inline std::vector<std::uint8_t> encode_png(const Image& img) {
  return detail::encode(img, ".png", {cv::IMWRITE_PNG_COMPRESSION, 6});
}

inline std::vector<std::uint8_t> encode_jpeg(const Image& img, int quality) {
  return detail::encode(img, ".jpg", {cv::IMWRITE_JPEG_QUALITY, quality});
}

/// Luma 0.299 R + 0.587 G + 0.114 B; gray input is copied as is.
inline GrayImage to_grayscale(const Image& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      if (img.channels == 3) {
        out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
      } else {
        out.at(x, y) = img.at(x, y, 0);
      }
    }
  }
  return out;
}

namespace detail {

/// Corner-aligned source coordinate: destination index d of n samples maps
/// to d * (src - 1) / (n - 1), so the first and last samples coincide.
struct Tap {
  int lo = 0;
  int hi = 0;
  double frac = 0.0;
};

inline std::vector<Tap> corner_aligned_taps(int src, int dst) {
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  for (int d = 0; d < dst; ++d) {
    double pos = dst == 1 ? 0.0 : static_cast<double>(d) * (src - 1) / (dst - 1);
    int lo = std::min(static_cast<int>(std::floor(pos)), src - 1);
    int hi = std::min(lo + 1, src - 1);
    taps[static_cast<std::size_t>(d)] = Tap{lo, hi, pos - lo};
  }
  return taps;
}

inline double lerp(double a, double b, double t) { return a + (b - a) * t; }

}  // namespace detail

/// Bilinear resample with corner-aligned sampling:
///   sx = x * (W_src - 1) / (W_dst - 1), sy likewise (0 when the target is 1 wide)
///   top    = p(x0, y0) + (p(x1, y0) - p(x0, y0)) * fx
///   bottom = p(x0, y1) + (p(x1, y1) - p(x0, y1)) * fx
///   value  = top + (bottom - top) * fy
/// with x0 = floor(sx), x1 = min(x0 + 1, W_src - 1), fx = sx - x0.
/// A constant input stays exactly constant.
inline GrayImage resize_bilinear(const GrayImage& src, int width, int height) {
  auto xs = detail::corner_aligned_taps(src.width, width);
  auto ys = detail::corner_aligned_taps(src.height, height);
  GrayImage out(width, height);
  for (int y = 0; y < height; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      double top = detail::lerp(src.at(tx.lo, ty.lo), src.at(tx.hi, ty.lo), tx.frac);
      double bottom = detail::lerp(src.at(tx.lo, ty.hi), src.at(tx.hi, ty.hi), tx.frac);
      out.at(x, y) = detail::lerp(top, bottom, ty.frac);
    }
  }
  return out;
}

/// Same interpolation on 8-bit pixels, rounding to nearest.
inline Image resize_bilinear(const Image& src, int width, int height) {
  auto xs = detail::corner_aligned_taps(src.width, width);
  auto ys = detail::corner_aligned_taps(src.height, height);
  Image out(width, height, src.channels);
  for (int y = 0; y < height; ++y) {
    const auto& ty = ys[static_cast<std::size_t>(y)];
    for (int x = 0; x < width; ++x) {
      const auto& tx = xs[static_cast<std::size_t>(x)];
      for (int c = 0; c < src.channels; ++c) {
        double top = detail::lerp(src.at(tx.lo, ty.lo, c), src.at(tx.hi, ty.lo, c), tx.frac);
        double bottom = detail::lerp(src.at(tx.lo, ty.hi, c), src.at(tx.hi, ty.hi, c), tx.frac);
        double v = std::clamp(std::round(detail::lerp(top, bottom, ty.frac)), 0.0, 255.0);
        out.at(x, y, c) = static_cast<std::uint8_t>(v);
      }
    }
  }
  return out;
}

}  // namespace tgmon
