#pragma once

#include "phsm/types.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace phsm::io {

enum class ImageFormat {
    Container,  ///< single little-endian file, see save_container
    T3Dir,      ///< PolSARpro-style T3 directory: 9 float32 planes + config.txt
};

ImageFormat parse_format(const std::string& name);

/// Container layout, little-endian:
///   8-byte magic "PHSMT3\0\1", u32 width, u32 height, f64 looks,
///   then width*height 3x3 matrices, row-major, each entry as (re, im) f64.
void save_container(const std::filesystem::path& path, const CoherencyImage& img);
CoherencyImage load_container(const std::filesystem::path& path);

/// Writes T11.bin, T12_real.bin, ..., T33.bin (float32) and config.txt.
void save_t3_dir(const std::filesystem::path& dir, const CoherencyImage& img);
/// Reads a T3 directory. The look count comes from config.txt ("Looks") or
/// `default_looks`. Every pixel is repaired to its Hermitian part.
CoherencyImage load_t3_dir(const std::filesystem::path& dir, double default_looks = 1.0);

CoherencyImage load_image(const std::filesystem::path& path, ImageFormat format);

/// Label raster: magic "PHSMLB\0\1", u32 width, u32 height, i32 values.
void save_labels(const std::filesystem::path& path, const LabelRaster& labels);
LabelRaster load_labels(const std::filesystem::path& path);

/// Scalar raster: magic "PHSMSR\0\1", u32 width, u32 height, f64 values.
void save_scalar(const std::filesystem::path& path, const ScalarRaster& raster);
ScalarRaster load_scalar(const std::filesystem::path& path);

using Rgb = std::array<std::uint8_t, 3>;

/// Binary PGM (P5) of a raster already scaled to [0, 1].
void save_pgm(const std::filesystem::path& path, const ScalarRaster& unit);
/// Binary PPM (P6).
void save_ppm(const std::filesystem::path& path, const Raster<Rgb>& rgb);
Raster<Rgb> load_ppm(const std::filesystem::path& path);

/// Writes text atomically enough for artifacts: truncate + write.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace phsm::io
