#pragma once

#include <Eigen/Core>

#include <complex>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace phsm {

using Complex = std::complex<double>;
using Matrix3c = Eigen::Matrix3cd;

/// Library error. Messages are short and name the failing condition.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Row-major 2-D raster.
template <typename T>
class Raster {
public:
    Raster() = default;
    Raster(int width, int height, const T& fill = T{})
        : width_(width), height_(height),
          data_(static_cast<std::size_t>(checked(width)) * static_cast<std::size_t>(checked(height)), fill) {}

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    T& at(int x, int y) { return data_[index(x, y)]; }
    const T& at(int x, int y) const { return data_[index(x, y)]; }
    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    template <typename U>
    bool same_shape(const Raster<U>& other) const {
        return width_ == other.width() && height_ == other.height();
    }

    friend bool operator==(const Raster& a, const Raster& b) {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.data_ == b.data_;
    }

private:
    static int checked(int n) {
        if (n < 0) throw Error("negative raster dimension");
        return n;
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<T> data_;
};

using ScalarRaster = Raster<double>;
using LabelRaster = Raster<std::int32_t>;
using MaskRaster = Raster<std::uint8_t>;

/// Per-pixel 3x3 Hermitian coherency matrices with an effective look count.
struct CoherencyImage {
    Raster<Matrix3c> pixels;
    double looks = 1.0;

    int width() const { return pixels.width(); }
    int height() const { return pixels.height(); }
};

struct Point {
    double x = 0.0;
    double y = 0.0;
};

struct Pixel {
    int x = 0;
    int y = 0;
    friend bool operator==(const Pixel&, const Pixel&) = default;
};

inline constexpr int kChannels = 3;
inline constexpr double kPi = 3.14159265358979323846;

}  // namespace phsm
