#include "phsm/io.hpp"

#include "phsm/hermitian.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace phsm::io {

namespace fs = std::filesystem;

namespace {

constexpr char kImageMagic[8] = {'P', 'H', 'S', 'M', 'T', '3', '\0', '\1'};
constexpr char kLabelMagic[8] = {'P', 'H', 'S', 'M', 'L', 'B', '\0', '\1'};
constexpr char kScalarMagic[8] = {'P', 'H', 'S', 'M', 'S', 'R', '\0', '\1'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::little) {
        return v;
    } else {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
}

class Writer {
public:
    explicit Writer(const fs::path& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw Error("cannot open for writing: " + path.string());
    }
    void bytes(const char* data, std::size_t n) { out_.write(data, static_cast<std::streamsize>(n)); }
    template <typename T>
    void value(T v) {
        const T le = to_little(v);
        bytes(reinterpret_cast<const char*>(&le), sizeof(T));
    }
    void finish(const fs::path& path) {
        out_.flush();
        if (!out_) throw Error("write failed: " + path.string());
    }

private:
    std::ofstream out_;
};

/// Whole-file reader; all reads are bounds-checked so truncation is reported
/// before any partial object is handed out.
class Reader {
public:
    explicit Reader(const fs::path& path) : path_(path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw Error("cannot open: " + path.string());
        buf_.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    }
    void expect_magic(const char (&magic)[8]) {
        need(8);
        if (std::memcmp(buf_.data() + pos_, magic, 8) != 0) throw Error("bad magic in " + path_.string());
        pos_ += 8;
    }
    template <typename T>
    T value() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, buf_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return to_little(v);
    }
    void need(std::size_t n) const {
        if (pos_ + n > buf_.size()) throw Error("truncated file: " + path_.string());
    }
    std::size_t remaining() const { return buf_.size() - pos_; }

private:
    fs::path path_;
    std::vector<char> buf_;
    std::size_t pos_ = 0;
};

void check_dims(std::uint32_t w, std::uint32_t h) {
    if (w > (1u << 20) || h > (1u << 20)) throw Error("implausible raster dimensions");
}

}  // namespace

ImageFormat parse_format(const std::string& name) {
    if (name == "container" || name == "bin") return ImageFormat::Container;
    if (name == "t3") return ImageFormat::T3Dir;
    throw Error("unknown image format: " + name);
}

void save_container(const fs::path& path, const CoherencyImage& img) {
    Writer w(path);
    w.bytes(kImageMagic, 8);
    w.value(static_cast<std::uint32_t>(img.width()));
    w.value(static_cast<std::uint32_t>(img.height()));
    w.value(img.looks);
    for (const Matrix3c& t : img.pixels.data()) {
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                w.value(t(r, c).real());
                w.value(t(r, c).imag());
            }
        }
    }
    w.finish(path);
}

CoherencyImage load_container(const fs::path& path) {
    Reader r(path);
    r.expect_magic(kImageMagic);
    const auto width = r.value<std::uint32_t>();
    const auto height = r.value<std::uint32_t>();
    check_dims(width, height);
    const double looks = r.value<double>();
    const std::size_t count = static_cast<std::size_t>(width) * height;
    r.need(count * 18 * sizeof(double));

    CoherencyImage img;
    img.looks = looks;
    img.pixels = Raster<Matrix3c>(static_cast<int>(width), static_cast<int>(height));
    for (std::size_t i = 0; i < count; ++i) {
        Matrix3c t;
        for (int row = 0; row < 3; ++row) {
            for (int col = 0; col < 3; ++col) {
                const double re = r.value<double>();
                const double im = r.value<double>();
                t(row, col) = Complex(re, im);
            }
        }
        // Exact for data that is already Hermitian, so round trips stay bit-exact.
        img.pixels[i] = is_hermitian(t, 0.0) ? t : hermitian_part(t);
    }
    if (r.remaining() != 0) throw Error("trailing bytes in " + path.string());
    return img;
}

namespace {

const std::array<const char*, 9> kPlaneNames = {
    "T11.bin", "T12_real.bin", "T12_imag.bin", "T13_real.bin", "T13_imag.bin",
    "T22.bin", "T23_real.bin", "T23_imag.bin", "T33.bin"};

double plane_value(const Matrix3c& t, int plane) {
    switch (plane) {
        case 0: return t(0, 0).real();
        case 1: return t(0, 1).real();
        case 2: return t(0, 1).imag();
        case 3: return t(0, 2).real();
        case 4: return t(0, 2).imag();
        case 5: return t(1, 1).real();
        case 6: return t(1, 2).real();
        case 7: return t(1, 2).imag();
        default: return t(2, 2).real();
    }
}

}  // namespace

void save_t3_dir(const fs::path& dir, const CoherencyImage& img) {
    fs::create_directories(dir);
    for (int p = 0; p < 9; ++p) {
        Writer w(dir / kPlaneNames[static_cast<std::size_t>(p)]);
        for (const Matrix3c& t : img.pixels.data()) w.value(static_cast<float>(plane_value(t, p)));
        w.finish(dir / kPlaneNames[static_cast<std::size_t>(p)]);
    }
    std::ostringstream cfg;
    cfg << "Nrow\n" << img.height() << "\n---------\nNcol\n" << img.width()
        << "\n---------\nPolarCase\nmonostatic\n---------\nPolarType\nfull\n---------\nLooks\n"
        << img.looks << "\n";
    write_text(dir / "config.txt", cfg.str());
}

CoherencyImage load_t3_dir(const fs::path& dir, double default_looks) {
    int rows = -1;
    int cols = -1;
    double looks = default_looks;
    {
        std::istringstream cfg(read_text(dir / "config.txt"));
        std::string key;
        while (std::getline(cfg, key)) {
            std::string value;
            if (key == "Nrow" && std::getline(cfg, value)) rows = std::stoi(value);
            else if (key == "Ncol" && std::getline(cfg, value)) cols = std::stoi(value);
            else if (key == "Looks" && std::getline(cfg, value)) looks = std::stod(value);
        }
    }
    if (rows <= 0 || cols <= 0) throw Error("config.txt lacks Nrow/Ncol");
    const std::size_t count = static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols);

    std::array<std::vector<float>, 9> planes;
    for (std::size_t p = 0; p < 9; ++p) {
        const fs::path file = dir / kPlaneNames[p];
        if (!fs::exists(file)) throw Error("missing plane: " + file.string());
        if (fs::file_size(file) != count * sizeof(float)) throw Error("inconsistent planes");
        Reader r(file);
        planes[p].resize(count);
        for (std::size_t i = 0; i < count; ++i) planes[p][i] = r.value<float>();
    }

    CoherencyImage img;
    img.looks = looks;
    img.pixels = Raster<Matrix3c>(cols, rows);
    for (std::size_t i = 0; i < count; ++i) {
        Matrix3c t;
        const Complex t12(planes[1][i], planes[2][i]);
        const Complex t13(planes[3][i], planes[4][i]);
        const Complex t23(planes[6][i], planes[7][i]);
        t << double(planes[0][i]), t12, t13,
             std::conj(t12), double(planes[5][i]), t23,
             std::conj(t13), std::conj(t23), double(planes[8][i]);
        img.pixels[i] = hermitian_part(t);
    }
    return img;
}

CoherencyImage load_image(const fs::path& path, ImageFormat format) {
    return format == ImageFormat::Container ? load_container(path) : load_t3_dir(path);
}

void save_labels(const fs::path& path, const LabelRaster& labels) {
    Writer w(path);
    w.bytes(kLabelMagic, 8);
    w.value(static_cast<std::uint32_t>(labels.width()));
    w.value(static_cast<std::uint32_t>(labels.height()));
    for (std::int32_t v : labels.data()) w.value(v);
    w.finish(path);
}

LabelRaster load_labels(const fs::path& path) {
    Reader r(path);
    r.expect_magic(kLabelMagic);
    const auto width = r.value<std::uint32_t>();
    const auto height = r.value<std::uint32_t>();
    check_dims(width, height);
    r.need(static_cast<std::size_t>(width) * height * sizeof(std::int32_t));
    LabelRaster out(static_cast<int>(width), static_cast<int>(height));
    for (auto& v : out.data()) v = r.value<std::int32_t>();
    return out;
}

void save_scalar(const fs::path& path, const ScalarRaster& raster) {
    Writer w(path);
    w.bytes(kScalarMagic, 8);
    w.value(static_cast<std::uint32_t>(raster.width()));
    w.value(static_cast<std::uint32_t>(raster.height()));
    for (double v : raster.data()) w.value(v);
    w.finish(path);
}

ScalarRaster load_scalar(const fs::path& path) {
    Reader r(path);
    r.expect_magic(kScalarMagic);
    const auto width = r.value<std::uint32_t>();
    const auto height = r.value<std::uint32_t>();
    check_dims(width, height);
    r.need(static_cast<std::size_t>(width) * height * sizeof(double));
    ScalarRaster out(static_cast<int>(width), static_cast<int>(height));
    for (auto& v : out.data()) v = r.value<double>();
    return out;
}

void save_pgm(const fs::path& path, const ScalarRaster& unit) {
    Writer w(path);
    const std::string header = "P5\n" + std::to_string(unit.width()) + " " + std::to_string(unit.height()) + "\n255\n";
    w.bytes(header.data(), header.size());
    for (double v : unit.data()) {
        const double c = std::clamp(v, 0.0, 1.0);
        w.value(static_cast<std::uint8_t>(c * 255.0 + 0.5));
    }
    w.finish(path);
}

void save_ppm(const fs::path& path, const Raster<Rgb>& rgb) {
    Writer w(path);
    const std::string header = "P6\n" + std::to_string(rgb.width()) + " " + std::to_string(rgb.height()) + "\n255\n";
    w.bytes(header.data(), header.size());
    for (const Rgb& px : rgb.data()) w.bytes(reinterpret_cast<const char*>(px.data()), 3);
    w.finish(path);
}

Raster<Rgb> load_ppm(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    std::string magic;
    int width = 0;
    int height = 0;
    int maxval = 0;
    in >> magic >> width >> height >> maxval;
    if (magic != "P6" || width <= 0 || height <= 0 || maxval != 255) throw Error("unsupported PPM: " + path.string());
    in.get();
    Raster<Rgb> out(width, height);
    for (Rgb& px : out.data()) {
        in.read(reinterpret_cast<char*>(px.data()), 3);
    }
    if (!in) throw Error("truncated file: " + path.string());
    return out;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open for writing: " + path.string());
    out << text;
    if (!out) throw Error("write failed: " + path.string());
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace phsm::io
