#pragma once

#include "phsm/types.hpp"

#include <array>

namespace phsm {

/// Total backscattered power, trace(T), per pixel.
ScalarRaster span(const CoherencyImage& img);

/// Pauli composite: R = T22, G = T33, B = T11.
struct PauliRgb {
    ScalarRaster r, g, b;
};

/// Log-scales the three Pauli powers (dB), clips at the given upper percentile
/// of the pooled values and maps them to [0, 1] with one shared affine map so
/// that channel balance is kept. Zero-power entries map to 0.
PauliRgb pauli_rgb(const CoherencyImage& img, double clip_percentile = 0.98);

/// Block average of az x rg pixels (rows x columns). Trailing partial blocks
/// are dropped; the output look count is looks * az * rg.
CoherencyImage multilook(const CoherencyImage& img, int az, int rg);

/// Value at sorted position floor(p * (n - 1)); p in [0, 1].
double percentile(std::vector<double> values, double p);

/// Checks the Hermitian / PSD invariants for every pixel.
bool is_valid(const CoherencyImage& img, double rel_tol = 1e-9);

}  // namespace phsm
