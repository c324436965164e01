#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace petaxon {

/// Dense row-major float matrix, the working representation of a vectorized
/// sample batch.
struct FloatMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // rows * cols, row-major

    FloatMatrix() = default;
    FloatMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0f) {}

    std::span<const float> row(std::size_t i) const { return {data.data() + i * cols, cols}; }
    std::span<float> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    float& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    float at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

// FVEC container: magic "FVEC", version u32, rows u64, cols u64, then
// row-major 32-bit floats, little-endian.
void save_fvec(const FloatMatrix& m, const std::string& path);
FloatMatrix load_fvec(const std::string& path);

}  // namespace petaxon
