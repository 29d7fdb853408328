#pragma once

// Seed-deterministic operand generation. Values are produced from mt19937_64 with a fixed
// integer-to-double conversion, so the same seed yields bit-identical inputs on every platform.

#include <famlies/views.hpp>

#include <cstdint>
#include <random>

namespace famlies::random {

class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [-1, 1).
    double uniform() { return 2.0 * double(engine_() >> 11) * 0x1.0p-53 - 1.0; }
    /// Uniform integer in [lo, hi].
    index_t integer(index_t lo, index_t hi) {
        return lo + index_t(engine_() % std::uint64_t(hi - lo + 1));
    }

  private:
    std::mt19937_64 engine_;
};

/// Fills the view in row-major logical order.
void fill_uniform(const MatrixView &a, Rng &rng);
void fill_uniform(const TensorView &t, Rng &rng);

MatrixView uniform_matrix(index_t m, index_t n, DType dtype, std::uint64_t seed,
                          Layout layout = Layout::RowMajor);
/// M*M^T + n*I with M uniform(-1,1).
MatrixView spd_matrix(index_t n, DType dtype, std::uint64_t seed);
/// M + n*I with M uniform(-1,1): comfortably nonsingular.
MatrixView dominant_matrix(index_t n, DType dtype, std::uint64_t seed);
/// M - M^T with M uniform(-1,1).
MatrixView skew_matrix(index_t n, DType dtype, std::uint64_t seed);

} // namespace famlies::random
