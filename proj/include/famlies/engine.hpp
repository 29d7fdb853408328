#pragma once

#include <famlies/views.hpp>

#include <cstddef>
#include <span>
#include <vector>

namespace famlies::engine {

/// Register and cache blocking of the five-loop GEMM, plus operand and accumulation precision.
///
/// The loops around the micro-kernel are, outermost first: jc (step nc) over columns of C,
/// pc (step kc) over the inner dimension, ic (step mc) over rows of C, then jr (step nr) and
/// ir (step mr) over micro-tiles. A kc x nc block of B and an mc x kc block of A are packed
/// into contiguous micro-panels before the micro-kernel runs.
struct KernelConfig {
    index_t mr = 8, nr = 6;
    index_t mc = 64, kc = 256, nc = 2046;
    DType dtype     = DType::F64;
    DType acc_dtype = DType::F64;

    /// Defaults for an operand type: 8x6 micro-tiles, mc=64, kc=256 (512 for f32), nc=2046.
    static KernelConfig defaults(DType dtype);

    /// Throws ConfigError unless mr,nr in [1,32], kc >= 1, mc % mr == 0, nc % nr == 0 and the
    /// accumulation type is at least as precise as the operand type.
    void validate() const;

    friend bool operator==(const KernelConfig &, const KernelConfig &) = default;
};

inline constexpr index_t max_micro_tile = 32;

enum class Side { A, B };

/// Optional linear recombination applied while packing the B operand.
///
/// tridiag_skew_right packs W = T * src where T is the skew-symmetric tridiagonal matrix with
/// T(i+1,i) = t[i] and T(i,i+1) = -t[i]; each packed row mixes at most two source rows.
struct PackTransform {
    enum class Kind { Identity, TridiagSkewRight };
    Kind kind = Kind::Identity;
    std::vector<double> t;

    static PackTransform identity() { return {}; }
    static PackTransform tridiag_skew(std::span<const double> t) {
        return {Kind::TridiagSkewRight, {t.begin(), t.end()}};
    }
};

/// Micro-panel buffer. Panel p of an A pack holds rows [p*mr, p*mr+mr) stored k-major
/// (element (i, l) at p*mr*k + l*mr + i); B packs are the same with nr columns.
struct PackedPanel {
    std::vector<double> buffer;
    index_t panel_dim = 0;
    index_t k         = 0;
    index_t n_panels  = 0;
    Side side         = Side::A;
};

PackedPanel pack_panel(const MatrixView &src, Side side, const KernelConfig &cfg,
                       const PackTransform &transform = {});

/// c := beta*c + alpha*(a_panel * b_panel) for one mr x nr micro-tile, accumulating in
/// cfg.acc_dtype with the k loop in ascending order.
void microkernel(index_t k, double alpha, std::span<const double> a_panel,
                 std::span<const double> b_panel, double beta, const MatrixView &c,
                 const KernelConfig &cfg);

/// c := beta*c + alpha*a*b. Rejects non-conformal shapes (DimensionError) and outputs that
/// overlap an input (AliasingError). When beta == 0, c is not read.
void gemm(double alpha, const MatrixView &a, const MatrixView &b, double beta,
          const MatrixView &c, const KernelConfig &cfg, int ways = 1);
void gemm(double alpha, const MatrixView &a, const MatrixView &b, double beta,
          const MatrixView &c);

/// As gemm, but only the lower triangle (i >= j) of the square c is written.
void gemmt_lower(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                 const MatrixView &c, const KernelConfig &cfg, int ways = 1);
void gemmt_lower(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                 const MatrixView &c);

/// Lower triangle of c := beta*c + alpha*a*a^T.
void syrk_lower(double alpha, const MatrixView &a, double beta, const MatrixView &c,
                const KernelConfig &cfg, int ways = 1);
void syrk_lower(double alpha, const MatrixView &a, double beta, const MatrixView &c);

enum class TrsmCase {
    RightLowerTransNonunit, // X * tril(tri)^T = alpha * B
    LeftLowerNotransUnit,   // unit_tril(tri) * X = alpha * B
};

/// Triangular solve, overwriting b with X. Only the lower triangle of tri is read.
/// Throws SingularMatrix on a zero diagonal in the non-unit case (b untouched).
void trsm(TrsmCase which, double alpha, const MatrixView &tri, const MatrixView &b,
          const KernelConfig &cfg);
void trsm(TrsmCase which, double alpha, const MatrixView &tri, const MatrixView &b);

/// Lower triangle of c := c - a * T * a^T, T skew-symmetric tridiagonal with subdiagonal t.
/// T * a^T is formed inside the packing of the B operand; no n x k temporary exists.
void sandwich_skew(const MatrixView &c, const MatrixView &a, std::span<const double> t,
                   const KernelConfig &cfg, int ways = 1);
void sandwich_skew(const MatrixView &c, const MatrixView &a, std::span<const double> t);

/// Accounting of auxiliary (pack buffer) allocations, in elements.
struct AllocationStats {
    std::size_t current = 0;
    std::size_t peak    = 0;
};
AllocationStats allocation_stats() noexcept;
/// Resets the peak to the current value.
void reset_allocation_peak() noexcept;

} // namespace famlies::engine
