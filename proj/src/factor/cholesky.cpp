#include "common.hpp"

#include <cmath>

namespace famlies::factor {

using engine::TrsmCase;

namespace {

using detail::Mat;
using detail::mat;

template <class T>
T checked_sqrt(T d, index_t global) {
    if (!(d > T(0)))
        throw NotPositiveDefinite(global);
    return std::sqrt(d);
}

// Bordered: a10^T := tril(A00)^{-1} a10^T; alpha11 -= a10 a10^T; alpha11 := sqrt(alpha11).
template <class T>
void chol_unb1(Mat<T> a, index_t n, index_t global) {
    for (index_t j = 0; j < n; ++j) {
        T diag = a(j, j);
        for (index_t p = 0; p < j; ++p) {
            T x = a(j, p);
            for (index_t q = 0; q < p; ++q)
                x -= a(j, q) * a(p, q);
            x       = x / a(p, p);
            a(j, p) = x;
            diag -= x * x;
        }
        a(j, j) = checked_sqrt(diag, global + j);
    }
}

// Left-looking: alpha11 -= a10 a10^T; sqrt; a21 -= A20 a10^T; a21 /= alpha11.
template <class T>
void chol_unb2(Mat<T> a, index_t n, index_t global) {
    for (index_t j = 0; j < n; ++j) {
        T diag = a(j, j);
        for (index_t p = 0; p < j; ++p)
            diag -= a(j, p) * a(j, p);
        const T d = checked_sqrt(diag, global + j);
        a(j, j)   = d;
        for (index_t i = j + 1; i < n; ++i) {
            T x = a(i, j);
            for (index_t p = 0; p < j; ++p)
                x -= a(i, p) * a(j, p);
            a(i, j) = x / d;
        }
    }
}

// Right-looking: sqrt; a21 /= alpha11; A22 -= a21 a21^T (lower part).
template <class T>
void chol_unb3(Mat<T> a, index_t n, index_t global) {
    for (index_t j = 0; j < n; ++j) {
        const T d = checked_sqrt(a(j, j), global + j);
        a(j, j)   = d;
        for (index_t i = j + 1; i < n; ++i)
            a(i, j) /= d;
        for (index_t q = j + 1; q < n; ++q) {
            const T lq = a(q, j);
            for (index_t i = q; i < n; ++i)
                a(i, q) -= a(i, j) * lq;
        }
    }
}

const ControlNode &unblocked3_leaf() {
    static const ControlNode leaf{control::Op::Cholesky, control::Variant::unblocked_v(3)};
    return leaf;
}

template <class T>
void chol_node(const MatrixView &a, const ControlNode &node,
               const engine::KernelConfig &inherited, index_t global) {
    const index_t n = a.rows();
    if (n == 0)
        return;
    if (!node.variant.blocked) {
        switch (node.variant.number) {
        case 1: chol_unb1(mat<T>(a), n, global); break;
        case 2: chol_unb2(mat<T>(a), n, global); break;
        default: chol_unb3(mat<T>(a), n, global); break;
        }
        return;
    }
    const auto [cfg, ways]    = detail::level_of(node, inherited);
    const ControlNode &child  = detail::child_or(node, unblocked3_leaf());
    const int variant         = node.variant.number;

    for (const PartitionStep &s : partition_steps(n, *node.bs)) {
        MatrixView a00 = a(s.r0, s.r0);
        MatrixView a10 = a(s.r1, s.r0), a11 = a(s.r1, s.r1);
        MatrixView a20 = a(s.r2, s.r0), a21 = a(s.r2, s.r1), a22 = a(s.r2, s.r2);
        switch (variant) {
        case 1:
            engine::trsm(TrsmCase::RightLowerTransNonunit, 1.0, a00, a10, cfg);
            engine::syrk_lower(-1.0, a10, 1.0, a11, cfg, ways);
            chol_node<T>(a11, child, cfg, global + s.r1.start);
            break;
        case 2:
            engine::syrk_lower(-1.0, a10, 1.0, a11, cfg, ways);
            chol_node<T>(a11, child, cfg, global + s.r1.start);
            engine::gemm(-1.0, a20, transposed(a10), 1.0, a21, cfg, ways);
            engine::trsm(TrsmCase::RightLowerTransNonunit, 1.0, a11, a21, cfg);
            break;
        default:
            chol_node<T>(a11, child, cfg, global + s.r1.start);
            engine::trsm(TrsmCase::RightLowerTransNonunit, 1.0, a11, a21, cfg);
            engine::syrk_lower(-1.0, a21, 1.0, a22, cfg, ways);
            break;
        }
    }
}

} // namespace

void cholesky(const MatrixView &a, Uplo uplo, const ControlNode &tree) {
    if (a.rows() != a.cols())
        throw DimensionError("cholesky: matrix must be square");
    control::require_valid(tree, {control::Op::Cholesky, a.rows(), a.cols(), 0});
    // Upper is the lower algorithm on the stride-swapped view: identical arithmetic.
    const MatrixView work = uplo == Uplo::Lower ? a : transposed(a);
    dispatch(a.dtype(), [&](auto t) {
        chol_node<decltype(t)>(work, tree, engine::KernelConfig::defaults(a.dtype()), 0);
    });
}

void cholesky(const MatrixView &a, Uplo uplo) {
    cholesky(a, uplo, control::default_tree(control::Op::Cholesky, a.rows(), a.dtype()));
}

} // namespace famlies::factor
