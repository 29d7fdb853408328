#include "common.hpp"

#include <cmath>
#include <string>

namespace famlies::factor {

using engine::TrsmCase;

int PivotVector::sign() const noexcept {
    int s = 1;
    for (index_t k = 0; k < size(); ++k)
        if (piv[std::size_t(k)] != k)
            s = -s;
    return s;
}

void apply_pivots(const MatrixView &a, const PivotVector &piv, Direction direction) {
    for (index_t k = 0; k < piv.size(); ++k) {
        index_t p = piv.piv[std::size_t(k)];
        if (k >= a.rows() || p < k || p >= a.rows())
            throw DimensionError("apply_pivots: pivot " + std::to_string(k) + " -> " +
                                 std::to_string(p) + " outside the matrix");
    }
    dispatch(a.dtype(), [&](auto t) {
        using T = decltype(t);
        if (direction == Direction::Forward)
            for (index_t k = 0; k < piv.size(); ++k)
                detail::swap_rows<T>(a, k, piv.piv[std::size_t(k)]);
        else
            for (index_t k = piv.size(); k-- > 0;)
                detail::swap_rows<T>(a, k, piv.piv[std::size_t(k)]);
    });
}

namespace {

using detail::Mat;
using detail::mat;

// Right-looking elimination with partial pivoting, pivots relative to a's rows.
template <class T>
void lu_unblocked(const MatrixView &a, std::vector<index_t> &piv,
                  std::optional<index_t> &zero_pivot) {
    const index_t m = a.rows(), n = a.cols(), steps = std::min(m, n);
    Mat<T> A = mat<T>(a);
    piv.resize(std::size_t(steps));
    for (index_t k = 0; k < steps; ++k) {
        index_t p = k;
        T best    = std::abs(A(k, k));
        for (index_t i = k + 1; i < m; ++i)
            if (std::abs(A(i, k)) > best) {
                best = std::abs(A(i, k));
                p    = i;
            }
        piv[std::size_t(k)] = p;
        detail::swap_rows<T>(a, k, p);
        const T pivot = A(k, k);
        if (pivot == T(0)) {
            if (!zero_pivot)
                zero_pivot = k;
            continue;
        }
        for (index_t i = k + 1; i < m; ++i)
            A(i, k) /= pivot;
        for (index_t j = k + 1; j < n; ++j) {
            const T ukj = A(k, j);
            for (index_t i = k + 1; i < m; ++i)
                A(i, j) -= A(i, k) * ukj;
        }
    }
}

const ControlNode &unblocked_leaf() {
    static const ControlNode leaf{control::Op::LU, control::Variant::unblocked_v()};
    return leaf;
}

template <class T>
void lu_node(const MatrixView &a, const ControlNode &node, const engine::KernelConfig &inherited,
             std::vector<index_t> &piv, std::optional<index_t> &zero_pivot) {
    if (!node.variant.blocked) {
        lu_unblocked<T>(a, piv, zero_pivot);
        return;
    }
    const index_t m = a.rows(), n = a.cols(), steps = std::min(m, n);
    const auto [cfg, ways]   = detail::level_of(node, inherited);
    const ControlNode &child = detail::child_or(node, unblocked_leaf());
    piv.resize(std::size_t(steps));

    for (const PartitionStep &s : partition_steps(steps, *node.bs)) {
        const index_t k = s.r1.start, b = s.r1.len;
        const Range below = span_of(k, m), rest = span_of(k + b, n);
        const Range under = span_of(k + b, m);

        std::vector<index_t> panel_piv;
        std::optional<index_t> panel_zero;
        lu_node<T>(a(below, s.r1), child, cfg, panel_piv, panel_zero);
        if (panel_zero && !zero_pivot)
            zero_pivot = k + *panel_zero;

        MatrixView left = a(below, span_of(0, k)), right = a(below, rest);
        for (index_t i = 0; i < b; ++i) {
            const index_t p = panel_piv[std::size_t(i)];
            piv[std::size_t(k + i)] = k + p;
            detail::swap_rows<T>(left, i, p);
            detail::swap_rows<T>(right, i, p);
        }
        if (rest.empty())
            continue;
        MatrixView a12 = a(s.r1, rest);
        engine::trsm(TrsmCase::LeftLowerNotransUnit, 1.0, a(s.r1, s.r1), a12, cfg);
        engine::gemm(-1.0, a(under, s.r1), a12, 1.0, a(under, rest), cfg, ways);
    }
}

} // namespace

LuResult lu_partial(const MatrixView &a, const ControlNode &tree) {
    control::require_valid(tree, {control::Op::LU, a.rows(), a.cols(), 0});
    LuResult result;
    dispatch(a.dtype(), [&](auto t) {
        lu_node<decltype(t)>(a, tree, engine::KernelConfig::defaults(a.dtype()),
                             result.pivots.piv, result.zero_pivot);
    });
    return result;
}

LuResult lu_partial(const MatrixView &a) {
    return lu_partial(a, control::default_tree(control::Op::LU, std::min(a.rows(), a.cols()),
                                               a.dtype()));
}

void lu_solve(const MatrixView &factored, const PivotVector &piv, const MatrixView &b) {
    const index_t n = factored.rows();
    if (factored.cols() != n || b.rows() != n || piv.size() != n)
        throw DimensionError("lu_solve: expected a square factorization with n pivots and an "
                             "n x r right-hand side");
    if (factored.dtype() != b.dtype())
        throw ConfigError("lu_solve: dtype mismatch");
    for (index_t j = 0; j < n; ++j)
        if (factored.get(j, j) == 0.0)
            throw SingularMatrix(j);
    apply_pivots(b, piv, Direction::Forward);
    engine::trsm(TrsmCase::LeftLowerNotransUnit, 1.0, factored, b);
    dispatch(b.dtype(), [&](auto t) {
        using T  = decltype(t);
        Mat<T> U = mat<T>(factored), B = mat<T>(b);
        for (index_t c = 0; c < b.cols(); ++c)
            for (index_t j = n; j-- > 0;) {
                const T x = B(j, c) / U(j, j);
                B(j, c)   = x;
                for (index_t i = 0; i < j; ++i)
                    B(i, c) -= U(i, j) * x;
            }
    });
}

} // namespace famlies::factor
