#include "common.hpp"

#include <cmath>
#include <string>

namespace famlies::factor {

namespace {

using detail::Mat;
using detail::mat;

// Symmetric interchange of rows/columns r < p on a skew matrix held in its strict lower
// triangle (plus whatever sits on the diagonal).
template <class T>
void skew_swap(Mat<T> x, index_t n, index_t r, index_t p) {
    for (index_t j = 0; j < r; ++j)
        std::swap(x(r, j), x(p, j));
    for (index_t i = r + 1; i < p; ++i) {
        const T tmp = x(i, r);
        x(i, r)     = -x(p, i);
        x(p, i)     = -tmp;
    }
    x(p, r) = -x(p, r);
    for (index_t i = p + 1; i < n; ++i)
        std::swap(x(i, r), x(i, p));
    std::swap(x(r, r), x(p, p));
}

// Pivot, record t[k] and store the multipliers of column k. Leaves the trailing matrix alone.
template <class T>
void eliminate_column(Mat<T> x, index_t n, index_t k, std::vector<index_t> &piv, T *t) {
    const index_t r = k + 1;
    index_t p       = r;
    T best          = std::abs(x(r, k));
    for (index_t i = r + 1; i < n; ++i)
        if (std::abs(x(i, k)) > best) {
            best = std::abs(x(i, k));
            p    = i;
        }
    piv[std::size_t(r)] = p;
    if (p != r)
        skew_swap(x, n, r, p);
    const T tk = x(r, k);
    t[k]       = tk;
    for (index_t i = r + 1; i < n; ++i)
        x(i, k) = tk != T(0) ? x(i, k) / tk : T(0);
}

template <class T>
void ltlt_unblocked(Mat<T> x, index_t n, std::vector<index_t> &piv, T *t) {
    for (index_t k = 0; k + 1 < n; ++k) {
        eliminate_column(x, n, k, piv, t);
        const index_t r = k + 1;
        // Rank-2 skew update of the strict lower trailing part.
        for (index_t j = r + 1; j < n; ++j) {
            const T mj = x(j, k), xj = x(j, r);
            for (index_t i = j + 1; i < n; ++i)
                x(i, j) -= x(i, r) * mj - x(i, k) * xj;
        }
    }
}

// Brings column k (rows k+1..n-1) up to date with the j panel columns k0..k0+j-1 already
// factored in this block: c -= A * T'' * lambda, with lambda the k-th row of the panel's L.
template <class T>
void update_column(Mat<T> x, index_t n, index_t k0, index_t j, const T *t, std::vector<T> &y) {
    if (j < 2)
        return;
    const index_t k = k0 + j;
    y.assign(std::size_t(j), T(0));
    auto lam = [&](index_t a) { return a + 1 < j ? x(k, k0 + a) : T(1); };
    for (index_t a = 0; a < j; ++a) {
        T v = 0;
        if (a > 0)
            v += t[k0 + a] * lam(a - 1);
        if (a + 1 < j)
            v -= t[k0 + 1 + a] * lam(a + 1);
        y[std::size_t(a)] = v;
    }
    for (index_t i = k + 1; i < n; ++i) {
        T acc = 0;
        for (index_t a = 0; a < j; ++a)
            acc += x(i, k0 + a) * y[std::size_t(a)];
        x(i, k) -= acc;
    }
}

template <class T>
void ltlt_blocked(const MatrixView &xv, const ControlNode &node,
                  const engine::KernelConfig &inherited, std::vector<index_t> &piv, T *t) {
    const index_t n = xv.rows();
    if (n < 2)
        return;
    const auto [cfg, ways] = detail::level_of(node, inherited);
    Mat<T> x               = mat<T>(xv);
    std::vector<T> y;
    std::vector<double> tp;

    for (const PartitionStep &s : partition_steps(n - 1, *node.bs, 1)) {
        const index_t k0 = s.r1.start, b = s.r1.len;
        for (index_t j = 0; j < b; ++j) {
            update_column(x, n, k0, j, t, y);
            eliminate_column(x, n, k0 + j, piv, t);
        }
        if (!s.r1b || s.r1b->empty())
            continue;
        // Lookahead: expose the next column, then update the trailing matrix in one pass.
        const index_t kend = k0 + b;
        update_column(x, n, k0, b, t, y);
        if (kend + 1 >= n)
            continue;
        tp.assign(std::size_t(b), 1.0);
        for (index_t a = 0; a + 1 < b; ++a)
            tp[std::size_t(a)] = double(t[k0 + 1 + a]);
        const Range rest = span_of(kend + 1, n);
        engine::sandwich_skew(xv(rest, rest), xv(rest, Range{k0, b + 1}), tp, cfg, ways);
    }
}

template <class T>
void ltlt_node(const MatrixView &x, const ControlNode &node, std::vector<index_t> &piv, T *t) {
    if (node.variant.blocked)
        ltlt_blocked<T>(x, node, engine::KernelConfig::defaults(x.dtype()), piv, t);
    else
        ltlt_unblocked<T>(mat<T>(x), x.rows(), piv, t);
}

} // namespace

LtltResult ltlt_pivoted(const MatrixView &x, const ControlNode &tree) {
    const index_t n = x.rows();
    if (x.cols() != n)
        throw DimensionError("ltlt_pivoted: matrix must be square");
    control::require_valid(tree, {control::Op::LTLT, n, n, 0});
    LtltResult result;
    result.pivots.piv.resize(std::size_t(n));
    for (index_t i = 0; i < n; ++i)
        result.pivots.piv[std::size_t(i)] = i;
    result.tridiag.n = n;
    result.tridiag.t.assign(std::size_t(std::max<index_t>(n - 1, 0)), 0.0);
    dispatch(x.dtype(), [&](auto tag) {
        using T = decltype(tag);
        std::vector<T> t(result.tridiag.t.size());
        ltlt_node<T>(x, tree, result.pivots.piv, t.data());
        std::copy(t.begin(), t.end(), result.tridiag.t.begin());
    });
    return result;
}

LtltResult ltlt_pivoted(const MatrixView &x) {
    return ltlt_pivoted(x, control::default_tree(control::Op::LTLT, x.rows(), x.dtype()));
}

MatrixView ltlt_unpack_l(const MatrixView &factored) {
    const index_t n = factored.rows();
    if (factored.cols() != n)
        throw DimensionError("ltlt_unpack_l: matrix must be square");
    MatrixView l = make_view(n, n, factored.dtype());
    for (index_t j = 0; j < n; ++j) {
        l.set(j, j, 1.0);
        if (j == 0)
            continue;
        for (index_t i = j + 1; i < n; ++i)
            l.set(i, j, factored.get(i, j - 1));
    }
    return l;
}

double pfaffian(const MatrixView &x, const ControlNode &tree) {
    const index_t n = x.rows();
    if (x.cols() != n)
        throw DimensionError("pfaffian: matrix must be square");
    double amax = 0, defect = 0;
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j <= i; ++j) {
            amax   = std::max({amax, std::abs(x.get(i, j)), std::abs(x.get(j, i))});
            defect = std::max(defect, std::abs(x.get(i, j) + x.get(j, i)));
        }
    if (defect > double(n) * eps(x.dtype()) * amax)
        throw ContractError("pfaffian: input is not skew-symmetric (max |x + x^T| = " +
                            std::to_string(defect) + ")");
    if (n % 2 == 1)
        return 0.0;
    MatrixView work = copy_of(x);
    LtltResult f    = ltlt_pivoted(work, tree);
    double pf       = f.pivots.sign();
    for (index_t i = 0; i + 1 < n; i += 2)
        pf *= -f.tridiag.t[std::size_t(i)];
    return pf;
}

double pfaffian(const MatrixView &x) {
    return pfaffian(x, control::default_tree(control::Op::LTLT, x.rows(), x.dtype()));
}

} // namespace famlies::factor
