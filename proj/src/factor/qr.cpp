#include "common.hpp"

#include <cmath>

namespace famlies::factor {

namespace {

using detail::Mat;
using detail::mat;

// Applies H = I - tau*v*v^T (v(0) = 1, v(1:) stored in column j below row j) to a(j:, c0:c1).
template <class T>
void apply_reflector(Mat<T> a, index_t m, index_t j, T tau, Mat<T> c, index_t c0, index_t c1) {
    if (tau == T(0))
        return;
    for (index_t col = c0; col < c1; ++col) {
        T s = c(j, col);
        for (index_t i = j + 1; i < m; ++i)
            s += a(i, j) * c(i, col);
        s *= tau;
        c(j, col) -= s;
        for (index_t i = j + 1; i < m; ++i)
            c(i, col) -= s * a(i, j);
    }
}

template <class T>
void qr_unblocked(const MatrixView &a, T *tau) {
    const index_t m = a.rows(), n = a.cols();
    Mat<T> A = mat<T>(a);
    for (index_t j = 0; j < n; ++j) {
        T ssq = 0;
        for (index_t i = j + 1; i < m; ++i)
            ssq += A(i, j) * A(i, j);
        const T xnorm = std::sqrt(ssq);
        if (xnorm == T(0)) {
            tau[j] = 0;
            continue;
        }
        const T alpha = A(j, j);
        const T beta  = -std::copysign(std::hypot(alpha, xnorm), alpha);
        tau[j]        = (beta - alpha) / beta;
        const T scale = T(1) / (alpha - beta);
        for (index_t i = j + 1; i < m; ++i)
            A(i, j) *= scale;
        A(j, j) = beta;
        apply_reflector(A, m, j, tau[j], A, j + 1, n);
    }
}

const ControlNode &unblocked_leaf() {
    static const ControlNode leaf{control::Op::QR, control::Variant::unblocked_v()};
    return leaf;
}

template <class T>
void qr_node(const MatrixView &a, const ControlNode &node, const engine::KernelConfig &inherited,
             T *tau) {
    if (!node.variant.blocked) {
        qr_unblocked<T>(a, tau);
        return;
    }
    const index_t m = a.rows(), n = a.cols();
    const auto [cfg, ways]   = detail::level_of(node, inherited);
    const ControlNode &child = detail::child_or(node, unblocked_leaf());
    const DType dt           = a.dtype();

    for (const PartitionStep &s : partition_steps(n, *node.bs)) {
        const index_t k = s.r1.start, b = s.r1.len;
        const Range below = span_of(k, m);
        MatrixView panel  = a(below, s.r1);
        qr_node<T>(panel, child, cfg, tau + k);
        if (s.r2.empty())
            continue;

        // Compact WY: H_k ... H_{k+b-1} = I - V*Tm*V^T.
        const index_t rows = m - k;
        MatrixView v       = make_view(rows, b, dt, Layout::ColMajor);
        Mat<T> V = mat<T>(v), P = mat<T>(panel);
        for (index_t j = 0; j < b; ++j) {
            V(j, j) = 1;
            for (index_t i = j + 1; i < rows; ++i)
                V(i, j) = P(i, j);
        }
        MatrixView g = make_view(b, b, dt);
        engine::gemm(1.0, transposed(v), v, 0.0, g, cfg, ways);
        MatrixView tm = make_view(b, b, dt);
        Mat<T> G = mat<T>(g), Tm = mat<T>(tm);
        for (index_t i = 0; i < b; ++i) {
            const T ti = tau[k + i];
            if (ti == T(0))
                continue;
            Tm(i, i) = ti;
            for (index_t r = 0; r < i; ++r) {
                T acc = 0;
                for (index_t q = r; q < i; ++q)
                    acc += Tm(r, q) * G(q, i);
                Tm(r, i) = -ti * acc;
            }
        }

        MatrixView c  = a(below, s.r2);
        MatrixView w  = make_view(b, c.cols(), dt);
        MatrixView w2 = make_view(b, c.cols(), dt);
        engine::gemm(1.0, transposed(v), c, 0.0, w, cfg, ways);
        engine::gemm(1.0, transposed(tm), w, 0.0, w2, cfg, ways);
        engine::gemm(-1.0, v, w2, 1.0, c, cfg, ways);
    }
}

} // namespace

Reflectors qr_householder(const MatrixView &a, const ControlNode &tree) {
    control::require_valid(tree, {control::Op::QR, a.rows(), a.cols(), 0});
    Reflectors refl;
    refl.tau.resize(std::size_t(a.cols()));
    dispatch(a.dtype(), [&](auto t) {
        using T = decltype(t);
        std::vector<T> tau(std::size_t(a.cols()));
        qr_node<T>(a, tree, engine::KernelConfig::defaults(a.dtype()), tau.data());
        std::copy(tau.begin(), tau.end(), refl.tau.begin());
    });
    return refl;
}

Reflectors qr_householder(const MatrixView &a) {
    return qr_householder(a, control::default_tree(control::Op::QR, a.cols(), a.dtype()));
}

MatrixView form_q(const MatrixView &factored, const Reflectors &refl) {
    const index_t m = factored.rows(), n = factored.cols();
    if (index_t(refl.tau.size()) != n || m < n)
        throw DimensionError("form_q: expected m >= n and one tau per column");
    MatrixView q = make_view(m, n, factored.dtype());
    dispatch(q.dtype(), [&](auto t) {
        using T  = decltype(t);
        Mat<T> Q = mat<T>(q), A = mat<T>(factored);
        for (index_t j = 0; j < n; ++j)
            Q(j, j) = 1;
        for (index_t j = n; j-- > 0;)
            apply_reflector(A, m, j, T(refl.tau[std::size_t(j)]), Q, j, n);
    });
    return q;
}

MatrixView extract_r(const MatrixView &factored) {
    const index_t n = factored.cols();
    if (factored.rows() < n)
        throw DimensionError("extract_r: expected m >= n");
    MatrixView r = make_view(n, n, factored.dtype());
    for (index_t i = 0; i < n; ++i)
        for (index_t j = i; j < n; ++j)
            r.set(i, j, factored.get(i, j));
    return r;
}

} // namespace famlies::factor
