#include <famlies/engine.hpp>

#include <string>

namespace famlies::engine {

namespace {

constexpr index_t trsm_base = 32;

// X * tril(L)^T = alpha * B, row by row, B overwritten with X.
template <class T>
void rltn_base(T alpha, const MatrixView &l, const MatrixView &b) {
    const T *L      = l.data<T>();
    T *B            = b.data<T>();
    const index_t n = l.rows(), lrs = l.row_stride(), lcs = l.col_stride();
    const index_t brs = b.row_stride(), bcs = b.col_stride();
    for (index_t r = 0; r < b.rows(); ++r) {
        T *row = B + r * brs;
        for (index_t j = 0; j < n; ++j) {
            T x = alpha * row[j * bcs];
            for (index_t p = 0; p < j; ++p)
                x -= row[p * bcs] * L[j * lrs + p * lcs];
            row[j * bcs] = x / L[j * lrs + j * lcs];
        }
    }
}

// unit_tril(L) * X = alpha * B, column by column.
template <class T>
void llnu_base(T alpha, const MatrixView &l, const MatrixView &b) {
    const T *L      = l.data<T>();
    T *B            = b.data<T>();
    const index_t m = l.rows(), lrs = l.row_stride(), lcs = l.col_stride();
    const index_t brs = b.row_stride(), bcs = b.col_stride();
    for (index_t c = 0; c < b.cols(); ++c) {
        T *col = B + c * bcs;
        for (index_t i = 0; i < m; ++i) {
            T x = alpha * col[i * brs];
            for (index_t p = 0; p < i; ++p)
                x -= L[i * lrs + p * lcs] * col[p * brs];
            col[i * brs] = x;
        }
    }
}

template <class T>
void trsm_rec(TrsmCase which, double alpha, const MatrixView &l, const MatrixView &b,
              const KernelConfig &cfg, int ways) {
    const index_t n = l.rows();
    if (b.empty() || n == 0)
        return;
    if (n <= trsm_base) {
        if (which == TrsmCase::RightLowerTransNonunit)
            rltn_base<T>(T(alpha), l, b);
        else
            llnu_base<T>(T(alpha), l, b);
        return;
    }
    const Range r1{0, n / 2}, r2 = span_of(n / 2, n);
    MatrixView l11 = l(r1, r1), l21 = l(r2, r1), l22 = l(r2, r2);
    if (which == TrsmCase::RightLowerTransNonunit) {
        const Range all{0, b.rows()};
        MatrixView b1 = b(all, r1), b2 = b(all, r2);
        trsm_rec<T>(which, alpha, l11, b1, cfg, ways);
        gemm(-1.0, b1, transposed(l21), alpha, b2, cfg, ways);
        trsm_rec<T>(which, 1.0, l22, b2, cfg, ways);
    } else {
        const Range all{0, b.cols()};
        MatrixView b1 = b(r1, all), b2 = b(r2, all);
        trsm_rec<T>(which, alpha, l11, b1, cfg, ways);
        gemm(-1.0, l21, b1, alpha, b2, cfg, ways);
        trsm_rec<T>(which, 1.0, l22, b2, cfg, ways);
    }
}

} // namespace

void trsm(TrsmCase which, double alpha, const MatrixView &tri, const MatrixView &b,
          const KernelConfig &cfg) {
    if (tri.rows() != tri.cols())
        throw DimensionError("trsm: triangular operand must be square");
    const index_t need = which == TrsmCase::RightLowerTransNonunit ? b.cols() : b.rows();
    if (need != tri.rows())
        throw DimensionError("trsm: triangular order " + std::to_string(tri.rows()) +
                             " does not match right-hand side");
    if (tri.dtype() != b.dtype() || cfg.dtype != b.dtype())
        throw ConfigError("trsm: dtype mismatch");
    cfg.validate();
    if (b.empty())
        return;
    if (!is_injective(b) || overlaps(tri, b))
        throw AliasingError("trsm: right-hand side overlaps the triangular operand");
    if (which == TrsmCase::RightLowerTransNonunit)
        for (index_t j = 0; j < tri.rows(); ++j)
            if (tri.get(j, j) == 0.0)
                throw SingularMatrix(j);
    dispatch(b.dtype(), [&](auto t) { trsm_rec<decltype(t)>(which, alpha, tri, b, cfg, 1); });
}

void trsm(TrsmCase which, double alpha, const MatrixView &tri, const MatrixView &b) {
    trsm(which, alpha, tri, b, KernelConfig::defaults(b.dtype()));
}

} // namespace famlies::engine
