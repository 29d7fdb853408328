#include <famlies/oracle.hpp>

#include <cmath>
#include <map>
#include <string>

namespace famlies::oracle {

void gemm_naive(double alpha, const MatrixView &a, const MatrixView &b, double beta,
                const MatrixView &c) {
    if (a.rows() != c.rows() || b.cols() != c.cols() || a.cols() != b.rows())
        throw DimensionError("gemm_naive: non-conformal operands");
    for (index_t i = 0; i < c.rows(); ++i)
        for (index_t j = 0; j < c.cols(); ++j) {
            double sum = 0.0;
            for (index_t p = 0; p < a.cols(); ++p)
                sum += a.get(i, p) * b.get(p, j);
            double old = beta == 0.0 ? 0.0 : beta * c.get(i, j);
            c.set(i, j, old + alpha * sum);
        }
}

void chol_scalar(const MatrixView &a) {
    const index_t n = a.rows();
    if (a.cols() != n)
        throw DimensionError("chol_scalar: matrix must be square");
    for (index_t j = 0; j < n; ++j) {
        double d = a.get(j, j);
        if (!(d > 0.0))
            throw NotPositiveDefinite(j);
        d = std::sqrt(d);
        a.set(j, j, d);
        for (index_t i = j + 1; i < n; ++i)
            a.set(i, j, a.get(i, j) / d);
        for (index_t q = j + 1; q < n; ++q)
            for (index_t i = q; i < n; ++i)
                a.set(i, q, a.get(i, q) - a.get(i, j) * a.get(q, j));
    }
}

std::vector<index_t> lu_scalar(const MatrixView &a) {
    const index_t m = a.rows(), n = a.cols(), steps = std::min(m, n);
    std::vector<index_t> piv(static_cast<std::size_t>(steps));
    for (index_t k = 0; k < steps; ++k) {
        index_t p   = k;
        double best = std::abs(a.get(k, k));
        for (index_t i = k + 1; i < m; ++i)
            if (std::abs(a.get(i, k)) > best) {
                best = std::abs(a.get(i, k));
                p    = i;
            }
        piv[std::size_t(k)] = p;
        if (p != k)
            for (index_t j = 0; j < n; ++j) {
                double t = a.get(k, j);
                a.set(k, j, a.get(p, j));
                a.set(p, j, t);
            }
        double pivot = a.get(k, k);
        if (pivot == 0.0)
            continue;
        for (index_t i = k + 1; i < m; ++i) {
            double l = a.get(i, k) / pivot;
            a.set(i, k, l);
            for (index_t j = k + 1; j < n; ++j)
                a.set(i, j, a.get(i, j) - l * a.get(k, j));
        }
    }
    return piv;
}

namespace {

// Expansion along the first remaining index: pf = sum_j (-1)^(pos(j)-1) x(i,j) pf(minor).
double pf_rec(const MatrixView &x, std::vector<index_t> &rest) {
    if (rest.empty())
        return 1.0;
    const index_t i = rest.front();
    double total    = 0.0;
    for (std::size_t pos = 1; pos < rest.size(); ++pos) {
        const index_t j = rest[pos];
        std::vector<index_t> minor;
        minor.reserve(rest.size() - 2);
        for (std::size_t q = 1; q < rest.size(); ++q)
            if (q != pos)
                minor.push_back(rest[q]);
        double sign = (pos % 2 == 1) ? 1.0 : -1.0;
        total += sign * x.get(i, j) * pf_rec(x, minor);
    }
    return total;
}

} // namespace

double pfaffian_combinatorial(const MatrixView &x) {
    const index_t n = x.rows();
    if (x.cols() != n)
        throw DimensionError("pfaffian_combinatorial: matrix must be square");
    if (n > 12)
        throw DimensionError("pfaffian_combinatorial: n must be <= 12");
    if (n % 2 == 1)
        return 0.0;
    std::vector<index_t> all(static_cast<std::size_t>(n));
    for (index_t i = 0; i < n; ++i)
        all[std::size_t(i)] = i;
    return pf_rec(x, all);
}

void contract_naive(double alpha, const TensorView &a, const TensorView &b, double beta,
                    const TensorView &c, std::string_view spec) {
    auto comma = spec.find(',');
    auto arrow = spec.find("->");
    if (comma == std::string_view::npos || arrow == std::string_view::npos || arrow < comma)
        throw DimensionError("contract_naive: spec must look like 'ab,bc->ac'");
    std::string la(spec.substr(0, comma)), lb(spec.substr(comma + 1, arrow - comma - 1)),
        lc(spec.substr(arrow + 2));
    if (index_t(la.size()) != a.rank() || index_t(lb.size()) != b.rank() ||
        index_t(lc.size()) != c.rank())
        throw DimensionError("contract_naive: label count does not match tensor rank");

    std::map<char, index_t> extent;
    auto note = [&](const std::string &labels, const TensorView &t) {
        for (std::size_t d = 0; d < labels.size(); ++d) {
            auto [it, fresh] = extent.emplace(labels[d], t.dim(int(d)));
            if (!fresh && it->second != t.dim(int(d)))
                throw DimensionError("contract_naive: inconsistent extent for a label");
        }
    };
    note(la, a);
    note(lb, b);
    note(lc, c);

    std::string summed;
    for (auto &[label, ext] : extent)
        if (lc.find(label) == std::string::npos)
            summed.push_back(label);

    std::map<char, index_t> value;
    auto gather = [&](const std::string &labels) {
        std::vector<index_t> idx(labels.size());
        for (std::size_t d = 0; d < labels.size(); ++d)
            idx[d] = value[labels[d]];
        return idx;
    };

    std::vector<index_t> cdims(c.dims().begin(), c.dims().end());
    std::vector<index_t> sdims;
    for (char s : summed)
        sdims.push_back(extent[s]);
    for (index_t d : cdims)
        if (d == 0)
            return;

    std::vector<index_t> ci(cdims.size(), 0);
    do {
        for (std::size_t d = 0; d < lc.size(); ++d)
            value[lc[d]] = ci[d];
        double sum = 0.0;
        bool empty_sum = false;
        for (index_t d : sdims)
            empty_sum = empty_sum || d == 0;
        if (!empty_sum) {
            std::vector<index_t> si(sdims.size(), 0);
            do {
                for (std::size_t d = 0; d < summed.size(); ++d)
                    value[summed[d]] = si[d];
                sum += a.get(gather(la)) * b.get(gather(lb));
            } while (next_index(si, sdims));
        }
        double old = beta == 0.0 ? 0.0 : beta * c.get(ci);
        c.set(ci, old + alpha * sum);
    } while (next_index(ci, cdims));
}

namespace {

struct Dense {
    index_t m, n;
    std::vector<double> v;

    Dense(index_t rows, index_t cols)
        : m(rows), n(cols), v(static_cast<std::size_t>(rows * cols), 0.0) {}
    double &operator()(index_t i, index_t j) { return v[std::size_t(i * n + j)]; }
    double operator()(index_t i, index_t j) const { return v[std::size_t(i * n + j)]; }
};

Dense dense(const MatrixView &a) {
    Dense d(a.rows(), a.cols());
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            d(i, j) = a.get(i, j);
    return d;
}

Dense product(const Dense &a, const Dense &b) {
    Dense c(a.m, b.n);
    for (index_t i = 0; i < a.m; ++i)
        for (index_t p = 0; p < a.n; ++p) {
            const double aip = a(i, p);
            if (aip == 0.0)
                continue;
            for (index_t j = 0; j < b.n; ++j)
                c(i, j) += aip * b(p, j);
        }
    return c;
}

Dense transpose(const Dense &a) {
    Dense t(a.n, a.m);
    for (index_t i = 0; i < a.m; ++i)
        for (index_t j = 0; j < a.n; ++j)
            t(j, i) = a(i, j);
    return t;
}

double frob(const Dense &a) {
    double s = 0;
    for (double x : a.v)
        s += x * x;
    return std::sqrt(s);
}

double frob_diff(const Dense &a, const Dense &b) {
    double s = 0;
    for (std::size_t i = 0; i < a.v.size(); ++i)
        s += (a.v[i] - b.v[i]) * (a.v[i] - b.v[i]);
    return std::sqrt(s);
}

double relative(double num, double den) { return den == 0.0 ? num : num / den; }

void swap_rows(Dense &a, index_t r1, index_t r2) {
    if (r1 != r2)
        for (index_t j = 0; j < a.n; ++j)
            std::swap(a(r1, j), a(r2, j));
}

} // namespace

double frobenius(const MatrixView &a) { return frob(dense(a)); }

double max_abs(const MatrixView &a) {
    double r = 0;
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            r = std::max(r, std::abs(a.get(i, j)));
    return r;
}

double max_abs_diff(const MatrixView &a, const MatrixView &b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw DimensionError("max_abs_diff: shapes differ");
    double r = 0;
    for (index_t i = 0; i < a.rows(); ++i)
        for (index_t j = 0; j < a.cols(); ++j)
            r = std::max(r, std::abs(a.get(i, j) - b.get(i, j)));
    return r;
}

double chol_residual(const MatrixView &a, const MatrixView &factored) {
    const index_t n = a.rows();
    Dense l(n, n);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j <= i; ++j)
            l(i, j) = factored.get(i, j);
    const Dense ad = dense(a);
    return relative(frob_diff(ad, product(l, transpose(l))), frob(ad));
}

double lu_residual(const MatrixView &a, const MatrixView &factored,
                   const std::vector<index_t> &piv) {
    const index_t m = a.rows(), n = a.cols(), s = std::min(m, n);
    Dense pa = dense(a);
    for (index_t k = 0; k < index_t(piv.size()); ++k)
        swap_rows(pa, k, piv[std::size_t(k)]);
    Dense l(m, s), u(s, n);
    for (index_t i = 0; i < m; ++i)
        for (index_t j = 0; j < s; ++j)
            l(i, j) = i == j ? 1.0 : (i > j ? factored.get(i, j) : 0.0);
    for (index_t i = 0; i < s; ++i)
        for (index_t j = i; j < n; ++j)
            u(i, j) = factored.get(i, j);
    return relative(frob_diff(pa, product(l, u)), frob(dense(a)));
}

double qr_residual(const MatrixView &a, const MatrixView &q, const MatrixView &r) {
    const Dense ad = dense(a);
    return relative(frob_diff(ad, product(dense(q), dense(r))), frob(ad));
}

double orthogonality(const MatrixView &q) {
    const Dense qd = dense(q);
    Dense g        = product(transpose(qd), qd);
    for (index_t i = 0; i < g.m; ++i)
        g(i, i) -= 1.0;
    return frob(g);
}

double ltlt_residual(const MatrixView &x, const MatrixView &factored,
                     const std::vector<index_t> &piv, const std::vector<double> &t) {
    const index_t n = x.rows();
    Dense px        = dense(x);
    for (index_t k = 0; k < index_t(piv.size()); ++k) {
        const index_t p = piv[std::size_t(k)];
        swap_rows(px, k, p);
        if (p != k)
            for (index_t i = 0; i < n; ++i)
                std::swap(px(i, k), px(i, p));
    }
    Dense l(n, n), tt(n, n);
    for (index_t j = 0; j < n; ++j) {
        l(j, j) = 1.0;
        for (index_t i = j + 1; i < n && j >= 1; ++i)
            l(i, j) = factored.get(i, j - 1);
    }
    for (index_t i = 0; i + 1 < n; ++i) {
        tt(i + 1, i) = t[std::size_t(i)];
        tt(i, i + 1) = -t[std::size_t(i)];
    }
    const Dense rec = product(product(l, tt), transpose(l));
    return relative(frob_diff(px, rec), frob(dense(x)));
}

double solve_residual(const MatrixView &a, const MatrixView &x, const MatrixView &b) {
    const Dense ax = product(dense(a), dense(x));
    return relative(frob_diff(ax, dense(b)), frob(dense(a)) * frob(dense(x)));
}

double determinant(const MatrixView &a) {
    if (a.rows() != a.cols())
        throw DimensionError("determinant: matrix must be square");
    const index_t n = a.rows();
    Dense d         = dense(a);
    double det      = 1.0;
    for (index_t k = 0; k < n; ++k) {
        index_t p = k;
        for (index_t i = k + 1; i < n; ++i)
            if (std::abs(d(i, k)) > std::abs(d(p, k)))
                p = i;
        if (d(p, k) == 0.0)
            return 0.0;
        if (p != k) {
            swap_rows(d, k, p);
            det = -det;
        }
        det *= d(k, k);
        for (index_t i = k + 1; i < n; ++i) {
            const double f = d(i, k) / d(k, k);
            for (index_t j = k + 1; j < n; ++j)
                d(i, j) -= f * d(k, j);
        }
    }
    return det;
}

} // namespace famlies::oracle
