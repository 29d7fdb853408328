#include "properties.hpp"

#include <famlies/engine.hpp>
#include <famlies/factor.hpp>
#include <famlies/oracle.hpp>
#include <famlies/random.hpp>
#include <famlies/tensor.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <numeric>
#include <sstream>

namespace famlies::props {

using control::ControlNode;
using control::Op;
using control::Variant;

void Outcome::expect(bool pass, const std::string &what) {
    ++cases;
    if (pass)
        return;
    ++failed;
    if (messages.size() < 5)
        messages.push_back(what);
}

void Outcome::within(double err, double tol, const std::string &what) {
    const double ratio = tol > 0 ? err / tol : (err == 0 ? 0 : INFINITY);
    worst = std::max(worst, std::isnan(ratio) ? INFINITY : ratio);
    std::ostringstream os;
    os << what << ": error " << err << " > tolerance " << tol;
    expect(err <= tol, os.str());
}

void Outcome::merge(const Outcome &other) {
    cases += other.cases;
    failed += other.failed;
    worst = std::max(worst, other.worst);
    for (const std::string &m : other.messages)
        if (messages.size() < 5)
            messages.push_back(m);
}

std::string Outcome::summary() const {
    std::ostringstream os;
    os << cases << " cases";
    if (worst > 0)
        os << ", worst error/tolerance " << worst;
    if (failed)
        os << ", " << failed << " failed";
    return os.str();
}

namespace {

std::string str(index_t v) { return std::to_string(v); }

MatrixView filled(index_t m, index_t n, DType dt, random::Rng &rng, int storage = 0) {
    MatrixView v;
    switch (storage) {
    case 0:
        v = make_view(m, n, dt);
        break;
    case 1:
        v = transposed(make_view(n, m, dt));
        break;
    default:
        v = make_view(m + 3, n + 5, dt)(Range{2, m}, Range{3, n});
        break;
    }
    random::fill_uniform(v, rng);
    return v;
}

std::uint64_t bits(double v) { return std::bit_cast<std::uint64_t>(v); }

ControlNode leaf(Op op, Variant v) { return ControlNode{op, v}; }

ControlNode blocked(Op op, Variant v, index_t bs, const ControlNode &child) {
    ControlNode n{op, v};
    n.bs    = bs;
    n.child = std::make_shared<const ControlNode>(child);
    return n;
}

engine::KernelConfig small_config(DType dt) {
    engine::KernelConfig cfg = engine::KernelConfig::defaults(dt);
    cfg.mr = 4;
    cfg.nr = 3;
    cfg.mc = 8;
    cfg.kc = 5;
    cfg.nc = 9;
    return cfg;
}

} // namespace

// ---------------------------------------------------------------------------
// views
// ---------------------------------------------------------------------------

Outcome partition_coverage(index_t max_n, index_t max_bs) {
    Outcome out;
    for (index_t n = 0; n <= max_n; ++n)
        for (index_t bs = 1; bs <= max_bs; ++bs)
            for (index_t la = 0; la <= 2; ++la) {
                std::vector<int> seen(std::size_t(n), 0);
                bool shape_ok = true;
                for (const PartitionStep &s : partition_steps(n, bs, la)) {
                    shape_ok &= s.r0.start == 0 && s.r0.len == s.r1.start &&
                                s.r2.start == s.r1.start + s.r1.len &&
                                s.r2.start + s.r2.len == n && s.r1.len >= 1 && s.r1.len <= bs;
                    if (la > 0)
                        shape_ok &= s.r1b && s.r1b->start == s.r2.start &&
                                    s.r1b->len == std::min(la, s.r2.len);
                    for (index_t i = s.r1.start; i < s.r1.start + s.r1.len; ++i)
                        ++seen[std::size_t(i)];
                }
                const bool once =
                    std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
                out.expect(shape_ok && once, "partition_steps(" + str(n) + ", " + str(bs) +
                                                 ", " + str(la) + ")");
            }
    return out;
}

Outcome view_algebra(index_t max_dim) {
    Outcome out;
    for (index_t m = 1; m <= max_dim; ++m)
        for (index_t n = 1; n <= max_dim; ++n)
            for (Layout layout : {Layout::RowMajor, Layout::ColMajor}) {
                MatrixView a = make_view(m, n, DType::F64, layout, Fill::Sequence);
                MatrixView t = transposed(a), tt = transposed(t);
                bool ok = tt.offset() == a.offset() && tt.row_stride() == a.row_stride() &&
                          tt.col_stride() == a.col_stride() && t.storage() == a.storage();
                for (index_t i = 0; i < m; ++i)
                    for (index_t j = 0; j < n; ++j)
                        ok &= t.get(j, i) == a.get(i, j);
                const std::string tag = str(m) + "x" + str(n);
                out.expect(ok, "transpose involution " + tag);

                // Every sub-block and its transpose address distinct elements.
                for (index_t r0 = 0; r0 < m; ++r0)
                    for (index_t c0 = 0; c0 < n; ++c0) {
                        MatrixView s = a(span_of(r0, m), span_of(c0, n));
                        for (const MatrixView &v : {s, transposed(s)}) {
                            std::vector<index_t> addr;
                            for (index_t i = 0; i < v.rows(); ++i)
                                for (index_t j = 0; j < v.cols(); ++j)
                                    addr.push_back(v.offset() + i * v.row_stride() +
                                                   j * v.col_stride());
                            std::sort(addr.begin(), addr.end());
                            const bool distinct =
                                std::adjacent_find(addr.begin(), addr.end()) == addr.end();
                            out.expect(distinct && is_injective(v) &&
                                           v.storage() == a.storage(),
                                       "injective sub-block of " + tag);
                        }
                    }
            }
    return out;
}

// ---------------------------------------------------------------------------
// engine
// ---------------------------------------------------------------------------

Outcome gemm_oracle(int cases, index_t max_dim, std::uint64_t seed) {
    Outcome out;
    random::Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const index_t m = rng.integer(1, max_dim), n = rng.integer(1, max_dim),
                      k = rng.integer(1, max_dim);
        for (DType dt : {DType::F32, DType::F64})
            for (int storage = 0; storage < 3; ++storage) {
                MatrixView a = filled(m, k, dt, rng, storage);
                MatrixView b = filled(k, n, dt, rng, storage);
                MatrixView got = filled(m, n, dt, rng, storage);
                MatrixView ref = make_view(m, n, DType::F64);
                oracle::gemm_naive(1.0, a, b, 0.0, ref);
                const engine::KernelConfig cfg =
                    c % 2 ? small_config(dt) : engine::KernelConfig::defaults(dt);
                engine::gemm(1.0, a, b, 0.0, got, cfg);
                const double scale = oracle::max_abs(a) * oracle::max_abs(b);
                out.within(oracle::max_abs_diff(got, ref), 4.0 * double(k) * eps(dt) * scale,
                           "gemm " + str(m) + "x" + str(n) + "x" + str(k) + " " +
                               std::string(to_string(dt)) + " storage " + str(storage));
            }
    }
    return out;
}

Outcome gemm_determinism(index_t n, const std::vector<int> &ways, std::uint64_t seed) {
    Outcome out;
    MatrixView a = random::uniform_matrix(n, n, DType::F64, seed);
    MatrixView b = random::uniform_matrix(n, n, DType::F64, seed + 1);
    const engine::KernelConfig cfg = engine::KernelConfig::defaults(DType::F64);
    MatrixView first;
    for (int w : ways) {
        MatrixView c = make_view(n, n, DType::F64);
        engine::gemm(1.0, a, b, 0.0, c, cfg, w);
        if (first.empty()) {
            first = c;
            continue;
        }
        const bool same = std::memcmp(first.data<double>(), c.data<double>(),
                                      std::size_t(n * n) * sizeof(double)) == 0;
        out.expect(same, "gemm n=" + str(n) + " ways=" + str(w) + " differs from ways=" +
                             str(ways.front()));
    }
    return out;
}

Outcome gemmt_canary(int cases, std::uint64_t seed) {
    Outcome out;
    random::Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const index_t m = rng.integer(1, 40), k = rng.integer(1, 30);
        const DType dt = c % 2 ? DType::F32 : DType::F64;
        MatrixView a = filled(m, k, dt, rng), b = filled(k, m, dt, rng);
        MatrixView got = filled(m, m, dt, rng);
        for (index_t i = 0; i < m; ++i)
            for (index_t j = i + 1; j < m; ++j)
                got.set(i, j, 12345.0);
        MatrixView before = copy_of(got);
        MatrixView ref    = make_view(m, m, DType::F64);
        oracle::gemm_naive(1.0, a, b, 0.0, ref);
        engine::gemmt_lower(1.0, a, b, 0.0, got, c % 3 ? small_config(dt) :
                                                         engine::KernelConfig::defaults(dt));
        bool upper_same = true;
        double err = 0;
        for (index_t i = 0; i < m; ++i)
            for (index_t j = 0; j < m; ++j) {
                if (j > i)
                    upper_same &= bits(got.get(i, j)) == bits(before.get(i, j));
                else
                    err = std::max(err, std::abs(got.get(i, j) - ref.get(i, j)));
            }
        const std::string tag = "gemmt m=" + str(m) + " k=" + str(k);
        out.expect(upper_same, tag + ": strict upper triangle changed");
        out.within(err, 4.0 * double(k) * eps(dt) * oracle::max_abs(a) * oracle::max_abs(b),
                   tag);
    }
    return out;
}

Outcome sandwich_fusion(int cases, std::uint64_t seed) {
    Outcome out;
    random::Rng rng(seed);
    for (int c = 0; c < cases; ++c) {
        const index_t n = rng.integer(1, 90), k = rng.integer(1, 40);
        const DType dt  = c % 4 == 3 ? DType::F32 : DType::F64;
        const engine::KernelConfig cfg =
            c % 2 ? small_config(dt) : engine::KernelConfig::defaults(dt);
        MatrixView a = filled(n, k, dt, rng);
        std::vector<double> t(std::size_t(k - 1));
        for (double &v : t)
            v = dt == DType::F32 ? double(float(rng.uniform())) : rng.uniform();

        MatrixView fused = filled(n, n, dt, rng);
        for (index_t i = 0; i < n; ++i)
            for (index_t j = i + 1; j < n; ++j)
                fused.set(i, j, -777.0);
        MatrixView before = copy_of(fused);

        // Unfused: W = T * A^T formed explicitly, then the masked product.
        MatrixView w = make_view(k, n, dt);
        for (index_t p = 0; p < k; ++p)
            for (index_t j = 0; j < n; ++j) {
                double v = 0;
                if (p > 0)
                    v += t[std::size_t(p - 1)] * a.get(j, p - 1);
                if (p + 1 < k)
                    v -= t[std::size_t(p)] * a.get(j, p + 1);
                w.set(p, j, v);
            }
        MatrixView unfused = copy_of(before);
        engine::gemmt_lower(-1.0, a, w, 1.0, unfused, cfg);

        const engine::AllocationStats base = engine::allocation_stats();
        engine::reset_allocation_peak();
        engine::sandwich_skew(fused, a, t, cfg);
        const std::size_t extra = engine::allocation_stats().peak - base.current;
        const std::size_t bound = std::size_t(cfg.mc * cfg.kc + cfg.kc * cfg.nc);

        bool upper_same = true;
        double err = 0;
        for (index_t i = 0; i < n; ++i)
            for (index_t j = 0; j < n; ++j) {
                if (j > i)
                    upper_same &= bits(fused.get(i, j)) == bits(before.get(i, j));
                else
                    err = std::max(err, std::abs(fused.get(i, j) - unfused.get(i, j)));
            }
        const std::string tag = "sandwich n=" + str(n) + " k=" + str(k);
        const double scale = oracle::max_abs(a) * std::max(oracle::max_abs(w), 1e-300);
        out.within(err, 8.0 * double(k) * eps(dt) * scale, tag);
        out.expect(upper_same, tag + ": strict upper triangle changed");
        out.expect(extra <= bound, tag + ": workspace " + std::to_string(extra) +
                                       " elements exceeds " + std::to_string(bound));
    }
    return out;
}

// ---------------------------------------------------------------------------
// control
// ---------------------------------------------------------------------------

Outcome control_trees() {
    Outcome out;
    for (Op op : {Op::Cholesky, Op::LU, Op::QR, Op::LTLT, Op::Gemm})
        for (index_t n : {1, 64, 500}) {
            ControlNode t = control::default_tree(op, n, DType::F64);
            out.expect(control::validate(t, {op, n, n, n}).empty(),
                       "default tree for " + std::string(to_string(op)) + " n=" + str(n));
        }

    const std::vector<Variant> chol = {Variant::blocked_v(1), Variant::blocked_v(2),
                                       Variant::blocked_v(3)};
    const auto trees = control::enumerate_trees(Op::Cholesky, chol, {64, 128}, 1);
    out.expect(trees.size() == 18, "cholesky enumeration has " + str(index_t(trees.size())) +
                                       " trees, expected 18");
    const auto deep = control::enumerate_trees(Op::Cholesky, chol, {64, 128}, 2);
    out.expect(deep.size() == 108, "depth-2 cholesky enumeration size");
    const auto kcs = control::enumerate_trees(Op::Gemm, {Variant::blocked_v()}, {128, 256}, 1);
    out.expect(kcs.size() == 2, "gemm kc enumeration size");

    for (const auto *set : {&trees, &deep, &kcs})
        for (const ControlNode &t : *set) {
            ControlNode back = control::parse_tree(control::serialize(t));
            out.expect(back == t, "serialize/parse round trip of " + control::describe(t));
        }

    const char *bad[] = {
        R"({"op":"cholesky","variant":"unblocked3","bs":64})",
        R"({"op":"cholesky","variant":3})",
        R"({"op":"lu","variant":"blocked","bs":32,"speed":1})",
        R"({"op":"qr","variant":"blocked","bs":0})",
        R"({"op":"cholesky","variant":3,"bs":8,"child":{"op":"lu","variant":"unblocked"}})",
    };
    for (const char *text : bad) {
        bool rejected = false;
        try {
            ControlNode t = control::parse_tree(text);
            rejected = !control::validate(t).empty();
        } catch (const control::InvalidControlTree &e) {
            rejected = !e.diagnostics().empty() && !e.diagnostics().front().path.empty();
        }
        out.expect(rejected, std::string("malformed tree accepted: ") + text);
    }
    return out;
}

// ---------------------------------------------------------------------------
// factorizations
// ---------------------------------------------------------------------------

Outcome cholesky_family(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                        std::uint64_t seed) {
    Outcome out;
    const double e = eps(DType::F64);
    for (index_t n : ns) {
        MatrixView a   = random::spd_matrix(n, DType::F64, seed + std::uint64_t(n));
        MatrixView ref = copy_of(a);
        oracle::chol_scalar(ref);
        const double anorm = oracle::frobenius(a);
        for (int v = 1; v <= 3; ++v)
            for (index_t bs : bss)
                for (const Variant &lv : control::leaf_variants(Op::Cholesky)) {
                    ControlNode tree =
                        blocked(Op::Cholesky, Variant::blocked_v(v), bs, leaf(Op::Cholesky, lv));
                    MatrixView f = copy_of(a);
                    factor::cholesky(f, factor::Uplo::Lower, tree);
                    double diff = 0;
                    for (index_t i = 0; i < n; ++i)
                        for (index_t j = 0; j <= i; ++j)
                            diff = std::max(diff, std::abs(f.get(i, j) - ref.get(i, j)));
                    const std::string tag = "cholesky n=" + str(n) + " " + control::describe(tree);
                    out.within(oracle::chol_residual(a, f), 10.0 * double(n) * e, tag);
                    out.within(diff, 100.0 * double(n) * e * anorm / double(n),
                               tag + " vs scalar");
                }
    }
    return out;
}

Outcome cholesky_upper(const std::vector<index_t> &ns, std::uint64_t seed) {
    Outcome out;
    for (index_t n : ns) {
        MatrixView a = random::spd_matrix(n, DType::F64, seed + std::uint64_t(n));
        std::vector<ControlNode> trees = {control::default_tree(Op::Cholesky, n, DType::F64)};
        for (int v = 1; v <= 3; ++v)
            trees.push_back(blocked(Op::Cholesky, Variant::blocked_v(v), 7,
                                    leaf(Op::Cholesky, Variant::unblocked_v(v))));
        for (const ControlNode &tree : trees) {
            MatrixView lo = copy_of(a), up = copy_of(a);
            factor::cholesky(lo, factor::Uplo::Lower, tree);
            factor::cholesky(up, factor::Uplo::Upper, tree);
            MatrixView ut = transposed(up);
            bool same     = true;
            for (index_t i = 0; i < n; ++i)
                for (index_t j = 0; j <= i; ++j)
                    same &= bits(ut.get(i, j)) == bits(lo.get(i, j));
            out.expect(same, "upper cholesky n=" + str(n) + " " + control::describe(tree) +
                                 " is not the bitwise transpose of lower");
        }
    }
    return out;
}

Outcome lu_family(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                  std::uint64_t seed) {
    Outcome out;
    const double e = eps(DType::F64);
    for (index_t n : ns) {
        MatrixView a   = random::uniform_matrix(n, n, DType::F64, seed + std::uint64_t(n));
        MatrixView wc  = random::dominant_matrix(n, DType::F64, seed + 1000 + std::uint64_t(n));
        MatrixView rhs = random::uniform_matrix(n, 3, DType::F64, seed + 2000 + std::uint64_t(n));
        for (index_t bs : bss) {
            ControlNode tree = blocked(Op::LU, Variant::blocked_v(), bs,
                                       leaf(Op::LU, Variant::unblocked_v()));
            const std::string tag = "lu n=" + str(n) + " bs=" + str(bs);
            MatrixView f    = copy_of(a);
            factor::LuResult r = factor::lu_partial(f, tree);
            out.within(oracle::lu_residual(a, f, r.pivots.piv), 10.0 * double(n) * e, tag);

            MatrixView g = copy_of(wc);
            factor::LuResult rg = factor::lu_partial(g, tree);
            MatrixView x = copy_of(rhs);
            factor::lu_solve(g, rg.pivots, x);
            out.within(oracle::solve_residual(wc, x, rhs), 10.0 * double(n) * e,
                       tag + " solve");
        }
    }
    return out;
}

Outcome qr_family(index_t m, index_t n, const std::vector<index_t> &bss, std::uint64_t seed) {
    Outcome out;
    const double e = eps(DType::F64);
    MatrixView a = random::uniform_matrix(m, n, DType::F64, seed);
    for (index_t bs : bss) {
        ControlNode tree =
            blocked(Op::QR, Variant::blocked_v(), bs, leaf(Op::QR, Variant::unblocked_v()));
        MatrixView f = copy_of(a);
        factor::Reflectors refl = factor::qr_householder(f, tree);
        MatrixView q = factor::form_q(f, refl);
        const std::string tag = "qr " + str(m) + "x" + str(n) + " bs=" + str(bs);
        out.within(oracle::qr_residual(a, q, factor::extract_r(f)), 10.0 * double(m) * e, tag);
        out.within(oracle::orthogonality(q), 10.0 * double(m) * e, tag + " orthogonality");
    }
    return out;
}

Outcome ltlt_reconstruction(const std::vector<index_t> &ns, const std::vector<index_t> &bss,
                            std::uint64_t seed) {
    Outcome out;
    for (index_t n : ns)
        for (DType dt : {DType::F64, DType::F32}) {
            MatrixView x = random::skew_matrix(n, dt, seed + std::uint64_t(n));
            std::vector<ControlNode> trees = {leaf(Op::LTLT, Variant::unblocked_v())};
            for (index_t bs : bss)
                trees.push_back(blocked(Op::LTLT, Variant::blocked_v(), bs,
                                        leaf(Op::LTLT, Variant::unblocked_v())));
            for (const ControlNode &tree : trees) {
                MatrixView f = copy_of(x);
                factor::LtltResult r = factor::ltlt_pivoted(f, tree);
                out.within(oracle::ltlt_residual(x, f, r.pivots.piv, r.tridiag.t),
                           10.0 * double(n) * eps(dt),
                           "ltlt n=" + str(n) + " " + std::string(to_string(dt)) + " " +
                               control::describe(tree));
            }
        }
    return out;
}

Outcome pfaffian_vs_matchings(int count, std::uint64_t seed) {
    Outcome out;
    for (int c = 0; c < count; ++c) {
        const index_t n = 2 * (1 + c % 5);
        MatrixView x    = random::skew_matrix(n, DType::F64, seed + std::uint64_t(c));
        const double want = oracle::pfaffian_combinatorial(x);
        ControlNode tree  = c % 2 ? blocked(Op::LTLT, Variant::blocked_v(), 1 + c % 4,
                                            leaf(Op::LTLT, Variant::unblocked_v()))
                                  : leaf(Op::LTLT, Variant::unblocked_v());
        const double got = factor::pfaffian(x, tree);
        out.within(std::abs(got - want), 1e-10 * std::abs(want),
                   "pfaffian n=" + str(n) + " case " + std::to_string(c));
    }
    return out;
}

Outcome pfaffian_vs_determinant(const std::vector<index_t> &ns, std::uint64_t seed) {
    Outcome out;
    for (index_t n : ns) {
        MatrixView x    = random::skew_matrix(n, DType::F64, seed + std::uint64_t(n));
        const double pf = factor::pfaffian(x), det = oracle::determinant(x);
        out.within(std::abs(pf * pf - det), 1e-8 * std::abs(det), "pf^2 vs det n=" + str(n));
    }
    return out;
}

Outcome pfaffian_permutation(index_t max_n, std::uint64_t seed) {
    Outcome out;
    random::Rng rng(seed);
    for (index_t n = 1; n <= max_n; ++n)
        for (int rep = 0; rep < 5; ++rep) {
            MatrixView x = random::skew_matrix(n, DType::F64, seed + std::uint64_t(10 * n + rep));
            std::vector<index_t> p(static_cast<std::size_t>(n));
            std::iota(p.begin(), p.end(), 0);
            for (index_t i = n - 1; i > 0; --i)
                std::swap(p[std::size_t(i)], p[std::size_t(rng.integer(0, i))]);
            MatrixView y = make_view(n, n, DType::F64);
            for (index_t i = 0; i < n; ++i)
                for (index_t j = 0; j < n; ++j)
                    y.set(i, j, x.get(p[std::size_t(i)], p[std::size_t(j)]));
            // Sign from the cycle decomposition.
            int sign = 1;
            std::vector<bool> seen(std::size_t(n), false);
            for (index_t i = 0; i < n; ++i) {
                if (seen[std::size_t(i)])
                    continue;
                index_t len = 0;
                for (index_t j = i; !seen[std::size_t(j)]; j = p[std::size_t(j)]) {
                    seen[std::size_t(j)] = true;
                    ++len;
                }
                if (len % 2 == 0)
                    sign = -sign;
            }
            const double px = factor::pfaffian(x), py = factor::pfaffian(y);
            const std::string tag = "permuted pfaffian n=" + str(n);
            if (n % 2)
                out.expect(px == 0.0 && py == 0.0, tag + ": odd order must give 0");
            else
                out.within(std::abs(py - sign * px), 1e-10 * std::abs(px), tag);
        }
    return out;
}

// ---------------------------------------------------------------------------
// tensor
// ---------------------------------------------------------------------------

namespace {

struct RandomContraction {
    std::string spec;
    std::vector<index_t> da, db, dc;
    index_t k_size = 1;
};

RandomContraction random_contraction(random::Rng &rng) {
    int nm = 0, nn = 0, nk = 0;
    do {
        nm = int(rng.integer(0, 3));
        nn = int(rng.integer(0, 3));
        nk = int(rng.integer(0, 3));
    } while (nm + nk < 2 || nm + nk > 4 || nn + nk < 2 || nn + nk > 4 || nm + nn < 2 ||
             nm + nn > 4);
    std::string letters = "abcdefghijklmnopqrstuvwxyz";
    for (std::size_t i = letters.size() - 1; i > 0; --i)
        std::swap(letters[i], letters[std::size_t(rng.integer(0, index_t(i)))]);
    const std::string ml = letters.substr(0, std::size_t(nm));
    const std::string nl = letters.substr(std::size_t(nm), std::size_t(nn));
    const std::string kl = letters.substr(std::size_t(nm + nn), std::size_t(nk));
    auto shuffled = [&](std::string s) {
        for (std::size_t i = s.size(); i > 1; --i)
            std::swap(s[i - 1], s[std::size_t(rng.integer(0, index_t(i - 1)))]);
        return s;
    };
    RandomContraction rc;
    const std::string a = shuffled(ml + kl), b = shuffled(kl + nl), c = shuffled(ml + nl);
    rc.spec = a + "," + b + "->" + c;
    std::array<index_t, 26> dim{};
    for (char l : ml + nl + kl)
        dim[std::size_t(l - 'a')] = rng.integer(1, 5);
    for (char l : kl)
        rc.k_size *= dim[std::size_t(l - 'a')];
    for (char l : a)
        rc.da.push_back(dim[std::size_t(l - 'a')]);
    for (char l : b)
        rc.db.push_back(dim[std::size_t(l - 'a')]);
    for (char l : c)
        rc.dc.push_back(dim[std::size_t(l - 'a')]);
    return rc;
}

TensorView random_tensor(const std::vector<index_t> &dims, DType dt, random::Rng &rng) {
    std::vector<int> order(dims.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[std::size_t(rng.integer(0, index_t(i - 1)))]);
    TensorView t = make_tensor(dims, dt, order, rng.integer(0, 2));
    random::fill_uniform(t, rng);
    return t;
}

TensorView tensor_copy(const TensorView &t) {
    TensorView c = make_tensor({t.dims().begin(), t.dims().end()}, t.dtype());
    if (t.size() == 0)
        return c;
    std::vector<index_t> idx(std::size_t(t.rank()), 0);
    do {
        c.set(idx, t.get(idx));
    } while (next_index(idx, t.dims()));
    return c;
}

double tensor_max(const TensorView &t, const TensorView *minus = nullptr, bool bitwise = false,
                  bool *same = nullptr) {
    double d = 0;
    std::vector<index_t> idx(std::size_t(t.rank()), 0);
    do {
        const double v = t.get(idx), w = minus ? minus->get(idx) : 0.0;
        d = std::max(d, std::abs(v - w));
        if (bitwise && same)
            *same = *same && bits(v) == bits(w);
    } while (next_index(idx, t.dims()));
    return d;
}

} // namespace

Outcome contraction(int specs, std::uint64_t seed) {
    Outcome out;
    random::Rng rng(seed);
    for (int s = 0; s < specs; ++s) {
        const RandomContraction rc = random_contraction(rng);
        const DType dt = s % 3 == 2 ? DType::F32 : DType::F64;
        TensorView a = random_tensor(rc.da, dt, rng), b = random_tensor(rc.db, dt, rng);
        TensorView c = random_tensor(rc.dc, dt, rng);
        TensorView ref = tensor_copy(c);
        oracle::contract_naive(1.0, a, b, 0.0, ref, rc.spec);

        const engine::KernelConfig cfg =
            s % 2 ? small_config(dt) : engine::KernelConfig::defaults(dt);
        const auto spec = tensor::ContractionSpec::parse(rc.spec);
        TensorView folded = tensor_copy(c), plain = tensor_copy(c);
        tensor::contract(1.0, a, b, 0.0, c, spec, cfg, 1, true);
        tensor::contract(1.0, a, b, 0.0, folded, spec, cfg, 1, true);
        tensor::contract(1.0, a, b, 0.0, plain, spec, cfg, 1, false);

        const double scale = tensor_max(a) * tensor_max(b);
        out.within(tensor_max(c, &ref), 4.0 * double(rc.k_size) * eps(dt) * scale,
                   "contract " + rc.spec);
        bool same = true;
        tensor_max(folded, &plain, true, &same);
        out.expect(same, "contract " + rc.spec + ": folding changed the result");
    }
    return out;
}

Outcome scatter_exhaustive(index_t max_size) {
    Outcome out;
    for (int rank = 1; rank <= 3; ++rank) {
        std::vector<index_t> dims(std::size_t(rank), 1);
        do {
            for (int reversed = 0; reversed < 2; ++reversed)
                for (index_t pad = 0; pad < 2; ++pad) {
                    std::vector<int> order(static_cast<std::size_t>(rank));
                    std::iota(order.begin(), order.end(), 0);
                    if (reversed)
                        std::reverse(order.begin(), order.end());
                    TensorView t = make_tensor(dims, DType::F64, order, pad);
                    for (int mask = 0; mask < (1 << rank); ++mask)
                        for (index_t blk : {2, 3}) {
                            std::vector<int> rows, cols;
                            for (int q = 0; q < rank; ++q)
                                ((mask >> q) & 1 ? rows : cols).push_back(q);
                            if (reversed)
                                std::reverse(rows.begin(), rows.end());
                            tensor::BlockScatterView v =
                                tensor::block_scatter(t, rows, cols, blk, blk + 1);
                            bool ok = true;
                            // Decompose each (i, j) into the multi-index, last listed fastest.
                            for (index_t i = 0; i < v.m && ok; ++i)
                                for (index_t j = 0; j < v.n && ok; ++j) {
                                    std::vector<index_t> idx(std::size_t(rank), 0);
                                    index_t ri = i, cj = j;
                                    for (auto q = rows.rbegin(); q != rows.rend(); ++q) {
                                        idx[std::size_t(*q)] = ri % dims[std::size_t(*q)];
                                        ri /= dims[std::size_t(*q)];
                                    }
                                    for (auto q = cols.rbegin(); q != cols.rend(); ++q) {
                                        idx[std::size_t(*q)] = cj % dims[std::size_t(*q)];
                                        cj /= dims[std::size_t(*q)];
                                    }
                                    ok &= v.rscat[std::size_t(i)] + v.cscat[std::size_t(j)] ==
                                          t.linear(idx);
                                }
                            auto strides_ok = [](const std::vector<index_t> &scat,
                                                 const std::vector<index_t> &bs, index_t block) {
                                for (std::size_t b = 0; b < bs.size(); ++b) {
                                    const std::size_t lo = b * std::size_t(block);
                                    const std::size_t hi =
                                        std::min(scat.size(), lo + std::size_t(block));
                                    bool arith = true;
                                    for (std::size_t x = lo + 1; x + 1 < hi; ++x)
                                        arith &= scat[x + 1] - scat[x] == scat[lo + 1] - scat[lo];
                                    if (hi - lo >= 2 &&
                                        (arith ? bs[b] != scat[lo + 1] - scat[lo] : bs[b] != 0))
                                        return false;
                                }
                                return bs.size() ==
                                       (scat.size() + std::size_t(block) - 1) / std::size_t(block);
                            };
                            ok &= strides_ok(v.rscat, v.rbs, blk) &&
                                  strides_ok(v.cscat, v.cbs, blk + 1);
                            std::string tag = "block_scatter dims";
                            for (index_t d : dims)
                                tag += " " + str(d);
                            out.expect(ok, tag + " mask " + std::to_string(mask));
                        }
                }
        } while ([&] {
            for (int q = rank - 1; q >= 0; --q) {
                if (++dims[std::size_t(q)] <= max_size)
                    return true;
                dims[std::size_t(q)] = 1;
            }
            return false;
        }());
    }
    return out;
}

} // namespace famlies::props
