#include "cli.hpp"

#include <famlies/engine.hpp>
#include <famlies/factor.hpp>
#include <famlies/oracle.hpp>
#include <famlies/random.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <memory>

namespace famlies::cli {

using control::ControlNode;
using control::Op;

namespace {

// Seeded operands for one (op, shape, dtype, seed) plus a lazily formed gemm reference.
struct Workload {
    Op op;
    index_t m, n, k;
    DType dtype;
    MatrixView a, b;
    MatrixView gemm_ref;

    explicit Workload(const BenchOptions &o)
        : op(o.op), m(o.m < 0 ? o.n : o.m), n(o.n), k(o.k < 0 ? o.n : o.k), dtype(o.dtype) {
        switch (op) {
        case Op::Gemm:
            a = random::uniform_matrix(m, k, dtype, o.seed);
            b = random::uniform_matrix(k, n, dtype, o.seed + 1);
            break;
        case Op::Cholesky:
            a = random::spd_matrix(n, dtype, o.seed);
            break;
        case Op::LU:
        case Op::QR:
            a = random::uniform_matrix(m, n, dtype, o.seed);
            break;
        case Op::LTLT:
            a = random::skew_matrix(n, dtype, o.seed);
            break;
        }
    }

    control::Problem problem() const {
        switch (op) {
        case Op::Gemm:
            return {op, m, n, k};
        case Op::LU:
        case Op::QR:
            return {op, m, n, 0};
        default:
            return {op, n, n, 0};
        }
    }

    const MatrixView &reference() {
        if (gemm_ref.empty()) {
            gemm_ref = make_view(m, n, DType::F64);
            oracle::gemm_naive(1.0, a, b, 0.0, gemm_ref);
        }
        return gemm_ref;
    }
};

using Clock = std::chrono::steady_clock;

SweepRow run_tree(const ControlNode &tree, Workload &w, int repeats) {
    control::require_valid(tree, w.problem());
    const engine::KernelConfig cfg = tree.kernel_config(engine::KernelConfig::defaults(w.dtype));

    MatrixView out = w.op == Op::Gemm ? make_view(w.m, w.n, w.dtype) : copy_of(w.a);
    factor::PivotVector piv;
    factor::Reflectors refl;
    std::vector<double> t;
    std::function<void()> call;
    switch (w.op) {
    case Op::Gemm:
        call = [&] { engine::gemm(1.0, w.a, w.b, 0.0, out, cfg, tree.ways); };
        break;
    case Op::Cholesky:
        call = [&] { factor::cholesky(out, factor::Uplo::Lower, tree); };
        break;
    case Op::LU:
        call = [&] { piv = factor::lu_partial(out, tree).pivots; };
        break;
    case Op::QR:
        call = [&] { refl = factor::qr_householder(out, tree); };
        break;
    case Op::LTLT:
        call = [&] {
            factor::LtltResult r = factor::ltlt_pivoted(out, tree);
            piv                  = std::move(r.pivots);
            t                    = std::move(r.tridiag.t);
        };
        break;
    }

    std::vector<double> times;
    for (int r = 0; r <= repeats; ++r) {
        if (w.op != Op::Gemm)
            copy_into(w.a, out);
        const auto start = Clock::now();
        call();
        const double dt = std::chrono::duration<double>(Clock::now() - start).count();
        if (r > 0)
            times.push_back(dt);
    }
    std::nth_element(times.begin(), times.begin() + std::ptrdiff_t(times.size() / 2),
                     times.end());

    SweepRow row;
    row.op     = std::string(control::to_string(w.op));
    row.n      = w.n;
    row.tree   = control::describe(tree);
    row.mc     = cfg.mc;
    row.kc     = cfg.kc;
    row.nc     = cfg.nc;
    row.mr     = cfg.mr;
    row.nr     = cfg.nr;
    row.ways   = tree.ways;
    row.time_s = times[times.size() / 2];
    row.gflops = flop_count(w.op, w.m, w.n, w.k) / std::max(row.time_s, 1e-12) / 1e9;

    if (std::max({w.m, w.n, w.k}) <= oracle_cap) {
        switch (w.op) {
        case Op::Gemm: {
            const MatrixView &ref = w.reference();
            row.max_rel_err =
                oracle::max_abs_diff(out, ref) / std::max(oracle::max_abs(ref), 1e-300);
            break;
        }
        case Op::Cholesky:
            row.max_rel_err = oracle::chol_residual(w.a, out);
            break;
        case Op::LU:
            row.max_rel_err = oracle::lu_residual(w.a, out, piv.piv);
            break;
        case Op::QR:
            row.max_rel_err =
                oracle::qr_residual(w.a, factor::form_q(out, refl), factor::extract_r(out));
            break;
        case Op::LTLT:
            row.max_rel_err = oracle::ltlt_residual(w.a, out, piv.piv, t);
            break;
        }
    }
    return row;
}

void check_options(const BenchOptions &o) {
    if (o.n < 1 || o.m == 0 || o.k == 0 || o.m < -1 || o.k < -1)
        throw DimensionError("problem dimensions must be >= 1");
    if (o.repeats < 3)
        throw ConfigError("--repeats must be at least 3");
}

} // namespace

std::string to_csv(const SweepRow &r) {
    char buf[256];
    std::snprintf(buf, sizeof buf, ",%td,%td,%td,%td,%td,%d,%.6e,%.6g,", r.mc, r.kc, r.nc, r.mr,
                  r.nr, r.ways, r.time_s, r.gflops);
    std::string line = r.op + "," + std::to_string(r.n) + "," + r.tree + buf;
    if (r.max_rel_err) {
        std::snprintf(buf, sizeof buf, "%.17g", *r.max_rel_err);
        line += buf;
    }
    return line;
}

double flop_count(Op op, index_t m, index_t n, index_t k) {
    const double dm = double(m), dn = double(n), dk = double(k);
    switch (op) {
    case Op::Gemm:
        return 2 * dm * dn * dk;
    case Op::Cholesky:
    case Op::LTLT:
        return dn * dn * dn / 3;
    case Op::LU:
        return dm * dn * dn - dn * dn * dn / 3;
    case Op::QR:
        return 2 * dn * dn * (dm - dn / 3);
    }
    return 0;
}

ControlNode with_ways(const ControlNode &tree, int ways) {
    ControlNode copy = tree;
    copy.ways        = ways;
    if (copy.child)
        copy.child = std::make_shared<const ControlNode>(with_ways(*copy.child, ways));
    return copy;
}

SweepRow bench_tree(const ControlNode &tree, const BenchOptions &opts) {
    check_options(opts);
    Workload w(opts);
    return run_tree(tree, w, opts.repeats);
}

std::vector<SweepRow> sweep(const BenchOptions &opts, const std::vector<control::Variant> &variants,
                            const std::vector<index_t> &block_sizes, int depth,
                            const std::vector<int> &ways_list) {
    check_options(opts);
    if (ways_list.empty())
        throw ConfigError("sweep: the ways list is empty");
    const std::vector<ControlNode> trees =
        control::enumerate_trees(opts.op, variants, block_sizes, depth);
    if (trees.empty())
        throw ConfigError("sweep: enumeration produced no trees");
    Workload w(opts);
    std::vector<SweepRow> rows;
    for (const ControlNode &tree : trees)
        for (int ways : ways_list)
            rows.push_back(run_tree(with_ways(tree, ways), w, opts.repeats));
    return rows;
}

} // namespace famlies::cli
