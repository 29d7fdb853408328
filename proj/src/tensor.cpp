#include <famlies/tensor.hpp>

#include "engine/five_loops.hpp"

#include <algorithm>
#include <array>
#include <numeric>

namespace famlies::tensor {

namespace {

bool has(const std::string &s, char c) { return s.find(c) != std::string::npos; }

void check_labels(const std::string &labels, const char *what) {
    std::array<bool, 26> seen{};
    for (char ch : labels) {
        if (ch < 'a' || ch > 'z')
            throw ConfigError(std::string("contraction spec: bad label '") + ch + "' in " + what);
        if (seen[std::size_t(ch - 'a')])
            throw ConfigError(std::string("contraction spec: label '") + ch +
                              "' repeated in " + what);
        seen[std::size_t(ch - 'a')] = true;
    }
    if (labels.size() > std::size_t(max_tensor_rank))
        throw ConfigError(std::string("contraction spec: too many labels in ") + what);
}

} // namespace

ContractionSpec ContractionSpec::parse(std::string_view text) {
    const auto comma = text.find(',');
    const auto arrow = text.find("->");
    if (comma == std::string_view::npos || arrow == std::string_view::npos || arrow < comma)
        throw ConfigError("contraction spec must look like 'ab,bc->ac', got '" +
                          std::string(text) + "'");
    ContractionSpec s{std::string(text.substr(0, comma)),
                      std::string(text.substr(comma + 1, arrow - comma - 1)),
                      std::string(text.substr(arrow + 2))};
    check_labels(s.a, "a");
    check_labels(s.b, "b");
    check_labels(s.c, "c");
    for (char ch = 'a'; ch <= 'z'; ++ch) {
        const int count = int(has(s.a, ch)) + int(has(s.b, ch)) + int(has(s.c, ch));
        if (count == 3)
            throw ConfigError(std::string("contraction spec: label '") + ch +
                              "' appears in all three operands");
        if (count == 1)
            throw ConfigError(std::string("contraction spec: label '") + ch +
                              "' appears in only one operand");
    }
    return s;
}

std::string ContractionSpec::str() const { return a + "," + b + "->" + c; }

std::vector<index_t> scatter_offsets(std::span<const index_t> dims,
                                     std::span<const index_t> strides) {
    index_t total = 1;
    for (index_t d : dims)
        total *= d;
    std::vector<index_t> out;
    out.reserve(std::size_t(total));
    if (total == 0)
        return out;
    std::vector<index_t> idx(dims.size(), 0);
    do {
        index_t off = 0;
        for (std::size_t q = 0; q < dims.size(); ++q)
            off += idx[q] * strides[q];
        out.push_back(off);
    } while (next_index(idx, dims));
    return out;
}

std::vector<index_t> block_strides(std::span<const index_t> scat, index_t block, index_t inner) {
    const index_t len = index_t(scat.size());
    std::vector<index_t> out;
    for (index_t s = 0; s < len; s += block) {
        const index_t e = std::min(s + block, len);
        if (e - s == 1) {
            out.push_back(inner);
            continue;
        }
        index_t step = scat[std::size_t(s + 1)] - scat[std::size_t(s)];
        for (index_t i = s + 2; i < e && step != 0; ++i)
            if (scat[std::size_t(i)] - scat[std::size_t(i - 1)] != step)
                step = 0;
        out.push_back(step);
    }
    return out;
}

namespace {

struct Group {
    std::vector<index_t> dims, strides;
};

void fill_side(std::vector<index_t> &scat, std::vector<index_t> &bs, index_t &extent,
               const Group &g, index_t block) {
    scat   = scatter_offsets(g.dims, g.strides);
    bs     = block_strides(scat, block, g.strides.empty() ? 1 : g.strides.back());
    extent = index_t(scat.size());
}

BlockScatterView make_bsv(const Group &rows, const Group &cols, index_t mr, index_t nr) {
    BlockScatterView v;
    v.mr = mr;
    v.nr = nr;
    fill_side(v.rscat, v.rbs, v.m, rows, mr);
    fill_side(v.cscat, v.cbs, v.n, cols, nr);
    return v;
}

} // namespace

BlockScatterView block_scatter(const TensorView &t, std::span<const int> row_modes,
                               std::span<const int> col_modes, index_t mr, index_t nr) {
    if (mr < 1 || nr < 1)
        throw DimensionError("block_scatter: block sizes must be positive");
    std::vector<bool> used(std::size_t(t.rank()), false);
    Group rows, cols;
    auto take = [&](std::span<const int> modes, Group &g) {
        for (int mode : modes) {
            if (mode < 0 || mode >= t.rank() || used[std::size_t(mode)])
                throw DimensionError("block_scatter: row and column modes must partition the "
                                     "tensor's modes");
            used[std::size_t(mode)] = true;
            g.dims.push_back(t.dim(mode));
            g.strides.push_back(t.stride(mode));
        }
    };
    take(row_modes, rows);
    take(col_modes, cols);
    if (std::find(used.begin(), used.end(), false) != used.end())
        throw DimensionError("block_scatter: every mode must be a row or a column mode");
    return make_bsv(rows, cols, mr, nr);
}

namespace {

index_t stride_of(const TensorView &t, const std::string &labels, char ch) {
    const auto pos = labels.find(ch);
    return pos == std::string::npos ? 0 : t.stride(int(pos));
}

void order_and_fold(std::vector<PlanMode> &modes, index_t PlanMode::*key, bool fold) {
    std::stable_sort(modes.begin(), modes.end(),
                     [key](const PlanMode &x, const PlanMode &y) { return x.*key > y.*key; });
    if (!fold || modes.size() < 2)
        return;
    std::vector<PlanMode> out{modes.front()};
    for (std::size_t q = 1; q < modes.size(); ++q) {
        PlanMode &p       = out.back();
        const PlanMode &f = modes[q];
        const bool contiguous = p.stride_a == f.dim * f.stride_a &&
                                p.stride_b == f.dim * f.stride_b &&
                                p.stride_c == f.dim * f.stride_c;
        if (!contiguous) {
            out.push_back(f);
            continue;
        }
        p.labels += f.labels;
        p.dim *= f.dim;
        p.stride_a = f.stride_a;
        p.stride_b = f.stride_b;
        p.stride_c = f.stride_c;
    }
    modes = std::move(out);
}

Group group_of(const std::vector<PlanMode> &modes, index_t PlanMode::*stride) {
    Group g;
    for (const PlanMode &m : modes) {
        g.dims.push_back(m.dim);
        g.strides.push_back(m.*stride);
    }
    return g;
}

index_t extent(const std::vector<PlanMode> &modes) {
    index_t e = 1;
    for (const PlanMode &m : modes)
        e *= m.dim;
    return e;
}

} // namespace

ContractionPlan plan_contraction(const ContractionSpec &spec, const TensorView &a,
                                 const TensorView &b, const TensorView &c, index_t mr,
                                 index_t nr, bool fold) {
    if (index_t(spec.a.size()) != a.rank() || index_t(spec.b.size()) != b.rank() ||
        index_t(spec.c.size()) != c.rank())
        throw DimensionError("plan_contraction: label count does not match tensor rank");

    auto dim_of = [&](char ch) {
        index_t d = -1;
        auto check = [&](const TensorView &t, const std::string &labels) {
            const auto pos = labels.find(ch);
            if (pos == std::string::npos)
                return;
            const index_t e = t.dim(int(pos));
            if (d >= 0 && d != e)
                throw DimensionError(std::string("plan_contraction: inconsistent extent for "
                                                 "label '") + ch + "'");
            d = e;
        };
        check(a, spec.a);
        check(b, spec.b);
        check(c, spec.c);
        return d;
    };
    auto mode = [&](char ch) {
        return PlanMode{std::string(1, ch), dim_of(ch), stride_of(a, spec.a, ch),
                        stride_of(b, spec.b, ch), stride_of(c, spec.c, ch)};
    };

    ContractionPlan plan;
    for (char ch : spec.c)
        (has(spec.a, ch) ? plan.m_modes : plan.n_modes).push_back(mode(ch));
    for (char ch : spec.a)
        if (!has(spec.c, ch)) {
            if (!has(spec.b, ch))
                throw DimensionError(std::string("plan_contraction: label '") + ch +
                                     "' is neither kept nor contracted");
            plan.k_modes.push_back(mode(ch));
        }
    for (char ch : spec.b)
        if (!has(spec.a, ch) && !has(spec.c, ch))
            throw DimensionError(std::string("plan_contraction: label '") + ch +
                                 "' is neither kept nor contracted");

    order_and_fold(plan.m_modes, &PlanMode::stride_c, fold);
    order_and_fold(plan.n_modes, &PlanMode::stride_c, fold);
    order_and_fold(plan.k_modes, &PlanMode::stride_a, fold);
    plan.m = extent(plan.m_modes);
    plan.n = extent(plan.n_modes);
    plan.k = extent(plan.k_modes);

    plan.a = make_bsv(group_of(plan.m_modes, &PlanMode::stride_a),
                      group_of(plan.k_modes, &PlanMode::stride_a), mr, nr);
    plan.b = make_bsv(group_of(plan.k_modes, &PlanMode::stride_b),
                      group_of(plan.n_modes, &PlanMode::stride_b), mr, nr);
    plan.c = make_bsv(group_of(plan.m_modes, &PlanMode::stride_c),
                      group_of(plan.n_modes, &PlanMode::stride_c), mr, nr);
    return plan;
}

namespace {

std::vector<index_t> absolute_offsets(const TensorView &t) {
    std::vector<index_t> out = scatter_offsets(t.dims(), t.strides());
    for (index_t &o : out)
        o += t.offset();
    std::sort(out.begin(), out.end());
    return out;
}

bool intersects(const std::vector<index_t> &x, const std::vector<index_t> &y) {
    auto i = x.begin();
    auto j = y.begin();
    while (i != x.end() && j != y.end()) {
        if (*i == *j)
            return true;
        *i < *j ? ++i : ++j;
    }
    return false;
}

template <class F>
void dispatch_acc(const engine::KernelConfig &cfg, F &&f) {
    if (cfg.dtype == DType::F64)
        f(double{}, double{});
    else if (cfg.acc_dtype == DType::F64)
        f(float{}, double{});
    else
        f(float{}, float{});
}

} // namespace

void contract(double alpha, const TensorView &a, const TensorView &b, double beta,
              const TensorView &c, const ContractionSpec &spec, const engine::KernelConfig &cfg,
              int ways, bool fold) {
    cfg.validate();
    if (a.dtype() != c.dtype() || b.dtype() != c.dtype() || cfg.dtype != c.dtype())
        throw ConfigError("contract: operand and kernel dtypes must agree");
    if (ways < 1)
        throw ConfigError("contract: ways must be >= 1");
    const ContractionPlan plan = plan_contraction(spec, a, b, c, cfg.mr, cfg.nr, fold);

    const std::vector<index_t> c_off = absolute_offsets(c);
    if (std::adjacent_find(c_off.begin(), c_off.end()) != c_off.end())
        throw AliasingError("contract: output tensor addresses an element more than once");
    for (const TensorView *src : {&a, &b})
        if (src->storage() == c.storage() && intersects(absolute_offsets(*src), c_off))
            throw AliasingError("contract: output overlaps an input");

    if (plan.m == 0 || plan.n == 0)
        return;
    dispatch_acc(cfg, [&](auto tt, auto acc) {
        using T   = decltype(tt);
        using Acc = decltype(acc);
        T *cbase  = c.data<T>();
        if (plan.k == 0 || alpha == 0.0) {
            if (beta == 1.0)
                return;
            for (index_t r : plan.c.rscat)
                for (index_t q : plan.c.cscat) {
                    T &x = cbase[r + q];
                    x    = beta == 0.0 ? T(0) : T(T(beta) * x);
                }
            return;
        }
        auto scatter = [&](const BlockScatterView &v, auto *base) {
            return engine::detail::Scatter<std::remove_pointer_t<decltype(base)>>{
                base, v.rscat.data(), v.cscat.data(), v.rbs.data(), v.cbs.data(), v.mr, v.nr};
        };
        engine::detail::ScatterA<T> sa{scatter(plan.a, static_cast<const T *>(a.data<T>()))};
        engine::detail::ScatterB<T> sb{scatter(plan.b, static_cast<const T *>(b.data<T>()))};
        engine::detail::ScatterC<T> sc{scatter(plan.c, cbase)};
        engine::detail::five_loops<T, Acc>(plan.m, plan.n, plan.k, alpha, sa, sb, beta, sc, cfg,
                                           ways, false);
    });
}

void contract(double alpha, const TensorView &a, const TensorView &b, double beta,
              const TensorView &c, std::string_view spec) {
    contract(alpha, a, b, beta, c, ContractionSpec::parse(spec),
             engine::KernelConfig::defaults(c.dtype()));
}

} // namespace famlies::tensor
