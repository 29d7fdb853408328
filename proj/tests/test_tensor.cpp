#include <doctest.h>

#include <famlies/oracle.hpp>
#include <famlies/random.hpp>
#include <famlies/tensor.hpp>

#include <cmath>
#include <cstring>
#include <map>

using namespace famlies;
using namespace famlies::tensor;

namespace {

TensorView filled(std::vector<index_t> dims, std::uint64_t seed, DType dt = DType::F64) {
    TensorView t = make_tensor(std::move(dims), dt);
    random::Rng rng(seed);
    random::fill_uniform(t, rng);
    return t;
}

double max_diff(const TensorView &x, const TensorView &y) {
    double d = 0;
    if (x.size() == 0)
        return d;
    std::vector<index_t> idx(std::size_t(x.rank()), 0);
    do {
        d = std::max(d, std::abs(x.get(idx) - y.get(idx)));
    } while (next_index(idx, x.dims()));
    return d;
}

TensorView clone(const TensorView &t) {
    TensorView c = make_tensor({t.dims().begin(), t.dims().end()}, t.dtype());
    if (t.size() == 0)
        return c;
    std::vector<index_t> idx(std::size_t(t.rank()), 0);
    do {
        c.set(idx, t.get(idx));
    } while (next_index(idx, t.dims()));
    return c;
}

} // namespace

TEST_SUITE("tensor") {

TEST_CASE("spec parsing") {
    ContractionSpec s = ContractionSpec::parse("abk,kc->abc");
    CHECK(s.a == "abk");
    CHECK(s.b == "kc");
    CHECK(s.c == "abc");
    CHECK(s.str() == "abk,kc->abc");
    CHECK_THROWS_AS(ContractionSpec::parse("ab,bc"), ConfigError);
    CHECK_THROWS_AS(ContractionSpec::parse("aab,bc->ac"), ConfigError);
    CHECK_THROWS_AS(ContractionSpec::parse("ab,bc->abc"), ConfigError);
    CHECK_THROWS_AS(ContractionSpec::parse("ab,bc->acd"), ConfigError);
    CHECK_THROWS_AS(ContractionSpec::parse("aB,Bc->ac"), ConfigError);
}

TEST_CASE("block_scatter examples") {
    TensorView t(std::make_shared<Storage>(8 * sizeof(double)), 0, {2, 2, 2}, {4, 2, 1},
                 DType::F64);
    const int rows[] = {0, 2}, cols[] = {1};
    BlockScatterView v = block_scatter(t, rows, cols, 2, 2);
    CHECK(v.rscat == std::vector<index_t>{0, 1, 4, 5});
    CHECK(v.cscat == std::vector<index_t>{0, 2});
    CHECK(v.rbs == std::vector<index_t>{1, 1});

    TensorView m = make_tensor({4, 4}, DType::F64);
    const int r0[] = {0}, c1[] = {1};
    BlockScatterView mv = block_scatter(m, r0, c1, 2, 2);
    CHECK(mv.rbs == std::vector<index_t>{4, 4});
    CHECK(mv.cbs == std::vector<index_t>{1, 1});

    TensorView s(std::make_shared<Storage>(11 * sizeof(double)), 0, {3}, {5}, DType::F64);
    BlockScatterView sv = block_scatter(s, r0, std::span<const int>{}, 2, 2);
    CHECK(sv.rscat == std::vector<index_t>{0, 5, 10});
    CHECK(sv.rbs == std::vector<index_t>{5, 5});
    CHECK(sv.cscat == std::vector<index_t>{0});

    BlockScatterView odd = block_scatter(t, rows, cols, 4, 2);
    CHECK(odd.rbs == std::vector<index_t>{0});

    const int dup[] = {0, 0};
    CHECK_THROWS_AS(block_scatter(t, dup, cols, 2, 2), DimensionError);
    CHECK_THROWS_AS(block_scatter(t, r0, cols, 2, 2), DimensionError);
}

TEST_CASE("scatter addressing matches multi-index addressing") {
    random::Rng rng(5);
    for (int trial = 0; trial < 60; ++trial) {
        const int rank = int(rng.integer(1, 4));
        std::vector<index_t> dims;
        std::vector<int> order;
        for (int d = 0; d < rank; ++d) {
            dims.push_back(rng.integer(1, 4));
            order.push_back(d);
        }
        for (int d = rank - 1; d > 0; --d)
            std::swap(order[std::size_t(d)], order[std::size_t(rng.integer(0, d))]);
        TensorView t = make_tensor(dims, DType::F64, order, rng.integer(0, 2));
        const int split = int(rng.integer(0, rank));
        std::vector<int> modes = order;
        for (int d = rank - 1; d > 0; --d)
            std::swap(modes[std::size_t(d)], modes[std::size_t(rng.integer(0, d))]);
        std::span<const int> rows(modes.data(), std::size_t(split));
        std::span<const int> cols(modes.data() + split, std::size_t(rank - split));
        BlockScatterView v = block_scatter(t, rows, cols, rng.integer(1, 3), rng.integer(1, 3));

        std::vector<index_t> rd, cd;
        for (int m : rows)
            rd.push_back(dims[std::size_t(m)]);
        for (int m : cols)
            cd.push_back(dims[std::size_t(m)]);
        std::vector<index_t> ri(rd.size(), 0), full(static_cast<std::size_t>(rank));
        index_t i = 0;
        do {
            std::vector<index_t> ci(cd.size(), 0);
            index_t j = 0;
            do {
                for (std::size_t q = 0; q < rd.size(); ++q)
                    full[std::size_t(rows[q])] = ri[q];
                for (std::size_t q = 0; q < cd.size(); ++q)
                    full[std::size_t(cols[q])] = ci[q];
                CHECK(v.rscat[std::size_t(i)] + v.cscat[std::size_t(j)] == t.linear(full));
                ++j;
            } while (next_index(ci, cd));
            ++i;
        } while (next_index(ri, rd));

        for (std::size_t b = 0; b < v.rbs.size(); ++b) {
            const std::size_t s = b * std::size_t(v.mr);
            const std::size_t e = std::min(s + std::size_t(v.mr), v.rscat.size());
            if (v.rbs[b] != 0)
                for (std::size_t q = s + 1; q < e; ++q)
                    CHECK(v.rscat[q] - v.rscat[q - 1] == v.rbs[b]);
        }
    }
}

TEST_CASE("plans") {
    TensorView a = filled({3, 4}, 1), b = filled({4, 5}, 2), c = make_tensor({3, 5}, DType::F64);
    ContractionPlan p = plan_contraction(ContractionSpec::parse("ik,kj->ij"), a, b, c, 4, 4);
    CHECK(p.m_modes.size() == 1);
    CHECK(p.n_modes.size() == 1);
    CHECK(p.k_modes.size() == 1);
    CHECK(p.m == 3);
    CHECK(p.k == 4);

    TensorView a3 = filled({2, 3, 4}, 1), b3 = filled({4, 5}, 2);
    TensorView c3 = make_tensor({2, 3, 5}, DType::F64);
    ContractionPlan f = plan_contraction(ContractionSpec::parse("abc,cd->abd"), a3, b3, c3, 4, 4);
    REQUIRE(f.m_modes.size() == 1);
    CHECK(f.m_modes[0].labels == "ab");
    CHECK(f.m_modes[0].dim == 6);
    ContractionPlan nf =
        plan_contraction(ContractionSpec::parse("abc,cd->abd"), a3, b3, c3, 4, 4, false);
    CHECK(nf.m_modes.size() == 2);

    TensorView ab = filled({3, 4}, 1), cb = filled({5, 4}, 2), ac = make_tensor({3, 5}, DType::F64);
    ContractionPlan t = plan_contraction(ContractionSpec::parse("ab,cb->ac"), ab, cb, ac, 4, 4);
    REQUIRE(t.k_modes.size() == 1);
    CHECK(t.k_modes[0].labels == "b");
    CHECK(t.b.cscat == std::vector<index_t>{0, 4, 8, 12, 16});

    CHECK_THROWS_AS(plan_contraction(ContractionSpec::parse("ik,kj->ij"), a, filled({5, 5}, 3), c,
                                     4, 4),
                    DimensionError);
}

TEST_CASE("contract examples") {
    TensorView a = make_tensor({2, 2}, DType::F64), b = make_tensor({2, 2}, DType::F64);
    TensorView c = make_tensor({2, 2}, DType::F64);
    const double av[] = {1, 2, 3, 4}, bv[] = {5, 6, 7, 8};
    for (int i = 0; i < 4; ++i) {
        std::vector<index_t> idx{i / 2, i % 2};
        a.set(idx, av[i]);
        b.set(idx, bv[i]);
    }
    contract(1.0, a, b, 0.0, c, "ik,kj->ij");
    std::vector<index_t> i00{0, 0}, i01{0, 1}, i10{1, 0}, i11{1, 1};
    CHECK(c.get(i00) == 19);
    CHECK(c.get(i01) == 22);
    CHECK(c.get(i10) == 43);
    CHECK(c.get(i11) == 50);

    TensorView keep = clone(c);
    contract(0.0, a, b, 1.0, c, "ik,kj->ij");
    CHECK(std::memcmp(c.data<double>(), keep.data<double>(), 4 * sizeof(double)) == 0);

    CHECK_THROWS_AS(contract(1.0, a, b, 0.0, a, "ik,kj->ij"), AliasingError);
}

TEST_CASE("contract matches nested loops with and without folding") {
    random::Rng rng(12);
    const char *specs[] = {"abk,kc->abc", "ab,cb->ac", "abc,cd->abd", "ikl,lkj->ij",
                           "a,b->ab",     "ab,ab->",   "kab,kc->cba"};
    for (DType dt : {DType::F64, DType::F32})
        for (const char *text : specs) {
            ContractionSpec s = ContractionSpec::parse(text);
            std::map<char, index_t> extent;
            for (char ch : s.a + s.b)
                extent.emplace(ch, rng.integer(1, 5));
            auto dims = [&](const std::string &labels) {
                std::vector<index_t> d;
                for (char ch : labels)
                    d.push_back(extent[ch]);
                return d;
            };
            TensorView a = filled(dims(s.a), 1, dt), b = filled(dims(s.b), 2, dt);
            TensorView c0 = filled(dims(s.c), 3, dt);
            index_t kdim = 1;
            for (char ch : s.a)
                if (s.c.find(ch) == std::string::npos)
                    kdim *= extent[ch];
            TensorView ref = clone(c0);
            oracle::contract_naive(1.25, a, b, 0.5, ref, text);
            engine::KernelConfig cfg = engine::KernelConfig::defaults(dt);
            cfg.mr = 2;
            cfg.nr = 3;
            cfg.mc = 4;
            cfg.kc = 3;
            cfg.nc = 6;
            TensorView folded = clone(c0), plain = clone(c0);
            contract(1.25, a, b, 0.5, folded, s, cfg, 2, true);
            contract(1.25, a, b, 0.5, plain, s, cfg, 1, false);
            CAPTURE(text);
            CHECK(max_diff(folded, ref) <= 4 * double(kdim) * eps(dt) * 2);
            CHECK(max_diff(plain, ref) <= 4 * double(kdim) * eps(dt) * 2);
        }
}

}
