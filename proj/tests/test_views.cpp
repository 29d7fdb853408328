#include <doctest.h>

#include "support.hpp"

#include <famlies/views.hpp>

#include <set>

using namespace famlies;
using famlies::test::mat;

TEST_SUITE("views") {

TEST_CASE("dtype eps matches IEEE unit roundoff") {
    CHECK(eps(DType::F32) == doctest::Approx(1.1920929e-7));
    CHECK(eps(DType::F64) == doctest::Approx(2.220446e-16));
    CHECK(parse_dtype("f32") == DType::F32);
    CHECK(parse_dtype("f64") == DType::F64);
    CHECK(to_string(DType::F32) == "f32");
}

TEST_CASE("make_view layouts and fills") {
    MatrixView z = make_view(2, 2, DType::F64);
    CHECK(z.row_stride() == 2);
    CHECK(z.col_stride() == 1);
    for (index_t i = 0; i < 2; ++i)
        for (index_t j = 0; j < 2; ++j)
            CHECK(z.get(i, j) == 0.0);

    MatrixView s = make_view(2, 3, DType::F64, Layout::RowMajor, Fill::Sequence);
    CHECK(s.get(1, 2) == 6.0);
    CHECK(s.get(0, 0) == 1.0);

    MatrixView c = make_view(2, 3, DType::F32, Layout::ColMajor);
    CHECK(c.row_stride() == 1);
    CHECK(c.col_stride() == 2);

    MatrixView e = make_view(0, 5, DType::F64);
    CHECK(e.rows() == 0);
    CHECK(e.empty());

    MatrixView v = mat({{1, 2}, {3, 4}}, DType::F64, Layout::ColMajor);
    CHECK(v.get(0, 1) == 2.0);
    CHECK(v.get(1, 0) == 3.0);
}

TEST_CASE("subview aliases the parent") {
    MatrixView a = make_view(4, 4, DType::F64, Layout::RowMajor, Fill::Sequence);
    MatrixView s = subview(a, span_of(1, 3), span_of(1, 3));
    CHECK(s.rows() == 2);
    CHECK(s.get(0, 0) == a.get(1, 1));
    CHECK(s.offset() == a.offset() + 1 * a.row_stride() + 1 * a.col_stride());
    CHECK(s.storage() == a.storage());
    s.set(1, 1, -1.0);
    CHECK(a.get(2, 2) == -1.0);

    MatrixView whole = a(span_of(0, 4), span_of(0, 4));
    CHECK(whole.offset() == a.offset());
    CHECK(whole.row_stride() == a.row_stride());

    MatrixView empty = a(span_of(2, 2), span_of(0, 4));
    CHECK(empty.rows() == 0);
    CHECK(empty.cols() == 4);

    CHECK_THROWS_AS(a(span_of(3, 5), span_of(0, 1)), DimensionError);
}

TEST_CASE("transposed swaps strides and is an involution") {
    MatrixView a = make_view(2, 3, DType::F64, Layout::RowMajor, Fill::Sequence);
    MatrixView t = transposed(a);
    CHECK(t.rows() == 3);
    CHECK(t.cols() == 2);
    for (index_t i = 0; i < 2; ++i)
        for (index_t j = 0; j < 3; ++j)
            CHECK(t.get(j, i) == a.get(i, j));
    MatrixView tt = transposed(t);
    CHECK(tt.offset() == a.offset());
    CHECK(tt.row_stride() == a.row_stride());
    CHECK(tt.col_stride() == a.col_stride());
    CHECK(t.storage() == a.storage());
}

TEST_CASE("partition_steps examples") {
    auto s = partition_steps(5, 2);
    REQUIRE(s.size() == 3);
    CHECK(s[0].r0 == span_of(0, 0));
    CHECK(s[0].r1 == span_of(0, 2));
    CHECK(s[0].r2 == span_of(2, 5));
    CHECK(s[1].r0 == span_of(0, 2));
    CHECK(s[1].r1 == span_of(2, 4));
    CHECK(s[1].r2 == span_of(4, 5));
    CHECK(s[2].r0 == span_of(0, 4));
    CHECK(s[2].r1 == span_of(4, 5));
    CHECK(s[2].r2 == span_of(5, 5));
    CHECK(!s[0].r1b);

    auto one = partition_steps(4, 4);
    REQUIRE(one.size() == 1);
    CHECK(one[0].r1 == span_of(0, 4));
    CHECK(one[0].r2 == span_of(4, 4));

    auto la = partition_steps(5, 2, 1);
    REQUIRE(la[0].r1b);
    CHECK(*la[0].r1b == span_of(2, 3));
    REQUIRE(la[2].r1b);
    CHECK(la[2].r1b->empty());

    CHECK(partition_steps(0, 3).empty());
    CHECK_THROWS_AS(partition_steps(5, 0), DimensionError);
}

TEST_CASE("partition_steps covers [0,n) exactly once") {
    for (index_t n = 0; n <= 40; ++n)
        for (index_t bs = 1; bs <= 12; ++bs) {
            index_t next = 0;
            for (const auto &s : partition_steps(n, bs, 2)) {
                CHECK(s.r0 == span_of(0, next));
                CHECK(s.r1.start == next);
                CHECK(s.r1.len >= 1);
                CHECK(s.r1.len <= bs);
                CHECK(s.r2 == span_of(s.r1.end(), n));
                REQUIRE(s.r1b);
                CHECK(s.r1b->start == s.r2.start);
                CHECK(s.r1b->len == std::min<index_t>(2, s.r2.len));
                next = s.r1.end();
            }
            CHECK(next == n);
        }
}

TEST_CASE("views produced here address distinct elements") {
    for (index_t m = 1; m <= 8; ++m)
        for (index_t n = 1; n <= 8; ++n)
            for (Layout layout : {Layout::RowMajor, Layout::ColMajor}) {
                MatrixView base = make_view(m + 2, n + 3, DType::F64, layout);
                for (MatrixView v : {base(span_of(1, m + 1), span_of(2, n + 2)),
                                     transposed(base(span_of(0, m), span_of(0, n)))}) {
                    std::set<index_t> seen;
                    for (index_t i = 0; i < v.rows(); ++i)
                        for (index_t j = 0; j < v.cols(); ++j)
                            seen.insert(v.offset() + i * v.row_stride() + j * v.col_stride());
                    CHECK(index_t(seen.size()) == v.rows() * v.cols());
                    CHECK(is_injective(v));
                }
            }
}

TEST_CASE("overlap detection") {
    MatrixView a = make_view(8, 8, DType::F64);
    CHECK(overlaps(a, a));
    CHECK(!overlaps(a(span_of(0, 4), span_of(0, 8)), a(span_of(4, 8), span_of(0, 8))));
    CHECK(!overlaps(a(span_of(0, 8), span_of(0, 3)), a(span_of(0, 8), span_of(3, 8))));
    CHECK(overlaps(a(span_of(0, 5), span_of(0, 5)), a(span_of(4, 8), span_of(4, 8))));
    CHECK(overlaps(a, transposed(a)));
    // Diagonal blocks of one matrix interleave in memory but share no element.
    CHECK(!overlaps(a(span_of(0, 4), span_of(0, 4)), a(span_of(4, 8), span_of(4, 8))));
    CHECK(!overlaps(a, make_view(8, 8, DType::F64)));
}

TEST_CASE("copies are deep") {
    MatrixView a = make_view(3, 2, DType::F32, Layout::ColMajor, Fill::Sequence);
    MatrixView c = copy_of(a);
    CHECK(c.storage() != a.storage());
    CHECK(famlies::test::bitwise_equal(a, c));
    c.set(0, 0, 42);
    CHECK(a.get(0, 0) != 42);
}

TEST_CASE("tensor views") {
    TensorView t = make_tensor({2, 3, 4}, DType::F64);
    CHECK(t.rank() == 3);
    CHECK(t.stride(0) == 12);
    CHECK(t.stride(2) == 1);
    CHECK(t.size() == 24);
    std::vector<index_t> idx{1, 2, 3};
    t.set(idx, 5.0);
    CHECK(t.get(idx) == 5.0);
    CHECK(t.linear(idx) == 23);

    const int order[] = {2, 0, 1};
    TensorView p = make_tensor({2, 3, 4}, DType::F32, order, 1);
    CHECK(p.stride(1) == 1);
    CHECK(p.stride(0) == 4);
    CHECK(p.stride(2) == 2 * (3 + 1) + 1);

    std::vector<index_t> i{0, 0};
    const std::vector<index_t> dims{2, 2};
    int count = 1;
    while (next_index(i, dims))
        ++count;
    CHECK(count == 4);
}

}
