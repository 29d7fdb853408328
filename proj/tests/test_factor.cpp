#include <doctest.h>

#include "support.hpp"

#include <famlies/factor.hpp>
#include <famlies/oracle.hpp>
#include <famlies/random.hpp>

#include <cmath>

using namespace famlies;
using namespace famlies::factor;
using control::Op;
using control::Variant;
using famlies::test::bitwise_equal;
using famlies::test::mat;

namespace {

ControlNode blocked(Op op, Variant v, index_t bs, Variant leaf) {
    ControlNode node{op, v, bs};
    node.child = std::make_shared<const ControlNode>(ControlNode{op, leaf});
    return node;
}

double tol(index_t n, DType dt) { return 10.0 * double(n) * eps(dt); }

} // namespace

TEST_SUITE("cholesky") {

TEST_CASE("small examples") {
    MatrixView a = mat({{4, 2}, {2, 5}});
    cholesky(a);
    CHECK(a.get(0, 0) == 2);
    CHECK(a.get(1, 0) == 1);
    CHECK(a.get(1, 1) == 2);
    CHECK(a.get(0, 1) == 2);

    for (const auto &tree : control::enumerate_trees(
             Op::Cholesky, {Variant::blocked_v(1), Variant::blocked_v(2), Variant::blocked_v(3)},
             {1, 2, 7}, 1)) {
        MatrixView eye = make_view(5, 5, DType::F64);
        for (index_t i = 0; i < 5; ++i)
            eye.set(i, i, 1);
        MatrixView keep = copy_of(eye);
        cholesky(eye, Uplo::Lower, tree);
        CHECK(bitwise_equal(eye, keep));
    }
}

TEST_CASE("every variant reconstructs and agrees with the scalar reference") {
    for (DType dt : {DType::F32, DType::F64}) {
        const index_t n = 100;
        MatrixView a = random::spd_matrix(n, dt, 21);
        MatrixView ref = copy_of(a);
        oracle::chol_scalar(ref);
        const double fro = oracle::frobenius(a);
        auto trees = control::enumerate_trees(
            Op::Cholesky, {Variant::blocked_v(1), Variant::blocked_v(2), Variant::blocked_v(3)},
            {1, 7, 32, 100}, 1);
        for (int v = 1; v <= 3; ++v)
            trees.push_back(ControlNode{Op::Cholesky, Variant::unblocked_v(v)});
        for (const auto &tree : trees) {
            MatrixView l = copy_of(a);
            cholesky(l, Uplo::Lower, tree);
            CAPTURE(control::describe(tree));
            CHECK(oracle::chol_residual(a, l) <= tol(n, dt));
            double diff = 0;
            for (index_t i = 0; i < n; ++i)
                for (index_t j = 0; j <= i; ++j)
                    diff = std::max(diff, std::abs(l.get(i, j) - ref.get(i, j)));
            CHECK(diff <= 100.0 * double(n) * eps(dt) * fro / double(n));
            for (index_t i = 0; i < n; ++i)
                for (index_t j = i + 1; j < n; ++j)
                    CHECK(l.get(i, j) == a.get(i, j));
        }
    }
}

TEST_CASE("two-level trees and kernel overrides") {
    const index_t n = 150;
    MatrixView a = random::spd_matrix(n, DType::F64, 5);
    for (const auto &tree : control::enumerate_trees(
             Op::Cholesky, {Variant::blocked_v(1), Variant::blocked_v(3)}, {9, 40}, 2)) {
        MatrixView l = copy_of(a);
        cholesky(l, Uplo::Lower, tree);
        CHECK(oracle::chol_residual(a, l) <= tol(n, DType::F64));
    }
    ControlNode tuned = control::parse_tree(
        R"({"op":"cholesky","variant":3,"bs":32,"ways":2,"kernel":{"mr":4,"nr":4,"mc":16,"kc":8,"nc":16}})");
    MatrixView l = copy_of(a);
    cholesky(l, Uplo::Lower, tuned);
    CHECK(oracle::chol_residual(a, l) <= tol(n, DType::F64));
}

TEST_CASE("upper runs the lower code on swapped strides") {
    const index_t n = 70;
    MatrixView a = random::spd_matrix(n, DType::F64, 8);
    ControlNode tree = blocked(Op::Cholesky, Variant::blocked_v(2), 16, Variant::unblocked_v(1));
    MatrixView lower = copy_of(a), upper = copy_of(a);
    cholesky(lower, Uplo::Lower, tree);
    cholesky(upper, Uplo::Upper, tree);
    for (index_t i = 0; i < n; ++i)
        for (index_t j = 0; j <= i; ++j) {
            const double x = lower.get(i, j), y = upper.get(j, i);
            CHECK(std::memcmp(&x, &y, sizeof x) == 0);
        }
}

TEST_CASE("indefinite input reports the global pivot") {
    const index_t n = 40;
    MatrixView a = random::spd_matrix(n, DType::F64, 2);
    a.set(29, 29, -1.0);
    for (int v = 1; v <= 3; ++v) {
        MatrixView l = copy_of(a);
        try {
            cholesky(l, Uplo::Lower, blocked(Op::Cholesky, Variant::blocked_v(v), 8,
                                             Variant::unblocked_v(v)));
            FAIL("expected NotPositiveDefinite");
        } catch (const NotPositiveDefinite &e) {
            CHECK(e.index() == 29);
        }
    }
    CHECK_THROWS_AS(cholesky(make_view(2, 3, DType::F64)), DimensionError);
    MatrixView l = copy_of(a);
    CHECK_THROWS_AS(cholesky(l, Uplo::Lower, control::default_tree(Op::LU, n, DType::F64)),
                    control::InvalidControlTree);
}

}

TEST_SUITE("lu") {

TEST_CASE("small examples") {
    MatrixView a = mat({{0, 1}, {2, 3}});
    LuResult r = lu_partial(a);
    CHECK(r.pivots.piv == std::vector<index_t>{1, 1});
    CHECK(a.get(0, 0) == 2);
    CHECK(a.get(0, 1) == 3);
    CHECK(a.get(1, 1) == 1);
    CHECK(a.get(1, 0) == 0);
    CHECK(!r.zero_pivot);
    CHECK(r.pivots.sign() == -1);

    MatrixView b = mat({{1}, {1}});
    lu_solve(a, r.pivots, b);
    CHECK(b.get(0, 0) == -1);
    CHECK(b.get(1, 0) == 1);

    MatrixView eye = make_view(4, 4, DType::F64);
    for (index_t i = 0; i < 4; ++i)
        eye.set(i, i, 1);
    LuResult id = lu_partial(eye);
    CHECK(id.pivots.piv == std::vector<index_t>{0, 1, 2, 3});
}

TEST_CASE("pivots") {
    MatrixView v = mat({{1}, {2}});
    apply_pivots(v, PivotVector{{1, 1}}, Direction::Forward);
    CHECK(v.get(0, 0) == 2);
    CHECK(v.get(1, 0) == 1);

    MatrixView a = random::uniform_matrix(6, 3, DType::F64, 1), keep = copy_of(a);
    PivotVector p{{3, 5, 2, 4, 4}};
    apply_pivots(a, p, Direction::Forward);
    apply_pivots(a, p, Direction::Backward);
    CHECK(bitwise_equal(a, keep));
    apply_pivots(a, PivotVector{{0, 1}}, Direction::Forward);
    CHECK(bitwise_equal(a, keep));
    CHECK_THROWS_AS(apply_pivots(a, PivotVector{{7}}, Direction::Forward), DimensionError);
}

TEST_CASE("blocked and unblocked factor and solve") {
    for (DType dt : {DType::F32, DType::F64})
        for (index_t n : {60, 80}) {
            MatrixView a = random::dominant_matrix(n, dt, 9);
            // Dominance makes the pivot sequence trivial; mix rows so pivoting matters.
            MatrixView m = random::uniform_matrix(n, n, dt, 10);
            std::vector<index_t> ref_piv;
            for (index_t bs : {1, 8, 80}) {
                for (MatrixView input : {a, m}) {
                    MatrixView f = copy_of(input);
                    LuResult r = lu_partial(f, blocked(Op::LU, Variant::blocked_v(), bs,
                                                       Variant::unblocked_v()));
                    CHECK(oracle::lu_residual(input, f, r.pivots.piv) <= tol(n, dt));
                    if (input.storage() == m.storage()) {
                        if (bs == 1) {
                            MatrixView s = copy_of(m);
                            CHECK(oracle::lu_scalar(s) == r.pivots.piv);
                        }
                    } else {
                        MatrixView b = random::uniform_matrix(n, 3, dt, 11), x = copy_of(b);
                        lu_solve(f, r.pivots, x);
                        CHECK(oracle::solve_residual(input, x, b) <= tol(n, dt));
                    }
                }
            }
        }
}

TEST_CASE("rectangular and rank-deficient inputs") {
    for (auto [m, n] : {std::pair<index_t, index_t>{50, 20}, {20, 50}}) {
        MatrixView a = random::uniform_matrix(m, n, DType::F64, 4), f = copy_of(a);
        LuResult r = lu_partial(f, blocked(Op::LU, Variant::blocked_v(), 7, Variant::unblocked_v()));
        CHECK(r.pivots.size() == std::min(m, n));
        CHECK(oracle::lu_residual(a, f, r.pivots.piv) <= tol(std::max(m, n), DType::F64));
    }
    MatrixView z = mat({{1, 2, 3}, {2, 4, 6}, {1, 1, 1}});
    LuResult r = lu_partial(z);
    REQUIRE(r.zero_pivot);
    MatrixView s = mat({{1, 0}, {0, 0}});
    LuResult rs = lu_partial(s);
    CHECK(rs.zero_pivot == 1);
    MatrixView b = mat({{1}, {1}});
    CHECK_THROWS_AS(lu_solve(s, rs.pivots, b), SingularMatrix);
}

}

TEST_SUITE("qr") {

TEST_CASE("small examples") {
    MatrixView a = mat({{3}, {4}});
    Reflectors refl = qr_householder(a);
    CHECK(std::abs(a.get(0, 0)) == doctest::Approx(5.0));
    MatrixView q = form_q(a, refl);
    CHECK(std::abs(q.get(0, 0)) == doctest::Approx(0.6));
    CHECK(std::abs(q.get(1, 0)) == doctest::Approx(0.8));
    CHECK(q.get(0, 0) * q.get(1, 0) > 0);

    MatrixView eye = make_view(4, 4, DType::F64);
    for (index_t i = 0; i < 4; ++i)
        eye.set(i, i, 1);
    MatrixView f = copy_of(eye);
    Reflectors r = qr_householder(f);
    MatrixView rr = extract_r(f);
    for (index_t i = 0; i < 4; ++i)
        CHECK(std::abs(rr.get(i, i)) == 1.0);
    CHECK(oracle::orthogonality(form_q(f, r)) <= 1e-15);
    CHECK_THROWS(qr_householder(make_view(2, 3, DType::F64)));
}

TEST_CASE("residual and orthogonality across block sizes") {
    for (DType dt : {DType::F32, DType::F64}) {
        const index_t m = 120, n = 80;
        MatrixView a = random::uniform_matrix(m, n, dt, 17);
        for (index_t bs : {1, 16, 80, 33}) {
            MatrixView f = copy_of(a);
            Reflectors r =
                qr_householder(f, blocked(Op::QR, Variant::blocked_v(), bs, Variant::unblocked_v()));
            MatrixView q = form_q(f, r);
            CHECK(oracle::qr_residual(a, q, extract_r(f)) <= tol(m, dt));
            CHECK(oracle::orthogonality(q) <= tol(m, dt));
        }
    }
}

}

TEST_SUITE("ltlt") {

TEST_CASE("already tridiagonal") {
    MatrixView x = mat({{0, -2}, {2, 0}});
    LtltResult r = ltlt_pivoted(x);
    CHECK(r.tridiag.t == std::vector<double>{2});
    CHECK(r.pivots.piv == std::vector<index_t>{0, 1});
    MatrixView l = ltlt_unpack_l(x);
    CHECK(l.get(0, 0) == 1);
    CHECK(l.get(1, 1) == 1);
    CHECK(l.get(1, 0) == 0);
}

TEST_CASE("reconstruction, unblocked and blocked") {
    for (DType dt : {DType::F32, DType::F64})
        for (index_t n : {1, 2, 3, 10, 64, 75}) {
            MatrixView x = random::skew_matrix(n, dt, 30 + n);
            std::vector<ControlNode> trees{ControlNode{Op::LTLT, Variant::unblocked_v()}};
            for (index_t bs : {1, 2, 4, 16, 100})
                trees.push_back(
                    blocked(Op::LTLT, Variant::blocked_v(), bs, Variant::unblocked_v()));
            for (const auto &tree : trees) {
                CAPTURE(n);
                CAPTURE(control::describe(tree));
                MatrixView f = copy_of(x);
                LtltResult r = ltlt_pivoted(f, tree);
                CHECK(oracle::ltlt_residual(x, f, r.pivots.piv, r.tridiag.t) <= tol(n, dt));
                MatrixView l = ltlt_unpack_l(f);
                for (index_t i = 1; i < n; ++i)
                    CHECK(l.get(i, 0) == 0);
                for (index_t k = 0; k < n; ++k)
                    CHECK(r.pivots.piv[std::size_t(k)] >= k);
                if (n > 0)
                    CHECK(r.pivots.piv[0] == 0);
            }
        }
}

TEST_CASE("pfaffian examples") {
    CHECK(pfaffian(mat({{0, 2}, {-2, 0}})) == doctest::Approx(2.0));
    MatrixView x = mat({{0, 1, 2, 3}, {-1, 0, 4, 5}, {-2, -4, 0, 6}, {-3, -5, -6, 0}});
    CHECK(pfaffian(x) == doctest::Approx(8.0));
    CHECK(pfaffian(random::skew_matrix(5, DType::F64, 1)) == 0.0);
    CHECK_THROWS_AS(pfaffian(mat({{0, 1}, {1, 0}})), ContractError);
}

TEST_CASE("pfaffian matches the matching expansion") {
    random::Rng rng(77);
    for (int trial = 0; trial < 30; ++trial) {
        const index_t n = 2 * rng.integer(1, 5);
        MatrixView x = random::skew_matrix(n, DType::F64, 1000 + trial);
        const double ref = oracle::pfaffian_combinatorial(x);
        const double pf = pfaffian(x, blocked(Op::LTLT, Variant::blocked_v(), 3, Variant::unblocked_v()));
        CHECK(std::abs(pf - ref) <= 1e-10 * std::abs(ref));
        CHECK(std::abs(pfaffian(x) - ref) <= 1e-10 * std::abs(ref));
    }
}

}
