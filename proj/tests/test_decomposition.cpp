#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "rmap/decomposition.hpp"
#include "test_helpers.hpp"

using namespace rmap;
using rmap::testing::columns;
using rmap::testing::span_distance;
using rmap::testing::unit;

namespace {

const double kInvSqrt2 = 1.0 / std::sqrt(2.0);

Mat example1_jacobian() {
    Mat A = Mat::Zero(7, 10);
    A(0, 1) = 1.0;
    A(1, 0) = 1.0;
    A(2, 2) = A(2, 3) = kInvSqrt2;
    A(5, 7) = A(5, 9) = kInvSqrt2;
    A(6, 6) = A(6, 8) = kInvSqrt2;
    return A;
}

} // namespace

TEST_CASE("differential reproduces the printed Jacobians") {
    auto f1 = fixtures::example1();
    SampleRng rng(2);
    Vec p = rng.interior_point(f1.map.source.domain().lo, f1.map.source.domain().hi);
    CHECK((differential(f1.map, p) - example1_jacobian()).lpNorm<Eigen::Infinity>() < 1e-15);

    auto f2 = fixtures::example2();
    Vec p2 = Vec::Zero(6);
    Mat A2 = differential(f2.map, p2);
    Vec row1_expected(6);
    row1_expected << 0, 0, kInvSqrt2, -kInvSqrt2, 0, 0;
    CHECK((A2.row(0).transpose() - row1_expected).norm() < 1e-15);
    CHECK(A2(1, 4) == 1.0);
    CHECK(A2(2, 5) == 1.0);
    CHECK(A2.row(3).norm() == 0.0);
}

TEST_CASE("identity map differential is the identity") {
    MapSpec id;
    id.source = ManifoldSpec::euclidean(3);
    id.target = ManifoldSpec::euclidean(3);
    for (int i = 1; i <= 3; ++i) id.components.push_back(Expression::parse("x" + std::to_string(i), 3));
    Vec p = Vec::Constant(3, 0.2);
    CHECK((differential(id, p) - Mat::Identity(3, 3)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("example1 passes the Riemannian-map check at rank 5") {
    auto f = fixtures::example1();
    DecompositionSamplePlan plan;
    plan.seed = 21;
    auto rep = check_riemannian_map(f.map, plan, 1e-10);
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.max_residual <= 1e-12);
    CHECK(rep.rank == 5);
    CHECK_FALSE(rep.immersion_edge);
    CHECK_FALSE(rep.submersion_edge);
}

TEST_CASE("example2 passes with rank 3 and the sqrt(2) pushforward") {
    auto f = fixtures::example2();
    DecompositionSamplePlan plan;
    plan.seed = 22;
    auto rep = check_riemannian_map(f.map, plan, 1e-10);
    CHECK(rep.verdict == Verdict::Pass);
    CHECK(rep.rank == 3);
    // g2(F_* X1, F_* X1) = 2 = g1(X1, X1) for X1 = d/dx3 - d/dx4.
    Vec p = Vec::Zero(6);
    Mat A = differential(f.map, p);
    Vec X1(6);
    X1 << 0, 0, 1, -1, 0, 0;
    Vec push = A * X1;
    CHECK(push.dot(push) == Catch::Approx(2.0));
    CHECK((push - std::sqrt(2.0) * unit(4, 0)).norm() < 1e-15);
}

TEST_CASE("a stretch map fails the Riemannian-map check with residual 3") {
    MapSpec F;
    F.source = ManifoldSpec::euclidean(2);
    F.target = ManifoldSpec::euclidean(1, 10.0);
    F.components.push_back(Expression::parse("2*x1", 2));
    F.declared_rank = 1;
    DecompositionSamplePlan plan;
    plan.seed = 23;
    auto rep = check_riemannian_map(F, plan, 1e-10);
    CHECK(rep.verdict == Verdict::Fail);
    CHECK(rep.max_residual == Catch::Approx(3.0));
}

TEST_CASE("vertical and horizontal bases span the expected coordinate subspaces") {
    auto f = fixtures::example1();
    Vec p = Vec::Constant(10, 0.3);
    auto vert = vertical_basis(f.map, p);
    auto horiz = horizontal_basis(f.map, p);
    CHECK(vert.dim_sub() == 5);
    CHECK(horiz.dim_sub() == 5);

    Mat G = Mat::Identity(10, 10);
    Mat expected_kernel = columns(10, {{0, 0, 1, -1, 0, 0, 0, 0, 0, 0},
                                    {0, 0, 0, 0, 0, 0, 0, 1, 0, -1},
                                    {0, 0, 0, 0, 0, 0, 1, 0, -1, 0},
                                    {0, 0, 0, 0, 1, 0, 0, 0, 0, 0},
                                    {0, 0, 0, 0, 0, 1, 0, 0, 0, 0}});
    CHECK(span_distance(vert.vectors, expected_kernel, G) < 1e-12);
    Mat expected_horizontal = columns(10, {{1, 0, 0, 0, 0, 0, 0, 0, 0, 0},
                                        {0, 1, 0, 0, 0, 0, 0, 0, 0, 0},
                                        {0, 0, 1, 1, 0, 0, 0, 0, 0, 0},
                                        {0, 0, 0, 0, 0, 0, 0, 1, 0, 1},
                                        {0, 0, 0, 0, 0, 0, 1, 0, 1, 0}});
    CHECK(span_distance(horiz.vectors, expected_horizontal, G) < 1e-12);

    // g1-orthonormality of the emitted bases.
    CHECK((vert.vectors.transpose() * G * vert.vectors - Mat::Identity(5, 5)).lpNorm<Eigen::Infinity>() < 1e-12);
    CHECK((horiz.vectors.transpose() * G * horiz.vectors - Mat::Identity(5, 5)).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("example2 kernel is three-dimensional") {
    auto f = fixtures::example2();
    Vec p = Vec::Zero(6);
    CHECK(vertical_basis(f.map, p).dim_sub() == 3);
    CHECK(horizontal_basis(f.map, p).dim_sub() == 3);
    Mat expected_kernel = columns(6, {{1, 0, 0, 0, 0, 0}, {0, 1, 0, 0, 0, 0}, {0, 0, 1, 1, 0, 0}});
    CHECK(span_distance(vertical_basis(f.map, p).vectors, expected_kernel, Mat::Identity(6, 6)) < 1e-12);
}

TEST_CASE("range-perp bases match the expected spans") {
    auto f1 = fixtures::example1();
    Vec p = Vec::Constant(10, 0.1);
    auto perp1 = range_perp_basis(f1.map, p);
    CHECK(perp1.dim_sub() == 2);
    Mat expected1 = columns(7, {{0, 0, 0, 1, 0, 0, 0}, {0, 0, 0, 0, 1, 0, 0}});
    CHECK(span_distance(perp1.vectors, expected1, Mat::Identity(7, 7)) < 1e-12);
    CHECK(perp1.metric_context == "target");

    auto f2 = fixtures::example2();
    auto perp2 = range_perp_basis(f2.map, Vec::Zero(6));
    CHECK(perp2.dim_sub() == 1);
    CHECK(span_distance(perp2.vectors, columns(4, {{0, 0, 0, 1}}), Mat::Identity(4, 4)) < 1e-12);
}

TEST_CASE("surjective differential leaves an empty range-perp") {
    MapSpec id;
    id.source = ManifoldSpec::euclidean(3);
    id.target = ManifoldSpec::euclidean(3);
    for (int i = 1; i <= 3; ++i) id.components.push_back(Expression::parse("x" + std::to_string(i), 3));
    auto perp = range_perp_basis(id, Vec::Zero(3));
    CHECK(perp.dim_sub() == 0);
    CHECK(vertical_basis(id, Vec::Zero(3)).dim_sub() == 0);
}

TEST_CASE("D1/D2 split on example1: dimensions 4 and 1") {
    auto f = fixtures::example1();
    Vec p = Vec::Constant(10, -0.4);
    auto d1 = d1_basis(f.map, *f.structure, p);
    auto d2 = d2_basis(f.map, *f.structure, p);
    CHECK(d1.dim_sub() == 4);
    CHECK(d2.dim_sub() == 1);
    Mat G = Mat::Identity(10, 10);
    Mat expected_d1 = columns(10, {{0, 0, 0, 0, 0, 0, 0, 1, 0, -1},
                                {0, 0, 0, 0, 0, 0, 1, 0, -1, 0},
                                {0, 0, 0, 0, 1, 0, 0, 0, 0, 0},
                                {0, 0, 0, 0, 0, 1, 0, 0, 0, 0}});
    CHECK(span_distance(d1.vectors, expected_d1, G) < 1e-10);
    Mat expected_d2 = columns(10, {{0, 0, 1, -1, 0, 0, 0, 0, 0, 0}});
    CHECK(span_distance(d2.vectors, expected_d2, G) < 1e-10);
}

TEST_CASE("D1/D2 split on example2: dimensions 2 and 1") {
    auto f = fixtures::example2();
    Vec p = Vec::Zero(6);
    auto d1 = d1_basis(f.map, *f.structure, p);
    auto d2 = d2_basis(f.map, *f.structure, p);
    CHECK(d1.dim_sub() == 2);
    CHECK(d2.dim_sub() == 1);
    CHECK(span_distance(d2.vectors, columns(6, {{0, 0, 1, 1, 0, 0}}), Mat::Identity(6, 6)) < 1e-10);
}

TEST_CASE("J-invariant kernel gives D1 = ker and empty D2") {
    auto f = rmap::testing::complex_fiber();
    Vec p = Vec::Zero(4);
    CHECK(d1_basis(f.map, *f.structure, p).dim_sub() == 2);
    CHECK(d2_basis(f.map, *f.structure, p).dim_sub() == 0);
}

TEST_CASE("generic check passes with constant D1 dimension") {
    DecompositionSamplePlan plan;
    plan.seed = 31;
    plan.points = 16;
    auto f1 = fixtures::example1();
    auto rep1 = check_generic(f1.map, *f1.structure, plan);
    CHECK(rep1.verdict == Verdict::Pass);
    CHECK(rep1.dim_d1 == 4);
    CHECK(rep1.dim_d2 == 1);
    CHECK(rep1.dim_mu == 4);
    CHECK_FALSE(rep1.purely_real);
    CHECK_FALSE(rep1.complex_fibers);

    auto f2 = fixtures::example2();
    auto rep2 = check_generic(f2.map, *f2.structure, plan);
    CHECK(rep2.verdict == Verdict::Pass);
    CHECK(rep2.dim_d1 == 2);
    CHECK(rep2.dim_d2 == 1);
    CHECK(rep2.dim_mu == 2);

    auto fr = rmap::testing::purely_real();
    auto repr = check_generic(fr.map, *fr.structure, plan);
    CHECK(repr.verdict == Verdict::Pass);
    CHECK(repr.dim_d1 == 0);
    CHECK(repr.purely_real);
}

TEST_CASE("phi/omega split on example1") {
    auto f = fixtures::example1();
    Vec p = Vec::Constant(10, 0.2);

    // U = V4 = e5: JU = e6 is wholly vertical.
    auto s1 = phi_omega_split(f.map, *f.structure, unit(10, 4), p);
    CHECK((s1.first - unit(10, 5)).norm() < 1e-12);
    CHECK(s1.second.norm() < 1e-12);

    // U = V1 = e3 - e4: JU = e3 + e4 is wholly horizontal.
    Vec V1 = unit(10, 2) - unit(10, 3);
    auto s2 = phi_omega_split(f.map, *f.structure, V1, p);
    CHECK(s2.first.norm() < 1e-12);
    CHECK((s2.second - (unit(10, 2) + unit(10, 3))).norm() < 1e-12);

    auto s3 = phi_omega_split(f.map, *f.structure, Vec::Zero(10), p);
    CHECK(s3.first.norm() == 0.0);
    CHECK(s3.second.norm() == 0.0);

    CHECK_THROWS_AS(phi_omega_split(f.map, *f.structure, unit(10, 0), p), NotVertical);
}

TEST_CASE("B/C split on example2") {
    auto f = fixtures::example2();
    Vec p = Vec::Zero(6);

    // X1 = e3 - e4: J X1 = e3 + e4 lies in D2.
    Vec X1 = unit(6, 2) - unit(6, 3);
    auto s1 = bc_split(f.map, *f.structure, X1, p);
    CHECK((s1.first - (unit(6, 2) + unit(6, 3))).norm() < 1e-12);
    CHECK(s1.second.norm() < 1e-12);

    // X2 = e5: J X2 = e6 lies in mu.
    auto s2 = bc_split(f.map, *f.structure, unit(6, 4), p);
    CHECK(s2.first.norm() < 1e-12);
    CHECK((s2.second - unit(6, 5)).norm() < 1e-12);

    auto s3 = bc_split(f.map, *f.structure, Vec::Zero(6), p);
    CHECK(s3.first.norm() == 0.0);
    CHECK(s3.second.norm() == 0.0);

    CHECK_THROWS_AS(bc_split(f.map, *f.structure, unit(6, 1), p), NotHorizontal);
}

TEST_CASE("mu bases") {
    auto f1 = fixtures::example1();
    Vec p1 = Vec::Constant(10, 0.15);
    auto mu1 = mu_basis(f1.map, *f1.structure, p1);
    CHECK(mu1.dim_sub() == 4);
    Mat P = projector(mu1.vectors, Mat::Identity(10, 10));
    CHECK((P * unit(10, 0) - unit(10, 0)).norm() < 1e-10); // contains X1
    CHECK((P * unit(10, 1) - unit(10, 1)).norm() < 1e-10); // contains X2

    auto f2 = fixtures::example2();
    auto mu2 = mu_basis(f2.map, *f2.structure, Vec::Zero(6));
    CHECK(mu2.dim_sub() == 2);
    CHECK(span_distance(mu2.vectors, columns(6, {{0, 0, 0, 0, 1, 0}, {0, 0, 0, 0, 0, 1}}),
                        Mat::Identity(6, 6)) < 1e-10);

    // Empty D2 leaves mu as the whole horizontal space.
    auto fc = rmap::testing::complex_fiber();
    auto muc = mu_basis(fc.map, *fc.structure, Vec::Zero(4));
    CHECK(muc.dim_sub() == 2);
}

TEST_CASE("P1/P2 projections on example1") {
    auto f = fixtures::example1();
    Vec p = Vec::Constant(10, -0.1);
    Vec V1 = unit(10, 2) - unit(10, 3);
    Vec V2 = unit(10, 7) - unit(10, 9);

    auto [a1, a2] = p1_p2_project(f.map, *f.structure, V2, p);
    CHECK((a1 - V2).norm() < 1e-10);
    CHECK(a2.norm() < 1e-10);

    auto [b1, b2] = p1_p2_project(f.map, *f.structure, V1, p);
    CHECK(b1.norm() < 1e-10);
    CHECK((b2 - V1).norm() < 1e-10);

    auto [c1, c2] = p1_p2_project(f.map, *f.structure, V1 + V2, p);
    CHECK((c1 - V2).norm() < 1e-10);
    CHECK((c2 - V1).norm() < 1e-10);

    // (h6) consistency: phi U = P1(JU) + P2(JU) for vertical U.
    Vec U = unit(10, 4) + 0.5 * V1;
    auto sp = phi_omega_split(f.map, *f.structure, U, p);
    Vec JU = j_apply(*f.structure, p, U);
    auto [q1, q2] = p1_p2_project(f.map, *f.structure, sp.first, p);
    Vec vertical_of_JU = decompose_at(f.map, &*f.structure, p).P_vert * JU;
    CHECK((q1 + q2 - vertical_of_JU).norm() < 1e-10);
}

TEST_CASE("extend_field on constant-coefficient maps gives constant fields") {
    auto f = fixtures::example1();
    Vec p = Vec::Constant(10, 0.25);
    auto ext = extend_field(f.map, &*f.structure, p, unit(10, 4), Bundle::Vertical);
    SampleRng rng(41);
    for (int t = 0; t < 5; ++t) {
        Vec q = rng.interior_point(f.map.source.domain().lo, f.map.source.domain().hi);
        REQUIRE((ext.sampler(q) - unit(10, 4)).norm() < 1e-12);
    }
}

TEST_CASE("extend_field on the cone keeps the angular direction vertical") {
    auto f = fixtures::cone();
    Vec p(2);
    p << 2.0, 0.0;
    auto ext = extend_field(f.map, nullptr, p, unit(2, 1), Bundle::Vertical);
    Vec q(2);
    q << 4.0, 1.5;
    CHECK((ext.sampler(q) - unit(2, 1)).norm() < 1e-12);
    CHECK((ext.sampler(p) - unit(2, 1)).norm() < 1e-12);
}

TEST_CASE("extend_field rejects vectors outside the bundle") {
    auto f = fixtures::cone();
    Vec p(2);
    p << 2.0, 0.0;
    CHECK_THROWS_AS(extend_field(f.map, nullptr, p, unit(2, 0), Bundle::Vertical), NotInBundle);
}

TEST_CASE("declared rank mismatch raises VariableRank") {
    auto f = fixtures::example1();
    f.map.declared_rank = 4;
    Vec p = Vec::Constant(10, 0.2);
    CHECK_THROWS_AS(vertical_basis(f.map, p), VariableRank);
}

TEST_CASE("principal cosines in the dead band raise RankTolAmbiguous") {
    Mat B1 = columns(3, {{1, 0, 0}});
    double c = 1.0 - 5e-8; // between 1 - 10*tol and 1 - tol for tol = 1e-8
    double s = std::sqrt(1.0 - c * c);
    Mat B2 = columns(3, {{c, s, 0}});
    CHECK_THROWS_AS(intersect_subspaces(B1, B2, Mat::Identity(3, 3)), RankTolAmbiguous);
}

TEST_CASE("projector algebra invariants across fixtures") {
    DecompositionSamplePlan plan;
    for (const auto& f : {fixtures::example1(), fixtures::example2(), fixtures::cone_with_j()}) {
        SampleRng rng(51);
        for (int t = 0; t < 8; ++t) {
            Vec p = rng.interior_point(f.map.source.domain().lo, f.map.source.domain().hi);
            auto d = decompose_at(f.map, f.structure ? &*f.structure : nullptr, p);
            const int m = f.map.source.dim();
            REQUIRE((d.P_vert * d.P_vert - d.P_vert).lpNorm<Eigen::Infinity>() <= 1e-10);
            REQUIRE((d.P_horiz * d.P_horiz - d.P_horiz).lpNorm<Eigen::Infinity>() <= 1e-10);
            REQUIRE((d.P_vert + d.P_horiz - Mat::Identity(m, m)).lpNorm<Eigen::Infinity>() <= 1e-10);
            if (d.has_structure) {
                REQUIRE((d.P_d1 * d.P_d1 - d.P_d1).lpNorm<Eigen::Infinity>() <= 1e-10);
                REQUIRE((d.P_d1 + d.P_d2 - d.P_vert).lpNorm<Eigen::Infinity>() <= 1e-10);
                // J-invariance of D1.
                REQUIRE((d.P_d1 * d.J * d.P_d1 - d.J * d.P_d1).lpNorm<Eigen::Infinity>() <= 1e-8);
            }
        }
    }
}

TEST_CASE("phi maps D2 into D2") {
    for (const auto& f : {fixtures::example1(), fixtures::example2(), fixtures::cone_with_j()}) {
        SampleRng rng(61);
        Vec p = rng.interior_point(f.map.source.domain().lo, f.map.source.domain().hi);
        auto d = decompose_at(f.map, &*f.structure, p);
        const int dim_d2 = static_cast<int>(d.d2.cols());
        if (dim_d2 == 0) continue;
        for (int t = 0; t < 100; ++t) {
            Vec U = d.d2 * rng.unit_vector(dim_d2);
            auto sp = phi_omega_split(f.map, *f.structure, U, p);
            REQUIRE((d.P_d1 * sp.first).norm() <= 1e-8);
        }
    }
}

TEST_CASE("restated Riemannian property on horizontal pairs") {
    for (const auto& f : {fixtures::example1(), fixtures::example2(), fixtures::cone(), fixtures::cone_with_j()}) {
        SampleRng rng(71);
        for (int t = 0; t < 10; ++t) {
            Vec p = rng.interior_point(f.map.source.domain().lo, f.map.source.domain().hi);
            auto d = decompose_at(f.map, nullptr, p);
            Mat G2 = f.map.target.metric_at(f.map.apply(p));
            Vec X = d.horizontal * rng.unit_vector(d.rank);
            Vec Y = d.horizontal * rng.unit_vector(d.rank);
            double lhs = (d.A * X).dot(G2 * (d.A * Y));
            REQUIRE(std::abs(lhs - X.dot(d.G1 * Y)) <= 1e-10);
        }
    }
}
