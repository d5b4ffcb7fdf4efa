#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "rmap/manifold.hpp"
#include "rmap/rng.hpp"

using namespace rmap;

namespace {

ManifoldSpec polar_plane() {
    std::vector<std::vector<Expression>> g{
        {Expression::parse("1", 2), Expression::parse("0", 2)},
        {Expression::parse("0", 2), Expression::parse("x1^2", 2)}};
    DomainBox box{(Vec(2) << 0.25, -10.0).finished(), (Vec(2) << 8.0, 10.0).finished()};
    return ManifoldSpec(2, std::move(g), std::move(box));
}

ManifoldSpec sphere_chart() {
    std::vector<std::vector<Expression>> g{
        {Expression::parse("1", 2), Expression::parse("0", 2)},
        {Expression::parse("0", 2), Expression::parse("sin(x1)^2", 2)}};
    DomainBox box{(Vec(2) << 0.05, -0.5).finished(), (Vec(2) << 3.09, 7.0).finished()};
    return ManifoldSpec(2, std::move(g), std::move(box));
}

// Independent Koszul oracle: first-kind symbols from central differences of
// the metric entries, then contraction with the inverse metric.
std::vector<Mat> christoffel_fd_oracle(const ManifoldSpec& m, const Vec& p, double h = 1e-6) {
    const int n = m.dim();
    auto g_at = [&](const Vec& q) { return m.metric_at(q); };
    std::vector<Mat> dg(static_cast<std::size_t>(n));
    for (int l = 0; l < n; ++l) {
        Vec a = p, b = p;
        a[l] += h;
        b[l] -= h;
        dg[static_cast<std::size_t>(l)] = (g_at(a) - g_at(b)) / (2.0 * h);
    }
    Mat Ginv = m.metric_at(p).inverse();
    std::vector<Mat> gamma(static_cast<std::size_t>(n), Mat::Zero(n, n));
    for (int k = 0; k < n; ++k)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                double sum = 0.0;
                for (int l = 0; l < n; ++l)
                    sum += Ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) +
                                         dg[static_cast<std::size_t>(j)](i, l) -
                                         dg[static_cast<std::size_t>(l)](i, j));
                gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * sum;
            }
    return gamma;
}

} // namespace

TEST_CASE("euclidean metric is the identity") {
    auto m = ManifoldSpec::euclidean(10);
    Vec p = Vec::Constant(10, 0.37);
    CHECK((m.metric_at(p) - Mat::Identity(10, 10)).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("polar metric at u=2") {
    auto m = polar_plane();
    Vec p(2);
    p << 2.0, 0.3;
    Mat G = m.metric_at(p);
    CHECK(G(0, 0) == Catch::Approx(1.0));
    CHECK(G(1, 1) == Catch::Approx(4.0));
    CHECK(G(0, 1) == 0.0);
}

TEST_CASE("indefinite metric raises DegenerateMetric") {
    std::vector<std::vector<Expression>> g{
        {Expression::parse("1", 2), Expression::parse("0", 2)},
        {Expression::parse("0", 2), Expression::parse("x1", 2)}};
    DomainBox box{(Vec(2) << -2.0, -2.0).finished(), (Vec(2) << 2.0, 2.0).finished()};
    ManifoldSpec m(2, std::move(g), std::move(box));
    Vec p(2);
    p << -1.0, 0.0;
    CHECK_THROWS_AS(m.metric_at(p), DegenerateMetric);
}

TEST_CASE("christoffel symbols vanish on flat space") {
    auto m = ManifoldSpec::euclidean(4);
    Vec p = Vec::Constant(4, 0.5);
    for (const auto& mat : m.christoffel(p)) CHECK(mat.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("polar christoffel symbols match the closed form and the Koszul oracle") {
    auto m = polar_plane();
    for (double u : {0.8, 2.0, 5.0}) {
        Vec p(2);
        p << u, 1.1;
        auto gamma = m.christoffel(p);
        // Closed form: Gamma^1_22 = -u, Gamma^2_12 = 1/u.
        CHECK(std::abs(gamma[0](1, 1) - (-u)) < 1e-9);
        CHECK(std::abs(gamma[1](0, 1) - 1.0 / u) < 1e-9);
        CHECK(std::abs(gamma[0](0, 0)) < 1e-12);
        CHECK(std::abs(gamma[0](0, 1)) < 1e-12);
        CHECK(std::abs(gamma[1](0, 0)) < 1e-12);
        CHECK(std::abs(gamma[1](1, 1)) < 1e-12);

        auto oracle = christoffel_fd_oracle(m, p);
        for (int k = 0; k < 2; ++k)
            CHECK((gamma[static_cast<std::size_t>(k)] - oracle[static_cast<std::size_t>(k)])
                      .lpNorm<Eigen::Infinity>() < 1e-6);
    }
}

TEST_CASE("christoffel symmetry is exact by construction") {
    auto m = sphere_chart();
    SampleRng rng(11ull);
    for (int t = 0; t < 20; ++t) {
        Vec p = rng.interior_point(m.domain().lo, m.domain().hi);
        auto gamma = m.christoffel(p);
        for (const auto& mat : gamma)
            for (int i = 0; i < 2; ++i)
                for (int j = 0; j < 2; ++j) REQUIRE(mat(i, j) == mat(j, i));
    }
}

TEST_CASE("covariant derivative of a constant field on flat space is zero") {
    auto m = ManifoldSpec::euclidean(3);
    Vec p = Vec::Zero(3);
    TangentVector dir{p, (Vec(3) << 0.3, -1.0, 2.0).finished()};
    auto field = VectorField::constant((Vec(3) << 1.0, 0.0, 0.0).finished());
    CHECK(covariant_derivative(m, dir, field, p).norm() < 1e-12);
}

TEST_CASE("polar covariant derivative of the angular frame") {
    auto m = polar_plane();
    Vec p(2);
    p << 2.0, 0.0;
    TangentVector dir{p, (Vec(2) << 0.0, 1.0).finished()};
    auto field = VectorField::from_expressions({Expression::parse("0", 2), Expression::parse("1", 2)});
    Vec result = covariant_derivative(m, dir, field, p);
    CHECK(result[0] == Catch::Approx(-2.0));
    CHECK(std::abs(result[1]) < 1e-10);
}

TEST_CASE("flat-space covariant derivative reduces to the Jacobian row") {
    auto m = ManifoldSpec::euclidean(2);
    Vec p(2);
    p << 0.7, -0.2;
    TangentVector dir{p, (Vec(2) << 1.0, 0.0).finished()};
    auto field = VectorField::from_expressions({Expression::parse("x2", 2), Expression::parse("x1", 2)});
    Vec result = covariant_derivative(m, dir, field, p);
    CHECK(result[0] == Catch::Approx(0.0).margin(1e-12));
    CHECK(result[1] == Catch::Approx(1.0));
}

TEST_CASE("gradients") {
    auto flat = ManifoldSpec::euclidean(3);
    Vec p3 = Vec::Constant(3, 0.4);
    Vec gf = gradient(flat, Expression::parse("x1", 3), p3);
    CHECK((gf - (Vec(3) << 1, 0, 0).finished()).norm() < 1e-14);

    auto m = polar_plane();
    Vec p(2);
    p << 2.0, 0.7;
    Vec gl = gradient(m, Expression::parse("log(x1)", 2), p);
    CHECK(gl[0] == Catch::Approx(0.5));
    CHECK(std::abs(gl[1]) < 1e-14);

    Vec gc = gradient(m, Expression::parse("3.5", 2), p);
    CHECK(gc.norm() == 0.0);
}

TEST_CASE("flat geodesics are straight lines with zero energy drift") {
    auto m = ManifoldSpec::euclidean(3, 20.0);
    TangentVector start{(Vec(3) << 1.0, 2.0, 3.0).finished(), (Vec(3) << 0.5, -0.25, 1.0).finished()};
    auto traj = geodesic_integrate(m, start, 2.0, 1e-2);
    REQUIRE_FALSE(traj.truncated);
    CHECK(traj.energy_drift < 1e-13);
    for (std::size_t i = 0; i < traj.size(); ++i) {
        Vec expect = start.base + traj.times[i] * start.components;
        REQUIRE((traj.points[i] - expect).norm() < 1e-12);
        REQUIRE((traj.velocities[i] - start.components).norm() < 1e-12);
    }
}

TEST_CASE("polar geodesic conserves energy to 1e-8") {
    auto m = polar_plane();
    TangentVector start{(Vec(2) << 2.0, 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()};
    auto traj = geodesic_integrate(m, start, 1.0, 1e-3);
    REQUIRE_FALSE(traj.truncated);
    CHECK(traj.energy_drift <= 1e-8);
    double e0 = start.components.dot(m.metric_at(start.base) * start.components);
    CHECK(e0 == Catch::Approx(4.0));
}

TEST_CASE("great circle closes after one period") {
    auto m = sphere_chart();
    double half_pi = std::asin(1.0);
    TangentVector start{(Vec(2) << half_pi, 0.0).finished(), (Vec(2) << 0.0, 1.0).finished()};
    auto traj = geodesic_integrate(m, start, 2.0 * M_PI, 1e-3);
    REQUIRE_FALSE(traj.truncated);
    Vec last = traj.points.back();
    CHECK(std::abs(last[0] - half_pi) < 1e-5);
    CHECK(std::abs(last[1] - 2.0 * M_PI) < 1e-5);
    CHECK((traj.velocities.back() - start.components).norm() < 1e-5);
}

TEST_CASE("trajectories truncate at the chart boundary") {
    auto m = polar_plane();
    TangentVector start{(Vec(2) << 2.0, 0.0).finished(), (Vec(2) << -1.0, 0.0).finished()};
    auto traj = geodesic_integrate(m, start, 5.0, 1e-3);
    CHECK(traj.truncated);
    CHECK(traj.points.back()[0] >= 0.25);
    CHECK(traj.times.back() < 5.0);
}

TEST_CASE("metric compatibility of the connection") {
    auto m = sphere_chart();
    SampleRng rng(31ull);
    for (int trial = 0; trial < 25; ++trial) {
        Vec p = rng.interior_point(m.domain().lo, m.domain().hi);
        Vec d = rng.unit_vector(2);
        TangentVector dir{p, d};
        auto A = VectorField::from_expressions(
            {Expression::parse("sin(x2)", 2), Expression::parse("x1", 2)});
        auto B = VectorField::from_expressions(
            {Expression::parse("x1*x2", 2), Expression::parse("cos(x1)", 2)});
        // Oracle: finite difference of the scalar g(A,B) along dir.
        auto scalar = [&](const Vec& q) { return (m.metric_at(q) * A.sampler(q)).dot(B.sampler(q)); };
        double h = 1e-6;
        double dg = (scalar(p + h * d) - scalar(p - h * d)) / (2.0 * h);
        Vec covA = covariant_derivative(m, dir, A, p);
        Vec covB = covariant_derivative(m, dir, B, p);
        Mat G = m.metric_at(p);
        double lhs = dg - (G * covA).dot(B.sampler(p)) - (G * A.sampler(p)).dot(covB);
        double scale = 1.0 + std::abs(dg);
        REQUIRE(std::abs(lhs) <= 1e-5 * scale);
    }
}

TEST_CASE("constant diagonal metrics have vanishing christoffel symbols") {
    std::vector<std::vector<Expression>> g{
        {Expression::parse("2", 2), Expression::parse("0", 2)},
        {Expression::parse("0", 2), Expression::parse("3", 2)}};
    DomainBox box{(Vec(2) << -2.0, -2.0).finished(), (Vec(2) << 2.0, 2.0).finished()};
    ManifoldSpec m(2, std::move(g), std::move(box));
    for (const auto& mat : m.christoffel((Vec(2) << 0.3, -0.7).finished()))
        CHECK(mat.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("adaptive RK45 agrees with fixed-step RK4") {
    auto m = polar_plane();
    TangentVector start{(Vec(2) << 2.0, 0.0).finished(), (Vec(2) << 0.3, 0.7).finished()};
    auto fixed = geodesic_integrate(m, start, 1.0, 1e-3);
    IntegratorOptions opts;
    opts.method = IntegratorMethod::Rk45Adaptive;
    auto adaptive = geodesic_integrate(m, start, 1.0, 1e-2, opts);
    REQUIRE_FALSE(adaptive.truncated);
    REQUIRE(adaptive.times.back() == Catch::Approx(1.0));
    CHECK((adaptive.points.back() - fixed.points.back()).norm() < 1e-7);
    CHECK((adaptive.velocities.back() - fixed.velocities.back()).norm() < 1e-7);
    CHECK(adaptive.energy_drift < 1e-7);
    // Adaptive control should take fewer steps than the fine fixed grid.
    CHECK(adaptive.size() < fixed.size());
}

TEST_CASE("energy conservation property across seeded starts") {
    auto m = polar_plane();
    SampleRng rng(77ull);
    for (int trial = 0; trial < 5; ++trial) {
        Vec p = rng.interior_point(m.domain().lo, m.domain().hi, 0.35);
        Vec v = rng.unit_vector(2);
        auto traj = geodesic_integrate(m, {p, v}, 3.0, 1e-3);
        double e0 = v.dot(m.metric_at(p) * v);
        REQUIRE(traj.energy_drift <= 1e-6 * (1.0 + e0));
    }
}
