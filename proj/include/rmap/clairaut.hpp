#pragma once

#include <cmath>
#include <functional>
#include <utility>
#include <vector>

#include "rmap/oneill.hpp"

namespace rmap {

// Log-girth f; the girth itself is r~ = e^f.
struct GirthSpec {
    Expression log_girth;
};

struct PQSample {
    Vec at;
    Vec P_part; // horizontal part of (nabla_U J) V
    Vec Q_part; // vertical part
};

// (nabla_U J) V split into horizontal and vertical parts. Tensorial in V, so
// V rides its sanctioned split extension.
inline PQSample pq_parts(const MapSpec& F, const ComplexStructureField& J, const Vec& U, const Vec& V,
                         const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    VectorField Vext = detail::split_extension(F, &J, p, V, rank_tol);
    Vec nj = nabla_J(F.source, J, {p, U}, Vext, p);
    return {p, d.P_horiz * nj, d.P_vert * nj};
}

struct BishopReport {
    Verdict verdict = Verdict::Inconclusive;
    double umbilical_residual = 0.0;
    double gradmatch_residual = 0.0;
    std::vector<std::pair<Vec, Vec>> mean_curvature_samples;
};

struct BishopPlan {
    int points = 16;
    int pairs = 6;
    std::uint64_t seed = 1;
    double margin_fraction = 0.2;
    double tol_umbilical = 1e-6;
    double tol_gradmatch = 1e-5;
};

// Bishop criterion: fibers totally umbilical with H = -grad f.
inline BishopReport bishop_check(const MapSpec& F, const ComplexStructureField* J, const GirthSpec& girth,
                                 const BishopPlan& plan, double rank_tol = kRankTol) {
    FiberGeometryPlan fplan;
    fplan.points = plan.points;
    fplan.pairs = plan.pairs;
    fplan.seed = plan.seed;
    fplan.margin_fraction = plan.margin_fraction;
    fplan.tol = plan.tol_umbilical;
    FiberGeometryReport fib = fiber_geometry(F, J, fplan, rank_tol);

    BishopReport rep;
    rep.umbilical_residual = fib.umbilical_residual;
    rep.mean_curvature_samples = fib.mean_curvature_samples;
    for (const auto& [p, H] : fib.mean_curvature_samples) {
        Vec gf = gradient(F.source, girth.log_girth, p);
        Mat G = F.source.metric_at(p);
        rep.gradmatch_residual = std::max(rep.gradmatch_residual, norm_g(H + gf, G));
    }
    bool umb_ok = fib.verdict_umbilical == Verdict::Pass;
    rep.verdict =
        (umb_ok && rep.gradmatch_residual <= plan.tol_gradmatch) ? Verdict::Pass : Verdict::Fail;
    return rep;
}

struct ClairautTrace {
    Trajectory trajectory;
    std::vector<double> sin_theta;
    std::vector<double> invariant; // e^{f(alpha(t))} sin theta(t)
    double max_relative_drift = 0.0;
    bool degenerate_horizontal = false; // sin theta identically ~0
};

// Trace of the conserved quantity (r~ o alpha) sin theta along a geodesic,
// theta in [0, pi] via sin theta = |V alpha'|_g / |alpha'|_g.
inline ClairautTrace geodesic_clairaut_trace(const MapSpec& F, const GirthSpec& girth,
                                             const TangentVector& start, double t_end, double step,
                                             double rank_tol = kRankTol) {
    if (start.components.norm() == 0.0) throw DegenerateStart("geodesic needs a nonzero initial velocity");
    ClairautTrace out;
    out.trajectory = geodesic_integrate(F.source, start, t_end, step);
    const auto& traj = out.trajectory;
    out.sin_theta.resize(traj.size());
    out.invariant.resize(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        PointDecomposition d = decompose_at(F, nullptr, traj.points[i], rank_tol);
        Vec vert = d.P_vert * traj.velocities[i];
        double s = norm_g(vert, d.G1) / norm_g(traj.velocities[i], d.G1);
        out.sin_theta[i] = s;
        out.invariant[i] = std::exp(girth.log_girth.eval(traj.points[i])) * s;
    }
    double i0 = out.invariant.empty() ? 0.0 : out.invariant.front();
    double max_inv = 0.0;
    for (double v : out.invariant) max_inv = std::max(max_inv, std::abs(v));
    if (max_inv <= 1e-12) {
        out.degenerate_horizontal = true;
        out.max_relative_drift = 0.0;
        return out;
    }
    for (double v : out.invariant)
        out.max_relative_drift = std::max(out.max_relative_drift, std::abs(v - i0) / std::abs(i0));
    return out;
}

// A curve sample: position and velocity at a parameter offset from the
// anchor point. Residual operators difference fields along the actual curve,
// which is what distinguishes geodesics from impostors.
struct CurvePoint {
    Vec x;
    Vec v;
};
using Curve = std::function<CurvePoint(double)>;

// One RK4 step of the geodesic system; accurate to O(h^5), plenty for the
// +-h stencils below.
inline CurvePoint geodesic_step(const ManifoldSpec& m, const Vec& x, const Vec& v, double h) {
    auto accel = [&](const Vec& q, const Vec& w) {
        std::vector<Mat> gamma = m.christoffel(q);
        Vec a(m.dim());
        for (int k = 0; k < m.dim(); ++k) a[k] = -w.dot(gamma[static_cast<std::size_t>(k)] * w);
        return a;
    };
    Vec k1x = v, k1v = accel(x, v);
    Vec k2x = v + 0.5 * h * k1v, k2v = accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
    Vec k3x = v + 0.5 * h * k2v, k3v = accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
    Vec k4x = v + h * k3v, k4v = accel(x + h * k3x, v + h * k3v);
    return {x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x),
            v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v)};
}

inline Curve geodesic_curve(const ManifoldSpec& m, const TangentVector& state) {
    Vec x = state.base, v = state.components;
    return [&m, x, v](double dt) -> CurvePoint {
        if (dt == 0.0) return {x, v};
        return geodesic_step(m, x, v, dt);
    };
}

namespace detail {

// Shared scaffolding for the Lemma 1 / Theorem 2 assemblies: the alphabet
// B X, C X, phi U, omega U as fields along the curve, their curve-covariant
// derivatives, and the pointwise tensors.
struct CurveFrame {
    Vec x0, v0, X0, U0;
    Vec BX0, CX0, phiU0, omegaU0;
    Vec dBX, dCX, dphiU, domegaU; // nabla_{alpha'} (...) at the anchor
    Mat G1;
    PointDecomposition d;
};

inline CurveFrame curve_frame(const MapSpec& F, const ComplexStructureField& J, const Curve& curve,
                              double rank_tol) {
    CurveFrame fr;
    CurvePoint c0 = curve(0.0);
    fr.x0 = c0.x;
    fr.v0 = c0.v;
    fr.d = decompose_at(F, &J, fr.x0, rank_tol);
    fr.G1 = fr.d.G1;
    fr.X0 = fr.d.P_horiz * fr.v0;
    fr.U0 = fr.d.P_vert * fr.v0;

    auto alphabet = [&F, &J, rank_tol](const CurvePoint& cp) {
        PointDecomposition dq = decompose_at(F, &J, cp.x, rank_tol);
        Vec X = dq.P_horiz * cp.v;
        Vec U = dq.P_vert * cp.v;
        Vec JX = dq.J * X;
        Vec JU = dq.J * U;
        struct Values {
            Vec BX, CX, phiU, omegaU;
        } vals;
        vals.BX = dq.P_d2 * JX;
        vals.CX = dq.P_mu * JX;
        vals.phiU = dq.P_vert * JU;
        vals.omegaU = dq.P_horiz * JU;
        return vals;
    };

    auto v0vals = alphabet(c0);
    fr.BX0 = v0vals.BX;
    fr.CX0 = v0vals.CX;
    fr.phiU0 = v0vals.phiU;
    fr.omegaU0 = v0vals.omegaU;

    double h = 1e-5 * (1.0 + fr.x0.lpNorm<Eigen::Infinity>());
    auto plus = alphabet(curve(h));
    auto minus = alphabet(curve(-h));
    std::vector<Mat> gamma = F.source.christoffel(fr.x0);
    auto curve_derivative = [&](const Vec& fplus, const Vec& fminus, const Vec& f0) {
        Vec dt = (fplus - fminus) / (2.0 * h);
        for (int k = 0; k < F.source.dim(); ++k)
            dt[k] += fr.v0.dot(gamma[static_cast<std::size_t>(k)] * f0);
        return dt;
    };
    fr.dBX = curve_derivative(plus.BX, minus.BX, fr.BX0);
    fr.dCX = curve_derivative(plus.CX, minus.CX, fr.CX0);
    fr.dphiU = curve_derivative(plus.phiU, minus.phiU, fr.phiU0);
    fr.domegaU = curve_derivative(plus.omegaU, minus.omegaU, fr.omegaU0);
    return fr;
}

} // namespace detail

// Residual norms of the two geodesic characterizations: the vertical
// expression V nabla BX + A_X CX + V nabla phi U + A_X omega U + T_U CX +
// T_U omega U and its horizontal sibling. Both vanish along geodesics.
inline std::pair<double, double> lemma1_residuals(const MapSpec& F, const ComplexStructureField& J,
                                                  const Curve& curve, double rank_tol = kRankTol) {
    detail::CurveFrame fr = detail::curve_frame(F, J, curve, rank_tol);
    const auto& d = fr.d;

    auto T = [&](const Vec& U, const Vec& E) { return tensor_T(F, &J, U, E, fr.x0, rank_tol).value(); };
    auto A = [&](const Vec& X, const Vec& E) { return tensor_A(F, &J, X, E, fr.x0, rank_tol).value(); };

    Vec vres = d.P_vert * fr.dBX + A(fr.X0, fr.CX0) + d.P_vert * fr.dphiU + A(fr.X0, fr.omegaU0) +
               T(fr.U0, fr.CX0) + T(fr.U0, fr.omegaU0);
    Vec hres = d.P_horiz * fr.dCX + d.P_horiz * fr.domegaU + A(fr.X0, fr.BX0) + T(fr.U0, fr.BX0) +
               A(fr.X0, fr.phiU0) + T(fr.U0, fr.phiU0);
    return {norm_g(vres, fr.G1), norm_g(hres, fr.G1)};
}

inline std::pair<double, double> lemma1_residuals(const MapSpec& F, const ComplexStructureField& J,
                                                  const TangentVector& state, double rank_tol = kRankTol) {
    return lemma1_residuals(F, J, geodesic_curve(F.source, state), rank_tol);
}

struct Theorem2Result {
    double signed_value = 0.0; // the displayed sum plus g(U,U) df/dt
    double residual = 0.0;     // its absolute value
    double df_dt = 0.0;
};

// Clairaut characterization along a geodesic: the two inner products against
// BX and CX plus g1(U, U) df/dt must vanish. df/dt is evaluated analytically
// as g1(grad f, alpha') to stay independent of the trace computation.
inline Theorem2Result theorem2_residual(const MapSpec& F, const ComplexStructureField& J,
                                        const GirthSpec& girth, const Curve& curve,
                                        double rank_tol = kRankTol) {
    detail::CurveFrame fr = detail::curve_frame(F, J, curve, rank_tol);
    const auto& d = fr.d;
    auto T = [&](const Vec& U, const Vec& E) { return tensor_T(F, &J, U, E, fr.x0, rank_tol).value(); };
    auto A = [&](const Vec& X, const Vec& E) { return tensor_A(F, &J, X, E, fr.x0, rank_tol).value(); };

    Vec first = d.P_vert * fr.dphiU + A(fr.X0, fr.CX0) + T(fr.U0, fr.CX0) + A(fr.X0, fr.omegaU0) +
                T(fr.U0, fr.omegaU0);
    Vec second = A(fr.X0, fr.BX0) + A(fr.X0, fr.phiU0) + T(fr.U0, fr.phiU0) + T(fr.U0, fr.BX0) +
                 d.P_horiz * fr.domegaU;

    Theorem2Result out;
    Vec gf = gradient(F.source, girth.log_girth, fr.x0);
    out.df_dt = fr.v0.dot(fr.G1 * gf);
    double guu = fr.U0.dot(fr.G1 * fr.U0);
    out.signed_value = first.dot(fr.G1 * fr.BX0) + second.dot(fr.G1 * fr.CX0) + guu * out.df_dt;
    out.residual = std::abs(out.signed_value);
    return out;
}

inline Theorem2Result theorem2_residual(const MapSpec& F, const ComplexStructureField& J,
                                        const GirthSpec& girth, const TangentVector& state,
                                        double rank_tol = kRankTol) {
    return theorem2_residual(F, J, girth, geodesic_curve(F.source, state), rank_tol);
}

struct Thm3Report {
    bool alt_constant_girth = false; // (i) f constant on omega D2
    bool alt_one_dim_fibers = false; // (ii)
    bool alt_identity = false;       // (iii) within tolerance
    double grad_on_omega_d2 = 0.0;
    double identity_residual = 0.0;
    bool identity_applicable = false; // needs nonempty D2 and mu
    int satisfied_count = 0;
};

struct Thm3Plan {
    int points = 8;
    std::uint64_t seed = 1;
    double margin_fraction = 0.2;
    double tol = 1e-4;
};

// The trichotomy: f constant on omega D2, one-dimensional fibers, or the
// displayed identity over Y in mu and V, W in D2.
inline Thm3Report thm3_classify(const MapSpec& F, const ComplexStructureField& J, const GirthSpec& girth,
                                const Thm3Plan& plan, double rank_tol = kRankTol) {
    Thm3Report rep;
    SampleRng rng(plan.seed);
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, &J, p, rank_tol);
        if (i == 0) rep.alt_one_dim_fibers = d.vertical.cols() == 1;
        Vec gf = gradient(F.source, girth.log_girth, p);
        rep.grad_on_omega_d2 = std::max(rep.grad_on_omega_d2, norm_g(d.P_omega_d2 * gf, d.G1));

        const int dim_d2 = static_cast<int>(d.d2.cols());
        const int dim_mu = static_cast<int>(d.mu.cols());
        if (dim_d2 == 0 || dim_mu == 0) continue;
        rep.identity_applicable = true;
        Vec fp = F.apply(p);
        Mat G2 = F.target.metric_at(fp);
        for (int yi = 0; yi < dim_mu; ++yi) {
            Vec Y = d.mu.col(yi);
            VectorField Yfield = extend_field(F, &J, p, Y, Bundle::Mu, rank_tol);
            for (int vi = 0; vi < dim_d2; ++vi) {
                for (int wi = 0; wi < dim_d2; ++wi) {
                    Vec V = d.d2.col(vi);
                    Vec W = d.d2.col(wi);
                    Vec JW = d.J * W;
                    Vec JV = d.J * V;
                    Vec JY = d.J * Y;
                    Vec pullback = pullback_derivative(F, p, JW, Yfield, rank_tol);
                    PQSample q_jw_y = pq_parts(F, J, JW, Y, p, rank_tol);
                    PQSample p_v_w = pq_parts(F, J, V, W, p, rank_tol);
                    double term1 = pullback.dot(G2 * (d.A * JV));
                    double term2 = V.dot(d.G1 * q_jw_y.Q_part);
                    double term3 = (d.A * p_v_w.P_part).dot(G2 * (d.A * JY));
                    double term4 = (d.A * JV).dot(G2 * (d.A * JW)) * gf.dot(d.G1 * Y);
                    rep.identity_residual =
                        std::max(rep.identity_residual, std::abs(term1 - term2 - term3 + term4));
                }
            }
        }
    }
    rep.alt_constant_girth = rep.grad_on_omega_d2 <= plan.tol;
    rep.alt_identity = rep.identity_applicable ? rep.identity_residual <= plan.tol : true;
    rep.satisfied_count = static_cast<int>(rep.alt_constant_girth) + static_cast<int>(rep.alt_one_dim_fibers) +
                          static_cast<int>(rep.alt_identity);
    return rep;
}

struct CorollaryReport {
    Verdict applicable = Verdict::NotApplicable;
    bool geodesic_side = false;          // T == 0
    bool pullback_side = false;          // nabla^F_{JW} F_* Y == 0
    double max_pullback_norm = 0.0;
    bool sides_agree = false;
};

// Corollary: with dim ker > 1 and Clairaut verified, totally geodesic fibers
// iff the pullback derivative nabla^F_{JW} F_* Y vanishes (W in D2, Y in mu).
inline CorollaryReport corollary_check(const MapSpec& F, const ComplexStructureField& J,
                                       const Thm3Plan& plan, bool fibers_geodesic,
                                       double rank_tol = kRankTol) {
    CorollaryReport rep;
    SampleRng rng(plan.seed);
    Vec probe = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
    PointDecomposition d0 = decompose_at(F, &J, probe, rank_tol);
    if (d0.vertical.cols() <= 1) return rep;
    rep.applicable = Verdict::Pass;
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, &J, p, rank_tol);
        const int dim_d2 = static_cast<int>(d.d2.cols());
        const int dim_mu = static_cast<int>(d.mu.cols());
        for (int wi = 0; wi < dim_d2; ++wi) {
            Vec JW = d.J * d.d2.col(wi);
            for (int yi = 0; yi < dim_mu; ++yi) {
                VectorField Yfield = extend_field(F, &J, p, d.mu.col(yi).eval(), Bundle::Mu, rank_tol);
                Vec pullback = pullback_derivative(F, p, JW, Yfield, rank_tol);
                rep.max_pullback_norm = std::max(rep.max_pullback_norm, pullback.norm());
            }
        }
    }
    rep.geodesic_side = fibers_geodesic;
    rep.pullback_side = rep.max_pullback_norm <= plan.tol;
    rep.sides_agree = rep.geodesic_side == rep.pullback_side;
    return rep;
}

struct FoliationReport {
    double d1_residual = 0.0;
    double d2_residual = 0.0;
    double d1_direct = 0.0; // ||Pi_complement nabla_X Y|| for X, Y in D1
    double d2_direct = 0.0;
    bool d1_applicable = false;
    bool d2_applicable = false;
};

// Residuals of both totally-geodesic-foliation characterizations plus the
// direct projector checks. The D2 condition is reconstructed from the final
// display of its proof (the statement in the source breaks off), and reports
// label it accordingly.
inline FoliationReport foliation_residuals(const MapSpec& F, const ComplexStructureField& J,
                                           const Thm3Plan& plan, double rank_tol = kRankTol) {
    FoliationReport rep;
    SampleRng rng(plan.seed);
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, &J, p, rank_tol);
        Vec fp = F.apply(p);
        Mat G2 = F.target.metric_at(fp);
        const int m = F.source.dim();
        const int k1 = static_cast<int>(d.d1.cols());
        const int k2 = static_cast<int>(d.d2.cols());

        auto omega_field = [&](const Vec& y, Bundle bundle) {
            VectorField ext = extend_field(F, &J, p, y, bundle, rank_tol);
            return VectorField::from_sampler([&F, &J, ext, rank_tol](const Vec& q) -> Vec {
                PointDecomposition dq = decompose_at(F, &J, q, rank_tol);
                return dq.P_horiz * (dq.J * ext.sampler(q));
            });
        };

        if (k1 > 0 && k2 > 0) {
            rep.d1_applicable = true;
            for (int xi = 0; xi < k1; ++xi)
                for (int yi = 0; yi < k1; ++yi)
                    for (int zi = 0; zi < k2; ++zi) {
                        Vec X = d.d1.col(xi), Y = d.d1.col(yi), Z = d.d2.col(zi);
                        Vec JZ = d.J * Z;
                        PQSample pxy = pq_parts(F, J, X, Y, p, rank_tol);
                        Vec nabla_omega_y = covariant_derivative(F.source, {p, X}, omega_field(Y, Bundle::D1), p);
                        double lhs = (d.A * pxy.P_part).dot(G2 * (d.A * JZ)) -
                                     (d.A * nabla_omega_y).dot(G2 * (d.A * JZ));
                        rep.d1_residual = std::max(rep.d1_residual, std::abs(lhs));
                    }
        }
        if (k2 > 0 && k1 > 0) {
            rep.d2_applicable = true;
            for (int xi = 0; xi < k2; ++xi)
                for (int yi = 0; yi < k2; ++yi)
                    for (int zi = 0; zi < k1; ++zi) {
                        Vec X = d.d2.col(xi), Y = d.d2.col(yi), Z = d.d1.col(zi);
                        Vec JY = d.J * Y;
                        PQSample pxz = pq_parts(F, J, X, Z, p, rank_tol);
                        Vec nabla_omega_z = covariant_derivative(F.source, {p, X}, omega_field(Z, Bundle::D1), p);
                        double lhs = -(d.A * nabla_omega_z).dot(G2 * (d.A * JY)) +
                                     (d.A * pxz.P_part).dot(G2 * (d.A * JY));
                        rep.d2_residual = std::max(rep.d2_residual, std::abs(lhs));
                    }
        }

        // Independent check: distributions are totally geodesic iff nabla of
        // sections stays inside, measured through the complement projector.
        Mat I = Mat::Identity(m, m);
        if (k1 > 0) {
            for (int xi = 0; xi < k1; ++xi)
                for (int yi = 0; yi < k1; ++yi) {
                    VectorField ext = extend_field(F, &J, p, d.d1.col(yi).eval(), Bundle::D1, rank_tol);
                    Vec nab = covariant_derivative(F.source, {p, d.d1.col(xi)}, ext, p);
                    rep.d1_direct = std::max(rep.d1_direct, ((I - d.P_d1) * nab).norm());
                }
        }
        if (k2 > 0) {
            for (int xi = 0; xi < k2; ++xi)
                for (int yi = 0; yi < k2; ++yi) {
                    VectorField ext = extend_field(F, &J, p, d.d2.col(yi).eval(), Bundle::D2, rank_tol);
                    Vec nab = covariant_derivative(F.source, {p, d.d2.col(xi)}, ext, p);
                    rep.d2_direct = std::max(rep.d2_direct, ((I - d.P_d2) * nab).norm());
                }
        }
    }
    return rep;
}

} // namespace rmap
