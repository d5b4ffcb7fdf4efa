#pragma once

#include <utility>
#include <vector>

#include "rmap/decomposition.hpp"

namespace rmap {

enum class TensorKind { T, A, HatNabla, SecondFF, NablaPhi, NablaOmega };

// One evaluation of a fundamental tensor, with the projected summands kept
// apart so tests can inspect where the value lives.
struct TensorSample {
    Vec at;
    Vec horizontal_part;
    Vec vertical_part;
    TensorKind kind = TensorKind::T;

    Vec value() const { return horizontal_part + vertical_part; }
};

// T_U E = H nabla_{VU} (VE) + V nabla_{VU} (HE), with both arguments extended
// by the sanctioned bundle projections. Restricted to vertical pairs this is
// the second fundamental form of the fibers.
inline TensorSample tensor_T(const MapSpec& F, const ComplexStructureField* J, const Vec& U, const Vec& E,
                             const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    if ((U - d.P_vert * U).norm() > std::sqrt(rank_tol) * (1.0 + U.norm()))
        throw NotVertical("tensor T takes a vertical first argument");
    Vec Ev = d.P_vert * E;
    Vec Eh = d.P_horiz * E;
    VectorField ext_v = extend_field(F, J, p, Ev, Bundle::Vertical, rank_tol);
    VectorField ext_h = extend_field(F, J, p, Eh, Bundle::Horizontal, rank_tol);
    TangentVector dir{p, U};
    Vec grad_v = covariant_derivative(F.source, dir, ext_v, p);
    Vec grad_h = covariant_derivative(F.source, dir, ext_h, p);
    return {p, d.P_horiz * grad_v, d.P_vert * grad_h, TensorKind::T};
}

// A_X E = H nabla_{HX} (VE) + V nabla_{HX} (HE).
inline TensorSample tensor_A(const MapSpec& F, const ComplexStructureField* J, const Vec& X, const Vec& E,
                             const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    if ((X - d.P_horiz * X).norm() > std::sqrt(rank_tol) * (1.0 + X.norm()))
        throw NotHorizontal("tensor A takes a horizontal first argument");
    Vec Ev = d.P_vert * E;
    Vec Eh = d.P_horiz * E;
    VectorField ext_v = extend_field(F, J, p, Ev, Bundle::Vertical, rank_tol);
    VectorField ext_h = extend_field(F, J, p, Eh, Bundle::Horizontal, rank_tol);
    TangentVector dir{p, X};
    Vec grad_v = covariant_derivative(F.source, dir, ext_v, p);
    Vec grad_h = covariant_derivative(F.source, dir, ext_h, p);
    return {p, d.P_horiz * grad_v, d.P_vert * grad_h, TensorKind::A};
}

// hat-nabla_V W = V nabla_V W for vertical V, W: the fiber connection.
inline Vec hat_nabla(const MapSpec& F, const ComplexStructureField* J, const Vec& V, const Vec& W,
                     const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    if ((V - d.P_vert * V).norm() > std::sqrt(rank_tol) * (1.0 + V.norm()) ||
        (W - d.P_vert * W).norm() > std::sqrt(rank_tol) * (1.0 + W.norm()))
        throw NotVertical("hat-nabla takes vertical arguments");
    VectorField ext = extend_field(F, J, p, W, Bundle::Vertical, rank_tol);
    return d.P_vert * covariant_derivative(F.source, {p, V}, ext, p);
}

// (nabla_V phi) W = hat-nabla_V (phi W) - phi (hat-nabla_V W), V, W vertical.
inline Vec nabla_phi(const MapSpec& F, const ComplexStructureField& Jf, const Vec& V, const Vec& W,
                     const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &Jf, p, rank_tol);
    if ((V - d.P_vert * V).norm() > std::sqrt(rank_tol) * (1.0 + V.norm()) ||
        (W - d.P_vert * W).norm() > std::sqrt(rank_tol) * (1.0 + W.norm()))
        throw NotVertical("nabla_phi takes vertical arguments");
    VectorField Wext = extend_field(F, &Jf, p, W, Bundle::Vertical, rank_tol);
    VectorField phiW = VectorField::from_sampler([&F, &Jf, Wext, rank_tol](const Vec& q) {
        PointDecomposition dq = decompose_at(F, &Jf, q, rank_tol);
        return (dq.P_vert * (dq.J * Wext.sampler(q))).eval();
    });
    Vec lhs = d.P_vert * covariant_derivative(F.source, {p, V}, phiW, p);
    Vec hatVW = d.P_vert * covariant_derivative(F.source, {p, V}, Wext, p);
    Vec rhs = d.P_vert * (d.J * hatVW);
    return lhs - rhs;
}

// (nabla_V omega) W = H nabla_V (omega W) - omega (hat-nabla_V W).
inline Vec nabla_omega(const MapSpec& F, const ComplexStructureField& Jf, const Vec& V, const Vec& W,
                       const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &Jf, p, rank_tol);
    if ((V - d.P_vert * V).norm() > std::sqrt(rank_tol) * (1.0 + V.norm()) ||
        (W - d.P_vert * W).norm() > std::sqrt(rank_tol) * (1.0 + W.norm()))
        throw NotVertical("nabla_omega takes vertical arguments");
    VectorField Wext = extend_field(F, &Jf, p, W, Bundle::Vertical, rank_tol);
    VectorField omegaW = VectorField::from_sampler([&F, &Jf, Wext, rank_tol](const Vec& q) {
        PointDecomposition dq = decompose_at(F, &Jf, q, rank_tol);
        return (dq.P_horiz * (dq.J * Wext.sampler(q))).eval();
    });
    Vec lhs = d.P_horiz * covariant_derivative(F.source, {p, V}, omegaW, p);
    Vec hatVW = d.P_vert * covariant_derivative(F.source, {p, V}, Wext, p);
    Vec rhs = d.P_horiz * (d.J * hatVW);
    return lhs - rhs;
}

namespace detail {

// Extension of an arbitrary tangent vector: vertical and horizontal parts
// extended in their own bundles and summed.
inline VectorField split_extension(const MapSpec& F, const ComplexStructureField* J, const Vec& p,
                                   const Vec& Y, double rank_tol) {
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    VectorField ev = extend_field(F, J, p, (d.P_vert * Y).eval(), Bundle::Vertical, rank_tol);
    VectorField eh = extend_field(F, J, p, (d.P_horiz * Y).eval(), Bundle::Horizontal, rank_tol);
    return VectorField::from_sampler(
        [ev, eh](const Vec& q) { return (ev.sampler(q) + eh.sampler(q)).eval(); });
}

} // namespace detail

// Pullback-connection derivative of the pushed-forward field F_* Yfield along
// the coordinate ray through p with velocity X: numeric realization of
// nabla^F_X (F_* Y).
inline Vec pullback_derivative(const MapSpec& F, const Vec& p, const Vec& X, const VectorField& Yfield,
                               double rank_tol = kRankTol) {
    (void)rank_tol;
    auto pushed = [&](const Vec& q) { return (F.differential(q) * Yfield.sampler(q)).eval(); };
    double h = fd_step(p);
    Vec dt = (pushed(p + h * X) - pushed(p - h * X)) / (2.0 * h);
    Vec fp = F.apply(p);
    std::vector<Mat> gamma2 = F.target.christoffel(fp);
    Vec FX = F.differential(p) * X;
    Vec FY = F.differential(p) * Yfield.sampler(p);
    Vec corr(F.target.dim());
    for (int k = 0; k < F.target.dim(); ++k) corr[k] = FX.dot(gamma2[static_cast<std::size_t>(k)] * FY);
    return dt + corr;
}

// (nabla F_*)(X, Y) = nabla^F_X (F_* Y) - F_* (nabla_X Y), a target tangent
// vector at F(p).
inline Vec second_fundamental_form(const MapSpec& F, const ComplexStructureField* J, const Vec& X,
                                   const Vec& Y, const Vec& p, double rank_tol = kRankTol) {
    VectorField Yext = detail::split_extension(F, J, p, Y, rank_tol);
    Vec pullback = pullback_derivative(F, p, X, Yext, rank_tol);
    Vec nablaXY = covariant_derivative(F.source, {p, X}, Yext, p);
    return pullback - F.differential(p) * nablaXY;
}

// H = (1/k) sum_i T_{b_i} b_i over a g1-orthonormal vertical frame.
inline Vec mean_curvature(const MapSpec& F, const ComplexStructureField* J, const Vec& p,
                          double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    const int k = static_cast<int>(d.vertical.cols());
    if (k == 0) throw NoFibers("mean curvature undefined: the map has no fibers (dim ker = 0)");
    Vec H = Vec::Zero(F.source.dim());
    for (int i = 0; i < k; ++i) {
        Vec b = d.vertical.col(i);
        H += tensor_T(F, J, b, b, p, rank_tol).value();
    }
    return H / static_cast<double>(k);
}

struct FiberGeometryReport {
    double max_T_norm = 0.0;
    double umbilical_residual = 0.0;
    std::vector<std::pair<Vec, Vec>> mean_curvature_samples; // (point, H)
    Verdict verdict_geodesic = Verdict::Inconclusive;
    Verdict verdict_umbilical = Verdict::Inconclusive;
};

struct FiberGeometryPlan {
    int points = 16;
    int pairs = 6;
    std::uint64_t seed = 1;
    double margin_fraction = 0.2;
    double tol = 1e-6;
};

// Totally-geodesic / totally-umbilical verdicts: max ||T_U V|| and
// max ||T_U V - g1(U, V) H|| over seeded samples.
inline FiberGeometryReport fiber_geometry(const MapSpec& F, const ComplexStructureField* J,
                                          const FiberGeometryPlan& plan, double rank_tol = kRankTol) {
    FiberGeometryReport rep;
    SampleRng rng(plan.seed);
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, J, p, rank_tol);
        const int k = static_cast<int>(d.vertical.cols());
        if (k == 0) throw NoFibers("fiber geometry undefined: dim ker = 0");
        Vec H = mean_curvature(F, J, p, rank_tol);
        rep.mean_curvature_samples.emplace_back(p, H);
        for (int t = 0; t < plan.pairs; ++t) {
            Vec U = d.vertical * rng.unit_vector(k);
            Vec V = d.vertical * rng.unit_vector(k);
            Vec TUV = tensor_T(F, J, U, V, p, rank_tol).value();
            rep.max_T_norm = std::max(rep.max_T_norm, TUV.norm());
            double guv = U.dot(d.G1 * V);
            rep.umbilical_residual = std::max(rep.umbilical_residual, (TUV - guv * H).norm());
        }
    }
    rep.verdict_geodesic = rep.max_T_norm <= plan.tol ? Verdict::Pass : Verdict::Fail;
    rep.verdict_umbilical =
        (rep.verdict_geodesic == Verdict::Pass || rep.umbilical_residual <= plan.tol) ? Verdict::Pass
                                                                                      : Verdict::Fail;
    return rep;
}

struct OneillIdentityResiduals {
    double eq_vertical_pair = 0.0;   // nabla_V W = T_V W + hat-nabla_V W
    double eq_mixed_vx = 0.0;        // nabla_V X = H nabla_V X + T_V X
    double eq_mixed_xv = 0.0;        // nabla_X V = A_X V + V nabla_X V
    double eq_horizontal_pair = 0.0; // nabla_X Y = H nabla_X Y + A_X Y
    double skew_T = 0.0;
    double skew_A = 0.0;
};

// Residuals of the four decomposition identities and both skew-symmetry
// relations at one point, with fresh random unit arguments.
inline OneillIdentityResiduals oneill_identity_residuals(const MapSpec& F, const ComplexStructureField* J,
                                                         const Vec& p, SampleRng& rng,
                                                         double rank_tol = kRankTol) {
    OneillIdentityResiduals out;
    PointDecomposition d = decompose_at(F, J, p, rank_tol);
    const int m = F.source.dim();
    const int k = static_cast<int>(d.vertical.cols());
    const int r = d.rank;

    Vec V = k > 0 ? (d.vertical * rng.unit_vector(k)).eval() : Vec::Zero(m);
    Vec W = k > 0 ? (d.vertical * rng.unit_vector(k)).eval() : Vec::Zero(m);
    Vec X = r > 0 ? (d.horizontal * rng.unit_vector(r)).eval() : Vec::Zero(m);
    Vec Y = r > 0 ? (d.horizontal * rng.unit_vector(r)).eval() : Vec::Zero(m);

    if (k > 0) {
        VectorField Wext = extend_field(F, J, p, W, Bundle::Vertical, rank_tol);
        Vec full = covariant_derivative(F.source, {p, V}, Wext, p);
        Vec rhs = tensor_T(F, J, V, W, p, rank_tol).value() + hat_nabla(F, J, V, W, p, rank_tol);
        out.eq_vertical_pair = (full - rhs).norm();

        VectorField Xext = extend_field(F, J, p, X, Bundle::Horizontal, rank_tol);
        Vec fullVX = covariant_derivative(F.source, {p, V}, Xext, p);
        Vec rhsVX = d.P_horiz * fullVX + tensor_T(F, J, V, X, p, rank_tol).value();
        out.eq_mixed_vx = (fullVX - rhsVX).norm();

        VectorField Vext = extend_field(F, J, p, V, Bundle::Vertical, rank_tol);
        Vec fullXV = covariant_derivative(F.source, {p, X}, Vext, p);
        Vec rhsXV = tensor_A(F, J, X, V, p, rank_tol).value() + d.P_vert * fullXV;
        out.eq_mixed_xv = (fullXV - rhsXV).norm();
    }
    if (r > 0) {
        VectorField Yext = extend_field(F, J, p, Y, Bundle::Horizontal, rank_tol);
        Vec fullXY = covariant_derivative(F.source, {p, X}, Yext, p);
        Vec rhsXY = d.P_horiz * fullXY + tensor_A(F, J, X, Y, p, rank_tol).value();
        out.eq_horizontal_pair = (fullXY - rhsXY).norm();
    }

    // Skew-symmetry: g(T_U E, F) = -g(E, T_U F), likewise for A_X.
    Vec E1 = rng.unit_vector(m);
    Vec E2 = rng.unit_vector(m);
    if (k > 0) {
        Vec TUE1 = tensor_T(F, J, V, E1, p, rank_tol).value();
        Vec TUE2 = tensor_T(F, J, V, E2, p, rank_tol).value();
        out.skew_T = std::abs(E2.dot(d.G1 * TUE1) + E1.dot(d.G1 * TUE2));
    }
    if (r > 0) {
        Vec AXE1 = tensor_A(F, J, X, E1, p, rank_tol).value();
        Vec AXE2 = tensor_A(F, J, X, E2, p, rank_tol).value();
        out.skew_A = std::abs(E2.dot(d.G1 * AXE1) + E1.dot(d.G1 * AXE2));
    }
    return out;
}

} // namespace rmap
