#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmap/structure.hpp"

namespace rmap {

// Smooth map F : (M, g1) -> (N, g2) given by component expressions.
struct MapSpec {
    ManifoldSpec source;
    ManifoldSpec target;
    std::vector<Expression> components; // target.dim expressions of source coordinates
    int declared_rank = -1;             // cross-checked against the numeric rank when >= 0

    Vec apply(const Vec& p) const {
        Vec out(static_cast<Eigen::Index>(components.size()));
        for (std::size_t i = 0; i < components.size(); ++i)
            out[static_cast<Eigen::Index>(i)] = components[i].eval(p);
        return out;
    }

    // Jacobian of F at p from exact jets.
    Mat differential(const Vec& p) const {
        const int n = static_cast<int>(components.size());
        const int m = source.dim();
        Mat A(n, m);
        for (int i = 0; i < n; ++i) {
            Vec grad = components[static_cast<std::size_t>(i)].gradient(p);
            A.row(i) = grad.head(m).transpose();
        }
        return A;
    }
};

enum class Bundle { Vertical, Horizontal, D1, D2, Mu, OmegaD2 };

inline const char* to_string(Bundle b) {
    switch (b) {
        case Bundle::Vertical: return "vertical";
        case Bundle::Horizontal: return "horizontal";
        case Bundle::D1: return "D1";
        case Bundle::D2: return "D2";
        case Bundle::Mu: return "mu";
        case Bundle::OmegaD2: return "omegaD2";
    }
    return "?";
}

struct SubspaceBasis {
    Vec base_point;
    Mat vectors;               // columns are g-orthonormal basis vectors
    std::string metric_context; // "source" or "target"

    int dim_sub() const { return static_cast<int>(vectors.cols()); }
};

struct SplitVector {
    Vec first;  // phi U / B X / P1 U / vertical part
    Vec second; // omega U / C X / P2 U / horizontal part
};

// Everything the decomposition zoo needs at one point, from one Jacobian SVD
// plus (with J) one principal-angle split of the kernel.
struct PointDecomposition {
    Vec p;
    Mat G1;          // source metric at p
    Mat A;           // differential
    int rank = 0;
    Mat vertical;    // m x k
    Mat horizontal;  // m x rank
    Mat P_vert, P_horiz;

    bool has_structure = false;
    Mat J;           // J(p) when present
    Mat d1, d2, omega_d2, mu;
    Mat P_d1, P_d2, P_mu, P_omega_d2;
};

inline PointDecomposition decompose_at(const MapSpec& F, const ComplexStructureField* J, const Vec& p,
                                       double rank_tol = kRankTol) {
    PointDecomposition out;
    out.p = p;
    out.G1 = F.source.metric_at(p);
    MetricFactor mf(out.G1);
    out.A = F.differential(p);
    KernelSplit ks = kernel_split(out.A, mf, rank_tol);
    out.rank = ks.rank;
    if (F.declared_rank >= 0 && ks.rank != F.declared_rank)
        throw VariableRank("numeric rank " + std::to_string(ks.rank) + " differs from declared rank " +
                           std::to_string(F.declared_rank) + " at a sampled point");
    out.vertical = ks.kernel;
    out.horizontal = ks.complement;
    out.P_vert = projector(out.vertical, out.G1);
    out.P_horiz = projector(out.horizontal, out.G1);

    if (J) {
        out.has_structure = true;
        out.J = J->matrix_at(p);
        // D1 = ker \cap J(ker) via principal angles of the cross-Gram matrix.
        Mat Jker = out.J * out.vertical;
        Mat JkerBasis = orthonormal_span(Jker, mf, rank_tol);
        IntersectionSplit is = intersect_subspaces(out.vertical, JkerBasis, out.G1, rank_tol);
        out.d1 = is.intersection;
        out.d2 = is.complement;
        out.P_d1 = projector(out.d1, out.G1);
        out.P_d2 = projector(out.d2, out.G1);
        // omega D2 = horizontal part of J(D2); mu = its complement in the
        // horizontal space.
        Mat omega_vecs = out.P_horiz * (out.J * out.d2);
        out.omega_d2 = orthonormal_span(omega_vecs, mf, std::sqrt(rank_tol));
        out.mu = complement_within(out.omega_d2, out.horizontal, mf, rank_tol);
        out.P_mu = projector(out.mu, out.G1);
        out.P_omega_d2 = projector(out.omega_d2, out.G1);
    }
    return out;
}

inline Mat differential(const MapSpec& F, const Vec& p) { return F.differential(p); }

struct RiemannianMapReport {
    Verdict verdict = Verdict::Inconclusive;
    double max_residual = 0.0;
    int rank = -1;
    bool immersion_edge = false;  // ker F_* = 0
    bool submersion_edge = false; // (range F_*)^perp = 0
};

struct DecompositionSamplePlan {
    int points = 32;
    int pairs = 8;
    std::uint64_t seed = 1;
    double margin_fraction = 0.2;
};

// Riemannian-map condition: g2(F_*X, F_*Y) = g1(X, Y) on horizontal vectors,
// maximized over seeded samples.
inline RiemannianMapReport check_riemannian_map(const MapSpec& F, const DecompositionSamplePlan& plan,
                                                double tol, double rank_tol = kRankTol) {
    RiemannianMapReport rep;
    SampleRng rng(plan.seed);
    std::vector<double> residuals(static_cast<std::size_t>(plan.points), 0.0);
    std::vector<int> ranks(static_cast<std::size_t>(plan.points), -1);
    // Coefficient draws happen after decomposition (rank-dependent), so this
    // loop stays sequential; the arithmetic inside is cheap anyway.
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, nullptr, p, rank_tol);
        ranks[i] = d.rank;
        if (d.rank == 0) continue;
        Vec fp = F.apply(p);
        Mat G2 = F.target.metric_at(fp);
        double worst = 0.0;
        for (int k = 0; k < plan.pairs; ++k) {
            Vec X = d.horizontal * rng.unit_vector(d.rank);
            Vec Y = d.horizontal * rng.unit_vector(d.rank);
            double lhs = (d.A * X).dot(G2 * (d.A * Y));
            double rhs = X.dot(d.G1 * Y);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        residuals[i] = worst;
    }
    for (std::size_t i = 0; i < residuals.size(); ++i) {
        rep.max_residual = std::max(rep.max_residual, residuals[i]);
        if (ranks[i] >= 0 && rep.rank >= 0 && ranks[i] != rep.rank)
            throw VariableRank("rank changed between sampled points");
        if (ranks[i] >= 0) rep.rank = ranks[i];
    }
    const int m = F.source.dim(), n = F.target.dim();
    rep.immersion_edge = (rep.rank == m);
    rep.submersion_edge = (rep.rank == n);
    rep.verdict = rep.max_residual <= tol ? Verdict::Pass : Verdict::Fail;
    return rep;
}

inline SubspaceBasis vertical_basis(const MapSpec& F, const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, nullptr, p, rank_tol);
    return {p, d.vertical, "source"};
}

inline SubspaceBasis horizontal_basis(const MapSpec& F, const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, nullptr, p, rank_tol);
    return {p, d.horizontal, "source"};
}

// g2-orthonormal basis of (range F_*)^perp in the target tangent space.
inline SubspaceBasis range_perp_basis(const MapSpec& F, const Vec& p, double rank_tol = kRankTol) {
    Mat A = F.differential(p);
    Vec fp = F.apply(p);
    MetricFactor mf2(F.target.metric_at(fp));
    RangeSplit rs = range_split(A, mf2, rank_tol);
    if (F.declared_rank >= 0 && rs.rank != F.declared_rank)
        throw VariableRank("numeric rank differs from declared rank");
    return {fp, rs.perp, "target"};
}

inline SubspaceBasis range_basis(const MapSpec& F, const Vec& p, double rank_tol = kRankTol) {
    Mat A = F.differential(p);
    Vec fp = F.apply(p);
    MetricFactor mf2(F.target.metric_at(fp));
    RangeSplit rs = range_split(A, mf2, rank_tol);
    return {fp, rs.range, "target"};
}

inline SubspaceBasis d1_basis(const MapSpec& F, const ComplexStructureField& J, const Vec& p,
                              double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    return {p, d.d1, "source"};
}

inline SubspaceBasis d2_basis(const MapSpec& F, const ComplexStructureField& J, const Vec& p,
                              double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    return {p, d.d2, "source"};
}

inline SubspaceBasis mu_basis(const MapSpec& F, const ComplexStructureField& J, const Vec& p,
                              double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    return {p, d.mu, "source"};
}

struct GenericMapReport {
    Verdict verdict = Verdict::Inconclusive;
    int dim_d1 = -1;
    int dim_d2 = -1;
    int dim_mu = -1;
    int dim_kernel = -1;
    bool purely_real = false;
    bool complex_fibers = false;
};

// Generic = dim D1 identical at every sampled point.
inline GenericMapReport check_generic(const MapSpec& F, const ComplexStructureField& J,
                                      const DecompositionSamplePlan& plan, double rank_tol = kRankTol) {
    GenericMapReport rep;
    SampleRng rng(plan.seed);
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(F.source.domain().lo, F.source.domain().hi, plan.margin_fraction);
        PointDecomposition d = decompose_at(F, &J, p, rank_tol);
        int dim_d1 = static_cast<int>(d.d1.cols());
        if (rep.dim_d1 < 0) {
            rep.dim_d1 = dim_d1;
            rep.dim_d2 = static_cast<int>(d.d2.cols());
            rep.dim_mu = static_cast<int>(d.mu.cols());
            rep.dim_kernel = static_cast<int>(d.vertical.cols());
        } else if (dim_d1 != rep.dim_d1) {
            rep.verdict = Verdict::Fail;
            return rep;
        }
    }
    rep.verdict = Verdict::Pass;
    rep.purely_real = rep.dim_d1 == 0;
    rep.complex_fibers = rep.dim_d1 == rep.dim_kernel;
    return rep;
}

// JU = phi U + omega U for vertical U: metric projections of JU onto the
// kernel and its complement.
inline SplitVector phi_omega_split(const MapSpec& F, const ComplexStructureField& J, const Vec& U,
                                   const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    if ((U - d.P_vert * U).norm() > rank_tol * (1.0 + U.norm()))
        throw NotVertical("phi/omega split requires a vertical argument");
    Vec JU = d.J * U;
    Vec phi = d.P_vert * JU;
    Vec omega = JU - phi;
    return {phi, omega};
}

// JX = BX + CX for horizontal X, BX in D2 and CX in mu; raises if JX leaks
// outside D2 + mu.
inline SplitVector bc_split(const MapSpec& F, const ComplexStructureField& J, const Vec& X, const Vec& p,
                            double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    if ((X - d.P_horiz * X).norm() > rank_tol * (1.0 + X.norm()))
        throw NotHorizontal("B/C split requires a horizontal argument");
    Vec JX = d.J * X;
    Vec B = d.P_d2 * JX;
    Vec C = d.P_mu * JX;
    double leak = (JX - B - C).norm();
    if (leak > std::sqrt(rank_tol) * (1.0 + JX.norm()))
        throw DecompositionResidual("JX has components outside D2 + mu: " + std::to_string(leak));
    return {B, C};
}

// Projections of a vertical vector onto D1 and D2.
inline std::pair<Vec, Vec> p1_p2_project(const MapSpec& F, const ComplexStructureField& J, const Vec& U,
                                         const Vec& p, double rank_tol = kRankTol) {
    PointDecomposition d = decompose_at(F, &J, p, rank_tol);
    if ((U - d.P_vert * U).norm() > rank_tol * (1.0 + U.norm()))
        throw NotVertical("P1/P2 projection requires a vertical argument");
    return {d.P_d1 * U, d.P_d2 * U};
}

// Local section of a bundle through (p, v): q -> Pi_bundle(q) v. Smooth
// wherever the rank is constant, reproduces v at p. This is the single
// extension convention every covariant derivative downstream uses.
inline VectorField extend_field(const MapSpec& F, const ComplexStructureField* J, const Vec& p,
                                const Vec& v, Bundle bundle, double rank_tol = kRankTol) {
    if ((bundle == Bundle::D1 || bundle == Bundle::D2 || bundle == Bundle::Mu || bundle == Bundle::OmegaD2) && !J)
        throw Error("bundle extension requires a complex structure");

    auto projector_at = [&F, J, bundle, rank_tol](const Vec& q) -> Mat {
        PointDecomposition d = decompose_at(F, J, q, rank_tol);
        switch (bundle) {
            case Bundle::Vertical: return d.P_vert;
            case Bundle::Horizontal: return d.P_horiz;
            case Bundle::D1: return d.P_d1;
            case Bundle::D2: return d.P_d2;
            case Bundle::Mu: return d.P_mu;
            case Bundle::OmegaD2: return d.P_omega_d2;
        }
        throw Error("unknown bundle");
    };

    Mat P0 = projector_at(p);
    if ((v - P0 * v).norm() > std::sqrt(rank_tol) * (1.0 + v.norm()))
        throw NotInBundle("vector does not lie in the " + std::string(to_string(bundle)) +
                          " bundle at the base point");
    // The explicit return type forces evaluation before the projector
    // temporary dies; an expression template here would dangle.
    return VectorField::from_sampler([projector_at, v](const Vec& q) -> Vec { return projector_at(q) * v; });
}

} // namespace rmap
