#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rmap/manifold.hpp"
#include "rmap/parallel.hpp"
#include "rmap/rng.hpp"

namespace rmap {

enum class Verdict { Pass, Fail, Inconclusive, NotApplicable };

inline const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::Pass: return "pass";
        case Verdict::Fail: return "fail";
        case Verdict::Inconclusive: return "inconclusive";
        case Verdict::NotApplicable: return "not-applicable";
    }
    return "?";
}

// (1,1)-tensor field J given by component expressions J^i_j(x).
class ComplexStructureField {
public:
    ComplexStructureField() = default;

    explicit ComplexStructureField(std::vector<std::vector<Expression>> components)
        : components_(std::move(components)) {
        dim_ = static_cast<int>(components_.size());
        constant_ = true;
        for (const auto& row : components_)
            for (const auto& e : row)
                if (!e.is_constant()) constant_ = false;
    }

    // Canonical block structure pairing (x1,x2), (x3,x4), ...:
    // J e_{2k-1} = e_{2k}, J e_{2k} = -e_{2k-1}.
    static ComplexStructureField canonical(int dim) {
        std::vector<std::vector<Expression>> c(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j) {
                double v = 0.0;
                if (i % 2 == 1 && j == i - 1) v = 1.0;
                if (i % 2 == 0 && j == i + 1) v = -1.0;
                c[static_cast<std::size_t>(i)].push_back(Expression::constant(v, dim));
            }
        return ComplexStructureField(std::move(c));
    }

    int dim() const { return dim_; }
    bool is_constant() const { return constant_; }
    const std::vector<std::vector<Expression>>& components() const { return components_; }

    Mat matrix_at(const Vec& p) const {
        Mat J(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                J(i, j) = components_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(p);
        return J;
    }

    // Expression-backed field q -> J(q) * Y(q) for an expression-backed Y;
    // keeps covariant derivatives of J-composed fields on the exact-jet path.
    VectorField compose(const VectorField& Y) const {
        if (!Y.components.empty()) {
            std::vector<Expression> comps;
            comps.reserve(static_cast<std::size_t>(dim_));
            for (int i = 0; i < dim_; ++i) {
                Expression acc = Expression::mul(components_[static_cast<std::size_t>(i)][0], Y.components[0]);
                for (int j = 1; j < dim_; ++j)
                    acc = Expression::add(
                        acc, Expression::mul(components_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                                             Y.components[static_cast<std::size_t>(j)]));
                comps.push_back(acc);
            }
            return VectorField::from_expressions(std::move(comps));
        }
        auto self = *this;
        return VectorField::from_sampler(
            [self, Y](const Vec& q) -> Vec { return self.matrix_at(q) * Y.sampler(q); });
    }

private:
    std::vector<std::vector<Expression>> components_;
    int dim_ = 0;
    bool constant_ = false;
};

inline Vec j_apply(const ComplexStructureField& J, const Vec& p, const Vec& v) {
    return J.matrix_at(p) * v;
}

struct SamplePlan {
    int points = 64;
    int vector_pairs = 8;
    std::uint64_t seed = 1;
    double tol_structure = 1e-8;
    double margin_fraction = 0.2;
};

struct StructureReport {
    Verdict is_almost_complex = Verdict::NotApplicable;
    Verdict is_hermitian = Verdict::NotApplicable;
    Verdict is_kahler = Verdict::NotApplicable;
    Verdict is_nearly_kahler = Verdict::NotApplicable;
    double residual_almost_complex = 0.0;
    double residual_hermitian = 0.0;
    double residual_kahler = 0.0;
    double residual_nearly_kahler = 0.0;
    Vec max_residual_point; // argmax of the nearly-Kahler residual
    int samples_used = 0;
};

// |g(JX, JY) - g(X, Y)| evaluated so that swapping X and Y gives the same
// bits back.
inline double hermitian_residual(const ManifoldSpec& m, const ComplexStructureField& J, const Vec& p,
                                 const Vec& X, const Vec& Y) {
    Mat G = m.metric_at(p);
    Mat Jp = J.matrix_at(p);
    return std::abs(inner_sym(Jp * X, Jp * Y, G) - inner_sym(X, Y, G));
}

namespace detail {

inline bool plan_has_interior(const ManifoldSpec& m, const SamplePlan& plan) {
    const auto& box = m.domain();
    for (Eigen::Index i = 0; i < box.lo.size(); ++i) {
        double width = box.hi[i] - box.lo[i];
        double scale = 1.0 + std::max(std::abs(box.lo[i]), std::abs(box.hi[i]));
        if (width <= 1e-12 * scale) return false; // no representable interior
        double pad = width * plan.margin_fraction;
        if (box.lo[i] + pad >= box.hi[i] - pad) return false;
    }
    return true;
}

} // namespace detail

// Almost-complex and Hermitian checks over seeded samples.
inline StructureReport check_hermitian(const ManifoldSpec& m, const ComplexStructureField& J,
                                       const SamplePlan& plan) {
    if (m.dim() % 2 != 0) throw OddDimension("Hermitian check requires even dimension");
    StructureReport rep;
    if (!detail::plan_has_interior(m, plan)) {
        rep.is_almost_complex = rep.is_hermitian = Verdict::Inconclusive;
        return rep;
    }
    SampleRng rng(plan.seed);
    const int n = m.dim();
    struct Sample {
        Vec p;
        std::vector<std::pair<Vec, Vec>> pairs;
    };
    std::vector<Sample> samples(static_cast<std::size_t>(plan.points));
    for (auto& s : samples) {
        s.p = rng.interior_point(m.domain().lo, m.domain().hi, plan.margin_fraction);
        for (int k = 0; k < plan.vector_pairs; ++k)
            s.pairs.emplace_back(rng.unit_vector(n), rng.unit_vector(n));
    }
    std::vector<double> ac(samples.size(), 0.0), herm(samples.size(), 0.0);
    parallel_for(static_cast<int>(samples.size()), [&](int i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        Mat Jp = J.matrix_at(s.p);
        ac[static_cast<std::size_t>(i)] = (Jp * Jp + Mat::Identity(n, n)).lpNorm<Eigen::Infinity>();
        double worst = 0.0;
        for (const auto& [X, Y] : s.pairs)
            worst = std::max(worst, hermitian_residual(m, J, s.p, X, Y));
        herm[static_cast<std::size_t>(i)] = worst;
    });
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rep.residual_almost_complex = std::max(rep.residual_almost_complex, ac[i]);
        rep.residual_hermitian = std::max(rep.residual_hermitian, herm[i]);
    }
    rep.samples_used = plan.points * plan.vector_pairs;
    rep.is_almost_complex = rep.residual_almost_complex <= plan.tol_structure ? Verdict::Pass : Verdict::Fail;
    rep.is_hermitian = (rep.is_almost_complex == Verdict::Pass && rep.residual_hermitian <= plan.tol_structure)
                           ? Verdict::Pass
                           : Verdict::Fail;
    return rep;
}

// (nabla_X J) Y at p: nabla_X (J Y) - J(p) nabla_X Y, with both covariant
// derivatives sharing the same field for Y.
inline Vec nabla_J(const ManifoldSpec& m, const ComplexStructureField& J, const TangentVector& X,
                   const VectorField& Yf, const Vec& p) {
    VectorField JY = J.compose(Yf);
    Vec lhs = covariant_derivative(m, X, JY, p);
    Vec rhs = J.matrix_at(p) * covariant_derivative(m, X, Yf, p);
    return lhs - rhs;
}

// Kahler / nearly-Kahler residuals. Sample vectors act as constant-coefficient
// fields; (nabla_X J)Y is tensorial in Y, so any extension agreeing at p works.
inline StructureReport check_nearly_kahler(const ManifoldSpec& m, const ComplexStructureField& J,
                                           const SamplePlan& plan) {
    StructureReport rep = check_hermitian(m, J, plan);
    if (rep.is_hermitian != Verdict::Pass) {
        rep.is_kahler = rep.is_nearly_kahler =
            rep.is_hermitian == Verdict::Inconclusive ? Verdict::Inconclusive : Verdict::Fail;
        return rep;
    }
    const int n = m.dim();
    SampleRng rng(plan.seed + 0x9e3779b97f4a7c15ull);
    struct Sample {
        Vec p, X, Y;
    };
    std::vector<Sample> samples;
    for (int i = 0; i < plan.points; ++i) {
        Vec p = rng.interior_point(m.domain().lo, m.domain().hi, plan.margin_fraction);
        for (int k = 0; k < plan.vector_pairs; ++k)
            samples.push_back({p, rng.unit_vector(n), rng.unit_vector(n)});
    }
    std::vector<double> res_k(samples.size()), res_nk(samples.size());
    parallel_for(static_cast<int>(samples.size()), [&](int i) {
        const auto& s = samples[static_cast<std::size_t>(i)];
        auto Xf = VectorField::from_expressions([&] {
            std::vector<Expression> c;
            for (int q = 0; q < n; ++q) c.push_back(Expression::constant(s.X[q], n));
            return c;
        }());
        auto Yf = VectorField::from_expressions([&] {
            std::vector<Expression> c;
            for (int q = 0; q < n; ++q) c.push_back(Expression::constant(s.Y[q], n));
            return c;
        }());
        Vec nxjy = nabla_J(m, J, {s.p, s.X}, Yf, s.p);
        Vec nyjx = nabla_J(m, J, {s.p, s.Y}, Xf, s.p);
        res_k[static_cast<std::size_t>(i)] = nxjy.norm();
        res_nk[static_cast<std::size_t>(i)] = (nxjy + nyjx).norm();
    });
    std::size_t arg_nk = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        rep.residual_kahler = std::max(rep.residual_kahler, res_k[i]);
        if (res_nk[i] > rep.residual_nearly_kahler) {
            rep.residual_nearly_kahler = res_nk[i];
            arg_nk = i;
        }
    }
    if (!samples.empty()) rep.max_residual_point = samples[arg_nk].p;
    rep.samples_used += static_cast<int>(samples.size());

    // Constant J on a constant metric differentiates to zero identically; the
    // numeric residual only confirms it.
    rep.is_kahler = rep.residual_kahler <= plan.tol_structure ? Verdict::Pass : Verdict::Fail;
    rep.is_nearly_kahler = (rep.is_kahler == Verdict::Pass || rep.residual_nearly_kahler <= plan.tol_structure)
                               ? Verdict::Pass
                               : Verdict::Fail;
    return rep;
}

} // namespace rmap
