#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "rmap/expr.hpp"
#include "rmap/linalg.hpp"

namespace rmap {

// Central-difference step used for sampler-backed fields; frames coming out
// of an SVD have no expression form, so their derivatives must be numeric.
inline double fd_step(const Vec& p) { return 1e-5 * (1.0 + p.lpNorm<Eigen::Infinity>()); }

struct DomainBox {
    Vec lo, hi;

    bool contains(const Vec& p, double margin = 0.0) const {
        for (Eigen::Index i = 0; i < lo.size(); ++i)
            if (p[i] < lo[i] + margin || p[i] > hi[i] - margin) return false;
        return true;
    }
};

// Chart description of a Riemannian manifold: coordinate dimension, metric
// component expressions (symmetric), and the box the chart is valid on.
class ManifoldSpec {
public:
    ManifoldSpec() = default;

    ManifoldSpec(int dim, std::vector<std::vector<Expression>> metric, DomainBox domain)
        : dim_(dim), metric_(std::move(metric)), domain_(std::move(domain)) {
        flat_constant_ = true;
        for (const auto& row : metric_)
            for (const auto& e : row)
                if (!e.is_constant()) flat_constant_ = false;
        if (flat_constant_) {
            // Constant metrics get validated once; geodesic loops then skip
            // the per-point eigenvalue check.
            try {
                cached_constant_ = evaluate_metric(domain_.lo, kRankTol);
            } catch (const Error&) {
                cached_constant_.reset(); // fall through to the throwing path per call
            }
        }
    }

    static ManifoldSpec euclidean(int dim, double half_width = 3.0) {
        std::vector<std::vector<Expression>> g(static_cast<std::size_t>(dim));
        for (int i = 0; i < dim; ++i)
            for (int j = 0; j < dim; ++j)
                g[static_cast<std::size_t>(i)].push_back(Expression::constant(i == j ? 1.0 : 0.0, dim));
        DomainBox box{Vec::Constant(dim, -half_width), Vec::Constant(dim, half_width)};
        return ManifoldSpec(dim, std::move(g), std::move(box));
    }

    int dim() const { return dim_; }
    const DomainBox& domain() const { return domain_; }
    const std::vector<std::vector<Expression>>& metric_exprs() const { return metric_; }
    bool metric_is_constant() const { return flat_constant_; }

    // Metric matrix at p; symmetrized exactly after an asymmetry sanity check.
    Mat metric_at(const Vec& p, double rank_tol = kRankTol) const {
        if (cached_constant_) return *cached_constant_;
        return evaluate_metric(p, rank_tol);
    }

    MetricFactor metric_factor_at(const Vec& p, double rank_tol = kRankTol) const {
        return MetricFactor(metric_at(p, rank_tol));
    }

    // Gamma^k_{ij} = (1/2) g^{kl} (d_i g_jl + d_j g_il - d_l g_ij), from exact
    // jets of the metric entries. gamma[k](i,j), symmetric in (i,j) exactly.
    std::vector<Mat> christoffel(const Vec& p, double rank_tol = kRankTol) const {
        const int n = dim_;
        std::vector<Mat> gamma(static_cast<std::size_t>(n), Mat::Zero(n, n));
        if (flat_constant_) {
            metric_at(p, rank_tol); // still validate SPD at p
            return gamma;
        }
        // dg[l](i,j) = d_l g_ij
        std::vector<Mat> dg(static_cast<std::size_t>(n), Mat::Zero(n, n));
        Mat G(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                double value;
                Vec grad;
                metric_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval_with_gradient(p, value, grad);
                G(i, j) = G(j, i) = value;
                for (int l = 0; l < n; ++l) {
                    dg[static_cast<std::size_t>(l)](i, j) = grad[l];
                    dg[static_cast<std::size_t>(l)](j, i) = grad[l];
                }
            }
        }
        double lambda_min = smallest_eigenvalue_sym(G);
        if (lambda_min <= rank_tol)
            throw DegenerateMetric("metric not positive definite: smallest eigenvalue " +
                                   std::to_string(lambda_min));
        Mat Ginv = G.inverse();
        for (int i = 0; i < n; ++i) {
            for (int j = i; j < n; ++j) {
                for (int k = 0; k < n; ++k) {
                    double sum = 0.0;
                    for (int l = 0; l < n; ++l)
                        sum += Ginv(k, l) * (dg[static_cast<std::size_t>(i)](j, l) +
                                             dg[static_cast<std::size_t>(j)](i, l) -
                                             dg[static_cast<std::size_t>(l)](i, j));
                    gamma[static_cast<std::size_t>(k)](i, j) = 0.5 * sum;
                    gamma[static_cast<std::size_t>(k)](j, i) = gamma[static_cast<std::size_t>(k)](i, j);
                }
            }
        }
        return gamma;
    }

private:
    Mat evaluate_metric(const Vec& p, double rank_tol) const {
        Mat G(dim_, dim_);
        for (int i = 0; i < dim_; ++i)
            for (int j = 0; j < dim_; ++j)
                G(i, j) = metric_[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)].eval(p);
        double asym = (G - G.transpose()).lpNorm<Eigen::Infinity>();
        if (asym > 1e-10 * (1.0 + G.lpNorm<Eigen::Infinity>()))
            throw DegenerateMetric("metric expressions are not symmetric at sampled point");
        G = ((G + G.transpose()) * 0.5).eval();
        double lambda_min = smallest_eigenvalue_sym(G);
        if (lambda_min <= rank_tol)
            throw DegenerateMetric("metric not positive definite: smallest eigenvalue " +
                                   std::to_string(lambda_min));
        return G;
    }

    int dim_ = 0;
    std::vector<std::vector<Expression>> metric_;
    DomainBox domain_;
    bool flat_constant_ = false;
    std::optional<Mat> cached_constant_;
};

struct TangentVector {
    Vec base;
    Vec components;
};

// Vector field given by a pure sampler; expression-backed fields also carry
// their component expressions so derivatives can use exact jets.
struct VectorField {
    std::function<Vec(const Vec&)> sampler;
    std::vector<Expression> components; // empty for frame-derived fields

    static VectorField from_expressions(std::vector<Expression> exprs) {
        VectorField f;
        f.components = std::move(exprs);
        f.sampler = [comps = f.components](const Vec& q) {
            Vec out(static_cast<Eigen::Index>(comps.size()));
            for (std::size_t i = 0; i < comps.size(); ++i)
                out[static_cast<Eigen::Index>(i)] = comps[i].eval(q);
            return out;
        };
        return f;
    }

    static VectorField constant(const Vec& value) {
        VectorField f;
        f.sampler = [value](const Vec&) { return value; };
        return f;
    }

    static VectorField from_sampler(std::function<Vec(const Vec&)> s) {
        VectorField f;
        f.sampler = std::move(s);
        return f;
    }
};

// (nabla_dir field)^k = D_dir field^k + Gamma^k_{ij} dir^i field^j. The
// directional derivative is exact for expression-backed fields and a central
// difference along dir otherwise.
inline Vec covariant_derivative(const ManifoldSpec& m, const TangentVector& dir,
                                const VectorField& field, const Vec& p) {
    const int n = m.dim();
    Vec directional(n);
    if (!field.components.empty()) {
        for (int k = 0; k < n; ++k)
            directional[k] = field.components[static_cast<std::size_t>(k)].gradient(p).dot(dir.components);
    } else {
        double h = fd_step(p);
        Vec plus = field.sampler(p + h * dir.components);
        Vec minus = field.sampler(p - h * dir.components);
        directional = (plus - minus) / (2.0 * h);
    }
    Vec value = field.sampler(p);
    std::vector<Mat> gamma = m.christoffel(p);
    Vec out = directional;
    for (int k = 0; k < n; ++k) out[k] += dir.components.dot(gamma[static_cast<std::size_t>(k)] * value);
    return out;
}

// grad f = g^{-1} df.
inline Vec gradient(const ManifoldSpec& m, const Expression& f, const Vec& p) {
    Mat G = m.metric_at(p);
    Vec df = f.gradient(p);
    return G.ldlt().solve(df.head(m.dim()));
}

struct Trajectory {
    std::vector<double> times;
    std::vector<Vec> points;
    std::vector<Vec> velocities;
    bool truncated = false;  // stopped at the chart boundary
    double energy_drift = 0.0;

    std::size_t size() const { return times.size(); }
};

// Fixed-step RK4 is the default: reproducible step grids, no error-control
// state. The embedded RKF45 pair sits behind this flag for callers who want
// adaptive steps; it is still deterministic for identical inputs.
enum class IntegratorMethod { Rk4Fixed, Rk45Adaptive };

struct IntegratorOptions {
    IntegratorMethod method = IntegratorMethod::Rk4Fixed;
    double adaptive_rel_tol = 1e-10;
};

namespace detail {

Trajectory geodesic_rk45(const ManifoldSpec& m, const TangentVector& start, double t_end, double step,
                         double rel_tol);

} // namespace detail

// Geodesic system x' = v, v'^k = -Gamma^k_{ij} v^i v^j. Stops (with flag)
// rather than stepping outside the chart.
inline Trajectory geodesic_integrate(const ManifoldSpec& m, const TangentVector& start,
                                     double t_end, double step,
                                     const IntegratorOptions& options = {}) {
    if (step <= 0.0) throw StepError("integrator step must be positive");
    if (!m.domain().contains(start.base)) throw StepError("geodesic start outside chart domain");
    if (options.method == IntegratorMethod::Rk45Adaptive)
        return detail::geodesic_rk45(m, start, t_end, step, options.adaptive_rel_tol);

    const int n = m.dim();
    auto accel = [&](const Vec& x, const Vec& v) {
        std::vector<Mat> gamma = m.christoffel(x);
        Vec a(n);
        for (int k = 0; k < n; ++k) a[k] = -v.dot(gamma[static_cast<std::size_t>(k)] * v);
        return a;
    };

    Trajectory traj;
    Vec x = start.base;
    Vec v = start.components;
    double e0 = v.dot(m.metric_at(x) * v);
    double t = 0.0;
    traj.times.push_back(t);
    traj.points.push_back(x);
    traj.velocities.push_back(v);

    const long long n_steps = static_cast<long long>(std::ceil(t_end / step - 1e-12));
    for (long long s = 0; s < n_steps; ++s) {
        double h = std::min(step, t_end - t);
        Vec k1x, k1v, k2x, k2v, k3x, k3v, k4x, k4v;
        try {
            k1x = v;
            k1v = accel(x, v);
            k2x = v + 0.5 * h * k1v;
            k2v = accel(x + 0.5 * h * k1x, v + 0.5 * h * k1v);
            k3x = v + 0.5 * h * k2v;
            k3v = accel(x + 0.5 * h * k2x, v + 0.5 * h * k2v);
            k4x = v + h * k3v;
            k4v = accel(x + h * k3x, v + h * k3v);
        } catch (const EvalError&) {
            traj.truncated = true;
            break;
        } catch (const DegenerateMetric&) {
            traj.truncated = true;
            break;
        }
        Vec xn = x + (h / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
        Vec vn = v + (h / 6.0) * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if (!xn.allFinite() || !vn.allFinite()) throw StepError("non-finite state during geodesic integration");
        if (!m.domain().contains(xn)) {
            traj.truncated = true;
            break;
        }
        x = xn;
        v = vn;
        t += h;
        traj.times.push_back(t);
        traj.points.push_back(x);
        traj.velocities.push_back(v);
        double e = v.dot(m.metric_at(x) * v);
        traj.energy_drift = std::max(traj.energy_drift, std::abs(e - e0));
    }
    return traj;
}

namespace detail {

// Embedded Fehlberg 4(5) pair with standard step control on the stacked
// (x, v) state. `step` seeds the first attempt.
inline Trajectory geodesic_rk45(const ManifoldSpec& m, const TangentVector& start, double t_end,
                                double step, double rel_tol) {
    const int n = m.dim();
    auto rhs = [&](const Vec& y) {
        Vec x = y.head(n), v = y.tail(n);
        std::vector<Mat> gamma = m.christoffel(x);
        Vec out(2 * n);
        out.head(n) = v;
        for (int k = 0; k < n; ++k) out[n + k] = -v.dot(gamma[static_cast<std::size_t>(k)] * v);
        return out;
    };

    Trajectory traj;
    Vec y(2 * n);
    y.head(n) = start.base;
    y.tail(n) = start.components;
    double e0 = start.components.dot(m.metric_at(start.base) * start.components);
    double t = 0.0, h = step;
    traj.times.push_back(0.0);
    traj.points.push_back(start.base);
    traj.velocities.push_back(start.components);

    while (t < t_end - 1e-15) {
        h = std::min(h, t_end - t);
        Vec k1, k2, k3, k4, k5, k6;
        try {
            k1 = rhs(y);
            k2 = rhs(y + h * (0.25 * k1));
            k3 = rhs(y + h * ((3.0 / 32) * k1 + (9.0 / 32) * k2));
            k4 = rhs(y + h * ((1932.0 / 2197) * k1 - (7200.0 / 2197) * k2 + (7296.0 / 2197) * k3));
            k5 = rhs(y + h * ((439.0 / 216) * k1 - 8.0 * k2 + (3680.0 / 513) * k3 - (845.0 / 4104) * k4));
            k6 = rhs(y + h * (-(8.0 / 27) * k1 + 2.0 * k2 - (3544.0 / 2565) * k3 + (1859.0 / 4104) * k4 -
                              (11.0 / 40) * k5));
        } catch (const EvalError&) {
            traj.truncated = true;
            break;
        } catch (const DegenerateMetric&) {
            traj.truncated = true;
            break;
        }
        Vec y5 = y + h * ((16.0 / 135) * k1 + (6656.0 / 12825) * k3 + (28561.0 / 56430) * k4 -
                          (9.0 / 50) * k5 + (2.0 / 55) * k6);
        Vec y4 = y + h * ((25.0 / 216) * k1 + (1408.0 / 2565) * k3 + (2197.0 / 4104) * k4 - 0.2 * k5);
        double err = (y5 - y4).norm();
        double tol = rel_tol * (1.0 + y.norm());
        if (err > tol && h > 1e-12) {
            h *= std::max(0.1, 0.84 * std::pow(tol / std::max(err, 1e-300), 0.25));
            continue;
        }
        if (!y5.allFinite()) throw StepError("non-finite state during geodesic integration");
        if (!m.domain().contains(y5.head(n))) {
            traj.truncated = true;
            break;
        }
        t += h;
        y = y5;
        traj.times.push_back(t);
        traj.points.push_back(y.head(n));
        traj.velocities.push_back(y.tail(n));
        double e = y.tail(n).dot(m.metric_at(y.head(n)) * y.tail(n));
        traj.energy_drift = std::max(traj.energy_drift, std::abs(e - e0));
        if (err > 1e-300) h *= std::min(4.0, 0.84 * std::pow(tol / err, 0.25));
    }
    return traj;
}

} // namespace detail

} // namespace rmap
