#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include <Eigen/Dense>

namespace rmap {

// Seeded sampler with hand-rolled distributions. std::uniform_real_distribution
// is implementation-defined, which would break byte-identical reports across
// toolchains, so the mapping from raw bits to doubles lives here.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : engine_(seed) {}

    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one value per call keeps the stream position predictable.
    double gaussian() {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    Eigen::VectorXd unit_vector(int dim) {
        Eigen::VectorXd v(dim);
        do {
            for (int i = 0; i < dim; ++i) v[i] = gaussian();
        } while (v.norm() < 1e-12);
        return v / v.norm();
    }

    // Point drawn from the box shrunk toward its center, keeping finite
    // difference stencils and short geodesics interior.
    Eigen::VectorXd interior_point(const Eigen::VectorXd& lo, const Eigen::VectorXd& hi,
                                   double margin_fraction = 0.2) {
        const int n = static_cast<int>(lo.size());
        Eigen::VectorXd p(n);
        for (int i = 0; i < n; ++i) {
            double pad = (hi[i] - lo[i]) * margin_fraction;
            p[i] = uniform(lo[i] + pad, hi[i] - pad);
        }
        return p;
    }

private:
    std::mt19937_64 engine_;
};

} // namespace rmap
