#pragma once

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "rmap/errors.hpp"

namespace rmap {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Default relative threshold below which singular values count as zero.
inline constexpr double kRankTol = 1e-8;

inline double inner(const Vec& a, const Vec& b, const Mat& G) { return a.dot(G * b); }
inline double norm_g(const Vec& a, const Mat& G) { return std::sqrt(std::max(0.0, inner(a, a, G))); }

// Symmetric inner product whose result is bit-identical under argument swap.
inline double inner_sym(const Vec& a, const Vec& b, const Mat& G) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
        if (a[i] < b[i]) return inner(a, b, G);
        if (a[i] > b[i]) return inner(b, a, G);
    }
    return inner(a, b, G);
}

// Cholesky transport between g-coordinates and Euclidean z-coordinates:
// z = L^T x turns the g inner product into the dot product.
class MetricFactor {
public:
    explicit MetricFactor(const Mat& G) : G_(G), llt_(G) {
        if (llt_.info() != Eigen::Success)
            throw DegenerateMetric("metric is not positive definite (Cholesky failed)");
    }

    const Mat& G() const { return G_; }
    Mat to_z(const Mat& x) const { return llt_.matrixU() * x; }
    Mat from_z(const Mat& z) const { return llt_.matrixU().solve(z); }

private:
    Mat G_;
    Eigen::LLT<Mat> llt_;
};

// Flip column signs so the largest-magnitude entry (lowest index on ties) is
// positive; keeps emitted bases reproducible.
inline void fix_column_signs(Mat& B) {
    for (Eigen::Index c = 0; c < B.cols(); ++c) {
        Eigen::Index arg = 0;
        double best = 0.0;
        for (Eigen::Index r = 0; r < B.rows(); ++r) {
            if (std::abs(B(r, c)) > best + 1e-14) {
                best = std::abs(B(r, c));
                arg = r;
            }
        }
        if (B(arg, c) < 0.0) B.col(c) = -B.col(c);
    }
}

namespace detail {

inline Eigen::Index dominant_row(const Mat& B, Eigen::Index c) {
    Eigen::Index arg = 0;
    double best = 0.0;
    for (Eigen::Index r = 0; r < B.rows(); ++r) {
        if (std::abs(B(r, c)) > best + 1e-14) {
            best = std::abs(B(r, c));
            arg = r;
        }
    }
    return arg;
}

// Stable reorder of columns whose singular values tie (within tie_tol),
// by ambient index of each column's dominant component.
inline void order_tied_columns(Mat& B, Vec& sigma, double tie_tol) {
    const Eigen::Index k = B.cols();
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (std::abs(sigma[a] - sigma[b]) > tie_tol) return sigma[a] > sigma[b];
        return dominant_row(B, a) < dominant_row(B, b);
    });
    Mat Bs(B.rows(), k);
    Vec ss(k);
    for (Eigen::Index i = 0; i < k; ++i) {
        Bs.col(i) = B.col(idx[static_cast<std::size_t>(i)]);
        ss[i] = sigma[idx[static_cast<std::size_t>(i)]];
    }
    B = Bs;
    sigma = ss;
}

} // namespace detail

// g-orthonormal basis of the column span of `vectors`, rank-filtered.
inline Mat orthonormal_span(const Mat& vectors, const MetricFactor& metric, double rank_tol = kRankTol) {
    if (vectors.cols() == 0) return Mat(vectors.rows(), 0);
    Mat Z = metric.to_z(vectors);
    Eigen::JacobiSVD<Mat> svd(Z, Eigen::ComputeThinU);
    const Vec& s = svd.singularValues();
    double smax = s.size() ? s[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rank_tol * smax) ++rank;
    Mat U = svd.matrixU().leftCols(rank);
    Vec sig = s.head(rank);
    Mat B = metric.from_z(U);
    detail::order_tied_columns(B, sig, 1e-12 * (smax > 0 ? smax : 1.0));
    fix_column_signs(B);
    return B;
}

struct KernelSplit {
    Mat kernel;     // m x (m - rank), g1-orthonormal
    Mat complement; // m x rank, g1-orthonormal (the horizontal space)
    int rank = 0;
};

// Kernel of a linear map A (n x m) and its g-orthogonal complement in the
// source, from one SVD in z-coordinates.
inline KernelSplit kernel_split(const Mat& A, const MetricFactor& source_metric,
                                double rank_tol = kRankTol) {
    const Eigen::Index m = A.cols();
    Mat Az = source_metric.from_z(Mat::Identity(m, m)); // columns: x = L^{-T} e_i
    Mat Atilde = A * Az;                                // map acting on z-coordinates
    Eigen::JacobiSVD<Mat> svd(Atilde, Eigen::ComputeFullV);
    const Vec& s = svd.singularValues();
    double smax = s.size() ? s[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rank_tol * smax) ++rank;

    KernelSplit out;
    out.rank = static_cast<int>(rank);
    Mat Vfull = svd.matrixV();
    Mat comp_z = Vfull.leftCols(rank);
    Mat ker_z = Vfull.rightCols(m - rank);

    out.complement = source_metric.from_z(comp_z);
    out.kernel = source_metric.from_z(ker_z);

    Vec sig_comp = s.head(rank);
    detail::order_tied_columns(out.complement, sig_comp, 1e-12 * (smax > 0 ? smax : 1.0));
    Vec sig_ker = Vec::Zero(m - rank);
    detail::order_tied_columns(out.kernel, sig_ker, 1.0); // all tied: pure index order
    fix_column_signs(out.complement);
    fix_column_signs(out.kernel);
    return out;
}

struct RangeSplit {
    Mat range; // n x rank, g2-orthonormal
    Mat perp;  // n x (n - rank), g2-orthonormal
    int rank = 0;
};

// Column span of A (n x m) inside the target tangent space and its
// g2-orthogonal complement.
inline RangeSplit range_split(const Mat& A, const MetricFactor& target_metric,
                              double rank_tol = kRankTol) {
    const Eigen::Index n = A.rows();
    Mat Ahat = target_metric.to_z(A);
    Eigen::JacobiSVD<Mat> svd(Ahat, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    double smax = s.size() ? s[0] : 0.0;
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > rank_tol * smax) ++rank;

    RangeSplit out;
    out.rank = static_cast<int>(rank);
    Mat Ufull = svd.matrixU();
    out.range = target_metric.from_z(Ufull.leftCols(rank));
    out.perp = target_metric.from_z(Ufull.rightCols(n - rank));
    Vec sig_r = s.head(rank);
    detail::order_tied_columns(out.range, sig_r, 1e-12 * (smax > 0 ? smax : 1.0));
    Vec sig_p = Vec::Zero(n - rank);
    detail::order_tied_columns(out.perp, sig_p, 1.0);
    fix_column_signs(out.range);
    fix_column_signs(out.perp);
    return out;
}

struct IntersectionSplit {
    Mat intersection; // directions common to both spans (inside span B1)
    Mat complement;   // g-orthogonal complement of the intersection inside span B1
    Vec cosines;      // principal cosines, descending
};

// Intersection of two subspaces via principal angles: singular values of
// B1^T G B2 with both bases g-orthonormal are the cosines; a cosine at 1
// (within rank_tol) marks a common direction. Cosines landing in the dead
// band [1 - 10*tol, 1 - tol] make the split ill-posed and raise.
inline IntersectionSplit intersect_subspaces(const Mat& B1, const Mat& B2, const Mat& G,
                                             double rank_tol = kRankTol) {
    IntersectionSplit out;
    if (B1.cols() == 0 || B2.cols() == 0) {
        out.intersection = Mat(B1.rows(), 0);
        out.complement = B1;
        out.cosines = Vec(0);
        return out;
    }
    Mat M = B1.transpose() * G * B2;
    Eigen::JacobiSVD<Mat> svd(M, Eigen::ComputeFullU);
    const Vec& s = svd.singularValues();
    Eigen::Index dim = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s[i] >= 1.0 - rank_tol) {
            ++dim;
        } else if (s[i] >= 1.0 - 10.0 * rank_tol) {
            throw RankTolAmbiguous("principal cosine " + std::to_string(s[i]) +
                                   " falls in the rank tolerance dead band");
        }
    }
    Mat Ufull = svd.matrixU();
    Mat inter = B1 * Ufull.leftCols(dim);
    // Columns of B1*U stay g-orthonormal because U is orthogonal in the
    // coefficient space of a g-orthonormal basis.
    Mat comp(B1.rows(), B1.cols() - dim);
    if (Ufull.cols() > dim)
        comp = B1 * Ufull.rightCols(B1.cols() - dim);
    out.cosines = s;
    Vec sig_i = s.head(dim);
    detail::order_tied_columns(inter, sig_i, 1e-12);
    Vec sig_c = Vec::Zero(comp.cols());
    detail::order_tied_columns(comp, sig_c, 1.0);
    fix_column_signs(inter);
    fix_column_signs(comp);
    out.intersection = inter;
    out.complement = comp;
    return out;
}

// g-orthogonal projector onto the span of a g-orthonormal basis.
inline Mat projector(const Mat& B, const Mat& G) {
    if (B.cols() == 0) return Mat::Zero(B.rows(), B.rows());
    return B * (B.transpose() * G);
}

// Basis of span(big) with span(small) removed, g-orthonormal.
inline Mat complement_within(const Mat& small_basis, const Mat& big_basis,
                             const MetricFactor& metric, double rank_tol = kRankTol) {
    if (big_basis.cols() == 0) return Mat(big_basis.rows(), 0);
    Mat P = projector(small_basis, metric.G());
    Mat residual = big_basis - P * big_basis;
    return orthonormal_span(residual, metric, std::sqrt(rank_tol));
}

inline double smallest_eigenvalue_sym(const Mat& S) {
    Eigen::SelfAdjointEigenSolver<Mat> es(S);
    if (es.info() != Eigen::Success) throw Error("eigenvalue computation failed");
    return es.eigenvalues().minCoeff();
}

} // namespace rmap
