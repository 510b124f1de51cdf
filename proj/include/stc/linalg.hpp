/*
 Copyright 2026 The stc Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/
#ifndef STC_LINALG_HPP
#define STC_LINALG_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <limits>
#include <string>
#include <vector>

#include "stc/errors.hpp"

namespace stc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Eigenvalues of a square matrix together with its Hurwitz flag.
struct SpectralInfo {
    std::vector<std::complex<double>> eigenvalues;
    bool isHurwitz = false;
};

/// Result of the continuous-time algebraic Riccati solve: u = gain * x.
struct CareSolution {
    Matrix gain;
    Matrix value;
    int iterations = 0;
};

inline void requireFinite(const Eigen::Ref<const Matrix>& m, const std::string& name)
{
    detail::require<InputError>(m.allFinite(), name + " has non-finite entries");
}

inline void requireSquare(const Eigen::Ref<const Matrix>& m, const std::string& name)
{
    detail::require<DimensionError>(
        m.rows() == m.cols(),
        name + " must be square, got " + std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
}

inline Matrix symmetrize(const Eigen::Ref<const Matrix>& m)
{
    return 0.5 * (m + m.transpose());
}

inline bool isSymmetric(const Eigen::Ref<const Matrix>& m, double relTol = 1e-10)
{
    if (m.rows() != m.cols()) {
        return false;
    }
    const double scale = 1.0 + m.cwiseAbs().maxCoeff();
    return (m - m.transpose()).cwiseAbs().maxCoeff() <= relTol * scale;
}

/// Largest singular value.
inline double spectralNorm(const Eigen::Ref<const Matrix>& m)
{
    if (m.size() == 0) {
        return 0.0;
    }
    return Eigen::JacobiSVD<Matrix>(m).singularValues()(0);
}

inline SpectralInfo spectral(const Eigen::Ref<const Matrix>& a)
{
    requireSquare(a, "spectral: A");
    SpectralInfo info;
    if (a.rows() == 0) {
        info.isHurwitz = true;
        return info;
    }
    const Eigen::EigenSolver<Matrix> es(a, false);
    detail::require<NumericalError>(es.info() == Eigen::Success, "spectral: eigenvalue iteration failed");
    info.eigenvalues.reserve(static_cast<std::size_t>(a.rows()));
    info.isHurwitz = true;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        info.eigenvalues.push_back(es.eigenvalues()(i));
        if (!(es.eigenvalues()(i).real() < 0.0)) {
            info.isHurwitz = false;
        }
    }
    return info;
}

inline double maxRealPart(const SpectralInfo& info)
{
    double r = -std::numeric_limits<double>::infinity();
    for (const auto& l : info.eigenvalues) {
        r = std::max(r, l.real());
    }
    return r;
}

inline double minEigenvalueSymmetric(const Eigen::Ref<const Matrix>& m)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(0);
}

inline double maxEigenvalueSymmetric(const Eigen::Ref<const Matrix>& m)
{
    const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
    return es.eigenvalues()(es.eigenvalues().size() - 1);
}

/// True iff the smallest eigenvalue of (M + M^T)/2 exceeds `margin`.
inline bool isPositiveDefinite(const Eigen::Ref<const Matrix>& m, double margin = 0.0)
{
    requireSquare(m, "isPositiveDefinite: M");
    if (m.rows() == 0) {
        return true;
    }
    return minEigenvalueSymmetric(m) > margin;
}

namespace detail {

// Scaling-and-squaring with a diagonal Pade approximant whose degree is picked
// from the 1-norm (Higham 2005 thresholds).
inline Matrix padeExp(const Matrix& a)
{
    const Eigen::Index n = a.rows();
    const Matrix id = Matrix::Identity(n, n);
    const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();

    static constexpr std::array<double, 4> b3{120.0, 60.0, 12.0, 1.0};
    static constexpr std::array<double, 6> b5{30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0};
    static constexpr std::array<double, 8> b7{17297280.0, 8648640.0, 1995840.0, 277200.0,
                                              25200.0,    1512.0,    56.0,      1.0};
    static constexpr std::array<double, 10> b9{17643225600.0, 8821612800.0, 2075673600.0, 302702400.0,
                                               30270240.0,    2162160.0,    110880.0,     3960.0,
                                               90.0,          1.0};
    static constexpr std::array<double, 14> b13{
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
        129060195264000.0,   10559470521600.0,    670442572800.0,     33522128640.0,
        1323241920.0,        40840800.0,          960960.0,           16380.0,
        182.0,               1.0};

    auto lowDegree = [&](const auto& b, const Matrix& x) {
        const Matrix x2 = x * x;
        Matrix power = id;
        Matrix u = Matrix::Zero(n, n);
        Matrix v = Matrix::Zero(n, n);
        for (std::size_t k = 0; k + 1 < b.size(); k += 2) {
            v += b[k] * power;
            u += b[k + 1] * power;
            power = power * x2;
        }
        u = x * u;
        return Eigen::PartialPivLU<Matrix>(v - u).solve(v + u).eval();
    };

    if (norm1 <= 1.495585217958292e-2) {
        return lowDegree(b3, a);
    }
    if (norm1 <= 2.539398330063230e-1) {
        return lowDegree(b5, a);
    }
    if (norm1 <= 9.504178996162932e-1) {
        return lowDegree(b7, a);
    }
    if (norm1 <= 2.097847961257068) {
        return lowDegree(b9, a);
    }

    constexpr double theta13 = 5.371920351148152;
    int squarings = 0;
    if (norm1 > theta13) {
        squarings = std::max(0, static_cast<int>(std::ceil(std::log2(norm1 / theta13))));
    }
    const Matrix x = a / std::ldexp(1.0, squarings);
    const Matrix x2 = x * x;
    const Matrix x4 = x2 * x2;
    const Matrix x6 = x4 * x2;
    const Matrix u = x * (x6 * (b13[13] * x6 + b13[11] * x4 + b13[9] * x2) + b13[7] * x6 + b13[5] * x4 +
                          b13[3] * x2 + b13[1] * id);
    const Matrix v =
        x6 * (b13[12] * x6 + b13[10] * x4 + b13[8] * x2) + b13[6] * x6 + b13[4] * x4 + b13[2] * x2 + b13[0] * id;
    Matrix r = Eigen::PartialPivLU<Matrix>(v - u).solve(v + u);
    for (int s = 0; s < squarings; ++s) {
        r = r * r;
    }
    return r;
}

}  // namespace detail

/// e^{A t}.
inline Matrix expm(const Eigen::Ref<const Matrix>& a, double t = 1.0)
{
    requireSquare(a, "expm: A");
    detail::require<InputError>(t >= 0.0 && std::isfinite(t), "expm: t must be finite and nonnegative");
    if (t == 0.0 || a.rows() == 0) {
        return Matrix::Identity(a.rows(), a.cols());
    }
    return detail::padeExp(a * t);
}

/**
 * Solves Acl^T P + P Acl + S = 0 for symmetric P.
 *
 * The Lyapunov operator is vectorized column-major into an n^2 x n^2 dense
 * system, which is adequate for n up to a few dozen.
 */
inline Matrix solveLyapunov(const Eigen::Ref<const Matrix>& acl, const Eigen::Ref<const Matrix>& s)
{
    requireSquare(acl, "solveLyapunov: Acl");
    requireSquare(s, "solveLyapunov: S");
    detail::require<DimensionError>(acl.rows() == s.rows(), "solveLyapunov: Acl and S sizes differ");
    requireFinite(acl, "solveLyapunov: Acl");
    requireFinite(s, "solveLyapunov: S");
    detail::require<InputError>(isSymmetric(s), "solveLyapunov: S must be symmetric");
    detail::require<NoUniqueSolutionError>(spectral(acl).isHurwitz,
                                           "solveLyapunov: Acl is not Hurwitz, no unique solution");

    const Eigen::Index n = acl.rows();
    const Eigen::Index nn = n * n;
    Matrix op = Matrix::Zero(nn, nn);
    for (Eigen::Index j = 0; j < n; ++j) {
        for (Eigen::Index i = 0; i < n; ++i) {
            const Eigen::Index row = i + n * j;
            for (Eigen::Index k = 0; k < n; ++k) {
                op(row, k + n * j) += acl(k, i);  // (Acl^T P)(i,j)
                op(row, i + n * k) += acl(k, j);  // (P Acl)(i,j)
            }
        }
    }
    const Vector rhs = -Eigen::Map<const Vector>(symmetrize(s).eval().data(), nn);
    const Vector vecP = Eigen::PartialPivLU<Matrix>(op).solve(rhs);
    const Matrix p = Eigen::Map<const Matrix>(vecP.data(), n, n);
    return symmetrize(p);
}

inline double careResidualNorm(const Matrix& a, const Matrix& b, const Matrix& q, const Matrix& r,
                               const Matrix& p)
{
    const Matrix brb = b * r.llt().solve(b.transpose());
    return spectralNorm(a.transpose() * p + p * a - p * brb * p + q);
}

/**
 * Stabilizing solution of A^T P + P A - P B R^{-1} B^T P + Q = 0 by
 * Newton-Kleinman iteration.
 *
 * The initial stabilizing gain is zero for Hurwitz A, otherwise the
 * eigenvalue-shift (Bass) gain -B^T Z^+ with
 * (A + beta I) Z + Z (A + beta I)^T = 2 B B^T.
 */
inline CareSolution solveCare(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b,
                              const Eigen::Ref<const Matrix>& q, const Eigen::Ref<const Matrix>& r,
                              double tolerance = 1e-10, int maxIterations = 100)
{
    requireSquare(a, "solveCare: A");
    requireSquare(q, "solveCare: Q");
    requireSquare(r, "solveCare: R");
    const Eigen::Index n = a.rows();
    const Eigen::Index m = b.cols();
    detail::require<DimensionError>(b.rows() == n && q.rows() == n && r.rows() == m,
                                    "solveCare: inconsistent dimensions");
    detail::require<InputError>(isSymmetric(q) && isPositiveDefinite(q), "solveCare: Q must be symmetric positive-definite");
    detail::require<InputError>(isSymmetric(r) && isPositiveDefinite(r), "solveCare: R must be symmetric positive-definite");

    const Eigen::LLT<Matrix> rChol(r);
    const Matrix id = Matrix::Identity(n, n);

    Matrix gain = Matrix::Zero(m, n);
    const SpectralInfo openLoop = spectral(a);
    if (!openLoop.isHurwitz) {
        // Shift so that every eigenvalue of A + beta I lies strictly in the right half-plane.
        double beta = 1.0;
        for (const auto& ev : openLoop.eigenvalues) {
            beta = std::max(beta, std::abs(ev.real()) + 1.0);
        }
        const Matrix shifted = -(a + beta * id).transpose();
        const Matrix z = solveLyapunov(shifted, 2.0 * b * b.transpose());
        gain = -b.transpose() * Eigen::CompleteOrthogonalDecomposition<Matrix>(z).pseudoInverse();
    }
    if (!spectral(a + b * gain).isHurwitz) {
        throw DesignError("solveCare: (A, B) is not stabilizable");
    }

    CareSolution sol;
    const double scaleA = spectralNorm(a);
    const double scaleQ = spectralNorm(q);
    const Matrix brb = b * rChol.solve(b.transpose());
    const double scaleBrb = spectralNorm(brb);
    bool converged = false;
    for (int it = 1; it <= maxIterations && !converged; ++it) {
        const Matrix acl = a + b * gain;
        Matrix p;
        try {
            p = solveLyapunov(acl, symmetrize(q + gain.transpose() * r * gain));
        } catch (const NoUniqueSolutionError&) {
            throw DesignError("solveCare: Newton-Kleinman iterate lost stability");
        }
        gain = -rChol.solve(b.transpose() * p);
        const double pn = spectralNorm(p);
        // The residual test alone scales with |P|^2 and accepts a far-off early iterate.
        const double step = it == 1 ? std::numeric_limits<double>::infinity() : spectralNorm(p - sol.value);
        const double residual = spectralNorm(a.transpose() * p + p * a - p * brb * p + q);
        converged = step <= 1e-12 * pn ||
                    (step <= 1e-6 * pn && residual <= tolerance * (scaleQ + 2.0 * scaleA * pn + scaleBrb * pn * pn));
        sol.value = p;
        sol.iterations = it;
    }
    if (!converged) {
        throw DesignError("solveCare: Newton-Kleinman iteration did not converge in " + std::to_string(maxIterations) +
                          " steps");
    }
    sol.gain = gain;
    if (!spectral(a + b * gain).isHurwitz) {
        throw DesignError("solveCare: iteration did not produce a Hurwitz closed loop");
    }
    return sol;
}

}  // namespace stc

#endif  // STC_LINALG_HPP
