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
#ifndef STC_TEST_ORACLES_HPP
#define STC_TEST_ORACLES_HPP

// Reference computations that share no code with the library kernels: matrix
// exponentials come from Eigen's MatrixFunctions module, Lyapunov solutions
// from an explicit Kronecker system, and integrals from composite Simpson
// quadrature. Scalar plants get closed forms.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace stc::oracle {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

inline Mat expm(const Mat& a, double t)
{
    const Mat at = a * t;
    return at.exp();
}

/// State at time s under the held input u, from the augmented exponential.
inline Vec heldState(const Mat& a, const Mat& b, const Vec& x, const Vec& u, double s)
{
    const Eigen::Index n = a.rows();
    Mat aug = Mat::Zero(n + 1, n + 1);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, 1) = b * u;
    Vec z(n + 1);
    z << x, 1.0;
    return (expm(aug, s) * z).head(n);
}

/// int_0^s e^{A tau} d tau, from the augmented exponential [[A, I], [0, 0]].
inline Mat integratedExp(const Mat& a, double s)
{
    const Eigen::Index n = a.rows();
    Mat aug = Mat::Zero(2 * n, 2 * n);
    aug.topLeftCorner(n, n) = a;
    aug.topRightCorner(n, n) = Mat::Identity(n, n);
    return expm(aug, s).topRightCorner(n, n);
}

template <class F>
Mat simpson(F&& f, double xi, int intervals)
{
    if (intervals % 2 == 1) {
        ++intervals;
    }
    const double h = xi / intervals;
    Mat sum = f(0.0) + f(xi);
    for (int i = 1; i < intervals; ++i) {
        sum += (i % 2 == 1 ? 4.0 : 2.0) * f(i * h);
    }
    return sum * (h / 3.0);
}

/// Running cost over [0, xi] along the exact held-input trajectory from x with u = F x.
inline double heldCost(const Mat& a, const Mat& b, const Mat& q, const Mat& r, const Mat& f, const Vec& x, double xi,
                       int intervals = 2000)
{
    const Vec u = f * x;
    const double ur = u.dot(r * u);
    auto integrand = [&](double s) {
        const Vec xs = heldState(a, b, x, u, s);
        Mat v(1, 1);
        v(0, 0) = xs.dot(q * xs) + ur;
        return v;
    };
    return simpson(integrand, xi, intervals)(0, 0);
}

struct Kernels {
    Mat e;
    Mat g;
    Mat h0;
    Mat h1;
    Mat h2;
};

/// Table kernels at xi by quadrature of their defining integrands.
inline Kernels kernels(const Mat& a, const Mat& b, const Mat& q, const Mat& r, double xi, int intervals = 400)
{
    Kernels k;
    k.e = expm(a, xi);
    k.g = integratedExp(a, xi);
    k.h0 = simpson(
        [&](double s) {
            const Mat e = expm(a, s);
            return Mat(e.transpose() * q * e);
        },
        xi, intervals);
    k.h1 = simpson(
        [&](double s) {
            const Mat e = expm(a, s);
            return Mat(e.transpose() * q * integratedExp(a, s) * b);
        },
        xi, intervals);
    k.h2 = simpson(
               [&](double s) {
                   const Mat gb = integratedExp(a, s) * b;
                   return Mat(gb.transpose() * q * gb);
               },
               xi, intervals) +
           xi * r;
    return k;
}

/// Solves A^T P + P A + S = 0 through the n^2 x n^2 Kronecker system.
inline Mat lyapunov(const Mat& a, const Mat& s)
{
    const Eigen::Index n = a.rows();
    const Mat id = Mat::Identity(n, n);
    const Mat k = Eigen::kroneckerProduct(id, a.transpose()).eval() + Eigen::kroneckerProduct(a.transpose(), id).eval();
    const Vec rhs = -Eigen::Map<const Vec>(s.data(), n * n);
    const Vec p = k.fullPivLu().solve(rhs);
    return Eigen::Map<const Mat>(p.data(), n, n);
}

// --- scalar plant x' = a x + b u, cost q x^2 + r u^2 ---------------------------------

struct Scalar {
    double a;
    double b;
    double q;
    double r;

    /// Stabilizing CARE root.
    double careValue() const { return r * (a + std::sqrt(a * a + b * b * q / r)) / (b * b); }
    double lqrGain() const { return -b * careValue() / r; }

    double state(double x, double u, double s) const
    {
        if (a == 0.0) {
            return x + b * u * s;
        }
        return std::exp(a * s) * x + (std::exp(a * s) - 1.0) / a * b * u;
    }

    /// Closed-form running cost over [0, xi] with held input u.
    double cost(double x, double u, double xi) const
    {
        if (a == 0.0) {
            const double c = b * u;
            return q * (x * x * xi + x * c * xi * xi + c * c * xi * xi * xi / 3.0) + r * u * u * xi;
        }
        const double c = b * u / a;
        const double k = x + c;
        const double ex = std::exp(a * xi);
        const double sq = k * k * (ex * ex - 1.0) / (2.0 * a) - 2.0 * c * k * (ex - 1.0) / a + c * c * xi;
        return q * sq + r * u * u * xi;
    }

    /// g(xi; f) with certificate p = careValue().
    double g(double alpha, double f, double x, double xi) const
    {
        const double p = careValue();
        const double u = f * x;
        const double next = state(x, u, xi);
        return cost(x, u, xi) + alpha * p * (next * next - x * x);
    }

    /// Decay condition q + r f^2 + 2 alpha p (a + b f) < 0.
    double decay(double alpha, double f) const { return q + r * f * f + 2.0 * alpha * careValue() * (a + b * f); }
};

/// Largest grid index whose prefix satisfies g <= slack.
inline std::size_t scalarDwell(const Scalar& s, double alpha, double f, double x, double step, std::size_t count,
                               double slack)
{
    std::size_t last = 0;
    for (std::size_t i = 1; i < count; ++i) {
        if (s.g(alpha, f, x, static_cast<double>(i) * step) > slack) {
            break;
        }
        last = i;
    }
    return last;
}

/**
 * Minimizer of (gamma + eta |x|) |f| over the gains meeting the endpoint
 * condition at xi and the decay condition, by dense scan of [lo, hi].
 */
inline double scalarGainScan(const Scalar& s, double alpha, double x, double xi, double lo, double hi, int points)
{
    double best = std::numeric_limits<double>::quiet_NaN();
    for (int i = 0; i <= points; ++i) {
        const double f = lo + (hi - lo) * i / points;
        if (s.decay(alpha, f) < 0.0 && s.g(alpha, f, x, xi) <= 0.0) {
            if (std::isnan(best) || std::abs(f) < std::abs(best)) {
                best = f;
            }
        }
    }
    return best;
}

}  // namespace stc::oracle

#endif  // STC_TEST_ORACLES_HPP
