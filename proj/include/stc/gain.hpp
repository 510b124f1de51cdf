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
#ifndef STC_GAIN_HPP
#define STC_GAIN_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>

#include "stc/trigger.hpp"

namespace stc {

/**
 * Endpoint performance constraint in the held input u = F x:
 *
 *   (1/2) u^T P2 u + q2^T u + r1 <= 0,
 *
 * with P2 = 2 H2 + 2 alpha (G B)^T P~ (G B), q2 = (2 H1^T + 2 alpha (G B)^T P~ E) x,
 * r1 = x^T (H0 + alpha (E^T P~ E - P~)) x, all evaluated at xi = index * step.
 */
struct ConstraintData {
    Matrix p2;
    Vector q2;
    double r1 = 0.0;
    double xi = 0.0;
    std::size_t index = 0;
};

inline ConstraintData buildConstraint(const Benchmark& bench, const IntegralTable& table, double alpha,
                                      const Eigen::Ref<const Vector>& x, std::size_t index)
{
    detail::require<DimensionError>(x.size() == table.system().stateDim(), "buildConstraint: state must have n entries");
    detail::require<DegenerateIntervalError>(index >= 1, "buildConstraint: interval length must be positive");
    const TableEntry t = table.at(index);
    const Matrix& p = bench.valueTilde;
    const Matrix pgb = p * t.gb;
    ConstraintData d;
    d.index = index;
    d.xi = table.grid().point(index);
    d.p2 = symmetrize(2.0 * t.h2 + 2.0 * alpha * t.gb.transpose() * pgb);
    d.q2 = (2.0 * t.h1.transpose() + 2.0 * alpha * pgb.transpose() * t.e) * x;
    d.r1 = x.dot((t.h0 + alpha * (t.e.transpose() * p * t.e - p)) * x);
    detail::require<NumericalError>(isPositiveDefinite(d.p2), "buildConstraint: P2 is not positive-definite");
    return d;
}

/// (1/2) u^T P2 u + q2^T u + r1.
inline double constraintValue(const ConstraintData& d, const Eigen::Ref<const Vector>& u)
{
    return 0.5 * u.dot(d.p2 * u) + d.q2.dot(u) + d.r1;
}

/// Schur-complement form [[2 P2^{-1}, u], [u^T, -q2^T u - r1]] (PSD iff the constraint holds).
inline Matrix performanceLmi(const ConstraintData& d, const Eigen::Ref<const Vector>& u)
{
    const Eigen::Index m = d.p2.rows();
    Matrix lmi(m + 1, m + 1);
    lmi.topLeftCorner(m, m) = symmetrize(2.0 * d.p2.llt().solve(Matrix::Identity(m, m)));
    lmi.topRightCorner(m, 1) = u;
    lmi.bottomLeftCorner(1, m) = u.transpose();
    lmi(m, m) = -d.q2.dot(u) - d.r1;
    return lmi;
}

/// Q + F^T R F + alpha ((A+BF)^T P~ + P~ (A+BF)); its negativity makes g'(0; F) < 0 for every x.
inline Matrix decayMatrix(const LtiSystem& sys, const Benchmark& bench, double alpha, const Eigen::Ref<const Matrix>& f)
{
    const Matrix acl = sys.a() + sys.b() * f;
    const Matrix& p = bench.valueTilde;
    return symmetrize(sys.q() + f.transpose() * sys.r() * f + alpha * (acl.transpose() * p + p * acl));
}

/// Schur-complement form [[R^{-1}, F], [F^T, -alpha((A+BF)^T P~ + P~(A+BF)) - Q]].
inline Matrix feasibilityLmi(const LtiSystem& sys, const Benchmark& bench, double alpha, const Eigen::Ref<const Matrix>& f)
{
    const Eigen::Index n = sys.stateDim();
    const Eigen::Index m = sys.inputDim();
    const Matrix acl = sys.a() + sys.b() * f;
    const Matrix& p = bench.valueTilde;
    Matrix lmi(m + n, m + n);
    lmi.topLeftCorner(m, m) = symmetrize(sys.r().llt().solve(Matrix::Identity(m, m)));
    lmi.topRightCorner(m, n) = f;
    lmi.bottomLeftCorner(n, m) = f.transpose();
    lmi.bottomRightCorner(n, n) = symmetrize(-alpha * (acl.transpose() * p + p * acl) - sys.q());
    return lmi;
}

/// True iff the largest eigenvalue of decayMatrix(F) is at most -margin.
inline bool checkStrictFeasibilityLmi(const LtiSystem& sys, const Benchmark& bench, double alpha,
                                      const Eigen::Ref<const Matrix>& f, double margin)
{
    detail::require<DimensionError>(f.rows() == sys.inputDim() && f.cols() == sys.stateDim(),
                                    "checkStrictFeasibilityLmi: gain must be m x n");
    return maxEigenvalueSymmetric(decayMatrix(sys, bench, alpha, f)) <= -margin;
}

/// gamma * sum|F_ij| + eta * sum|(F x)_i|.
inline double objectiveValue(const Eigen::Ref<const Matrix>& f, const Eigen::Ref<const Vector>& x, double gamma,
                             double eta)
{
    detail::require<DimensionError>(f.cols() == x.size(), "objectiveValue: gain and state sizes differ");
    return gamma * f.cwiseAbs().sum() + eta * (f * x).cwiseAbs().sum();
}

struct GainSolution {
    Matrix f;
    double objective = 0.0;
    double scalarMargin = 0.0;  ///< -((1/2)u^T P2 u + q2^T u + r1) at u = F x
    double matrixMargin = 0.0;  ///< -lambda_max(decayMatrix(F))
    int iterations = 0;
    bool converged = false;
};

struct GainOptions {
    double initialT = 1.0;
    double tMultiplier = 10.0;
    /// Bound on the duality gap of gamma ||F||_1 + eta ||F x||_1 (absolute).
    double gapTolerance = 1e-8;
    double newtonTolerance = 1e-10;
    int maxOuter = 50;
    int maxInner = 100;
    /// Entries below snapRelative * max(1, max|F~|) are zeroed when the result stays certified.
    double snapRelative = 1e-7;
};

namespace detail {

// Log-barrier interior-point solver for
//
//   min  g * sum s_ij + e * sum w_i
//   s.t. -s <= F <= s,  -w <= F x <= w,
//        (1/2)(Fx)^T P2 (Fx) + q2^T (Fx) + r1 < 0,
//        decayMatrix(F) + eps I < 0.
//
// The epigraph variables (s, w) have diagonal Hessian blocks and are eliminated
// from each Newton system, leaving a dense m*n x m*n solve in vec(F).
class SparseGainSolver {
public:
    SparseGainSolver(const LtiSystem& sys, const Benchmark& bench, double alpha, const ConstraintData& data,
                     const Eigen::Ref<const Vector>& x, double gamma, double eta, const GainOptions& opts)
        : sys_(sys), bench_(bench), alpha_(alpha), data_(data), x_(x), opts_(opts)
    {
        n_ = sys.stateDim();
        m_ = sys.inputDim();
        scale_ = std::max(gamma, eta);
        g_ = gamma / scale_;
        e_ = eta / scale_;
        const bool stateNonzero = x_.cwiseAbs().maxCoeff() > 0.0;
        useS_ = g_ > 0.0;
        useW_ = e_ > 0.0 && stateNonzero;
        useC_ = stateNonzero;
        eps_ = 1e-8 * (1.0 + spectralNorm(bench.valueTilde));
        k0_ = alpha_ * sys.b().transpose() * bench.valueTilde;
        vTilde_ = lyapunovValue(bench, x_);
    }

    /// Strictly feasible F near F~, or throws FeasibilityError.
    Matrix startingGain() const
    {
        const Matrix& ft = bench_.gainTilde;
        detail::require<FeasibilityError>(decayFeasible(ft),
                                          "feedbackGain: benchmark gain is not strictly feasible for the decay LMI");
        if (!useC_ || scalarSlack(ft) > startSlackFloor()) {
            return ft;
        }
        // Move the held input toward the unconstrained minimizer of the quadratic.
        const Vector u0 = ft * x_;
        const Vector uStar = -data_.p2.llt().solve(data_.q2);
        const Matrix dir = (uStar - u0) * x_.transpose() / x_.squaredNorm();
        for (double tau = 1.0; tau > 1e-12; tau *= 0.5) {
            const Matrix f = ft + tau * dir;
            if (scalarSlack(f) > startSlackFloor() && decayFeasible(f)) {
                return f;
            }
        }
        throw FeasibilityError("feedbackGain: endpoint constraint has no strictly feasible point near F~");
    }

    GainSolution solve()
    {
        GainSolution out;
        f_ = startingGain();
        s_ = f_.cwiseAbs().array() + 1.0;
        w_ = (f_ * x_).cwiseAbs().array() + 1.0;

        const double barrierDegree = (useS_ ? 2.0 * static_cast<double>(m_ * n_) : 0.0) +
                                     (useW_ ? 2.0 * static_cast<double>(m_) : 0.0) + (useC_ ? 1.0 : 0.0) +
                                     static_cast<double>(n_);
        double t = opts_.initialT;
        bool done = false;
        for (int outer = 0; outer < opts_.maxOuter && !done; ++outer) {
            if (!center(t, out.iterations)) {
                out.converged = false;
                return out;
            }
            // t multiplies the weights divided by scale_, so the gap on the original objective is scale_ * degree / t.
            if (scale_ * barrierDegree / t < opts_.gapTolerance) {
                done = true;
            } else {
                t *= opts_.tMultiplier;
            }
        }
        out.f = f_;
        out.converged = done;
        return out;
    }

    double scalarSlack(const Matrix& f) const
    {
        if (!useC_) {
            return 0.0;
        }
        return -constraintValue(data_, f * x_);
    }

    double eps() const { return eps_; }

private:
    double startSlackFloor() const { return 1e-11 * std::max(vTilde_, std::numeric_limits<double>::min()); }

    bool decayFeasible(const Matrix& f) const
    {
        const Matrix s = -decayMatrix(sys_, bench_, alpha_, f) - eps_ * Matrix::Identity(n_, n_);
        return Eigen::LLT<Matrix>(s).info() == Eigen::Success;
    }

    Eigen::Index idx(Eigen::Index a, Eigen::Index b) const { return a * n_ + b; }

    /// Sum of the logarithmic barrier terms at (f, s, w), or +inf outside the domain.
    double logBarrier(const Matrix& f, const Matrix& s, const Vector& w) const
    {
        const double inf = std::numeric_limits<double>::infinity();
        const Matrix sm = -decayMatrix(sys_, bench_, alpha_, f) - eps_ * Matrix::Identity(n_, n_);
        const Eigen::LLT<Matrix> llt(sm);
        if (llt.info() != Eigen::Success) {
            return inf;
        }
        double phi = 0.0;
        const Matrix& l = llt.matrixLLT();
        for (Eigen::Index i = 0; i < n_; ++i) {
            const double dii = l(i, i);
            if (!(dii > 0.0)) {
                return inf;
            }
            phi -= 2.0 * std::log(dii);
        }
        const Vector u = f * x_;
        if (useC_) {
            const double c = -constraintValue(data_, u);
            if (!(c > 0.0)) {
                return inf;
            }
            phi -= std::log(c);
        }
        if (useS_) {
            const Eigen::ArrayXXd d1 = s.array() - f.array();
            const Eigen::ArrayXXd d2 = s.array() + f.array();
            if (!((d1 > 0.0).all() && (d2 > 0.0).all())) {
                return inf;
            }
            phi -= d1.log().sum() + d2.log().sum();
        }
        if (useW_) {
            const Eigen::ArrayXd e1 = w.array() - u.array();
            const Eigen::ArrayXd e2 = w.array() + u.array();
            if (!((e1 > 0.0).all() && (e2 > 0.0).all())) {
                return inf;
            }
            phi -= e1.log().sum() + e2.log().sum();
        }
        return phi;
    }

    /// Newton centering at parameter t; false when the Newton system breaks down or the line search fails.
    bool center(double t, int& iterations)
    {
        const Eigen::Index dim = m_ * n_;
        double previousDecrement = std::numeric_limits<double>::infinity();
        int stagnant = 0;
        for (int inner = 0; inner < opts_.maxInner; ++inner) {
            ++iterations;
            const Matrix sm = -decayMatrix(sys_, bench_, alpha_, f_) - eps_ * Matrix::Identity(n_, n_);
            const Matrix sinv = symmetrize(sm.llt().solve(Matrix::Identity(n_, n_)));
            const Matrix kmat = sys_.r() * f_ + k0_;
            const Matrix ks = kmat * sinv;
            const Matrix rksk = sys_.r() + ks * kmat.transpose();

            Matrix hess(dim, dim);
            Vector grad(dim);
            for (Eigen::Index a = 0; a < m_; ++a) {
                for (Eigen::Index b = 0; b < n_; ++b) {
                    const Eigen::Index i = idx(a, b);
                    grad(i) = 2.0 * ks(a, b);
                    for (Eigen::Index c = 0; c < m_; ++c) {
                        for (Eigen::Index d = 0; d < n_; ++d) {
                            hess(i, idx(c, d)) = 2.0 * rksk(a, c) * sinv(b, d) + 2.0 * ks(a, d) * ks(c, b);
                        }
                    }
                }
            }

            const Vector u = f_ * x_;
            if (useC_) {
                const double c = -constraintValue(data_, u);
                const Vector pu = data_.p2 * u + data_.q2;
                // dc/dF = -(P2 u + q2) x^T; barrier -log c.
                Vector dc(dim);
                for (Eigen::Index a = 0; a < m_; ++a) {
                    for (Eigen::Index b = 0; b < n_; ++b) {
                        dc(idx(a, b)) = -pu(a) * x_(b);
                    }
                }
                grad -= dc / c;
                hess.noalias() += dc * dc.transpose() / (c * c);
                for (Eigen::Index a = 0; a < m_; ++a) {
                    for (Eigen::Index b = 0; b < n_; ++b) {
                        for (Eigen::Index cc = 0; cc < m_; ++cc) {
                            for (Eigen::Index d = 0; d < n_; ++d) {
                                hess(idx(a, b), idx(cc, d)) += data_.p2(a, cc) * x_(b) * x_(d) / c;
                            }
                        }
                    }
                }
            }

            Vector rhs = -grad;
            Matrix gradS = Matrix::Zero(m_, n_);
            Matrix hfs = Matrix::Zero(m_, n_);
            Matrix hss = Matrix::Ones(m_, n_);
            if (useS_) {
                for (Eigen::Index a = 0; a < m_; ++a) {
                    for (Eigen::Index b = 0; b < n_; ++b) {
                        const Eigen::Index i = idx(a, b);
                        const double i1 = 1.0 / (s_(a, b) - f_(a, b));
                        const double i2 = 1.0 / (s_(a, b) + f_(a, b));
                        const double p = i1 * i1 + i2 * i2;
                        const double q = i2 * i2 - i1 * i1;
                        const double gf = i1 - i2;
                        gradS(a, b) = t * g_ - i1 - i2;
                        hfs(a, b) = q;
                        hss(a, b) = p;
                        grad(i) += gf;
                        rhs(i) += -gf + q / p * gradS(a, b);
                        hess(i, i) += reducedCurvature(i1, i2);
                    }
                }
            }
            Vector gradW = Vector::Zero(m_);
            Vector hfw = Vector::Zero(m_);
            Vector hww = Vector::Ones(m_);
            if (useW_) {
                for (Eigen::Index a = 0; a < m_; ++a) {
                    const double i1 = 1.0 / (w_(a) - u(a));
                    const double i2 = 1.0 / (w_(a) + u(a));
                    const double p = i1 * i1 + i2 * i2;
                    const double q = i2 * i2 - i1 * i1;
                    const double gu = i1 - i2;
                    gradW(a) = t * e_ - i1 - i2;
                    hfw(a) = q;
                    hww(a) = p;
                    const double reduced = reducedCurvature(i1, i2);
                    for (Eigen::Index b = 0; b < n_; ++b) {
                        grad(idx(a, b)) += gu * x_(b);
                        rhs(idx(a, b)) += (-gu + q / p * gradW(a)) * x_(b);
                        for (Eigen::Index d = 0; d < n_; ++d) {
                            hess(idx(a, b), idx(a, d)) += reduced * x_(b) * x_(d);
                        }
                    }
                }
            }

            Vector df;
            if (!solveScaled(hess, rhs, df)) {
                return false;
            }
            Matrix dF(m_, n_);
            for (Eigen::Index a = 0; a < m_; ++a) {
                for (Eigen::Index b = 0; b < n_; ++b) {
                    dF(a, b) = df(idx(a, b));
                }
            }
            Matrix dS = Matrix::Zero(m_, n_);
            if (useS_) {
                dS = (-gradS.array() - hfs.array() * dF.array()) / hss.array();
            }
            Vector dW = Vector::Zero(m_);
            if (useW_) {
                const Vector du = dF * x_;
                dW = (-gradW.array() - hfw.array() * du.array()) / hww.array();
            }

            double slope = grad.dot(df);
            if (useS_) {
                slope += (gradS.array() * dS.array()).sum();
            }
            if (useW_) {
                slope += gradW.dot(dW);
            }
            const double decrement = -slope;
            if (decrement / 2.0 <= opts_.newtonTolerance) {
                return true;
            }

            // The linear term t * objective dwarfs the logs at large t, so its change is
            // accumulated from the step directly instead of differencing two large values.
            const double linearRate = t * ((useS_ ? g_ * dS.sum() : 0.0) + (useW_ ? e_ * dW.sum() : 0.0));
            const double log0 = logBarrier(f_, s_, w_);
            double step = 1.0;
            bool accepted = false;
            while (step > 1e-14) {
                const Matrix fN = f_ + step * dF;
                const Matrix sN = s_ + step * dS;
                const Vector wN = w_ + step * dW;
                const double change = step * linearRate + (logBarrier(fN, sN, wN) - log0);
                if (std::isfinite(change) && change <= 0.25 * step * slope) {
                    f_ = fN;
                    s_ = sN;
                    w_ = wN;
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (decrement <= kStallDecrement && (!accepted || step < 1e-2)) {
                // Rounding floor: the point is centered to working precision.
                return true;
            }
            stagnant = decrement > 0.5 * previousDecrement ? stagnant + 1 : 0;
            previousDecrement = decrement;
            if (stagnant >= 5 && decrement <= kStagnantDecrement) {
                return true;
            }
            if (!accepted) {
                return false;
            }
        }
        return false;
    }

    static constexpr double kStallDecrement = 1e-5;
    static constexpr double kStagnantDecrement = 1e-2;

    /// Solves H d = r with symmetric Jacobi scaling, retrying with a small diagonal shift.
    static bool solveScaled(const Matrix& h, const Vector& r, Vector& d)
    {
        const Vector diag = h.diagonal();
        if (!(diag.array() > 0.0).all()) {
            return false;
        }
        const Vector scale = diag.cwiseSqrt().cwiseInverse();
        Matrix hs = scale.asDiagonal() * h * scale.asDiagonal();
        const Vector rs = scale.cwiseProduct(r);
        for (double shift = 0.0; shift <= 1e-6; shift = shift == 0.0 ? 1e-14 : shift * 100.0) {
            Matrix trial = hs;
            trial.diagonal().array() += shift;
            const Eigen::LLT<Matrix> llt(trial);
            if (llt.info() == Eigen::Success) {
                d = scale.cwiseProduct(llt.solve(rs));
                return d.allFinite();
            }
        }
        return false;
    }

    /// p - q^2 / p for p = i1^2 + i2^2, q = i2^2 - i1^2, without cancellation.
    static double reducedCurvature(double i1, double i2)
    {
        const double a = i1 * i1;
        const double b = i2 * i2;
        return 4.0 * a * b / (a + b);
    }

    const LtiSystem& sys_;
    const Benchmark& bench_;
    double alpha_;
    const ConstraintData& data_;
    Vector x_;
    GainOptions opts_;
    Eigen::Index n_ = 0;
    Eigen::Index m_ = 0;
    double scale_ = 1.0;
    double g_ = 0.0;
    double e_ = 0.0;
    bool useS_ = false;
    bool useW_ = false;
    bool useC_ = false;
    double eps_ = 0.0;
    double vTilde_ = 0.0;
    Matrix k0_;
    Matrix f_;
    Matrix s_;
    Vector w_;
};

}  // namespace detail

/// Fills objective and both certification margins for gain `f`.
inline GainSolution certifyGain(const LtiSystem& sys, const Benchmark& bench, double alpha, const ConstraintData& data,
                                const Eigen::Ref<const Vector>& x, double gamma, double eta, const Matrix& f)
{
    GainSolution s;
    s.f = f;
    s.objective = objectiveValue(f, x, gamma, eta);
    s.scalarMargin = -constraintValue(data, f * x);
    s.matrixMargin = -maxEigenvalueSymmetric(decayMatrix(sys, bench, alpha, f));
    return s;
}

/**
 * Sparse gain for a fixed dwell time: minimizes gamma ||F||_1 + eta ||F x||_1
 * subject to the endpoint constraint in `data` and the strict decay LMI.
 *
 * Returns F~ with converged = false when the barrier iteration fails or the
 * result does not certify.
 */
inline GainSolution feedbackGain(const LtiSystem& sys, const Benchmark& bench, double alpha, const ConstraintData& data,
                                 const Eigen::Ref<const Vector>& x, double gamma, double eta,
                                 const GainOptions& opts = {})
{
    detail::require<InputError>(gamma >= 0.0 && eta >= 0.0, "feedbackGain: gamma and eta must be nonnegative");
    detail::require<InputError>(alpha > 1.0, "feedbackGain: alpha must exceed 1");
    detail::require<DimensionError>(x.size() == sys.stateDim() && data.q2.size() == sys.inputDim(),
                                    "feedbackGain: inconsistent dimensions");
    const Matrix& ft = bench.gainTilde;
    auto fallback = [&](int iterations) {
        GainSolution s = certifyGain(sys, bench, alpha, data, x, gamma, eta, ft);
        s.iterations = iterations;
        s.converged = false;
        return s;
    };

    if (gamma == 0.0 && eta == 0.0) {
        GainSolution s = certifyGain(sys, bench, alpha, data, x, gamma, eta, ft);
        s.converged = s.matrixMargin > 0.0 && s.scalarMargin >= -1e-9 * std::abs(lyapunovValue(bench, x));
        return s;
    }

    detail::SparseGainSolver solver(sys, bench, alpha, data, x, gamma, eta, opts);
    const GainSolution raw = solver.solve();
    if (!raw.converged) {
        return fallback(raw.iterations);
    }

    const double objTilde = objectiveValue(ft, x, gamma, eta);
    auto certified = [&](const GainSolution& s) {
        return s.scalarMargin >= 0.0 && s.matrixMargin >= solver.eps() * 0.5 && s.objective <= objTilde + 1e-6;
    };

    GainSolution best = certifyGain(sys, bench, alpha, data, x, gamma, eta, raw.f);
    best.iterations = raw.iterations;
    if (!certified(best)) {
        return fallback(raw.iterations);
    }
    const double snap = opts.snapRelative * std::max(1.0, ft.cwiseAbs().maxCoeff());
    const Matrix snapped = (raw.f.array().abs() <= snap).select(0.0, raw.f);
    GainSolution trimmed = certifyGain(sys, bench, alpha, data, x, gamma, eta, snapped);
    trimmed.iterations = raw.iterations;
    if (certified(trimmed)) {
        best = trimmed;
    }
    best.converged = true;
    return best;
}

}  // namespace stc

#endif  // STC_GAIN_HPP
