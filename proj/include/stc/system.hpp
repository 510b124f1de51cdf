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
#ifndef STC_SYSTEM_HPP
#define STC_SYSTEM_HPP

#include <utility>

#include "stc/linalg.hpp"

namespace stc {

/**
 * Continuous-time plant dx/dt = A x + B u with running cost x^T Q x + u^T R u.
 *
 * Construction validates dimensions, finiteness and Q, R > 0. Stabilizability
 * of (A, B) is established later by the Riccati design.
 */
class LtiSystem {
public:
    LtiSystem(Matrix a, Matrix b, Matrix q, Matrix r)
        : a_(std::move(a)), b_(std::move(b)), q_(std::move(q)), r_(std::move(r))
    {
        requireSquare(a_, "LtiSystem: A");
        requireSquare(q_, "LtiSystem: Q");
        requireSquare(r_, "LtiSystem: R");
        detail::require<DimensionError>(b_.rows() == a_.rows(), "LtiSystem: B must have n rows");
        detail::require<DimensionError>(q_.rows() == a_.rows(), "LtiSystem: Q must be n x n");
        detail::require<DimensionError>(r_.rows() == b_.cols(), "LtiSystem: R must be m x m");
        detail::require<DimensionError>(a_.rows() >= 1 && b_.cols() >= 1, "LtiSystem: n and m must be positive");
        requireFinite(a_, "LtiSystem: A");
        requireFinite(b_, "LtiSystem: B");
        requireFinite(q_, "LtiSystem: Q");
        requireFinite(r_, "LtiSystem: R");
        detail::require<InputError>(isSymmetric(q_), "LtiSystem: Q must be symmetric");
        detail::require<InputError>(isSymmetric(r_), "LtiSystem: R must be symmetric");
        q_ = symmetrize(q_);
        r_ = symmetrize(r_);
        detail::require<InputError>(isPositiveDefinite(q_, 0.0), "LtiSystem: Q must be positive-definite");
        detail::require<InputError>(isPositiveDefinite(r_, 0.0), "LtiSystem: R must be positive-definite");
    }

    const Matrix& a() const { return a_; }
    const Matrix& b() const { return b_; }
    const Matrix& q() const { return q_; }
    const Matrix& r() const { return r_; }
    Eigen::Index stateDim() const { return a_.rows(); }
    Eigen::Index inputDim() const { return b_.cols(); }

    bool operator==(const LtiSystem& other) const
    {
        return a_ == other.a_ && b_ == other.b_ && q_ == other.q_ && r_ == other.r_;
    }

private:
    Matrix a_;
    Matrix b_;
    Matrix q_;
    Matrix r_;
};

inline CareSolution solveCare(const LtiSystem& sys)
{
    return solveCare(sys.a(), sys.b(), sys.q(), sys.r());
}

}  // namespace stc

#endif  // STC_SYSTEM_HPP
