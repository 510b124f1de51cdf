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
#ifndef STC_TRIGGER_HPP
#define STC_TRIGGER_HPP

#include <cmath>
#include <cstddef>

#include "stc/plant.hpp"

namespace stc {

/// g(xi; F) at one grid point; satisfied means g <= slack.
struct ConstraintEval {
    double xi = 0.0;
    double value = 0.0;
    bool satisfied = true;
};

/// Longest verified dwell time on the grid for a fixed gain.
struct InterExecResult {
    double delta = 0.0;
    std::size_t gridIndex = 0;
    bool exhaustedHorizon = false;
};

/// Absolute slack on g <= 0: relative to V(x) because g is quadratic in x.
inline double slackTolerance(const Benchmark& bench, const Eigen::Ref<const Vector>& x)
{
    return 1e-9 * std::abs(lyapunovValue(bench, x));
}

/**
 * g(xi; F) = J(F, xi; x) + alpha (V(x(xi)) - V(x)).
 *
 * g <= 0 is the per-interval performance requirement
 * J <= alpha (V(x(t_k)) - V(x(t_k + xi))).
 */
inline ConstraintEval evalG(const Benchmark& bench, const IntegralTable& table, double alpha,
                            const Eigen::Ref<const Matrix>& f, const Eigen::Ref<const Vector>& x, std::size_t index)
{
    detail::checkGainState(table, f, x, "evalG");
    ConstraintEval out;
    out.xi = table.grid().point(index);
    if (index == 0) {
        table.at(0);
        return out;
    }
    const Vector next = propagate(table, f, x, index);
    const double v0 = lyapunovValue(bench, x);
    out.value = intervalCost(table, f, x, index) + alpha * (lyapunovValue(bench, next) - v0);
    out.satisfied = out.value <= slackTolerance(bench, x);
    return out;
}

/**
 * Largest grid index i with g satisfied at every grid point 0..i.
 *
 * delta = i * step; exhaustedHorizon when i reaches the last grid point. A
 * violation at index 1 yields delta = 0, which callers treat as "fall back".
 */
inline InterExecResult interExec(const Benchmark& bench, const IntegralTable& table, double alpha,
                                 const Eigen::Ref<const Matrix>& f, const Eigen::Ref<const Vector>& x)
{
    detail::checkGainState(table, f, x, "interExec");
    const std::size_t count = table.count();
    std::size_t last = 0;
    for (std::size_t i = 1; i < count; ++i) {
        if (!evalG(bench, table, alpha, f, x, i).satisfied) {
            break;
        }
        last = i;
    }
    InterExecResult r;
    r.gridIndex = last;
    r.delta = table.grid().point(last);
    r.exhaustedHorizon = last + 1 == count;
    return r;
}

}  // namespace stc

#endif  // STC_TRIGGER_HPP
