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
#ifndef STC_TABLES_HPP
#define STC_TABLES_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "stc/system.hpp"

namespace stc {

/// Uniform grid xi_i = i * step, i = 0 .. count-1.
class TimeGrid {
public:
    TimeGrid(double step, std::size_t count) : step_(step), count_(count)
    {
        detail::require<InputError>(std::isfinite(step) && step > 0.0, "TimeGrid: step must be positive");
        detail::require<InputError>(count >= 2, "TimeGrid: count must be at least 2");
    }

    /// Grid of the given step whose last point is the largest multiple of step not exceeding horizon.
    static TimeGrid fromHorizon(double step, double horizon)
    {
        detail::require<InputError>(std::isfinite(horizon) && horizon > 0.0, "TimeGrid: horizon must be positive");
        detail::require<InputError>(std::isfinite(step) && step > 0.0, "TimeGrid: step must be positive");
        const auto intervals = static_cast<std::size_t>(std::floor(horizon / step + 1e-9));
        return TimeGrid(step, intervals + 1);
    }

    double step() const { return step_; }
    std::size_t count() const { return count_; }
    double horizon() const { return step_ * static_cast<double>(count_ - 1); }
    double point(std::size_t i) const { return static_cast<double>(i) * step_; }

    bool operator==(const TimeGrid& other) const { return step_ == other.step_ && count_ == other.count_; }

private:
    double step_;
    std::size_t count_;
};

/// Read-only view of the stored matrices at one grid point.
struct TableEntry {
    const Matrix& e;   ///< e^{A xi}
    const Matrix& g;   ///< int_0^xi e^{A s} ds
    const Matrix& gb;  ///< G(xi) B
    const Matrix& h0;
    const Matrix& h1;
    const Matrix& h2;
};

/**
 * Grid-sampled kernels of the hold-interval cost:
 *
 *   E(xi)  = e^{A xi}
 *   G(xi)  = int_0^xi e^{A s} ds           (= e^{A xi} Z(xi))
 *   H0(xi) = int_0^xi E^T Q E
 *   H1(xi) = int_0^xi E^T Q G B
 *   H2(xi) = int_0^xi (G B)^T Q (G B) + xi R
 *
 * Immutable after construction.
 */
class IntegralTable {
public:
    IntegralTable(LtiSystem sys, TimeGrid grid, std::vector<Matrix> e, std::vector<Matrix> g,
                  std::vector<Matrix> h0, std::vector<Matrix> h1, std::vector<Matrix> h2)
        : sys_(std::move(sys)),
          grid_(grid),
          e_(std::move(e)),
          g_(std::move(g)),
          h0_(std::move(h0)),
          h1_(std::move(h1)),
          h2_(std::move(h2))
    {
        const std::size_t c = grid_.count();
        detail::require<DimensionError>(e_.size() == c && g_.size() == c && h0_.size() == c && h1_.size() == c &&
                                            h2_.size() == c,
                                        "IntegralTable: one matrix per grid point is required");
        const Eigen::Index n = sys_.stateDim();
        const Eigen::Index m = sys_.inputDim();
        gb_.reserve(c);
        for (std::size_t i = 0; i < c; ++i) {
            detail::require<DimensionError>(e_[i].rows() == n && e_[i].cols() == n && g_[i].rows() == n &&
                                                g_[i].cols() == n && h0_[i].rows() == n && h0_[i].cols() == n &&
                                                h1_[i].rows() == n && h1_[i].cols() == m && h2_[i].rows() == m &&
                                                h2_[i].cols() == m,
                                            "IntegralTable: matrix shape mismatch at index " + std::to_string(i));
            gb_.push_back(g_[i] * sys_.b());
        }
    }

    const LtiSystem& system() const { return sys_; }
    const TimeGrid& grid() const { return grid_; }
    std::size_t count() const { return grid_.count(); }

    TableEntry at(std::size_t index) const
    {
        detail::require<RangeError>(index < grid_.count(),
                                    "IntegralTable: index " + std::to_string(index) + " outside grid of " +
                                        std::to_string(grid_.count()) + " points");
        return TableEntry{e_[index], g_[index], gb_[index], h0_[index], h1_[index], h2_[index]};
    }

private:
    LtiSystem sys_;
    TimeGrid grid_;
    std::vector<Matrix> e_;
    std::vector<Matrix> g_;
    std::vector<Matrix> gb_;
    std::vector<Matrix> h0_;
    std::vector<Matrix> h1_;
    std::vector<Matrix> h2_;
};

/// Free-function accessor for a grid entry.
inline TableEntry queryAt(const IntegralTable& table, std::size_t index)
{
    return table.at(index);
}

/**
 * Integrates the coupled system E' = A E, G' = E, H0' = E^T Q E,
 * H1' = E^T Q G B, H2' = (G B)^T Q (G B) + R with classical RK4 on
 * `substeps` internal steps per grid interval.
 */
inline IntegralTable buildTable(const LtiSystem& sys, const TimeGrid& grid, int substeps = 8)
{
    detail::require<InputError>(substeps >= 1, "buildTable: substeps must be positive");
    const Eigen::Index n = sys.stateDim();
    const Eigen::Index m = sys.inputDim();
    const Matrix& a = sys.a();
    const Matrix& b = sys.b();
    const Matrix& q = sys.q();
    const Matrix& r = sys.r();

    struct Rates {
        Matrix de, dg, dh0, dh1, dh2;
    };
    auto rates = [&](const Matrix& e, const Matrix& g) {
        const Matrix qe = q * e;
        const Matrix gb = g * b;
        const Matrix qgb = q * gb;
        return Rates{a * e, e, e.transpose() * qe, e.transpose() * qgb, gb.transpose() * qgb + r};
    };

    const std::size_t c = grid.count();
    std::vector<Matrix> es, gs, h0s, h1s, h2s;
    es.reserve(c);
    gs.reserve(c);
    h0s.reserve(c);
    h1s.reserve(c);
    h2s.reserve(c);

    Matrix e = Matrix::Identity(n, n);
    Matrix g = Matrix::Zero(n, n);
    Matrix h0 = Matrix::Zero(n, n);
    Matrix h1 = Matrix::Zero(n, m);
    Matrix h2 = Matrix::Zero(m, m);
    es.push_back(e);
    gs.push_back(g);
    h0s.push_back(h0);
    h1s.push_back(h1);
    h2s.push_back(h2);

    const double dt = grid.step() / substeps;
    for (std::size_t i = 1; i < c; ++i) {
        for (int s = 0; s < substeps; ++s) {
            const Rates k1 = rates(e, g);
            const Rates k2 = rates(e + 0.5 * dt * k1.de, g + 0.5 * dt * k1.dg);
            const Rates k3 = rates(e + 0.5 * dt * k2.de, g + 0.5 * dt * k2.dg);
            const Rates k4 = rates(e + dt * k3.de, g + dt * k3.dg);
            const double w = dt / 6.0;
            e += w * (k1.de + 2.0 * k2.de + 2.0 * k3.de + k4.de);
            g += w * (k1.dg + 2.0 * k2.dg + 2.0 * k3.dg + k4.dg);
            h0 += w * (k1.dh0 + 2.0 * k2.dh0 + 2.0 * k3.dh0 + k4.dh0);
            h1 += w * (k1.dh1 + 2.0 * k2.dh1 + 2.0 * k3.dh1 + k4.dh1);
            h2 += w * (k1.dh2 + 2.0 * k2.dh2 + 2.0 * k3.dh2 + k4.dh2);
        }
        h0 = symmetrize(h0);
        h2 = symmetrize(h2);
        es.push_back(e);
        gs.push_back(g);
        h0s.push_back(h0);
        h1s.push_back(h1);
        h2s.push_back(h2);
    }
    return IntegralTable(sys, grid, std::move(es), std::move(gs), std::move(h0s), std::move(h1s), std::move(h2s));
}

}  // namespace stc

#endif  // STC_TABLES_HPP
