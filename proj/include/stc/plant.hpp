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
#ifndef STC_PLANT_HPP
#define STC_PLANT_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "stc/tables.hpp"

namespace stc {

/// Pre-designed stabilizing gain F~ (u = F~ x) and its cost certificate P~.
struct Benchmark {
    Matrix gainTilde;
    Matrix valueTilde;
};

/// Residual of (A+BF~)^T P~ + P~(A+BF~) + Q + F~^T R F~, relative to its terms.
inline double benchmarkResidual(const LtiSystem& sys, const Benchmark& bench)
{
    const Matrix acl = sys.a() + sys.b() * bench.gainTilde;
    const Matrix s = sys.q() + bench.gainTilde.transpose() * sys.r() * bench.gainTilde;
    const Matrix res = acl.transpose() * bench.valueTilde + bench.valueTilde * acl + s;
    return spectralNorm(res) / (2.0 * spectralNorm(acl) * spectralNorm(bench.valueTilde) + spectralNorm(s));
}

/// LQR gain as F~ with P~ from the closed-loop Lyapunov equation.
inline Benchmark buildBenchmark(const LtiSystem& sys)
{
    const CareSolution care = solveCare(sys);
    Benchmark bench;
    bench.gainTilde = care.gain;
    const Matrix acl = sys.a() + sys.b() * care.gain;
    bench.valueTilde = solveLyapunov(acl, symmetrize(sys.q() + care.gain.transpose() * sys.r() * care.gain));
    detail::require<NumericalError>(benchmarkResidual(sys, bench) <= 1e-8,
                                    "buildBenchmark: Lyapunov certificate residual too large");
    detail::require<NumericalError>(isPositiveDefinite(bench.valueTilde),
                                    "buildBenchmark: certificate is not positive-definite");
    return bench;
}

/// V(x) = x^T P~ x.
inline double lyapunovValue(const Benchmark& bench, const Eigen::Ref<const Vector>& x)
{
    return x.dot(bench.valueTilde * x);
}

// --- spatially distributed network -------------------------------------------------

enum class NodeType { Square, Circle };

inline const char* nodeTypeName(NodeType t)
{
    return t == NodeType::Square ? "square" : "circle";
}

struct NodePosition {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const NodePosition&, const NodePosition&) = default;
};

struct NetworkSpec {
    int subsystemCount = 10;
    double side = 10.0;
    double decayRate = 1.0;
    std::uint64_t seed = 1;
    double stateWeight = 1.0;
    double inputWeight = 2.0;
    /// Explicit node labels; drawn by fair coin per node when empty.
    std::vector<NodeType> typeAssignment;
    /// Explicit positions; drawn uniformly over [0, side]^2 when empty.
    std::vector<NodePosition> positions;

    friend bool operator==(const NetworkSpec&, const NetworkSpec&) = default;

    void validate() const
    {
        detail::require<InputError>(subsystemCount >= 1, "NetworkSpec: N must be at least 1");
        detail::require<InputError>(std::isfinite(side) && side > 0.0, "NetworkSpec: side must be positive");
        detail::require<InputError>(std::isfinite(decayRate) && decayRate > 0.0, "NetworkSpec: beta must be positive");
        detail::require<InputError>(stateWeight > 0.0 && inputWeight > 0.0, "NetworkSpec: weights must be positive");
        const auto n = static_cast<std::size_t>(subsystemCount);
        detail::require<InputError>(typeAssignment.empty() || typeAssignment.size() == n,
                                    "NetworkSpec: typeAssignment must have N entries");
        detail::require<InputError>(positions.empty() || positions.size() == n,
                                    "NetworkSpec: positions must have N entries");
        for (const auto& p : positions) {
            detail::require<InputError>(p.x >= 0.0 && p.x <= side && p.y >= 0.0 && p.y <= side,
                                        "NetworkSpec: positions must lie in [0, side]^2");
        }
    }
};

struct NetworkLayout {
    std::vector<NodePosition> positions;
    std::vector<NodeType> types;
};

namespace detail {

/// Uniform double in [0, 1) from the top 53 bits; platform independent.
inline double unitUniform(std::mt19937_64& gen)
{
    return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

}  // namespace detail

/// Node positions and labels, either given explicitly or drawn from the seed.
inline NetworkLayout drawLayout(const NetworkSpec& spec)
{
    spec.validate();
    std::mt19937_64 gen(spec.seed);
    NetworkLayout layout;
    const auto n = static_cast<std::size_t>(spec.subsystemCount);
    for (std::size_t i = 0; i < n; ++i) {
        NodePosition p;
        p.x = spec.side * detail::unitUniform(gen);
        p.y = spec.side * detail::unitUniform(gen);
        const NodeType t = (gen() >> 63) != 0 ? NodeType::Square : NodeType::Circle;
        layout.positions.push_back(spec.positions.empty() ? p : spec.positions[i]);
        layout.types.push_back(spec.typeAssignment.empty() ? t : spec.typeAssignment[i]);
    }
    return layout;
}

/**
 * 2N-state, N-input network: node blocks [[1,1],[1,2]] (square, unstable) or
 * [[-2,1],[1,-3]] (circle, stable), input into the second node state, and
 * couplings e^{-beta * dist(i,j)} I_2 between every pair of nodes.
 */
inline LtiSystem assembleNetwork(const NetworkLayout& layout, double decayRate, double stateWeight,
                                 double inputWeight)
{
    const auto nodes = static_cast<Eigen::Index>(layout.positions.size());
    detail::require<InputError>(nodes >= 1 && layout.types.size() == layout.positions.size(),
                                "assembleNetwork: layout must list a type per node");
    const Eigen::Index n = 2 * nodes;
    Matrix a = Matrix::Zero(n, n);
    Matrix b = Matrix::Zero(n, nodes);
    for (Eigen::Index i = 0; i < nodes; ++i) {
        const auto& pi = layout.positions[static_cast<std::size_t>(i)];
        if (layout.types[static_cast<std::size_t>(i)] == NodeType::Square) {
            a.block<2, 2>(2 * i, 2 * i) << 1.0, 1.0, 1.0, 2.0;
        } else {
            a.block<2, 2>(2 * i, 2 * i) << -2.0, 1.0, 1.0, -3.0;
        }
        b(2 * i + 1, i) = 1.0;
        for (Eigen::Index j = 0; j < nodes; ++j) {
            if (j == i) {
                continue;
            }
            const auto& pj = layout.positions[static_cast<std::size_t>(j)];
            const double coupling = std::exp(-decayRate * std::hypot(pi.x - pj.x, pi.y - pj.y));
            a(2 * i, 2 * j) = coupling;
            a(2 * i + 1, 2 * j + 1) = coupling;
        }
    }
    return LtiSystem(a, b, stateWeight * Matrix::Identity(n, n), inputWeight * Matrix::Identity(nodes, nodes));
}

inline LtiSystem generateNetwork(const NetworkSpec& spec)
{
    return assembleNetwork(drawLayout(spec), spec.decayRate, spec.stateWeight, spec.inputWeight);
}

// --- exact sample-and-hold propagation ---------------------------------------------

namespace detail {

inline void checkGainState(const IntegralTable& table, const Eigen::Ref<const Matrix>& f,
                           const Eigen::Ref<const Vector>& x, const char* who)
{
    const auto& sys = table.system();
    require<DimensionError>(f.rows() == sys.inputDim() && f.cols() == sys.stateDim(),
                            std::string(who) + ": gain must be m x n");
    require<DimensionError>(x.size() == sys.stateDim(), std::string(who) + ": state must have n entries");
}

}  // namespace detail

/// x(t_k + xi) = (e^{A xi} + G(xi) B F) x under the held input u = F x.
inline Vector propagate(const IntegralTable& table, const Eigen::Ref<const Matrix>& f,
                        const Eigen::Ref<const Vector>& x, std::size_t index)
{
    detail::checkGainState(table, f, x, "propagate");
    const TableEntry t = table.at(index);
    return t.e * x + t.gb * (f * x);
}

/// J(F, xi; x) = x^T (H0 + F^T H1^T + H1 F + F^T H2 F) x.
inline double intervalCost(const IntegralTable& table, const Eigen::Ref<const Matrix>& f,
                           const Eigen::Ref<const Vector>& x, std::size_t index)
{
    detail::checkGainState(table, f, x, "intervalCost");
    const TableEntry t = table.at(index);
    const Vector u = f * x;
    const double j = x.dot(t.h0 * x) + 2.0 * x.dot(t.h1 * u) + u.dot(t.h2 * u);
    return std::max(0.0, j);
}

}  // namespace stc

#endif  // STC_PLANT_HPP
