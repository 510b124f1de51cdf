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
#ifndef STC_ENGINE_HPP
#define STC_ENGINE_HPP

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "stc/gain.hpp"

namespace stc {

/// Denominator of the input-cardinality ratio mu_k.
enum class MuDenominator {
    BenchmarkInput,  ///< ||F~ x_k||_0
    InputCount,      ///< m
};

struct RunConfig {
    double alpha = 1.15;
    double gamma = 0.001;
    double eta = 0.001;
    int kMax = 49;
    Vector x0;
    TimeGrid grid{0.01, 501};
    /// Horizon of the periodic benchmark simulation used for comparison plots.
    double tailHorizon = 40.0;
    /// l0 threshold; when unset, 1e-6 * max(1, max|F~_ij|).
    std::optional<double> zeroThreshold;
    MuDenominator muDenominator = MuDenominator::BenchmarkInput;
    /// Keep F_k = F~ on every interval (periodic-gain reference run).
    bool benchmarkGainOnly = false;
    GainOptions solver;

    void validate(Eigen::Index stateDim) const
    {
        detail::require<InputError>(std::isfinite(alpha) && alpha > 1.0, "RunConfig: alpha must exceed 1");
        detail::require<InputError>(gamma >= 0.0 && eta >= 0.0, "RunConfig: gamma and eta must be nonnegative");
        detail::require<InputError>(kMax >= 1, "RunConfig: kMax must be at least 1");
        detail::require<DimensionError>(x0.size() == stateDim, "RunConfig: x0 must have n entries");
        detail::require<InputError>(x0.allFinite(), "RunConfig: x0 must be finite");
        detail::require<InputError>(tailHorizon > 0.0, "RunConfig: tailHorizon must be positive");
        detail::require<InputError>(!zeroThreshold || *zeroThreshold >= 0.0, "RunConfig: zeroThreshold must be nonnegative");
    }
};

struct TriggerRecord {
    int k = 0;
    double t = 0.0;
    double delta = 0.0;
    std::size_t gridIndex = 0;
    Matrix f;
    Vector x;
    Vector u;
    Vector xNext;
    double intervalCost = 0.0;
    bool converged = true;
    /// The corrected dwell time was zero and the interval reverted to F~.
    bool fellBack = false;
};

struct RunMetrics {
    std::vector<double> kappa;
    std::vector<double> mu;
    double rF = 0.0;
    double rU = 0.0;
    double d = 0.0;
    double meanKappa = 0.0;
    double meanMu = 0.0;
    double intervalCostSum = 0.0;
    /// Certified tail alpha * V(x_final) added to the recorded costs.
    double truncationTolerance = 0.0;
    double totalCost = 0.0;
    double benchmarkCost = 0.0;
    double nu = 0.0;
    double zeroThreshold = 0.0;
};

struct RunResult {
    std::vector<TriggerRecord> records;
    RunMetrics metrics;
};

inline double defaultZeroThreshold(const Benchmark& bench)
{
    return 1e-6 * std::max(1.0, bench.gainTilde.cwiseAbs().maxCoeff());
}

inline int countNonzero(const Eigen::Ref<const Matrix>& m, double threshold)
{
    return static_cast<int>((m.array().abs() > threshold).count());
}

/**
 * kappa_k = 100 ||F_k||_0 / ||F~||_0, mu_k = 100 ||u_k||_0 / ||u~_k||_0,
 * time-weighted averages R_F and R_u, D = sum(delta) / kMax and the relative
 * loss nu = (J - J~) / J~ with J including the certified tail.
 */
inline RunMetrics computeMetrics(const std::vector<TriggerRecord>& records, const Benchmark& bench,
                                 const RunConfig& config)
{
    detail::require<InputError>(!records.empty(), "computeMetrics: no records");
    RunMetrics mt;
    mt.zeroThreshold = config.zeroThreshold.value_or(defaultZeroThreshold(bench));
    const double thr = mt.zeroThreshold;
    const int gainTildeCount = countNonzero(bench.gainTilde, thr);
    double weighted = 0.0;
    double sumDelta = 0.0;
    double weightedMu = 0.0;
    for (const auto& r : records) {
        const double kappa = gainTildeCount > 0 ? 100.0 * countNonzero(r.f, thr) / gainTildeCount : 0.0;
        double denom = 0.0;
        if (config.muDenominator == MuDenominator::BenchmarkInput) {
            denom = countNonzero(bench.gainTilde * r.x, thr);
        } else {
            denom = static_cast<double>(r.u.size());
        }
        const double mu = denom > 0.0 ? 100.0 * countNonzero(r.u, thr) / denom : 0.0;
        mt.kappa.push_back(kappa);
        mt.mu.push_back(mu);
        weighted += r.delta * kappa;
        weightedMu += r.delta * mu;
        sumDelta += r.delta;
        mt.intervalCostSum += r.intervalCost;
    }
    const auto count = static_cast<double>(records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        mt.meanKappa += mt.kappa[i] / count;
        mt.meanMu += mt.mu[i] / count;
    }
    mt.rF = sumDelta > 0.0 ? weighted / sumDelta : mt.meanKappa;
    mt.rU = sumDelta > 0.0 ? weightedMu / sumDelta : mt.meanMu;
    mt.d = sumDelta / static_cast<double>(config.kMax);
    mt.truncationTolerance = config.alpha * lyapunovValue(bench, records.back().xNext);
    mt.totalCost = mt.intervalCostSum + mt.truncationTolerance;
    mt.benchmarkCost = lyapunovValue(bench, records.front().x);
    mt.nu = mt.benchmarkCost > 0.0 ? (mt.totalCost - mt.benchmarkCost) / mt.benchmarkCost : 0.0;
    return mt;
}

/**
 * Self-triggered sparse control loop. Each interval:
 *   1. dwell time for F~,
 *   2. sparse gain for that dwell time,
 *   3. corrected dwell time for the new gain (reverting to F~ if it is zero),
 * then the state is propagated exactly over the dwell time.
 */
inline RunResult runAlgorithm(const LtiSystem& sys, const Benchmark& bench, const IntegralTable& table,
                              const RunConfig& config)
{
    config.validate(sys.stateDim());
    detail::require<InputError>(table.system() == sys, "runAlgorithm: table was built for a different system");

    const double alpha = config.alpha;
    const double lambdaMin = minEigenvalueSymmetric(bench.valueTilde);
    const double v0 = lyapunovValue(bench, config.x0);
    const double sublevelRadius = std::sqrt(std::max(0.0, v0) / lambdaMin);

    RunResult result;
    Vector x = config.x0;
    std::size_t elapsedSteps = 0;
    double costSum = 0.0;
    for (int k = 0; k < config.kMax; ++k) {
        TriggerRecord rec;
        rec.k = k;
        rec.t = table.grid().point(elapsedSteps);
        rec.x = x;

        const InterExecResult first = interExec(bench, table, alpha, bench.gainTilde, x);
        if (first.gridIndex == 0) {
            throw GridTooCoarseError("runAlgorithm: benchmark gain admits no positive dwell time at step " +
                                     std::to_string(table.grid().step()) + " (interval " + std::to_string(k) + ")");
        }

        Matrix f = bench.gainTilde;
        InterExecResult dwell = first;
        if (!config.benchmarkGainOnly) {
            const ConstraintData data = buildConstraint(bench, table, alpha, x, first.gridIndex);
            GainSolution sol;
            try {
                sol = feedbackGain(sys, bench, alpha, data, x, config.gamma, config.eta, config.solver);
            } catch (const FeasibilityError&) {
                sol.f = bench.gainTilde;
                sol.converged = false;
            }
            rec.converged = sol.converged;
            if (sol.converged) {
                const InterExecResult corrected = interExec(bench, table, alpha, sol.f, x);
                if (corrected.gridIndex == 0) {
                    rec.fellBack = true;
                } else {
                    f = sol.f;
                    dwell = corrected;
                }
            }
        }

        rec.f = f;
        rec.u = f * x;
        rec.gridIndex = dwell.gridIndex;
        rec.delta = dwell.delta;
        rec.intervalCost = intervalCost(table, f, x, dwell.gridIndex);
        rec.xNext = propagate(table, f, x, dwell.gridIndex);

        const double vk = lyapunovValue(bench, x);
        const double vNext = lyapunovValue(bench, rec.xNext);
        if (rec.intervalCost > alpha * (vk - vNext) + 1e-7 * vk) {
            throw NumericalError("runAlgorithm: performance inequality violated on interval " + std::to_string(k));
        }
        if (vNext > vk * (1.0 + 1e-12)) {
            throw NumericalError("runAlgorithm: Lyapunov value increased on interval " + std::to_string(k));
        }
        costSum += rec.intervalCost;
        if (costSum > alpha * (v0 - vNext) + 1e-7 * v0) {
            throw NumericalError("runAlgorithm: cumulative cost exceeds the telescoped Lyapunov bound");
        }
        if (rec.xNext.norm() > sublevelRadius * (1.0 + 1e-9) + 1e-300) {
            throw NumericalError("runAlgorithm: state left the initial Lyapunov sublevel set");
        }

        x = rec.xNext;
        elapsedSteps += dwell.gridIndex;
        result.records.push_back(std::move(rec));
    }
    result.metrics = computeMetrics(result.records, bench, config);
    return result;
}

struct TrajectorySample {
    double t = 0.0;
    Vector x;
};

/// Exact closed-loop states on the grid inside every recorded interval, plus the final state.
inline std::vector<TrajectorySample> sampleTrajectory(const IntegralTable& table,
                                                      const std::vector<TriggerRecord>& records)
{
    std::vector<TrajectorySample> out;
    std::size_t elapsed = 0;
    for (const auto& r : records) {
        for (std::size_t j = 0; j < r.gridIndex; ++j) {
            out.push_back({table.grid().point(elapsed + j), propagate(table, r.f, r.x, j)});
        }
        elapsed += r.gridIndex;
    }
    if (!records.empty()) {
        out.push_back({table.grid().point(elapsed), records.back().xNext});
    }
    return out;
}

struct BenchmarkRun {
    double cost = 0.0;
    std::vector<double> times;
    std::vector<double> stateNorms;
};

/// Continuous u = F~ x over [0, horizon]: exact propagation, Simpson quadrature of the running cost.
inline BenchmarkRun benchmarkRun(const LtiSystem& sys, const Benchmark& bench, const Eigen::Ref<const Vector>& x0,
                                 double horizon, double step = 0.01)
{
    detail::require<InputError>(horizon > 0.0 && step > 0.0, "benchmarkRun: horizon and step must be positive");
    detail::require<DimensionError>(x0.size() == sys.stateDim(), "benchmarkRun: x0 must have n entries");
    auto intervals = static_cast<std::size_t>(std::ceil(horizon / step - 1e-9));
    intervals += intervals % 2;
    const double h = horizon / static_cast<double>(intervals);
    const Matrix acl = sys.a() + sys.b() * bench.gainTilde;
    const Matrix phi = expm(acl, h);
    const Matrix weight = sys.q() + bench.gainTilde.transpose() * sys.r() * bench.gainTilde;

    BenchmarkRun out;
    Vector x = x0;
    double sum = 0.0;
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double l = x.dot(weight * x);
        const double w = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        sum += w * l;
        out.times.push_back(static_cast<double>(i) * h);
        out.stateNorms.push_back(x.norm());
        x = phi * x;
    }
    out.cost = sum * h / 3.0;
    return out;
}

}  // namespace stc

#endif  // STC_ENGINE_HPP
