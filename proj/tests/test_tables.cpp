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
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "test_support.hpp"

using namespace stc;
using stc::testing::Gen;

namespace {

double relErr(const Matrix& got, const Matrix& want)
{
    return (got - want).norm() / std::max(1e-12, want.norm());
}

std::filesystem::path freshDir(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("stc-tables-" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST(TimeGrid, FromHorizonKeepsLastPointInside)
{
    const TimeGrid g = TimeGrid::fromHorizon(0.01, 5.0);
    EXPECT_EQ(g.count(), 501u);
    EXPECT_DOUBLE_EQ(g.horizon(), 5.0);
    const TimeGrid h = TimeGrid::fromHorizon(0.3, 1.0);
    EXPECT_EQ(h.count(), 4u);
    EXPECT_NEAR(h.horizon(), 0.9, 1e-15);
    EXPECT_THROW(TimeGrid(0.0, 10), InputError);
    EXPECT_THROW(TimeGrid(0.1, 1), InputError);
}

TEST(Table, OriginValues)
{
    Gen g(11);
    const LtiSystem sys = stc::testing::randomSystem(g, 3, 2);
    const IntegralTable t = buildTable(sys, TimeGrid(0.01, 5));
    const TableEntry e0 = t.at(0);
    EXPECT_EQ(e0.e, Matrix::Identity(3, 3));
    EXPECT_EQ(e0.g.norm(), 0.0);
    EXPECT_EQ(e0.h0.norm(), 0.0);
    EXPECT_EQ(e0.h1.norm(), 0.0);
    EXPECT_EQ(e0.h2.norm(), 0.0);
    EXPECT_THROW(t.at(5), RangeError);
}

TEST(Table, AgreesWithQuadratureOracle)
{
    Gen g(12);
    for (int trial = 0; trial < 6; ++trial) {
        const int n = g.integer(1, 5);
        const int m = g.integer(1, n);
        const LtiSystem sys = stc::testing::randomSystem(g, n, m);
        const IntegralTable t = buildTable(sys, TimeGrid(0.01, 201));
        for (std::size_t idx : {std::size_t{1}, std::size_t{37}, std::size_t{200}}) {
            const double xi = t.grid().point(idx);
            const oracle::Kernels k = oracle::kernels(sys.a(), sys.b(), sys.q(), sys.r(), xi);
            const TableEntry e = t.at(idx);
            EXPECT_LT(relErr(e.e, k.e), 1e-9);
            EXPECT_LT(relErr(e.g, k.g), 1e-9);
            EXPECT_LT(relErr(e.h0, k.h0), 1e-6);
            EXPECT_LT(relErr(e.h1, k.h1), 1e-6);
            EXPECT_LT(relErr(e.h2, k.h2), 1e-6);
            EXPECT_LT(relErr(e.gb, k.g * sys.b()), 1e-9);
        }
    }
}

TEST(Table, H2PositiveDefiniteAwayFromZero)
{
    Gen g(13);
    for (int trial = 0; trial < 10; ++trial) {
        const int n = g.integer(1, 6);
        const int m = g.integer(1, 4);
        const IntegralTable t = buildTable(stc::testing::randomSystem(g, n, m), TimeGrid(0.05, 41));
        for (std::size_t i = 1; i < t.count(); ++i) {
            EXPECT_TRUE(isPositiveDefinite(t.at(i).h2)) << "trial " << trial << " index " << i;
        }
    }
}

TEST(Table, H2GrowsMonotonically)
{
    Gen g(14);
    const IntegralTable t = buildTable(stc::testing::randomSystem(g, 4, 2), TimeGrid(0.02, 51));
    for (std::size_t i = 1; i < t.count(); ++i) {
        EXPECT_GT(minEigenvalueSymmetric(t.at(i).h2 - t.at(i - 1).h2), 0.0);
    }
}

TEST(Table, QuadraticFormEqualsHeldCost)
{
    Gen g(15);
    const LtiSystem sys = stc::testing::randomSystem(g, 4, 2);
    const IntegralTable t = buildTable(sys, TimeGrid(0.01, 101));
    const Matrix f = g.normalMatrix(2, 4);
    const Vector x = g.normalVector(4);
    for (std::size_t idx : {std::size_t{3}, std::size_t{50}, std::size_t{100}}) {
        const double want = oracle::heldCost(sys.a(), sys.b(), sys.q(), sys.r(), f, x, t.grid().point(idx));
        EXPECT_NEAR(intervalCost(t, f, x, idx), want, 1e-6 * std::abs(want));
        const Vector next = oracle::heldState(sys.a(), sys.b(), x, f * x, t.grid().point(idx));
        EXPECT_LT((propagate(t, f, x, idx) - next).norm(), 1e-9 * std::max(1.0, next.norm()));
    }
}

TEST(TableCache, RoundTripIsBitExact)
{
    Gen g(16);
    const LtiSystem sys = stc::testing::randomSystem(g, 3, 2);
    const TimeGrid grid(0.01, 30);
    const auto dir = freshDir("roundtrip");
    const IntegralTable built = cachedTable(dir, sys, grid);
    ASSERT_EQ(std::distance(std::filesystem::directory_iterator(dir), std::filesystem::directory_iterator()), 1);
    const IntegralTable loaded = cachedTable(dir, sys, grid);
    for (std::size_t i = 0; i < grid.count(); ++i) {
        EXPECT_EQ(built.at(i).e, loaded.at(i).e);
        EXPECT_EQ(built.at(i).h1, loaded.at(i).h1);
        EXPECT_EQ(built.at(i).h2, loaded.at(i).h2);
    }
    std::filesystem::remove_all(dir);
}

TEST(TableCache, KeyMismatchIsAMiss)
{
    Gen g(17);
    const LtiSystem sys = stc::testing::randomSystem(g, 2, 1);
    const LtiSystem other = stc::testing::randomSystem(g, 2, 1);
    const auto dir = freshDir("mismatch");
    const auto path = dir / "t.bin";
    saveTable(buildTable(sys, TimeGrid(0.01, 10)), path);
    EXPECT_TRUE(loadTable(path, sys, TimeGrid(0.01, 10)).has_value());
    EXPECT_FALSE(loadTable(path, other, TimeGrid(0.01, 10)).has_value());
    EXPECT_FALSE(loadTable(path, sys, TimeGrid(0.01, 11)).has_value());
    EXPECT_FALSE(loadTable(dir / "absent.bin", sys, TimeGrid(0.01, 10)).has_value());
    std::filesystem::remove_all(dir);
}

TEST(TableCache, ForeignFileIsIoError)
{
    const auto dir = freshDir("foreign");
    const auto path = dir / "junk.bin";
    std::ofstream(path) << "definitely not a table";
    EXPECT_THROW(loadTable(path, stc::testing::scalarSystem(1, 1, 1, 1), TimeGrid(0.1, 3)), IoError);
    std::filesystem::remove_all(dir);
}
