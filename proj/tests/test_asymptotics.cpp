#include <doctest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <kfree/asymptotics.hpp>

using namespace kfree;

namespace {

const SieveTables& tbl() {
    static auto t = SieveTables::build(2'000'000);
    return t;
}

const DiffractionContext& ctx() {
    static DiffractionContext c(
        std::make_shared<const SieveTables>(SieveTables::build(2'000'000)));
    return c;
}

}  // namespace

TEST_SUITE_BEGIN("asymptotics");

TEST_CASE("weighted_squarefree_sum hand values") {
    CHECK(weighted_squarefree_sum(tbl(), 2, 1.0) == 1.0);
    // t=1: 1, t=2: (1-2/4)^-1 = 2, t=3: (1-2/9)^-1 = 9/7
    CHECK(weighted_squarefree_sum(tbl(), 2, 3.0) == doctest::Approx(1 + 2 + 9.0 / 7).epsilon(1e-15));
    CHECK(weighted_squarefree_sum(tbl(), 2, 3.9) == doctest::Approx(1 + 2 + 9.0 / 7).epsilon(1e-15));
}

TEST_CASE("weighted_squarefree_sum_at matches single calls in any order") {
    std::vector<double> grid{1000.0, 5.0, 200000.0, 5.0, 31.0};
    auto got = weighted_squarefree_sum_at(tbl(), 2, grid);
    for (size_t i = 0; i < grid.size(); ++i)
        CHECK(got[i] == doctest::Approx(weighted_squarefree_sum(tbl(), 2, grid[i])).epsilon(1e-14));
}

TEST_CASE("weighted_sum_generic with zero delta counts squarefree integers") {
    for (double u : {1000.0, 100000.0}) {
        double got = weighted_sum_generic(tbl(), [](uint64_t) { return 0.0; }, u);
        CHECK(got == (double)count_squarefree(u));
    }
}

TEST_CASE("weighted_sum_generic reproduces the k-weighted sum") {
    // 1 + 2/(p^2-2) = (1 - 2 p^-2)^-1
    double u = 50'000;
    double got = weighted_sum_generic(
        tbl(), [](uint64_t p) { return 2.0 / ((double)p * p - 2); }, u);
    CHECK(got == doctest::Approx(weighted_squarefree_sum(tbl(), 2, u)).epsilon(1e-12));
}

TEST_CASE("weighted_sum_generic vs brute force for delta(p) = -1/p^2") {
    const uint64_t u = 10'000;
    long double expect = 0;
    for (uint64_t m = 1; m <= u; ++m) {
        if (mobius(m) == 0) continue;
        long double w = 1;
        for (auto& [p, e] : factorize(m).factors) w *= 1.0L - 1.0L / ((long double)p * p);
        expect += w;
    }
    double got = weighted_sum_generic(
        tbl(), [](uint64_t p) { return -1.0 / ((double)p * p); }, (double)u);
    CHECK(got == doctest::Approx((double)expect).epsilon(1e-12));
}

TEST_CASE("weighted_sum_generic rejects slow-decaying delta") {
    CHECK_THROWS_AS(
        weighted_sum_generic(tbl(), [](uint64_t p) { return 1.0 / p; }, 1000.0),
        std::domain_error);
}

TEST_CASE("walfisz residual at x=1") {
    std::vector<double> grid{1.0};
    auto r = walfisz_residuals(grid);
    double inv_z2 = 6 / (std::numbers::pi * std::numbers::pi);
    CHECK(r.exact[0] == 1.0);
    CHECK(r.main_term[0] == doctest::Approx(inv_z2).epsilon(1e-14));
    CHECK(r.residual[0] == doctest::Approx(1.0 - inv_z2).epsilon(1e-13));
    CHECK(r.normalized[0] == doctest::Approx(r.residual[0]).epsilon(1e-13));
}

TEST_CASE("walfisz coprime density factor") {
    std::vector<double> grid{100.0, 10000.0};
    auto r = walfisz_residuals(grid, 30);
    double inv_z2 = 6 / (std::numbers::pi * std::numbers::pi);
    // prod_{p|30} p/(p+1) = 2/3 * 3/4 * 5/6 = 5/12
    CHECK(r.main_term[0] == doctest::Approx(100.0 * inv_z2 * 5.0 / 12).epsilon(1e-13));
    CHECK(r.exact[0] == (double)count_squarefree_coprime(100.0, 30));
    CHECK(r.normalized[1] == doctest::Approx(r.residual[1] / 100.0).epsilon(1e-13));
}

TEST_CASE("zk asymptotic deviation shrinks with c") {
    std::vector<uint64_t> cs{100, 10'000};
    auto r = zk_asymptotic_check(ctx(), 3, cs);
    REQUIRE(r.x.size() == 2);
    CHECK(std::abs(r.residual[1] / r.main_term[1]) < std::abs(r.residual[0] / r.main_term[0]));
    CHECK(r.main_term[1] > 0);
    CHECK(r.exact[1] > 0);
}

TEST_CASE("fit_power_law recovers a synthetic power law") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i <= 20; ++i) {
        double e = 1e-4 * std::pow(100.0, i / 20.0);
        pts.emplace_back(e, 3.0 * e * e);
    }
    auto fit = fit_power_law(pts);
    CHECK(fit.exponent == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.amplitude() == doctest::Approx(3.0).epsilon(1e-10));
    for (double r : fit.residuals) CHECK(std::abs(r) < 1e-12);
    // residuals recompute from the stored points
    for (size_t i = 0; i < pts.size(); ++i) {
        double pred = fit.log_amplitude + fit.exponent * std::log(pts[i].first);
        CHECK(std::abs(std::log(pts[i].second) - pred - fit.residuals[i]) < 1e-12);
    }
}

TEST_CASE("power_law_fit input validation") {
    std::vector<double> few{1e-3, 2e-3, 3e-3, 4e-3};
    CHECK_THROWS_AS(power_law_fit(ctx(), 2, few), std::invalid_argument);
    std::vector<double> narrow{1e-3, 2e-3, 3e-3, 4e-3, 5e-3};
    CHECK_THROWS_AS(power_law_fit(ctx(), 2, narrow), std::invalid_argument);
    std::vector<double> big{1e-3, 1e-2, 5e-2, 1e-1, 2e-1};
    CHECK_THROWS_AS(power_law_fit(ctx(), 2, big), std::domain_error);
    CHECK_THROWS_AS(fit_power_law(std::vector<std::pair<double, double>>{{1.0, 1.0}}),
                    std::invalid_argument);
}

TEST_CASE("power_law_fit on genuine k=2 data") {
    std::vector<double> grid;
    for (int i = 0; i <= 32; ++i) grid.push_back(1e-4 * std::pow(100.0, i / 32.0));
    auto fit = power_law_fit(ctx(), 2, grid, 2'000'000);
    CHECK(std::abs(fit.exponent - 1.5) < 0.02);
    CHECK(fit.points.size() == grid.size());
}

TEST_SUITE_END();
