#include <doctest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <kfree/diffraction.hpp>

using namespace kfree;

namespace {

const DiffractionContext& ctx() {
    static DiffractionContext c(
        std::make_shared<const SieveTables>(SieveTables::build(2'000'000)));
    return c;
}

// Z_k(eps) truncated at q_max by pure trial division, nothing shared with
// the library's tables.
double brute_z(int k, double eps, uint64_t q_max) {
    long double sum = 0;
    for (uint64_t q = 1; q <= q_max; ++q) {
        bool admissible = true;
        long double w = 1;
        uint64_t m = q;
        for (uint64_t p = 2; p * p <= m; ++p) {
            if (m % p) continue;
            int e = 0;
            while (m % p == 0) { m /= p; ++e; }
            if (e > k) { admissible = false; break; }
            long double d = powl((long double)p, k) - 1;
            w /= d * d;
        }
        if (!admissible) continue;
        if (m > 1) {
            long double d = powl((long double)m, k) - 1;
            w /= d * d;
        }
        uint64_t count = 0;
        auto limit = (uint64_t)floorl((long double)q * (long double)eps);
        for (uint64_t i = 1; i <= limit; ++i)
            if (std::gcd(i, q) == 1) ++count;
        sum += w * count;
    }
    return (double)sum;
}

}  // namespace

TEST_SUITE_BEGIN("diffraction");

TEST_CASE("bragg_weight hand values") {
    CHECK(bragg_weight(1, 2) == 1.0);
    CHECK(bragg_weight(2, 2) == doctest::Approx(1.0 / 9).epsilon(1e-15));
    CHECK(bragg_weight(6, 2) == doctest::Approx(1.0 / 576).epsilon(1e-15));
    CHECK(bragg_weight(12, 2) == doctest::Approx(1.0 / 576).epsilon(1e-15));  // same radical
    CHECK(bragg_weight(2, 3) == doctest::Approx(1.0 / 49).epsilon(1e-15));
}

TEST_CASE("z_direct vs brute-force double loop, k=3") {
    const double eps = 0.9;
    const uint64_t q_max = 10'000;
    auto z = ctx().z_direct(3, eps, q_max);
    CHECK(z.value.value == doctest::Approx(brute_z(3, eps, q_max)).epsilon(1e-13));
    CHECK(z.method == "direct-bmp");
    CHECK(z.q_max == q_max);
}

TEST_CASE("z_direct tiny hand computation") {
    // k=2, eps=0.5, q<=4: q=1 no m; q=2 m=1 w=1/9; q=3 m=1 w=1/64; q=4 m=1 w=1/9
    auto z = ctx().z_direct(2, 0.5, 4);
    CHECK(z.value.value == doctest::Approx(1.0 / 9 + 1.0 / 64 + 1.0 / 9).epsilon(1e-15));
}

TEST_CASE("exact dyadic eps identifies Z(1/N) with Ztilde(N)") {
    // 0.25 is exactly representable, so floor(q*eps) == floor(q/4) for all q
    auto a = ctx().z_direct(2, 0.25, 100'000);
    auto b = ctx().ztilde_definition(2, 4, 100'000);
    CHECK(a.value.value == b.value.value);
}

TEST_CASE("three Ztilde routes agree within tails") {
    for (int k : {2, 3})
        for (uint64_t N = 1; N <= 20; ++N) {
            auto via = ctx().ztilde_via_zk(k, N);
            auto def = ctx().ztilde_definition(k, N);
            CHECK(consistent(via.value, def.value));
            CHECK(via.value.tail < 1e-10);
        }
}

TEST_CASE("Ztilde is non-increasing in N at fixed q_max") {
    // with a common truncation every term is monotone, so the partial sums are
    const uint64_t q_max = 100'000;
    double prev = ctx().ztilde_definition(2, 1, q_max).value.value;
    for (uint64_t N = 2; N <= 30; ++N) {
        double cur = ctx().ztilde_definition(2, N, q_max).value.value;
        CHECK(cur <= prev);
        prev = cur;
    }
}

TEST_CASE("zk_factorised at c=1 sums to 1") {
    auto z = ctx().zk_factorised(2, 1);
    CHECK(std::abs(z.value - 1.0) <= z.tail + 1e-12);
    auto z3 = ctx().zk_factorised(3, 1);
    CHECK(std::abs(z3.value - 1.0) <= z3.tail + 1e-12);
}

TEST_CASE("zk_factorised depends on c only through ceil(c^(1/k))") {
    auto a = ctx().zk_factorised(2, 17, 100'000);  // t0 = 5
    auto b = ctx().zk_factorised(2, 25, 100'000);  // t0 = 5
    CHECK(a.value == b.value);
    auto c = ctx().zk_factorised(2, 26, 100'000);  // t0 = 6
    CHECK(c.value < a.value);
}

TEST_CASE("zk_definition cross-checks the factorised form") {
    for (uint64_t c : {1ull, 2ull, 3ull}) {
        auto def = ctx().zk_definition(2, c, 20'000, 2'000);
        auto fac = ctx().zk_factorised(2, c);
        CHECK(consistent(def, fac));
        CHECK(def.tail < 1e-6);
    }
}

TEST_CASE("ztilde_via_zk with b_max=1 is bounded by the full run") {
    auto one = ctx().ztilde_via_zk(2, 3, 1);
    auto full = ctx().ztilde_via_zk(2, 3, 64);
    CHECK(one.value.value <= full.value.upper() + one.value.tail);
    CHECK(consistent(one.value, full.value));
}

TEST_CASE("sandwich verdicts") {
    auto r2 = ctx().sandwich_check(2, 0.137);
    CHECK(r2.N == 7);
    CHECK(r2.lower_ok);
    CHECK(r2.upper_ok);
    CHECK(r2.verdict);
    CHECK(r2.lower.value.value <= r2.upper.value.value);
    auto r3 = ctx().sandwich_check(3, 0.0078125);  // 1/128, exact
    CHECK(r3.N == 128);
    CHECK(r3.verdict);
}

TEST_CASE("discretisation error decays with N") {
    // Ztilde_k(N) / (gamma_k zeta(2-1/k)/(2k-1) N^(-2+1/k)) -> 1
    auto c = ctx().constants(2);
    double z32 = zeta_real(1.5, 1e-15).value;
    auto ratio = [&](uint64_t N) {
        double main = c.c_k.value / 4.0 * std::pow((double)N, -1.5);
        return ctx().ztilde_via_zk(2, N).value.value / main;
    };
    CHECK(std::abs(ratio(100'000) - 1) < std::abs(ratio(1'000) - 1));
    (void)z32;
}

TEST_CASE("argument validation") {
    CHECK_THROWS_AS(ctx().z_direct(1, 0.5), std::domain_error);
    CHECK_THROWS_AS(ctx().z_direct(2, 0.0), std::domain_error);
    CHECK_THROWS_AS(ctx().z_direct(2, 1.0), std::domain_error);
    CHECK_THROWS_AS(ctx().z_direct(2, 0.5, 1), std::invalid_argument);  // q_max*eps < 1
    CHECK_THROWS_AS(ctx().ztilde_definition(2, 0), std::domain_error);
    CHECK_THROWS_AS(ctx().zk_factorised(2, 0), std::domain_error);
    CHECK_THROWS_AS(ctx().ztilde_definition(2, 10, 5), std::invalid_argument);  // q_max < N
    CHECK_THROWS_AS(ctx().zk_definition(2, 100, 50, 1000), std::invalid_argument);  // r_max < c
    CHECK_THROWS_AS(DiffractionContext(nullptr), std::invalid_argument);
    // enumeration past the sieve limit is refused, not silently wrong
    CHECK_THROWS_AS(ctx().z_direct(2, 0.5, 5'000'000), std::length_error);
}

TEST_CASE("results are positive and tails finite") {
    for (int k : {2, 3}) {
        auto z = ctx().z_direct(k, 0.3);
        CHECK(z.value.value > 0);
        CHECK(z.value.tail > 0);
        CHECK(std::isfinite(z.value.tail));
    }
}

TEST_SUITE_END();
