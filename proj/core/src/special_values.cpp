#include "kfree/special_values.hpp"

#include <boost/multiprecision/cpp_bin_float.hpp>

#include <cmath>
#include <array>
#include <map>
#include <mutex>
#include <stdexcept>

#include "kfree/sieve.hpp"

namespace kfree {
namespace {

// Constants are evaluated with ~50 significant digits so that the reported
// tails are pure truncation bounds; rounding sits ~35 decades below them.
using mp = boost::multiprecision::cpp_bin_float_50;

struct MpTail {
    mp value{0};
    mp tail{0};
};

MpTail mul(const MpTail& a, const MpTail& b) {
    return {a.value * b.value,
            abs(a.value) * b.tail + abs(b.value) * a.tail + a.tail * b.tail};
}

MpTail div(const MpTail& a, const MpTail& b) {
    mp ab = abs(b.value);
    return {a.value / b.value, (ab * a.tail + abs(a.value) * b.tail) / (ab * (ab - b.tail))};
}

MpTail scale(const MpTail& a, const mp& c) { return {c * a.value, abs(c) * a.tail}; }

TailBounded to_tail_bounded(const MpTail& a) {
    double v = static_cast<double>(a.value);
    double t = static_cast<double>(a.tail * mp("1.000000001"));
    return TailBounded(v, t);
}

// B_{2j} / (2j)! for j = 1..9
const std::array<mp, 10>& bernoulli_over_factorial() {
    static const std::array<mp, 10> table = [] {
        const long num[10] = {0, 1, -1, 1, -1, 5, -691, 7, -3617, 43867};
        const long den[10] = {1, 6, 30, 42, 30, 66, 2730, 6, 510, 798};
        std::array<mp, 10> t{};
        for (int j = 1; j <= 9; ++j) {
            mp fact = 1;
            for (int i = 2; i <= 2 * j; ++i) fact *= i;
            t[j] = mp(num[j]) / mp(den[j]) / fact;
        }
        return t;
    }();
    return table;
}

// Euler-Maclaurin with 8 correction terms; for real s > 0 the remainder is
// bounded by the first omitted correction term.
MpTail mp_zeta(const mp& s, const mp& target_tail) {
    const auto& b = bernoulli_over_factorial();
    for (uint64_t N = 32; N <= (uint64_t(1) << 22); N *= 2) {
        mp poch = 1;  // prod_{i=0}^{16} (s + i)
        for (int i = 0; i <= 16; ++i) poch *= s + i;
        mp bound = abs(b[9] * poch) * pow(mp(N), -(s + 17));
        if (bound > target_tail / 2) continue;

        mp sum = 0;
        for (uint64_t n = N - 1; n >= 1; --n) sum += pow(mp(n), -s);
        mp Nm = mp(N);
        mp value = sum + pow(Nm, 1 - s) / (s - 1) + pow(Nm, -s) / 2;
        mp rising = 1;
        for (int j = 1; j <= 8; ++j) {
            // rising = prod_{i=0}^{2j-2}(s+i)
            if (j == 1)
                rising = s;
            else
                rising *= (s + 2 * j - 3) * (s + 2 * j - 2);
            value += b[j] * rising * pow(Nm, -(s + 2 * j - 1));
        }
        return {value, bound};
    }
    throw std::runtime_error("zeta_real: target tail unreachable within iteration cap");
}

MpTail mp_zeta(double s, double target_tail) { return mp_zeta(mp(s), mp(target_tail)); }

// prod over all primes of factor(p), where |factor(p) - 1| <= A p^-d (checked
// for every prime used).  The cutoff grows until the absolute truncation tail
// drops below target_abs; primes are capped at 10^8.
template <typename F>
MpTail accelerated_prime_product(F&& factor, int decay_exp, double A, const mp& target_abs) {
    const double d = decay_exp;
    double guess = std::pow(2.0 * A / ((d - 1) * static_cast<double>(target_abs) / 4.0),
                            1.0 / (d - 1));
    uint64_t P = static_cast<uint64_t>(std::max(100.0, guess * 1.1));
    const uint64_t cap = 100'000'000;
    for (;; P *= 2) {
        if (P > cap) throw std::runtime_error("euler product: prime cutoff cap exceeded");
        mp value = 1;
        for (uint64_t p : primes_up_to(P)) {
            mp f = factor(p);
            if (abs(f - 1) > mp(A) * pow(mp(p), -decay_exp))
                throw std::domain_error("euler product: decay hypothesis violated at p=" +
                                        std::to_string(p));
            value *= f;
        }
        // |log prod_{p>P}| <= 2 A sum_{n>P} n^-d <= 2A P^{1-d}/(d-1)
        mp log_tail = 2 * mp(A) * pow(mp(P), mp(1.0 - d)) / mp(d - 1.0);
        mp tail = abs(value) * (exp(log_tail) - 1) * mp("1.000000001");
        if (tail <= target_abs) return {value, tail};
    }
}

std::mutex cache_mutex;

TailBounded cached(std::map<int, TailBounded>& cache, int k,
                   const std::function<TailBounded()>& compute) {
    {
        std::lock_guard lock(cache_mutex);
        auto it = cache.find(k);
        if (it != cache.end()) return it->second;
    }
    TailBounded v = compute();
    std::lock_guard lock(cache_mutex);
    cache.emplace(k, v);
    return v;
}

void require_k(int k) {
    if (k < 2) throw std::domain_error("k must be >= 2");
}

mp ppow(uint64_t p, int e) { return pow(mp(p), e); }

}  // namespace

TailBounded zeta_real(double s, double target_tail) {
    if (!(s >= 1.1)) throw std::domain_error("zeta_real: require s >= 1.1");
    if (!(target_tail > 0)) throw std::domain_error("zeta_real: target_tail must be > 0");
    return to_tail_bounded(mp_zeta(s, target_tail));
}

TailBounded euler_product(const std::function<double(uint64_t)>& local_factor,
                          double quadratic_decay_constant, uint64_t prime_cutoff) {
    const double A = quadratic_decay_constant;
    if (A < 0 || !std::isfinite(A)) throw std::domain_error("euler_product: bad decay constant");
    uint64_t P = std::max<uint64_t>(prime_cutoff, 2);
    if (A / ((P + 1.0) * (P + 1.0)) > 0.5)
        throw std::domain_error("euler_product: cutoff too small for the log bound");
    double value = 1.0;
    for (uint64_t p : primes_up_to(P)) {
        double f = local_factor(p);
        if (std::abs(f - 1.0) > A / (double(p) * double(p)) * (1 + 1e-12))
            throw std::domain_error("euler_product: decay hypothesis violated at p=" +
                                    std::to_string(p));
        value *= f;
    }
    double tail = std::abs(value) * std::expm1(2.0 * A / (double(P) - 1.0));
    return TailBounded(value, tail * (1 + 1e-9));
}

KfreeConstants constants_for_k(int k, double target_tail) {
    require_k(k);
    if (!(target_tail > 0)) throw std::domain_error("constants_for_k: target_tail must be > 0");
    mp prod_target = mp(target_tail) / 16;
    mp zeta_target = mp(1e-25);
    if (mp(target_tail) / 16 < zeta_target) zeta_target = mp(target_tail) / 16;

    MpTail z2 = mp_zeta(2.0, 1e-30);
    MpTail zk1 = mp_zeta(mp(k + 1), mp(1e-30));
    MpTail z2m = mp_zeta(2 - mp(1) / k, zeta_target);

    // xi_k = prod_p (1 - (p^k - 1)^-2)
    MpTail xi = accelerated_prime_product(
        [&](uint64_t p) { mp q = ppow(p, k) - 1; return 1 - 1 / (q * q); }, 2 * k, 2.0,
        prod_target);

    // gamma_k * zeta(2) = prod_p (1 + 2/((p+1)(p^k-2)))
    //                   = zeta(k+1)^2 prod_p (1-p^-(k+1))^2 (1 + 2/((p+1)(p^k-2)))
    MpTail gprod = accelerated_prime_product(
        [&](uint64_t p) {
            mp u = 1 - 1 / ppow(p, k + 1);
            return u * u * (1 + 2 / ((mp(p) + 1) * (ppow(p, k) - 2)));
        },
        k + 2, 4.0, prod_target);
    MpTail gamma = div(mul(mul(zk1, zk1), gprod), z2);

    // zeta(k)^2 prod_p (1 - 2p/((p+1)p^k))
    //   = zeta(k+1)^2 prod_p (1-p^-(k+1))^2 (1-p^-k)^-2 (1 - 2/((p+1)p^(k-1)))
    MpTail cprod = accelerated_prime_product(
        [&](uint64_t p) {
            mp u = 1 - 1 / ppow(p, k + 1);
            mp w = 1 - 1 / ppow(p, k);
            return u * u / (w * w) * (1 - 2 / ((mp(p) + 1) * ppow(p, k - 1)));
        },
        k + 2, 4.0, prod_target);
    MpTail c = scale(mul(div(z2m, z2), mul(mul(zk1, zk1), cprod)), mp(2 * k) / (2 * k - 1));

    KfreeConstants out;
    out.k = k;
    out.xi_k = to_tail_bounded(xi);
    out.gamma_k = to_tail_bounded(gamma);
    out.c_k = to_tail_bounded(c);
    if (out.xi_k.tail > target_tail || out.gamma_k.tail > target_tail ||
        out.c_k.tail > target_tail)
        throw std::runtime_error("constants_for_k: target tail unreachable");
    return out;
}

namespace tails {

TailBounded bragg_majorant_sum(int k) {
    static std::map<int, TailBounded> cache;
    require_k(k);
    return cached(cache, k, [k] {
        MpTail zk = mp_zeta(mp(k), mp(1e-20));
        MpTail prod = accelerated_prime_product(
            [&](uint64_t p) { return 1 + 1 / (ppow(p, k) * (mp(p) - 1)); }, k + 1, 2.0,
            mp(1e-12));
        return to_tail_bounded(mul(zk, prod));
    });
}

TailBounded factorised_series_moment(int k) {
    static std::map<int, TailBounded> cache;
    require_k(k);
    return cached(cache, k, [k] {
        MpTail zk = mp_zeta(mp(k), mp(1e-20));
        MpTail prod = accelerated_prime_product(
            [&](uint64_t p) {
                mp x = 1 / ppow(p, k);
                return 1 + x * x / (1 - 2 * x);
            },
            2 * k, 4.0, mp(1e-14));
        return to_tail_bounded(mul(zk, prod));
    });
}

TailBounded local_weight_sup(int k) {
    // prod (1-2p^-k)^-1 = zeta(k) * prod (1 + 1/(p^k-2)) / zeta(k) ... = zeta(k) * H_k
    TailBounded zk = zeta_real(double(k), 1e-20);
    return zk * factorised_series_moment(k);
}

TailBounded squarefree_bragg_mass(int k) {
    static std::map<int, TailBounded> cache;
    require_k(k);
    return cached(cache, k, [k] {
        MpTail prod = accelerated_prime_product(
            [&](uint64_t p) { mp q = ppow(p, k) - 1; return 1 + 1 / (q * q); }, 2 * k, 2.0,
            mp(1e-14));
        return to_tail_bounded(prod);
    });
}

TailBounded kfree_bragg_mass(int k) {
    static std::map<int, TailBounded> cache;
    require_k(k);
    return cached(cache, k, [k] {
        MpTail prod = accelerated_prime_product(
            [&](uint64_t p) { mp q = ppow(p, k) - 1; return 1 + k / (q * q); }, 2 * k,
            2.0 * k, mp(1e-14));
        return to_tail_bounded(prod);
    });
}

TailBounded kfree_bragg_mass_2omega(int k) {
    static std::map<int, TailBounded> cache;
    require_k(k);
    return cached(cache, k, [k] {
        MpTail prod = accelerated_prime_product(
            [&](uint64_t p) { mp q = ppow(p, k) - 1; return 1 + 2 * k / (q * q); }, 2 * k,
            4.0 * k, mp(1e-14));
        return to_tail_bounded(prod);
    });
}

}  // namespace tails

}  // namespace kfree
