#include "kfree/sieve.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace kfree {

uint64_t isqrt_u64(uint64_t n) {
    uint64_t r = static_cast<uint64_t>(std::sqrt(static_cast<double>(n)));
    while (r > 0 && r * r > n) --r;
    while ((r + 1) * (r + 1) <= n) ++r;
    return r;
}

uint64_t iroot_ceil(uint64_t c, int k) {
    if (c <= 1) return 1;
    if (k == 1) return c;
    auto pow_ge = [&](uint64_t t) {  // t^k >= c, overflow-safe
        unsigned __int128 v = 1;
        for (int i = 0; i < k; ++i) {
            v *= t;
            if (v >= c) return true;
        }
        return v >= c;
    };
    uint64_t t = static_cast<uint64_t>(std::ceil(std::pow(static_cast<double>(c), 1.0 / k)));
    if (t < 1) t = 1;
    while (t > 1 && pow_ge(t - 1)) --t;
    while (!pow_ge(t)) ++t;
    return t;
}

std::vector<uint64_t> primes_up_to(uint64_t limit) {
    std::vector<uint64_t> primes;
    if (limit < 2) return primes;
    std::vector<char> comp(limit + 1, 0);
    for (uint64_t i = 2; i * i <= limit; ++i)
        if (!comp[i])
            for (uint64_t j = i * i; j <= limit; j += i) comp[j] = 1;
    for (uint64_t i = 2; i <= limit; ++i)
        if (!comp[i]) primes.push_back(i);
    return primes;
}

SieveTables SieveTables::build(uint64_t limit, uint64_t memory_budget_bytes) {
    if (limit < 1) throw std::invalid_argument("SieveTables::build: limit must be >= 1");
    if (limit > uint64_t(1) << 32)
        throw std::length_error("SieveTables::build: limit too large for 32-bit spf table");
    // spf: 4 bytes/n, mu: 1 byte/n
    if (limit * 5 > memory_budget_bytes)
        throw std::length_error("SieveTables::build: limit " + std::to_string(limit) +
                                " exceeds memory budget");
    SieveTables t;
    t.limit_ = limit;
    t.mu_.assign(limit + 1, 0);
    t.mu_[1] = 1;
    if (limit >= 2) {
        t.spf_.assign(limit + 1, 0);
        // linear sieve: each composite crossed once via its smallest prime
        std::vector<uint32_t> primes;
        for (uint64_t i = 2; i <= limit; ++i) {
            if (t.spf_[i] == 0) {
                t.spf_[i] = static_cast<uint32_t>(i);
                t.mu_[i] = -1;
                primes.push_back(static_cast<uint32_t>(i));
            }
            for (uint32_t p : primes) {
                if (p > t.spf_[i] || i * p > limit) break;
                t.spf_[i * p] = p;
                t.mu_[i * p] = (p == t.spf_[i]) ? 0 : static_cast<int8_t>(-t.mu_[i]);
            }
        }
    }
    return t;
}

uint32_t SieveTables::spf(uint64_t n) const {
    if (n < 2 || n > limit_) throw std::out_of_range("SieveTables::spf: n out of range");
    return spf_[n];
}

int SieveTables::mobius(uint64_t n) const {
    if (n < 1 || n > limit_) throw std::out_of_range("SieveTables::mobius: n out of range");
    return mu_[n];
}

Factorization SieveTables::factorize(uint64_t n) const {
    if (n < 1 || n > limit_) throw std::out_of_range("SieveTables::factorize: n out of range");
    Factorization f;
    f.n = n;
    while (n > 1) {
        uint64_t p = spf_[n];
        int e = 0;
        while (n % p == 0) { n /= p; ++e; }
        f.factors.emplace_back(p, e);
    }
    return f;
}

bool SieveTables::is_kfree(uint64_t n, int k) const {
    if (k < 1) throw std::invalid_argument("is_kfree: k must be >= 1");
    auto f = factorize(n);
    for (auto& [p, e] : f.factors)
        if (e >= k) return false;
    return true;
}

Factorization factorize(uint64_t n) {
    if (n < 1) throw std::invalid_argument("factorize: n must be >= 1");
    Factorization f;
    f.n = n;
    for (uint64_t p = 2; p * p <= n; p += (p == 2) ? 1 : 2) {
        if (n % p == 0) {
            int e = 0;
            while (n % p == 0) { n /= p; ++e; }
            f.factors.emplace_back(p, e);
        }
    }
    if (n > 1) f.factors.emplace_back(n, 1);
    return f;
}

int mobius(const Factorization& f) {
    int r = 1;
    for (auto& [p, e] : f.factors) {
        if (e >= 2) return 0;
        r = -r;
    }
    return r;
}

uint64_t tau(const Factorization& f) {
    uint64_t r = 1;
    for (auto& [p, e] : f.factors) r *= static_cast<uint64_t>(e + 1);
    return r;
}

int big_omega(const Factorization& f) {
    int r = 0;
    for (auto& [p, e] : f.factors) r += e;
    return r;
}

int mobius(uint64_t n) { return mobius(factorize(n)); }
uint64_t tau(uint64_t n) { return tau(factorize(n)); }
int big_omega(uint64_t n) { return big_omega(factorize(n)); }

bool is_kfree(uint64_t n, int k) {
    if (k < 1) throw std::invalid_argument("is_kfree: k must be >= 1");
    auto f = factorize(n);
    for (auto& [p, e] : f.factors)
        if (e >= k) return false;
    return true;
}

int g_weight(uint64_t c, uint64_t a) {
    if (c < 1 || a < 1) throw std::invalid_argument("g_weight: arguments must be >= 1");
    if (c == 1) return 1;
    auto f = factorize(c);
    int omega = 0;
    for (auto& [p, e] : f.factors) {
        if (a % p != 0) return 0;
        omega += e;
    }
    return (omega % 2 == 0) ? 1 : -1;
}

namespace {

// Shared segmented pass: counts squarefree n <= x for each x in grid,
// optionally restricted to gcd(n, a) = 1.
std::vector<uint64_t> segmented_counts(std::span<const double> grid, uint64_t a,
                                       const SquarefreeCountOptions& opts) {
    if (grid.empty()) throw std::invalid_argument("count_squarefree: empty grid");
    std::vector<uint64_t> xs(grid.size());
    uint64_t xmax = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 1.0)) throw std::out_of_range("count_squarefree: x must be >= 1");
        xs[i] = static_cast<uint64_t>(grid[i]);
        xmax = std::max(xmax, xs[i]);
    }
    // thresholds sorted, results scattered back by index
    std::vector<size_t> order(grid.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return xs[i] < xs[j]; });

    auto base = primes_up_to(isqrt_u64(xmax));
    std::vector<uint64_t> a_primes;
    if (a > 1)
        for (auto& [p, e] : factorize(a).factors) a_primes.push_back(p);

    std::vector<uint64_t> result(grid.size(), 0);
    uint64_t seg = std::max<uint64_t>(opts.segment_size, 64);
    std::vector<char> bad;
    uint64_t count = 0;
    size_t next = 0;
    for (uint64_t low = 1; low <= xmax; low += seg) {
        uint64_t high = std::min(xmax, low + seg - 1);
        bad.assign(high - low + 1, 0);
        for (uint64_t p : base) {
            uint64_t p2 = p * p;
            if (p2 > high) break;
            for (uint64_t j = ((low + p2 - 1) / p2) * p2; j <= high; j += p2) bad[j - low] = 1;
        }
        for (uint64_t p : a_primes)
            for (uint64_t j = ((low + p - 1) / p) * p; j <= high; j += p) bad[j - low] = 1;
        uint64_t pos = low;
        while (next < order.size() && xs[order[next]] <= high) {
            uint64_t x = xs[order[next]];
            for (; pos <= x; ++pos) count += !bad[pos - low];
            // all grid entries with this threshold
            while (next < order.size() && xs[order[next]] == x) result[order[next++]] = count;
        }
        for (; pos <= high; ++pos) count += !bad[pos - low];
    }
    return result;
}

}  // namespace

uint64_t count_squarefree(double x, const SquarefreeCountOptions& opts) {
    return segmented_counts(std::span<const double>(&x, 1), 1, opts)[0];
}

uint64_t count_squarefree_coprime(double x, uint64_t a, const SquarefreeCountOptions& opts) {
    if (a < 1) throw std::invalid_argument("count_squarefree_coprime: a must be >= 1");
    return segmented_counts(std::span<const double>(&x, 1), a, opts)[0];
}

std::vector<uint64_t> count_squarefree_at(std::span<const double> grid,
                                          const SquarefreeCountOptions& opts) {
    return segmented_counts(grid, 1, opts);
}

std::vector<uint64_t> count_squarefree_coprime_at(std::span<const double> grid, uint64_t a,
                                                  const SquarefreeCountOptions& opts) {
    if (a < 1) throw std::invalid_argument("count_squarefree_coprime: a must be >= 1");
    return segmented_counts(grid, a, opts);
}

}  // namespace kfree
