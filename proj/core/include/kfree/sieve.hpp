#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace kfree {

struct Factorization {
    uint64_t n = 1;
    // (prime, exponent), primes strictly increasing, exponents >= 1
    std::vector<std::pair<uint64_t, int>> factors;
};

// Dense smallest-prime-factor and Mobius tables up to `limit`.
// Immutable after construction; all queries are pure reads.
class SieveTables {
  public:
    static constexpr uint64_t kDefaultMemoryBudget = uint64_t(1) << 30;  // 1 GiB

    // Throws std::length_error if limit * 5 bytes exceeds the budget.
    static SieveTables build(uint64_t limit, uint64_t memory_budget_bytes = kDefaultMemoryBudget);

    uint64_t limit() const { return limit_; }

    // Smallest prime factor of n, 2 <= n <= limit.
    uint32_t spf(uint64_t n) const;
    // mu(n), 1 <= n <= limit.
    int mobius(uint64_t n) const;
    // mu_k(n): 1 iff no p^k divides n.
    bool is_kfree(uint64_t n, int k) const;
    Factorization factorize(uint64_t n) const;

    const std::vector<int8_t>& mu_table() const { return mu_; }

  private:
    uint64_t limit_ = 0;
    std::vector<uint32_t> spf_;  // spf_[n] valid for 2 <= n <= limit
    std::vector<int8_t> mu_;     // mu_[n] valid for 1 <= n <= limit
};

// Trial-division fallbacks for n beyond any sieve (up to sqrt(n) work).
Factorization factorize(uint64_t n);
int mobius(uint64_t n);
bool is_kfree(uint64_t n, int k);
uint64_t tau(uint64_t n);
int big_omega(uint64_t n);

int mobius(const Factorization& f);
uint64_t tau(const Factorization& f);
int big_omega(const Factorization& f);

// g_a(c) = 1_{p|c => p|a}(c) * (-1)^Omega(c); g_a(1) = 1.
int g_weight(uint64_t c, uint64_t a);

struct SquarefreeCountOptions {
    uint64_t segment_size = uint64_t(1) << 22;
};

// Exact #{n <= x : n squarefree}, by a segmented sieve marking p^2 multiples.
uint64_t count_squarefree(double x, const SquarefreeCountOptions& opts = {});
// Same restricted to gcd(n, a) = 1.
uint64_t count_squarefree_coprime(double x, uint64_t a, const SquarefreeCountOptions& opts = {});

// One pass, counts at several thresholds (grid need not be sorted).
std::vector<uint64_t> count_squarefree_at(std::span<const double> grid,
                                          const SquarefreeCountOptions& opts = {});
std::vector<uint64_t> count_squarefree_coprime_at(std::span<const double> grid, uint64_t a,
                                                  const SquarefreeCountOptions& opts = {});

uint64_t isqrt_u64(uint64_t n);
// Smallest t with t^k >= c (c >= 1, k >= 1).
uint64_t iroot_ceil(uint64_t c, int k);
// Primes up to limit inclusive.
std::vector<uint64_t> primes_up_to(uint64_t limit);

}  // namespace kfree
