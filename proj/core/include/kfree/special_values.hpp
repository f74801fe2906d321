#pragma once

#include <cstdint>
#include <functional>

#include "kfree/tail_bounded.hpp"

namespace kfree {

// The three Euler-product constants attached to the k-free intensity:
//   xi_k    = prod_p (1 - (p^k - 1)^-2)
//   gamma_k = zeta(2)^-1 prod_p (1 + 2 / ((p+1)(p^k - 2)))
//   c_k     = 2k/(2k-1) * zeta(2 - 1/k)/zeta(2) * zeta(k)^2
//             * prod_p (1 - 2p / ((p+1) p^k))
struct KfreeConstants {
    int k = 0;
    TailBounded xi_k;
    TailBounded gamma_k;
    TailBounded c_k;
};

// zeta(s) for real s >= 1.1 by Euler-Maclaurin; |value - zeta(s)| <= tail
// <= target_tail.  Throws std::domain_error for s out of range and
// std::runtime_error if the target is unreachable within the iteration cap.
TailBounded zeta_real(double s, double target_tail);

// prod_{p <= P} local_factor(p) with a multiplicative tail bound for the
// omitted primes, derived from |local_factor(p) - 1| <= A / p^2 (verified at
// every prime actually used; a violation throws std::domain_error).
TailBounded euler_product(const std::function<double(uint64_t)>& local_factor,
                          double quadratic_decay_constant, uint64_t prime_cutoff);

// All three constants with tails <= target_tail.  k >= 2.
KfreeConstants constants_for_k(int k, double target_tail = 1e-13);

// Convergent sums over primes used as truncation bounds by the intensity
// evaluators.  All are cached per k.
namespace tails {

// sum_q mu_{k+1}(q) q prod_{p|q}(p^k-1)^-2  =  zeta(k) prod_p (1 + 1/(p^k (p-1)))
TailBounded bragg_majorant_sum(int k);
// sum over squarefree t of t^-k prod_{p|t}(1 - 2 p^-k)^-1  =  prod_p (1 + 1/(p^k - 2))
TailBounded factorised_series_moment(int k);
// sup_t prod_{p|t}(1 - 2 p^-k)^-1  =  prod_p (1 - 2 p^-k)^-1
TailBounded local_weight_sup(int k);
// sum over squarefree d of prod_{p|d}(p^k-1)^-2  =  prod_p (1 + (p^k-1)^-2)
TailBounded squarefree_bragg_mass(int k);
// sum over (k+1)-free r of prod_{p|r}(p^k-1)^-2  =  prod_p (1 + k (p^k-1)^-2)
TailBounded kfree_bragg_mass(int k);
// sum over (k+1)-free r of 2^omega(r) prod_{p|r}(p^k-1)^-2
TailBounded kfree_bragg_mass_2omega(int k);

}  // namespace tails

}  // namespace kfree
