#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "kfree/sieve.hpp"
#include "kfree/special_values.hpp"
#include "kfree/tail_bounded.hpp"

namespace kfree {

struct IntensityResult {
    TailBounded value;
    std::string method;  // direct-bmp | ztilde-definition | ztilde-via-zk
    int k = 0;
    double epsilon = 0.0;  // set for direct queries
    uint64_t N = 0;        // set for discretised queries
    uint64_t q_max = 0;
    uint64_t b_max = 0;
    uint64_t t_max = 0;
};

struct SandwichReport {
    int k = 0;
    double epsilon = 0.0;
    uint64_t N = 0;            // integer part of 1/epsilon
    IntensityResult lower;     // Ztilde_k(N+1)
    IntensityResult direct;    // Z_k(epsilon)
    IntensityResult upper;     // Ztilde_k(N)
    bool lower_ok = false;     // Ztilde(N+1) <= Z(eps) up to combined tails
    bool upper_ok = false;     // Z(eps) <= Ztilde(N) up to combined tails
    bool verdict = false;
};

// prod over distinct p | q of (p^k - 1)^-2; the Bragg intensity weight.
double bragg_weight(uint64_t q, int k);

// Evaluators of the near-origin intensity.  All methods are pure given the
// sieve tables; internal per-k caches are guarded by a mutex, so concurrent
// calls are safe.  Enumeration beyond the sieve limit throws std::length_error.
class DiffractionContext {
  public:
    explicit DiffractionContext(std::shared_ptr<const SieveTables> tables);

    const SieveTables& tables() const { return *tables_; }

    // Z_k(eps) = sum_q mu_{k+1}(q) w_k(q) #{m <= q eps : gcd(m,q)=1},
    // truncated at q_max (default max(10^6, 100/eps)).
    IntensityResult z_direct(int k, double epsilon, uint64_t q_max = 0) const;

    // Ztilde_k(N), same sum with the count #{m <= q/N : gcd(m,q)=1}.
    IntensityResult ztilde_definition(int k, uint64_t N, uint64_t q_max = 0) const;

    // z_k(c) = xi_k sum_{t >= c^(1/k)} mu^2(t) t^-2k prod_{p|t}(1-2p^-k)^-1.
    TailBounded zk_factorised(int k, uint64_t c, uint64_t t_max = 0) const;

    // Definitional double sum over r >= c and d; slow-converging test oracle.
    TailBounded zk_definition(int k, uint64_t c, uint64_t r_max, uint64_t d_max) const;

    // Ztilde_k(N) = sum_{b>=1} z_k(N b).  The sum over b <= b_max uses the
    // factorised series; the b > b_max remainder is completed exactly through
    // sum_t a_k(t) floor(t^k/N) and contributes a small bracket to the tail.
    IntensityResult ztilde_via_zk(int k, uint64_t N, uint64_t b_max = 0,
                                  uint64_t t_max = 0) const;

    SandwichReport sandwich_check(int k, double epsilon) const;

    const KfreeConstants& constants(int k) const;

  private:
    struct BraggTable {
        uint64_t q_cap = 0;
        std::vector<double> weight;        // w_k(q) where mu_{k+1}(q) != 0, else 0
        std::vector<uint32_t> offset;      // into divs, per q
        std::vector<int32_t> divs;         // mu(d)*d for d | rad(q)
        std::vector<double> majorant_sum;  // prefix sums of q w_k(q)
    };
    struct FactorisedSeries {
        uint64_t t_cap = 0;
        std::vector<double> a;       // a_k(t) = mu^2(t) t^-2k prod (1-2p^-k)^-1
        std::vector<double> suffix;  // suffix[t] = sum_{u >= t, u <= t_cap} a[u]
        std::vector<double> moment;  // moment[t] = sum_{u <= t} a[u] u^k
    };
    struct ZkDefinitionTable {
        std::vector<double> h_suffix;  // sum_{r' >= r} h(r')
        double r_tail = 0;
        double d_tail = 0;
    };
    struct Bundle {
        KfreeConstants consts;
        TailBounded majorant;  // tails::bragg_majorant_sum
        TailBounded moment;    // tails::factorised_series_moment (H_k)
        TailBounded weight_sup;
        TailBounded sf_mass;
        TailBounded mass_2omega;
    };

    std::shared_ptr<const BraggTable> bragg_table(int k, uint64_t q_max) const;
    std::shared_ptr<const FactorisedSeries> factorised_series(int k, uint64_t t_max) const;
    std::shared_ptr<const Bundle> bundle(int k) const;
    std::shared_ptr<const ZkDefinitionTable> zk_definition_table(int k, uint64_t r_max,
                                                                 uint64_t d_max) const;

    std::shared_ptr<const SieveTables> tables_;
    mutable std::mutex mutex_;
    mutable std::map<int, std::shared_ptr<const BraggTable>> bragg_;
    mutable std::map<int, std::shared_ptr<const FactorisedSeries>> series_;
    mutable std::map<int, std::shared_ptr<const Bundle>> bundles_;
    mutable std::map<std::tuple<int, uint64_t, uint64_t>, std::shared_ptr<const ZkDefinitionTable>>
        zkdef_;
};

}  // namespace kfree
