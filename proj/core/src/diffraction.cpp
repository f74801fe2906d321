#include "kfree/diffraction.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <vector>

namespace kfree {
namespace {

struct Kahan {
    double s = 0.0, c = 0.0;
    void add(double x) {
        double y = x - c;
        double t = s + y;
        c = (t - s) - y;
        s = t;
    }
};

double dpow(uint64_t p, int k) { return std::pow(static_cast<double>(p), k); }

void require_k(int k) {
    if (k < 2) throw std::domain_error("k must be >= 2");
}

// bit index for primes up to 311 (the first 64), 255 otherwise
std::array<uint8_t, 312> small_prime_bits() {
    std::array<uint8_t, 312> idx{};
    idx.fill(255);
    uint8_t next = 0;
    for (uint64_t p : primes_up_to(311)) idx[p] = next++;
    return idx;
}

}  // namespace

double bragg_weight(uint64_t q, int k) {
    require_k(k);
    if (q < 1) throw std::invalid_argument("bragg_weight: q must be >= 1");
    double w = 1.0;
    for (auto& [p, e] : factorize(q).factors) {
        double d = dpow(p, k) - 1.0;
        w /= d * d;
    }
    return w;
}

DiffractionContext::DiffractionContext(std::shared_ptr<const SieveTables> tables)
    : tables_(std::move(tables)) {
    if (!tables_) throw std::invalid_argument("DiffractionContext: null sieve tables");
}

std::shared_ptr<const DiffractionContext::Bundle> DiffractionContext::bundle(int k) const {
    require_k(k);
    std::lock_guard lock(mutex_);
    auto it = bundles_.find(k);
    if (it != bundles_.end()) return it->second;
    auto b = std::make_shared<Bundle>();
    b->consts = constants_for_k(k);
    b->majorant = tails::bragg_majorant_sum(k);
    b->moment = tails::factorised_series_moment(k);
    b->weight_sup = tails::local_weight_sup(k);
    b->sf_mass = tails::squarefree_bragg_mass(k);
    b->mass_2omega = tails::kfree_bragg_mass_2omega(k);
    bundles_.emplace(k, b);
    return b;
}

std::shared_ptr<const DiffractionContext::BraggTable> DiffractionContext::bragg_table(
    int k, uint64_t q_max) const {
    if (q_max > tables_->limit())
        throw std::length_error("bragg table: q_max exceeds the sieve limit");
    if (q_max > (uint64_t(1) << 31) - 1)
        throw std::length_error("bragg table: q_max exceeds 2^31-1");
    std::lock_guard lock(mutex_);
    auto it = bragg_.find(k);
    if (it != bragg_.end() && it->second->q_cap >= q_max) return it->second;

    auto tb = std::make_shared<BraggTable>();
    tb->q_cap = q_max;
    tb->weight.assign(q_max + 1, 0.0);
    tb->offset.assign(q_max + 2, 0);
    tb->majorant_sum.assign(q_max + 1, 0.0);
    long double maj = 0.0L;
    uint64_t fac_p[16];
    int nfac;
    for (uint64_t q = 1; q <= q_max; ++q) {
        double w = 1.0;
        nfac = 0;
        bool kfree1 = true;
        uint64_t n = q;
        while (n > 1) {
            uint64_t p = tables_->spf(n);
            int e = 0;
            while (n % p == 0) {
                n /= p;
                ++e;
            }
            if (e > k) {
                kfree1 = false;
                break;
            }
            double d = dpow(p, k) - 1.0;
            w /= d * d;
            fac_p[nfac++] = p;
        }
        tb->offset[q] = static_cast<uint32_t>(tb->divs.size());
        if (kfree1) {
            tb->weight[q] = w;
            maj += static_cast<long double>(q) * w;
            size_t base = tb->divs.size();
            tb->divs.push_back(1);
            for (int i = 0; i < nfac; ++i) {
                size_t sz = tb->divs.size();
                for (size_t j = base; j < sz; ++j)
                    tb->divs.push_back(-static_cast<int32_t>(fac_p[i]) * tb->divs[j]);
            }
        }
        tb->majorant_sum[q] = static_cast<double>(maj);
    }
    tb->offset[q_max + 1] = static_cast<uint32_t>(tb->divs.size());
    bragg_[k] = tb;
    return tb;
}

namespace {

// #{m <= X : gcd(m, q) = 1} from the signed divisors mu(d)*d of rad(q)
int64_t coprime_count(uint64_t X, const int32_t* divs, uint32_t n) {
    int64_t cnt = 0;
    for (uint32_t i = 0; i < n; ++i) {
        int64_t e = divs[i];
        cnt += (e > 0) ? static_cast<int64_t>(X / e) : -static_cast<int64_t>(X / (-e));
    }
    return cnt;
}

}  // namespace

IntensityResult DiffractionContext::z_direct(int k, double epsilon, uint64_t q_max) const {
    require_k(k);
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::domain_error("z_direct: epsilon must lie in (0,1)");
    if (q_max == 0)
        q_max = static_cast<uint64_t>(std::max(1e6, std::ceil(100.0 / epsilon)));
    if (static_cast<double>(q_max) * epsilon < 1.0)
        throw std::invalid_argument("z_direct: q_max below 1/epsilon");
    auto tb = bragg_table(k, q_max);
    auto bn = bundle(k);

    const long double eps = epsilon;
    Kahan sum;
    for (uint64_t q = 1; q <= q_max; ++q) {
        double w = tb->weight[q];
        if (w == 0.0) continue;
        uint64_t X = static_cast<uint64_t>(std::floor(static_cast<long double>(q) * eps));
        if (X == 0) continue;
        int64_t cnt =
            coprime_count(X, tb->divs.data() + tb->offset[q], tb->offset[q + 1] - tb->offset[q]);
        if (cnt != 0) sum.add(w * static_cast<double>(cnt));
    }
    double gap = std::max(0.0, bn->majorant.upper() - tb->majorant_sum[q_max]);

    IntensityResult r;
    r.value = TailBounded(sum.s, epsilon * gap);
    r.method = "direct-bmp";
    r.k = k;
    r.epsilon = epsilon;
    r.q_max = q_max;
    return r;
}

IntensityResult DiffractionContext::ztilde_definition(int k, uint64_t N, uint64_t q_max) const {
    require_k(k);
    if (N < 1) throw std::domain_error("ztilde_definition: N must be >= 1");
    if (q_max == 0) q_max = std::max<uint64_t>(1'000'000, 100 * N);
    if (q_max < N) throw std::invalid_argument("ztilde_definition: q_max below N");
    auto tb = bragg_table(k, q_max);
    auto bn = bundle(k);

    Kahan sum;
    for (uint64_t q = N; q <= q_max; ++q) {
        double w = tb->weight[q];
        if (w == 0.0) continue;
        uint64_t X = q / N;
        int64_t cnt =
            coprime_count(X, tb->divs.data() + tb->offset[q], tb->offset[q + 1] - tb->offset[q]);
        if (cnt != 0) sum.add(w * static_cast<double>(cnt));
    }
    double gap = std::max(0.0, bn->majorant.upper() - tb->majorant_sum[q_max]);

    IntensityResult r;
    r.value = TailBounded(sum.s, gap / static_cast<double>(N));
    r.method = "ztilde-definition";
    r.k = k;
    r.N = N;
    r.q_max = q_max;
    return r;
}

std::shared_ptr<const DiffractionContext::FactorisedSeries> DiffractionContext::factorised_series(
    int k, uint64_t t_max) const {
    if (t_max > tables_->limit())
        throw std::length_error("factorised series: t_max exceeds the sieve limit");
    std::lock_guard lock(mutex_);
    auto it = series_.find(k);
    if (it != series_.end() && it->second->t_cap >= t_max) return it->second;

    auto fs = std::make_shared<FactorisedSeries>();
    fs->t_cap = t_max;
    fs->a.assign(t_max + 1, 0.0);
    fs->suffix.assign(t_max + 2, 0.0);
    fs->moment.assign(t_max + 1, 0.0);
    fs->a[1] = 1.0;
    for (uint64_t t = 2; t <= t_max; ++t) {
        if (tables_->mobius(t) == 0) continue;
        double w = 1.0;
        uint64_t n = t;
        while (n > 1) {
            uint64_t p = tables_->spf(n);
            n /= p;
            w /= 1.0 - 2.0 / dpow(p, k);
        }
        fs->a[t] = w * std::pow(static_cast<double>(t), -2.0 * k);
    }
    long double acc = 0.0L;
    for (uint64_t t = t_max; t >= 1; --t) {
        acc += fs->a[t];
        fs->suffix[t] = static_cast<double>(acc);
    }
    acc = 0.0L;
    for (uint64_t t = 1; t <= t_max; ++t) {
        acc += static_cast<long double>(fs->a[t]) * powl(static_cast<long double>(t), k);
        fs->moment[t] = static_cast<double>(acc);
    }
    series_[k] = fs;
    return fs;
}

TailBounded DiffractionContext::zk_factorised(int k, uint64_t c, uint64_t t_max) const {
    require_k(k);
    if (c < 1) throw std::domain_error("zk_factorised: c must be >= 1");
    uint64_t t0 = iroot_ceil(c, k);
    if (t_max == 0) t_max = std::max<uint64_t>(100'000, 4 * t0);
    if (t_max < t0) throw std::invalid_argument("zk_factorised: t_max below c^(1/k)");
    auto fs = factorised_series(k, t_max);
    auto bn = bundle(k);

    double sum = fs->suffix[t0] - fs->suffix[t_max + 1];
    // sum_{t > t_max} a_k(t) <= sup_w * t_max^(1-2k) / (2k-1)
    double tail =
        bn->weight_sup.upper() * std::pow(static_cast<double>(t_max), 1.0 - 2.0 * k) / (2 * k - 1);
    return bn->consts.xi_k * TailBounded(sum, tail);
}

IntensityResult DiffractionContext::ztilde_via_zk(int k, uint64_t N, uint64_t b_max,
                                                  uint64_t t_max) const {
    require_k(k);
    if (N < 1) throw std::domain_error("ztilde_via_zk: N must be >= 1");
    if (b_max == 0) b_max = 64;
    uint64_t t_lo = iroot_ceil(N * (b_max + 1), k);  // smallest t with floor(t^k/N) > b_max
    if (t_max == 0) t_max = std::max<uint64_t>(30'000, t_lo);
    if (t_max < t_lo)
        throw std::invalid_argument("ztilde_via_zk: t_max below (N(b_max+1))^(1/k)");
    auto fs = factorised_series(k, t_max);
    auto bn = bundle(k);

    // sum_{b <= b_max} z_k(Nb)/xi_k, truncating each series at t_max
    long double bsum = 0.0L;
    for (uint64_t b = 1; b <= b_max; ++b) {
        uint64_t t0 = iroot_ceil(N * b, k);
        if (t0 <= t_max) bsum += fs->suffix[t0] - fs->suffix[t_max + 1];
    }
    double tailA = bn->weight_sup.upper() *
                   std::pow(static_cast<double>(t_max), 1.0 - 2.0 * k) / (2 * k - 1);

    // b > b_max remainder, t <= t_max part: sum_t a(t) (floor(t^k/N) - b_max), exact
    long double rem = 0.0L;
    double extra_tail = 0.0;
    uint64_t t_fit = static_cast<uint64_t>(std::pow(2.0, 126.0 / k));
    for (uint64_t t = t_lo; t <= t_max; ++t) {
        double a = fs->a[t];
        if (a == 0.0) continue;
        if (t <= t_fit) {
            unsigned __int128 pw = 1;
            for (int i = 0; i < k; ++i) pw *= t;
            unsigned __int128 f = pw / N;
            rem += a * (static_cast<double>(static_cast<long double>(f)) -
                        static_cast<double>(b_max));
        } else {
            long double v = powl(static_cast<long double>(t), k) / N;
            rem += a * (floorl(v) - b_max);
            extra_tail += a * static_cast<double>(v) * 1e-15;
        }
    }
    // t > t_max part of the remainder, bracketed through the k-th moment
    double rem_hi = (bn->moment.upper() - fs->moment[t_max]) / static_cast<double>(N);
    double rem_lo = std::max(
        0.0, (bn->moment.lower() - fs->moment[t_max]) / static_cast<double>(N) -
                 static_cast<double>(b_max + 1) * tailA);
    rem_hi = std::max(rem_hi, rem_lo);
    // each b <= b_max also misses its t > t_max mass, in [0, b_max * tailA]
    double miss_hi = static_cast<double>(b_max) * tailA;
    double total = static_cast<double>(bsum + rem) + (rem_hi + rem_lo) / 2 + miss_hi / 2;
    double tail = (rem_hi - rem_lo) / 2 + miss_hi / 2 + extra_tail;

    IntensityResult r;
    r.value = bn->consts.xi_k * TailBounded(total, tail);
    r.method = "ztilde-via-zk";
    r.k = k;
    r.N = N;
    r.q_max = 0;
    r.b_max = b_max;
    r.t_max = t_max;
    return r;
}

std::shared_ptr<const DiffractionContext::ZkDefinitionTable> DiffractionContext::zk_definition_table(
    int k, uint64_t r_max, uint64_t d_max) const {
    if (r_max > tables_->limit() || d_max > tables_->limit())
        throw std::length_error("zk_definition: range exceeds the sieve limit");
    auto bn = bundle(k);  // before taking the lock; bundle() locks the same mutex
    std::lock_guard lock(mutex_);
    auto key = std::make_tuple(k, r_max, d_max);
    auto it = zkdef_.find(key);
    if (it != zkdef_.end()) return it->second;

    static const std::array<uint8_t, 312> bit_of = small_prime_bits();
    auto prime_mask = [&](uint64_t p) -> uint64_t {
        return (p <= 311 && bit_of[p] != 255) ? (uint64_t(1) << bit_of[p]) : 0;
    };

    // squarefree d <= d_max: mu(d) w_k(d), prime bitmask, lone prime > 311
    std::vector<double> d_sw;
    std::vector<uint64_t> d_mask;
    std::vector<uint32_t> d_big;
    for (uint64_t d = 1; d <= d_max; ++d) {
        int mu = tables_->mobius(d);
        if (mu == 0) continue;
        double w = 1.0;
        uint64_t mask = 0;
        uint32_t big = 0;
        uint64_t n = d;
        while (n > 1) {
            uint64_t p = tables_->spf(n);
            n /= p;
            double q = dpow(p, k) - 1.0;
            w /= q * q;
            uint64_t m = prime_mask(p);
            if (m)
                mask |= m;
            else
                big = static_cast<uint32_t>(p);  // at most one since d <= 311^2 bound fails
        }
        d_sw.push_back(mu * w);
        d_mask.push_back(mask);
        d_big.push_back(big);
    }

    // (k+1)-free r <= r_max with factorizations; partial sum of 2^omega(r) w(r)
    std::vector<uint64_t> r_vals;
    std::vector<double> r_w;
    std::vector<uint64_t> r_mask;
    std::vector<uint32_t> r_b1, r_b2;
    std::vector<uint32_t> r_foff{0};
    std::vector<uint32_t> r_fp;
    std::vector<double> r_fc2;  // (p^k-1)^2, or 0 when the exponent in r is k
    long double g_partial = 0.0L;
    for (uint64_t r = 1; r <= r_max; ++r) {
        double w = 1.0;
        uint64_t mask = 0;
        uint32_t b1 = 1, b2 = 1;
        int omega = 0;
        bool ok = true;
        uint64_t n = r;
        std::vector<std::pair<uint64_t, int>> facs;
        while (n > 1) {
            uint64_t p = tables_->spf(n);
            int e = 0;
            while (n % p == 0) {
                n /= p;
                ++e;
            }
            if (e > k) {
                ok = false;
                break;
            }
            facs.emplace_back(p, e);
        }
        if (!ok) continue;
        for (auto& [p, e] : facs) {
            double q = dpow(p, k) - 1.0;
            w /= q * q;
            ++omega;
            uint64_t m = prime_mask(p);
            if (m)
                mask |= m;
            else if (b1 == 1)
                b1 = static_cast<uint32_t>(p);
            else
                b2 = static_cast<uint32_t>(p);
        }
        r_vals.push_back(r);
        r_w.push_back(w);
        r_mask.push_back(mask);
        r_b1.push_back(b1);
        r_b2.push_back(b2);
        for (auto& [p, e] : facs) {
            r_fp.push_back(static_cast<uint32_t>(p));
            double q = dpow(p, k) - 1.0;
            r_fc2.push_back(e == k ? 0.0 : q * q);
        }
        r_foff.push_back(static_cast<uint32_t>(r_fp.size()));
        g_partial += std::ldexp(w, omega);
    }

    auto tab = std::make_shared<ZkDefinitionTable>();
    std::vector<double> h(r_max + 1, 0.0);
    const size_t nd = d_sw.size();
    for (size_t ri = 0; ri < r_vals.size(); ++ri) {
        const uint64_t mask = r_mask[ri];
        const uint32_t b1 = r_b1[ri], b2 = r_b2[ri];
        const uint32_t f0 = r_foff[ri], f1 = r_foff[ri + 1];
        long double acc = 0.0L;
        for (size_t di = 0; di < nd; ++di) {
            if ((d_mask[di] & mask) == 0 && d_big[di] != b1 && d_big[di] != b2) {
                acc += d_sw[di];
            } else {
                double corr = 1.0;
                for (uint32_t i = f0; i < f1; ++i)
                    if (/* d shares p */ (d_mask[di] & prime_mask(r_fp[i])) ||
                        d_big[di] == r_fp[i]) {
                        corr *= r_fc2[i];
                        if (corr == 0.0) break;
                    }
                if (corr != 0.0) acc += d_sw[di] * corr;
            }
        }
        h[r_vals[ri]] = r_w[ri] * static_cast<double>(acc);
    }
    tab->h_suffix.assign(r_max + 2, 0.0);
    long double s = 0.0L;
    for (uint64_t r = r_max; r >= 1; --r) {
        s += h[r];
        tab->h_suffix[r] = static_cast<double>(s);
    }

    tab->r_tail = bn->sf_mass.upper() *
                  std::max(0.0, bn->mass_2omega.upper() - static_cast<double>(g_partial));

    // d-truncation bound: group omitted d = d1 d2 with d1 | rad(r), d2 > d_max/d1
    double zk2 = zeta_real(static_cast<double>(k), 1e-18).upper();
    zk2 *= zk2;
    double e_up = bn->sf_mass.upper();
    long double dtail = 0.0L;
    for (size_t ri = 0; ri < r_vals.size(); ++ri) {
        uint64_t r = r_vals[ri];
        const uint32_t f0 = r_foff[ri], f1 = r_foff[ri + 1];
        uint32_t np = f1 - f0;
        long double rsum = 0.0L;
        for (uint32_t sub = 0; sub < (uint32_t(1) << np); ++sub) {
            uint64_t d1 = 1;
            for (uint32_t i = 0; i < np; ++i)
                if (sub & (uint32_t(1) << i)) d1 *= r_fp[f0 + i];
            double X = std::floor(static_cast<double>(d_max) / static_cast<double>(d1));
            double bound = (X >= 1.0)
                               ? std::min(e_up, zk2 * std::pow(X, 1.0 - 2.0 * k) / (2 * k - 1))
                               : e_up;
            rsum += bound;
        }
        dtail += r_w[ri] * rsum;
        (void)r;
    }
    tab->d_tail = static_cast<double>(dtail);

    zkdef_.emplace(key, tab);
    return tab;
}

TailBounded DiffractionContext::zk_definition(int k, uint64_t c, uint64_t r_max,
                                              uint64_t d_max) const {
    require_k(k);
    if (c < 1) throw std::domain_error("zk_definition: c must be >= 1");
    if (r_max < c || d_max < 1)
        throw std::invalid_argument("zk_definition: need r_max >= c and d_max >= 1");
    auto tab = zk_definition_table(k, r_max, d_max);
    return TailBounded(tab->h_suffix[c], tab->r_tail + tab->d_tail);
}

SandwichReport DiffractionContext::sandwich_check(int k, double epsilon) const {
    require_k(k);
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw std::domain_error("sandwich_check: epsilon must lie in (0,1)");
    SandwichReport rep;
    rep.k = k;
    rep.epsilon = epsilon;
    rep.N = static_cast<uint64_t>(floorl(1.0L / static_cast<long double>(epsilon)));

    rep.lower = ztilde_via_zk(k, rep.N + 1);
    rep.direct = z_direct(k, epsilon);
    rep.upper = ztilde_via_zk(k, rep.N);
    double slack_lo = rep.lower.value.tail + rep.direct.value.tail;
    double slack_hi = rep.upper.value.tail + rep.direct.value.tail;
    rep.lower_ok = rep.lower.value.value <= rep.direct.value.value + slack_lo;
    rep.upper_ok = rep.direct.value.value <= rep.upper.value.value + slack_hi;
    rep.verdict = rep.lower_ok && rep.upper_ok;
    return rep;
}

const KfreeConstants& DiffractionContext::constants(int k) const { return bundle(k)->consts; }

}  // namespace kfree
