#include "kfree/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "kfree/special_values.hpp"

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

void require_increasing(std::span<const double> x) {
    for (size_t i = 0; i + 1 < x.size(); ++i)
        if (!(x[i] < x[i + 1]))
            throw std::invalid_argument("grid must be strictly increasing");
}

double local_weight(const SieveTables& tables, uint64_t t, int k) {
    double w = 1.0;
    uint64_t n = t;
    while (n > 1) {
        uint64_t p = tables.spf(n);
        n /= p;
        w /= 1.0 - 2.0 * std::pow(static_cast<double>(p), -k);
    }
    return w;
}

}  // namespace

double PowerLawFit::amplitude() const { return std::exp(log_amplitude); }

std::vector<double> weighted_squarefree_sum_at(const SieveTables& tables, int k,
                                               std::span<const double> grid) {
    if (k < 2) throw std::domain_error("weighted_squarefree_sum: k must be >= 2");
    if (grid.empty()) throw std::invalid_argument("weighted_squarefree_sum: empty grid");
    std::vector<uint64_t> us(grid.size());
    uint64_t umax = 0;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 1.0)) throw std::out_of_range("weighted_squarefree_sum: u must be >= 1");
        us[i] = static_cast<uint64_t>(grid[i]);
        umax = std::max(umax, us[i]);
    }
    if (umax > tables.limit())
        throw std::length_error("weighted_squarefree_sum: u exceeds the sieve limit");
    std::vector<size_t> order(grid.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::sort(order.begin(), order.end(), [&](size_t i, size_t j) { return us[i] < us[j]; });

    std::vector<double> out(grid.size(), 0.0);
    Kahan sum;
    size_t next = 0;
    for (uint64_t t = 1; t <= umax; ++t) {
        if (t == 1 || tables.mobius(t) != 0) sum.add(local_weight(tables, t, k));
        while (next < order.size() && us[order[next]] == t) out[order[next++]] = sum.s;
    }
    return out;
}

double weighted_squarefree_sum(const SieveTables& tables, int k, double u) {
    return weighted_squarefree_sum_at(tables, k, std::span<const double>(&u, 1))[0];
}

double weighted_sum_generic(const SieveTables& tables,
                            const std::function<double(uint64_t)>& delta, double u) {
    if (!(u >= 1.0)) throw std::out_of_range("weighted_sum_generic: u must be >= 1");
    uint64_t umax = static_cast<uint64_t>(u);
    if (umax > tables.limit())
        throw std::length_error("weighted_sum_generic: u exceeds the sieve limit");
    std::vector<double> dv(umax + 1, 0.0);
    for (uint64_t p = 2; p <= umax; ++p) {
        if (p >= 2 && tables.spf(p) == p) {
            double d = delta(p);
            if (!(std::abs(d) <= 4.0 / (static_cast<double>(p) * p)))
                throw std::domain_error("weighted_sum_generic: |delta(p)| > 4/p^2 at p=" +
                                        std::to_string(p));
            dv[p] = d;
        }
    }
    Kahan sum;
    for (uint64_t m = 1; m <= umax; ++m) {
        if (m > 1 && tables.mobius(m) == 0) continue;
        double w = 1.0;
        uint64_t n = m;
        while (n > 1) {
            uint64_t p = tables.spf(n);
            n /= p;
            w *= 1.0 + dv[p];
        }
        sum.add(w);
    }
    return sum.s;
}

ResidualSeries walfisz_residuals(std::span<const double> x_grid, uint64_t a,
                                 const SquarefreeCountOptions& opts) {
    if (x_grid.empty()) throw std::invalid_argument("walfisz_residuals: empty grid");
    require_increasing(x_grid);
    if (a < 1) throw std::invalid_argument("walfisz_residuals: a must be >= 1");
    auto counts = count_squarefree_coprime_at(x_grid, a, opts);
    double density = 1.0 / zeta_real(2.0, 1e-20).value;
    for (auto& [p, e] : factorize(a).factors) density *= static_cast<double>(p) / (p + 1);

    ResidualSeries rs;
    rs.x.assign(x_grid.begin(), x_grid.end());
    for (size_t i = 0; i < x_grid.size(); ++i) {
        double main = x_grid[i] * density;
        double exact = static_cast<double>(counts[i]);
        rs.main_term.push_back(main);
        rs.exact.push_back(exact);
        rs.residual.push_back(exact - main);
        rs.normalized.push_back((exact - main) / std::sqrt(x_grid[i]));
    }
    return rs;
}

ResidualSeries zk_asymptotic_check(const DiffractionContext& ctx, int k,
                                   std::span<const uint64_t> c_grid) {
    if (c_grid.empty()) throw std::invalid_argument("zk_asymptotic_check: empty grid");
    for (size_t i = 0; i + 1 < c_grid.size(); ++i)
        if (!(c_grid[i] < c_grid[i + 1]))
            throw std::invalid_argument("zk_asymptotic_check: grid must be strictly increasing");
    const auto& consts = ctx.constants(k);
    double alpha = -2.0 + 1.0 / k;

    ResidualSeries rs;
    for (uint64_t c : c_grid) {
        double x = static_cast<double>(c);
        double exact = ctx.zk_factorised(k, c).value / consts.xi_k.value;
        double main = consts.gamma_k.value / (2 * k - 1) * std::pow(x, alpha);
        rs.x.push_back(x);
        rs.main_term.push_back(main);
        rs.exact.push_back(exact);
        rs.residual.push_back(exact - main);
        rs.normalized.push_back((exact - main) * std::pow(x, 2.0 - 0.5 / k));
    }
    return rs;
}

PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points) {
    if (points.size() < 2) throw std::invalid_argument("fit_power_law: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto& [e, z] : points) {
        if (!(e > 0.0) || !(z > 0.0))
            throw std::domain_error("fit_power_law: points must be positive");
        double lx = std::log(e), ly = std::log(z);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = static_cast<double>(points.size());
    double den = n * sxx - sx * sx;
    if (!(den > 0.0)) throw std::domain_error("fit_power_law: degenerate abscissae");

    PowerLawFit fit;
    fit.exponent = (n * sxy - sx * sy) / den;
    fit.log_amplitude = (sy - fit.exponent * sx) / n;
    fit.points.assign(points.begin(), points.end());
    for (auto& [e, z] : points)
        fit.residuals.push_back(std::log(z) - fit.log_amplitude - fit.exponent * std::log(e));
    return fit;
}

PowerLawFit power_law_fit(const DiffractionContext& ctx, int k,
                          std::span<const double> eps_grid, uint64_t q_max) {
    if (eps_grid.size() < 5) throw std::invalid_argument("power_law_fit: need >= 5 epsilons");
    require_increasing(eps_grid);
    for (double e : eps_grid)
        if (!(e > 0.0 && e <= 0.1))
            throw std::domain_error("power_law_fit: epsilon must lie in (0, 0.1]");
    if (!(eps_grid.back() / eps_grid.front() >= 100.0))
        throw std::invalid_argument("power_law_fit: grid must span at least two decades");

    std::vector<std::pair<double, double>> pts;
    for (double e : eps_grid) pts.emplace_back(e, ctx.z_direct(k, e, q_max).value.value);
    return fit_power_law(pts);
}

}  // namespace kfree
