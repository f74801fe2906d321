#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "kfree/diffraction.hpp"
#include "kfree/sieve.hpp"

namespace kfree {

struct ResidualSeries {
    std::vector<double> x;          // strictly increasing sample points
    std::vector<double> main_term;  // predicted main term at x
    std::vector<double> exact;      // exact (or tail-bounded) evaluation
    std::vector<double> residual;   // exact - main
    std::vector<double> normalized; // residual / x^alpha for the series' alpha
};

struct PowerLawFit {
    double exponent = 0.0;
    double log_amplitude = 0.0;  // natural log
    std::vector<double> residuals;
    std::vector<std::pair<double, double>> points;  // (eps, Z) pairs used

    double amplitude() const;
};

// sum_{t <= u} |mu(t)| prod_{p|t} (1 - 2 p^-k)^-1, exact enumeration.
double weighted_squarefree_sum(const SieveTables& tables, int k, double u);
std::vector<double> weighted_squarefree_sum_at(const SieveTables& tables, int k,
                                               std::span<const double> grid);

// sum_{m <= u} mu(m)^2 prod_{p|m} (1 + delta(p)); requires |delta(p)| <= 4/p^2
// for all primes p <= u (checked).
double weighted_sum_generic(const SieveTables& tables,
                            const std::function<double(uint64_t)>& delta, double u);

// Residuals of the squarefree count against x/zeta(2) (times
// prod_{p|a}(1+1/p)^-1 for the coprime variant), normalized by x^(1/2).
ResidualSeries walfisz_residuals(std::span<const double> x_grid, uint64_t a = 1,
                                 const SquarefreeCountOptions& opts = {});

// z_k(c)/xi_k against gamma_k/(2k-1) c^(-2+1/k); normalized by c^(-2+1/(2k)).
ResidualSeries zk_asymptotic_check(const DiffractionContext& ctx, int k,
                                   std::span<const uint64_t> c_grid);

// Ordinary least squares of log Z on log eps.
PowerLawFit fit_power_law(std::span<const std::pair<double, double>> points);

// Fit from fresh direct evaluations; needs >= 5 eps values spanning >= 2
// decades, all in (0, 0.1].  q_max is passed through to z_direct (0 = its
// default); larger values sharpen the small-eps points.
PowerLawFit power_law_fit(const DiffractionContext& ctx, int k,
                          std::span<const double> eps_grid, uint64_t q_max = 0);

}  // namespace kfree
