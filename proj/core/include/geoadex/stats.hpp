#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace geoadex {

double mean(const std::vector<double>& v);
double sample_stddev(const std::vector<double>& v);

/// Two-sided 95% Student-t critical value for the given degrees of freedom.
double t_critical_95(std::int64_t df);

/// Half-width of the 95% confidence interval of the mean of v (t-based).
/// NaN for fewer than two values.
double ci95_halfwidth(const std::vector<double>& v);

/// Spearman rank correlation; ties get average ranks.
double spearman_rho(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace geoadex
