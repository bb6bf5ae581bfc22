#pragma once

#include <cstddef>
#include <vector>

namespace gatex::stats {

// standard normal CDF, via erfc
double normal_cdf(double x);

// inverse standard normal CDF, rational approximation polished with one
// Halley step against the erfc-based CDF; |error| well below 1e-12 inside
// (1e-300, 1 - 1e-16). Throws on p outside (0,1).
double normal_quantile(double p);

// slow bisection inverse of normal_cdf; used as an independent oracle in tests
double normal_quantile_bisect(double p, double tol = 1e-12);

double mean(const std::vector<double>& x);
// sample variance, denominator n-1 (0 when n < 2)
double sample_var(const std::vector<double>& x);

double sigmoid(double t);
double clip(double p, double lo, double hi);

} // namespace gatex::stats
