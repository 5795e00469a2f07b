#pragma once

#include <functional>
#include <span>
#include <vector>

namespace ionbath {

// y = intercept + slope * x, weights w_i = 1/sigma_i^2.
struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double slope_sigma = 0.0;
    double intercept_sigma = 0.0;
    double chi2 = 0.0;
    int dof = 0;
};

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> weight);

struct SimplexResult {
    std::vector<double> x;
    double fval = 0.0;
    int evaluations = 0;
    bool converged = false;
};

// Nelder-Mead downhill simplex. `scale` sets the initial simplex edge per
// coordinate. Stops when the simplex collapses below ftol (relative spread of
// function values) or max_evals is hit.
SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> start, std::span<const double> scale,
                          double ftol = 1e-10, int max_evals = 20000);

// Regularized incomplete gamma functions P(a,x) and Q(a,x) = 1 - P(a,x).
double gamma_p(double a, double x);
double gamma_q(double a, double x);

// Survival function of the chi-square distribution with k dof.
double chi2_survival(double x, double k);

}  // namespace ionbath
