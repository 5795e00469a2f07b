#include "ionbath/fitting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace ionbath {

LineFit weighted_line_fit(std::span<const double> x, std::span<const double> y,
                          std::span<const double> weight) {
    if (x.size() != y.size() || x.size() != weight.size())
        throw std::invalid_argument("weighted_line_fit: size mismatch");
    if (x.size() < 2) throw std::invalid_argument("weighted_line_fit: need >= 2 points");

    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double w = weight[i];
        if (!(w >= 0)) throw std::invalid_argument("weighted_line_fit: negative weight");
        sw += w;
        swx += w * x[i];
        swy += w * y[i];
        swxx += w * x[i] * x[i];
        swxy += w * x[i] * y[i];
    }
    double delta = sw * swxx - swx * swx;
    if (!(delta > 0)) throw std::invalid_argument("weighted_line_fit: degenerate abscissae");

    LineFit fit;
    fit.intercept = (swxx * swy - swx * swxy) / delta;
    fit.slope = (sw * swxy - swx * swy) / delta;
    fit.intercept_sigma = std::sqrt(swxx / delta);
    fit.slope_sigma = std::sqrt(sw / delta);
    for (size_t i = 0; i < x.size(); ++i) {
        double r = y[i] - fit.intercept - fit.slope * x[i];
        fit.chi2 += weight[i] * r * r;
    }
    fit.dof = static_cast<int>(x.size()) - 2;
    return fit;
}

SimplexResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                          std::span<const double> start, std::span<const double> scale,
                          double ftol, int max_evals) {
    const int n = static_cast<int>(start.size());
    if (n < 1 || scale.size() != start.size())
        throw std::invalid_argument("nelder_mead: bad dimensions");

    std::vector<std::vector<double>> pts(n + 1, std::vector<double>(start.begin(), start.end()));
    for (int i = 0; i < n; ++i) pts[i + 1][i] += scale[i];

    SimplexResult res;
    std::vector<double> fv(n + 1);
    for (int i = 0; i <= n; ++i) {
        fv[i] = f(pts[i]);
        ++res.evaluations;
    }

    std::vector<double> centroid(n), trial(n), trial2(n);
    while (res.evaluations < max_evals) {
        // order: lo = best, hi = worst, nh = second worst
        int lo = 0, hi = 0, nh = 0;
        for (int i = 1; i <= n; ++i) {
            if (fv[i] < fv[lo]) lo = i;
            if (fv[i] > fv[hi]) hi = i;
        }
        nh = (hi == 0) ? 1 : 0;
        for (int i = 0; i <= n; ++i)
            if (i != hi && fv[i] > fv[nh]) nh = i;

        double spread = 2.0 * std::abs(fv[hi] - fv[lo]) /
                        (std::abs(fv[hi]) + std::abs(fv[lo]) + 1e-300);
        if (spread < ftol) {
            res.converged = true;
            res.x = pts[lo];
            res.fval = fv[lo];
            return res;
        }

        for (int j = 0; j < n; ++j) {
            double s = 0;
            for (int i = 0; i <= n; ++i)
                if (i != hi) s += pts[i][j];
            centroid[j] = s / n;
        }

        auto move = [&](double coef, std::vector<double>& out) {
            for (int j = 0; j < n; ++j) out[j] = centroid[j] + coef * (pts[hi][j] - centroid[j]);
            ++res.evaluations;
            return f(out);
        };

        double fr = move(-1.0, trial);  // reflection
        if (fr < fv[lo]) {
            double fe = move(-2.0, trial2);  // expansion
            if (fe < fr) {
                pts[hi] = trial2;
                fv[hi] = fe;
            } else {
                pts[hi] = trial;
                fv[hi] = fr;
            }
        } else if (fr < fv[nh]) {
            pts[hi] = trial;
            fv[hi] = fr;
        } else {
            double fc = move(0.5, trial2);  // contraction
            if (fc < fv[hi]) {
                pts[hi] = trial2;
                fv[hi] = fc;
            } else {  // shrink toward best
                for (int i = 0; i <= n; ++i) {
                    if (i == lo) continue;
                    for (int j = 0; j < n; ++j) pts[i][j] = 0.5 * (pts[i][j] + pts[lo][j]);
                    fv[i] = f(pts[i]);
                    ++res.evaluations;
                }
            }
        }
    }

    int lo = 0;
    for (int i = 1; i <= n; ++i)
        if (fv[i] < fv[lo]) lo = i;
    res.x = pts[lo];
    res.fval = fv[lo];
    return res;
}

namespace {

double gamma_p_series(double a, double x) {
    double ap = a, sum = 1.0 / a, del = sum;
    for (int i = 0; i < 500; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_contfrac(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i < 500; ++i) {
        double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (!(a > 0) || x < 0) throw std::invalid_argument("gamma_p: domain");
    if (x == 0) return 0.0;
    return (x < a + 1.0) ? gamma_p_series(a, x) : 1.0 - gamma_q_contfrac(a, x);
}

double gamma_q(double a, double x) {
    if (!(a > 0) || x < 0) throw std::invalid_argument("gamma_q: domain");
    if (x == 0) return 1.0;
    return (x < a + 1.0) ? 1.0 - gamma_p_series(a, x) : gamma_q_contfrac(a, x);
}

double chi2_survival(double x, double k) {
    return gamma_q(0.5 * k, 0.5 * x);
}

}  // namespace ionbath
