#include "support/oracles.hpp"

#include <cmath>

namespace landscape::test {

namespace {

constexpr double kHalfLog2Pi = 0.91893853320467274178;

double simpson_rule(double a, double b, double fa, double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                double fb, double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m);
    const double rm = 0.5 * (m + b);
    const double flm = f(lm);
    const double frm = f(rm);
    const double left = simpson_rule(a, m, fa, flm, fm);
    const double right = simpson_rule(m, b, fm, frm, fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
        return left + right + delta / 15.0;
    }
    return adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
    if (!(b > a)) return 0.0;
    // Seed the recursion with a few panels so narrow features are not missed.
    constexpr int kPanels = 16;
    double total = 0.0;
    const double h = (b - a) / kPanels;
    for (int p = 0; p < kPanels; ++p) {
        const double pa = a + p * h;
        const double pb = p + 1 == kPanels ? b : pa + h;
        const double pm = 0.5 * (pa + pb);
        const double fa = f(pa);
        const double fm = f(pm);
        const double fb = f(pb);
        total += adaptive(f, pa, pb, fa, fm, fb, simpson_rule(pa, pb, fa, fm, fb), tol / kPanels, 40);
    }
    return total;
}

double oracle_log_normal_sf(double z) {
    if (z < 0.0) {
        // Q(z) = 1 - Q(-z); the complement is at most 1/2 so log1p is exact.
        return std::log1p(-std::exp(oracle_log_normal_sf(-z)));
    }
    // Q(z) = phi(z) * int_0^inf exp(-u^2/2 - z u) du; the integrand starts at
    // 1 and is dominated by exp(-u^2/2), so [0, 14] covers it to ~1e-43.
    const auto integrand = [z](double u) { return std::exp(-0.5 * u * u - z * u); };
    const double integral = integrate(integrand, 0.0, 14.0, 1e-16);
    return -0.5 * z * z - kHalfLog2Pi + std::log(integral);
}

double oracle_log_normal_cdf(double x) { return oracle_log_normal_sf(-x); }

double oracle_normal_interval_prob(double lo, double hi) {
    const auto density = [](double u) { return std::exp(-0.5 * u * u - kHalfLog2Pi); };
    return integrate(density, lo, hi, 1e-16);
}

double oracle_mixture_interval_prob(const GaussianMixture& gm, double lo, double hi) {
    double p = 0.0;
    for (std::size_t k = 0; k < gm.components(); ++k) {
        const double a = (lo - gm.means[k]) / gm.stddevs[k];
        const double b = (hi - gm.means[k]) / gm.stddevs[k];
        p += gm.weights[k] * oracle_normal_interval_prob(a, b);
    }
    return p;
}

double oracle_mixture_sf(const GaussianMixture& gm, double b) {
    double p = 0.0;
    for (std::size_t k = 0; k < gm.components(); ++k) {
        const double z = (b - gm.means[k]) / gm.stddevs[k];
        p += gm.weights[k] * std::exp(oracle_log_normal_sf(z));
    }
    return p;
}

double oracle_expected_cost(const GaussianMixture& gm, double b) {
    if (b <= 0.0) return 0.0;
    double total = 0.0;
    for (std::size_t k = 0; k < gm.components(); ++k) {
        const double mu = gm.means[k];
        const double sd = gm.stddevs[k];
        const auto f = [&](double w) {
            const double z = (w - mu) / sd;
            return w * std::exp(-0.5 * z * z - kHalfLog2Pi) / sd;
        };
        // Clip per component to where its density lives.
        const double lo = std::max(0.0, mu - 14.0 * sd);
        const double hi = std::min(b, mu + 14.0 * sd);
        if (hi > lo) total += gm.weights[k] * integrate(f, lo, hi, 1e-13);
    }
    return total;
}

std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& loss,
                                std::vector<double> at, const std::vector<std::size_t>& coords,
                                double h) {
    std::vector<double> grad(coords.size());
    for (std::size_t i = 0; i < coords.size(); ++i) {
        const std::size_t c = coords[i];
        const double orig = at[c];
        at[c] = orig + h;
        const double up = loss(at);
        at[c] = orig - h;
        const double down = loss(at);
        at[c] = orig;
        grad[i] = (up - down) / (2.0 * h);
    }
    return grad;
}

}  // namespace landscape::test
