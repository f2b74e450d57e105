#include "mtg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "mtg/rng.hpp"

namespace mtg {

namespace {

const boost::math::normal_distribution<double> kStdNormal(0.0, 1.0);

double normal_quantile(double q) { return boost::math::quantile(kStdNormal, q); }
double normal_cdf(double z) { return boost::math::cdf(kStdNormal, z); }

void require_confidence(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("confidence must lie in (0, 1)");
}

double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

/// Linear-interpolation quantile of an ascending-sorted sample.
double sorted_quantile(const std::vector<double>& sorted, double q) {
    const std::size_t n = sorted.size();
    if (q <= 0.0) return sorted.front();
    if (q >= 1.0) return sorted.back();
    const double pos = q * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    if (lo + 1 >= n) return sorted.back();
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::vector<double> resample_means(const std::vector<double>& values, int resamples,
                                   std::uint64_t seed) {
    const std::size_t n = values.size();
    std::vector<double> means(static_cast<std::size_t>(resamples));
#pragma omp parallel for schedule(static)
    for (int b = 0; b < resamples; ++b) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(b)));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += values[rng.next_below(n)];
        means[static_cast<std::size_t>(b)] = s / static_cast<double>(n);
    }
    return means;
}

void require_bootstrap_input(const std::vector<double>& values, int resamples) {
    if (values.size() < 2)
        throw std::invalid_argument("bootstrap needs at least 2 values");
    if (resamples < 2) throw std::invalid_argument("bootstrap needs at least 2 resamples");
}

// Average ranks of |d| ascending; ties share the mean rank of their run.
std::vector<double> average_ranks(const std::vector<double>& abs_values) {
    const std::size_t n = abs_values.size();
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return abs_values[a] < abs_values[b];
    });
    std::vector<double> ranks(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && abs_values[order[j + 1]] == abs_values[order[i]]) ++j;
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = shared;
        i = j + 1;
    }
    return ranks;
}

}  // namespace

Interval wilson_interval(int wins, int n, double confidence) {
    if (n <= 0) throw std::invalid_argument("wilson_interval needs n >= 1");
    if (wins < 0 || wins > n) throw std::invalid_argument("wins outside [0, n]");
    require_confidence(confidence);
    const double z = normal_quantile(1.0 - (1.0 - confidence) / 2.0);
    const double nn = static_cast<double>(n);
    const double phat = static_cast<double>(wins) / nn;
    const double z2 = z * z;
    const double denom = 1.0 + z2 / nn;
    const double center = (phat + z2 / (2.0 * nn)) / denom;
    const double half =
        z * std::sqrt(phat * (1.0 - phat) / nn + z2 / (4.0 * nn * nn)) / denom;
    Interval out;
    out.lo = wins == 0 ? 0.0 : std::max(0.0, center - half);
    out.hi = wins == n ? 1.0 : std::min(1.0, center + half);
    return out;
}

Interval percentile_bootstrap_ci(const std::vector<double>& values, int resamples,
                                 double confidence, std::uint64_t seed) {
    require_bootstrap_input(values, resamples);
    require_confidence(confidence);
    std::vector<double> means = resample_means(values, resamples, seed);
    std::sort(means.begin(), means.end());
    const double alpha = 1.0 - confidence;
    return {sorted_quantile(means, alpha / 2.0), sorted_quantile(means, 1.0 - alpha / 2.0)};
}

Interval bca_bootstrap_ci(const std::vector<double>& values, int resamples,
                          double confidence, std::uint64_t seed) {
    require_bootstrap_input(values, resamples);
    require_confidence(confidence);
    const double theta = mean_of(values);
    std::vector<double> means = resample_means(values, resamples, seed);
    std::sort(means.begin(), means.end());
    if (means.front() == means.back()) return {theta, theta};

    const double b = static_cast<double>(resamples);
    long below = 0;
    for (double m : means)
        if (m < theta) ++below;
    const double frac =
        std::min(1.0 - 1.0 / (b + 1.0), std::max(1.0 / (b + 1.0), below / b));
    const double z0 = normal_quantile(frac);

    // Jackknife acceleration.
    const std::size_t n = values.size();
    double total = 0.0;
    for (double v : values) total += v;
    std::vector<double> loo(n);
    double loo_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        loo[i] = (total - values[i]) / static_cast<double>(n - 1);
        loo_mean += loo[i];
    }
    loo_mean /= static_cast<double>(n);
    double num = 0.0, den = 0.0;
    for (double v : loo) {
        const double d = loo_mean - v;
        num += d * d * d;
        den += d * d;
    }
    const double accel = den > 0.0 ? num / (6.0 * std::pow(den, 1.5)) : 0.0;

    const double alpha = 1.0 - confidence;
    const auto adjusted = [&](double q) {
        const double zq = normal_quantile(q);
        const double denom = 1.0 - accel * (z0 + zq);
        if (denom <= 0.0) return q < 0.5 ? 0.0 : 1.0;
        return normal_cdf(z0 + (z0 + zq) / denom);
    };
    return {sorted_quantile(means, adjusted(alpha / 2.0)),
            sorted_quantile(means, adjusted(1.0 - alpha / 2.0))};
}

TestResult paired_bootstrap_test(const std::vector<double>& x, const std::vector<double>& y,
                                 int resamples, std::uint64_t seed) {
    if (x.size() != y.size())
        throw std::invalid_argument("paired test needs aligned samples");
    if (x.size() < 2) throw std::invalid_argument("paired test needs at least 2 pairs");
    if (resamples < 2) throw std::invalid_argument("paired test needs at least 2 resamples");
    const std::size_t n = x.size();
    std::vector<double> centered(n);
    double dbar = 0.0;
    for (std::size_t i = 0; i < n; ++i) dbar += x[i] - y[i];
    dbar /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) centered[i] = x[i] - y[i] - dbar;

    const double threshold = std::abs(dbar);
    long hits = 0;
#pragma omp parallel for schedule(static) reduction(+ : hits)
    for (int b = 0; b < resamples; ++b) {
        Rng rng(Rng::mix(seed, static_cast<std::uint64_t>(b)));
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += centered[rng.next_below(n)];
        if (std::abs(s / static_cast<double>(n)) >= threshold) ++hits;
    }
    TestResult out;
    out.statistic = dbar;
    out.p_value = std::max(1.0 / resamples,
                           static_cast<double>(hits) / static_cast<double>(resamples));
    out.method = "paired-bootstrap";
    return out;
}

TestResult welch_t(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() < 2 || y.size() < 2)
        throw std::invalid_argument("welch_t needs at least 2 values per sample");
    const double nx = static_cast<double>(x.size());
    const double ny = static_cast<double>(y.size());
    const double mx = mean_of(x);
    const double my = mean_of(y);
    double vx = 0.0, vy = 0.0;
    for (double v : x) vx += (v - mx) * (v - mx);
    for (double v : y) vy += (v - my) * (v - my);
    vx /= nx - 1.0;
    vy /= ny - 1.0;
    const double sx = vx / nx;
    const double sy = vy / ny;
    if (sx + sy <= 0.0) throw std::invalid_argument("welch_t: both samples are constant");
    const double t = (mx - my) / std::sqrt(sx + sy);
    const double df = (sx + sy) * (sx + sy) /
                      (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    const boost::math::students_t_distribution<double> dist(df);
    TestResult out;
    out.statistic = t;
    out.df = df;
    out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    out.method = "welch-t";
    return out;
}

WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs, WilcoxonMethod method) {
    std::vector<double> d;
    for (double v : diffs)
        if (v != 0.0) d.push_back(v);
    if (d.empty())
        throw std::invalid_argument("wilcoxon_signed_rank: all differences are zero");
    const std::size_t n = d.size();
    std::vector<double> abs_d(n);
    for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::abs(d[i]);
    const std::vector<double> ranks = average_ranks(abs_d);

    WilcoxonResult out;
    out.n_used = static_cast<int>(n);
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] > 0.0) out.w_plus += ranks[i];

    const bool use_exact =
        method == WilcoxonMethod::exact || (method == WilcoxonMethod::auto_select && n <= 25);
    if (use_exact) {
        // Doubled ranks are exact integers even under tie averaging, so the
        // null distribution enumerates by subset-sum counting.
        std::vector<long> r2(n);
        long w2_max = 0;
        for (std::size_t i = 0; i < n; ++i) {
            r2[i] = std::lround(2.0 * ranks[i]);
            w2_max += r2[i];
        }
        std::vector<double> count(static_cast<std::size_t>(w2_max) + 1, 0.0);
        count[0] = 1.0;
        for (long r : r2)
            for (long w = w2_max; w >= r; --w)
                count[static_cast<std::size_t>(w)] += count[static_cast<std::size_t>(w - r)];
        const double patterns = std::pow(2.0, static_cast<double>(n));
        const long w2 = std::lround(2.0 * out.w_plus);
        double le = 0.0, ge = 0.0;
        for (long w = 0; w <= w2_max; ++w) {
            if (w <= w2) le += count[static_cast<std::size_t>(w)];
            if (w >= w2) ge += count[static_cast<std::size_t>(w)];
        }
        out.exact = true;
        out.p_greater = ge / patterns;
        out.p_two_sided = std::min(1.0, 2.0 * std::min(le, ge) / patterns);
        return out;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    std::vector<double> sorted_abs = abs_d;
    std::sort(sorted_abs.begin(), sorted_abs.end());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && sorted_abs[j + 1] == sorted_abs[i]) ++j;
        const double t = static_cast<double>(j - i + 1);
        var -= (t * t * t - t) / 48.0;
        i = j + 1;
    }
    const double sd = std::sqrt(var);
    const double diff = out.w_plus - mean;
    const double cc = diff > 0.0 ? -0.5 : (diff < 0.0 ? 0.5 : 0.0);
    const double z = sd > 0.0 ? (diff + cc) / sd : 0.0;
    out.exact = false;
    out.p_two_sided = std::min(1.0, 2.0 * (1.0 - normal_cdf(std::abs(z))));
    out.p_greater = sd > 0.0 ? 1.0 - normal_cdf((diff - 0.5) / sd) : (diff >= 0.0 ? 1.0 : 0.0);
    return out;
}

double hodges_lehmann(const std::vector<double>& values) {
    if (values.empty()) throw std::invalid_argument("hodges_lehmann: empty input");
    std::vector<double> walsh;
    walsh.reserve(values.size() * (values.size() + 1) / 2);
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = i; j < values.size(); ++j)
            walsh.push_back((values[i] + values[j]) / 2.0);
    std::sort(walsh.begin(), walsh.end());
    const std::size_t m = walsh.size();
    return m % 2 == 1 ? walsh[m / 2] : (walsh[m / 2 - 1] + walsh[m / 2]) / 2.0;
}

std::vector<double> holm_bonferroni(const std::vector<double>& p_values) {
    const std::size_t m = p_values.size();
    for (double p : p_values)
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("holm_bonferroni: p outside [0, 1]");
    std::vector<std::size_t> order(m);
    for (std::size_t i = 0; i < m; ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return p_values[a] < p_values[b]; });
    std::vector<double> adjusted(m, 0.0);
    double running = 0.0;
    for (std::size_t r = 0; r < m; ++r) {
        const double scaled = p_values[order[r]] * static_cast<double>(m - r);
        running = std::max(running, scaled);
        adjusted[order[r]] = std::min(1.0, running);
    }
    return adjusted;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw std::invalid_argument("pearson: length mismatch");
    if (x.size() < 2) throw std::invalid_argument("pearson: needs at least 2 pairs");
    const double n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double cov = 0.0, vx = 0.0, vy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        cov += dx * dy;
        vx += dx * dx;
        vy += dy * dy;
    }
    const double denom = std::sqrt(vx) * std::sqrt(vy);
    if (denom == 0.0) return 0.0;
    return std::min(1.0, std::max(-1.0, cov / denom));
}

std::optional<double> sign_agreement(const std::vector<double>& a,
                                     const std::vector<double>& e) {
    if (a.size() != e.size()) throw std::invalid_argument("sign_agreement: length mismatch");
    long total = 0, match = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] == 0.0 || e[i] == 0.0) continue;
        ++total;
        if ((a[i] > 0.0) == (e[i] > 0.0)) ++match;
    }
    if (total == 0) return std::nullopt;
    return static_cast<double>(match) / static_cast<double>(total);
}

double transfer_gap_pp(double in_dist, double held_out) {
    if (!(in_dist >= 0.0 && in_dist <= 1.0 && held_out >= 0.0 && held_out <= 1.0))
        throw std::invalid_argument("transfer_gap_pp: rates must lie in [0, 1]");
    return (in_dist - held_out) * 100.0;
}

}  // namespace mtg
