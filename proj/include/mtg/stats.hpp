#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace mtg {

constexpr int kDefaultResamples = 10000;

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

/// Wilson score interval for a binomial proportion. Exact 0/1 endpoints at the
/// boundary counts.
Interval wilson_interval(int wins, int n, double confidence = 0.95);

/**
 * Bootstrap machinery. Resample b draws its generator from mix(seed, b), so
 * results are deterministic for a given (data, resamples, seed) regardless of
 * how the resampling loop is scheduled.
 */
Interval percentile_bootstrap_ci(const std::vector<double>& values, int resamples,
                                 double confidence, std::uint64_t seed);
Interval bca_bootstrap_ci(const std::vector<double>& values, int resamples,
                          double confidence, std::uint64_t seed);

struct TestResult {
    double statistic = 0.0;
    double df = 0.0;  // Welch-Satterthwaite dof; unused elsewhere
    double p_value = 1.0;
    std::string method;
};

/// Two-sided test of mean(x - y) = 0 by resampling mean-centered paired
/// differences; p is floored at 1/resamples.
TestResult paired_bootstrap_test(const std::vector<double>& x, const std::vector<double>& y,
                                 int resamples, std::uint64_t seed);

TestResult welch_t(const std::vector<double>& x, const std::vector<double>& y);

enum class WilcoxonMethod : std::uint8_t { auto_select, exact, normal_approx };

struct WilcoxonResult {
    double w_plus = 0.0;  // sum of ranks of the positive differences
    int n_used = 0;       // sample size after dropping zero differences
    bool exact = false;
    double p_two_sided = 1.0;
    double p_greater = 1.0;  // one-sided P(W+ >= observed) under the null
};

/// Exact signed-rank null distribution up to n = 25 (zeros dropped, average
/// ranks for ties); tie-corrected normal approximation with continuity
/// correction beyond.
WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& diffs,
                                    WilcoxonMethod method = WilcoxonMethod::auto_select);

/// Median of the Walsh averages (v_i + v_j)/2 over i <= j.
double hodges_lehmann(const std::vector<double>& values);

/// Step-down adjustment; returns adjusted p-values in the input order.
std::vector<double> holm_bonferroni(const std::vector<double>& p_values);

/// Sample correlation; returns 0 when either side is constant (callers that
/// need a different degenerate convention clamp on their side).
double pearson(const std::vector<double>& x, const std::vector<double>& y);

/// Fraction of sign matches over the pairs where both entries are nonzero;
/// empty restriction comes back as an absent value.
std::optional<double> sign_agreement(const std::vector<double>& a,
                                     const std::vector<double>& e);

/// in_dist - held_out in percentage points; positive means a generalisation drop.
double transfer_gap_pp(double in_dist, double held_out);

}  // namespace mtg
