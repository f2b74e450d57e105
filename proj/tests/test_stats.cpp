#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include <mtg/rng.hpp>
#include <mtg/stats.hpp>

using namespace mtg;

namespace {

/// Brute-force exact one- and two-sided signed-rank p-values by enumerating
/// all 2^n sign assignments over the ranked absolute differences.
std::pair<double, double> wilcoxon_brute(const std::vector<double>& diffs) {
    std::vector<double> mags;
    for (double d : diffs)
        if (d != 0.0) mags.push_back(std::abs(d));
    const int n = static_cast<int>(mags.size());
    // Average ranks over ties.
    std::vector<double> sorted = mags;
    std::sort(sorted.begin(), sorted.end());
    auto rank_of = [&](double m) {
        double lo = 0, hi = 0;
        for (int i = 0; i < n; ++i) {
            if (sorted[i] < m) lo += 1;
            if (sorted[i] <= m) hi += 1;
        }
        return (lo + 1 + hi) / 2.0;
    };
    double w_obs = 0.0;
    std::vector<double> ranks;
    for (double d : diffs) {
        if (d == 0.0) continue;
        const double r = rank_of(std::abs(d));
        ranks.push_back(r);
        if (d > 0) w_obs += r;
    }
    int ge = 0, le = 0;
    const int total = 1 << n;
    for (int mask = 0; mask < total; ++mask) {
        double w = 0.0;
        for (int i = 0; i < n; ++i)
            if (mask & (1 << i)) w += ranks[static_cast<std::size_t>(i)];
        if (w >= w_obs - 1e-12) ge += 1;
        if (w <= w_obs + 1e-12) le += 1;
    }
    const double p_greater = static_cast<double>(ge) / total;
    const double p_two = std::min(1.0, 2.0 * std::min(static_cast<double>(ge) / total,
                                                      static_cast<double>(le) / total));
    return {p_two, p_greater};
}

}  // namespace

TEST_CASE("wilson interval matches the closed form") {
    // Hand-evaluated score interval: n=100, 60 wins, z for 95%.
    const double z = 1.959963984540054;
    const double n = 100, p = 0.6;
    const double denom = 1 + z * z / n;
    const double center = (p + z * z / (2 * n)) / denom;
    const double half = z * std::sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom;
    const Interval iv = wilson_interval(60, 100);
    CHECK(iv.lo == doctest::Approx(center - half).epsilon(1e-9));
    CHECK(iv.hi == doctest::Approx(center + half).epsilon(1e-9));
    // Boundary counts clamp exactly.
    const Interval zero = wilson_interval(0, 50);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi > 0.0);
    CHECK(zero.hi < 0.2);
    const Interval full = wilson_interval(50, 50);
    CHECK(full.hi == 1.0);
    CHECK(full.lo > 0.8);
    CHECK_THROWS(wilson_interval(5, 0));
    CHECK_THROWS(wilson_interval(6, 5));
}

TEST_CASE("wilson intervals cover the truth at roughly the nominal rate") {
    Rng rng(2000);
    const double truth = 0.35;
    int covered = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        int wins = 0;
        const int n = 120;
        for (int i = 0; i < n; ++i)
            if (rng.next_double() < truth) wins += 1;
        const Interval iv = wilson_interval(wins, n);
        if (iv.lo <= truth && truth <= iv.hi) covered += 1;
    }
    const double rate = static_cast<double>(covered) / trials;
    CHECK(rate > 0.91);
    CHECK(rate <= 1.0);
}

TEST_CASE("exact wilcoxon agrees with full enumeration on small samples") {
    const std::vector<std::vector<double>> cases = {
        {1.5, -0.5, 2.0, 3.0, -1.0},
        {0.3, 0.7, 1.1, 1.9, 2.3, -0.2, -1.4},
        {2, 2, -2, 1, 3, -1, 1, 4},  // ties in magnitudes
        {5, 4, 3, 2, 1},             // all positive
        {-1, -2, -3, -4},            // all negative
        {1, -1, 2, -2, 0, 3},        // zeros dropped
    };
    for (const auto& diffs : cases) {
        const WilcoxonResult r = wilcoxon_signed_rank(diffs, WilcoxonMethod::exact);
        const auto [p_two, p_greater] = wilcoxon_brute(diffs);
        CHECK(r.exact);
        CHECK(r.p_two_sided == doctest::Approx(p_two).epsilon(1e-9));
        CHECK(r.p_greater == doctest::Approx(p_greater).epsilon(1e-9));
    }
}

TEST_CASE("wilcoxon normal approximation tracks the exact tail") {
    Rng rng(77);
    std::vector<double> diffs(24);
    for (double& d : diffs) d = rng.next_gaussian() + 0.4;
    const WilcoxonResult exact = wilcoxon_signed_rank(diffs, WilcoxonMethod::exact);
    const WilcoxonResult approx =
        wilcoxon_signed_rank(diffs, WilcoxonMethod::normal_approx);
    CHECK(exact.exact);
    CHECK(!approx.exact);
    CHECK(approx.p_two_sided == doctest::Approx(exact.p_two_sided).epsilon(0.15));
    CHECK(approx.w_plus == exact.w_plus);
    // auto_select stays exact through n = 25 and switches beyond.
    std::vector<double> big(26);
    for (double& d : big) d = rng.next_gaussian();
    CHECK(!wilcoxon_signed_rank(big, WilcoxonMethod::auto_select).exact);
    CHECK(wilcoxon_signed_rank(diffs, WilcoxonMethod::auto_select).exact);
}

TEST_CASE("hodges-lehmann equals the brute-force walsh median") {
    const std::vector<std::vector<double>> cases = {
        {1.0},
        {3.0, 1.0},
        {1, 2, 3, 4, 5},
        {-2.5, 0.0, 4.0, 1.5, 1.5, -3.0},
        {10, -10, 2, 7, -4, 5, 1, 0},
    };
    for (const auto& values : cases) {
        std::vector<double> walsh;
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t j = i; j < values.size(); ++j)
                walsh.push_back((values[i] + values[j]) / 2.0);
        std::sort(walsh.begin(), walsh.end());
        const std::size_t m = walsh.size();
        const double want =
            m % 2 == 1 ? walsh[m / 2] : (walsh[m / 2 - 1] + walsh[m / 2]) / 2.0;
        CHECK(hodges_lehmann(values) == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK_THROWS(hodges_lehmann({}));
}

TEST_CASE("holm-bonferroni adjusts a known family correctly") {
    // Worked example: ordered p (0.0001, 0.0001, 0.4881, 0.0001, 0.4881) with
    // m = 5 gives adjusted (0.0005, 0.0005, 0.9762, 0.0005, 0.9762).
    const std::vector<double> adj =
        holm_bonferroni({0.0001, 0.0001, 0.4881, 0.0001, 0.4881});
    REQUIRE(adj.size() == 5);
    CHECK(adj[0] == doctest::Approx(0.0005).epsilon(1e-9));
    CHECK(adj[1] == doctest::Approx(0.0005).epsilon(1e-9));
    CHECK(adj[2] == doctest::Approx(0.9762).epsilon(1e-9));
    CHECK(adj[3] == doctest::Approx(0.0005).epsilon(1e-9));
    CHECK(adj[4] == doctest::Approx(0.9762).epsilon(1e-9));

    // Step-down property: the smallest p gets multiplied by m, later ones by
    // their remaining rank, with running monotonicity.
    const std::vector<double> adj2 = holm_bonferroni({0.01, 0.02, 0.03});
    CHECK(adj2[0] == doctest::Approx(0.03));
    CHECK(adj2[1] == doctest::Approx(0.04));
    CHECK(adj2[2] == doctest::Approx(0.04));
    // Capped at one.
    const std::vector<double> adj3 = holm_bonferroni({0.9, 0.95});
    CHECK(adj3[0] <= 1.0);
    CHECK(adj3[1] <= 1.0);
    CHECK(holm_bonferroni({}).empty());
}

TEST_CASE("bootstrap intervals are deterministic and order-insensitive in seed") {
    Rng rng(5);
    std::vector<double> values(80);
    for (double& v : values) v = rng.next_gaussian() * 2 + 1;
    const Interval a = percentile_bootstrap_ci(values, 2000, 0.95, 42);
    const Interval b = percentile_bootstrap_ci(values, 2000, 0.95, 42);
    CHECK(a.lo == b.lo);
    CHECK(a.hi == b.hi);
    const Interval c = percentile_bootstrap_ci(values, 2000, 0.95, 43);
    CHECK((a.lo != c.lo || a.hi != c.hi));
    CHECK(a.lo < 1.0);
    CHECK(a.hi > 1.0);
    const Interval bca = bca_bootstrap_ci(values, 2000, 0.95, 42);
    CHECK(bca.lo < bca.hi);
    CHECK(bca.lo < 1.6);
    CHECK(bca.hi > 0.4);
}

TEST_CASE("bootstrap intervals shrink with sample size") {
    Rng rng(9);
    std::vector<double> small(20), large(500);
    for (double& v : small) v = rng.next_gaussian();
    for (double& v : large) v = rng.next_gaussian();
    const Interval is = percentile_bootstrap_ci(small, 3000, 0.95, 7);
    const Interval il = percentile_bootstrap_ci(large, 3000, 0.95, 7);
    CHECK(il.hi - il.lo < is.hi - is.lo);
}

TEST_CASE("paired bootstrap test separates signal from noise") {
    Rng rng(100);
    std::vector<double> x(60), y(60);
    for (std::size_t i = 0; i < x.size(); ++i) {
        y[i] = rng.next_gaussian();
        x[i] = y[i] + 0.8 + 0.3 * rng.next_gaussian();  // strongly paired shift
    }
    const TestResult strong = paired_bootstrap_test(x, y, 4000, 11);
    CHECK(strong.p_value < 0.01);
    CHECK(strong.statistic == doctest::Approx(0.8).epsilon(0.25));
    // Identical samples: no effect, p stays high.
    const TestResult null_case = paired_bootstrap_test(y, y, 4000, 11);
    CHECK(null_case.p_value > 0.9);
    // Floored at 1/resamples, deterministic by seed.
    CHECK(strong.p_value >= 1.0 / 4000);
    const TestResult again = paired_bootstrap_test(x, y, 4000, 11);
    CHECK(again.p_value == strong.p_value);
    CHECK_THROWS(paired_bootstrap_test({1.0}, {1.0, 2.0}, 100, 1));
}

TEST_CASE("welch t on textbook data") {
    // Unequal-variance two-sample test, checked against hand computation.
    const std::vector<double> x{3.1, 2.9, 3.3, 3.0, 3.2};
    const std::vector<double> y{2.0, 2.4, 1.8, 2.2};
    const TestResult r = welch_t(x, y);
    const double mx = 3.1, my = 2.1;
    const double vx = 0.025, vy = 0.06666666666666673;
    const double se = std::sqrt(vx / 5 + vy / 4);
    CHECK(r.statistic == doctest::Approx((mx - my) / se).epsilon(1e-6));
    const double df_num = std::pow(vx / 5 + vy / 4, 2);
    const double df_den = std::pow(vx / 5, 2) / 4 + std::pow(vy / 4, 2) / 3;
    CHECK(r.df == doctest::Approx(df_num / df_den).epsilon(1e-6));
    CHECK(r.p_value < 0.01);
    CHECK(r.method.find("welch") != std::string::npos);
}

TEST_CASE("pearson and sign agreement conventions") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{2, 4, 6, 8, 10};
    CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> z{5, 4, 3, 2, 1};
    CHECK(pearson(x, z) == doctest::Approx(-1.0).epsilon(1e-12));
    CHECK(pearson(x, {1, 1, 1, 1, 1}) == 0.0);  // constant side: zero by convention

    CHECK(sign_agreement({1, -2, 3}, {2, -1, -3}).value() == doctest::Approx(2.0 / 3));
    CHECK(sign_agreement({0, 0}, {1, 2}) == std::nullopt);
    CHECK(sign_agreement({1, 0, -1}, {0.5, 9, -2}).value() == doctest::Approx(1.0));
}

TEST_CASE("transfer gap is reported in signed percentage points") {
    CHECK(transfer_gap_pp(0.761, 0.808) == doctest::Approx(-4.7).epsilon(1e-9));
    CHECK(transfer_gap_pp(0.808, 0.761) == doctest::Approx(4.7).epsilon(1e-9));
    CHECK(transfer_gap_pp(0.5, 0.5) == 0.0);
    CHECK_THROWS(transfer_gap_pp(76.1, 80.8));
}
