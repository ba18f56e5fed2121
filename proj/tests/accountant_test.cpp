#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "dpopt/accountant.hpp"

using namespace dpopt;

namespace {

// Independent direct-summation oracle in extended precision. Usable only
// where exp(j(j-1)/(2 sigma^2)) stays inside the long double range; the
// acceptance suite covers the extreme cells with arbitrary precision.
long double rdp_direct_oracle(int alpha, double q, double sigma) {
    if (alpha < 2 || q <= 0.0) {
        return 0.0L;
    }
    const long double qq = q;
    const long double s2 = static_cast<long double>(sigma) * sigma;
    long double sum = 0.0L;
    for (int j = 0; j <= alpha; ++j) {
        long double binom = 1.0L;
        for (int i = 0; i < j; ++i) {
            binom = binom * static_cast<long double>(alpha - i) / static_cast<long double>(i + 1);
        }
        const long double term = binom * powl(qq, j) * powl(1.0L - qq, alpha - j) *
                                 expl(static_cast<long double>(j) * (j - 1) / (2.0L * s2));
        sum += term;
    }
    return logl(sum) / static_cast<long double>(alpha - 1);
}

double rel_err(double got, long double want) {
    if (want == 0.0L) {
        return std::fabs(got);
    }
    return static_cast<double>(fabsl(got - want) / fabsl(want));
}

}  // namespace

TEST_CASE("rdp value is zero below order two or at zero sampling rate") {
    CHECK(rdp_subsampled_gaussian(1, 0.5, 1.0) == 0.0);
    CHECK(rdp_subsampled_gaussian(0, 0.5, 1.0) == 0.0);
    CHECK(rdp_subsampled_gaussian(8, 0.0, 1.0) == 0.0);
    CHECK(rdp_subsampled_gaussian(8, -0.25, 1.0) == 0.0);
}

TEST_CASE("rdp input validation") {
    CHECK_THROWS_AS(rdp_subsampled_gaussian(2, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(rdp_subsampled_gaussian(2, 0.5, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(rdp_subsampled_gaussian(2, 1.5, 1.0), std::invalid_argument);
}

TEST_CASE("full sampling recovers the plain Gaussian mechanism RDP") {
    for (const double sigma : {0.3, 0.7, 1.0, 2.0}) {
        for (int alpha = 2; alpha <= 64; ++alpha) {
            const double expected = alpha / (2.0 * sigma * sigma);
            const double got = rdp_subsampled_gaussian(alpha, 1.0, sigma);
            CHECK(std::fabs(got - expected) <= 1e-12 * expected);
        }
    }
}

TEST_CASE("rdp matches high-precision reference values") {
    // Frozen from an 80-digit direct summation of the binomial expression.
    CHECK(rel_err(rdp_subsampled_gaussian(2, 0.01, 1.0), 1.7181342207454794e-4L) < 1e-12);
    CHECK(rel_err(rdp_subsampled_gaussian(3, 0.02, 0.7), 5.7247925755491435e-3L) < 1e-12);
    CHECK(rel_err(rdp_subsampled_gaussian(8, 0.1, 1.0), 1.3783614113481266L) < 1e-12);
    CHECK(rel_err(rdp_subsampled_gaussian(2, 1e-4, 10.0), 1.0050167083663029e-10L) < 1e-12);
    CHECK(rel_err(rdp_subsampled_gaussian(64, 0.5, 0.3), 354.85140603879627L) < 1e-12);
}

TEST_CASE("rdp agrees with the direct-summation oracle on a moderate grid") {
    // 1e-8 is the long double oracle's own limit on the tiniest cells (the sum
    // is 1 + ~1e-10 there); the arbitrary-precision oracle in the acceptance
    // suite checks the same grid at 1e-10.
    for (const int alpha : {2, 3, 5, 8, 16, 32, 64}) {
        for (const double q : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 0.9}) {
            for (const double sigma : {0.5, 0.7, 1.0, 2.0, 10.0}) {
                const double got = rdp_subsampled_gaussian(alpha, q, sigma);
                const long double want = rdp_direct_oracle(alpha, q, sigma);
                CHECK(rel_err(got, want) < 1e-8);
            }
        }
    }
}

TEST_CASE("rdp survives ranges where direct summation would overflow") {
    const double v = rdp_subsampled_gaussian(64, 0.5, 0.3);
    CHECK(std::isfinite(v));
    CHECK(v > 0.0);
}

TEST_CASE("rdp is monotone: nondecreasing in q, decreasing in sigma") {
    for (const int alpha : {2, 8, 32, 64}) {
        double prev = 0.0;
        for (const double q : {1e-4, 1e-3, 1e-2, 0.1, 0.5, 1.0}) {
            const double cur = rdp_subsampled_gaussian(alpha, q, 1.0);
            CHECK(cur >= prev);
            prev = cur;
        }
        double prev_sigma = rdp_subsampled_gaussian(alpha, 0.1, 0.3);
        for (const double sigma : {0.5, 0.7, 1.0, 2.0, 10.0}) {
            const double cur = rdp_subsampled_gaussian(alpha, 0.1, sigma);
            CHECK(cur < prev_sigma);
            prev_sigma = cur;
        }
    }
}

TEST_CASE("ledger composes additively") {
    PrivacyLedger ledger(PrivacyLedger::default_orders(), 1.0);
    const int steps = 40;
    for (int i = 0; i < steps; ++i) {
        ledger.record_step(0.01);
    }
    CHECK(ledger.step_count() == steps);
    for (const int alpha : {2, 17, 64}) {
        const double single = rdp_subsampled_gaussian(alpha, 0.01, 1.0);
        CHECK(ledger.rdp_at(alpha) == doctest::Approx(steps * single).epsilon(1e-12));
    }
}

TEST_CASE("zero-rate steps advance the counter but not the budget") {
    PrivacyLedger ledger(PrivacyLedger::default_orders(), 1.0);
    ledger.record_step(0.0);
    CHECK(ledger.step_count() == 1);
    CHECK(ledger.rdp_at(2) == 0.0);
    CHECK_THROWS_AS(ledger.record_step(1.5), std::invalid_argument);
    CHECK_THROWS_AS(ledger.record_step(-0.1), std::invalid_argument);
}

TEST_CASE("mixed-rate accumulation matches a brute-force recomputation") {
    const std::vector<double> rates{0.01, 0.02, 0.01, 0.003, 0.02, 0.0016};
    PrivacyLedger ledger(PrivacyLedger::default_orders(), 0.7);
    for (double q : rates) {
        ledger.record_step(q);
    }
    for (const int alpha : {2, 5, 33, 64}) {
        double expect = 0.0;
        for (double q : rates) {
            expect += rdp_subsampled_gaussian(alpha, q, 0.7);
        }
        CHECK(ledger.rdp_at(alpha) == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("step order does not change the ledger") {
    std::vector<double> rates{0.01, 0.02, 0.005, 0.0016, 0.03, 0.012, 0.02};
    PrivacyLedger forward(PrivacyLedger::default_orders(), 1.0);
    for (double q : rates) {
        forward.record_step(q);
    }
    std::mt19937_64 rng(5);
    std::shuffle(rates.begin(), rates.end(), rng);
    PrivacyLedger shuffled(PrivacyLedger::default_orders(), 1.0);
    for (double q : rates) {
        shuffled.record_step(q);
    }
    for (int alpha = 2; alpha <= 64; ++alpha) {
        CHECK(shuffled.rdp_at(alpha) ==
              doctest::Approx(forward.rdp_at(alpha)).epsilon(1e-14));
    }
}

TEST_CASE("variable-rate accounting never exceeds the worst-case constant rate") {
    const std::vector<double> rates{0.0016, 0.0128, 0.0128, 0.02, 0.005, 0.0128};
    const double q_max = *std::max_element(rates.begin(), rates.end());
    for (int alpha = 2; alpha <= 64; ++alpha) {
        double varq = 0.0;
        for (double q : rates) {
            varq += rdp_subsampled_gaussian(alpha, q, 1.0);
        }
        const double worst = rates.size() * rdp_subsampled_gaussian(alpha, q_max, 1.0);
        CHECK(varq <= worst * (1.0 + 1e-12));
    }
}

TEST_CASE("epsilon of an empty ledger is the pure conversion term") {
    PrivacyLedger ledger(PrivacyLedger::default_orders(), 1.0);
    const OrderEpsilon oe = ledger.epsilon(1e-5);
    CHECK(oe.epsilon == doctest::Approx(std::log(1e5) / 63.0).epsilon(1e-12));
    CHECK(oe.best_order == 64);
    CHECK(oe.delta == 1e-5);
}

TEST_CASE("epsilon is non-increasing in delta") {
    PrivacyLedger ledger(PrivacyLedger::default_orders(), 1.0);
    for (int i = 0; i < 20; ++i) {
        ledger.record_step(0.01);
    }
    double prev = ledger.epsilon(1e-8).epsilon;
    for (const double delta : {1e-7, 1e-6, 1e-5, 1e-4, 1e-3}) {
        const double cur = ledger.epsilon(delta).epsilon;
        CHECK(cur <= prev);
        prev = cur;
    }
    CHECK_THROWS_AS(ledger.epsilon(0.0), std::invalid_argument);
    CHECK_THROWS_AS(ledger.epsilon(1.0), std::invalid_argument);
}

TEST_CASE("ledger construction is validated") {
    CHECK_THROWS_AS(PrivacyLedger({2, 3}, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(PrivacyLedger({}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PrivacyLedger({1, 2}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PrivacyLedger({2, 2}, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(PrivacyLedger({3, 2}, 1.0), std::invalid_argument);
    PrivacyLedger ok({2, 5, 9}, 1.0);
    CHECK_THROWS_AS(ok.rdp_at(3), std::invalid_argument);
}

TEST_CASE("single-epoch sweep epsilons decrease as sigma grows") {
    // N=10000, B=128: 78 full batches plus one of 16.
    auto total_epsilon = [](double sigma) {
        PrivacyLedger ledger(PrivacyLedger::default_orders(), sigma);
        for (int i = 0; i < 78; ++i) {
            ledger.record_step(128.0 / 10000.0);
        }
        ledger.record_step(16.0 / 10000.0);
        return ledger.epsilon(1e-5).epsilon;
    };
    const double e05 = total_epsilon(0.5);
    const double e07 = total_epsilon(0.7);
    const double e10 = total_epsilon(1.0);
    CHECK(e05 > e07);
    CHECK(e07 > e10);
    // Frozen from the high-precision oracle for this configuration.
    CHECK(e05 == doctest::Approx(12.19503129960279).epsilon(1e-10));
    CHECK(e07 == doctest::Approx(4.244368353789499).epsilon(1e-10));
    CHECK(e10 == doctest::Approx(1.783635348523003).epsilon(1e-10));
}

TEST_CASE("gaussian mechanism calibration") {
    SUBCASE("arranged cancellation gives sigma exactly one") {
        const double delta = 1.25 * std::exp(-2.0);  // ln(1.25/delta) = 2
        CHECK(calibrate_gaussian_sigma(1.0, 2.0, delta) == doctest::Approx(1.0).epsilon(1e-15));
    }
    SUBCASE("linear in sensitivity, inverse in epsilon") {
        const double base = calibrate_gaussian_sigma(1.0, 1.0, 1e-5);
        CHECK(calibrate_gaussian_sigma(3.0, 1.0, 1e-5) == doctest::Approx(3.0 * base).epsilon(1e-14));
        CHECK(calibrate_gaussian_sigma(1.0, 4.0, 1e-5) == doctest::Approx(base / 4.0).epsilon(1e-14));
    }
    SUBCASE("frozen value") {
        // sqrt(2 ln(1.25e5)) from the high-precision oracle.
        CHECK(calibrate_gaussian_sigma(1.0, 1.0, 1e-5) ==
              doctest::Approx(4.8448052626053894).epsilon(1e-12));
    }
    SUBCASE("validation") {
        CHECK_THROWS_AS(calibrate_gaussian_sigma(0.0, 1.0, 1e-5), std::invalid_argument);
        CHECK_THROWS_AS(calibrate_gaussian_sigma(1.0, 0.0, 1e-5), std::invalid_argument);
        CHECK_THROWS_AS(calibrate_gaussian_sigma(1.0, 1.0, 1.0), std::invalid_argument);
    }
}
