#include "dpopt/accountant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dpopt {

namespace {

double log_binomial(int n, int k) {
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// log(e^x - 1) for x > 0 without overflow or cancellation.
double log_expm1(double x) {
    if (x > 709.0) {
        return x + std::log1p(-std::exp(-x));
    }
    return std::log(std::expm1(x));
}

// log(1 + e^x), stable for both signs of x.
double log1p_exp(double x) {
    if (x > 0.0) {
        return x + std::log1p(std::exp(-x));
    }
    return std::log1p(std::exp(x));
}

// Max-pivot log-sum-exp.
double log_sum_exp(const std::vector<double>& log_terms) {
    const double pivot = *std::max_element(log_terms.begin(), log_terms.end());
    if (!std::isfinite(pivot)) {
        return pivot;
    }
    double sum = 0.0;
    for (double lt : log_terms) {
        sum += std::exp(lt - pivot);
    }
    return pivot + std::log(sum);
}

}  // namespace

double rdp_subsampled_gaussian(int alpha, double q, double sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("rdp_subsampled_gaussian: sigma must be positive");
    }
    if (!(q <= 1.0)) {
        throw std::invalid_argument("rdp_subsampled_gaussian: q must be <= 1");
    }
    if (alpha < 2 || q <= 0.0) {
        return 0.0;
    }

    // The binomial expansion sums to 1 at sigma = infinity, so split off that
    // mass exactly:
    //   S = 1 + sum_{j=2}^{alpha} C(alpha,j) q^j (1-q)^{alpha-j} (e^{j(j-1)/(2s^2)} - 1)
    // (the j = 0 and j = 1 exponents are zero). log(S) = log1p(e^{log D})
    // then keeps full relative precision even when S - 1 is ~1e-10.
    const double inv_two_sigma_sq = 1.0 / (2.0 * sigma * sigma);
    const double log_q = std::log(q);
    const double log_1mq = std::log1p(-q);  // -inf when q == 1
    std::vector<double> log_terms;
    log_terms.reserve(static_cast<std::size_t>(alpha - 1));
    for (int j = 2; j <= alpha; ++j) {
        const double tail = (alpha == j) ? 0.0 : (alpha - j) * log_1mq;
        if (!std::isfinite(tail)) {
            continue;  // (1-q)^{alpha-j} == 0 exactly
        }
        const double exponent = static_cast<double>(j) * (j - 1) * inv_two_sigma_sq;
        log_terms.push_back(log_binomial(alpha, j) + j * log_q + tail + log_expm1(exponent));
    }
    const double log_excess = log_sum_exp(log_terms);  // log(S - 1)
    return log1p_exp(log_excess) / static_cast<double>(alpha - 1);
}

PrivacyLedger::PrivacyLedger(std::vector<int> orders, double sigma)
    : orders_(std::move(orders)), sigma_(sigma) {
    if (!(sigma > 0.0) || !std::isfinite(sigma)) {
        throw std::invalid_argument("PrivacyLedger: sigma must be positive");
    }
    if (orders_.empty()) {
        throw std::invalid_argument("PrivacyLedger: order set must be non-empty");
    }
    for (std::size_t i = 0; i < orders_.size(); ++i) {
        if (orders_[i] < 2) {
            throw std::invalid_argument("PrivacyLedger: orders must be integers >= 2");
        }
        if (i > 0 && orders_[i] <= orders_[i - 1]) {
            throw std::invalid_argument("PrivacyLedger: orders must be strictly ascending");
        }
    }
    rdp_.assign(orders_.size(), 0.0);
}

std::vector<int> PrivacyLedger::default_orders() {
    std::vector<int> orders(63);
    std::iota(orders.begin(), orders.end(), 2);
    return orders;
}

void PrivacyLedger::record_step(double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::invalid_argument("PrivacyLedger: sampling rate must lie in [0,1]");
    }
    for (std::size_t i = 0; i < orders_.size(); ++i) {
        rdp_[i] += rdp_subsampled_gaussian(orders_[i], q, sigma_);
    }
    step_count_ += 1;
}

OrderEpsilon PrivacyLedger::epsilon(double delta) const {
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("PrivacyLedger: delta must lie in (0,1)");
    }
    const double log_inv_delta = std::log(1.0 / delta);
    double best = std::numeric_limits<double>::infinity();
    int best_order = orders_.front();
    for (std::size_t i = 0; i < orders_.size(); ++i) {
        const double eps = rdp_[i] + log_inv_delta / (orders_[i] - 1.0);
        if (eps < best) {  // strict: ties resolve to the smallest order
            best = eps;
            best_order = orders_[i];
        }
    }
    return OrderEpsilon{best, best_order, delta};
}

double PrivacyLedger::rdp_at(int alpha) const {
    const auto it = std::find(orders_.begin(), orders_.end(), alpha);
    if (it == orders_.end()) {
        throw std::invalid_argument("PrivacyLedger: order " + std::to_string(alpha) +
                                    " not tracked");
    }
    return rdp_[static_cast<std::size_t>(it - orders_.begin())];
}

double calibrate_gaussian_sigma(double l2_sensitivity, double epsilon, double delta) {
    if (!(l2_sensitivity > 0.0) || !(epsilon > 0.0) || !(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument(
            "calibrate_gaussian_sigma: need sensitivity > 0, epsilon > 0, delta in (0,1)");
    }
    return l2_sensitivity * std::sqrt(2.0 * std::log(1.25 / delta)) / epsilon;
}

}  // namespace dpopt
