#pragma once

// Renyi-DP accounting for the subsampled Gaussian mechanism with a
// per-step sampling rate, plus the conversion to (epsilon, delta) and the
// closed-form Gaussian mechanism calibration.

#include <cstdint>
#include <vector>

namespace dpopt {

// RDP of order alpha for one invocation of the subsampled Gaussian mechanism
// with sampling rate q and noise multiplier sigma:
//
//   (1/(alpha-1)) * log( sum_{j=0}^{alpha} C(alpha,j) q^j (1-q)^{alpha-j}
//                        exp(j(j-1)/(2 sigma^2)) )
//
// Returns 0 for alpha < 2 or q <= 0. Evaluated entirely in log space
// (log-gamma binomials, max-pivot log-sum-exp), with the sum taken as
// 1 + sum_{j>=2} ... so small values keep full relative precision.
double rdp_subsampled_gaussian(int alpha, double q, double sigma);

struct OrderEpsilon {
    double epsilon;   // min over orders of rdp[alpha] + log(1/delta)/(alpha-1)
    int best_order;   // the minimizing alpha (smallest on ties)
    double delta;
};

// Accumulated per-order RDP for a fixed noise multiplier. One record_step
// per optimizer step; composition is additive, so the ledger is just a sum.
class PrivacyLedger {
  public:
    PrivacyLedger(std::vector<int> orders, double sigma);

    static std::vector<int> default_orders();  // {2, 3, ..., 64}

    // Adds the per-order RDP of one step at sampling rate q.
    void record_step(double q);

    // Converts the accumulated RDP to an (epsilon, delta) statement.
    OrderEpsilon epsilon(double delta) const;

    double rdp_at(int alpha) const;
    const std::vector<int>& orders() const { return orders_; }
    double sigma() const { return sigma_; }
    long step_count() const { return step_count_; }

  private:
    std::vector<int> orders_;
    std::vector<double> rdp_;
    double sigma_;
    long step_count_ = 0;
};

// Smallest sigma for which the Gaussian mechanism with the given l2
// sensitivity satisfies (epsilon, delta)-DP:
// sigma = sensitivity * sqrt(2 ln(1.25/delta)) / epsilon.
double calibrate_gaussian_sigma(double l2_sensitivity, double epsilon, double delta);

}  // namespace dpopt
