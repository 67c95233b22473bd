#pragma once

// Three-subspace rate-equation model of the protected qubit: the logical
// population decays to the correctable single-error subspace, is pumped
// back by the correction, and leaks to the uncorrectable remainder:
//
//   dPl/dt = -err * Pl + corr * Pc
//   dPc/dt =  err * Pl - (corr + leak) * Pc
//   dPu/dt =  leak * Pc
//
// with the closed-form solution (Pl(0) = 1)
//
//   Pl(t) = exp(-slow t) [1 - E0 (1 - exp(-fast t))],
//
// fast = sqrt(total^2 - 4 err leak), slow = (total - fast)/2,
// total = corr + err + leak, E0 = (err - slow)/fast.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "effective.hpp"

namespace autoqec {

struct RateParams {
    double error_rate = 0.0;       // logical -> correctable
    double correction_rate = 0.0;  // correctable -> logical
    double leakage_rate = 0.0;     // correctable -> uncorrectable
    // random flips from the correctable subspace straight back to the
    // codeword; omitted from the standard model, available for sensitivity
    // analysis
    double backflow_rate = 0.0;

    void validate() const {
        if (error_rate < 0 || correction_rate < 0 || leakage_rate < 0 || backflow_rate < 0)
            throw std::invalid_argument("rate parameters must be nonnegative");
    }
};

// error = 3 (Gamma + kappa_3), correction = kappa_1, leakage = 2 (Gamma + kappa_2)
inline RateParams derive_rates(double flip_rate, const EffectiveRates& eff,
                               bool include_backflow = false) {
    if (flip_rate < 0) throw std::invalid_argument("flip rate must be nonnegative");
    RateParams out;
    out.error_rate = 3.0 * (flip_rate + eff.kappa[2]);
    out.correction_rate = eff.kappa[0];
    out.leakage_rate = 2.0 * (flip_rate + eff.kappa[1]);
    out.backflow_rate = include_backflow ? flip_rate : 0.0;
    return out;
}

struct RateSolution {
    std::vector<double> times;
    std::vector<double> p_logical, p_correctable, p_uncorrectable;
    double static_error = 0.0;          // E0 of the closed form
    double fast_rate = 0.0;             // initial-drop rate
    double slow_rate = 0.0;             // long-time decay rate of Pl
    double effective_decay_rate = 0.0;  // alias of the slow rate
};

inline RateSolution solve_rate_model(const RateParams& params, const std::vector<double>& t_grid) {
    params.validate();
    const double err = params.error_rate;
    const double corr = params.correction_rate + params.backflow_rate;
    const double leak = params.leakage_rate;
    const double total = err + corr + leak;

    RateSolution out;
    out.times = t_grid;
    out.p_logical.reserve(t_grid.size());
    out.p_correctable.reserve(t_grid.size());
    out.p_uncorrectable.reserve(t_grid.size());

    if (total == 0.0) {
        out.p_logical.assign(t_grid.size(), 1.0);
        out.p_correctable.assign(t_grid.size(), 0.0);
        out.p_uncorrectable.assign(t_grid.size(), 0.0);
        return out;
    }

    const double disc = total * total - 4.0 * err * leak;
    if (disc < 0)
        throw std::domain_error("negative discriminant: oscillatory regime outside the model's validity");
    const double fast = std::sqrt(disc);
    if (fast == 0.0) throw std::domain_error("degenerate rates: fast and slow decay coincide");
    const double slow = 0.5 * (total - fast);
    const double e0 = (err - slow) / fast;

    out.static_error = e0;
    out.fast_rate = fast;
    out.slow_rate = slow;
    out.effective_decay_rate = slow;

    for (double t : t_grid) {
        double es = std::exp(-slow * t);
        double ef = std::exp(-fast * t);
        double pl = es * (1.0 - e0 * (1.0 - ef));
        double pc = (err / fast) * es * (1.0 - ef);
        out.p_logical.push_back(pl);
        out.p_correctable.push_back(pc);
        out.p_uncorrectable.push_back(1.0 - pl - pc);
    }
    return out;
}

// Asymptotic summary of the hockey-stick curve in the strong-correction
// regime: the quasi-equilibrium initial drop E0 = err/corr and the long-time
// decay rate leak * E0. Exact counterparts live in RateSolution.
struct HockeyStickSummary {
    double static_error;
    double effective_decay_rate;
};

inline HockeyStickSummary hockey_stick_summary(const RateParams& params) {
    params.validate();
    const double err = params.error_rate;
    const double corr = params.correction_rate + params.backflow_rate;
    const double leak = params.leakage_rate;
    const double total = err + corr + leak;
    const double disc = total * total - 4.0 * err * leak;
    if (!(corr > 0)) throw std::domain_error("summary requires a positive correction rate");
    if (disc <= 0) throw std::domain_error("summary requires a positive fast-slow splitting");
    double e0 = err / corr;
    return {e0, leak * e0};
}

}  // namespace autoqec
