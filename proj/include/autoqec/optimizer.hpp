#pragma once

// Protocol-parameter optimization: the closed-form optimum of the engineered
// cooling rate and drive amplitude derived from the rate model, and a
// derivative-free numeric optimizer maximizing the simulated fidelity at a
// target time.

#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <vector>

#include "effective.hpp"
#include "ion_model.hpp"
#include "lindblad.hpp"
#include "parallel.hpp"
#include "rate_model.hpp"

namespace autoqec {

// Positive root of (2 + 5 tau) a^2 + 8 (5 tau - 1) a - 64 (tau + 1) = 0,
// the stationarity condition of the rate-model fidelity under the ansatz
// kappa_eng * drive^2 = alpha * flip_rate * coupling^2. Monotone from
// alpha(0) = 8 down to alpha(inf) = 4 (3 sqrt(5) - 5) / 5.
inline double alpha_of_tau(double tau) {
    if (tau < 0) throw std::invalid_argument("tau must be nonnegative");
    if (std::isinf(tau)) return (12.0 * std::sqrt(5.0) - 20.0) / 5.0;
    return 4.0 * (1.0 - 5.0 * tau + 3.0 * std::sqrt(5.0 * tau * tau + 2.0 * tau + 1.0)) /
           (2.0 + 5.0 * tau);
}

inline double alpha_quadratic_residual(double alpha, double tau) {
    return (2.0 + 5.0 * tau) * alpha * alpha + 8.0 * (5.0 * tau - 1.0) * alpha -
           64.0 * (tau + 1.0);
}

enum class OptimizationRegime { LongTime, ShortTime, FiniteTime };

struct OptimizationResult {
    double kappa_eng = 0.0;
    double drive = 0.0;
    double alpha = 0.0;
    OptimizationRegime regime = OptimizationRegime::LongTime;
    double predicted_static_error = 0.0;
    double predicted_decay_rate = 0.0;
    double beta_error = 0.0;
    double beta_decay = 0.0;
    double achieved_fidelity = std::numeric_limits<double>::quiet_NaN();
    long evaluations = 0;
    std::vector<std::string> warnings;
};

inline double beta_error_prefactor(double alpha, double r) {
    return (9.0 / 16.0) * (16.0 + alpha) * std::cbrt(r * r / (4.0 * alpha));
}

inline double beta_decay_prefactor(double alpha, double r) {
    return (9.0 / 32.0) * (16.0 + alpha) * (4.0 + alpha) * std::cbrt(r * r / (4.0 * alpha));
}

// Closed-form optimum: kappa_opt = cbrt(r alpha / 2 * flip * G^2),
// drive_opt = sqrt(2/r) kappa_opt, with the static error and decay rate
// scaling as (flip/G)^{2/3} times the regime-dependent prefactors.
// The finite-time regime solves the self-consistent alpha at the given
// operation time by fixed-point iteration.
inline OptimizationResult analytic_optimum(double flip_rate, double coupling, double r = 2.5,
                                           OptimizationRegime regime = OptimizationRegime::LongTime,
                                           double target_time = 1.0) {
    if (!(flip_rate > 0) || !(coupling > 0))
        throw std::invalid_argument("analytic optimum requires positive flip rate and coupling");
    OptimizationResult out;
    out.regime = regime;
    if (coupling / flip_rate < 100.0)
        out.warnings.push_back("coupling/flip-rate below 100: scale separation is marginal");

    double ratio23 = std::cbrt((flip_rate / coupling) * (flip_rate / coupling));
    auto fill = [&](double alpha) {
        out.alpha = alpha;
        out.kappa_eng = std::cbrt(0.5 * r * alpha * flip_rate * coupling * coupling);
        out.drive = std::sqrt(2.0 / r) * out.kappa_eng;
        out.beta_error = beta_error_prefactor(alpha, r);
        out.beta_decay = beta_decay_prefactor(alpha, r);
        out.predicted_static_error = out.beta_error * ratio23;
        out.predicted_decay_rate = out.beta_decay * ratio23 * flip_rate;
    };

    switch (regime) {
        case OptimizationRegime::LongTime:
            fill(alpha_of_tau(std::numeric_limits<double>::infinity()));
            break;
        case OptimizationRegime::ShortTime:
            fill(alpha_of_tau(0.0));
            break;
        case OptimizationRegime::FiniteTime: {
            if (!(target_time > 0)) throw std::invalid_argument("finite-time regime needs a target time");
            double alpha = alpha_of_tau(std::numeric_limits<double>::infinity());
            for (int iter = 0; iter < 200; ++iter) {
                fill(alpha);
                double e0 = std::min(out.predicted_static_error, 0.5);
                double tau = (1.0 - e0) / e0 * out.predicted_decay_rate * target_time;
                double next = alpha_of_tau(tau);
                if (std::abs(next - alpha) < 1e-14) {
                    alpha = next;
                    break;
                }
                alpha = 0.5 * (alpha + next);
            }
            fill(alpha);
            break;
        }
    }
    return out;
}

struct SearchConfig {
    int coarse_kappa_points = 12;
    int coarse_ratio_points = 12;
    double kappa_min_factor = 0.1;  // times cbrt(flip * G^2)
    double kappa_max_factor = 10.0;
    double ratio_min = 0.2;  // drive / kappa_eng
    double ratio_max = 2.0;
    int refine_iterations = 6;
    double r = 2.5;
    IntegratorConfig integrator{1e-6, 1e-9, 0.0, "dopri5"};
    int threads = 0;
    CodeVariant variant = CodeVariant::BitFlipIndividual;
};

class OptimizerEvaluationError : public std::runtime_error {
public:
    OptimizerEvaluationError(double kappa, double drive, const std::string& what)
        : std::runtime_error("objective evaluation failed at kappa_eng = " + std::to_string(kappa) +
                             ", drive = " + std::to_string(drive) + ": " + what) {}
};

namespace detail {

// fidelity at the target time for one parameter point
inline double optimizer_objective(double flip_rate, double coupling, double kappa_eng, double drive,
                                  double t_star, DynamicsLevel backend, const SearchConfig& cfg) {
    ModelParams params;
    params.bit_flip_rate = flip_rate;
    params.sideband_coupling = coupling;
    params.engineered_cooling_rate = kappa_eng;
    params.drive_amplitude = drive;
    try {
        const Complex c0(1.0 / std::sqrt(2.0), 0.0), c1(0.0, 1.0 / std::sqrt(2.0));
        if (backend == DynamicsLevel::EngineeredDecay) {
            auto basis = make_code_basis(backend, cfg.variant, 1);
            LindbladModel model = build_model(params, cfg.variant, backend, basis);
            StateVector psi = initial_codeword(cfg.variant, c0, c1, basis);
            auto res = evolve(model, DensityMatrix::pure(psi), {0.0, t_star}, cfg.integrator, &psi);
            return res.fidelity.back();
        }
        if (backend == DynamicsLevel::EffectiveJump) {
            auto basis = make_code_basis(backend, cfg.variant);
            EffectiveModel em = build_effective_model(params, cfg.variant, basis, true, cfg.r);
            StateVector psi = initial_codeword(cfg.variant, c0, c1, basis);
            auto res = evolve(em.model, DensityMatrix::pure(psi), {0.0, t_star}, cfg.integrator, &psi);
            return (1.0 - em.rates.excited_population) * res.fidelity.back();
        }
    } catch (const std::exception& e) {
        throw OptimizerEvaluationError(kappa_eng, drive, e.what());
    }
    throw std::invalid_argument("numeric optimization supports the engineered and effective backends");
}

}  // namespace detail

// Coarse log-grid search over (kappa_eng, drive/kappa_eng) followed by
// per-coordinate refinement with a quadratic fit in log space. Deterministic
// for a given configuration: grid evaluations run concurrently but are
// reduced in index order, and argmax ties break toward the lexicographically
// smallest (kappa_eng, drive).
inline OptimizationResult numeric_optimum(double flip_rate, double coupling, double t_star,
                                          DynamicsLevel backend, const SearchConfig& cfg = {}) {
    if (!(flip_rate > 0) || !(coupling > 0))
        throw std::invalid_argument("numeric optimum requires positive flip rate and coupling");
    if (!(t_star > 0)) throw std::invalid_argument("target time must be positive");
    if (backend != DynamicsLevel::EngineeredDecay && backend != DynamicsLevel::EffectiveJump)
        throw std::invalid_argument("numeric optimization supports the engineered and effective backends");

    const double scale = std::cbrt(flip_rate * coupling * coupling);
    long evaluations = 0;

    std::map<std::pair<long long, long long>, double> cache;
    auto quantize = [](double v) { return static_cast<long long>(std::llround(v * 1e12)); };
    auto objective = [&](double lk, double lr) {
        auto key = std::make_pair(quantize(lk), quantize(lr));
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        double kappa = std::exp(lk) * scale;
        double drive = std::exp(lr) * kappa;
        double f = detail::optimizer_objective(flip_rate, coupling, kappa, drive, t_star, backend, cfg);
        ++evaluations;
        cache.emplace(key, f);
        return f;
    };

    // coarse grid in log space
    const int nk = cfg.coarse_kappa_points, nr = cfg.coarse_ratio_points;
    std::vector<double> lks(nk), lrs(nr);
    for (int i = 0; i < nk; ++i)
        lks[i] = std::log(cfg.kappa_min_factor) +
                 i * (std::log(cfg.kappa_max_factor) - std::log(cfg.kappa_min_factor)) / (nk - 1);
    for (int i = 0; i < nr; ++i)
        lrs[i] = std::log(cfg.ratio_min) +
                 i * (std::log(cfg.ratio_max) - std::log(cfg.ratio_min)) / (nr - 1);

    std::vector<double> grid_values(static_cast<std::size_t>(nk) * nr);
    parallel_for(grid_values.size(), cfg.threads, [&](std::size_t idx) {
        int i = static_cast<int>(idx) / nr;
        int j = static_cast<int>(idx) % nr;
        double kappa = std::exp(lks[i]) * scale;
        double drive = std::exp(lrs[j]) * kappa;
        grid_values[idx] =
            detail::optimizer_objective(flip_rate, coupling, kappa, drive, t_star, backend, cfg);
    });
    evaluations += static_cast<long>(grid_values.size());
    double best_lk = lks[0], best_lr = lrs[0], best_f = -1.0;
    for (int i = 0; i < nk; ++i)
        for (int j = 0; j < nr; ++j) {
            double f = grid_values[static_cast<std::size_t>(i) * nr + j];
            cache.emplace(std::make_pair(quantize(lks[i]), quantize(lrs[j])), f);
            // strict improvement keeps the lexicographically smallest tie
            if (f > best_f) {
                best_f = f;
                best_lk = lks[i];
                best_lr = lrs[j];
            }
        }

    // coordinate refinement with a quadratic fit in log space
    double step_k = (lks[1] - lks[0]) * 0.5;
    double step_r = (lrs[1] - lrs[0]) * 0.5;
    for (int iter = 0; iter < cfg.refine_iterations; ++iter) {
        for (int coord = 0; coord < 2; ++coord) {
            double& center = coord == 0 ? best_lk : best_lr;
            double step = coord == 0 ? step_k : step_r;
            double f0 = objective(best_lk, best_lr);
            double fm = coord == 0 ? objective(center - step, best_lr) : objective(best_lk, center - step);
            double fp = coord == 0 ? objective(center + step, best_lr) : objective(best_lk, center + step);
            double denom = fm - 2.0 * f0 + fp;
            double move;
            if (denom < 0)  // concave: quadratic vertex
                move = 0.5 * step * (fm - fp) / denom;
            else  // fall back to the best sampled point
                move = fp > fm ? (fp > f0 ? step : 0.0) : (fm > f0 ? -step : 0.0);
            move = std::clamp(move, -step, step);
            center += move;
        }
        step_k *= 0.5;
        step_r *= 0.5;
    }

    OptimizationResult out;
    out.regime = OptimizationRegime::FiniteTime;
    out.kappa_eng = std::exp(best_lk) * scale;
    out.drive = std::exp(best_lr) * out.kappa_eng;
    out.alpha = out.kappa_eng * out.drive * out.drive / (flip_rate * coupling * coupling);
    out.beta_error = beta_error_prefactor(out.alpha, cfg.r);
    out.beta_decay = beta_decay_prefactor(out.alpha, cfg.r);
    double ratio23 = std::cbrt((flip_rate / coupling) * (flip_rate / coupling));
    out.predicted_static_error = out.beta_error * ratio23;
    out.predicted_decay_rate = out.beta_decay * ratio23 * flip_rate;
    out.achieved_fidelity = objective(best_lk, best_lr);
    out.evaluations = evaluations;
    return out;
}

}  // namespace autoqec
