#pragma once

// Lindblad master-equation engine: assembles the generator from a Hamiltonian
// and a list of jump operators and integrates rho(t) with an adaptive
// embedded Runge-Kutta scheme (Dormand-Prince 5(4)) on the dense density
// matrix. The generator is applied matrix-free; at the dimensions handled
// here (<= a few hundred) dense storage of rho is both simplest and fastest.
//
// evolve() is reentrant; distinct evolutions may run concurrently over shared
// immutable models.

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace autoqec {

struct LindbladModel {
    SparseOperator hamiltonian;
    std::vector<SparseOperator> jumps;

    explicit LindbladModel(SparseOperator h, std::vector<SparseOperator> js = {})
        : hamiltonian(std::move(h)), jumps(std::move(js)) {
        for (const auto& j : jumps)
            detail::require_same_basis(hamiltonian.basis(), j.basis(), "Lindblad model");
    }

    const BasisPtr& basis() const { return hamiltonian.basis(); }
    int dim() const { return hamiltonian.dim(); }

    void validate(double herm_tol = 1e-10) const {
        if (!hamiltonian.is_hermitian(herm_tol))
            throw std::invalid_argument("model Hamiltonian is not Hermitian");
    }

    // Largest diagonal entry of any L^dag L; sets the fastest dissipative
    // timescale and the automatic step-size cap.
    double max_jump_rate() const {
        double m = 0;
        for (const auto& l : jumps) {
            SparseC ll = SparseC(l.matrix().adjoint()) * l.matrix();
            for (int i = 0; i < ll.rows(); ++i) m = std::max(m, std::abs(ll.coeff(i, i)));
        }
        return m;
    }
};

struct IntegratorConfig {
    double rel_tol = 1e-8;
    double abs_tol = 1e-10;
    // <= 0 selects the automatic cap 0.1 / (largest jump rate), ten samples
    // per fastest dissipative timescale; models without dissipation are
    // limited by the error controller alone.
    double max_step = 0.0;
    std::string method = "dopri5";

    void validate() const {
        if (rel_tol <= 0 || abs_tol <= 0)
            throw std::invalid_argument("integrator tolerances must be positive");
    }
};

struct Observable {
    std::string name;
    SparseOperator op;
};

struct EvolutionResult {
    std::vector<double> times;
    std::vector<double> fidelity;
    std::map<std::string, std::vector<double>> populations;
    DensityMatrix final_state;
    double max_trace_drift = 0.0;
    long steps_taken = 0;
    std::vector<std::string> warnings;
};

class StepSizeUnderflow : public std::runtime_error {
public:
    StepSizeUnderflow(double t, double h)
        : std::runtime_error("integrator step size underflow at t = " + std::to_string(t) +
                             " (h = " + std::to_string(h) + "); problem too stiff"),
          time_reached(t) {}
    double time_reached;
};

// d(rho)/dt = -i[H, rho] + sum_k ( L_k rho L_k^dag - {L_k^dag L_k, rho}/2 ).
// Reference formula, used directly by tests; evolve() uses the equivalent
// folded form below.
inline DensityMatrix liouvillian_apply(const LindbladModel& model, const DensityMatrix& rho) {
    detail::require_same_basis(model.basis(), rho.basis(), "liouvillian_apply");
    const MatrixC& r = rho.matrix();
    const SparseC& h = model.hamiltonian.matrix();
    MatrixC out = Complex(0, -1) * (h * r - r * h);
    for (const auto& jump : model.jumps) {
        const SparseC& l = jump.matrix();
        SparseC ldag = l.adjoint();
        SparseC ll = ldag * l;
        out += l * (r * ldag);
        out -= 0.5 * (ll * r + r * ll);
    }
    return {rho.basis(), std::move(out)};
}

namespace detail {

// Jump whose matrix has at most one entry per column maps basis states to
// basis states; L rho L^dag then becomes a gather over mapped index pairs,
// far cheaper than two sparse products. All jumps used by the ion models
// (local flips, engineered cooling, spontaneous decay, mode decay) have this
// shape; anything else falls back to the generic path.
struct CompiledJump {
    bool single_column = false;
    // single-column form: for mapped columns, target row and amplitude
    std::vector<int> from, to;
    std::vector<Complex> amp;
    // generic form
    SparseC l, ldag;

    explicit CompiledJump(const SparseC& mat) {
        std::vector<int> count(mat.cols(), 0);
        for (int k = 0; k < mat.outerSize(); ++k)
            for (SparseC::InnerIterator it(mat, k); it; ++it) ++count[it.col()];
        single_column = std::all_of(count.begin(), count.end(), [](int c) { return c <= 1; });
        if (single_column) {
            for (int k = 0; k < mat.outerSize(); ++k)
                for (SparseC::InnerIterator it(mat, k); it; ++it) {
                    from.push_back(static_cast<int>(it.col()));
                    to.push_back(static_cast<int>(it.row()));
                    amp.push_back(it.value());
                }
        } else {
            l = mat;
            ldag = mat.adjoint();
        }
    }

    void accumulate(const MatrixC& rho, MatrixC& out, MatrixC& scratch) const {
        if (single_column) {
            const auto m = static_cast<int>(from.size());
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b)
                    out(to[a], to[b]) += amp[a] * std::conj(amp[b]) * rho(from[a], from[b]);
        } else {
            scratch.noalias() = l * rho;
            out.noalias() += scratch * ldag;
        }
    }
};

// Right-hand side in the folded form
//   d(rho)/dt = A rho + (A rho)^dag + sum_k L_k rho L_k^dag,
// with A = -i H - (1/2) sum_k L_k^dag L_k, valid for Hermitian rho.
struct CompiledGenerator {
    SparseC a;  // -iH - (1/2) sum L^dag L
    std::vector<CompiledJump> jumps;
    int n;

    explicit CompiledGenerator(const LindbladModel& model) : n(model.dim()) {
        SparseC acc = Complex(0, -1) * model.hamiltonian.matrix();
        for (const auto& jump : model.jumps) {
            const SparseC& l = jump.matrix();
            acc -= 0.5 * (SparseC(l.adjoint()) * l);
            jumps.emplace_back(l);
        }
        a = acc;
        a.makeCompressed();
    }

    void apply(const MatrixC& rho, MatrixC& out, MatrixC& scratch) const {
        scratch.noalias() = a * rho;
        out = scratch + scratch.adjoint();
        for (const auto& j : jumps) j.accumulate(rho, out, scratch);
    }
};

inline double error_norm(const MatrixC& err, const MatrixC& y0, const MatrixC& y1, double atol,
                         double rtol) {
    const auto n = err.size();
    double acc = 0;
    const Complex* e = err.data();
    const Complex* a = y0.data();
    const Complex* b = y1.data();
    for (Eigen::Index i = 0; i < n; ++i) {
        double sc = atol + rtol * std::max(std::abs(a[i]), std::abs(b[i]));
        double q = std::abs(e[i]) / sc;
        acc += q * q;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

}  // namespace detail

// Integrates the master equation over a strictly increasing time grid
// starting at 0. rho is re-symmetrized after every accepted step; the trace
// is renormalized only if its drift exceeds 1e-8 (logged as a warning).
inline EvolutionResult evolve(const LindbladModel& model, const DensityMatrix& rho0,
                              const std::vector<double>& t_grid, const IntegratorConfig& config = {},
                              const StateVector* fidelity_target = nullptr,
                              const std::vector<Observable>& observables = {}) {
    config.validate();
    detail::require_same_basis(model.basis(), rho0.basis(), "evolve");
    if (fidelity_target) detail::require_same_basis(model.basis(), fidelity_target->basis(), "evolve");
    for (const auto& ob : observables) detail::require_same_basis(model.basis(), ob.op.basis(), "evolve");
    if (t_grid.empty() || t_grid.front() != 0.0)
        throw std::invalid_argument("time grid must start at 0");
    for (std::size_t i = 1; i < t_grid.size(); ++i)
        if (t_grid[i] <= t_grid[i - 1])
            throw std::invalid_argument("time grid must be strictly increasing");

    // Dormand-Prince 5(4) coefficients (the c-nodes drop out for an
    // autonomous right-hand side).
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                            a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    // difference between 5th and embedded 4th order weights
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

    const detail::CompiledGenerator gen(model);
    const int n = model.dim();

    double max_rate = model.max_jump_rate();
    double h_max = config.max_step > 0 ? config.max_step
                                       : (max_rate > 0 ? 0.1 / max_rate
                                                       : std::numeric_limits<double>::infinity());

    EvolutionResult result{{}, {}, {}, DensityMatrix(rho0.basis(), rho0.matrix()), 0.0, 0, {}};
    for (const auto& ob : observables) result.populations[ob.name] = {};

    MatrixC y = 0.5 * (rho0.matrix() + rho0.matrix().adjoint());
    MatrixC k1(n, n), k2(n, n), k3(n, n), k4(n, n), k5(n, n), k6(n, n), k7(n, n);
    MatrixC ytmp(n, n), ynew(n, n), err(n, n), scratch(n, n);

    auto record = [&](double t, const MatrixC& rho) {
        result.times.push_back(t);
        double tr = rho.trace().real();
        result.max_trace_drift = std::max(result.max_trace_drift, std::abs(tr - 1.0));
        if (fidelity_target) {
            const VectorC& psi = fidelity_target->amplitudes();
            result.fidelity.push_back(std::real(psi.dot(rho * psi)));
        }
        for (const auto& ob : observables) {
            double v = (ob.op.matrix().cwiseProduct(rho.transpose())).sum().real();
            result.populations[ob.name].push_back(v);
        }
    };

    record(0.0, y);

    double t = 0.0;
    const double t_end = t_grid.back();
    // initial step: conservative estimate from the generator's scale
    double gen_scale = 0.0;
    for (int k = 0; k < gen.a.outerSize(); ++k)
        for (SparseC::InnerIterator it(gen.a, k); it; ++it) gen_scale = std::max(gen_scale, std::abs(it.value()));
    gen_scale = std::max(gen_scale, max_rate);
    double h = std::min({h_max, t_end, gen_scale > 0 ? 0.1 / gen_scale : t_end});

    std::size_t next_grid = 1;
    gen.apply(y, k1, scratch);  // FSAL seed

    bool trace_warned = false;
    while (next_grid < t_grid.size()) {
        double t_target = t_grid[next_grid];
        // stretch by up to 5% to land on the grid point, avoiding sliver steps
        bool clamped = t + 1.05 * h >= t_target;
        double hs = clamped ? t_target - t : h;
        if (hs < 1e-14 * std::max(1.0, std::abs(t))) throw StepSizeUnderflow(t, hs);

        ytmp = y + hs * (a21 * k1);
        gen.apply(ytmp, k2, scratch);
        ytmp = y + hs * (a31 * k1 + a32 * k2);
        gen.apply(ytmp, k3, scratch);
        ytmp = y + hs * (a41 * k1 + a42 * k2 + a43 * k3);
        gen.apply(ytmp, k4, scratch);
        ytmp = y + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
        gen.apply(ytmp, k5, scratch);
        ytmp = y + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
        gen.apply(ytmp, k6, scratch);
        ynew = y + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
        gen.apply(ynew, k7, scratch);
        err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);

        double en = detail::error_norm(err, y, ynew, config.abs_tol, config.rel_tol);
        if (en <= 1.0) {
            t = clamped ? t_target : t + hs;
            y = 0.5 * (ynew + ynew.adjoint());
            // FSAL: k7 was evaluated at ynew; resymmetrization changes it
            // only at the order of the local error, which the controller
            // already absorbs.
            k1.swap(k7);
            ++result.steps_taken;
            if (clamped) {
                double tr = y.trace().real();
                if (std::abs(tr - 1.0) > 1e-8) {
                    y /= tr;
                    if (!trace_warned) {
                        std::ostringstream os;
                        os << "trace drift " << std::abs(tr - 1.0) << " at t = " << t
                           << " exceeded 1e-8; renormalized";
                        result.warnings.push_back(os.str());
                        trace_warned = true;
                    }
                }
                record(t, y);
                ++next_grid;
            }
            // Grow from the controller step, not from a grid-clamped one.
            double factor = en > 0 ? 0.9 * std::pow(en, -0.2) : 5.0;
            double base = clamped ? h : hs;
            h = std::min(base * std::clamp(factor, 0.2, 5.0), h_max);
        } else {
            double factor = 0.9 * std::pow(en, -0.2);
            h = std::min(hs * std::clamp(factor, 0.2, 1.0), h_max);
        }
    }

    result.final_state = DensityMatrix(rho0.basis(), std::move(y));
    return result;
}

inline double fidelity(const DensityMatrix& rho, const StateVector& target) {
    detail::require_same_basis(rho.basis(), target.basis(), "fidelity");
    const VectorC& psi = target.amplitudes();
    return std::real(psi.dot(rho.matrix() * psi));
}

inline double fidelity(const DensityMatrix& rho, const SparseOperator& projector) {
    return rho.expectation(projector);
}

}  // namespace autoqec
