#pragma once

// Effective-operator reduction of the engineered dynamics: adiabatic
// elimination of the weakly populated single-excitation sectors by
// non-Hermitian block inversion, the closed-form effective decay rates, and
// the strong-driving corrections (power broadening of the resonant rate and
// the residual excited-state population).

#include <array>
#include <complex>
#include <vector>

#include "ion_model.hpp"
#include "lindblad.hpp"
#include "tensor.hpp"

namespace autoqec {

// Detunings with the decay of the respective levels folded in as negative
// imaginary parts: the excited levels inherit half the engineered cooling
// rate plus half the spontaneous width, the interrogation modes half their
// decay rate.
struct ComplexDetunings {
    Complex excited;  // detuning of |e>, |f>
    Complex mode;     // detuning of the interrogation modes
};

inline ComplexDetunings complex_detunings(const ModelParams& params) {
    double kappa_eng = params.resolved_engineered_rate();
    double mode_decay = 0.5 * (params.mode_decay_a + params.mode_decay_b);
    return {Complex(params.resolved_excited_detuning(),
                    -0.5 * (params.spontaneous_emission_rate + kappa_eng)),
            Complex(params.resolved_mode_detuning(), -0.5 * mode_decay)};
}

// Inverting a dressed 2x2 block [[Delta, sqrt(n) G], [sqrt(n) G, delta]]
// yields diagonal and off-diagonal elements 1/Delta_n_eff, 1/delta_n_eff
// and 1/G_n_eff with the shifted quantities below.
struct EffectiveDetunings {
    Complex excited;   // Delta_n_eff
    Complex mode;      // delta_n_eff
    Complex coupling;  // G_n_eff
};

inline EffectiveDetunings effective_detunings(Complex excited, Complex mode, double coupling, int n) {
    if (excited == Complex(0, 0) || mode == Complex(0, 0))
        throw std::invalid_argument("effective detunings require nonzero complex detunings");
    if (!(coupling > 0)) throw std::invalid_argument("effective detunings require a positive coupling");
    if (n < 1) throw std::invalid_argument("sector index must be >= 1");
    double rn = std::sqrt(static_cast<double>(n));
    return {excited - static_cast<double>(n) * coupling * coupling / mode,
            mode - static_cast<double>(n) * coupling * coupling / excited,
            rn * coupling - excited * mode / (rn * coupling)};
}

inline EffectiveDetunings effective_detunings(const ComplexDetunings& d, double coupling, int n) {
    return effective_detunings(d.excited, d.mode, coupling, n);
}

// Decay rate of the n-ion-flip process mediated by its dressed block.
inline double kappa_eff(int, double drive, double kappa_eng, Complex excited_detuning_eff) {
    double mag2 = std::norm(excited_detuning_eff);
    if (mag2 == 0.0)
        throw std::invalid_argument("effective detuning vanishes; rate undefined without a linewidth");
    return kappa_eng * drive * drive / (4.0 * mag2);
}

// Power-broadened resonant rate; reduces to drive^2 / kappa_eng for weak
// driving and saturates at kappa_eng / r.
inline double kappa_eff1_strong(double drive, double kappa_eng, double r = 2.5) {
    if (!(kappa_eng > 0)) throw std::invalid_argument("strong-driving rate requires kappa_eng > 0");
    return kappa_eng * drive * drive / (kappa_eng * kappa_eng + r * drive * drive);
}

// Steady population stranded in the excited manifold by off-resonant driving
// of the code space; subtracts from the codeword fidelity.
inline double excited_fraction(double drive, double coupling) {
    if (!(coupling > 0)) throw std::invalid_argument("excited fraction requires a positive coupling");
    const double s3 = std::sqrt(3.0);
    double x = drive / coupling;
    return 3.0 * x * x / ((s3 - 1.0) * (s3 - 1.0)) + 3.0 * x * x / ((s3 + 1.0) * (s3 + 1.0));
}

struct EffectiveRates {
    std::array<double, 3> kappa{};  // rates for one, two and three ions flipped
    double r = 2.5;
    double excited_population = 0.0;
    bool strong_driving = true;

    double correction_rate() const { return kappa[0]; }
};

// Closed-form rates at the resonant operating point Delta = delta = G. The
// resonant rate uses the power-broadened form when requested; the detuned
// rates keep their weak-driving forms (they are insensitive to broadening
// for drives well below the sideband coupling).
inline EffectiveRates effective_rates(const ModelParams& params, bool strong_driving = true,
                                      double r = 2.5) {
    params.validate();
    double kappa_eng = params.resolved_engineered_rate();
    double drive = params.drive_amplitude;
    double coupling = params.sideband_coupling;
    if (!(kappa_eng > 0) || !(coupling > 0))
        throw std::invalid_argument("effective rates require positive engineered cooling and sideband coupling");

    EffectiveRates out;
    out.r = r;
    out.strong_driving = strong_driving;

    bool resonant = params.resolved_excited_detuning() == coupling &&
                    params.resolved_mode_detuning() == coupling;
    if (resonant) {
        out.kappa[0] = strong_driving ? kappa_eff1_strong(drive, kappa_eng, r)
                                      : drive * drive / kappa_eng;
        out.kappa[1] = kappa_eng * drive * drive / (4.0 * coupling * coupling);
        out.kappa[2] = kappa_eng * drive * drive / (16.0 * coupling * coupling);
    } else {
        ComplexDetunings d = complex_detunings(params);
        for (int n = 1; n <= 3; ++n)
            out.kappa[n - 1] = kappa_eff(n, drive, kappa_eng,
                                         effective_detunings(d, coupling, n).excited);
        if (strong_driving) out.kappa[0] = kappa_eff1_strong(drive, kappa_eng, r);
    }
    out.excited_population = excited_fraction(drive, coupling);
    if (out.excited_population >= 1.0)
        throw std::invalid_argument("drive too strong: estimated excited population reaches one");
    return out;
}

class SingularBlockError : public std::runtime_error {
public:
    explicit SingularBlockError(const std::string& label)
        : std::runtime_error("singular non-Hermitian block containing " + label) {}
};

struct EffectiveReduction {
    SparseOperator hamiltonian;         // effective Hamiltonian on the ground sector
    std::vector<SparseOperator> jumps;  // one effective jump per decay channel
    BasisPtr ground_basis;
};

// General reduction: split the basis into the zero-excitation sector (the
// ground manifold) and the one-excitation sector, form the non-Hermitian
// Hamiltonian H_nh = P1 (H - i/2 sum L^dag L) P1, identify its connected
// blocks, and solve X = H_nh^{-1} V+ per block by dense LU (no explicit
// inverse). The excitation-raising coupling V+ is read off the given
// Hamiltonian. Returns operators on the zero-excitation truncation of the
// input space.
inline EffectiveReduction effective_reduce(const SparseOperator& hamiltonian,
                                           const std::vector<SparseOperator>& decays) {
    const BasisPtr& basis = hamiltonian.basis();
    const auto& space = *basis->space();
    BasisPtr ground_basis = Basis::truncated(basis->space(), 0);

    std::vector<int> sector(basis->size());
    std::vector<int> ground_pos, excited_pos;
    for (int p = 0; p < basis->size(); ++p) {
        int exc = space.excitation_number(basis->state(p));
        if (exc > 1)
            throw std::invalid_argument("reduction is defined on at most one excitation");
        sector[p] = exc;
        (exc == 0 ? ground_pos : excited_pos).push_back(p);
    }
    const int ng = static_cast<int>(ground_pos.size());
    const int ne = static_cast<int>(excited_pos.size());

    std::vector<int> to_ground(basis->size(), -1), to_excited(basis->size(), -1);
    for (int i = 0; i < ng; ++i) to_ground[ground_pos[i]] = i;
    for (int i = 0; i < ne; ++i) to_excited[excited_pos[i]] = i;

    // dense sector blocks of H and the decay-folded non-Hermitian part
    MatrixC v_plus = MatrixC::Zero(ne, ng);   // excitation-raising coupling
    MatrixC v_minus = MatrixC::Zero(ng, ne);  // its de-exciting counterpart
    MatrixC h_nh = MatrixC::Zero(ne, ne);
    const SparseC& hm = hamiltonian.matrix();
    for (int k = 0; k < hm.outerSize(); ++k)
        for (SparseC::InnerIterator it(hm, k); it; ++it) {
            int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
            if (sector[r] == 1 && sector[c] == 0)
                v_plus(to_excited[r], to_ground[c]) = it.value();
            else if (sector[r] == 0 && sector[c] == 1)
                v_minus(to_ground[r], to_excited[c]) = it.value();
            else if (sector[r] == 1 && sector[c] == 1)
                h_nh(to_excited[r], to_excited[c]) += it.value();
        }
    for (const auto& l : decays) {
        SparseC ll = SparseC(l.matrix().adjoint()) * l.matrix();
        for (int k = 0; k < ll.outerSize(); ++k)
            for (SparseC::InnerIterator it(ll, k); it; ++it) {
                int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                if (sector[r] == 1 && sector[c] == 1)
                    h_nh(to_excited[r], to_excited[c]) += Complex(0, -0.5) * it.value();
            }
    }

    // connected components of the non-Hermitian coupling graph
    std::vector<int> block(ne, -1);
    std::vector<std::vector<int>> blocks;
    for (int seed = 0; seed < ne; ++seed) {
        if (block[seed] >= 0) continue;
        int id = static_cast<int>(blocks.size());
        std::vector<int> members, stack{seed};
        block[seed] = id;
        while (!stack.empty()) {
            int i = stack.back();
            stack.pop_back();
            members.push_back(i);
            for (int j = 0; j < ne; ++j)
                if (block[j] < 0 && (h_nh(i, j) != Complex(0, 0) || h_nh(j, i) != Complex(0, 0))) {
                    block[j] = id;
                    stack.push_back(j);
                }
        }
        blocks.push_back(std::move(members));
    }

    // solve H_nh X = V+ block by block
    MatrixC x = MatrixC::Zero(ne, ng);
    for (const auto& members : blocks) {
        const int m = static_cast<int>(members.size());
        MatrixC sub(m, m);
        MatrixC rhs(m, ng);
        for (int i = 0; i < m; ++i) {
            rhs.row(i) = v_plus.row(members[i]);
            for (int j = 0; j < m; ++j) sub(i, j) = h_nh(members[i], members[j]);
        }
        Eigen::FullPivLU<MatrixC> lu(sub);
        if (!lu.isInvertible())
            throw SingularBlockError(basis->state_label(excited_pos[members[0]]));
        MatrixC sol = lu.solve(rhs);
        for (int i = 0; i < m; ++i) x.row(members[i]) = sol.row(i);
    }

    // effective Hamiltonian -1/2 V- X + h.c. and jumps L X on the ground sector
    MatrixC h_eff_half = -0.5 * v_minus * x;
    MatrixC h_eff = h_eff_half + h_eff_half.adjoint();

    EffectiveReduction out{SparseOperator::from_dense(ground_basis, h_eff), {}, ground_basis};
    for (const auto& l : decays) {
        MatrixC l_ge = MatrixC::Zero(ng, ne);
        const SparseC& lm = l.matrix();
        for (int k = 0; k < lm.outerSize(); ++k)
            for (SparseC::InnerIterator it(lm, k); it; ++it) {
                int r = static_cast<int>(it.row()), c = static_cast<int>(it.col());
                if (sector[r] == 0 && sector[c] == 1) l_ge(to_ground[r], to_excited[c]) = it.value();
            }
        MatrixC jump = l_ge * x;
        out.jumps.push_back(SparseOperator::from_dense(ground_basis, jump));
    }
    return out;
}

// Ground-manifold model with the closed-form effective jumps: per ion, the
// sum over n of sqrt(kappa_n) (sigma^-_j P_{n ions in 1} + sigma^+_j
// P_{n ions in 0}), plus the configured noise channels and the sensing
// signal. The excited-state population estimate is carried alongside for
// fidelity post-processing: comparisons against the full dynamics multiply
// the codeword fidelity by (1 - excited_population).
struct EffectiveModel {
    LindbladModel model;
    EffectiveRates rates;
};

inline EffectiveModel build_effective_model(const ModelParams& params, CodeVariant variant,
                                            const BasisPtr& basis, bool strong_driving = true,
                                            double r = 2.5) {
    EffectiveRates rates = effective_rates(params, strong_driving, r);

    std::vector<SparseOperator> sigma_minus, sigma_plus;
    const int n_ions = basis->space()->num_ions();
    for (int j = 0; j < n_ions; ++j) {
        sigma_minus.push_back(embed_ion(ion_sigma_minus(), j, basis));
        sigma_plus.push_back(embed_ion(ion_sigma_plus(), j, basis));
    }

    std::vector<SparseOperator> jumps = build_noise_jumps(params, variant, basis);
    std::vector<SparseOperator> correction;
    for (int j = 0; j < n_ions; ++j) {
        SparseOperator l(basis);
        for (int n = 1; n <= 3; ++n) {
            double amp = std::sqrt(rates.kappa[n - 1]);
            if (amp == 0.0) continue;
            l = l + amp * (sigma_minus[j] * projector_count(basis, CountedLevel::One, n) +
                           sigma_plus[j] * projector_count(basis, CountedLevel::Zero, n));
        }
        correction.push_back(conjugate_for_variant(l, variant));
    }
    if (is_collective_variant(variant)) {
        SparseOperator sum(basis);
        for (const auto& l : correction) sum = sum + l;
        jumps.push_back(std::move(sum));
    } else {
        for (auto& l : correction) jumps.push_back(std::move(l));
    }

    SparseOperator h = signal_hamiltonian(params.signal_strength, basis);
    return {LindbladModel(std::move(h), std::move(jumps)), rates};
}

}  // namespace autoqec
