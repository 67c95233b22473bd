#pragma once

// Physical model of the three-ion repetition code: drive, sideband and
// ancilla Hamiltonians, noise processes, engineered cooling, ideal
// conditional correction jumps and imperfection channels, for the bit-flip
// and phase-flip code variants (individual or collective noise).
//
// All rates and couplings are expressed in units of a reference rate; the
// canonical convention downstream is bit_flip_rate = 1.
//
// Phase variants are obtained from the bit-flip machinery by conjugating
// every engineered operator with the per-ion ground-state map 0 <-> +,
// 1 <-> -, guaranteeing structural identity between the two code types.
// The complementary dephasing channels (dephasing_rate,
// collective_dephasing_rate) and the sensing signal stay literal sigma_z
// terms; they describe fixed lab-frame processes, not protocol machinery.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "lindblad.hpp"
#include "tensor.hpp"

namespace autoqec {

enum class CodeVariant { BitFlipIndividual, BitFlipCollective, PhaseFlipIndividual, PhaseFlipCollective };
enum class DynamicsLevel { FullWithAncilla, EngineeredDecay, EffectiveJump, IdealJump, RateModel };

inline bool is_phase_variant(CodeVariant v) {
    return v == CodeVariant::PhaseFlipIndividual || v == CodeVariant::PhaseFlipCollective;
}
inline bool is_collective_variant(CodeVariant v) {
    return v == CodeVariant::BitFlipCollective || v == CodeVariant::PhaseFlipCollective;
}

inline constexpr int num_code_ions = 3;

struct ModelParams {
    static constexpr double unset = std::numeric_limits<double>::quiet_NaN();

    double bit_flip_rate = 0.0;              // rate of the corrected noise type, per qubit
    double collective_flip_rate = 0.0;       // rate of the corrected collective channel
    double dephasing_rate = 0.0;             // complementary sigma_z rate, per qubit
    double collective_dephasing_rate = 0.0;  // complementary collective sigma_z rate
    double drive_amplitude = 0.0;            // weak carrier drive
    double sideband_coupling = 0.0;          // sideband coupling to the interrogation modes
    double ancilla_coupling = 0.0;           // coherent coupling to the ancilla systems
    double ancilla_cooling_rate = 0.0;       // cooling/reset rate of the ancilla systems
    double engineered_cooling_rate = unset;  // direct value; unset derives coupling^2 / cooling
    double excited_detuning = unset;         // detuning of |e>, |f>; unset follows the sideband coupling
    double mode_detuning = unset;            // detuning of the interrogation modes; unset follows the sideband coupling
    double ancilla_detuning = 0.0;
    double spontaneous_emission_rate = 0.0;  // total decay rate of each excited level
    double mode_decay_a = 0.0;
    double mode_decay_b = 0.0;
    double signal_strength = 0.0;            // sensing signal (omega)
    double correction_rate = 0.0;            // rate of the ideal conditional correction jumps
    int mode_max_occupation = 1;             // occupation cutoff per bosonic mode

    double resolved_excited_detuning() const {
        return std::isnan(excited_detuning) ? sideband_coupling : excited_detuning;
    }
    double resolved_mode_detuning() const {
        return std::isnan(mode_detuning) ? sideband_coupling : mode_detuning;
    }

    // Direct value wins over the adiabatic-elimination estimate; conflict is
    // reported through the optional flag.
    double resolved_engineered_rate(bool* conflict = nullptr) const {
        double derived = ancilla_cooling_rate > 0
                             ? ancilla_coupling * ancilla_coupling / ancilla_cooling_rate
                             : 0.0;
        if (!std::isnan(engineered_cooling_rate)) {
            if (conflict && derived > 0 &&
                std::abs(engineered_cooling_rate - derived) > 1e-12 * std::max(1.0, derived))
                *conflict = true;
            return engineered_cooling_rate;
        }
        return derived;
    }

    void validate() const {
        auto nonneg = [](double v, const char* name) {
            if (v < 0) throw std::invalid_argument(std::string("params.") + name + " must be >= 0");
        };
        nonneg(bit_flip_rate, "bit_flip_rate");
        nonneg(collective_flip_rate, "collective_flip_rate");
        nonneg(dephasing_rate, "dephasing_rate");
        nonneg(collective_dephasing_rate, "collective_dephasing_rate");
        nonneg(drive_amplitude, "drive_amplitude");
        nonneg(sideband_coupling, "sideband_coupling");
        nonneg(ancilla_coupling, "ancilla_coupling");
        nonneg(ancilla_cooling_rate, "ancilla_cooling_rate");
        if (!std::isnan(engineered_cooling_rate)) nonneg(engineered_cooling_rate, "engineered_cooling_rate");
        nonneg(spontaneous_emission_rate, "spontaneous_emission_rate");
        nonneg(mode_decay_a, "mode_decay_a");
        nonneg(mode_decay_b, "mode_decay_b");
        nonneg(correction_rate, "correction_rate");
        if (mode_max_occupation < 1)
            throw std::invalid_argument("params.mode_max_occupation must be >= 1");
    }
};

// --- spaces and bases -------------------------------------------------------

// Factor order is fixed: ions 1..3 first, then interrogation modes a, b, then
// the ancilla modes, so composite indices are reproducible across runs.
inline SpacePtr make_code_space(DynamicsLevel level, CodeVariant variant, int mode_max_occupation = 1) {
    std::vector<Factor> factors(num_code_ions, Factor::ion());
    switch (level) {
        case DynamicsLevel::EffectiveJump:
        case DynamicsLevel::IdealJump:
            break;
        case DynamicsLevel::EngineeredDecay:
            factors.push_back(Factor::mode(mode_max_occupation));
            factors.push_back(Factor::mode(mode_max_occupation));
            break;
        case DynamicsLevel::FullWithAncilla: {
            factors.push_back(Factor::mode(mode_max_occupation));
            factors.push_back(Factor::mode(mode_max_occupation));
            int n_anc = is_collective_variant(variant) ? 1 : num_code_ions;
            for (int i = 0; i < n_anc; ++i) factors.push_back(Factor::mode(mode_max_occupation));
            break;
        }
        case DynamicsLevel::RateModel:
            throw std::invalid_argument("the rate-equation level has no Hilbert space");
    }
    return make_space(std::move(factors));
}

inline BasisPtr make_code_basis(DynamicsLevel level, CodeVariant variant, int max_excitation = 1,
                                int mode_max_occupation = 1) {
    SpacePtr space = make_code_space(level, variant, mode_max_occupation);
    bool ground_only = level == DynamicsLevel::EffectiveJump || level == DynamicsLevel::IdealJump;
    return Basis::truncated(std::move(space), ground_only ? 0 : max_excitation);
}

inline SpacePtr single_ion_space() { return make_space({Factor::ion()}); }

// --- variant conjugation -----------------------------------------------------

// Unitary implementing the basis substitution 0 <-> +, 1 <-> - on every ion
// (identity for the bit-flip variants). Self-adjoint.
inline SparseOperator variant_conjugation(CodeVariant variant, const BasisPtr& basis) {
    if (!is_phase_variant(variant)) return SparseOperator::identity(basis);
    SparseOperator u = SparseOperator::identity(basis);
    MatrixC had = ion_ground_hadamard();
    for (int j = 0; j < basis->space()->num_ions(); ++j) u = u * embed_ion(had, j, basis);
    return u;
}

inline SparseOperator conjugate_for_variant(const SparseOperator& op, CodeVariant variant) {
    if (!is_phase_variant(variant)) return op;
    SparseOperator u = variant_conjugation(variant, op.basis());
    return u * op * u;  // the map is self-adjoint
}

// --- Hamiltonians ------------------------------------------------------------

inline SparseOperator signal_hamiltonian(double omega, const BasisPtr& basis) {
    SparseOperator h(basis);
    if (omega == 0.0) return h;
    MatrixC sz = ion_sigma_z();
    for (int j = 0; j < basis->space()->num_ions(); ++j)
        h = h + embed_ion(sz, j, basis);
    return 0.5 * omega * h;
}

// Full engineered Hamiltonian: detunings, weak carrier drives and sideband
// couplings (plus the ancilla exchange coupling at the full-ancilla level).
// The sensing signal, when nonzero, is added as a literal sigma_z field.
inline SparseOperator build_hamiltonian(const ModelParams& params, CodeVariant variant,
                                        DynamicsLevel level, const BasisPtr& basis) {
    if (level != DynamicsLevel::FullWithAncilla && level != DynamicsLevel::EngineeredDecay)
        throw std::invalid_argument("a Hamiltonian exists only at the full-ancilla and engineered levels");
    params.validate();

    const auto& space = *basis->space();
    const int n_ions = space.num_ions();
    const double Delta = params.resolved_excited_detuning();
    const double delta = params.resolved_mode_detuning();
    const double omega_drive = params.drive_amplitude;
    const double g_side = params.sideband_coupling;

    SparseOperator h(basis);

    MatrixC proj_e = ion_transition(lvl_e, lvl_e);
    MatrixC proj_f = ion_transition(lvl_f, lvl_f);
    for (int j = 0; j < n_ions; ++j) h = h + Delta * (embed_ion(proj_e + proj_f, j, basis));

    int n_modes = space.num_factors() - n_ions;
    for (int m = 0; m < std::min(2, n_modes); ++m) {
        int d = space.factor(mode_factor_index(space, m)).dim;
        h = h + delta * embed_mode(mode_number(d), m, basis);
    }

    // drive: (Omega/2) (|e><1| + |f><0|) + h.c. per ion
    MatrixC up = ion_transition(lvl_e, lvl1) + ion_transition(lvl_f, lvl0);
    MatrixC drive = 0.5 * omega_drive * (up + up.adjoint());
    for (int j = 0; j < n_ions; ++j) h = h + embed_ion(drive, j, basis);

    // sidebands: G (a^dag |1><e| + b^dag |0><f|) + h.c. per ion
    if (n_modes >= 2 && g_side != 0.0) {
        int da = space.factor(mode_factor_index(space, 0)).dim;
        int db = space.factor(mode_factor_index(space, 1)).dim;
        MatrixC adag = mode_annihilation(da).adjoint();
        MatrixC bdag = mode_annihilation(db).adjoint();
        for (int j = 0; j < n_ions; ++j) {
            SparseOperator term = embed_mode(adag, 0, basis) * embed_ion(ion_transition(lvl1, lvl_e), j, basis) +
                                  embed_mode(bdag, 1, basis) * embed_ion(ion_transition(lvl0, lvl_f), j, basis);
            h = h + g_side * (term + term.adjoint());
        }
    }

    if (level == DynamicsLevel::FullWithAncilla) {
        int n_anc = n_modes - 2;
        if (n_anc <= 0) throw std::invalid_argument("full-ancilla level requires ancilla modes in the space");
        MatrixC exch = ion_transition(lvl0, lvl_e) + ion_transition(lvl1, lvl_f);
        for (int j = 0; j < n_ions; ++j) {
            int anc = is_collective_variant(variant) ? 0 : j;
            int d = space.factor(mode_factor_index(space, 2 + anc)).dim;
            SparseOperator cdag = embed_mode(mode_annihilation(d).adjoint(), 2 + anc, basis);
            SparseOperator term = cdag * embed_ion(exch, j, basis);
            h = h + params.ancilla_coupling * (term + term.adjoint());
        }
        if (params.ancilla_detuning != 0.0) {
            for (int m = 2; m < n_modes; ++m) {
                int d = space.factor(mode_factor_index(space, m)).dim;
                h = h + params.ancilla_detuning * embed_mode(mode_number(d), m, basis);
            }
        }
    }

    h = conjugate_for_variant(h, variant);
    if (params.signal_strength != 0.0)
        h = h + signal_hamiltonian(params.signal_strength, basis);
    return h;
}

// --- jump operators ----------------------------------------------------------

// Noise channels. The corrected noise type (bit_flip_rate,
// collective_flip_rate) follows the code variant; the complementary
// dephasing channels stay literal sigma_z.
inline std::vector<SparseOperator> build_noise_jumps(const ModelParams& params, CodeVariant variant,
                                                     const BasisPtr& basis) {
    params.validate();
    std::vector<SparseOperator> jumps;
    const int n_ions = basis->space()->num_ions();
    MatrixC sx = ion_sigma_x();
    MatrixC sz = ion_sigma_z();

    if (params.bit_flip_rate > 0) {
        double amp = std::sqrt(params.bit_flip_rate);
        for (int j = 0; j < n_ions; ++j)
            jumps.push_back(amp * conjugate_for_variant(embed_ion(sx, j, basis), variant));
    }
    if (params.collective_flip_rate > 0) {
        SparseOperator sum(basis);
        for (int j = 0; j < n_ions; ++j) sum = sum + embed_ion(sx, j, basis);
        jumps.push_back(std::sqrt(params.collective_flip_rate) * conjugate_for_variant(sum, variant));
    }
    if (params.dephasing_rate > 0) {
        double amp = std::sqrt(params.dephasing_rate);
        for (int j = 0; j < n_ions; ++j) jumps.push_back(amp * embed_ion(sz, j, basis));
    }
    if (params.collective_dephasing_rate > 0) {
        SparseOperator sum(basis);
        for (int j = 0; j < n_ions; ++j) sum = sum + embed_ion(sz, j, basis);
        jumps.push_back(std::sqrt(params.collective_dephasing_rate) * sum);
    }
    return jumps;
}

// Engineered cooling; the coherent two-term structure per operator preserves
// superpositions while removing the excitation. Collective variants engineer
// the single summed operator.
inline std::vector<SparseOperator> build_engineered_jumps(const ModelParams& params, CodeVariant variant,
                                                          const BasisPtr& basis) {
    double kappa_eng = params.resolved_engineered_rate();
    if (!(kappa_eng > 0))
        throw std::invalid_argument("engineered cooling requires a positive rate (direct or derived)");
    double amp = std::sqrt(kappa_eng);
    MatrixC reset = ion_transition(lvl0, lvl_e) + ion_transition(lvl1, lvl_f);
    const int n_ions = basis->space()->num_ions();

    std::vector<SparseOperator> jumps;
    if (is_collective_variant(variant)) {
        SparseOperator sum(basis);
        for (int j = 0; j < n_ions; ++j) sum = sum + embed_ion(reset, j, basis);
        jumps.push_back(amp * conjugate_for_variant(sum, variant));
    } else {
        for (int j = 0; j < n_ions; ++j)
            jumps.push_back(amp * conjugate_for_variant(embed_ion(reset, j, basis), variant));
    }
    return jumps;
}

// Cooling of the explicit ancilla modes (full-ancilla level only).
inline std::vector<SparseOperator> build_ancilla_jumps(const ModelParams& params, CodeVariant,
                                                       const BasisPtr& basis) {
    std::vector<SparseOperator> jumps;
    if (params.ancilla_cooling_rate <= 0) return jumps;
    const auto& space = *basis->space();
    int n_modes = space.num_factors() - space.num_ions();
    double amp = std::sqrt(params.ancilla_cooling_rate);
    for (int m = 2; m < n_modes; ++m) {
        int d = space.factor(mode_factor_index(space, m)).dim;
        jumps.push_back(amp * embed_mode(mode_annihilation(d), m, basis));
    }
    return jumps;
}

// Ideal conditional correction: sigma^-_j on states with exactly one ion in
// |1> plus sigma^+_j on states with exactly one ion in |0> (majority vote).
// Collective variants return the single summed operator.
inline std::vector<SparseOperator> build_ideal_correction_jumps(double correction_rate,
                                                                CodeVariant variant,
                                                                const BasisPtr& basis) {
    if (!(correction_rate > 0))
        throw std::invalid_argument("ideal correction requires a positive rate");
    double amp = std::sqrt(correction_rate);
    SparseOperator p_one_in_1 = projector_count(basis, CountedLevel::One, 1);
    SparseOperator p_one_in_0 = projector_count(basis, CountedLevel::Zero, 1);
    const int n_ions = basis->space()->num_ions();

    std::vector<SparseOperator> jumps;
    SparseOperator sum(basis);
    for (int j = 0; j < n_ions; ++j) {
        SparseOperator l = embed_ion(ion_sigma_minus(), j, basis) * p_one_in_1 +
                           embed_ion(ion_sigma_plus(), j, basis) * p_one_in_0;
        if (is_collective_variant(variant))
            sum = sum + l;
        else
            jumps.push_back(amp * conjugate_for_variant(l, variant));
    }
    if (is_collective_variant(variant)) jumps.push_back(amp * conjugate_for_variant(sum, variant));
    return jumps;
}

// Spontaneous emission of |e>, |f> with equal branching into the ground
// doublet, and decay of the interrogation modes.
inline std::vector<SparseOperator> build_imperfection_jumps(const ModelParams& params, CodeVariant variant,
                                                            const BasisPtr& basis) {
    params.validate();
    std::vector<SparseOperator> jumps;
    const auto& space = *basis->space();
    const int n_ions = space.num_ions();
    if (params.spontaneous_emission_rate > 0) {
        double amp = std::sqrt(0.5 * params.spontaneous_emission_rate);
        for (int j = 0; j < n_ions; ++j)
            for (int m : {lvl_e, lvl_f})
                for (int n : {lvl0, lvl1})
                    jumps.push_back(amp * conjugate_for_variant(embed_ion(ion_transition(n, m), j, basis), variant));
    }
    int n_modes = space.num_factors() - n_ions;
    const double decay[2] = {params.mode_decay_a, params.mode_decay_b};
    for (int m = 0; m < std::min(2, n_modes); ++m) {
        if (decay[m] <= 0) continue;
        int d = space.factor(mode_factor_index(space, m)).dim;
        jumps.push_back(std::sqrt(decay[m]) * embed_mode(mode_annihilation(d), m, basis));
    }
    return jumps;
}

// --- states and observables ---------------------------------------------------

// c0 |000> + c1 |111> (bit variants) or c0 |+++> + c1 |---> (phase variants),
// tensored with all modes in vacuum.
inline StateVector initial_codeword(CodeVariant variant, Complex c0, Complex c1, const BasisPtr& basis) {
    if (std::abs(std::norm(c0) + std::norm(c1) - 1.0) > 1e-10)
        throw std::invalid_argument("codeword coefficients must satisfy |c0|^2 + |c1|^2 = 1");
    const auto& space = *basis->space();
    const int n_ions = space.num_ions();
    std::vector<int> levels(space.num_factors(), 0);
    int idx_zero = space.index_of(levels);
    for (int j = 0; j < n_ions; ++j) levels[ion_factor_index(space, j)] = lvl1;
    int idx_one = space.index_of(levels);

    VectorC amp = VectorC::Zero(basis->size());
    int p0 = basis->position(idx_zero);
    int p1 = basis->position(idx_one);
    if (p0 < 0 || p1 < 0) throw std::invalid_argument("codeword states missing from the basis");
    amp(p0) = c0;
    amp(p1) = c1;
    StateVector psi(basis, std::move(amp));
    if (is_phase_variant(variant)) {
        SparseOperator u = variant_conjugation(variant, basis);
        psi = StateVector(basis, u.apply(psi.amplitudes()));
    }
    return psi;
}

// Projector onto the two-dimensional code space (modes in vacuum).
inline SparseOperator codespace_projector(CodeVariant variant, const BasisPtr& basis) {
    StateVector zero = initial_codeword(variant, 1.0, 0.0, basis);
    StateVector one = initial_codeword(variant, 0.0, 1.0, basis);
    MatrixC m = zero.amplitudes() * zero.amplitudes().adjoint() +
                one.amplitudes() * one.amplitudes().adjoint();
    return SparseOperator::from_dense(basis, m);
}

// Population classification for a run that starts from the given codeword:
// code space, single-flip states of that codeword, the remaining ground
// states reached only by multiple flips, and everything carrying excitation.
// The projectors are mutually orthogonal and sum to the identity (requires
// Re(conj(c0) c1) = 0, which holds for the canonical codewords).
inline std::vector<Observable> standard_observables(CodeVariant variant, Complex c0, Complex c1,
                                                    const BasisPtr& basis) {
    if (std::abs(std::real(std::conj(c0) * c1)) > 1e-12)
        throw std::invalid_argument("population classification requires Re(conj(c0) c1) = 0");
    StateVector psi = initial_codeword(variant, c0, c1, basis);
    const int n_ions = basis->space()->num_ions();

    std::vector<SparseOperator> flips;
    for (int j = 0; j < n_ions; ++j)
        flips.push_back(conjugate_for_variant(embed_ion(ion_sigma_x(), j, basis), variant));

    auto projector_from = [&](const std::vector<VectorC>& vecs) {
        MatrixC acc = MatrixC::Zero(basis->size(), basis->size());
        for (const auto& v : vecs) acc += v * v.adjoint();
        return SparseOperator::from_dense(basis, acc);
    };

    SparseOperator p_logical = codespace_projector(variant, basis);

    std::vector<VectorC> single;
    for (int j = 0; j < n_ions; ++j) single.push_back(flips[j].apply(psi.amplitudes()));
    SparseOperator p_correctable = projector_from(single);

    // diagonal projector onto zero excitation
    std::vector<Triplet> trips;
    for (int pos = 0; pos < basis->size(); ++pos)
        if (basis->space()->excitation_number(basis->state(pos)) == 0)
            trips.emplace_back(pos, pos, 1.0);
    SparseOperator p_ground = SparseOperator::from_triplets(basis, trips);

    SparseOperator p_uncorrectable = p_ground - p_logical - p_correctable;
    SparseOperator p_excited = SparseOperator::identity(basis) - p_ground;

    return {{"logical", p_logical},
            {"correctable", p_correctable},
            {"uncorrectable", p_uncorrectable},
            {"excited", p_excited}};
}

// --- model assembly -------------------------------------------------------------

// Assembles the Lindblad model at the full-ancilla, engineered or ideal-jump
// level. The effective level is assembled in effective.hpp.
inline LindbladModel build_model(const ModelParams& params, CodeVariant variant, DynamicsLevel level,
                                 const BasisPtr& basis) {
    params.validate();
    switch (level) {
        case DynamicsLevel::FullWithAncilla: {
            SparseOperator h = build_hamiltonian(params, variant, level, basis);
            auto jumps = build_noise_jumps(params, variant, basis);
            for (auto& j : build_ancilla_jumps(params, variant, basis)) jumps.push_back(std::move(j));
            for (auto& j : build_imperfection_jumps(params, variant, basis)) jumps.push_back(std::move(j));
            return LindbladModel(std::move(h), std::move(jumps));
        }
        case DynamicsLevel::EngineeredDecay: {
            SparseOperator h = build_hamiltonian(params, variant, level, basis);
            auto jumps = build_noise_jumps(params, variant, basis);
            for (auto& j : build_engineered_jumps(params, variant, basis)) jumps.push_back(std::move(j));
            for (auto& j : build_imperfection_jumps(params, variant, basis)) jumps.push_back(std::move(j));
            return LindbladModel(std::move(h), std::move(jumps));
        }
        case DynamicsLevel::IdealJump: {
            SparseOperator h = signal_hamiltonian(params.signal_strength, basis);
            auto jumps = build_noise_jumps(params, variant, basis);
            if (params.correction_rate > 0)
                for (auto& j : build_ideal_correction_jumps(params.correction_rate, variant, basis))
                    jumps.push_back(std::move(j));
            return LindbladModel(std::move(h), std::move(jumps));
        }
        case DynamicsLevel::EffectiveJump:
            throw std::invalid_argument("use build_effective_model for the effective level");
        case DynamicsLevel::RateModel:
            throw std::invalid_argument("the rate-equation level is not a Lindblad model");
    }
    throw std::logic_error("unreachable");
}

}  // namespace autoqec
