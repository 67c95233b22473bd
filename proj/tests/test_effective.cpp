#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <autoqec/effective.hpp>
#include <autoqec/ion_model.hpp>

using namespace autoqec;

namespace {

ModelParams engineered_params(double G, double kappa, double drive) {
    ModelParams p;
    p.sideband_coupling = G;
    p.engineered_cooling_rate = kappa;
    p.drive_amplitude = drive;
    return p;
}

}  // namespace

TEST_CASE("effective detunings at the resonant operating point", "[effective]") {
    double G = 100.0;

    SECTION("the single-flip block is shifted onto resonance") {
        EffectiveDetunings d = effective_detunings(Complex(G, 0), Complex(G, 0), G, 1);
        REQUIRE(std::abs(d.excited) < 1e-12);

        double kappa = 2.5;
        ModelParams p = engineered_params(G, kappa, 0.0);
        EffectiveDetunings dd = effective_detunings(complex_detunings(p), G, 1);
        // remaining width is set by the engineered cooling alone
        REQUIRE(std::abs(dd.excited.real()) < kappa * kappa / G);
        REQUIRE(dd.excited.imag() == Catch::Approx(-0.5 * kappa).margin(kappa * kappa / G));
    }
    SECTION("higher-flip blocks stay detuned by the coupling") {
        EffectiveDetunings d2 = effective_detunings(Complex(G, 0), Complex(G, 0), G, 2);
        REQUIRE(d2.excited.real() == Catch::Approx(-G));
        REQUIRE(d2.excited.imag() == 0.0);
        EffectiveDetunings d3 = effective_detunings(Complex(G, 0), Complex(G, 0), G, 3);
        REQUIRE(std::abs(d3.excited) == Catch::Approx(2 * G));
    }
    SECTION("zero detunings are rejected") {
        REQUIRE_THROWS_AS(effective_detunings(Complex(0, 0), Complex(1, 0), 1.0, 1),
                          std::invalid_argument);
    }
}

TEST_CASE("effective rates from the dressed-block inversion", "[effective]") {
    double G = 200.0, kappa = 3.0, drive = 0.2;
    ModelParams p = engineered_params(G, kappa, drive);
    ComplexDetunings cd = complex_detunings(p);

    SECTION("resonant rate reduces to drive^2 / kappa") {
        double k1 = kappa_eff(1, drive, kappa, effective_detunings(cd, G, 1).excited);
        REQUIRE(k1 == Catch::Approx(drive * drive / kappa).epsilon(1e-12));
    }
    SECTION("detuned rates match the closed forms including the linewidth") {
        for (int n : {2, 3}) {
            double kn = kappa_eff(n, drive, kappa, effective_detunings(cd, G, n).excited);
            double d2 = (n - 1.0) * (n - 1.0) * G * G + 0.25 * kappa * kappa;
            REQUIRE(kn == Catch::Approx(kappa * drive * drive / (4.0 * d2)).epsilon(1e-12));
        }
    }
    SECTION("no drive, no decay") {
        REQUIRE(kappa_eff(2, 0.0, kappa, effective_detunings(cd, G, 2).excited) == 0.0);
    }
}

TEST_CASE("power-broadened resonant rate", "[effective]") {
    double kappa = 5.0, r = 2.5;
    SECTION("weak-driving limit") {
        double drive = kappa / 1000;
        REQUIRE(kappa_eff1_strong(drive, kappa, r) ==
                Catch::Approx(drive * drive / kappa).epsilon(1e-5));
    }
    SECTION("printed checkpoints") {
        REQUIRE(kappa_eff1_strong(kappa, kappa, 2.5) == Catch::Approx(kappa / 3.5).epsilon(1e-12));
        double drive = std::sqrt(2.0 / r) * kappa;
        REQUIRE(kappa_eff1_strong(drive, kappa, r) ==
                Catch::Approx(2.0 * kappa / (3.0 * r)).epsilon(1e-12));
    }
    SECTION("monotone in the drive and bounded by kappa / r") {
        double prev = 0.0;
        for (double drive = 0.1; drive < 50.0; drive *= 1.5) {
            double k1 = kappa_eff1_strong(drive, kappa, r);
            REQUIRE(k1 > prev);
            REQUIRE(k1 < kappa / r);
            prev = k1;
        }
    }
}

TEST_CASE("excited fraction", "[effective]") {
    REQUIRE(excited_fraction(0.0, 100.0) == 0.0);
    // the two dressed contributions sum to exactly six (drive/coupling)^2
    REQUIRE(excited_fraction(1.0, 100.0) == Catch::Approx(6e-4).epsilon(1e-12));
    // optimized operating points park a few percent in the excited manifold
    double G = 5000.0;
    double kappa = 1.2 * std::cbrt(G * G);
    double f = excited_fraction(0.8 * kappa, G);
    REQUIRE(f > 0.005);
    REQUIRE(f < 0.1);
}

TEST_CASE("closed-form rate table at resonance", "[effective]") {
    double G = 5000.0;
    double kappa = 1.2 * std::cbrt(G * G);
    ModelParams p = engineered_params(G, kappa, 0.8 * kappa);
    p.bit_flip_rate = 1.0;
    EffectiveRates rates = effective_rates(p);
    REQUIRE(rates.kappa[0] == Catch::Approx(kappa_eff1_strong(p.drive_amplitude, kappa)));
    REQUIRE(rates.kappa[1] ==
            Catch::Approx(kappa * p.drive_amplitude * p.drive_amplitude / (4 * G * G)));
    REQUIRE(rates.kappa[1] / rates.kappa[2] == Catch::Approx(4.0).epsilon(1e-14));
    REQUIRE(rates.correction_rate() == rates.kappa[0]);
}

TEST_CASE("reduction reproduces the two-level inversion oracle", "[effective]") {
    // generic complex detunings: finite excited-state and mode linewidths
    double G = 150.0, kappa = 2.0, drive = 0.1;
    ModelParams p = engineered_params(G, kappa, drive);
    p.spontaneous_emission_rate = 0.3;
    p.mode_decay_a = 0.2;
    p.mode_decay_b = 0.2;

    auto basis = make_code_basis(DynamicsLevel::EngineeredDecay, CodeVariant::BitFlipIndividual, 1);
    SparseOperator h = build_hamiltonian(p, CodeVariant::BitFlipIndividual,
                                         DynamicsLevel::EngineeredDecay, basis);
    std::vector<SparseOperator> decays = build_engineered_jumps(p, CodeVariant::BitFlipIndividual, basis);
    // spontaneous emission also broadens the excited levels
    for (auto& j : build_imperfection_jumps(p, CodeVariant::BitFlipIndividual, basis))
        decays.push_back(std::move(j));

    EffectiveReduction red = effective_reduce(h, decays);
    const BasisPtr& ground = red.ground_basis;
    REQUIRE(red.jumps.size() == decays.size());

    // oracle: invert [[Delta~, G], [G, delta~]] explicitly; the amplitude of
    // the corrective transfer |100> -> |000> is sqrt(kappa) (drive/2) times
    // the excited-excited element of the inverse
    ComplexDetunings cd = complex_detunings(p);
    Complex det = cd.excited * cd.mode - G * G;
    Complex inv_ee = cd.mode / det;
    Complex expected = std::sqrt(kappa) * 0.5 * drive * inv_ee;

    const auto& gspace = *ground->space();
    int row = ground->position(gspace.index_of({0, 0, 0, 0, 0}));
    int col = ground->position(gspace.index_of({1, 0, 0, 0, 0}));
    Complex actual = red.jumps[0].entry(row, col);
    REQUIRE(std::abs(actual - expected) < 1e-12 * std::abs(expected) + 1e-15);

    // and the corresponding rate agrees with the closed-form table
    double k1 = kappa_eff(1, drive, kappa, effective_detunings(cd, G, 1).excited);
    REQUIRE(std::norm(actual) == Catch::Approx(k1).epsilon(1e-10));
}

TEST_CASE("reduction matches the closed-form jump structure", "[effective]") {
    double G = 300.0, kappa = 3.0, drive = 0.15;
    ModelParams p = engineered_params(G, kappa, drive);
    auto basis = make_code_basis(DynamicsLevel::EngineeredDecay, CodeVariant::BitFlipIndividual, 1);
    SparseOperator h = build_hamiltonian(p, CodeVariant::BitFlipIndividual,
                                         DynamicsLevel::EngineeredDecay, basis);
    auto decays = build_engineered_jumps(p, CodeVariant::BitFlipIndividual, basis);
    EffectiveReduction red = effective_reduce(h, decays);

    EffectiveModel em = build_effective_model(p, CodeVariant::BitFlipIndividual, red.ground_basis,
                                              /*strong_driving=*/false);
    // same sparsity and matching magnitudes up to the dropped linewidth
    // corrections of order (kappa / G)^2
    double tol = 2.0 * (kappa / G) * (kappa / G);
    std::size_t noise_offset = em.model.jumps.size() - red.jumps.size();
    for (std::size_t j = 0; j < red.jumps.size(); ++j) {
        const SparseOperator& closed = em.model.jumps[noise_offset + j];
        MatrixC a = MatrixC(red.jumps[j].matrix());
        MatrixC b = MatrixC(closed.matrix());
        for (int rr = 0; rr < a.rows(); ++rr)
            for (int cc = 0; cc < a.cols(); ++cc) {
                double ma = std::abs(a(rr, cc)), mb = std::abs(b(rr, cc));
                REQUIRE(std::abs(ma - mb) <= tol * std::max(mb, drive * 1e-3));
            }
    }

    // effective Hamiltonian carries only small light shifts
    REQUIRE(red.hamiltonian.max_abs() < drive * drive / kappa);
}

TEST_CASE("reduction corner cases", "[effective]") {
    double G = 100.0, kappa = 2.0;
    auto basis = make_code_basis(DynamicsLevel::EngineeredDecay, CodeVariant::BitFlipIndividual, 1);

    SECTION("no drive gives vanishing effective operators") {
        ModelParams p = engineered_params(G, kappa, 0.0);
        SparseOperator h = build_hamiltonian(p, CodeVariant::BitFlipIndividual,
                                             DynamicsLevel::EngineeredDecay, basis);
        auto decays = build_engineered_jumps(p, CodeVariant::BitFlipIndividual, basis);
        EffectiveReduction red = effective_reduce(h, decays);
        REQUIRE(red.hamiltonian.max_abs() == 0.0);
        for (const auto& j : red.jumps) REQUIRE(j.max_abs() == 0.0);
    }
    SECTION("resonant blocks without any linewidth are singular") {
        ModelParams p = engineered_params(G, kappa, 0.1);
        SparseOperator h = build_hamiltonian(p, CodeVariant::BitFlipIndividual,
                                             DynamicsLevel::EngineeredDecay, basis);
        REQUIRE_THROWS_AS(effective_reduce(h, {}), SingularBlockError);
    }
}

TEST_CASE("effective model structure", "[effective]") {
    double G = 5000.0;
    double kappa = 1.2 * std::cbrt(G * G);
    ModelParams p = engineered_params(G, kappa, 0.8 * kappa);
    p.bit_flip_rate = 1.0;
    auto ground = make_code_basis(DynamicsLevel::EffectiveJump, CodeVariant::BitFlipIndividual);
    EffectiveModel em = build_effective_model(p, CodeVariant::BitFlipIndividual, ground);

    SECTION("correction terms below the triple-flip sector are dark on the code space") {
        SparseOperator p3_one = projector_count(ground, '1', 3);
        SparseOperator p3_zero = projector_count(ground, '0', 3);
        for (Complex c0 : {Complex(1, 0), Complex(1 / std::sqrt(2.0), 0)}) {
            Complex c1 = std::sqrt(Complex(1.0, 0.0) - c0 * c0);
            StateVector code = initial_codeword(CodeVariant::BitFlipIndividual, c0, c1, ground);
            // subtract the triple-flip part; the remainder must annihilate the codeword
            for (std::size_t j = 3; j < em.model.jumps.size(); ++j) {
                const SparseOperator& l = em.model.jumps[j];
                double amp3 = std::sqrt(em.rates.kappa[2]);
                int ion = static_cast<int>(j - 3);
                SparseOperator n3 = amp3 * (embed_ion(ion_sigma_minus(), ion, ground) * p3_one +
                                            embed_ion(ion_sigma_plus(), ion, ground) * p3_zero);
                REQUIRE((l - n3).apply(code.amplitudes()).norm() < 1e-13);
            }
        }
    }
    SECTION("no drive leaves pure noise") {
        ModelParams quiet = p;
        quiet.drive_amplitude = 0.0;
        EffectiveModel em0 = build_effective_model(quiet, CodeVariant::BitFlipIndividual, ground);
        REQUIRE(em0.model.jumps.size() == 6);  // three noise flips + three zero correctors
        for (std::size_t j = 3; j < 6; ++j) REQUIRE(em0.model.jumps[j].max_abs() == 0.0);
        REQUIRE(em0.rates.excited_population == 0.0);
    }
}

TEST_CASE("single-error decay rate extracted from the full dynamics", "[effective][slow]") {
    // weak-driving regime: prepare a single-error state, let only the
    // engineered machinery act, and fit the exponential decay of its
    // population against the closed-form resonant rate
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 3; ++trial) {
        double kappa = 1.0 + u(rng);
        double drive = kappa * (0.05 + 0.05 * u(rng));  // <= kappa / 10
        double G = kappa * (40.0 + 40.0 * u(rng));
        ModelParams p = engineered_params(G, kappa, drive);

        auto basis = make_code_basis(DynamicsLevel::EngineeredDecay, CodeVariant::BitFlipIndividual, 1);
        LindbladModel model = build_model(p, CodeVariant::BitFlipIndividual,
                                          DynamicsLevel::EngineeredDecay, basis);
        StateVector err = StateVector::basis_state(
            basis, basis->space()->index_of({1, 0, 0, 0, 0}));

        double k1 = drive * drive / kappa;
        std::vector<double> grid = {0.0, 0.5 / k1, 1.0 / k1};
        SparseOperator perr = SparseOperator::from_dense(
            basis, MatrixC(err.amplitudes() * err.amplitudes().adjoint()));
        IntegratorConfig cfg;
        cfg.rel_tol = 1e-9;
        cfg.abs_tol = 1e-12;
        auto res = evolve(model, DensityMatrix::pure(err), grid, cfg, nullptr, {{"err", perr}});
        const auto& pop = res.populations.at("err");
        double fitted = 2.0 * std::log(pop[1] / pop[2]) / (grid[2] - grid[0]);
        REQUIRE(fitted == Catch::Approx(k1).epsilon(0.05));
    }
}
