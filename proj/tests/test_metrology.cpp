#include <catch2/catch_amalgamated.hpp>

#include <autoqec/effective.hpp>
#include <autoqec/metrology.hpp>

using namespace autoqec;

namespace {

RamseyConfig sensing_config(double G) {
    RamseyConfig cfg;
    cfg.params.bit_flip_rate = 1.0;
    cfg.params.sideband_coupling = G;
    cfg.params.engineered_cooling_rate = 1.2 * std::cbrt(G * G);
    cfg.params.drive_amplitude = 0.8 * cfg.params.engineered_cooling_rate;
    cfg.params.correction_rate =
        kappa_eff1_strong(cfg.params.drive_amplitude, cfg.params.engineered_cooling_rate);
    return cfg;
}

}  // namespace

TEST_CASE("pulse maps the pole state onto the balanced superposition", "[metrology]") {
    auto basis = make_code_basis(DynamicsLevel::EffectiveJump, CodeVariant::BitFlipIndividual);
    StateVector zero = initial_codeword(CodeVariant::BitFlipIndividual, 1.0, 0.0, basis);
    DensityMatrix rho = ramsey_pulse(DensityMatrix::pure(zero), +1);

    StateVector target = initial_codeword(CodeVariant::BitFlipIndividual,
                                          Complex(1 / std::sqrt(2.0), 0),
                                          Complex(1 / std::sqrt(2.0), 0), basis);
    REQUIRE(fidelity(rho, target) == Catch::Approx(1.0).margin(1e-13));
}

TEST_CASE("opposite pulses cancel", "[metrology]") {
    auto basis = make_code_basis(DynamicsLevel::EffectiveJump, CodeVariant::BitFlipIndividual);
    StateVector psi = initial_codeword(CodeVariant::BitFlipIndividual, Complex(0.6, 0),
                                       Complex(0, 0.8), basis);
    DensityMatrix rho = DensityMatrix::pure(psi);
    DensityMatrix back = ramsey_pulse(ramsey_pulse(rho, +1), -1);
    REQUIRE((back.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("accumulated phase converts to the fringe population", "[metrology]") {
    auto basis = make_code_basis(DynamicsLevel::EffectiveJump, CodeVariant::BitFlipIndividual);
    SparseOperator p1 = embed_ion(ion_transition(lvl1, lvl1), 0, basis);
    for (double phi : {0.0, 0.4, 1.1, M_PI / 2, 2.2, M_PI}) {
        Complex c1 = std::exp(Complex(0, -phi)) / std::sqrt(2.0);
        StateVector evolved = initial_codeword(CodeVariant::BitFlipIndividual,
                                               Complex(1 / std::sqrt(2.0), 0), c1, basis);
        DensityMatrix out = ramsey_pulse(DensityMatrix::pure(evolved), +1);
        double expect = std::cos(phi / 2) * std::cos(phi / 2);
        REQUIRE(out.expectation(p1) == Catch::Approx(expect).margin(1e-12));
    }
}

TEST_CASE("noiseless sequence traces the ideal fringe", "[metrology]") {
    RamseyConfig cfg;
    cfg.correction_enabled = false;
    double omega = 0.8;
    for (double tau : {0.3, 1.0, 2.5}) {
        double expect = std::pow(std::cos(1.5 * omega * tau), 2);
        REQUIRE(ramsey_run(cfg, tau, omega) == Catch::Approx(expect).margin(1e-7));
    }
    // no signal: the second pulse completes the rotation into the |111> pole
    REQUIRE(ramsey_run(cfg, 1.0, 0.0) == Catch::Approx(1.0).margin(1e-9));
}

TEST_CASE("spin flips damp the fringe contrast", "[metrology]") {
    RamseyConfig noisy;
    noisy.params.bit_flip_rate = 1.0;
    noisy.correction_enabled = false;
    double omega = 2.0;  // flips at half the signal strength
    double tau_revival = 2.0 * M_PI / (3.0 * omega);  // full fringe period
    double ideal = std::pow(std::cos(1.5 * omega * tau_revival), 2);
    double damped = ramsey_run(noisy, tau_revival, omega);
    REQUIRE(ideal == Catch::Approx(1.0).margin(1e-12));
    REQUIRE(damped < ideal - 0.05);
    REQUIRE(damped >= 0.0);
}

TEST_CASE("active correction leaves the noiseless fringe untouched", "[metrology]") {
    // the corrector is dark on the code space, so with no noise the signal
    // phase must be preserved by every backend
    double omega = 0.7, tau = 1.3;
    double expect = std::pow(std::cos(1.5 * omega * tau), 2);

    SECTION("conditional-jump backend") {
        RamseyConfig cfg;
        cfg.backend = DynamicsLevel::IdealJump;
        cfg.params.correction_rate = 50.0;
        REQUIRE(ramsey_run(cfg, tau, omega) == Catch::Approx(expect).margin(1e-6));
    }
    SECTION("reduced backend with a wide scale separation") {
        RamseyConfig cfg;
        cfg.backend = DynamicsLevel::EffectiveJump;
        cfg.params.sideband_coupling = 1e6;
        cfg.params.engineered_cooling_rate = 1.0;
        cfg.params.drive_amplitude = 0.3;
        REQUIRE(ramsey_run(cfg, tau, omega) == Catch::Approx(expect).margin(1e-6));
    }
    SECTION("full engineered backend with a weak drive") {
        RamseyConfig cfg;
        cfg.backend = DynamicsLevel::EngineeredDecay;
        cfg.params.sideband_coupling = 100.0;
        cfg.params.engineered_cooling_rate = 0.3;
        cfg.params.drive_amplitude = 0.03;
        REQUIRE(ramsey_run(cfg, tau, omega) == Catch::Approx(expect).margin(1e-6));
    }
}

TEST_CASE("ideal sensitivity follows the shot-noise curve", "[metrology]") {
    RamseyConfig cfg;
    cfg.correction_enabled = false;
    for (double tau : {0.01, 1.0, 100.0}) {
        SensitivityPoint pt = sensitivity(cfg, tau);
        REQUIRE(std::abs(pt.normalized_uncertainty - 1.0 / (3.0 * std::sqrt(tau))) < 1e-6);
        REQUIRE(pt.p1 == Catch::Approx(0.5).margin(1e-6));
    }
}

TEST_CASE("degenerate operating points are reported", "[metrology]") {
    RamseyConfig cfg;
    cfg.correction_enabled = false;
    cfg.policy = OperatingPointPolicy::FixedSignal;
    cfg.fixed_signal = M_PI / 3.0;  // fringe extremum at tau = 1
    REQUIRE_THROWS_AS(sensitivity(cfg, 1.0), std::domain_error);
}

TEST_CASE("corrected sensitivity interleaves between the reference curves", "[metrology][slow]") {
    double G = 5000.0;
    RamseyConfig corrected = sensing_config(G);
    corrected.backend = DynamicsLevel::EffectiveJump;

    RamseyConfig ideal = corrected;
    ideal.backend = DynamicsLevel::IdealJump;

    RamseyConfig uncorrected = corrected;
    uncorrected.correction_enabled = false;

    RamseyConfig clean = corrected;
    clean.params.bit_flip_rate = 0.0;
    clean.correction_enabled = false;

    std::vector<double> taus = {0.01, 0.1, 1.0, 10.0, 100.0};
    auto a = sensitivity_sweep(clean, taus);
    auto b = sensitivity_sweep(ideal, taus);
    auto c = sensitivity_sweep(corrected, taus);
    auto d = sensitivity_sweep(uncorrected, taus);
    for (std::size_t i = 0; i < taus.size(); ++i) {
        REQUIRE(a[i].p1 >= -1e-9);
        REQUIRE(c[i].p1 <= 1.0 + 1e-9);
        REQUIRE(a[i].normalized_uncertainty <= b[i].normalized_uncertainty * 1.05);
        REQUIRE(b[i].normalized_uncertainty <= c[i].normalized_uncertainty * 1.05);
        REQUIRE(c[i].normalized_uncertainty <= d[i].normalized_uncertainty * 1.05);
    }
}

TEST_CASE("complementary dephasing envelope", "[metrology]") {
    REQUIRE(envelope_complementary(0.87, 0.0, 0.0, 5.0) == 0.87);
    REQUIRE(envelope_complementary(1.0, 0.02, 0.01, 1.0) ==
            Catch::Approx(std::exp(-(3 * 0.02 + 0.01))));
}

TEST_CASE("dephasing envelope tracks the simulated complement", "[metrology][slow]") {
    double G = 1000.0;
    ModelParams clean;
    clean.bit_flip_rate = 1.0;
    clean.sideband_coupling = G;
    clean.engineered_cooling_rate = 1.2 * std::cbrt(G * G);
    clean.drive_amplitude = 0.8 * clean.engineered_cooling_rate;
    ModelParams noisy = clean;
    noisy.dephasing_rate = 0.02;

    auto basis = make_code_basis(DynamicsLevel::EngineeredDecay, CodeVariant::BitFlipIndividual, 1);
    StateVector psi = initial_codeword(CodeVariant::BitFlipIndividual,
                                       Complex(1 / std::sqrt(2.0), 0), Complex(0, 1 / std::sqrt(2.0)),
                                       basis);
    IntegratorConfig ic;
    ic.rel_tol = 1e-7;
    ic.abs_tol = 1e-10;
    double f_clean = evolve(build_model(clean, CodeVariant::BitFlipIndividual,
                                        DynamicsLevel::EngineeredDecay, basis),
                            DensityMatrix::pure(psi), {0.0, 1.0}, ic, &psi)
                         .fidelity.back();
    double f_noisy = evolve(build_model(noisy, CodeVariant::BitFlipIndividual,
                                        DynamicsLevel::EngineeredDecay, basis),
                            DensityMatrix::pure(psi), {0.0, 1.0}, ic, &psi)
                         .fidelity.back();
    double predicted = envelope_complementary(f_clean, noisy.dephasing_rate, 0.0, 1.0);
    REQUIRE(std::abs(predicted - f_noisy) < 0.02);
}

TEST_CASE("multi-qubit scaling formulas", "[metrology]") {
    ScalingReport one = scaling_formulas(1, 1.0, 100.0, 1.0);
    REQUIRE(one.product_normalized_uncertainty == Catch::Approx(1.0 / 3.0));
    ScalingReport four = scaling_formulas(4, 1.0, 100.0, 1.0);
    REQUIRE(four.product_normalized_uncertainty == Catch::Approx(1.0 / 6.0));
    // square-root statistical scaling in the number of logical qubits
    REQUIRE(four.product_normalized_uncertainty ==
            Catch::Approx(one.product_normalized_uncertainty / 2.0));
    REQUIRE(one.entangled_qubit_exponent == Catch::Approx(-5.0 / 6.0));
    REQUIRE(one.entangled_rate_exponent == Catch::Approx(1.0 / 6.0));
    REQUIRE(one.epsilon == Catch::Approx(0.01));
    REQUIRE_THROWS_AS(scaling_formulas(0, 1.0, 1.0, 1.0), std::invalid_argument);
}
