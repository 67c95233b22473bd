#include <catch2/catch_amalgamated.hpp>

#include <random>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

#include <autoqec/optimizer.hpp>
#include <autoqec/rate_model.hpp>

using namespace autoqec;

namespace {

Eigen::Matrix3d rate_matrix(const RateParams& p) {
    double corr = p.correction_rate + p.backflow_rate;
    Eigen::Matrix3d m = Eigen::Matrix3d::Zero();
    m(0, 0) = -p.error_rate;
    m(0, 1) = corr;
    m(1, 0) = p.error_rate;
    m(1, 1) = -(corr + p.leakage_rate);
    m(2, 1) = p.leakage_rate;
    return m;
}

Eigen::Vector3d populations_expm(const RateParams& p, double t) {
    Eigen::Matrix3d m = rate_matrix(p) * t;
    Eigen::Vector3d p0(1.0, 0.0, 0.0);
    return m.exp() * p0;
}

Eigen::Vector3d populations_rk4(const RateParams& p, double t, int steps) {
    Eigen::Matrix3d m = rate_matrix(p);
    Eigen::Vector3d y(1.0, 0.0, 0.0);
    double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        Eigen::Vector3d k1 = m * y;
        Eigen::Vector3d k2 = m * (y + 0.5 * h * k1);
        Eigen::Vector3d k3 = m * (y + 0.5 * h * k2);
        Eigen::Vector3d k4 = m * (y + h * k3);
        y += (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return y;
}

EffectiveRates rates_with(double k1, double k2, double k3) {
    EffectiveRates r;
    r.kappa = {k1, k2, k3};
    return r;
}

}  // namespace

TEST_CASE("rate derivation from the effective decay table", "[rate-model]") {
    SECTION("perfect-selectivity limit") {
        RateParams p = derive_rates(1.0, rates_with(50.0, 0.0, 0.0));
        REQUIRE(p.error_rate == Catch::Approx(3.0));
        REQUIRE(p.correction_rate == Catch::Approx(50.0));
        REQUIRE(p.leakage_rate == Catch::Approx(2.0));
        REQUIRE(p.backflow_rate == 0.0);
    }
    SECTION("long-time optimized operating point") {
        double alpha = alpha_of_tau(std::numeric_limits<double>::infinity());
        RateParams p = derive_rates(1.0, rates_with(1.0, alpha / 4.0, alpha / 16.0));
        REQUIRE(p.error_rate == Catch::Approx(3.3).epsilon(0.02));
        REQUIRE(p.leakage_rate == Catch::Approx(2.7).epsilon(0.01));
    }
    SECTION("short-time optimized operating point") {
        RateParams p = derive_rates(1.0, rates_with(1.0, 2.0, 0.5));
        REQUIRE(p.error_rate == Catch::Approx(4.5));
        REQUIRE(p.leakage_rate == Catch::Approx(6.0));
    }
    SECTION("optional backflow") {
        RateParams p = derive_rates(0.7, rates_with(1.0, 0.0, 0.0), true);
        REQUIRE(p.backflow_rate == Catch::Approx(0.7));
    }
}

TEST_CASE("closed form against the matrix-exponential oracle", "[rate-model]") {
    std::mt19937 rng(123);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int accepted = 0;
    while (accepted < 100) {
        RateParams p;
        p.error_rate = 5.0 * u(rng);
        p.correction_rate = 50.0 * u(rng);
        p.leakage_rate = 5.0 * u(rng);
        double total = p.error_rate + p.correction_rate + p.leakage_rate;
        double disc = total * total - 4.0 * p.error_rate * p.leakage_rate;
        if (disc <= 1e-6 || total == 0) continue;
        ++accepted;

        double slow = 0.5 * (total - std::sqrt(disc));
        double horizon = slow > 1e-3 ? 10.0 / slow : 10.0;
        std::vector<double> grid;
        for (int i = 0; i <= 20; ++i) grid.push_back(horizon * i / 20.0);
        RateSolution sol = solve_rate_model(p, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            Eigen::Vector3d oracle = populations_expm(p, grid[i]);
            REQUIRE(std::abs(sol.p_logical[i] - oracle(0)) < 1e-10);
            REQUIRE(std::abs(sol.p_correctable[i] - oracle(1)) < 1e-10);
            REQUIRE(std::abs(sol.p_uncorrectable[i] - oracle(2)) < 1e-10);
            REQUIRE(std::abs(sol.p_logical[i] + sol.p_correctable[i] + sol.p_uncorrectable[i] - 1.0) <
                    1e-12);
        }
    }
}

TEST_CASE("closed form against a direct integration oracle", "[rate-model]") {
    RateParams p;
    p.error_rate = 3.2;
    p.correction_rate = 31.0;
    p.leakage_rate = 2.6;
    SECTION("without backflow") {
        RateSolution sol = solve_rate_model(p, {0.0, 0.5, 1.0});
        Eigen::Vector3d oracle = populations_rk4(p, 1.0, 20000);
        REQUIRE(sol.p_logical.back() == Catch::Approx(oracle(0)).margin(1e-10));
        REQUIRE(sol.p_correctable.back() == Catch::Approx(oracle(1)).margin(1e-10));
    }
    SECTION("with backflow") {
        p.backflow_rate = 1.0;
        RateSolution sol = solve_rate_model(p, {0.0, 1.0});
        Eigen::Vector3d oracle = populations_rk4(p, 1.0, 20000);
        REQUIRE(sol.p_logical.back() == Catch::Approx(oracle(0)).margin(1e-10));
    }
}

TEST_CASE("degenerate and trivial rate systems", "[rate-model]") {
    SECTION("no loss channel keeps the logical population at one") {
        RateParams p;
        p.correction_rate = 2.0;
        p.leakage_rate = 1.0;
        RateSolution sol = solve_rate_model(p, {0.0, 1.0, 5.0});
        for (double v : sol.p_logical) REQUIRE(v == Catch::Approx(1.0).margin(1e-14));
    }
    SECTION("all rates zero is the frozen system") {
        RateSolution sol = solve_rate_model(RateParams{}, {0.0, 2.0});
        REQUIRE(sol.p_logical.back() == 1.0);
    }
    SECTION("coinciding fast and slow rates are refused") {
        RateParams p;
        p.error_rate = 1.0;
        p.leakage_rate = 1.0;
        REQUIRE_THROWS_AS(solve_rate_model(p, {0.0, 1.0}), std::domain_error);
    }
    SECTION("negative rates are refused") {
        RateParams p;
        p.error_rate = -1.0;
        REQUIRE_THROWS_AS(solve_rate_model(p, {0.0, 1.0}), std::invalid_argument);
    }
}

TEST_CASE("strong-correction asymptotics", "[rate-model]") {
    RateParams p;
    p.error_rate = 3.0;
    p.correction_rate = 3000.0;
    p.leakage_rate = 2.0;
    RateSolution sol = solve_rate_model(p, {0.0, 1.0});
    REQUIRE(sol.static_error == Catch::Approx(p.error_rate / p.correction_rate).epsilon(0.01));
    REQUIRE(sol.slow_rate ==
            Catch::Approx(p.error_rate * p.leakage_rate / p.correction_rate).epsilon(0.01));
    REQUIRE(sol.effective_decay_rate == sol.slow_rate);
}

TEST_CASE("hockey-stick summary", "[rate-model]") {
    SECTION("perfect-correction limit") {
        RateParams p = derive_rates(1.0, rates_with(800.0, 0.0, 0.0));
        HockeyStickSummary hs = hockey_stick_summary(p);
        REQUIRE(hs.static_error == Catch::Approx(3.0 / 800.0));
        REQUIRE(hs.effective_decay_rate == Catch::Approx(6.0 / 800.0));
    }
    SECTION("no leakage, no long-time decay") {
        RateParams p;
        p.error_rate = 1.0;
        p.correction_rate = 10.0;
        HockeyStickSummary hs = hockey_stick_summary(p);
        REQUIRE(hs.effective_decay_rate == 0.0);
    }
    SECTION("zero correction rate is refused") {
        RateParams p;
        p.error_rate = 1.0;
        p.leakage_rate = 0.5;
        REQUIRE_THROWS_AS(hockey_stick_summary(p), std::domain_error);
    }
}
