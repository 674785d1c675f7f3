#include "mdiqkd/calibration.hpp"

#include <doctest.h>

#include <cmath>
#include <fstream>

using namespace mdiqkd;

namespace {

FibreSpec table_fibre() {
    FibreSpec f;
    f.length_km = 20.0;
    f.alpha_q_db_per_km = 0.23025850929940457;  // 0.053 /km natural
    f.alpha_c_db_per_km = 0.30;
    return f;
}

}  // namespace

TEST_CASE("spectrum interpolation") {
    const auto table = NoiseSpectrumTable::builtin();
    CHECK(noise_counts_at(table, 1550.0) == doctest::Approx(28670.0));
    CHECK(noise_counts_at(table, 1530.0) == doctest::Approx(13000.0));
    // hand interpolation between 31.00 kHz @ 1545 and 28.67 kHz @ 1550
    CHECK(noise_counts_at(table, 1548.0) == doctest::Approx(29602.0).epsilon(1e-12));
    CHECK_THROWS_AS(noise_counts_at(table, 1499.9), std::domain_error);
    CHECK_THROWS_AS(noise_counts_at(table, 1565.1), std::domain_error);
}

TEST_CASE("interpolation is monotone between nodes and continuous") {
    const auto table = NoiseSpectrumTable::builtin();
    for (std::size_t i = 0; i + 1 < table.entries.size(); ++i) {
        const double lo = table.entries[i].first, hi = table.entries[i + 1].first;
        double prev = noise_counts_at(table, lo);
        const bool rising = table.entries[i + 1].second >= table.entries[i].second;
        for (int k = 1; k <= 10; ++k) {
            const double v = noise_counts_at(table, lo + (hi - lo) * k / 10.0);
            if (rising)
                CHECK(v >= prev - 1e-9);
            else
                CHECK(v <= prev + 1e-9);
            prev = v;
        }
        CHECK(prev == doctest::Approx(table.entries[i + 1].second));
    }
}

TEST_CASE("shipped CSV matches the builtin spectrum") {
    const auto disk = NoiseSpectrumTable::load_csv("data/raman_noise_charlie_v1.csv");
    const auto builtin = NoiseSpectrumTable::builtin();
    REQUIRE(disk.entries.size() == builtin.entries.size());
    for (std::size_t i = 0; i < disk.entries.size(); ++i) {
        CHECK(disk.entries[i].first == builtin.entries[i].first);
        CHECK(disk.entries[i].second == builtin.entries[i].second);
    }
}

TEST_CASE("CSV loader rejects malformed input") {
    const char* path = "build/bad_spectrum.csv";
    {
        std::ofstream f(path);
        f << "wavelength_nm,counts_hz\n1500,33330\n1505,not_a_number\n";
    }
    CHECK_THROWS_WITH_AS(NoiseSpectrumTable::load_csv(path),
                         doctest::Contains(":3"), std::runtime_error);
}

TEST_CASE("beta extraction round trip") {
    const auto table = NoiseSpectrumTable::builtin();
    const FibreSpec f = table_fibre();

    SUBCASE("zero counts give zero beta") {
        auto zero = table;
        for (auto& e : zero.entries) e.second = 0.0;
        CHECK(beta_from_table(zero, 1548.0, f, 0.5) == 0.0);
    }
    SUBCASE("linear in the counts") {
        auto doubled = table;
        for (auto& e : doubled.entries) e.second *= 2.0;
        CHECK(beta_from_table(doubled, 1548.0, f, 0.5) ==
              doctest::Approx(2.0 * beta_from_table(table, 1548.0, f, 0.5)).epsilon(1e-12));
    }
    SUBCASE("forward model reproduces every node") {
        for (const auto& [lambda_c, counts] : table.entries) {
            const double beta = beta_from_table(table, lambda_c, f, table.eta_det);
            const double per_arm =
                raman_co(table.launch_power_w, beta, f.alpha_q_nat(), f.alpha_c_nat(),
                         f.length_km) +
                raman_counter(table.launch_power_w, beta, f.alpha_q_nat(), f.alpha_c_nat(),
                              f.length_km);
            const double forward =
                table.eta_det * power_to_photon_rate(2.0 * per_arm, table.quantum_wavelength_nm);
            CHECK(forward == doctest::Approx(counts).epsilon(1e-6));
        }
    }
    SUBCASE("inconsistent context is rejected") {
        FibreSpec wrong = f;
        wrong.length_km = 25.0;
        CHECK_THROWS_AS(beta_from_table(table, 1548.0, wrong, 0.5), std::domain_error);
    }
}

TEST_CASE("noise probability per window") {
    NoiseModel model;
    model.beta_dlambda_per_km = 0.0;
    model.dark_rate_hz = 100.0;
    model.window_ns = 0.5;

    NoiseScenario sc;
    sc.alice_fibre = sc.bob_fibre = table_fibre();
    sc.quantum = QuantumChannelSpec::from_dnu(1532.68, 6.0);

    SUBCASE("dark counts only") {
        CHECK(noise_prob_per_window(model, sc, 0.5) == doctest::Approx(5e-8).epsilon(1e-12));
    }

    const auto table = NoiseSpectrumTable::builtin();
    const double beta = beta_from_table(table, 1548.0, table_fibre(), table.eta_det);
    model.beta_dlambda_per_km = beta;
    ClassicalChannel co{1548.0, 8e-6, Direction::co_propagating};
    ClassicalChannel ct{1548.0, 8e-6, Direction::counter_propagating};
    sc.alice_plan = {co, ct};
    sc.bob_plan = {co, ct};

    SUBCASE("table context reproduces half the summed rate per detector") {
        const double p = noise_prob_per_window(model, sc, 0.5);
        CHECK(p == doctest::Approx((29602.0 / 2.0 + 100.0) * 0.5e-9).epsilon(1e-6));
    }
    SUBCASE("doubling the channel plan doubles the scattering term") {
        const double base = noise_prob_per_window(model, sc, 0.5) - 5e-8;
        sc.alice_plan = {co, co, ct, ct};
        sc.bob_plan = {co, co, ct, ct};
        const double twice = noise_prob_per_window(model, sc, 0.5) - 5e-8;
        CHECK(twice == doctest::Approx(2.0 * base).epsilon(1e-9));
    }
    SUBCASE("non-decreasing in launch power") {
        const double p0 = noise_prob_per_window(model, sc, 0.5);
        for (auto* plan : {&sc.alice_plan, &sc.bob_plan})
            for (auto& ch : *plan) ch.launch_power_w *= 3.0;
        CHECK(noise_prob_per_window(model, sc, 0.5) >= p0);
    }
    SUBCASE("non-decreasing in length for counter-propagating channels") {
        sc.alice_plan = {ct};
        sc.bob_plan = {ct};
        double prev = 0.0;
        for (double L : {5.0, 20.0, 60.0, 120.0}) {
            sc.alice_fibre.length_km = L;
            sc.bob_fibre.length_km = L;
            const double p = noise_prob_per_window(model, sc, 0.5);
            CHECK(p >= prev);
            prev = p;
        }
    }
}
