#include "mdiqkd/channel_model.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace mdiqkd;

TEST_CASE("attenuate matches launch/output anchors") {
    // 8 uW over 20 km at 0.30 dB/km leaves ~2 uW
    CHECK(attenuate(8e-6, 0.30, 20.0) == doctest::Approx(2e-6).epsilon(0.01));
    // 20 uW over 40 km at 0.25 dB/km leaves 2 uW exactly
    CHECK(attenuate(20e-6, 0.25, 40.0) == doctest::Approx(2e-6).epsilon(1e-12));
    CHECK(attenuate(3.7e-3, 0.0, 123.0) == doctest::Approx(3.7e-3));
    CHECK_THROWS_AS(attenuate(-1.0, 0.3, 10.0), std::domain_error);
    CHECK_THROWS_AS(attenuate(1.0, -0.3, 10.0), std::domain_error);
}

TEST_CASE("attenuate composes over segments") {
    const double p = 5e-6, a = 0.21;
    const double two_step = attenuate(attenuate(p, a, 7.0), a, 13.0);
    CHECK(two_step == doctest::Approx(attenuate(p, a, 20.0)).epsilon(1e-12));
}

TEST_CASE("scattered power closed forms match quadrature") {
    const double pl = 8e-6, beta = 3e-9;
    SUBCASE("single anchor point") {
        const double co = raman_co(pl, beta, 0.053, 0.069, 20.0);
        const double ct = raman_counter(pl, beta, 0.053, 0.069, 20.0);
        CHECK(co == doctest::Approx(oracle::raman_co_quadrature(pl, beta, 0.053, 0.069, 20.0))
                        .epsilon(1e-9));
        CHECK(ct ==
              doctest::Approx(oracle::raman_counter_quadrature(pl, beta, 0.053, 0.069, 20.0))
                  .epsilon(1e-9));
    }
    SUBCASE("grid") {
        for (double L : {1.0, 10.0, 20.0, 40.0, 100.0}) {
            for (double aq : {0.05, 0.06, 0.07, 0.08}) {
                for (double ac : {0.05, 0.065, 0.08}) {
                    CAPTURE(L);
                    CAPTURE(aq);
                    CAPTURE(ac);
                    CHECK(raman_co(pl, beta, aq, ac, L) ==
                          doctest::Approx(oracle::raman_co_quadrature(pl, beta, aq, ac, L))
                              .epsilon(1e-9));
                    CHECK(raman_counter(pl, beta, aq, ac, L) ==
                          doctest::Approx(oracle::raman_counter_quadrature(pl, beta, aq, ac, L))
                              .epsilon(1e-9));
                }
            }
        }
    }
}

TEST_CASE("scattering edge cases") {
    CHECK(raman_co(8e-6, 3e-9, 0.05, 0.07, 0.0) == 0.0);
    CHECK(raman_counter(8e-6, 3e-9, 0.05, 0.07, 0.0) == 0.0);

    // equal attenuations: analytic limit of the singular quotient
    const double limit = 8e-6 * 3e-9 * 20.0 * std::exp(-0.06 * 20.0);
    CHECK(raman_co(8e-6, 3e-9, 0.06, 0.06, 20.0) == doctest::Approx(limit).epsilon(1e-12));

    // counter-propagating collection saturates with length
    const double sat = 8e-6 * 3e-9 / (0.053 + 0.069);
    CHECK(raman_counter(8e-6, 3e-9, 0.053, 0.069, 1e4) == doctest::Approx(sat).epsilon(1e-6));
    CHECK(raman_counter(1.0, 1e-9, 0.0, 0.0, 7.0) == doctest::Approx(7e-9));
}

TEST_CASE("raman_co is symmetric under exchanging the attenuations") {
    for (double d : {1e-12, 1e-10, 1e-8, 1e-3, 0.02}) {
        const double a = raman_co(8e-6, 3e-9, 0.05, 0.05 + d, 25.0);
        const double b = raman_co(8e-6, 3e-9, 0.05 + d, 0.05, 25.0);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("counter collects more than co when the classical band attenuates faster") {
    for (double L : {1.0, 5.0, 20.0, 60.0}) {
        CHECK(raman_counter(8e-6, 3e-9, 0.05, 0.07, L) >= raman_co(8e-6, 3e-9, 0.05, 0.07, L));
    }
}

TEST_CASE("raman_bidirectional sums the plan") {
    FibreSpec f;
    f.length_km = 20.0;
    f.alpha_q_db_per_km = 0.23026;
    f.alpha_c_db_per_km = 0.30;

    CHECK(raman_bidirectional({}, f, 3e-9) == 0.0);

    ClassicalChannel co{1548.0, 8e-6, Direction::co_propagating};
    ClassicalChannel ct{1548.0, 8e-6, Direction::counter_propagating};
    const double both = raman_bidirectional({co, ct}, f, 3e-9);
    const double expect = raman_co(8e-6, 3e-9, f.alpha_q_nat(), f.alpha_c_nat(), 20.0) +
                          raman_counter(8e-6, 3e-9, f.alpha_q_nat(), f.alpha_c_nat(), 20.0);
    CHECK(both == doctest::Approx(expect).epsilon(1e-12));

    // linear in every launch power
    ClassicalChannel co2 = co, ct2 = ct;
    co2.launch_power_w *= 2.0;
    ct2.launch_power_w *= 2.0;
    CHECK(raman_bidirectional({co2, ct2}, f, 3e-9) == doctest::Approx(2.0 * both).epsilon(1e-12));
}

TEST_CASE("photon rate relation") {
    const double lam = 1532.0;
    const double single = kPlanckJs * kLightSpeedMs / (lam * 1e-9);
    CHECK(power_to_photon_rate(single, lam) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(power_to_photon_rate(1e-12, 1532.0) == doctest::Approx(7.712e6).epsilon(1e-3));
    CHECK(power_to_photon_rate(0.0, 1310.0) == 0.0);
    // linear in power
    CHECK(power_to_photon_rate(3e-9, 1548.0) ==
          doctest::Approx(3.0 * power_to_photon_rate(1e-9, 1548.0)).epsilon(1e-12));
    CHECK_THROWS_AS(power_to_photon_rate(-1e-12, 1532.0), std::domain_error);
}

TEST_CASE("quantum channel bandwidth representations") {
    const auto q = QuantumChannelSpec::from_dnu(1532.68, 6.0);
    CHECK_NOTHROW(q.validate());
    CHECK(q.filter_dlambda_nm == doctest::Approx(0.047).epsilon(0.01));

    QuantumChannelSpec bad = q;
    bad.filter_dlambda_nm *= 1.01;
    CHECK_THROWS_AS(bad.validate(), std::domain_error);
}

TEST_CASE("spec validation") {
    FibreSpec f;
    f.length_km = -1.0;
    CHECK_THROWS_AS(f.validate(), std::domain_error);
    ClassicalChannel c;
    c.wavelength_nm = 1200.0;
    CHECK_THROWS_AS(c.validate(), std::domain_error);
}
