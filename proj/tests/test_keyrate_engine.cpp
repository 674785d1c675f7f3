#include "mdiqkd/keyrate_engine.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace mdiqkd;

TEST_CASE("binary entropy") {
    CHECK(binary_entropy(0.5) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(binary_entropy(0.0) == 0.0);
    CHECK(binary_entropy(1.0) == 0.0);
    CHECK(binary_entropy(0.25) == doctest::Approx(0.8112781245).epsilon(1e-9));
    CHECK_THROWS_AS(binary_entropy(-0.01), std::domain_error);
    CHECK_THROWS_AS(binary_entropy(1.01), std::domain_error);
}

TEST_CASE("binary entropy is concave") {
    std::mt19937 gen(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double a = u(gen), b = u(gen);
        CHECK(binary_entropy(0.5 * (a + b)) >=
              0.5 * (binary_entropy(a) + binary_entropy(b)) - 1e-12);
    }
}

namespace {

DecoyParams zero_intensity_decoy() {
    DecoyParams d;
    d.mu = d.nu = d.omega = 0.0;
    d.misalignment = 0.0;
    return d;
}

DetectorSpec ideal_detector() {
    DetectorSpec det;
    det.efficiency = 1.0;
    det.jitter_ps = 0.0;
    det.dead_time_ns = 0.0;
    return det;
}

}  // namespace

TEST_CASE("vacuum pulses without noise never announce") {
    const GainErrorSet g = gains_and_errors(zero_intensity_decoy(), 0.0, 0.0, 0.0, ideal_detector());
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(g.z[i][j].gain == 0.0);
            CHECK(g.x[i][j].gain == 0.0);
        }
}

TEST_CASE("noise-only gain equals the accidental coincidence closed form") {
    const double pn = 3.7e-4;
    const GainErrorSet g = gains_and_errors(zero_intensity_decoy(), 0.0, 0.0, pn, ideal_detector());
    const double expect = oracle::accidental_coincidence(pn);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            CHECK(g.z[i][j].gain == doctest::Approx(expect).epsilon(1e-9));
            CHECK(g.x[i][j].gain == doctest::Approx(expect).epsilon(1e-9));
            // noise carries no bit correlation
            CHECK(g.z[i][j].error == doctest::Approx(0.5).epsilon(1e-9));
        }
}

TEST_CASE("analytic gains match the state-vector oracle") {
    DecoyParams d;
    d.mu = 0.6;
    d.nu = 0.25;
    d.omega = 0.05;
    d.misalignment = 0.02;
    DetectorSpec det = ideal_detector();
    det.efficiency = 0.8;
    const double loss_a = 1.2, loss_b = 2.4, pn = 3e-4;
    const GainErrorSet g = gains_and_errors(d, loss_a, loss_b, pn, det);

    const double ta = std::pow(10.0, -loss_a / 10.0) * det.efficiency;
    const double tb = std::pow(10.0, -loss_b / 10.0) * det.efficiency;
    for (Basis basis : {Basis::z, Basis::x}) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const GainError ref = oracle::pair_gain_oracle(
                    basis, d.intensity(i) * ta, d.intensity(j) * tb, pn, d.misalignment);
                CAPTURE(int(basis));
                CAPTURE(i);
                CAPTURE(j);
                CHECK(g.at(basis, i, j).gain == doctest::Approx(ref.gain).epsilon(1e-8));
                CHECK(g.at(basis, i, j).error == doctest::Approx(ref.error).epsilon(1e-7));
            }
        }
    }
}

TEST_CASE("gain model rejects bad inputs") {
    DecoyParams d;
    CHECK_THROWS_AS(gains_and_errors(d, 0.0, 0.0, 1.0, ideal_detector()), std::domain_error);
    CHECK_THROWS_AS(gains_and_errors(d, -1.0, 0.0, 0.0, ideal_detector()), std::domain_error);
}

TEST_CASE("gains grow with intensity and rates fall with noise") {
    DecoyParams d;
    DetectorSpec det;
    const GainErrorSet g = gains_and_errors(d, 4.6, 4.6, 1e-6, det);
    // index 0 = signal is the largest intensity
    CHECK(g.z[0][0].gain >= g.z[1][1].gain);
    CHECK(g.z[1][1].gain >= g.z[2][2].gain);

    double prev = 1.0;
    for (double pn : {1e-7, 1e-5, 1e-4, 5e-4}) {
        const GainErrorSet gi = gains_and_errors(d, 4.6, 4.6, pn, det);
        const DecoyBounds b = decoy_bounds(gi, d);
        const double r = secret_key_rate(b.q11_z_lower, b.e11_x_upper, gi.z[0][0].gain,
                                         gi.z[0][0].error, 1.14);
        CHECK(r < prev);
        prev = r;
    }
}

TEST_CASE("rate is symmetric under swapping the arms") {
    DecoyParams d;
    DetectorSpec det;
    const GainErrorSet ab = gains_and_errors(d, 3.0, 6.0, 2e-5, det);
    const GainErrorSet ba = gains_and_errors(d, 6.0, 3.0, 2e-5, det);
    const DecoyBounds b1 = decoy_bounds(ab, d);
    const DecoyBounds b2 = decoy_bounds(ba, d);
    CHECK(b1.q11_z_lower == doctest::Approx(b2.q11_z_lower).epsilon(1e-10));
    CHECK(b1.e11_x_upper == doctest::Approx(b2.e11_x_upper).epsilon(1e-10));
}

TEST_CASE("decoy bounds clamp degenerate inputs") {
    DecoyParams d;
    GainErrorSet zeros{};
    const DecoyBounds b = decoy_bounds(zeros, d);
    CHECK(b.q11_z_lower == 0.0);
    CHECK(b.clamped);
}

TEST_CASE("decoy bounds approach truth in the single-photon-dominated limit") {
    DecoyParams d;
    d.mu = 0.02;
    d.nu = 0.008;
    d.omega = 0.0;
    d.misalignment = 0.0;
    DetectorSpec det = ideal_detector();
    const GainErrorSet g = gains_and_errors(d, 0.0, 0.0, 0.0, det);
    const DecoyBounds b = decoy_bounds(g, d);

    // lossless noiseless single photon pairs in the Z basis announce iff the
    // bits differ (1/2) and the photons split to opposite detectors (1/2)
    const double y11_true = 0.25;
    const double q11_true = d.mu * std::exp(-d.mu) * d.mu * std::exp(-d.mu) * y11_true;
    CHECK(b.q11_z_lower <= q11_true * (1.0 + 1e-9));
    CHECK(b.q11_z_lower == doctest::Approx(q11_true).epsilon(0.05));

    // same check against photon-number-tagged Monte Carlo truth
    CampaignScenario cs;
    cs.decoy = d;
    cs.detector = det;
    const CampaignResult mc = run_campaign(cs, 80'000'000, 8, 2);
    const TallyCell& tagged = mc.tagged11[int(Basis::z)];
    REQUIRE(tagged.announced > 1000);
    const double q11_tagged = d.mu * std::exp(-d.mu) * d.mu * std::exp(-d.mu) * tagged.gain();
    CHECK(b.q11_z_lower <= q11_tagged * (1.0 + 3.0 * tagged.gain_stderr() / tagged.gain()));
    CHECK(b.q11_z_lower == doctest::Approx(q11_tagged).epsilon(0.05));
}

TEST_CASE("secret key rate formula") {
    CHECK(secret_key_rate(2e-4, 0.0, 0.0, 0.0, 1.14) == doctest::Approx(2e-4));
    // maximal single-photon error wipes out the privacy term
    const double r = secret_key_rate(2e-4, 0.5, 1e-3, 0.02, 1.14);
    CHECK(r == doctest::Approx(-1e-3 * 1.14 * binary_entropy(0.02)).epsilon(1e-12));
    CHECK(r <= 0.0);
    CHECK_THROWS_AS(secret_key_rate(1e-4, 0.0, 1e-4, 0.0, 0.9), std::domain_error);
}

TEST_CASE("effective efficiency derating") {
    DetectorSpec det;
    det.dead_time_ns = 0.0;
    CHECK(effective_detector_efficiency(det, 1e6) == det.efficiency);
    det.dead_time_ns = 100.0;
    CHECK(effective_detector_efficiency(det, 0.0) == det.efficiency);
    CHECK(effective_detector_efficiency(det, 1e7) ==
          doctest::Approx(det.efficiency / 2.0).epsilon(1e-12));
}

TEST_CASE("window migration probability is negligible at realistic jitter") {
    DetectorSpec det;
    det.jitter_ps = 100.0;
    CHECK(det.window_migration_prob(2.5) < 1e-30);
    det.jitter_ps = 2500.0;
    CHECK(det.window_migration_prob(2.5) > 0.3);
}
