#include "mdiqkd/keyrate_engine.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace mdiqkd {

double binary_entropy(double x) {
    if (x < 0.0 || x > 1.0) throw std::domain_error("binary_entropy: argument outside [0, 1]");
    if (x == 0.0 || x == 1.0) return 0.0;
    return -x * std::log2(x) - (1.0 - x) * std::log2(1.0 - x);
}

double DecoyParams::intensity(int index) const {
    switch (index) {
        case 0: return mu;
        case 1: return nu;
        case 2: return omega;
        default: throw std::out_of_range("DecoyParams::intensity: index");
    }
}

void DecoyParams::validate() const {
    if (!(mu > nu && nu > omega && omega >= 0.0))
        throw std::domain_error("DecoyParams: require mu > nu > omega >= 0");
    const double ps = p_mu + p_nu + p_omega;
    if (p_mu <= 0.0 || p_nu <= 0.0 || p_omega <= 0.0 || std::abs(ps - 1.0) > 1e-9)
        throw std::domain_error("DecoyParams: intensity probabilities must be positive and sum to 1");
    if (p_z <= 0.0 || p_x <= 0.0 || std::abs(p_z + p_x - 1.0) > 1e-9)
        throw std::domain_error("DecoyParams: basis probabilities must be positive and sum to 1");
    if (misalignment < 0.0 || misalignment > 0.5)
        throw std::domain_error("DecoyParams: misalignment must lie in [0, 0.5]");
}

void DecoyParams::validate_intensities_nonnegative() const {
    if (mu < 0.0 || nu < 0.0 || omega < 0.0)
        throw std::domain_error("DecoyParams: intensities must be >= 0");
    if (misalignment < 0.0 || misalignment > 0.5)
        throw std::domain_error("DecoyParams: misalignment must lie in [0, 0.5]");
}

void DetectorSpec::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw std::domain_error("DetectorSpec: efficiency must lie in [0, 1]");
    if (dark_rate_hz < 0.0 || jitter_ps < 0.0 || dead_time_ns < 0.0)
        throw std::domain_error("DetectorSpec: rates and times must be >= 0");
}

double DetectorSpec::window_migration_prob(double mode_separation_ns) const {
    if (jitter_ps <= 0.0) return 0.0;
    // displacement beyond half the separation lands in the neighbour mode
    const double sigma_ns = jitter_ps * 1e-3;
    const double z = 0.5 * mode_separation_ns / (sigma_ns * std::sqrt(2.0));
    return std::erfc(z);
}

double effective_detector_efficiency(const DetectorSpec& det,
                                     double per_detector_click_rate_hz) {
    det.validate();
    if (det.dead_time_ns <= 0.0 || per_detector_click_rate_hz <= 0.0) return det.efficiency;
    return det.efficiency / (1.0 + per_detector_click_rate_hz * det.dead_time_ns * 1e-9);
}

namespace {

constexpr int kPhaseGrid = 128;

const std::array<double, kPhaseGrid>& phase_cosines() {
    static const std::array<double, kPhaseGrid> table = [] {
        std::array<double, kPhaseGrid> t{};
        for (int i = 0; i < kPhaseGrid; ++i)
            t[i] = std::cos((i + 0.5) * 2.0 * M_PI / kPhaseGrid);
        return t;
    }();
    return table;
}

struct TimeBinAmps {
    double early = 0.0;
    double late = 0.0;
};

// signed amplitudes; squared magnitudes sum to the detected mean photon number
TimeBinAmps state_amps(Basis basis, int bit, double mean) {
    if (basis == Basis::z) {
        return bit == 0 ? TimeBinAmps{std::sqrt(mean), 0.0} : TimeBinAmps{0.0, std::sqrt(mean)};
    }
    const double s = std::sqrt(0.5 * mean);
    return bit == 0 ? TimeBinAmps{s, s} : TimeBinAmps{s, -s};
}

// Probability of the exclusive cross-detector cross-window click pattern,
// averaged over the relative phase of the two phase-randomized pulses.
// Conditioned on the phase, each of the four detector/window modes is an
// independent coherent state under threshold detection.
double announced_prob(const TimeBinAmps& a, const TimeBinAmps& b, double noise_p) {
    const auto& cosines = phase_cosines();
    const double se = 0.5 * (a.early * a.early + b.early * b.early);
    const double sl = 0.5 * (a.late * a.late + b.late * b.late);
    const double ce = a.early * b.early;
    const double cl = a.late * b.late;
    const double keep = 1.0 - noise_p;
    double acc = 0.0;
    for (int i = 0; i < kPhaseGrid; ++i) {
        const double c = cosines[i];
        const double q1e = keep * std::exp(-(se + ce * c));
        const double q2e = keep * std::exp(-(se - ce * c));
        const double q1l = keep * std::exp(-(sl + cl * c));
        const double q2l = keep * std::exp(-(sl - cl * c));
        acc += (1.0 - q1e) * q1l * q2e * (1.0 - q2l)   // D1 early, D2 late
             + q1e * (1.0 - q1l) * (1.0 - q2e) * q2l;  // D2 early, D1 late
    }
    return acc / kPhaseGrid;
}

GainError pair_gain(Basis basis, double mean_a, double mean_b, double noise_p,
                    double flip_prob) {
    double q = 0.0;
    double eq = 0.0;
    for (int bit_a = 0; bit_a < 2; ++bit_a) {
        for (int bit_b = 0; bit_b < 2; ++bit_b) {
            const TimeBinAmps a = state_amps(basis, bit_a, mean_a);
            TimeBinAmps b = state_amps(basis, bit_b, mean_b);
            double p = (1.0 - flip_prob) * announced_prob(a, b, noise_p);
            if (flip_prob > 0.0) {
                b.late = -b.late;
                p += flip_prob * announced_prob(a, b, noise_p);
            }
            q += 0.25 * p;
            // the announced projection implies anticorrelated bits; equal
            // bits among announcements are errors
            if (bit_a == bit_b) eq += 0.25 * p;
        }
    }
    return GainError{q, q > 0.0 ? eq / q : 0.0};
}

}  // namespace

GainErrorSet gains_and_errors(const DecoyParams& decoy, double loss_alice_db,
                              double loss_bob_db, double noise_p, const DetectorSpec& det) {
    decoy.validate_intensities_nonnegative();
    det.validate();
    if (loss_alice_db < 0.0 || loss_bob_db < 0.0)
        throw std::domain_error("gains_and_errors: losses must be >= 0 dB");
    if (noise_p < 0.0 || noise_p >= 1.0)
        throw std::domain_error("gains_and_errors: noise_p must lie in [0, 1)");

    const double t_alice = std::pow(10.0, -loss_alice_db / 10.0) * det.efficiency;
    const double t_bob = std::pow(10.0, -loss_bob_db / 10.0) * det.efficiency;

    // timing jitter enters as first-order window leakage on top of the
    // misalignment floor; negligible at realistic jitter but kept explicit
    const double migration = det.window_migration_prob();
    const double flip = decoy.misalignment + 2.0 * migration * (1.0 - 2.0 * decoy.misalignment);

    GainErrorSet out;
    for (int ia = 0; ia < 3; ++ia) {
        for (int ib = 0; ib < 3; ++ib) {
            const double ma = decoy.intensity(ia) * t_alice;
            const double mb = decoy.intensity(ib) * t_bob;
            out.z[ia][ib] = pair_gain(Basis::z, ma, mb, noise_p, flip);
            out.x[ia][ib] = pair_gain(Basis::x, ma, mb, noise_p, flip);
        }
    }
    return out;
}

namespace {

// sum_{n,m >= 1} (x^n - w^n)(y^m - w^m) / (n! m!) * Y_nm, assembled from the
// Poisson-weighted gains; exact for any omega = w
double h_combination(const GainErrorSet& g, Basis basis, int ix, int iy, int iw,
                     const DecoyParams& d, bool error_weighted) {
    auto term = [&](int ia, int ib) {
        const GainError& ge = g.at(basis, ia, ib);
        const double v = error_weighted ? ge.gain * ge.error : ge.gain;
        return std::exp(d.intensity(ia) + d.intensity(ib)) * v;
    };
    return term(ix, iy) - term(ix, iw) - term(iw, iy) + term(iw, iw);
}

}  // namespace

DecoyBounds decoy_bounds(const GainErrorSet& g, const DecoyParams& decoy) {
    decoy.validate();
    const double mu = decoy.mu, nu = decoy.nu, om = decoy.omega;

    // scale factor that cancels the lowest contaminating photon-number terms
    const double lambda =
        (nu - om) * (nu * nu - om * om) / ((mu - om) * (mu * mu - om * om));
    const double denom = (nu - om) * (nu - om) * (mu - nu) / (mu + om);

    DecoyBounds b;
    auto y11_lower = [&](Basis basis) {
        const double h_nn = h_combination(g, basis, 1, 1, 2, decoy, false);
        const double h_mm = h_combination(g, basis, 0, 0, 2, decoy, false);
        return (h_nn - lambda * h_mm) / denom;
    };

    const double yz = y11_lower(Basis::z);
    const double yx = y11_lower(Basis::x);
    b.clamped = yz <= 0.0 || yx <= 0.0;
    b.y11_z_lower = std::max(yz, 0.0);
    b.y11_x_lower = std::max(yx, 0.0);

    const double p1_mu = mu * std::exp(-mu);
    b.q11_z_lower = p1_mu * p1_mu * b.y11_z_lower;

    if (b.y11_x_lower > 0.0) {
        const double ht_nn = h_combination(g, Basis::x, 1, 1, 2, decoy, true);
        const double e = ht_nn / ((nu - om) * (nu - om) * b.y11_x_lower);
        if (e < 0.0 || e > 0.5) b.clamped = true;
        b.e11_x_upper = std::clamp(e, 0.0, 0.5);
    } else {
        b.e11_x_upper = 0.5;
    }
    return b;
}

double secret_key_rate(double q11_z_lower, double e11_x_upper, double q_z_signal,
                       double e_z_signal, double ec_efficiency) {
    if (q11_z_lower < 0.0 || q_z_signal < 0.0)
        throw std::domain_error("secret_key_rate: gains must be >= 0");
    if (e11_x_upper < 0.0 || e11_x_upper > 1.0 || e_z_signal < 0.0 || e_z_signal > 1.0)
        throw std::domain_error("secret_key_rate: error rates must lie in [0, 1]");
    if (ec_efficiency < 1.0)
        throw std::domain_error("secret_key_rate: error-correction efficiency must be >= 1");
    return q11_z_lower * (1.0 - binary_entropy(e11_x_upper)) -
           q_z_signal * ec_efficiency * binary_entropy(e_z_signal);
}

}  // namespace mdiqkd
