#pragma once

#include <string>

namespace mdiqkd {

/// Binary Shannon entropy in bits, with h2(0) = h2(1) = 0.
/// Throws std::domain_error outside [0, 1].
double binary_entropy(double x);

enum class Basis { z = 0, x = 1 };

/// Three-intensity decoy protocol parameters shared by both senders.
/// Intensity index order: 0 = signal (mu), 1 = decoy (nu), 2 = vacuum-like
/// (omega).
struct DecoyParams {
    double mu = 0.044;
    double nu = 0.010;
    double omega = 1e-4;
    double p_mu = 0.80;
    double p_nu = 0.15;
    double p_omega = 0.05;
    double p_z = 0.5;
    double p_x = 0.5;
    double misalignment = 0.015;  // e_d: X-basis indistinguishability error floor

    double intensity(int index) const;
    /// Full protocol validity (strict mu > nu > omega, probability simplex).
    void validate() const;
    /// Weaker check used by the gain model, which tolerates degenerate
    /// intensity sets (e.g. all zero) for noise-only studies.
    void validate_intensities_nonnegative() const;
};

struct DetectorSpec {
    double efficiency = 0.50;
    double dark_rate_hz = 100.0;
    double jitter_ps = 100.0;
    double dead_time_ns = 0.0;

    void validate() const;
    /// Probability that Gaussian timing jitter moves a detection into the
    /// neighbouring temporal mode.
    double window_migration_prob(double mode_separation_ns = 2.5) const;
};

/// Non-paralyzable rate derating: eta / (1 + rate * dead_time).
double effective_detector_efficiency(const DetectorSpec& det,
                                     double per_detector_click_rate_hz);

struct GainError {
    double gain = 0.0;   // probability of an announced Bell projection per pulse pair
    double error = 0.0;  // conditional bit-error probability among announcements
};

/// Gains and error rates for all nine intensity pairs in both bases.
/// Indexed [alice intensity][bob intensity] with the DecoyParams order.
struct GainErrorSet {
    GainError z[3][3];
    GainError x[3][3];

    const GainError& at(Basis b, int ia, int ib) const {
        return b == Basis::z ? z[ia][ib] : x[ia][ib];
    }
    GainError& at(Basis b, int ia, int ib) { return b == Basis::z ? z[ia][ib] : x[ia][ib]; }
};

/// Analytic weak-coherent-pulse model of the Bell-state measurement:
/// phase-randomized pulses interfering on a 50/50 beamsplitter with
/// threshold detectors, announcement on the cross-detector cross-window
/// click pattern only. noise_p is the per-detector per-window noise click
/// probability. Losses are one-way channel losses per arm in dB; detector
/// efficiency is applied on top.
GainErrorSet gains_and_errors(const DecoyParams& decoy, double loss_alice_db,
                              double loss_bob_db, double noise_p, const DetectorSpec& det);

struct DecoyBounds {
    double y11_z_lower = 0.0;
    double y11_x_lower = 0.0;
    double q11_z_lower = 0.0;  // mu^2 e^{-2 mu} * y11_z_lower
    double e11_x_upper = 0.5;
    bool clamped = false;  // an infeasible (non-positive) bound was clamped
};

/// Three-intensity decoy bounds on the single-photon-pair yield and X error.
/// Valid lower/upper bounds for any omega < nu < mu; omega need not be
/// exactly vacuum.
DecoyBounds decoy_bounds(const GainErrorSet& g, const DecoyParams& decoy);

/// Asymptotic secret key rate per clock cycle:
///   q11_z_lower (1 - h2(e11_x_upper)) - q_z_signal f h2(e_z_signal)
double secret_key_rate(double q11_z_lower, double e11_x_upper, double q_z_signal,
                       double e_z_signal, double ec_efficiency);

struct KeyRateReport {
    std::string scenario_id;
    GainErrorSet gains;
    DecoyBounds bounds;
    double noise_p = 0.0;
    double r_inf_raw = 0.0;  // may be negative
    double r_inf = 0.0;      // max(raw, 0)
    bool r_positive = false;
};

}  // namespace mdiqkd
