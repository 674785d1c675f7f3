#pragma once

#include "mdiqkd/channel_model.hpp"

#include <string>
#include <utility>
#include <vector>

namespace mdiqkd {

/// Measured Raman-noise spectrum at the measurement node, together with
/// the context it was taken in. Immutable after construction.
struct NoiseSpectrumTable {
    // (classical wavelength nm, summed counts Hz over both detectors)
    std::vector<std::pair<double, double>> entries;

    // measurement context
    double arm_length_km = 20.0;
    double launch_power_w = 8e-6;  // per classical channel
    double eta_det = 0.50;
    double filter_dnu_ghz = 6.0;
    double quantum_wavelength_nm = 1532.68;

    /// The spectrum shipped with the repository (1500..1565 nm, 5 nm steps).
    static NoiseSpectrumTable builtin();

    /// CSV with header "wavelength_nm,counts_hz". Parse errors name the line.
    static NoiseSpectrumTable load_csv(const std::string& path);

    void validate() const;
};

/// Linear interpolation of the spectrum; exact at table nodes.
/// Throws std::domain_error outside the tabulated range (no extrapolation).
double noise_counts_at(const NoiseSpectrumTable& table, double lambda_c_nm);

/// Inverts the scattering model against the measured spectrum and returns
/// beta*dlambda (1/km) for the (lambda_c, quantum wavelength) pair of the
/// table. The measurement geometry is two arms, each carrying one
/// co-propagating and one counter-propagating channel at the table's
/// launch power, with the summed rate of both detectors recorded.
double beta_from_table(const NoiseSpectrumTable& table, double lambda_c_nm,
                       const FibreSpec& fibre, double eta_det);

/// Raman coefficient plus detector dark counts, feeding per-window noise
/// probabilities. window_ns is the noise-integration window per temporal
/// mode.
struct NoiseModel {
    double beta_dlambda_per_km = 0.0;
    double dark_rate_hz = 100.0;
    double window_ns = 0.5;

    void validate() const;
};

/// The two arms converging on the measurement node, with their classical
/// channel plans.
struct NoiseScenario {
    FibreSpec alice_fibre;
    FibreSpec bob_fibre;
    std::vector<ClassicalChannel> alice_plan;
    std::vector<ClassicalChannel> bob_plan;
    QuantumChannelSpec quantum;
};

/// Noise probability per detector per temporal mode:
///   p = (eta * rate(total Raman at the node) / n_detectors + dark) * window
/// clipped to [0, 1]. The Raman flux splits evenly over the detectors
/// behind the 50/50 beamsplitter.
double noise_prob_per_window(const NoiseModel& model, const NoiseScenario& scenario,
                             double eta_det, int n_detectors = 2);

}  // namespace mdiqkd
