#pragma once

#include "mdiqkd/calibration.hpp"
#include "mdiqkd/channel_model.hpp"
#include "mdiqkd/keyrate_engine.hpp"
#include "mdiqkd/protocol_sim.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace mdiqkd {

enum class DirectionMode { bidirectional, unidirectional_co };
enum class Engine { analytic, montecarlo };

/// One fully resolved evaluation point. Classical channels are emulated as
/// a single worst-case-wavelength channel of n_channels times the per-link
/// power, with launch power back-computed so every receiver sees
/// receiver_power_w per link.
struct Scenario {
    std::string id;
    double arm_length_km = 20.0;
    double quantum_wavelength_nm = 1532.68;
    double classical_wavelength_nm = 1548.0;
    int n_channels = 0;
    DirectionMode direction = DirectionMode::bidirectional;

    double alpha_q_db_per_km = 0.23026;
    double alpha_c_db_per_km = 0.30;
    double beta_dlambda_per_km = 0.0;
    double receiver_power_w = 2e-6;
    double noise_gate_ns = 2.5;  // effective noise-integration gate per mode
    double filter_dnu_ghz = 6.0;

    DecoyParams decoy;
    DetectorSpec detector;
    double ec_efficiency = 1.14;
    double clock_rate_hz = 20e6;

    Engine engine = Engine::analytic;
    std::uint64_t cycles = 100'000'000;
    std::uint64_t seed = 1;
    bool find_n_max = false;

    void validate() const;
};

/// Defaults that depend on the quantum wavelength. The 1310 nm attenuation
/// and Raman factor are order-of-magnitude defaults, overridable in config.
double default_alpha_q_db_per_km(double quantum_wavelength_nm);
double default_beta_dlambda_per_km(double quantum_wavelength_nm,
                                   double classical_wavelength_nm);

/// Per-arm classical plan and derived noise numbers for a scenario.
struct ResolvedNoise {
    double launch_power_w = 0.0;  // per emulated aggregate channel
    double raman_p = 0.0;         // per detector per window
    double dark_p = 0.0;
    double noise_p = 0.0;
    double fibre_loss_db = 0.0;  // one-way quantum loss per arm
};
ResolvedNoise resolve_noise(const Scenario& s);

struct EvaluatedPoint {
    Scenario scenario;
    KeyRateReport report;
    double r_inf_bps = 0.0;
    // Monte-Carlo columns; zero for the analytic engine
    double stderr_q_z_signal = 0.0;
    std::optional<CampaignResult> campaign;
};

EvaluatedPoint run_scenario(const Scenario& s);

/// Largest channel count with a positive analytic rate (0 when even one
/// channel kills the key; capped search).
int n_max_channels(Scenario s, int cap = 1 << 20);

struct SweepResult {
    std::vector<EvaluatedPoint> points;
    std::vector<std::string> provenance;  // defaulted-field records from config
    std::vector<std::pair<std::string, int>> n_max;  // per scenario group
};

struct LoadedConfig {
    std::vector<Scenario> scenarios;
    std::vector<std::string> provenance;
};

/// JSON config with explicit units in key names. Unknown keys are hard
/// errors; every defaulted field is recorded.
LoadedConfig load_config(const std::string& path);

SweepResult run_sweep(const LoadedConfig& config);

/// CSV schema:
/// scenario_id,length_km_total,lambda_q_nm,lambda_c_nm,direction,n_channels,
/// noise_prob,q11_lower,e11x_upper,r_inf_per_cycle,r_inf_bps,stderr
void write_sweep_csv(const SweepResult& result, std::ostream& out);
void emit_report(const SweepResult& result, const std::string& csv_path,
                 const std::string& summary_path);

struct SweepCsvRow {
    std::string scenario_id;
    double length_km_total, lambda_q_nm, lambda_c_nm;
    std::string direction;
    int n_channels;
    double noise_prob, q11_lower, e11x_upper, r_inf_per_cycle, r_inf_bps, stderr_col;
};
std::vector<SweepCsvRow> parse_sweep_csv(std::istream& in);

/// Reference secret-key-rate measurements used for cross-checking.
struct ReferenceRatePoint {
    double arm_length_km;
    int n_channels;
    double r_inf;
    double sigma;
};
const std::vector<ReferenceRatePoint>& reference_rates();

struct RateComparison {
    ReferenceRatePoint ref;
    double computed;
    bool within_band;
};
/// Evaluates the analytic engine at every reference point with default
/// parameters.
std::vector<RateComparison> compare_reference_rates();

}  // namespace mdiqkd
