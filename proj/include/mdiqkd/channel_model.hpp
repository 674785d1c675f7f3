#pragma once

#include <vector>

namespace mdiqkd {

inline constexpr double kPlanckJs = 6.62607015e-34;
inline constexpr double kLightSpeedMs = 2.99792458e8;

enum class Direction { co_propagating, counter_propagating };

/// Per-arm fibre description. Attenuation is configured in dB/km
/// (engineering convention) and converted to natural 1/km units where the
/// scattering formulas need it.
struct FibreSpec {
    double length_km = 20.0;
    double alpha_q_db_per_km = 0.23026;  // at the quantum wavelength
    double alpha_c_db_per_km = 0.30;     // at the classical wavelength

    double alpha_q_nat() const;  // 1/km
    double alpha_c_nat() const;
    void validate() const;  // throws std::domain_error on bad fields
};

struct ClassicalChannel {
    double wavelength_nm = 1548.0;
    double launch_power_w = 8e-6;
    Direction direction = Direction::co_propagating;

    void validate() const;
};

/// Quantum-channel passband, carried both as dlambda (nm) and dnu (GHz).
/// The two must agree under dlambda = lambda^2 dnu / c to within 0.1%.
struct QuantumChannelSpec {
    double wavelength_nm = 1532.68;
    double filter_dlambda_nm = 0.0;
    double filter_dnu_ghz = 6.0;

    static QuantumChannelSpec from_dnu(double wavelength_nm, double dnu_ghz);
    void validate() const;
};

double db_per_km_to_natural(double alpha_db_per_km);

/// Exponential fibre loss: power * 10^(-alpha L / 10).
double attenuate(double power_w, double alpha_db_per_km, double length_km);

/// Forward-scattered power collected at the far end of the fibre when the
/// classical channel co-propagates with the quantum channel.
/// Attenuation coefficients are natural (1/km); beta_dlambda is the
/// scattering coefficient times the quantum passband, in 1/km.
double raman_co(double launch_power_w, double beta_dlambda_per_km,
                double alpha_q_nat, double alpha_c_nat, double length_km);

/// Back-scattered power collected at the launch end (counter-propagating
/// classical channel). Saturates at P * beta_dlambda / (alpha_c + alpha_q).
double raman_counter(double launch_power_w, double beta_dlambda_per_km,
                     double alpha_q_nat, double alpha_c_nat, double length_km);

/// Sum of co/counter contributions of every channel in the plan.
double raman_bidirectional(const std::vector<ClassicalChannel>& plan,
                           const FibreSpec& fibre, double beta_dlambda_per_km);

/// n = P lambda / (h c)
double power_to_photon_rate(double power_w, double wavelength_nm);

}  // namespace mdiqkd
