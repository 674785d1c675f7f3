#include "mdiqkd/channel_model.hpp"

#include <cmath>
#include <stdexcept>
#include <utility>

namespace mdiqkd {

namespace {
constexpr double kLn10Over10 = 0.23025850929940457;  // ln(10)/10
}

double db_per_km_to_natural(double alpha_db_per_km) {
    return alpha_db_per_km * kLn10Over10;
}

double FibreSpec::alpha_q_nat() const { return db_per_km_to_natural(alpha_q_db_per_km); }
double FibreSpec::alpha_c_nat() const { return db_per_km_to_natural(alpha_c_db_per_km); }

void FibreSpec::validate() const {
    if (length_km < 0.0) throw std::domain_error("FibreSpec: length_km must be >= 0");
    if (alpha_q_db_per_km <= 0.0) throw std::domain_error("FibreSpec: alpha_q_db_per_km must be > 0");
    if (alpha_c_db_per_km <= 0.0) throw std::domain_error("FibreSpec: alpha_c_db_per_km must be > 0");
}

void ClassicalChannel::validate() const {
    if (launch_power_w < 0.0) throw std::domain_error("ClassicalChannel: launch_power_w must be >= 0");
    if (wavelength_nm < 1260.0 || wavelength_nm > 1625.0)
        throw std::domain_error("ClassicalChannel: wavelength_nm must lie in [1260, 1625]");
}

QuantumChannelSpec QuantumChannelSpec::from_dnu(double wavelength_nm, double dnu_ghz) {
    QuantumChannelSpec q;
    q.wavelength_nm = wavelength_nm;
    q.filter_dnu_ghz = dnu_ghz;
    const double lambda_m = wavelength_nm * 1e-9;
    q.filter_dlambda_nm = lambda_m * lambda_m * (dnu_ghz * 1e9) / kLightSpeedMs * 1e9;
    return q;
}

void QuantumChannelSpec::validate() const {
    if (filter_dlambda_nm <= 0.0 || filter_dnu_ghz <= 0.0)
        throw std::domain_error("QuantumChannelSpec: bandwidth must be positive");
    const double lambda_m = wavelength_nm * 1e-9;
    const double dlambda_from_dnu =
        lambda_m * lambda_m * (filter_dnu_ghz * 1e9) / kLightSpeedMs * 1e9;
    if (std::abs(filter_dlambda_nm - dlambda_from_dnu) > 1e-3 * dlambda_from_dnu)
        throw std::domain_error("QuantumChannelSpec: dlambda and dnu disagree beyond 0.1%");
}

double attenuate(double power_w, double alpha_db_per_km, double length_km) {
    if (power_w < 0.0 || alpha_db_per_km < 0.0 || length_km < 0.0)
        throw std::domain_error("attenuate: arguments must be >= 0");
    return power_w * std::pow(10.0, -alpha_db_per_km * length_km / 10.0);
}

double raman_co(double launch_power_w, double beta_dlambda_per_km,
                double alpha_q_nat, double alpha_c_nat, double length_km) {
    if (launch_power_w < 0.0 || beta_dlambda_per_km < 0.0 || alpha_q_nat < 0.0 ||
        alpha_c_nat < 0.0 || length_km < 0.0)
        throw std::domain_error("raman_co: arguments must be >= 0");
    // symmetric in (alpha_q, alpha_c); canonical order keeps the swap exact
    double lo = alpha_q_nat, hi = alpha_c_nat;
    if (lo > hi) std::swap(lo, hi);
    const double diff = hi - lo;
    if (diff < 1e-9) {
        // degenerate denominator: analytic limit of the loss-difference form
        const double a = 0.5 * (lo + hi);
        return launch_power_w * beta_dlambda_per_km * length_km * std::exp(-a * length_km);
    }
    // exp(-lo L) - exp(-hi L) evaluated without cancellation
    return launch_power_w * beta_dlambda_per_km * std::exp(-lo * length_km) *
           (-std::expm1(-diff * length_km)) / diff;
}

double raman_counter(double launch_power_w, double beta_dlambda_per_km,
                     double alpha_q_nat, double alpha_c_nat, double length_km) {
    if (launch_power_w < 0.0 || beta_dlambda_per_km < 0.0 || alpha_q_nat < 0.0 ||
        alpha_c_nat < 0.0 || length_km < 0.0)
        throw std::domain_error("raman_counter: arguments must be >= 0");
    const double s = alpha_c_nat + alpha_q_nat;
    if (s == 0.0) return launch_power_w * beta_dlambda_per_km * length_km;
    return launch_power_w * beta_dlambda_per_km * (-std::expm1(-s * length_km)) / s;
}

double raman_bidirectional(const std::vector<ClassicalChannel>& plan,
                           const FibreSpec& fibre, double beta_dlambda_per_km) {
    fibre.validate();
    double total = 0.0;
    for (const ClassicalChannel& ch : plan) {
        ch.validate();
        if (ch.direction == Direction::co_propagating)
            total += raman_co(ch.launch_power_w, beta_dlambda_per_km, fibre.alpha_q_nat(),
                              fibre.alpha_c_nat(), fibre.length_km);
        else
            total += raman_counter(ch.launch_power_w, beta_dlambda_per_km, fibre.alpha_q_nat(),
                                   fibre.alpha_c_nat(), fibre.length_km);
    }
    return total;
}

double power_to_photon_rate(double power_w, double wavelength_nm) {
    if (power_w < 0.0) throw std::domain_error("power_to_photon_rate: power must be >= 0");
    return power_w * (wavelength_nm * 1e-9) / (kPlanckJs * kLightSpeedMs);
}

}  // namespace mdiqkd
