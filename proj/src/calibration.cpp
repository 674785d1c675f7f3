#include "mdiqkd/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace mdiqkd {

NoiseSpectrumTable NoiseSpectrumTable::builtin() {
    NoiseSpectrumTable t;
    t.entries = {
        {1500.0, 33330.0}, {1505.0, 35330.0}, {1510.0, 40670.0}, {1515.0, 41330.0},
        {1520.0, 38000.0}, {1525.0, 30000.0}, {1530.0, 13000.0}, {1535.0, 11670.0},
        {1540.0, 23670.0}, {1545.0, 31000.0}, {1550.0, 28670.0}, {1555.0, 26330.0},
        {1560.0, 23000.0}, {1565.0, 17670.0},
    };
    return t;
}

NoiseSpectrumTable NoiseSpectrumTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open noise spectrum file: " + path);
    NoiseSpectrumTable t;
    t.entries.clear();
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        if (lineno == 1 || line.find("wavelength") != std::string::npos) {
            if (line != "wavelength_nm,counts_hz")
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": expected header wavelength_nm,counts_hz");
            continue;
        }
        std::istringstream ss(line);
        std::string a, b;
        if (!std::getline(ss, a, ',') || !std::getline(ss, b))
            throw std::runtime_error(path + ":" + std::to_string(lineno) + ": malformed row");
        try {
            size_t pos = 0;
            double wl = std::stod(a, &pos);
            if (pos != a.size()) throw std::invalid_argument(a);
            double counts = std::stod(b, &pos);
            t.entries.emplace_back(wl, counts);
        } catch (const std::exception&) {
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": malformed numeric value");
        }
    }
    t.validate();
    return t;
}

void NoiseSpectrumTable::validate() const {
    if (entries.empty()) throw std::domain_error("NoiseSpectrumTable: empty");
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].second < 0.0)
            throw std::domain_error("NoiseSpectrumTable: counts must be >= 0");
        if (i > 0 && entries[i].first <= entries[i - 1].first)
            throw std::domain_error("NoiseSpectrumTable: wavelengths must be strictly increasing");
    }
    if (launch_power_w < 0.0 || eta_det <= 0.0 || eta_det > 1.0 || arm_length_km <= 0.0 ||
        filter_dnu_ghz <= 0.0)
        throw std::domain_error("NoiseSpectrumTable: bad measurement context");
}

double noise_counts_at(const NoiseSpectrumTable& table, double lambda_c_nm) {
    table.validate();
    const auto& e = table.entries;
    if (lambda_c_nm < e.front().first || lambda_c_nm > e.back().first)
        throw std::domain_error("noise_counts_at: wavelength outside tabulated range");
    auto it = std::lower_bound(e.begin(), e.end(), lambda_c_nm,
                               [](const auto& p, double v) { return p.first < v; });
    if (it->first == lambda_c_nm) return it->second;
    const auto& hi = *it;
    const auto& lo = *(it - 1);
    const double f = (lambda_c_nm - lo.first) / (hi.first - lo.first);
    return lo.second + f * (hi.second - lo.second);
}

double beta_from_table(const NoiseSpectrumTable& table, double lambda_c_nm,
                       const FibreSpec& fibre, double eta_det) {
    table.validate();
    fibre.validate();
    if (eta_det <= 0.0 || eta_det > 1.0)
        throw std::domain_error("beta_from_table: eta_det must lie in (0, 1]");
    if (std::abs(fibre.length_km - table.arm_length_km) > 1e-9)
        throw std::domain_error("beta_from_table: fibre length inconsistent with table context");

    const double counts = noise_counts_at(table, lambda_c_nm);
    if (counts == 0.0) return 0.0;

    // forward model at unit beta*dlambda: two arms, each one co- plus one
    // counter-propagating channel at the table's launch power
    const double per_arm =
        raman_co(table.launch_power_w, 1.0, fibre.alpha_q_nat(), fibre.alpha_c_nat(),
                 fibre.length_km) +
        raman_counter(table.launch_power_w, 1.0, fibre.alpha_q_nat(), fibre.alpha_c_nat(),
                      fibre.length_km);
    const double rate_per_beta =
        eta_det * power_to_photon_rate(2.0 * per_arm, table.quantum_wavelength_nm);
    if (rate_per_beta <= 0.0)
        throw std::domain_error("beta_from_table: degenerate measurement context");
    return counts / rate_per_beta;
}

void NoiseModel::validate() const {
    if (beta_dlambda_per_km < 0.0 || dark_rate_hz < 0.0 || window_ns < 0.0)
        throw std::domain_error("NoiseModel: fields must be >= 0");
}

double noise_prob_per_window(const NoiseModel& model, const NoiseScenario& scenario,
                             double eta_det, int n_detectors) {
    model.validate();
    if (n_detectors < 1) throw std::domain_error("noise_prob_per_window: n_detectors < 1");
    const double raman_w =
        raman_bidirectional(scenario.alice_plan, scenario.alice_fibre, model.beta_dlambda_per_km) +
        raman_bidirectional(scenario.bob_plan, scenario.bob_fibre, model.beta_dlambda_per_km);
    const double rate =
        eta_det * power_to_photon_rate(raman_w, scenario.quantum.wavelength_nm) / n_detectors +
        model.dark_rate_hz;
    const double p = rate * model.window_ns * 1e-9;
    return std::clamp(p, 0.0, 1.0);
}

}  // namespace mdiqkd
