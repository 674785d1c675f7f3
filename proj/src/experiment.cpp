#include "mdiqkd/experiment.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mdiqkd {

namespace {

constexpr double kAlphaQ1532DbPerKm = 0.23025850929940457;  // 0.053 /km natural
constexpr double kAlphaQ1310DbPerKm = 0.33;                 // typical, non-authoritative
constexpr double kBeta1310PerKm = 4.5e-13;  // O-band quantum / C-band classical, fitted default

}  // namespace

void Scenario::validate() const {
    if (arm_length_km < 0.0) throw std::domain_error("Scenario: arm_length_km must be >= 0");
    if (n_channels < 0) throw std::domain_error("Scenario: n_channels must be >= 0");
    if (receiver_power_w < 0.0) throw std::domain_error("Scenario: receiver_power_w must be >= 0");
    if (noise_gate_ns <= 0.0) throw std::domain_error("Scenario: noise_gate_ns must be > 0");
    if (clock_rate_hz <= 0.0) throw std::domain_error("Scenario: clock_rate_hz must be > 0");
    if (beta_dlambda_per_km < 0.0)
        throw std::domain_error("Scenario: beta_dlambda_per_km must be >= 0");
    if (cycles == 0) throw std::domain_error("Scenario: cycles must be >= 1");
    decoy.validate();
    detector.validate();
}

double default_alpha_q_db_per_km(double quantum_wavelength_nm) {
    if (std::abs(quantum_wavelength_nm - 1532.68) < 1.0) return kAlphaQ1532DbPerKm;
    if (std::abs(quantum_wavelength_nm - 1310.0) < 1.0) return kAlphaQ1310DbPerKm;
    throw std::domain_error("no default quantum attenuation for this wavelength; set alpha_q_db_per_km");
}

double default_beta_dlambda_per_km(double quantum_wavelength_nm,
                                   double classical_wavelength_nm) {
    if (std::abs(quantum_wavelength_nm - 1532.68) < 1.0) {
        const NoiseSpectrumTable table = NoiseSpectrumTable::builtin();
        FibreSpec f;
        f.length_km = table.arm_length_km;
        f.alpha_q_db_per_km = kAlphaQ1532DbPerKm;
        f.alpha_c_db_per_km = 0.30;
        return beta_from_table(table, classical_wavelength_nm, f, table.eta_det);
    }
    if (std::abs(quantum_wavelength_nm - 1310.0) < 1.0) return kBeta1310PerKm;
    throw std::domain_error("no default Raman factor for this wavelength; set beta_dlambda_per_km");
}

ResolvedNoise resolve_noise(const Scenario& s) {
    s.validate();
    ResolvedNoise r;
    r.fibre_loss_db = s.alpha_q_db_per_km * s.arm_length_km;
    r.dark_p = s.detector.dark_rate_hz * s.noise_gate_ns * 1e-9;

    if (s.n_channels == 0) {
        r.noise_p = std::min(r.dark_p, 1.0);
        return r;
    }

    r.launch_power_w = s.receiver_power_w *
                       std::pow(10.0, s.alpha_c_db_per_km * s.arm_length_km / 10.0) *
                       s.n_channels;

    FibreSpec arm;
    arm.length_km = s.arm_length_km;
    arm.alpha_q_db_per_km = s.alpha_q_db_per_km;
    arm.alpha_c_db_per_km = s.alpha_c_db_per_km;

    std::vector<ClassicalChannel> plan;
    plan.push_back({s.classical_wavelength_nm, r.launch_power_w, Direction::co_propagating});
    if (s.direction == DirectionMode::bidirectional)
        plan.push_back(
            {s.classical_wavelength_nm, r.launch_power_w, Direction::counter_propagating});

    NoiseModel model;
    model.beta_dlambda_per_km = s.beta_dlambda_per_km;
    model.dark_rate_hz = s.detector.dark_rate_hz;
    model.window_ns = s.noise_gate_ns;

    NoiseScenario ns;
    ns.alice_fibre = arm;
    ns.bob_fibre = arm;
    ns.alice_plan = plan;
    ns.bob_plan = plan;
    ns.quantum = QuantumChannelSpec::from_dnu(s.quantum_wavelength_nm, s.filter_dnu_ghz);

    r.noise_p = noise_prob_per_window(model, ns, s.detector.efficiency);
    r.raman_p = std::max(r.noise_p - r.dark_p, 0.0);
    return r;
}

namespace {

KeyRateReport report_from_gains(const Scenario& s, const GainErrorSet& g, double noise_p) {
    KeyRateReport rep;
    rep.scenario_id = s.id;
    rep.gains = g;
    rep.noise_p = noise_p;
    rep.bounds = decoy_bounds(g, s.decoy);
    const GainError& signal = g.at(Basis::z, 0, 0);
    rep.r_inf_raw = secret_key_rate(rep.bounds.q11_z_lower, rep.bounds.e11_x_upper, signal.gain,
                                    signal.error, s.ec_efficiency);
    rep.r_inf = std::max(rep.r_inf_raw, 0.0);
    rep.r_positive = rep.r_inf_raw > 0.0;
    return rep;
}

}  // namespace

EvaluatedPoint run_scenario(const Scenario& s) {
    const ResolvedNoise noise = resolve_noise(s);
    EvaluatedPoint out;
    out.scenario = s;

    if (s.engine == Engine::analytic) {
        const GainErrorSet g = gains_and_errors(s.decoy, noise.fibre_loss_db,
                                                noise.fibre_loss_db, noise.noise_p, s.detector);
        out.report = report_from_gains(s, g, noise.noise_p);
    } else {
        CampaignScenario cs;
        cs.decoy = s.decoy;
        cs.detector = s.detector;
        cs.loss_alice_db = noise.fibre_loss_db;
        cs.loss_bob_db = noise.fibre_loss_db;
        cs.raman_p = noise.raman_p;
        cs.dark_p = noise.dark_p;
        cs.clock_hz = s.clock_rate_hz;
        const CampaignResult res = run_campaign(cs, s.cycles, s.seed);
        out.report = report_from_gains(s, res.to_gain_error_set(), noise.noise_p);
        out.stderr_q_z_signal = res.cell[0][0][0].gain_stderr();
        out.campaign = res;
    }
    out.r_inf_bps = out.report.r_inf * s.clock_rate_hz;
    return out;
}

int n_max_channels(Scenario s, int cap) {
    s.engine = Engine::analytic;
    auto positive = [&](int n) {
        s.n_channels = n;
        return run_scenario(s).report.r_positive;
    };
    if (!positive(1)) return 0;
    int lo = 1;
    while (lo < cap && positive(std::min(2 * lo, cap))) lo = std::min(2 * lo, cap);
    if (lo >= cap) return cap;
    int hi = 2 * lo;
    while (hi - lo > 1) {
        const int mid = lo + (hi - lo) / 2;
        if (positive(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

namespace {

using nlohmann::json;

[[noreturn]] void config_error(const std::string& scenario_id, const std::string& msg) {
    throw std::runtime_error("config scenario '" + scenario_id + "': " + msg);
}

double require_number(const json& v, const std::string& id, const std::string& key) {
    if (!v.is_number()) config_error(id, "field '" + key + "' must be numeric");
    return v.get<double>();
}

struct FieldTracker {
    std::map<std::string, bool> seen;
    const json& obj;
    std::string id;

    FieldTracker(const json& o, std::string sid) : obj(o), id(std::move(sid)) {
        for (auto it = o.begin(); it != o.end(); ++it) seen[it.key()] = false;
    }
    bool has(const std::string& key) {
        auto it = seen.find(key);
        if (it == seen.end()) return false;
        it->second = true;
        return true;
    }
    double number(const std::string& key, double fallback, std::vector<std::string>& prov) {
        if (has(key)) return require_number(obj.at(key), id, key);
        std::ostringstream os;
        os << "scenario '" << id << "': " << key << " defaulted to " << fallback;
        prov.push_back(os.str());
        return fallback;
    }
    void finish() const {
        for (const auto& [key, used] : seen)
            if (!used) config_error(id, "unknown key '" + key + "'");
    }
};

}  // namespace

LoadedConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    json root;
    try {
        root = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("config parse error in " + path + ": " + e.what());
    }
    if (!root.is_object() || !root.contains("scenarios") || !root["scenarios"].is_array())
        throw std::runtime_error("config must be an object with a 'scenarios' array");
    for (auto it = root.begin(); it != root.end(); ++it)
        if (it.key() != "scenarios")
            throw std::runtime_error("config: unknown top-level key '" + it.key() + "'");

    LoadedConfig out;
    int index = 0;
    for (const json& jsc : root["scenarios"]) {
        if (!jsc.is_object()) throw std::runtime_error("config: scenario entries must be objects");
        std::string id = jsc.contains("id") && jsc["id"].is_string()
                             ? jsc["id"].get<std::string>()
                             : "scenario" + std::to_string(index);
        FieldTracker f(jsc, id);
        f.has("id");

        Scenario base;
        base.id = id;
        base.arm_length_km = f.number("arm_length_km", base.arm_length_km, out.provenance);
        base.quantum_wavelength_nm =
            f.number("quantum_wavelength_nm", base.quantum_wavelength_nm, out.provenance);
        base.classical_wavelength_nm =
            f.number("classical_wavelength_nm", base.classical_wavelength_nm, out.provenance);

        if (f.has("direction")) {
            const json& d = f.obj.at("direction");
            if (!d.is_string()) config_error(id, "field 'direction' must be a string");
            const std::string dir = d.get<std::string>();
            if (dir == "bidirectional")
                base.direction = DirectionMode::bidirectional;
            else if (dir == "unidirectional_co")
                base.direction = DirectionMode::unidirectional_co;
            else
                config_error(id, "direction must be 'bidirectional' or 'unidirectional_co'");
        } else {
            out.provenance.push_back("scenario '" + id + "': direction defaulted to bidirectional");
        }

        if (f.has("engine")) {
            const json& e = f.obj.at("engine");
            if (!e.is_string()) config_error(id, "field 'engine' must be a string");
            const std::string eng = e.get<std::string>();
            if (eng == "analytic")
                base.engine = Engine::analytic;
            else if (eng == "montecarlo")
                base.engine = Engine::montecarlo;
            else
                config_error(id, "engine must be 'analytic' or 'montecarlo'");
        } else {
            out.provenance.push_back("scenario '" + id + "': engine defaulted to analytic");
        }

        base.alpha_q_db_per_km =
            f.number("alpha_q_db_per_km",
                     default_alpha_q_db_per_km(base.quantum_wavelength_nm), out.provenance);
        base.alpha_c_db_per_km =
            f.number("alpha_c_db_per_km", base.alpha_c_db_per_km, out.provenance);
        base.beta_dlambda_per_km =
            f.number("beta_dlambda_per_km",
                     default_beta_dlambda_per_km(base.quantum_wavelength_nm,
                                                 base.classical_wavelength_nm),
                     out.provenance);
        base.receiver_power_w =
            f.number("receiver_power_uw", base.receiver_power_w * 1e6, out.provenance) * 1e-6;
        base.noise_gate_ns = f.number("noise_gate_ns", base.noise_gate_ns, out.provenance);
        base.filter_dnu_ghz = f.number("filter_dnu_ghz", base.filter_dnu_ghz, out.provenance);

        base.decoy.mu = f.number("mu", base.decoy.mu, out.provenance);
        base.decoy.nu = f.number("nu", base.decoy.nu, out.provenance);
        base.decoy.omega = f.number("omega", base.decoy.omega, out.provenance);
        base.decoy.p_mu = f.number("p_mu", base.decoy.p_mu, out.provenance);
        base.decoy.p_nu = f.number("p_nu", base.decoy.p_nu, out.provenance);
        base.decoy.p_omega = f.number("p_omega", base.decoy.p_omega, out.provenance);
        base.decoy.p_z = f.number("p_z", base.decoy.p_z, out.provenance);
        base.decoy.p_x = 1.0 - base.decoy.p_z;
        base.decoy.misalignment = f.number("misalignment", base.decoy.misalignment, out.provenance);

        base.detector.efficiency =
            f.number("detector_efficiency", base.detector.efficiency, out.provenance);
        base.detector.dark_rate_hz =
            f.number("dark_rate_hz", base.detector.dark_rate_hz, out.provenance);
        base.detector.jitter_ps = f.number("jitter_ps", base.detector.jitter_ps, out.provenance);
        base.detector.dead_time_ns =
            f.number("dead_time_ns", base.detector.dead_time_ns, out.provenance);

        base.ec_efficiency = f.number("ec_efficiency", base.ec_efficiency, out.provenance);
        base.clock_rate_hz = f.number("clock_rate_hz", base.clock_rate_hz, out.provenance);
        base.cycles =
            std::uint64_t(f.number("cycles", double(base.cycles), out.provenance));
        base.seed = std::uint64_t(f.number("seed", double(base.seed), out.provenance));

        if (f.has("find_n_max")) {
            const json& v = f.obj.at("find_n_max");
            if (!v.is_boolean()) config_error(id, "field 'find_n_max' must be a boolean");
            base.find_n_max = v.get<bool>();
        }

        std::vector<int> channel_counts;
        if (f.has("n_channels")) {
            const json& nc = f.obj.at("n_channels");
            if (nc.is_number_integer()) {
                channel_counts.push_back(nc.get<int>());
            } else if (nc.is_array()) {
                for (const json& v : nc) {
                    if (!v.is_number_integer())
                        config_error(id, "n_channels entries must be integers");
                    channel_counts.push_back(v.get<int>());
                }
            } else {
                config_error(id, "n_channels must be an integer or an array of integers");
            }
        } else {
            channel_counts.push_back(0);
            out.provenance.push_back("scenario '" + id + "': n_channels defaulted to 0");
        }
        f.finish();

        for (int n : channel_counts) {
            Scenario s = base;
            s.n_channels = n;
            if (channel_counts.size() > 1) s.id = id + "/N" + std::to_string(n);
            s.validate();
            out.scenarios.push_back(std::move(s));
        }
        ++index;
    }
    if (out.scenarios.empty()) throw std::runtime_error("config: no scenarios defined");
    return out;
}

SweepResult run_sweep(const LoadedConfig& config) {
    SweepResult result;
    result.provenance = config.provenance;
    std::map<std::string, bool> nmax_done;
    for (const Scenario& s : config.scenarios) {
        result.points.push_back(run_scenario(s));
        if (s.find_n_max) {
            const std::string group = s.id.substr(0, s.id.find("/N"));
            if (!nmax_done[group]) {
                nmax_done[group] = true;
                result.n_max.emplace_back(group, n_max_channels(s));
            }
        }
    }
    return result;
}

namespace {

const char* direction_name(DirectionMode d) {
    return d == DirectionMode::bidirectional ? "bidirectional" : "unidirectional_co";
}

}  // namespace

void write_sweep_csv(const SweepResult& result, std::ostream& out) {
    if (result.points.empty()) throw std::runtime_error("write_sweep_csv: empty sweep");
    for (const std::string& line : result.provenance) out << "# " << line << "\n";
    out << "scenario_id,length_km_total,lambda_q_nm,lambda_c_nm,direction,n_channels,"
           "noise_prob,q11_lower,e11x_upper,r_inf_per_cycle,r_inf_bps,stderr\n";
    out << std::setprecision(17);
    for (const EvaluatedPoint& p : result.points) {
        const Scenario& s = p.scenario;
        out << s.id << ',' << 2.0 * s.arm_length_km << ',' << s.quantum_wavelength_nm << ','
            << s.classical_wavelength_nm << ',' << direction_name(s.direction) << ','
            << s.n_channels << ',' << p.report.noise_p << ',' << p.report.bounds.q11_z_lower
            << ',' << p.report.bounds.e11_x_upper << ',' << p.report.r_inf << ','
            << p.r_inf_bps << ',' << p.stderr_q_z_signal << "\n";
    }
}

void emit_report(const SweepResult& result, const std::string& csv_path,
                 const std::string& summary_path) {
    if (result.points.empty()) throw std::runtime_error("emit_report: empty sweep");
    {
        std::ofstream csv(csv_path);
        if (!csv) throw std::runtime_error("emit_report: cannot write " + csv_path);
        write_sweep_csv(result, csv);
    }
    std::ofstream sum(summary_path);
    if (!sum) throw std::runtime_error("emit_report: cannot write " + summary_path);
    sum << "sweep summary (" << result.points.size() << " points)\n";
    for (const auto& [group, nmax] : result.n_max)
        sum << "  " << group << ": N_max = " << nmax << " (largest channel count with R > 0)\n";
    for (const EvaluatedPoint& p : result.points) {
        sum << "  " << p.scenario.id << ": R_inf = " << std::scientific << std::setprecision(3)
            << p.report.r_inf << " /cycle (" << p.r_inf_bps << " bps), "
            << (p.report.r_positive ? "positive" : "non-positive") << "\n";
    }
}

std::vector<SweepCsvRow> parse_sweep_csv(std::istream& in) {
    std::vector<SweepCsvRow> rows;
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!header_seen) {
            header_seen = true;
            continue;
        }
        std::istringstream ss(line);
        SweepCsvRow r;
        std::string field;
        auto next = [&] {
            if (!std::getline(ss, field, ',')) throw std::runtime_error("sweep csv: short row");
            return field;
        };
        r.scenario_id = next();
        r.length_km_total = std::stod(next());
        r.lambda_q_nm = std::stod(next());
        r.lambda_c_nm = std::stod(next());
        r.direction = next();
        r.n_channels = std::stoi(next());
        r.noise_prob = std::stod(next());
        r.q11_lower = std::stod(next());
        r.e11x_upper = std::stod(next());
        r.r_inf_per_cycle = std::stod(next());
        r.r_inf_bps = std::stod(next());
        r.stderr_col = std::stod(next());
        rows.push_back(std::move(r));
    }
    return rows;
}

const std::vector<ReferenceRatePoint>& reference_rates() {
    static const std::vector<ReferenceRatePoint> table = {
        {20.0, 0, 1.13e-5, 5.52e-6}, {20.0, 1, 8.37e-6, 2.93e-6}, {20.0, 2, 5.34e-6, 3.36e-6},
        {20.0, 3, 6.66e-6, 2.69e-6}, {20.0, 4, 3.43e-6, 3.16e-6}, {20.0, 5, 3.66e-6, 2.29e-6},
        {40.0, 0, 1.72e-6, 6.16e-7}, {40.0, 1, 2.66e-7, 5.35e-7},
    };
    return table;
}

std::vector<RateComparison> compare_reference_rates() {
    std::vector<RateComparison> out;
    for (const ReferenceRatePoint& ref : reference_rates()) {
        Scenario s;
        s.id = "ref";
        s.arm_length_km = ref.arm_length_km;
        s.n_channels = ref.n_channels;
        // the longer spools attenuate less per km at the classical wavelength
        s.alpha_c_db_per_km = ref.arm_length_km > 30.0 ? 0.25 : 0.30;
        s.beta_dlambda_per_km = default_beta_dlambda_per_km(1532.68, 1548.0);
        const double r = run_scenario(s).report.r_inf_raw;
        out.push_back({ref, r, std::abs(r - ref.r_inf) <= ref.sigma});
    }
    return out;
}

}  // namespace mdiqkd
