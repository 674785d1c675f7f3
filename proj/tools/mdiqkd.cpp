#include "mdiqkd/calibration.hpp"
#include "mdiqkd/experiment.hpp"
#include "mdiqkd/keyrate_engine.hpp"
#include "mdiqkd/protocol_sim.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

namespace {

using namespace mdiqkd;

int cmd_sweep(const std::string& config_path, const std::string& csv_path,
              const std::string& summary_path) {
    const LoadedConfig cfg = load_config(config_path);
    const SweepResult result = run_sweep(cfg);
    emit_report(result, csv_path, summary_path);
    std::cout << "wrote " << result.points.size() << " points to " << csv_path << "\n";

    bool ok = true;
    // positivity must be monotone in the channel count within each group
    std::map<std::string, std::pair<int, double>> last;  // group -> (n, rate)
    for (const EvaluatedPoint& p : result.points) {
        const std::string group = p.scenario.id.substr(0, p.scenario.id.find("/N"));
        auto it = last.find(group);
        if (it != last.end() && p.scenario.n_channels > it->second.first &&
            p.report.r_inf_raw > it->second.second + 1e-15) {
            std::cout << "invariant violation: rate increased with channel count in '" << group
                      << "'\n";
            ok = false;
        }
        last[group] = {p.scenario.n_channels, p.report.r_inf_raw};
    }
    for (const auto& [group, nmax] : result.n_max)
        std::cout << group << ": N_max = " << nmax << "\n";
    return ok ? 0 : 1;
}

int cmd_calibrate(const std::string& table_path, double lambda_c_nm) {
    const NoiseSpectrumTable table =
        table_path.empty() ? NoiseSpectrumTable::builtin() : NoiseSpectrumTable::load_csv(table_path);
    FibreSpec fibre;
    fibre.length_km = table.arm_length_km;
    fibre.alpha_q_db_per_km = default_alpha_q_db_per_km(table.quantum_wavelength_nm);
    fibre.alpha_c_db_per_km = 0.30;

    std::cout << "scattering factor calibration (eta_det = " << table.eta_det << ", "
              << table.arm_length_km << " km arms, "
              << table.launch_power_w * 1e6 << " uW per channel)\n";
    std::cout << std::setw(14) << "lambda_c_nm" << std::setw(16) << "counts_hz" << std::setw(20)
              << "beta_dlambda_1/km" << std::setw(16) << "roundtrip_rel\n";

    bool ok = true;
    for (const auto& [lc, counts] : table.entries) {
        const double beta = beta_from_table(table, lc, fibre, table.eta_det);
        const double per_arm =
            raman_co(table.launch_power_w, beta, fibre.alpha_q_nat(), fibre.alpha_c_nat(),
                     fibre.length_km) +
            raman_counter(table.launch_power_w, beta, fibre.alpha_q_nat(), fibre.alpha_c_nat(),
                          fibre.length_km);
        const double forward =
            table.eta_det * power_to_photon_rate(2.0 * per_arm, table.quantum_wavelength_nm);
        const double rel = counts > 0.0 ? std::abs(forward - counts) / counts : 0.0;
        if (rel > 1e-6) ok = false;
        std::cout << std::setw(14) << lc << std::setw(16) << counts << std::setw(20)
                  << std::setprecision(6) << std::scientific << beta << std::setw(16) << rel
                  << std::defaultfloat << "\n";
    }
    const double beta_sel = beta_from_table(table, lambda_c_nm, fibre, table.eta_det);
    std::cout << "interpolated " << lambda_c_nm
              << " nm: counts = " << noise_counts_at(table, lambda_c_nm)
              << " Hz, beta_dlambda = " << std::scientific << beta_sel << " /km\n";
    std::cout << (ok ? "round trip OK" : "round trip FAILED") << "\n";
    return ok ? 0 : 1;
}

int cmd_oracle(double arm_km, int channels, std::uint64_t cycles, std::uint64_t seed,
               int workers, const std::string& trace_path, std::uint64_t trace_cycles) {
    Scenario s;
    s.id = "oracle";
    s.arm_length_km = arm_km;
    s.n_channels = channels;
    s.beta_dlambda_per_km = default_beta_dlambda_per_km(1532.68, 1548.0);
    const ResolvedNoise noise = resolve_noise(s);

    CampaignScenario cs;
    cs.decoy = s.decoy;
    cs.detector = s.detector;
    cs.loss_alice_db = noise.fibre_loss_db;
    cs.loss_bob_db = noise.fibre_loss_db;
    cs.raman_p = noise.raman_p;
    cs.dark_p = noise.dark_p;

    if (!trace_path.empty()) {
        std::ofstream trace(trace_path);
        if (!trace) throw std::runtime_error("cannot write trace file: " + trace_path);
        dump_cycle_trace(cs, seed, 0, trace_cycles, trace);
        std::cout << "wrote " << trace_cycles << "-cycle trace to " << trace_path << "\n";
    }

    std::cout << "running " << cycles << " cycles, seed " << seed << ", noise_p "
              << std::scientific << noise.noise_p << "\n";
    const CampaignResult mc = run_campaign(cs, cycles, seed, workers);
    const GainErrorSet analytic = gains_and_errors(s.decoy, noise.fibre_loss_db,
                                                   noise.fibre_loss_db, noise.noise_p, s.detector);

    const char* names[3] = {"mu", "nu", "om"};
    bool ok = true;
    std::cout << std::setw(8) << "pair" << std::setw(14) << "analytic_Q" << std::setw(14)
              << "mc_Q" << std::setw(10) << "z_gain" << std::setw(12) << "analytic_e"
              << std::setw(12) << "mc_e" << std::setw(10) << "z_err" << "\n";
    for (int b = 0; b < 2; ++b) {
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                const Basis basis = b == 0 ? Basis::z : Basis::x;
                const TallyCell& cell = mc.cell[b][i][j];
                const GainError& an = analytic.at(basis, i, j);
                const double sq = std::sqrt(an.gain * (1.0 - an.gain) /
                                            std::max<double>(1.0, double(cell.pairs)));
                const double zq = sq > 0.0 ? (cell.gain() - an.gain) / sq : 0.0;
                double ze = 0.0;
                if (cell.announced > 0 && an.error > 0.0) {
                    const double se =
                        std::sqrt(an.error * (1.0 - an.error) / double(cell.announced));
                    ze = se > 0.0 ? (cell.error_rate() - an.error) / se : 0.0;
                }
                if (std::abs(zq) > 3.0 || std::abs(ze) > 3.0) ok = false;
                std::cout << std::setw(2) << (b == 0 ? 'Z' : 'X') << names[i] << names[j]
                          << std::setw(17) << std::scientific << std::setprecision(4) << an.gain
                          << std::setw(14) << cell.gain() << std::setw(10) << std::fixed
                          << std::setprecision(2) << zq << std::setw(14) << std::scientific
                          << std::setprecision(3) << an.error << std::setw(12)
                          << cell.error_rate() << std::setw(10) << std::fixed << ze << "\n";
            }
        }
    }
    const DecoyBounds bounds = decoy_bounds(analytic, s.decoy);
    std::cout << std::scientific << std::setprecision(4);
    std::cout << "tagged single-photon pairs: Y11_Z est = " << mc.tagged11[0].gain() << " +- "
              << mc.tagged11[0].gain_stderr() << " (decoy lower bound " << bounds.y11_z_lower
              << "), e11_X est = " << mc.tagged11[1].error_rate() << " +- "
              << mc.tagged11[1].error_stderr() << " (decoy upper bound " << bounds.e11_x_upper
              << ")\n";
    std::cout << (ok ? "engines agree within 3 sigma" : "DISAGREEMENT beyond 3 sigma") << "\n";
    return ok ? 0 : 1;
}

int cmd_tables() {
    const NoiseSpectrumTable table = NoiseSpectrumTable::builtin();
    std::cout << "noise spectrum interpolation:\n";
    for (double lc : {1530.0, 1548.0, 1550.0})
        std::cout << "  " << lc << " nm -> " << noise_counts_at(table, lc) << " Hz\n";

    std::cout << "reference key-rate comparison (analytic engine, default parameters):\n";
    std::cout << std::setw(10) << "arms_km" << std::setw(6) << "N" << std::setw(14) << "reference"
              << std::setw(12) << "sigma" << std::setw(14) << "computed" << std::setw(10)
              << "inside\n";
    bool ok = true;
    for (const RateComparison& c : compare_reference_rates()) {
        ok = ok && c.within_band;
        std::cout << std::defaultfloat << std::setprecision(6);
        std::cout << std::setw(10) << c.ref.arm_length_km << std::setw(6) << c.ref.n_channels
                  << std::setw(14) << std::scientific << std::setprecision(3) << c.ref.r_inf
                  << std::setw(12) << c.ref.sigma << std::setw(14) << c.computed << std::setw(9)
                  << (c.within_band ? "yes" : "NO") << "\n";
    }
    std::cout << (ok ? "all points inside one sigma" : "points OUTSIDE the reference bands")
              << "\n";
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MDI-QKD / classical-channel coexistence simulator"};
    app.require_subcommand(1);

    std::string config_path, csv_path = "sweep.csv", summary_path = "sweep_summary.txt";
    auto* sweep = app.add_subcommand("sweep", "evaluate a scenario config into a CSV report");
    sweep->add_option("--config", config_path, "scenario config (JSON)")->required();
    sweep->add_option("--out-csv", csv_path, "output CSV path");
    sweep->add_option("--out-summary", summary_path, "output text summary path");

    std::string table_path;
    double lambda_c = 1548.0;
    auto* calibrate =
        app.add_subcommand("calibrate", "extract the Raman factor from a noise spectrum");
    calibrate->add_option("--table", table_path, "spectrum CSV (default: builtin dataset)");
    calibrate->add_option("--lambda-c-nm", lambda_c, "classical wavelength to report");

    double arm_km = 20.0;
    int channels = 0, workers = 0;
    std::uint64_t cycles = 10'000'000, seed = 1, trace_cycles = 1000;
    std::string trace_path;
    auto* orc = app.add_subcommand("oracle", "compare the Monte Carlo and analytic engines");
    orc->add_option("--arm-km", arm_km, "fibre length per arm");
    orc->add_option("--channels", channels, "bidirectional classical channel count");
    orc->add_option("--cycles", cycles, "Monte Carlo cycles");
    orc->add_option("--seed", seed, "campaign seed");
    orc->add_option("--workers", workers, "worker threads (0 = all cores)");
    orc->add_option("--trace", trace_path, "write a per-cycle diagnostic trace here");
    orc->add_option("--trace-cycles", trace_cycles, "trace length (capped at 1e6)");

    auto* tables = app.add_subcommand("tables", "print the builtin datasets and comparisons");

    CLI11_PARSE(app, argc, argv);

    try {
        if (sweep->parsed()) return cmd_sweep(config_path, csv_path, summary_path);
        if (calibrate->parsed()) return cmd_calibrate(table_path, lambda_c);
        if (orc->parsed())
            return cmd_oracle(arm_km, channels, cycles, seed, workers, trace_path, trace_cycles);
        if (tables->parsed()) return cmd_tables();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
