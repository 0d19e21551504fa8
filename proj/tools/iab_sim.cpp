// iab-sim: Monte Carlo driver for the IAB network simulator.
//
// Exit codes: 0 success, 1 configuration error, 2 runtime error.
// IABSIM_WORKERS sets the worker-pool size.

#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "iabsim/iabsim.hpp"

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-time multihop IAB network simulator"};
    app.set_version_flag("--version", std::string(iabsim::kVersion));

    std::string config_path;
    std::string scenario;
    std::string mode;
    std::optional<int> nd;
    std::optional<int> runs;
    std::optional<std::int64_t> slots;
    std::optional<std::uint64_t> seed;
    std::string out_dir;
    std::string mcs_path;
    bool trace = false;

    app.add_option("--config", config_path, "JSON configuration file (defaults apply to missing keys)");
    app.add_option("--scenario", scenario, "throughput | mobility")->check(CLI::IsMember({"throughput", "mobility"}));
    app.add_option("--mode", mode, "proposed | 3gpp")->check(CLI::IsMember({"proposed", "3gpp"}));
    app.add_option("--nd", nd, "number of IAB-donors (3gpp mode)");
    app.add_option("--runs", runs, "Monte Carlo runs");
    app.add_option("--slots", slots, "slots per run");
    app.add_option("--seed", seed, "base seed");
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_option("--mcs-table", mcs_path, "MCS table file (default: built-in v1 table)");
    app.add_flag("--trace", trace, "write the handover FSM event trace");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    iabsim::ScenarioConfig config;
    std::optional<iabsim::McsTable> mcs;
    try {
        if (!config_path.empty()) config = iabsim::load_config(config_path);
        if (!scenario.empty()) {
            config.scenario = scenario == "throughput" ? iabsim::ScenarioType::Throughput : iabsim::ScenarioType::Mobility;
        }
        if (!mode.empty()) config.arch_mode = mode == "proposed" ? iabsim::ArchMode::Proposed : iabsim::ArchMode::ThreeGpp;
        if (nd) config.num_donors = *nd;
        if (runs) config.num_runs = *runs;
        if (slots) config.slots_per_run = *slots;
        if (seed) config.base_seed = *seed;
        iabsim::validate(config);
        if (!mcs_path.empty()) mcs = iabsim::McsTable::load(mcs_path);
    } catch (const iabsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    }

    try {
        iabsim::RunOptions opt;
        opt.trace = trace;
        if (mcs) opt.mcs = &*mcs;
        const auto report = iabsim::run_experiment(config, iabsim::workers_from_env(), opt);
        iabsim::emit_outputs(report, out_dir, trace);
        const auto& a = report.aggregate;
        std::cout << to_string(config.scenario) << " / " << to_string(config.arch_mode);
        if (config.arch_mode == iabsim::ArchMode::ThreeGpp) std::cout << " (N_d=" << config.num_donors << ")";
        std::cout << ", " << a.runs << " runs x " << config.slots_per_run << " slots\n";
        if (config.scenario == iabsim::ScenarioType::Throughput) {
            std::cout << "  average UE throughput: " << a.pooled_average_bps / 1e6 << " Mbps\n"
                      << "  cell-edge (5th pct):   " << a.pooled_cell_edge_bps / 1e6 << " Mbps\n";
        } else {
            std::cout << "  outage rate: " << a.outage_rate_pct.mean << " %\n"
                      << "  HFR:         " << a.hfr_pct.mean << " %\n"
                      << "  onboard-UE handovers per run: " << a.onboard_handovers.mean << '\n';
        }
        std::cout << "  outputs in " << out_dir << '\n';
    } catch (const iabsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
