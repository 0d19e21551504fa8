#pragma once

// Monte Carlo orchestration: per-run pipelines for the throughput and mobility
// scenarios, a bounded worker pool, aggregation, and output files.
//
// Output files (column order is part of the format):
//   throughput_per_ue.csv  run_id,ue_id,indoor,serving_bs,hops,rate_bps
//   metrics_per_run.csv    run_id,seed,avg_throughput_bps,cell_edge_bps,outage_rate_pct,hfr_pct,
//                          onboard_handovers,donor_crossings,handover_attempts,handover_failures
//   topology.csv           run_id,node_id,role,parent,hop_level,cu_owner,serving_snr_db
//   summary.json           config echo, provenance hashes, aggregate statistics
//   trace.csv (optional)   run_id,slot,event,serving,target,snr_db

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "iabsim/channel.hpp"
#include "iabsim/config.hpp"
#include "iabsim/geometry.hpp"
#include "iabsim/mac.hpp"
#include "iabsim/mcs.hpp"
#include "iabsim/mobility.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/scenario.hpp"
#include "iabsim/topology.hpp"
#include "iabsim/util.hpp"
#include "iabsim/version.hpp"

namespace iabsim {

struct UeRow {
    int run_id = 0;
    NodeId ue_id = kNoNode;
    bool indoor = false;
    NodeId serving_bs = kNoNode;
    int hops = 0;
    double rate_bps = 0.0;

    friend bool operator==(const UeRow&, const UeRow&) = default;
};

struct RunMetrics {
    int run_id = 0;
    std::uint64_t seed = 0;
    double avg_throughput_bps = 0.0;
    double cell_edge_bps = 0.0;
    double outage_rate_pct = 0.0;
    double hfr_pct = 0.0;
    std::int64_t onboard_handovers = 0;
    std::int64_t donor_crossings = 0;
    std::int64_t handover_attempts = 0;
    std::int64_t handover_failures = 0;

    friend bool operator==(const RunMetrics&, const RunMetrics&) = default;
};

struct TraceRow {
    int run_id = 0;
    std::int64_t slot = 0;
    mobility::Event event;
};

struct RunResult {
    RunMetrics metrics;
    std::vector<UeRow> ues;
    std::string topology_csv;  // rows only, no header
    std::vector<TraceRow> trace;
};

struct Stat {
    double mean = 0.0;
    double stddev = 0.0;       // sample standard deviation (0 for one row)
    double ci95_half = 0.0;    // 1.96 * stddev / sqrt(n)

    friend bool operator==(const Stat&, const Stat&) = default;
};

struct AggregateStats {
    std::size_t runs = 0;
    Stat avg_throughput_bps, cell_edge_bps, outage_rate_pct, hfr_pct, onboard_handovers, donor_crossings;
    double pooled_average_bps = 0.0;    // mean over every UE of every run
    double pooled_cell_edge_bps = 0.0;  // 5th percentile of the pooled per-UE rates

    friend bool operator==(const AggregateStats&, const AggregateStats&) = default;
};

struct Provenance {
    std::string config_hash;
    std::string mcs_table_hash;
    std::string channel_coefficients_hash;
    std::string code_version;
};

struct MetricsReport {
    ScenarioConfig config;
    std::vector<RunMetrics> per_run;
    std::vector<UeRow> ue_rows;
    AggregateStats aggregate;
    Provenance provenance;
    std::vector<std::string> topology_rows;  // one CSV block per run
    std::vector<TraceRow> trace;
};

inline Stat summarize(const std::vector<double>& xs) {
    Stat s;
    if (xs.empty()) return s;
    const double n = static_cast<double>(xs.size());
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / n;
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    s.ci95_half = 1.96 * s.stddev / std::sqrt(n);
    return s;
}

/// Pure fold over per-run rows; cell edge comes from the pooled per-UE rates.
inline AggregateStats aggregate(const std::vector<RunMetrics>& rows, const std::vector<UeRow>& ue_rows) {
    AggregateStats a;
    a.runs = rows.size();
    auto col = [&](auto field) {
        std::vector<double> v;
        v.reserve(rows.size());
        for (const auto& r : rows) v.push_back(static_cast<double>(r.*field));
        return summarize(v);
    };
    a.avg_throughput_bps = col(&RunMetrics::avg_throughput_bps);
    a.cell_edge_bps = col(&RunMetrics::cell_edge_bps);
    a.outage_rate_pct = col(&RunMetrics::outage_rate_pct);
    a.hfr_pct = col(&RunMetrics::hfr_pct);
    a.onboard_handovers = col(&RunMetrics::onboard_handovers);
    a.donor_crossings = col(&RunMetrics::donor_crossings);
    if (!ue_rows.empty()) {
        std::vector<double> rates;
        rates.reserve(ue_rows.size());
        for (const auto& u : ue_rows) rates.push_back(u.rate_bps);
        a.pooled_average_bps = summarize(rates).mean;
        a.pooled_cell_edge_bps = mac::percentile(rates, mac::kCellEdgeQuantile);
    }
    return a;
}

struct RunOptions {
    bool trace = false;
    const McsTable* mcs = &McsTable::builtin();
    const channel::ChannelCoefficients* coefficients = &channel::ChannelCoefficients::builtin();
};

inline RunResult run_throughput(const ScenarioConfig& config, int run_index, const RunOptions& opt = {}) {
    const std::uint64_t seed = rng::run_seed(config.base_seed, static_cast<std::uint64_t>(run_index));
    const Scenario sc = generate_scenario(config, seed);
    const channel::LinkBudget budget(seed, config.carrier_frequency_hz, config.system_bandwidth_hz, *opt.mcs,
                                     *opt.coefficients);
    const TopologyGraph topo = attach_all(sc, budget, config);

    mac::SlotScheduler sched(mac::MacNetwork::from_topology(topo), config.system_bandwidth_hz, config.slot_duration_s);
    sched.run(0, config.slots_per_run);
    const double duration = static_cast<double>(config.slots_per_run) * config.slot_duration_s;
    const auto report = mac::throughput_report(sched.delivered_bits(), duration);

    RunResult r;
    r.metrics.run_id = run_index;
    r.metrics.seed = seed;
    r.metrics.avg_throughput_bps = report.average_bps;
    r.metrics.cell_edge_bps = report.cell_edge_bps;
    for (std::size_t i = 0; i < sc.ues.size(); ++i) {
        const auto& u = sc.ues[i];
        const NodeId p = topo.parent[static_cast<std::size_t>(u.id)];
        r.ues.push_back({run_index, u.id, u.indoor, p, p == kNoNode ? 0 : topo.hop_level[static_cast<std::size_t>(p)],
                         report.per_ue_bps[i]});
    }
    std::ostringstream os;
    write_topology_csv(os, sc, topo, run_index, false);
    r.topology_csv = os.str();
    return r;
}

/// The VMR roams alone over the fixed BS field; UEs are not attached.
inline RunResult run_mobility(const ScenarioConfig& config, int run_index, const RunOptions& opt = {}) {
    using namespace mobility;
    const std::uint64_t seed = rng::run_seed(config.base_seed, static_cast<std::uint64_t>(run_index));
    const Scenario sc = generate_scenario(config, seed);
    const channel::LinkBudget budget(seed, config.carrier_frequency_hz, config.system_bandwidth_hz, *opt.mcs,
                                     *opt.coefficients);
    const TopologyGraph topo = attach_all(sc, budget, config, /*attach_ues=*/false);

    const NodeId vmr_id = sc.num_bs() + static_cast<NodeId>(sc.ues.size());
    const auto candidates = candidate_parents(vmr_id, true, sc, topo);

    const geom::InflatedHull region(sc.sites, config.region_margin_m);
    rng::Stream wp_rng(seed, rng::Concern::Waypoints);
    WaypointState wp;
    wp.speed_mps = kmph_to_mps(config.vmr_speed_kmph);
    wp.position = region.sample(wp_rng);
    wp.waypoint = region.sample(wp_rng);

    // LOS state and shadowing are fixed once, at the starting position.
    std::vector<channel::LinkBudget::Draws> draws;
    for (NodeId c : candidates) {
        const auto& b = sc.bs(c);
        draws.push_back(budget.frozen(c, b.role, b.position, vmr_id,
                                      {wp.position.x, wp.position.y, config.vmr.antenna_height_m}));
    }

    const Timers timers = Timers::from(config.timers);
    const Micros dt = config.slot_duration();
    const double noise = noise_bs_dbm(config);
    constexpr double kIllegal = -std::numeric_limits<double>::infinity();
    std::vector<double> snr(static_cast<std::size_t>(sc.num_bs()), kIllegal);
    auto measure = [&] {
        const channel::Endpoint rx{vmr_id, {wp.position.x, wp.position.y, config.vmr.antenna_height_m}, false, 0.0,
                                   config.vmr.antenna_elements};
        for (std::size_t k = 0; k < candidates.size(); ++k) {
            const auto& b = sc.bs(candidates[k]);
            snr[static_cast<std::size_t>(b.id)] =
                budget.evaluate(draws[k], endpoint_of(b), b.role, b.tx_power_dbm, rx, noise).snr_db;
        }
    };

    HandoverFsm fsm;
    measure();
    if (const NodeId first = strongest(snr); first != kNoNode) {
        fsm.state = FsmState::Connected;
        fsm.serving = first;
    }

    RunResult r;
    std::vector<Event> events;
    for (std::int64_t slot = 0; slot < config.slots_per_run; ++slot) {
        if (slot > 0) measure();
        events.clear();
        step(fsm, snr, dt, timers, &topo, config.arch_mode, config.onboard_ues, opt.trace ? &events : nullptr);
        for (const auto& e : events) r.trace.push_back({run_index, slot, e});
        wp = step_waypoint(wp, config.slot_duration_s, wp_rng, region);
    }

    const auto m = outage_and_hfr(fsm.counters, config.slots_per_run);
    r.metrics.run_id = run_index;
    r.metrics.seed = seed;
    r.metrics.outage_rate_pct = m.outage_rate_pct;
    r.metrics.hfr_pct = m.hfr_pct;
    r.metrics.onboard_handovers = fsm.counters.onboard_handovers;
    r.metrics.donor_crossings = fsm.counters.donor_crossings;
    r.metrics.handover_attempts = fsm.counters.handover_attempts;
    r.metrics.handover_failures = fsm.counters.handover_failures;
    std::ostringstream os;
    write_topology_csv(os, sc, topo, run_index, false);
    r.topology_csv = os.str();
    return r;
}

inline RunResult run_single(const ScenarioConfig& config, int run_index, const RunOptions& opt = {}) {
    return config.scenario == ScenarioType::Throughput ? run_throughput(config, run_index, opt)
                                                       : run_mobility(config, run_index, opt);
}

/// Worker count from IABSIM_WORKERS, else hardware concurrency; at least 1.
inline int workers_from_env() {
    if (const char* v = std::getenv("IABSIM_WORKERS")) {
        const int n = std::atoi(v);
        if (n > 0) return n;
    }
    return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

inline Provenance provenance_of(const ScenarioConfig& config, const RunOptions& opt) {
    return {hex64(fnv1a64(to_json(config).dump())), hex64(opt.mcs->hash()), hex64(opt.coefficients->hash),
            std::string(kVersion)};
}

/// Runs every Monte Carlo run of `config`; results are merged by run id, so the report
/// does not depend on the worker count.
inline MetricsReport run_experiment(const ScenarioConfig& config, int workers = 1, const RunOptions& opt = {}) {
    validate(config);
    const int n = config.num_runs;
    std::vector<RunResult> results(static_cast<std::size_t>(n));
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
    std::atomic<int> next{0};
    auto worker = [&] {
        for (int i = next++; i < n; i = next++) {
            try {
                results[static_cast<std::size_t>(i)] = run_single(config, i, opt);
            } catch (...) {
                errors[static_cast<std::size_t>(i)] = std::current_exception();
            }
        }
    };
    const int pool = std::clamp(workers, 1, n);
    if (pool == 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (int t = 0; t < pool; ++t) threads.emplace_back(worker);
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }

    MetricsReport rep;
    rep.config = config;
    for (auto& r : results) {
        rep.per_run.push_back(r.metrics);
        rep.ue_rows.insert(rep.ue_rows.end(), r.ues.begin(), r.ues.end());
        rep.topology_rows.push_back(std::move(r.topology_csv));
        rep.trace.insert(rep.trace.end(), r.trace.begin(), r.trace.end());
    }
    rep.aggregate = aggregate(rep.per_run, rep.ue_rows);
    rep.provenance = provenance_of(config, opt);
    return rep;
}

/// One cell of a mode comparison. All cells share the base seed (paired design).
struct MatrixCell {
    ArchMode mode = ArchMode::Proposed;
    int num_donors = 0;  // ThreeGpp only

    std::string label() const {
        return mode == ArchMode::Proposed ? std::string("proposed") : "3gpp_nd" + std::to_string(num_donors);
    }
};

struct ExperimentMatrix {
    std::vector<MatrixCell> cells;

    static ExperimentMatrix proposed_vs(const std::vector<int>& donor_counts) {
        ExperimentMatrix m;
        m.cells.push_back({ArchMode::Proposed, 0});
        for (int nd : donor_counts) m.cells.push_back({ArchMode::ThreeGpp, nd});
        return m;
    }
};

inline ScenarioConfig apply_cell(ScenarioConfig config, const MatrixCell& cell) {
    config.arch_mode = cell.mode;
    if (cell.mode == ArchMode::ThreeGpp) config.num_donors = cell.num_donors;
    validate(config);
    return config;
}

inline std::vector<MetricsReport> run_matrix(const ScenarioConfig& config, const ExperimentMatrix& matrix,
                                             int workers = 1, const RunOptions& opt = {}) {
    std::vector<MetricsReport> out;
    for (const auto& cell : matrix.cells) out.push_back(run_experiment(apply_cell(config, cell), workers, opt));
    return out;
}

// ---- output files ----------------------------------------------------------------

inline constexpr std::string_view kUeCsvHeader = "run_id,ue_id,indoor,serving_bs,hops,rate_bps";
inline constexpr std::string_view kRunCsvHeader =
    "run_id,seed,avg_throughput_bps,cell_edge_bps,outage_rate_pct,hfr_pct,onboard_handovers,donor_crossings,"
    "handover_attempts,handover_failures";
inline constexpr std::string_view kTraceCsvHeader = "run_id,slot,event,serving,target,snr_db";

inline std::string ue_csv(const std::vector<UeRow>& rows) {
    std::ostringstream os;
    os << kUeCsvHeader << '\n';
    for (const auto& u : rows) {
        os << u.run_id << ',' << u.ue_id << ',' << (u.indoor ? 1 : 0) << ',' << u.serving_bs << ',' << u.hops << ','
           << fmt_double(u.rate_bps) << '\n';
    }
    return os.str();
}

inline std::string run_csv(const std::vector<RunMetrics>& rows) {
    std::ostringstream os;
    os << kRunCsvHeader << '\n';
    for (const auto& r : rows) {
        os << r.run_id << ',' << r.seed << ',' << fmt_double(r.avg_throughput_bps) << ','
           << fmt_double(r.cell_edge_bps) << ',' << fmt_double(r.outage_rate_pct) << ',' << fmt_double(r.hfr_pct)
           << ',' << r.onboard_handovers << ',' << r.donor_crossings << ',' << r.handover_attempts << ','
           << r.handover_failures << '\n';
    }
    return os.str();
}

inline std::string trace_csv(const std::vector<TraceRow>& rows) {
    std::ostringstream os;
    os << kTraceCsvHeader << '\n';
    for (const auto& t : rows) {
        os << t.run_id << ',' << t.slot << ',' << mobility::to_string(t.event.kind) << ',' << t.event.serving << ','
           << t.event.target << ',' << fmt_double(t.event.snr_db) << '\n';
    }
    return os.str();
}

inline nlohmann::json stat_json(const Stat& s) {
    return {{"mean", s.mean}, {"stddev", s.stddev}, {"ci95_half_width", s.ci95_half}};
}

inline nlohmann::json summary_json(const MetricsReport& rep) {
    const auto& a = rep.aggregate;
    return {
        {"config", to_json(rep.config)},
        {"provenance",
         {{"config_hash", rep.provenance.config_hash},
          {"mcs_table_hash", rep.provenance.mcs_table_hash},
          {"channel_coefficients_hash", rep.provenance.channel_coefficients_hash},
          {"code_version", rep.provenance.code_version}}},
        {"aggregate",
         {{"runs", a.runs},
          {"avg_throughput_bps", stat_json(a.avg_throughput_bps)},
          {"cell_edge_bps", stat_json(a.cell_edge_bps)},
          {"outage_rate_pct", stat_json(a.outage_rate_pct)},
          {"hfr_pct", stat_json(a.hfr_pct)},
          {"onboard_handovers", stat_json(a.onboard_handovers)},
          {"donor_crossings", stat_json(a.donor_crossings)},
          {"pooled_average_bps", a.pooled_average_bps},
          {"pooled_cell_edge_bps", a.pooled_cell_edge_bps}}},
    };
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

struct OutputPaths {
    std::filesystem::path ue_csv, run_csv, topology_csv, summary_json, trace_csv;
};

inline OutputPaths emit_outputs(const MetricsReport& rep, const std::filesystem::path& dir, bool with_trace) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory " + dir.string() + ": " + ec.message());
    OutputPaths p{dir / "throughput_per_ue.csv", dir / "metrics_per_run.csv", dir / "topology.csv",
                  dir / "summary.json", {}};
    write_file(p.ue_csv, ue_csv(rep.ue_rows));
    write_file(p.run_csv, run_csv(rep.per_run));
    std::string topo = "run_id,node_id,role,parent,hop_level,cu_owner,serving_snr_db\n";
    for (const auto& t : rep.topology_rows) topo += t;
    write_file(p.topology_csv, topo);
    write_file(p.summary_json, summary_json(rep).dump(2) + "\n");
    if (with_trace) {
        p.trace_csv = dir / "trace.csv";
        write_file(p.trace_csv, trace_csv(rep.trace));
    }
    return p;
}

}  // namespace iabsim
