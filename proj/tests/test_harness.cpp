#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "iabsim/harness.hpp"

using namespace iabsim;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

ScenarioConfig small_throughput() {
    ScenarioConfig c;
    c.num_runs = 3;
    c.slots_per_run = 2000;
    return c;
}

ScenarioConfig small_mobility() {
    ScenarioConfig c;
    c.scenario = ScenarioType::Mobility;
    c.arch_mode = ArchMode::ThreeGpp;
    c.num_donors = 2;
    c.num_runs = 2;
    c.slots_per_run = 5000;
    return c;
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("iabsim_harness_" + name);
    fs::remove_all(p);
    return p;
}

}  // namespace

TEST(Config, RoundTripsThroughJson) {
    ScenarioConfig c;
    c.arch_mode = ArchMode::ThreeGpp;
    c.num_donors = 3;
    c.timers.ttt = std::chrono::milliseconds(160);
    c.base_seed = 12345678901234ull;
    const auto back = config_from_json(to_json(c));
    EXPECT_EQ(back, c);
    EXPECT_EQ(parse_config(to_json(c).dump()), c);
}

TEST(Config, ShippedFilesLoad) {
    const auto d = load_config(std::string(IABSIM_CONFIG_DIR) + "/default.json");
    EXPECT_EQ(d, ScenarioConfig{});
    const auto m = load_config(std::string(IABSIM_CONFIG_DIR) + "/mobility.json");
    EXPECT_EQ(m.scenario, ScenarioType::Mobility);
}

TEST(Config, UnknownKeyReportsPath) {
    try {
        parse_config(R"({"mobility": {"ttt_msec": 80}})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key_path(), "mobility.ttt_msec");
    }
    try {
        parse_config(R"({"deployment": {"office": {"depth_m": 3}}})");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.key_path(), "deployment.office.depth_m");
    }
}

TEST(Config, BadValuesAndMalformedJson) {
    EXPECT_THROW(parse_config("{\"radio\": "), ConfigError);
    EXPECT_THROW(parse_config(R"({"simulation": {"num_runs": 0}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"simulation": {"num_runs": 2.5}})"), ConfigError);
    EXPECT_THROW(parse_config(R"({"architecture": {"mode": "hybrid"}})"), ConfigError);
    EXPECT_THROW(load_config("/nonexistent/iabsim.json"), ConfigError);
}

TEST(Aggregate, IdenticalRowsHaveZeroSpread) {
    std::vector<RunMetrics> rows(4);
    for (auto& r : rows) r.avg_throughput_bps = 7.0;
    const auto a = aggregate(rows, {});
    EXPECT_EQ(a.runs, 4u);
    EXPECT_DOUBLE_EQ(a.avg_throughput_bps.mean, 7.0);
    EXPECT_DOUBLE_EQ(a.avg_throughput_bps.stddev, 0.0);
    EXPECT_DOUBLE_EQ(a.avg_throughput_bps.ci95_half, 0.0);
}

TEST(Aggregate, MeanAndInterval) {
    const auto s = summarize({2.0, 4.0});
    EXPECT_DOUBLE_EQ(s.mean, 3.0);
    EXPECT_NEAR(s.stddev, std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(s.ci95_half, 1.96, 1e-12);
    EXPECT_DOUBLE_EQ(summarize({5.0}).ci95_half, 0.0);
}

TEST(Aggregate, PooledEdgeDiffersFromMeanOfPerRunEdges) {
    std::vector<UeRow> ues;
    std::vector<RunMetrics> runs(2);
    const std::vector<std::vector<double>> rates{{1, 2, 3, 4}, {10, 20, 30, 40}};
    for (int r = 0; r < 2; ++r) {
        const auto rep = mac::throughput_report(rates[static_cast<std::size_t>(r)], 1.0);
        runs[static_cast<std::size_t>(r)].cell_edge_bps = rep.cell_edge_bps;
        for (double x : rates[static_cast<std::size_t>(r)]) ues.push_back({r, 0, false, 0, 1, x});
    }
    const auto a = aggregate(runs, ues);
    EXPECT_NEAR(a.cell_edge_bps.mean, (1.15 + 11.5) / 2.0, 1e-9);
    EXPECT_NEAR(a.pooled_cell_edge_bps, 1.35, 1e-9);
    EXPECT_NEAR(a.pooled_average_bps, 13.75, 1e-9);
}

TEST(Outputs, GoldenHeaders) {
    EXPECT_EQ(kUeCsvHeader, "run_id,ue_id,indoor,serving_bs,hops,rate_bps");
    EXPECT_EQ(kRunCsvHeader,
              "run_id,seed,avg_throughput_bps,cell_edge_bps,outage_rate_pct,hfr_pct,onboard_handovers,"
              "donor_crossings,handover_attempts,handover_failures");
    EXPECT_EQ(kTraceCsvHeader, "run_id,slot,event,serving,target,snr_db");
    const auto rep = run_experiment(small_throughput());
    const auto dir = scratch("headers");
    const auto p = emit_outputs(rep, dir, true);
    EXPECT_EQ(first_line(slurp(p.ue_csv)), kUeCsvHeader);
    EXPECT_EQ(first_line(slurp(p.run_csv)), kRunCsvHeader);
    EXPECT_EQ(first_line(slurp(p.topology_csv)), "run_id,node_id,role,parent,hop_level,cu_owner,serving_snr_db");
    EXPECT_EQ(first_line(slurp(p.trace_csv)), kTraceCsvHeader);
    fs::remove_all(dir);
}

TEST(Outputs, SummaryEchoesConfigAndProvenance) {
    const auto c = small_throughput();
    const auto rep = run_experiment(c);
    const auto dir = scratch("summary");
    const auto p = emit_outputs(rep, dir, false);
    const auto doc = nlohmann::json::parse(slurp(p.summary_json));
    EXPECT_EQ(config_from_json(doc.at("config")), c);
    EXPECT_EQ(doc.at("provenance").at("config_hash").get<std::string>().size(), 16u);
    EXPECT_EQ(doc.at("aggregate").at("runs").get<int>(), c.num_runs);
    EXPECT_FALSE(fs::exists(dir / "trace.csv"));
    fs::remove_all(dir);
}

TEST(Outputs, UnwritableDirectoryThrows) {
    const auto rep = run_experiment(small_throughput());
    const auto blocker = scratch("blocker");
    std::ofstream(blocker) << "file";
    EXPECT_THROW(emit_outputs(rep, blocker / "sub", false), std::runtime_error);
    fs::remove_all(blocker);
}

TEST(Determinism, RerunsAreByteIdentical) {
    for (const auto& c : {small_throughput(), small_mobility()}) {
        const auto a = scratch("det_a");
        const auto b = scratch("det_b");
        const auto pa = emit_outputs(run_experiment(c, 1, {true}), a, true);
        const auto pb = emit_outputs(run_experiment(c, 1, {true}), b, true);
        EXPECT_EQ(slurp(pa.ue_csv), slurp(pb.ue_csv));
        EXPECT_EQ(slurp(pa.run_csv), slurp(pb.run_csv));
        EXPECT_EQ(slurp(pa.topology_csv), slurp(pb.topology_csv));
        EXPECT_EQ(slurp(pa.summary_json), slurp(pb.summary_json));
        EXPECT_EQ(slurp(pa.trace_csv), slurp(pb.trace_csv));
        fs::remove_all(a);
        fs::remove_all(b);
    }
}

TEST(Determinism, WorkerCountDoesNotChangeResults) {
    for (const auto& c : {small_throughput(), small_mobility()}) {
        const auto seq = run_experiment(c, 1);
        const auto par = run_experiment(c, 3);
        EXPECT_EQ(seq.per_run, par.per_run);
        EXPECT_EQ(seq.ue_rows, par.ue_rows);
        EXPECT_EQ(seq.topology_rows, par.topology_rows);
        EXPECT_EQ(seq.aggregate, par.aggregate);
    }
}

TEST(Determinism, RunsGetDistinctSeeds) {
    auto c = small_throughput();
    c.num_runs = 5;
    const auto rep = run_experiment(c);
    for (std::size_t i = 0; i < rep.per_run.size(); ++i) {
        EXPECT_EQ(rep.per_run[i].run_id, static_cast<int>(i));
        EXPECT_EQ(rep.per_run[i].seed, rng::run_seed(c.base_seed, i));
        for (std::size_t j = 0; j < i; ++j) EXPECT_NE(rep.per_run[i].seed, rep.per_run[j].seed);
    }
}

TEST(Pairing, ModesShareUePositions) {
    ScenarioConfig p = small_throughput();
    ScenarioConfig t = p;
    t.arch_mode = ArchMode::ThreeGpp;
    t.num_donors = 7;
    for (int run = 0; run < p.num_runs; ++run) {
        const auto seed = rng::run_seed(p.base_seed, static_cast<std::uint64_t>(run));
        const auto sp = generate_scenario(p, seed);
        const auto st = generate_scenario(t, seed);
        EXPECT_EQ(sp.ues, st.ues);
        for (std::size_t i = 0; i < sp.base_stations.size(); ++i)
            EXPECT_EQ(sp.base_stations[i].position, st.base_stations[i].position);
    }
}

TEST(Pairing, MatrixLabelsAndShape) {
    const auto m = ExperimentMatrix::proposed_vs({1, 3, 5});
    ASSERT_EQ(m.cells.size(), 4u);
    EXPECT_EQ(m.cells[0].label(), "proposed");
    EXPECT_EQ(m.cells[3].label(), "3gpp_nd5");
    auto c = small_throughput();
    c.num_runs = 1;
    const auto reps = run_matrix(c, m);
    ASSERT_EQ(reps.size(), 4u);
    for (const auto& r : reps) EXPECT_EQ(r.per_run[0].seed, reps[0].per_run[0].seed);
    EXPECT_THROW(apply_cell(c, {ArchMode::ThreeGpp, 9}), ConfigError);
}

TEST(Mobility, MetricsAreWellFormed) {
    const auto rep = run_experiment(small_mobility(), 1, {true});
    for (const auto& r : rep.per_run) {
        EXPECT_GE(r.outage_rate_pct, 0.0);
        EXPECT_LE(r.outage_rate_pct, 100.0);
        EXPECT_LE(r.handover_failures, r.handover_attempts);
        EXPECT_EQ(r.onboard_handovers, 20 * r.donor_crossings);
    }
    EXPECT_TRUE(rep.ue_rows.empty());
}

TEST(Workers, EnvironmentOverride) {
    ::setenv("IABSIM_WORKERS", "3", 1);
    EXPECT_EQ(workers_from_env(), 3);
    ::setenv("IABSIM_WORKERS", "zero", 1);
    EXPECT_GE(workers_from_env(), 1);
    ::unsetenv("IABSIM_WORKERS");
}
