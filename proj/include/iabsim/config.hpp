#pragma once

// Experiment configuration: defaults reproduce the evaluation parameter table
// (30 GHz carrier, 1 GHz bandwidth, 40/33/23/23 dBm, 25/10/3/1.5 m, 7/10 dB margins).
//
// The on-disk form is a JSON document with one section per concern. Every field is a
// key; unknown keys and type mismatches raise ConfigError carrying the key path.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include <json.hpp>

#include "iabsim/types.hpp"

namespace iabsim {

struct RoleParams {
    double tx_power_dbm = 0.0;
    double antenna_height_m = 0.0;
    int antenna_elements = 1;

    friend bool operator==(const RoleParams&, const RoleParams&) = default;
};

struct MobilityTimers {
    double a3_offset_db = 3.0;
    std::chrono::milliseconds ttt{80};
    std::chrono::milliseconds prep_inter_du{20};
    std::chrono::milliseconds prep_inter_cu{40};
    std::chrono::milliseconds exec_inter_du{25};
    std::chrono::milliseconds exec_inter_cu{50};
    double rlf_enter_snr_db = 2.0;
    double rlf_exit_snr_db = 5.0;
    std::chrono::milliseconds rlf_window{1000};
    std::chrono::milliseconds recovery_time{100};

    friend bool operator==(const MobilityTimers&, const MobilityTimers&) = default;
};

struct ScenarioConfig {
    // radio
    double carrier_frequency_hz = 30e9;
    double system_bandwidth_hz = 1e9;
    double subcarrier_spacing_hz = 15e3;
    double slot_duration_s = 1e-3;
    double noise_density_dbm_hz = -174.0;
    double noise_margin_bs_db = 7.0;
    double noise_margin_ue_db = 10.0;

    // deployment
    double macro_isd_m = 500.0;
    int num_macro_sites = 7;
    int outdoor_cells_per_site = 4;
    int indoor_cells_per_site = 4;
    double office_length_m = 120.0;
    double office_width_m = 50.0;
    double office_height_m = 3.0;
    double indoor_cell_isd_m = 20.0;
    int ues_per_macrocell = 10;
    double indoor_ue_fraction = 0.5;
    double o2i_low_loss_fraction = 0.5;

    // per-role radio parameters
    RoleParams macro{40.0, 25.0, 256};
    RoleParams outdoor_iab{33.0, 10.0, 256};
    RoleParams indoor_iab{23.0, 3.0, 256};
    RoleParams ue{23.0, 1.5, 1};
    RoleParams vmr{33.0, 3.0, 64};

    // architecture
    ArchMode arch_mode = ArchMode::Proposed;
    int num_donors = 5;

    // topology
    int max_hop_depth = 4;

    // mobility
    double vmr_speed_kmph = 120.0;
    MobilityTimers timers{};
    int onboard_ues = 20;
    double region_margin_m = 50.0;

    // Monte Carlo
    ScenarioType scenario = ScenarioType::Throughput;
    int num_runs = 5;
    std::int64_t slots_per_run = 100000;
    std::uint64_t base_seed = 1;

    const RoleParams& role(BsRole r) const {
        switch (r) {
            case BsRole::MacroGnb: return macro;
            case BsRole::OutdoorIabNode: return outdoor_iab;
            case BsRole::IndoorIabNode: return indoor_iab;
            case BsRole::Vmr: return vmr;
        }
        return macro;
    }

    std::chrono::microseconds slot_duration() const {
        return std::chrono::microseconds(std::llround(slot_duration_s * 1e6));
    }

    friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

/// Number of sites in a hex layout with `rings` rings around the center: 1 + 3r(r+1).
constexpr int hex_site_count(int rings) { return 1 + 3 * rings * (rings + 1); }

/// Ring count for a supported site count, or -1.
constexpr int hex_rings_for(int sites) {
    for (int r = 0; hex_site_count(r) <= sites; ++r) {
        if (hex_site_count(r) == sites) return r;
    }
    return -1;
}

inline void validate(const ScenarioConfig& c) {
    auto positive = [](double v, const char* key) {
        if (!(v > 0.0)) throw ConfigError(key, "must be > 0");
    };
    auto fraction = [](double v, const char* key) {
        if (!(v >= 0.0 && v <= 1.0)) throw ConfigError(key, "must lie in [0, 1]");
    };
    positive(c.carrier_frequency_hz, "radio.carrier_frequency_hz");
    positive(c.system_bandwidth_hz, "radio.system_bandwidth_hz");
    positive(c.subcarrier_spacing_hz, "radio.subcarrier_spacing_hz");
    positive(c.slot_duration_s, "radio.slot_duration_s");
    if (c.slot_duration().count() <= 0) throw ConfigError("radio.slot_duration_s", "must be at least 1 us");
    positive(c.macro_isd_m, "deployment.macro_isd_m");
    positive(c.num_macro_sites, "deployment.num_macro_sites");
    if (hex_rings_for(c.num_macro_sites) < 0)
        throw ConfigError("deployment.num_macro_sites", "must be a hex ring count (1, 7, 19, ...)");
    positive(c.outdoor_cells_per_site, "deployment.outdoor_cells_per_site");
    positive(c.indoor_cells_per_site, "deployment.indoor_cells_per_site");
    positive(c.office_length_m, "deployment.office.length_m");
    positive(c.office_width_m, "deployment.office.width_m");
    positive(c.office_height_m, "deployment.office.height_m");
    positive(c.indoor_cell_isd_m, "deployment.indoor_cell_isd_m");
    if ((c.indoor_cells_per_site - 1) * c.indoor_cell_isd_m > c.office_length_m)
        throw ConfigError("deployment.indoor_cell_isd_m", "indoor cells do not fit along the office");
    positive(c.ues_per_macrocell, "deployment.ues_per_macrocell");
    fraction(c.indoor_ue_fraction, "deployment.indoor_ue_fraction");
    fraction(c.o2i_low_loss_fraction, "deployment.o2i_low_loss_fraction");
    for (auto [p, key] : {std::pair{&c.macro, "roles.macro"}, std::pair{&c.outdoor_iab, "roles.outdoor_iab"},
                          std::pair{&c.indoor_iab, "roles.indoor_iab"}, std::pair{&c.ue, "roles.ue"},
                          std::pair{&c.vmr, "roles.vmr"}}) {
        if (p->antenna_elements < 1) throw ConfigError(std::string(key) + ".antenna_elements", "must be >= 1");
        if (!(p->antenna_height_m > 0.0)) throw ConfigError(std::string(key) + ".antenna_height_m", "must be > 0");
    }
    if (c.indoor_iab.antenna_height_m > c.office_height_m)
        throw ConfigError("roles.indoor_iab.antenna_height_m", "indoor cells must lie inside the office volume");
    positive(c.num_donors, "architecture.num_donors");
    if (c.arch_mode == ArchMode::ThreeGpp && c.num_donors > c.num_macro_sites)
        throw ConfigError("architecture.num_donors", "exceeds the number of macro gNBs");
    if (c.max_hop_depth < 1) throw ConfigError("topology.max_hop_depth", "must be >= 1");
    positive(c.vmr_speed_kmph, "mobility.speed_kmph");
    const auto& t = c.timers;
    for (auto [v, key] : {std::pair{t.ttt, "mobility.ttt_ms"}, std::pair{t.prep_inter_du, "mobility.prep_inter_du_ms"},
                          std::pair{t.prep_inter_cu, "mobility.prep_inter_cu_ms"},
                          std::pair{t.exec_inter_du, "mobility.exec_inter_du_ms"},
                          std::pair{t.exec_inter_cu, "mobility.exec_inter_cu_ms"},
                          std::pair{t.rlf_window, "mobility.rlf_window_ms"},
                          std::pair{t.recovery_time, "mobility.recovery_time_ms"}}) {
        if (v.count() <= 0) throw ConfigError(key, "must be > 0");
    }
    positive(t.a3_offset_db, "mobility.a3_offset_db");
    if (t.rlf_exit_snr_db < t.rlf_enter_snr_db)
        throw ConfigError("mobility.rlf_exit_snr_db", "must be >= rlf_enter_snr_db");
    if (c.onboard_ues < 0) throw ConfigError("mobility.onboard_ues", "must be >= 0");
    if (c.region_margin_m < 0.0) throw ConfigError("mobility.region_margin_m", "must be >= 0");
    positive(c.num_runs, "simulation.num_runs");
    if (c.slots_per_run <= 0) throw ConfigError("simulation.slots_per_run", "must be > 0");
}

namespace detail {

using nlohmann::json;

inline json role_to_json(const RoleParams& r) {
    return json{{"tx_power_dbm", r.tx_power_dbm}, {"antenna_height_m", r.antenna_height_m},
                {"antenna_elements", r.antenna_elements}};
}

/// Reads keys out of one JSON object and rejects anything left over.
class SectionReader {
public:
    SectionReader(const json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
        if (!obj_.is_object()) throw ConfigError(path_, "expected an object");
    }

    template <typename T>
    void read(const char* key, T& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        try {
            if constexpr (std::is_same_v<T, int> || std::is_same_v<T, std::int64_t> ||
                          std::is_same_v<T, std::uint64_t>) {
                if (!it->is_number_integer()) throw ConfigError(full(key), "expected an integer");
            } else if constexpr (std::is_same_v<T, double>) {
                if (!it->is_number()) throw ConfigError(full(key), "expected a number");
            }
            out = it->template get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(full(key), e.what());
        }
    }

    void read_ms(const char* key, std::chrono::milliseconds& out) {
        std::int64_t v = out.count();
        read(key, v);
        out = std::chrono::milliseconds(v);
    }

    void read_role(const char* key, RoleParams& out) {
        seen_.insert(key);
        auto it = obj_.find(key);
        if (it == obj_.end()) return;
        SectionReader r(*it, full(key));
        r.read("tx_power_dbm", out.tx_power_dbm);
        r.read("antenna_height_m", out.antenna_height_m);
        r.read("antenna_elements", out.antenna_elements);
        r.finish();
    }

    const json* section(const char* key) {
        seen_.insert(key);
        auto it = obj_.find(key);
        return it == obj_.end() ? nullptr : &*it;
    }

    std::string full(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    void finish() const {
        for (auto it = obj_.begin(); it != obj_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(full(it.key()), "unknown key");
        }
    }

private:
    const json& obj_;
    std::string path_;
    std::set<std::string> seen_;
};

inline ArchMode parse_mode(const std::string& s, const std::string& key) {
    if (s == "proposed") return ArchMode::Proposed;
    if (s == "3gpp") return ArchMode::ThreeGpp;
    throw ConfigError(key, "expected \"proposed\" or \"3gpp\", got \"" + s + "\"");
}

inline ScenarioType parse_scenario(const std::string& s, const std::string& key) {
    if (s == "throughput") return ScenarioType::Throughput;
    if (s == "mobility") return ScenarioType::Mobility;
    throw ConfigError(key, "expected \"throughput\" or \"mobility\", got \"" + s + "\"");
}

}  // namespace detail

inline nlohmann::json to_json(const ScenarioConfig& c) {
    using detail::role_to_json;
    using nlohmann::json;
    const auto& t = c.timers;
    return json{
        {"radio",
         {{"carrier_frequency_hz", c.carrier_frequency_hz},
          {"system_bandwidth_hz", c.system_bandwidth_hz},
          {"subcarrier_spacing_hz", c.subcarrier_spacing_hz},
          {"slot_duration_s", c.slot_duration_s},
          {"noise_density_dbm_hz", c.noise_density_dbm_hz},
          {"noise_margin_bs_db", c.noise_margin_bs_db},
          {"noise_margin_ue_db", c.noise_margin_ue_db}}},
        {"deployment",
         {{"macro_isd_m", c.macro_isd_m},
          {"num_macro_sites", c.num_macro_sites},
          {"outdoor_cells_per_site", c.outdoor_cells_per_site},
          {"indoor_cells_per_site", c.indoor_cells_per_site},
          {"office", {{"length_m", c.office_length_m}, {"width_m", c.office_width_m}, {"height_m", c.office_height_m}}},
          {"indoor_cell_isd_m", c.indoor_cell_isd_m},
          {"ues_per_macrocell", c.ues_per_macrocell},
          {"indoor_ue_fraction", c.indoor_ue_fraction},
          {"o2i_low_loss_fraction", c.o2i_low_loss_fraction}}},
        {"roles",
         {{"macro", role_to_json(c.macro)},
          {"outdoor_iab", role_to_json(c.outdoor_iab)},
          {"indoor_iab", role_to_json(c.indoor_iab)},
          {"ue", role_to_json(c.ue)},
          {"vmr", role_to_json(c.vmr)}}},
        {"architecture", {{"mode", std::string(to_string(c.arch_mode))}, {"num_donors", c.num_donors}}},
        {"topology", {{"max_hop_depth", c.max_hop_depth}}},
        {"mobility",
         {{"speed_kmph", c.vmr_speed_kmph},
          {"a3_offset_db", t.a3_offset_db},
          {"ttt_ms", t.ttt.count()},
          {"prep_inter_du_ms", t.prep_inter_du.count()},
          {"prep_inter_cu_ms", t.prep_inter_cu.count()},
          {"exec_inter_du_ms", t.exec_inter_du.count()},
          {"exec_inter_cu_ms", t.exec_inter_cu.count()},
          {"rlf_enter_snr_db", t.rlf_enter_snr_db},
          {"rlf_exit_snr_db", t.rlf_exit_snr_db},
          {"rlf_window_ms", t.rlf_window.count()},
          {"recovery_time_ms", t.recovery_time.count()},
          {"onboard_ues", c.onboard_ues},
          {"region_margin_m", c.region_margin_m}}},
        {"simulation",
         {{"scenario", std::string(to_string(c.scenario))},
          {"num_runs", c.num_runs},
          {"slots_per_run", c.slots_per_run},
          {"base_seed", c.base_seed}}},
    };
}

/// Overlays `doc` onto defaults. Missing keys keep their default; the result is validated.
inline ScenarioConfig config_from_json(const nlohmann::json& doc, ScenarioConfig c = {}) {
    using detail::SectionReader;
    SectionReader root(doc, "");
    if (const auto* s = root.section("radio")) {
        SectionReader r(*s, "radio");
        r.read("carrier_frequency_hz", c.carrier_frequency_hz);
        r.read("system_bandwidth_hz", c.system_bandwidth_hz);
        r.read("subcarrier_spacing_hz", c.subcarrier_spacing_hz);
        r.read("slot_duration_s", c.slot_duration_s);
        r.read("noise_density_dbm_hz", c.noise_density_dbm_hz);
        r.read("noise_margin_bs_db", c.noise_margin_bs_db);
        r.read("noise_margin_ue_db", c.noise_margin_ue_db);
        r.finish();
    }
    if (const auto* s = root.section("deployment")) {
        SectionReader r(*s, "deployment");
        r.read("macro_isd_m", c.macro_isd_m);
        r.read("num_macro_sites", c.num_macro_sites);
        r.read("outdoor_cells_per_site", c.outdoor_cells_per_site);
        r.read("indoor_cells_per_site", c.indoor_cells_per_site);
        if (const auto* o = r.section("office")) {
            SectionReader off(*o, "deployment.office");
            off.read("length_m", c.office_length_m);
            off.read("width_m", c.office_width_m);
            off.read("height_m", c.office_height_m);
            off.finish();
        }
        r.read("indoor_cell_isd_m", c.indoor_cell_isd_m);
        r.read("ues_per_macrocell", c.ues_per_macrocell);
        r.read("indoor_ue_fraction", c.indoor_ue_fraction);
        r.read("o2i_low_loss_fraction", c.o2i_low_loss_fraction);
        r.finish();
    }
    if (const auto* s = root.section("roles")) {
        SectionReader r(*s, "roles");
        r.read_role("macro", c.macro);
        r.read_role("outdoor_iab", c.outdoor_iab);
        r.read_role("indoor_iab", c.indoor_iab);
        r.read_role("ue", c.ue);
        r.read_role("vmr", c.vmr);
        r.finish();
    }
    if (const auto* s = root.section("architecture")) {
        SectionReader r(*s, "architecture");
        std::string mode(to_string(c.arch_mode));
        r.read("mode", mode);
        c.arch_mode = detail::parse_mode(mode, "architecture.mode");
        r.read("num_donors", c.num_donors);
        r.finish();
    }
    if (const auto* s = root.section("topology")) {
        SectionReader r(*s, "topology");
        r.read("max_hop_depth", c.max_hop_depth);
        r.finish();
    }
    if (const auto* s = root.section("mobility")) {
        SectionReader r(*s, "mobility");
        auto& t = c.timers;
        r.read("speed_kmph", c.vmr_speed_kmph);
        r.read("a3_offset_db", t.a3_offset_db);
        r.read_ms("ttt_ms", t.ttt);
        r.read_ms("prep_inter_du_ms", t.prep_inter_du);
        r.read_ms("prep_inter_cu_ms", t.prep_inter_cu);
        r.read_ms("exec_inter_du_ms", t.exec_inter_du);
        r.read_ms("exec_inter_cu_ms", t.exec_inter_cu);
        r.read("rlf_enter_snr_db", t.rlf_enter_snr_db);
        r.read("rlf_exit_snr_db", t.rlf_exit_snr_db);
        r.read_ms("rlf_window_ms", t.rlf_window);
        r.read_ms("recovery_time_ms", t.recovery_time);
        r.read("onboard_ues", c.onboard_ues);
        r.read("region_margin_m", c.region_margin_m);
        r.finish();
    }
    if (const auto* s = root.section("simulation")) {
        SectionReader r(*s, "simulation");
        std::string scen(to_string(c.scenario));
        r.read("scenario", scen);
        c.scenario = detail::parse_scenario(scen, "simulation.scenario");
        r.read("num_runs", c.num_runs);
        r.read("slots_per_run", c.slots_per_run);
        r.read("base_seed", c.base_seed);
        r.finish();
    }
    root.finish();
    validate(c);
    return c;
}

inline ScenarioConfig parse_config(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("", std::string("malformed configuration: ") + e.what());
    }
    return config_from_json(doc);
}

inline ScenarioConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open configuration file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

}  // namespace iabsim
