#pragma once

// Deployment generation: hexagonal macro sites, outdoor and indoor IAB-nodes, one office
// per site, UE drops and IAB-donor selection. Everything is a pure function of
// (config, run seed); each concern draws from its own substream.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <vector>

#include "iabsim/channel.hpp"
#include "iabsim/config.hpp"
#include "iabsim/geometry.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/types.hpp"

namespace iabsim {

struct BaseStation {
    NodeId id = kNoNode;
    BsRole role = BsRole::MacroGnb;
    Vec3 position;
    double tx_power_dbm = 0.0;
    int antenna_elements = 1;
    bool donor_flag = false;
    int site = 0;
    bool indoor = false;
    bool high_loss_building = false;
    double o2i_loss_db = 0.0;

    bool wired() const { return role == BsRole::MacroGnb; }

    friend bool operator==(const BaseStation&, const BaseStation&) = default;
};

struct UeDevice {
    NodeId id = kNoNode;
    DeviceKind kind = DeviceKind::Ue;
    Vec3 position;
    bool indoor = false;
    int site = 0;
    bool high_loss_building = false;
    double o2i_loss_db = 0.0;
    std::optional<NodeId> serving_bs;

    friend bool operator==(const UeDevice&, const UeDevice&) = default;
};

struct Scenario {
    std::vector<Vec2> sites;
    std::vector<geom::Hexagon> cells;
    std::vector<geom::Rect> offices;
    std::vector<BaseStation> base_stations;  // id == index
    std::vector<UeDevice> ues;               // id == base_stations.size() + index

    int num_bs() const { return static_cast<int>(base_stations.size()); }
    const BaseStation& bs(NodeId id) const { return base_stations.at(static_cast<std::size_t>(id)); }
    const UeDevice& ue(NodeId id) const { return ues.at(static_cast<std::size_t>(id - num_bs())); }
    bool is_bs(NodeId id) const { return id >= 0 && id < num_bs(); }
};

/// Center site plus hex rings; ring k holds 6k sites at hex distance k.
inline std::vector<Vec2> generate_hex_sites(const ScenarioConfig& config) {
    const int rings = hex_rings_for(config.num_macro_sites);
    if (rings < 0) throw ConfigError("deployment.num_macro_sites", "must be a hex ring count (1, 7, 19, ...)");
    const double isd = config.macro_isd_m;
    constexpr double pi = 3.14159265358979323846;
    // Flat-topped cells: neighbor directions at 30 + 60k degrees.
    std::array<Vec2, 6> dir;
    for (int k = 0; k < 6; ++k) {
        const double a = pi / 6.0 + k * pi / 3.0;
        dir[k] = {std::cos(a), std::sin(a)};
    }
    std::vector<Vec2> sites{{0.0, 0.0}};
    for (int r = 1; r <= rings; ++r) {
        // start at r * dir[4], walk r steps along each of the six directions
        Vec2 p{dir[4].x * r * isd, dir[4].y * r * isd};
        for (int side = 0; side < 6; ++side) {
            for (int step = 0; step < r; ++step) {
                sites.push_back(p);
                p.x += dir[side].x * isd;
                p.y += dir[side].y * isd;
            }
        }
    }
    for (auto& s : sites) {
        // snap rounding noise so symmetric layouts compare exactly
        s.x = std::round(s.x * 1e9) / 1e9;
        s.y = std::round(s.y * 1e9) / 1e9;
    }
    return sites;
}

inline std::vector<geom::Hexagon> site_cells(const ScenarioConfig& config, const std::vector<Vec2>& sites) {
    std::vector<geom::Hexagon> cells;
    cells.reserve(sites.size());
    for (const auto& s : sites) cells.push_back({s, config.macro_isd_m / std::sqrt(3.0)});
    return cells;
}

/// Office footprint placed uniformly inside the cell with all four corners in the hexagon.
inline geom::Rect place_office(const ScenarioConfig& config, const geom::Hexagon& cell, rng::Stream& rng) {
    const double hl = config.office_length_m / 2.0;
    const double hw = config.office_width_m / 2.0;
    for (int attempt = 0; attempt < 100000; ++attempt) {
        const Vec2 c = cell.sample(rng);
        geom::Rect r{c.x - hl, c.x + hl, c.y - hw, c.y + hw};
        if (cell.contains({r.x_min, r.y_min}) && cell.contains({r.x_min, r.y_max}) &&
            cell.contains({r.x_max, r.y_min}) && cell.contains({r.x_max, r.y_max})) {
            return r;
        }
    }
    throw ConfigError("deployment.office", "office does not fit inside a macro cell");
}

/// Per-device building type and frozen O2I loss, keyed on device id.
inline void assign_building(const ScenarioConfig& config, std::uint64_t run_seed, NodeId id, bool& high_loss,
                            double& o2i_loss_db) {
    rng::Stream s(rng::derive(run_seed, rng::Concern::O2i, static_cast<std::uint64_t>(id)));
    high_loss = !s.bernoulli(config.o2i_low_loss_fraction);
    o2i_loss_db = channel::o2i_penetration_db(s, high_loss, config.carrier_frequency_hz);
}

/// Macro gNBs followed by, per site, the outdoor IAB-nodes and then the indoor ones.
/// Also fills `offices`.
inline std::vector<BaseStation> drop_small_cells(const ScenarioConfig& config, const std::vector<Vec2>& sites,
                                                 std::uint64_t run_seed, std::vector<geom::Rect>& offices) {
    rng::Stream rng(run_seed, rng::Concern::SmallCells);
    const auto cells = site_cells(config, sites);
    std::vector<BaseStation> out;
    auto add = [&](BsRole role, Vec2 xy, int site) {
        const auto& p = config.role(role);
        BaseStation b;
        b.id = static_cast<NodeId>(out.size());
        b.role = role;
        b.position = {xy.x, xy.y, p.antenna_height_m};
        b.tx_power_dbm = p.tx_power_dbm;
        b.antenna_elements = p.antenna_elements;
        b.site = site;
        b.indoor = role == BsRole::IndoorIabNode;
        if (b.indoor) assign_building(config, run_seed, b.id, b.high_loss_building, b.o2i_loss_db);
        out.push_back(b);
    };
    for (std::size_t s = 0; s < sites.size(); ++s) add(BsRole::MacroGnb, sites[s], static_cast<int>(s));
    offices.clear();
    for (std::size_t s = 0; s < sites.size(); ++s) {
        const int site = static_cast<int>(s);
        for (int i = 0; i < config.outdoor_cells_per_site; ++i) add(BsRole::OutdoorIabNode, cells[s].sample(rng), site);
        const geom::Rect office = place_office(config, cells[s], rng);
        offices.push_back(office);
        const Vec2 c = office.center();
        const int n = config.indoor_cells_per_site;
        for (int i = 0; i < n; ++i) {
            add(BsRole::IndoorIabNode, {c.x + (i - (n - 1) / 2.0) * config.indoor_cell_isd_m, c.y}, site);
        }
    }
    return out;
}

inline int indoor_ue_count(const ScenarioConfig& config) {
    return static_cast<int>(std::floor(config.ues_per_macrocell * config.indoor_ue_fraction + 1e-9));
}

/// Per cell: floor(N * fraction) UEs inside the office, the rest outdoors in the hexagon.
inline std::vector<UeDevice> drop_ues(const ScenarioConfig& config, const std::vector<Vec2>& sites,
                                      const std::vector<geom::Rect>& offices, NodeId first_id, std::uint64_t run_seed) {
    rng::Stream rng(run_seed, rng::Concern::Ues);
    const auto cells = site_cells(config, sites);
    const int n_in = indoor_ue_count(config);
    std::vector<UeDevice> out;
    for (std::size_t s = 0; s < sites.size(); ++s) {
        for (int i = 0; i < config.ues_per_macrocell; ++i) {
            UeDevice u;
            u.id = first_id + static_cast<NodeId>(out.size());
            u.site = static_cast<int>(s);
            u.indoor = i < n_in;
            Vec2 xy;
            if (u.indoor) {
                xy = offices[s].sample(rng);
                assign_building(config, run_seed, u.id, u.high_loss_building, u.o2i_loss_db);
            } else {
                do {
                    xy = cells[s].sample(rng);
                } while (offices[s].contains(xy));
            }
            u.position = {xy.x, xy.y, config.ue.antenna_height_m};
            out.push_back(u);
        }
    }
    return out;
}

/// Donor-eligible gNB ids in preference order: a seeded permutation of the macro sites.
/// Donors for N_d are the first N_d entries, so donor sets are nested in N_d for a seed.
inline std::vector<NodeId> donor_order(int num_macro_sites, std::uint64_t run_seed) {
    std::vector<NodeId> ids(static_cast<std::size_t>(num_macro_sites));
    std::iota(ids.begin(), ids.end(), 0);
    rng::Stream rng(run_seed, rng::Concern::Donors);
    for (std::size_t i = ids.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
        std::swap(ids[i - 1], ids[std::min(j, i - 1)]);
    }
    return ids;
}

/// Ids of the gNBs acting as IAB-donors; empty in Proposed mode, where every gNB anchors.
inline std::vector<NodeId> select_donors(const ScenarioConfig& config, std::uint64_t run_seed) {
    if (config.arch_mode == ArchMode::Proposed) return {};
    if (config.num_donors > config.num_macro_sites || config.num_donors < 1) {
        throw ConfigError("architecture.num_donors", "must lie in [1, num_macro_sites]");
    }
    auto order = donor_order(config.num_macro_sites, run_seed);
    order.resize(static_cast<std::size_t>(config.num_donors));
    std::sort(order.begin(), order.end());
    return order;
}

inline Scenario generate_scenario(const ScenarioConfig& config, std::uint64_t run_seed) {
    Scenario sc;
    sc.sites = generate_hex_sites(config);
    sc.cells = site_cells(config, sc.sites);
    sc.base_stations = drop_small_cells(config, sc.sites, run_seed, sc.offices);
    sc.ues = drop_ues(config, sc.sites, sc.offices, sc.num_bs(), run_seed);
    for (NodeId d : select_donors(config, run_seed)) sc.base_stations[static_cast<std::size_t>(d)].donor_flag = true;
    return sc;
}

}  // namespace iabsim
