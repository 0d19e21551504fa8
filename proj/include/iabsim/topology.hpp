#pragma once

// Tree formation over the deployment, hop levels, CU ownership and handover classes.
//
// Each MT and UE has exactly one parent, chosen as the strongest-SNR legal candidate.
// IAB-node MTs attach first, nearest-to-a-wired-gNB first, so every parent already has
// a path to the wired network when a child picks it.

#include <algorithm>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "iabsim/channel.hpp"
#include "iabsim/config.hpp"
#include "iabsim/scenario.hpp"
#include "iabsim/util.hpp"

namespace iabsim {

enum class HandoverKind { InterDu, InterCu };

inline std::string_view to_string(HandoverKind k) { return k == HandoverKind::InterDu ? "inter_du" : "inter_cu"; }

/// Logical IAB-donor-CU that owns every IAB-node in the proposed architecture.
inline constexpr NodeId kProposedDonorCu = std::numeric_limits<NodeId>::max();

struct TopologyGraph {
    ArchMode mode = ArchMode::Proposed;
    int max_hop_depth = 4;
    std::vector<NodeId> parent;          // per node (BS ids then UE ids); kNoNode for gNBs / unattached
    std::vector<channel::LinkState> uplink;  // state of the link from parent to this node
    std::vector<int> hop_level;          // per BS; 0 = not connected to a wired gNB
    std::vector<NodeId> root;            // per BS; wired gNB at the top of its branch
    std::vector<NodeId> cu_owner;        // per BS
    std::vector<std::vector<NodeId>> children;  // per BS, ascending id

    int num_bs() const { return static_cast<int>(hop_level.size()); }
    bool is_bs(NodeId id) const { return id >= 0 && id < num_bs(); }
    bool connected(NodeId bs) const { return hop_level[static_cast<std::size_t>(bs)] > 0; }
    bool attached(NodeId node) const { return parent[static_cast<std::size_t>(node)] != kNoNode; }

    bool in_subtree(NodeId node, NodeId subtree_root) const {
        for (NodeId n = node; n != kNoNode; n = parent[static_cast<std::size_t>(n)]) {
            if (n == subtree_root) return true;
        }
        return false;
    }

    /// UE ids whose path passes through `bs` (flows that bs forwards or serves).
    std::vector<NodeId> descendant_ues(NodeId bs) const {
        std::vector<NodeId> out;
        std::vector<NodeId> stack{bs};
        while (!stack.empty()) {
            const NodeId n = stack.back();
            stack.pop_back();
            for (NodeId c : children[static_cast<std::size_t>(n)]) {
                if (is_bs(c)) stack.push_back(c);
                else out.push_back(c);
            }
        }
        std::sort(out.begin(), out.end());
        return out;
    }
};

inline channel::Endpoint endpoint_of(const BaseStation& b) {
    return {b.id, b.position, b.indoor, b.o2i_loss_db, b.antenna_elements, b.indoor ? b.site : -1};
}

inline channel::Endpoint endpoint_of(const UeDevice& u, int elements) {
    return {u.id, u.position, u.indoor, u.o2i_loss_db, elements, u.indoor ? u.site : -1};
}

inline double noise_bs_dbm(const ScenarioConfig& c) {
    return channel::noise_power_dbm(c.system_bandwidth_hz, c.noise_density_dbm_hz, c.noise_margin_bs_db);
}
inline double noise_ue_dbm(const ScenarioConfig& c) {
    return channel::noise_power_dbm(c.system_bandwidth_hz, c.noise_density_dbm_hz, c.noise_margin_ue_db);
}

inline TopologyGraph empty_topology(const Scenario& sc, ArchMode mode, int max_hop_depth) {
    const auto nb = static_cast<std::size_t>(sc.num_bs());
    const auto nn = nb + sc.ues.size();
    TopologyGraph g;
    g.mode = mode;
    g.max_hop_depth = max_hop_depth;
    g.parent.assign(nn, kNoNode);
    g.uplink.assign(nn, {});
    g.hop_level.assign(nb, 0);
    g.root.assign(nb, kNoNode);
    g.cu_owner.assign(nb, kNoNode);
    g.children.assign(nb, {});
    for (const auto& b : sc.base_stations) {
        if (b.wired()) {
            const auto i = static_cast<std::size_t>(b.id);
            g.hop_level[i] = 1;
            g.root[i] = b.id;
            g.cu_owner[i] = b.id;
        }
    }
    return g;
}

/// Legal parents for an MT (`is_mt`) or a UE, in ascending id order.
/// MTs: connected BSs outside the MT's own subtree, below the hop cap; in 3GPP mode
/// only branches rooted at an IAB-donor. UEs: any connected BS in either mode.
inline std::vector<NodeId> candidate_parents(NodeId node, bool is_mt, const Scenario& sc, const TopologyGraph& g) {
    std::vector<NodeId> out;
    for (const auto& b : sc.base_stations) {
        if (b.id == node || !g.connected(b.id)) continue;
        if (is_mt) {
            if (g.is_bs(node) && g.in_subtree(b.id, node)) continue;
            if (g.hop_level[static_cast<std::size_t>(b.id)] >= g.max_hop_depth) continue;
            if (g.mode == ArchMode::ThreeGpp && !sc.bs(g.root[static_cast<std::size_t>(b.id)]).donor_flag) continue;
        }
        out.push_back(b.id);
    }
    return out;
}

struct Choice {
    NodeId id = kNoNode;
    channel::LinkState link;
};

/// Strongest-SNR candidate; exact ties go to the lowest id (candidates arrive sorted).
inline Choice best_by_snr(std::span<const NodeId> candidates, const Scenario& sc, const channel::LinkBudget& budget,
                          const channel::Endpoint& rx, double rx_noise_dbm) {
    Choice best;
    for (NodeId c : candidates) {
        const auto& b = sc.bs(c);
        const auto s = budget.evaluate(endpoint_of(b), b.role, b.tx_power_dbm, rx, rx_noise_dbm);
        if (best.id == kNoNode || s.snr_db > best.link.snr_db) best = {c, s};
    }
    return best;
}

inline void commit_attachment(TopologyGraph& g, NodeId node, const Choice& choice) {
    const auto n = static_cast<std::size_t>(node);
    g.parent[n] = choice.id;
    g.uplink[n] = choice.link;
    auto& kids = g.children[static_cast<std::size_t>(choice.id)];
    kids.insert(std::upper_bound(kids.begin(), kids.end(), node), node);
    if (g.is_bs(node)) {
        const auto p = static_cast<std::size_t>(choice.id);
        g.hop_level[n] = g.hop_level[p] + 1;
        g.root[n] = g.root[p];
        g.cu_owner[n] = g.mode == ArchMode::Proposed ? kProposedDonorCu : g.root[p];
    }
}

/// MTs sorted by distance to the nearest wired gNB, ties by id.
inline std::vector<NodeId> mt_attach_order(const Scenario& sc) {
    std::vector<std::pair<double, NodeId>> keyed;
    for (const auto& b : sc.base_stations) {
        if (b.wired()) continue;
        double d = std::numeric_limits<double>::infinity();
        for (const auto& g : sc.base_stations) {
            if (g.wired()) d = std::min(d, distance_3d(b.position, g.position));
        }
        keyed.emplace_back(d, b.id);
    }
    std::sort(keyed.begin(), keyed.end());
    std::vector<NodeId> out;
    for (auto& [d, id] : keyed) out.push_back(id);
    return out;
}

/// Builds the attachment forest. Nodes whose best legal candidate cannot support the
/// lowest MCS stay unattached.
inline TopologyGraph attach_all(const Scenario& sc, const channel::LinkBudget& budget, const ScenarioConfig& config,
                                bool attach_ues = true) {
    TopologyGraph g = empty_topology(sc, config.arch_mode, config.max_hop_depth);
    const double n_bs = noise_bs_dbm(config);
    const double n_ue = noise_ue_dbm(config);
    // a link that cannot carry the lowest MCS cannot be established
    auto usable = [](const Choice& c) { return c.id != kNoNode && c.link.spectral_efficiency > 0.0; };
    for (NodeId mt : mt_attach_order(sc)) {
        const auto cands = candidate_parents(mt, true, sc, g);
        const auto choice = best_by_snr(cands, sc, budget, endpoint_of(sc.bs(mt)), n_bs);
        if (usable(choice)) commit_attachment(g, mt, choice);
    }
    if (attach_ues) {
        for (const auto& u : sc.ues) {
            const auto cands = candidate_parents(u.id, false, sc, g);
            const auto choice = best_by_snr(cands, sc, budget, endpoint_of(u, config.ue.antenna_elements), n_ue);
            if (usable(choice)) commit_attachment(g, u.id, choice);
        }
    }
    return g;
}

/// InterDu iff both cells belong to the same CU.
inline HandoverKind classify_handover(const TopologyGraph& g, NodeId serving, NodeId target) {
    return g.cu_owner.at(static_cast<std::size_t>(serving)) == g.cu_owner.at(static_cast<std::size_t>(target))
               ? HandoverKind::InterDu
               : HandoverKind::InterCu;
}

/// Onboard UEs handed over along with a VMR handover. They stay anchored at the
/// IAB-donor-CU in the proposed architecture; under 3GPP they follow the anchor donor.
inline int onboard_handover_count(ArchMode mode, bool anchor_changed, int n_onboard) {
    if (mode == ArchMode::Proposed) return 0;
    return anchor_changed ? n_onboard : 0;
}

/// CSV: node_id,role,parent,hop_level,cu_owner,serving_snr_db. UEs report their serving
/// cell's hop level; cu_owner is empty for UEs, "donor_cu" for the proposed logical CU.
inline void write_topology_csv(std::ostream& os, const Scenario& sc, const TopologyGraph& g, int run_id = -1,
                               bool header = true) {
    if (header) os << (run_id >= 0 ? "run_id," : "") << "node_id,role,parent,hop_level,cu_owner,serving_snr_db\n";
    auto prefix = [&] {
        if (run_id >= 0) os << run_id << ',';
    };
    for (const auto& b : sc.base_stations) {
        const auto i = static_cast<std::size_t>(b.id);
        prefix();
        os << b.id << ',' << to_string(b.role) << (b.donor_flag ? "_donor" : "") << ',' << g.parent[i] << ','
           << g.hop_level[i] << ',';
        if (g.cu_owner[i] == kProposedDonorCu) os << "donor_cu";
        else os << g.cu_owner[i];
        os << ',' << (g.attached(b.id) ? fmt_double(g.uplink[i].snr_db) : "") << '\n';
    }
    for (const auto& u : sc.ues) {
        const auto i = static_cast<std::size_t>(u.id);
        const NodeId p = g.parent[i];
        prefix();
        os << u.id << ",ue," << p << ',' << (p == kNoNode ? 0 : g.hop_level[static_cast<std::size_t>(p)]) << ",,"
           << (p == kNoNode ? "" : fmt_double(g.uplink[i].snr_db)) << '\n';
    }
}

}  // namespace iabsim
