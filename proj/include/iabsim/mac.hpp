#pragma once

// Half-duplex static TDM with per-BS round-robin and multihop forwarding queues.
//
// Even slots: odd-hop BSs (gNBs / donors at hop 1) transmit, even-hop BSs receive.
// Odd slots: the reverse. A transmitting BS grants the whole slot to one child, chosen
// round-robin among children with backlog; to a relay child it moves bits out of the
// per-UE flows it holds, round-robin over flows. Wired gNBs hold an unbounded backlog
// for every descendant UE (full buffer).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "iabsim/topology.hpp"
#include "iabsim/types.hpp"

namespace iabsim::mac {

enum class SlotPhase { OddHopTransmit, EvenHopTransmit };

constexpr SlotPhase phase_of(std::int64_t slot_index) {
    return slot_index % 2 == 0 ? SlotPhase::OddHopTransmit : SlotPhase::EvenHopTransmit;
}

constexpr bool transmits(int hop_level, SlotPhase phase) {
    if (hop_level <= 0) return false;
    return (hop_level % 2 == 1) == (phase == SlotPhase::OddHopTransmit);
}

/// What the scheduler needs from a topology: tree shape and per-link spectral efficiency.
struct MacNetwork {
    int num_bs = 0;
    std::vector<NodeId> parent;   // per node; BSs first, then UEs
    std::vector<double> link_se;  // per node, SE of the link from its parent
    std::vector<int> hop_level;   // per BS; 0 = disconnected

    int num_nodes() const { return static_cast<int>(parent.size()); }
    int num_ues() const { return num_nodes() - num_bs; }

    static MacNetwork from_topology(const TopologyGraph& g) {
        MacNetwork n;
        n.num_bs = g.num_bs();
        n.parent = g.parent;
        n.hop_level = g.hop_level;
        n.link_se.reserve(g.uplink.size());
        for (const auto& l : g.uplink) n.link_se.push_back(l.spectral_efficiency);
        return n;
    }

    /// Hand-built tree: BSs without a parent are wired gNBs at hop 1.
    static MacNetwork tree(int num_bs, std::vector<NodeId> parent, std::vector<double> link_se) {
        if (parent.size() != link_se.size() || static_cast<int>(parent.size()) < num_bs)
            throw std::invalid_argument("MacNetwork::tree: size mismatch");
        MacNetwork n;
        n.num_bs = num_bs;
        n.parent = std::move(parent);
        n.link_se = std::move(link_se);
        n.hop_level.assign(static_cast<std::size_t>(num_bs), 0);
        for (NodeId b = 0; b < num_bs; ++b) {
            int depth = 1;
            NodeId p = n.parent[static_cast<std::size_t>(b)];
            for (; p != kNoNode; p = n.parent[static_cast<std::size_t>(p)]) {
                if (++depth > num_bs) throw std::invalid_argument("MacNetwork::tree: cycle");
            }
            n.hop_level[static_cast<std::size_t>(b)] = depth;
        }
        return n;
    }
};

struct ForwardingQueue {
    NodeId owner_bs = kNoNode;
    std::vector<double> per_flow_backlog;  // bits, indexed by UE index (node id - num_bs)
};

class SlotScheduler {
public:
    SlotScheduler(MacNetwork net, double bandwidth_hz, double slot_duration_s)
        : net_(std::move(net)), slot_bits_per_se_(bandwidth_hz * slot_duration_s) {
        const auto nb = static_cast<std::size_t>(net_.num_bs);
        const auto nu = static_cast<std::size_t>(net_.num_ues());
        children_.assign(nb, {});
        for (NodeId n = 0; n < net_.num_nodes(); ++n) {
            const NodeId p = net_.parent[static_cast<std::size_t>(n)];
            if (p != kNoNode) children_[static_cast<std::size_t>(p)].push_back(n);
        }
        rr_.assign(nb, 0);
        queues_.resize(nb);
        flows_.assign(nb, {});
        flow_rr_.assign(nb, {});
        for (NodeId b = 0; b < net_.num_bs; ++b) {
            auto& q = queues_[static_cast<std::size_t>(b)];
            q.owner_bs = b;
            q.per_flow_backlog.assign(nu, 0.0);
            auto& f = flows_[static_cast<std::size_t>(b)];
            f.resize(children_[static_cast<std::size_t>(b)].size());
            flow_rr_[static_cast<std::size_t>(b)].assign(f.size(), 0);
            for (std::size_t k = 0; k < f.size(); ++k) {
                const NodeId c = children_[static_cast<std::size_t>(b)][k];
                if (c < net_.num_bs) f[k] = descendant_ue_indices(c);
            }
        }
        // full buffer at every wired gNB for the UEs below it
        for (NodeId u = 0; u < net_.num_ues(); ++u) {
            const NodeId top = top_bs(u + net_.num_bs);
            if (top != kNoNode && net_.parent[static_cast<std::size_t>(top)] == kNoNode &&
                net_.hop_level[static_cast<std::size_t>(top)] == 1) {
                queues_[static_cast<std::size_t>(top)].per_flow_backlog[static_cast<std::size_t>(u)] =
                    std::numeric_limits<double>::infinity();
            }
        }
        delivered_.assign(nu, 0.0);
        departed_root_.assign(nu, 0.0);
    }

    /// Capacity of the link into `node` for one slot, in bits.
    double slot_capacity_bits(NodeId node) const {
        return net_.link_se[static_cast<std::size_t>(node)] * slot_bits_per_se_;
    }

    /// Runs one slot; returns bits moved per receiving node (index = node id).
    const std::vector<double>& serve_slot(std::int64_t slot) {
        const SlotPhase phase = phase_of(slot);
        moved_.assign(static_cast<std::size_t>(net_.num_nodes()), 0.0);
        for (NodeId b = 0; b < net_.num_bs; ++b) {
            if (!transmits(net_.hop_level[static_cast<std::size_t>(b)], phase)) continue;
            serve_bs(b);
        }
        ++slots_;
        return moved_;
    }

    void run(std::int64_t first_slot, std::int64_t count) {
        for (std::int64_t s = first_slot; s < first_slot + count; ++s) serve_slot(s);
    }

    const std::vector<double>& delivered_bits() const { return delivered_; }
    const std::vector<double>& departed_root_bits() const { return departed_root_; }
    const ForwardingQueue& queue(NodeId bs) const { return queues_[static_cast<std::size_t>(bs)]; }
    std::int64_t slots_run() const { return slots_; }
    const MacNetwork& network() const { return net_; }

private:
    std::vector<std::size_t> descendant_ue_indices(NodeId bs) const {
        std::vector<std::size_t> out;
        for (NodeId u = net_.num_bs; u < net_.num_nodes(); ++u) {
            for (NodeId p = net_.parent[static_cast<std::size_t>(u)]; p != kNoNode;
                 p = net_.parent[static_cast<std::size_t>(p)]) {
                if (p == bs) {
                    out.push_back(static_cast<std::size_t>(u - net_.num_bs));
                    break;
                }
            }
        }
        return out;
    }

    NodeId top_bs(NodeId node) const {
        NodeId p = net_.parent[static_cast<std::size_t>(node)];
        if (p == kNoNode) return kNoNode;
        while (net_.parent[static_cast<std::size_t>(p)] != kNoNode) p = net_.parent[static_cast<std::size_t>(p)];
        return p;
    }

    double child_backlog(NodeId b, std::size_t k) const {
        const auto& q = queues_[static_cast<std::size_t>(b)].per_flow_backlog;
        const NodeId c = children_[static_cast<std::size_t>(b)][k];
        if (c >= net_.num_bs) return q[static_cast<std::size_t>(c - net_.num_bs)];
        double sum = 0.0;
        for (std::size_t f : flows_[static_cast<std::size_t>(b)][k]) sum += q[f];
        return sum;
    }

    void serve_bs(NodeId b) {
        const auto bi = static_cast<std::size_t>(b);
        const auto& kids = children_[bi];
        const std::size_t n = kids.size();
        if (n == 0) return;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = (rr_[bi] + i) % n;
            if (child_backlog(b, k) > 0.0) {
                rr_[bi] = (k + 1) % n;
                transfer(b, k);
                return;
            }
        }
    }

    void transfer(NodeId b, std::size_t k) {
        const auto bi = static_cast<std::size_t>(b);
        auto& q = queues_[bi].per_flow_backlog;
        const NodeId c = children_[bi][k];
        const bool root = net_.parent[bi] == kNoNode;
        double remaining = slot_capacity_bits(c);
        if (c >= net_.num_bs) {
            const auto u = static_cast<std::size_t>(c - net_.num_bs);
            const double amt = std::min(q[u], remaining);
            q[u] -= amt;
            delivered_[u] += amt;
            if (root) departed_root_[u] += amt;
            moved_[static_cast<std::size_t>(c)] += amt;
            return;
        }
        auto& cq = queues_[static_cast<std::size_t>(c)].per_flow_backlog;
        const auto& flows = flows_[bi][k];
        std::size_t& ptr = flow_rr_[bi][k];
        for (std::size_t visited = 0; visited < flows.size() && remaining > 0.0; ++visited) {
            const std::size_t f = flows[ptr];
            ptr = (ptr + 1) % flows.size();
            if (q[f] <= 0.0) continue;
            const double amt = std::min(q[f], remaining);
            q[f] -= amt;
            cq[f] += amt;
            remaining -= amt;
            if (root) departed_root_[f] += amt;
            moved_[static_cast<std::size_t>(c)] += amt;
        }
    }

    MacNetwork net_;
    double slot_bits_per_se_;
    std::vector<std::vector<NodeId>> children_;
    std::vector<std::size_t> rr_;
    std::vector<ForwardingQueue> queues_;
    std::vector<std::vector<std::vector<std::size_t>>> flows_;  // [bs][child] -> UE indices
    std::vector<std::vector<std::size_t>> flow_rr_;
    std::vector<double> delivered_;
    std::vector<double> departed_root_;
    std::vector<double> moved_;
    std::int64_t slots_ = 0;
};

/// Linear interpolation between order statistics (position q*(n-1) in the sorted sample).
inline double percentile(std::vector<double> values, double q) {
    if (values.empty()) throw std::invalid_argument("percentile of an empty sample");
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

struct ThroughputReport {
    std::vector<double> per_ue_bps;
    double average_bps = 0.0;
    double cell_edge_bps = 0.0;  // 5th percentile
};

inline constexpr double kCellEdgeQuantile = 0.05;

inline ThroughputReport throughput_report(const std::vector<double>& delivered_bits, double sim_duration_s) {
    if (!(sim_duration_s > 0.0)) throw std::invalid_argument("simulation duration must be > 0");
    if (delivered_bits.empty()) throw std::invalid_argument("throughput report over an empty UE set");
    ThroughputReport r;
    r.per_ue_bps.reserve(delivered_bits.size());
    double sum = 0.0;
    for (double b : delivered_bits) {
        r.per_ue_bps.push_back(b / sim_duration_s);
        sum += r.per_ue_bps.back();
    }
    r.average_bps = sum / static_cast<double>(r.per_ue_bps.size());
    r.cell_edge_bps = percentile(r.per_ue_bps, kCellEdgeQuantile);
    return r;
}

}  // namespace iabsim::mac
