#include <gtest/gtest.h>

#include <numeric>

#include "iabsim/mac.hpp"

using namespace iabsim;
using namespace iabsim::mac;

namespace {

constexpr double kBw = 400e6;
constexpr double kSlot = 125e-6;

double rate_bps(const SlotScheduler& s, std::size_t ue, std::int64_t slots) {
    return s.delivered_bits()[ue] / (static_cast<double>(slots) * kSlot);
}

// one slot's worth of bits at the given SE, expressed as a rate over the run
double quantum_bps(double se, std::int64_t slots) { return se * kBw * kSlot / (static_cast<double>(slots) * kSlot); }

}  // namespace

TEST(Phase, ParityOverAMillionSlots) {
    for (std::int64_t s = 0; s < 1'000'000; ++s) {
        const auto p = phase_of(s);
        EXPECT_EQ(p == SlotPhase::OddHopTransmit, s % 2 == 0);
        for (int hop = 1; hop <= 5; ++hop) {
            // a BS and its child never transmit in the same slot
            ASSERT_NE(transmits(hop, p), transmits(hop + 1, p));
        }
        ASSERT_FALSE(transmits(0, p));
    }
    EXPECT_TRUE(transmits(1, SlotPhase::OddHopTransmit));
    EXPECT_TRUE(transmits(2, SlotPhase::EvenHopTransmit));
}

TEST(Tree, HopLevelsFromParents) {
    const auto n = MacNetwork::tree(3, {kNoNode, 0, 1, 2}, {0, 4, 4, 4});
    EXPECT_EQ(n.hop_level, (std::vector<int>{1, 2, 3}));
    EXPECT_EQ(n.num_ues(), 1);
    EXPECT_THROW(MacNetwork::tree(2, {1, 0, 0}, {0, 0, 1}), std::invalid_argument);
    EXPECT_THROW(MacNetwork::tree(2, {kNoNode}, {0}), std::invalid_argument);
}

TEST(SingleLink, HalfTheLinkRate) {
    const double se = 4.0;
    SlotScheduler s(MacNetwork::tree(1, {kNoNode, 0}, {0, se}), kBw, kSlot);
    const std::int64_t slots = 10'001;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), se * kBw / 2.0, quantum_bps(se, slots));
    EXPECT_DOUBLE_EQ(s.slot_capacity_bits(1), se * kBw * kSlot);
}

TEST(SingleLink, TwoUesShareEqually) {
    const double se = 2.0;
    SlotScheduler s(MacNetwork::tree(1, {kNoNode, 0, 0}, {0, se, se}), kBw, kSlot);
    const std::int64_t slots = 20'000;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), se * kBw / 4.0, quantum_bps(se, slots));
    EXPECT_NEAR(rate_bps(s, 1, slots), se * kBw / 4.0, quantum_bps(se, slots));
}

TEST(SingleLink, OnlyOddHopSlotsCarryAccessData) {
    SlotScheduler s(MacNetwork::tree(1, {kNoNode, 0}, {0, 3.0}), kBw, kSlot);
    EXPECT_GT(s.serve_slot(0)[1], 0.0);
    EXPECT_EQ(s.serve_slot(1)[1], 0.0);
}

TEST(TwoHop, EqualLinksGiveHalfRate) {
    const double se = 3.0;
    // gNB 0 -> IAB 1 -> UE 2
    SlotScheduler s(MacNetwork::tree(2, {kNoNode, 0, 1}, {0, se, se}), kBw, kSlot);
    const std::int64_t slots = 20'000;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), se * kBw / 2.0, quantum_bps(se, slots));
}

TEST(TwoHop, WeakAccessLinkLimits) {
    const double backhaul = 4.0;
    const double access = 2.0;
    SlotScheduler s(MacNetwork::tree(2, {kNoNode, 0, 1}, {0, backhaul, access}), kBw, kSlot);
    const std::int64_t slots = 20'000;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), access * kBw / 2.0, quantum_bps(backhaul, slots));
    // the excess piles up at the relay
    EXPECT_GT(s.queue(1).per_flow_backlog[0], 0.0);
}

TEST(TwoHop, WeakBackhaulLimits) {
    const double backhaul = 1.5;
    const double access = 5.0;
    SlotScheduler s(MacNetwork::tree(2, {kNoNode, 0, 1}, {0, backhaul, access}), kBw, kSlot);
    const std::int64_t slots = 20'000;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), backhaul * kBw / 2.0, quantum_bps(access, slots));
    EXPECT_LE(s.queue(1).per_flow_backlog[0], s.slot_capacity_bits(2));
}

TEST(TwoHop, RelayAndDirectUeAlternate) {
    // gNB 0 serves relay 1 and UE 3; relay serves UE 2
    const double se = 2.0;
    SlotScheduler s(MacNetwork::tree(2, {kNoNode, 0, 1, 0}, {0, se, se, se}), kBw, kSlot);
    const std::int64_t slots = 40'000;
    s.run(0, slots);
    EXPECT_NEAR(rate_bps(s, 0, slots), se * kBw / 4.0, 2 * quantum_bps(se, slots));
    EXPECT_NEAR(rate_bps(s, 1, slots), se * kBw / 4.0, 2 * quantum_bps(se, slots));
}

TEST(Conservation, DeliveredNeverExceedsDeparted) {
    // gNB 0 -> IAB 1 -> IAB 2, UEs on every level
    const std::vector<NodeId> parent{kNoNode, 0, 1, 0, 1, 2, 2};
    const std::vector<double> se{0, 5.0, 3.0, 2.0, 1.0, 4.0, 0.5};
    SlotScheduler s(MacNetwork::tree(3, parent, se), kBw, kSlot);
    for (std::int64_t slot = 0; slot < 5000; ++slot) {
        s.serve_slot(slot);
        for (std::size_t u = 0; u < 4; ++u) ASSERT_LE(s.delivered_bits()[u], s.departed_root_bits()[u] + 1e-6);
    }
    // in-flight bits are exactly what the relays still hold
    for (std::size_t u = 0; u < 4; ++u) {
        const double held = s.queue(1).per_flow_backlog[u] + s.queue(2).per_flow_backlog[u];
        EXPECT_NEAR(s.departed_root_bits()[u] - s.delivered_bits()[u], held, 1e-3);
    }
}

TEST(Conservation, DisconnectedBsNeverTransmits) {
    MacNetwork n;
    n.num_bs = 2;
    n.parent = {kNoNode, kNoNode, 0, 1};
    n.link_se = {0, 0, 3.0, 3.0};
    n.hop_level = {1, 0};
    SlotScheduler s(n, kBw, kSlot);
    s.run(0, 1000);
    EXPECT_GT(s.delivered_bits()[0], 0.0);
    EXPECT_EQ(s.delivered_bits()[1], 0.0);
}

TEST(Fairness, RemovingAUeNeverHurtsOthers) {
    const std::vector<double> se{0, 1.0, 2.0, 3.0};
    SlotScheduler full(MacNetwork::tree(1, {kNoNode, 0, 0, 0}, se), kBw, kSlot);
    SlotScheduler reduced(MacNetwork::tree(1, {kNoNode, 0, 0}, {0, 1.0, 2.0}), kBw, kSlot);
    full.run(0, 9000);
    reduced.run(0, 9000);
    EXPECT_GE(reduced.delivered_bits()[0], full.delivered_bits()[0]);
    EXPECT_GE(reduced.delivered_bits()[1], full.delivered_bits()[1]);
}

TEST(Percentile, LinearInterpolation) {
    std::vector<double> v(100);
    std::iota(v.begin(), v.end(), 1.0);
    EXPECT_NEAR(percentile(v, 0.05), 5.95, 1e-12);
    EXPECT_DOUBLE_EQ(percentile(v, 0.0), 1.0);
    EXPECT_DOUBLE_EQ(percentile(v, 1.0), 100.0);
    EXPECT_DOUBLE_EQ(percentile({7.0}, 0.05), 7.0);
    EXPECT_THROW(percentile({}, 0.5), std::invalid_argument);
}

TEST(Report, IdenticalRatesMakeEdgeEqualAverage) {
    const auto r = throughput_report(std::vector<double>(10, 5e6), 2.0);
    EXPECT_DOUBLE_EQ(r.average_bps, 2.5e6);
    EXPECT_DOUBLE_EQ(r.cell_edge_bps, r.average_bps);
}

TEST(Report, EdgeNeverAboveAverageForSkewedRates) {
    const auto r = throughput_report({1.0, 2.0, 3.0, 100.0}, 1.0);
    EXPECT_DOUBLE_EQ(r.average_bps, 26.5);
    EXPECT_NEAR(r.cell_edge_bps, 1.15, 1e-12);
}

TEST(Report, RejectsEmptyAndNonPositiveDuration) {
    EXPECT_THROW(throughput_report({}, 1.0), std::invalid_argument);
    EXPECT_THROW(throughput_report({1.0}, 0.0), std::invalid_argument);
    EXPECT_THROW(throughput_report({1.0}, -1.0), std::invalid_argument);
}
