#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "iabsim/channel.hpp"
#include "iabsim/mcs.hpp"

using namespace iabsim;
using namespace iabsim::channel;

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

LinkGeometry geom(PathlossModel m, Vec3 tx, Vec3 rx) { return {tx, rx, m, false}; }

constexpr double kFc = 30e9;

}  // namespace

// ---- LOS probability ----------------------------------------------------------------

TEST(LosProbability, ColocatedAndNearRegionAreOne) {
    EXPECT_EQ(los_probability(PathlossModel::UMa, 0.0), 1.0);
    EXPECT_EQ(los_probability(PathlossModel::UMa, 10.0), 1.0);
    EXPECT_EQ(los_probability(PathlossModel::UMiStreetCanyon, 18.0), 1.0);
    EXPECT_EQ(los_probability(PathlossModel::InH, 5.0), 1.0);
}

TEST(LosProbability, ReferenceValues) {
    // evaluated by hand from 18/d + exp(-d/decay)(1 - 18/d) and the open-office InH form
    EXPECT_NEAR(los_probability(PathlossModel::UMa, 100.0), 0.3476708368, 1e-9);
    EXPECT_NEAR(los_probability(PathlossModel::UMiStreetCanyon, 100.0), 0.2309847497, 1e-9);
    EXPECT_NEAR(los_probability(PathlossModel::UMiStreetCanyon, 500.0), 0.0360008958, 1e-9);
    EXPECT_NEAR(los_probability(PathlossModel::InH, 30.0), 0.7025017795, 1e-9);
    EXPECT_NEAR(los_probability(PathlossModel::InH, 100.0), 0.4243939689, 1e-9);
}

TEST(LosProbability, MonotoneAndBounded) {
    for (auto m : {PathlossModel::UMa, PathlossModel::UMiStreetCanyon}) {
        double prev = 1.0;
        for (double d = 0.0; d <= 3000.0; d += 5.0) {
            const double p = los_probability(m, d);
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
            EXPECT_LE(p, prev + 1e-15);
            prev = p;
        }
    }
    EXPECT_GE(los_probability(PathlossModel::UMiStreetCanyon, 100.0),
              los_probability(PathlossModel::UMiStreetCanyon, 500.0));
}

// ---- pathloss -------------------------------------------------------------------------

TEST(Pathloss, InhLosTwentyMetres) {
    const auto r = pathloss_db(geom(PathlossModel::InH, {0, 0, 3}, {20, 0, 3}), true, kFc);
    EXPECT_NEAR(r.db, 84.4502440194, 1e-9);
    EXPECT_FALSE(r.clamped);
}

TEST(Pathloss, UmaAndUmiReferenceValues) {
    // 2-D distance below the breakpoint (4.8 km for UMa, 1.8 km for UMi at 30 GHz)
    const auto uma_los = pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {300, 0, 1.5}), true, kFc);
    const auto uma_nlos = pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {300, 0, 1.5}), false, kFc);
    EXPECT_NEAR(uma_los.db, 112.0683167996, 1e-8);
    EXPECT_NEAR(uma_nlos.db, 139.9402363599, 1e-8);
    const auto umi_los = pathloss_db(geom(PathlossModel::UMiStreetCanyon, {0, 0, 10}, {150, 0, 1.5}), true, kFc);
    const auto umi_nlos = pathloss_db(geom(PathlossModel::UMiStreetCanyon, {0, 0, 10}, {150, 0, 1.5}), false, kFc);
    EXPECT_NEAR(umi_los.db, 107.6549610370, 1e-8);
    EXPECT_NEAR(umi_nlos.db, 130.7032788576, 1e-8);
}

TEST(Pathloss, IncreasingInDistance) {
    for (auto m : {PathlossModel::UMa, PathlossModel::UMiStreetCanyon, PathlossModel::InH}) {
        for (bool los : {true, false}) {
            double prev = -1.0;
            for (double d = 20.0; d <= 8000.0; d *= 1.1) {
                const double pl = pathloss_db(geom(m, {0, 0, 25}, {d, 0, 1.5}), los, kFc).db;
                EXPECT_GT(pl, prev) << to_string(m) << " los=" << los << " d=" << d;
                prev = pl;
            }
        }
    }
    EXPECT_GT(pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {200, 0, 1.5}), false, kFc).db,
              pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {100, 0, 1.5}), false, kFc).db);
}

TEST(Pathloss, NlosNeverBelowLos) {
    for (auto m : {PathlossModel::UMa, PathlossModel::UMiStreetCanyon, PathlossModel::InH}) {
        for (double d = 1.0; d <= 6000.0; d *= 1.3) {
            const auto g = geom(m, {0, 0, 10}, {d, 0, 1.5});
            EXPECT_GE(pathloss_db(g, false, kFc).db, pathloss_db(g, true, kFc).db);
        }
    }
}

TEST(Pathloss, BelowMinimumIsClampedAndFlagged) {
    const auto a = pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {3, 0, 1.5}), true, kFc);
    const auto b = pathloss_db(geom(PathlossModel::UMa, {0, 0, 25}, {10, 0, 1.5}), true, kFc);
    EXPECT_TRUE(a.clamped);
    EXPECT_FALSE(b.clamped);
    EXPECT_DOUBLE_EQ(a.db, b.db);
    const auto c = pathloss_db(geom(PathlossModel::InH, {0, 0, 3}, {0.2, 0, 3}), true, kFc);
    EXPECT_TRUE(c.clamped);
    EXPECT_NEAR(c.db, 32.4 + 20.0 * std::log10(30.0), 1e-9);
}

// ---- O2I -----------------------------------------------------------------------------

TEST(O2i, MeanWallLossAtThirtyGhz) {
    EXPECT_NEAR(o2i_wall_loss_db(false, kFc), 18.2287874528, 1e-8);
    EXPECT_NEAR(o2i_wall_loss_db(true, kFc), 38.5490195989, 1e-8);
}

TEST(O2i, OutdoorToOutdoorIsZero) {
    const LinkBudget budget(1, kFc, 1e9);
    const Endpoint tx{0, {0, 0, 25}, false, 0.0, 256};
    const Endpoint rx{1, {100, 0, 1.5}, false, 30.0, 1};  // loss is ignored outdoors
    EXPECT_EQ(budget.evaluate(tx, BsRole::MacroGnb, 40, rx, -74).o2i_loss_db, 0.0);
}

TEST(O2i, CrossingWallsUsesIndoorLosses) {
    const Endpoint out{0, {0, 0, 25}, false, 0.0, 256};
    const Endpoint in_a{1, {50, 0, 1.5}, true, 20.0, 1, 0};
    const Endpoint in_a2{2, {60, 0, 3}, true, 25.0, 256, 0};
    const Endpoint in_b{3, {600, 0, 3}, true, 30.0, 256, 1};
    EXPECT_EQ(link_o2i_db(out, in_a), 20.0);
    EXPECT_EQ(link_o2i_db(in_a, out), 20.0);
    EXPECT_EQ(link_o2i_db(in_a2, in_a), 0.0);
    EXPECT_EQ(link_o2i_db(in_b, in_a), 50.0);
}

TEST(O2i, HighLossDominatesLowLoss) {
    rng::Stream s(2024);
    std::vector<double> low, high;
    for (int i = 0; i < 10000; ++i) {
        low.push_back(o2i_penetration_db(s, false, kFc));
        high.push_back(o2i_penetration_db(s, true, kFc));
    }
    std::sort(low.begin(), low.end());
    std::sort(high.begin(), high.end());
    for (double q : {0.05, 0.25, 0.5, 0.75, 0.95}) {
        const auto k = static_cast<std::size_t>(q * 9999);
        EXPECT_GT(high[k], low[k]) << "quantile " << q;
    }
    EXPECT_GE(low.front(), 0.0);
}

TEST(O2i, FrozenPerDeviceWithinRun) {
    const LinkBudget budget(5, kFc, 1e9);
    const Endpoint tx{0, {0, 0, 25}, false, 0.0, 256};
    const Endpoint rx{9, {80, 10, 1.5}, true, 21.5, 1, 0};
    const auto a = budget.evaluate(tx, BsRole::MacroGnb, 40, rx, -74);
    const auto b = budget.evaluate(tx, BsRole::MacroGnb, 40, rx, -74);
    EXPECT_EQ(a.o2i_loss_db, 21.5);
    EXPECT_EQ(a.snr_db, b.snr_db);
    EXPECT_EQ(a.shadow_fading_db, b.shadow_fading_db);
}

// ---- gains, noise, SNR -----------------------------------------------------------------

TEST(Budget, BeamformingGain) {
    EXPECT_NEAR(beamforming_gain_db(256, 1), 24.0823996531, 1e-9);
    EXPECT_NEAR(beamforming_gain_db(256, 64), 42.1441993929, 1e-9);
    EXPECT_EQ(beamforming_gain_db(1, 1), 0.0);
    EXPECT_THROW(beamforming_gain_db(0, 4), std::invalid_argument);
}

TEST(Budget, NoisePower) {
    EXPECT_DOUBLE_EQ(noise_power_dbm(1.0, -174.0, 0.0), -174.0);
    EXPECT_NEAR(noise_power_dbm(1e9, -174.0, 7.0), -77.0, 1e-12);
    EXPECT_NEAR(noise_power_dbm(1e9, -174.0, 10.0), -74.0, 1e-12);
}

TEST(Budget, SnrComposition) {
    EXPECT_NEAR(link_snr_db(40, 42.14, 120, 0, 0, -77), 39.14, 1e-12);
    EXPECT_NEAR(link_snr_db(40, 0, 40 + 174, 0, 0, -174), 0.0, 1e-12);
    EXPECT_NEAR(link_snr_db(40, 30, 103, 2, 1, -80) - link_snr_db(40, 30, 100, 2, 1, -80), -3.0, 1e-12);
}

TEST(Budget, LinkStateIsConsistent) {
    const LinkBudget budget(77, kFc, 1e9);
    const Endpoint tx{3, {0, 0, 10}, false, 0.0, 256};
    const Endpoint rx{70, {140, 35, 1.5}, false, 0.0, 1};
    const auto s = budget.evaluate(tx, BsRole::OutdoorIabNode, 33, rx, -74);
    const double pl = pathloss_db({tx.position, rx.position, PathlossModel::UMiStreetCanyon, false}, s.los, kFc).db;
    EXPECT_DOUBLE_EQ(s.pathloss_db, pl);
    EXPECT_NEAR(s.snr_db, 33 + beamforming_gain_db(256, 1) - pl - s.shadow_fading_db + 74, 1e-9);
    EXPECT_EQ(s.spectral_efficiency, McsTable::builtin().spectral_efficiency(s.snr_db));
}

TEST(Budget, FrozenDrawsIgnoreLaterGeometry) {
    const LinkBudget budget(8, kFc, 1e9);
    const Vec3 tx{0, 0, 10};
    const auto d = budget.frozen(4, BsRole::OutdoorIabNode, tx, 99, {5, 0, 3});  // inside the all-LOS region
    ASSERT_TRUE(d.los.has_value());
    EXPECT_TRUE(*d.los);
    const Endpoint etx{4, tx, false, 0.0, 256};
    const Endpoint far{99, {2000, 0, 3}, false, 0.0, 64};
    EXPECT_TRUE(budget.evaluate(d, etx, BsRole::OutdoorIabNode, 33, far, -77).los);
}

TEST(Budget, ShadowDrawsAreStandardNormal) {
    const LinkBudget budget(31, kFc, 1e9);
    double sum = 0.0, sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double z = budget.draws(i, 100000 + i).shadow_z;
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.03);
    EXPECT_NEAR(sq / n, 1.0, 0.04);
}

// ---- MCS -----------------------------------------------------------------------------

TEST(Mcs, TableShapeAndGap) {
    const auto& t = McsTable::builtin();
    ASSERT_EQ(t.rows().size(), 28u);
    EXPECT_DOUBLE_EQ(t.max_spectral_efficiency(), 7.4063);
    for (const auto& r : t.rows()) {
        const double se = r.modulation_order * r.code_rate_x1024 / 1024.0;
        EXPECT_NEAR(r.spectral_efficiency, se, 6e-5);
        // 3 dB implementation gap: SE = log2(1 + snr / gamma)
        const double req = 10.0 * std::log10(std::pow(10.0, 0.3) * (std::pow(2.0, se) - 1.0));
        EXPECT_NEAR(r.required_snr_db, req, 1e-3) << "row " << r.index;
    }
}

TEST(Mcs, Edges) {
    const auto& t = McsTable::builtin();
    EXPECT_EQ(t.spectral_efficiency(-20.0), 0.0);
    EXPECT_EQ(t.spectral_efficiency(-4.5347), 0.0);
    EXPECT_DOUBLE_EQ(t.spectral_efficiency(-4.5346), 0.2344);
    EXPECT_DOUBLE_EQ(t.spectral_efficiency(60.0), 7.4063);
    EXPECT_DOUBLE_EQ(t.spectral_efficiency(25.2695), 7.4063);
    EXPECT_DOUBLE_EQ(t.spectral_efficiency(25.2694), 7.1602);
}

TEST(Mcs, ParseRejectsBadTables) {
    EXPECT_THROW(McsTable::parse(""), std::runtime_error);
    EXPECT_THROW(McsTable::parse("0 2 120 0.2344\n"), std::runtime_error);
    EXPECT_THROW(McsTable::parse("0 2 120 0.5 1\n1 2 120 0.4 2\n"), std::runtime_error);
    EXPECT_THROW(McsTable::parse("1 2 120 0.5 1\n"), std::runtime_error);
}

// ---- data files ------------------------------------------------------------------------

TEST(DataFiles, EmbeddedCopiesMatchShippedFiles) {
    EXPECT_EQ(slurp(std::string(IABSIM_DATA_DIR) + "/mcs_table_v1.txt"), std::string(kDefaultMcsTableText));
    EXPECT_EQ(slurp(std::string(IABSIM_DATA_DIR) + "/channel_coefficients_v1.txt"),
              std::string(kDefaultChannelCoefficientsText));
    const auto loaded = McsTable::load(std::string(IABSIM_DATA_DIR) + "/mcs_table_v1.txt");
    EXPECT_EQ(loaded.hash(), McsTable::builtin().hash());
}

TEST(DataFiles, CoefficientParserIsStrict) {
    std::string text(kDefaultChannelCoefficientsText);
    EXPECT_THROW(ChannelCoefficients::parse(text + "uma.bogus 1\n"), std::runtime_error);
    const auto pos = text.find("umi.los.intercept");
    std::string missing = text;
    missing.erase(pos, text.find('\n', pos) - pos + 1);
    EXPECT_THROW(ChannelCoefficients::parse(missing), std::runtime_error);
}
