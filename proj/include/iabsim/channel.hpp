#pragma once

// Link budget: LOS probability, pathloss (UMa / UMi street canyon / InH open office),
// outdoor-to-indoor penetration, idealized array gain, thermal noise and SNR.
// Noise limited: there is no interference term anywhere.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "iabsim/mcs.hpp"
#include "iabsim/rng.hpp"
#include "iabsim/types.hpp"
#include "iabsim/util.hpp"

namespace iabsim::channel {

enum class PathlossModel { UMa, UMiStreetCanyon, InH };

inline std::string_view to_string(PathlossModel m) {
    switch (m) {
        case PathlossModel::UMa: return "UMa";
        case PathlossModel::UMiStreetCanyon: return "UMi";
        case PathlossModel::InH: return "InH";
    }
    return "?";
}

/// Pathloss model used for links transmitted by a given role.
inline PathlossModel model_for(BsRole tx) {
    switch (tx) {
        case BsRole::MacroGnb: return PathlossModel::UMa;
        case BsRole::IndoorIabNode: return PathlossModel::InH;
        case BsRole::OutdoorIabNode:
        case BsRole::Vmr: return PathlossModel::UMiStreetCanyon;
    }
    return PathlossModel::UMa;
}

/// Byte-identical copy of data/channel_coefficients_v1.txt.
inline constexpr std::string_view kDefaultChannelCoefficientsText = R"COEF(# iabsim channel coefficients v1
# Pathloss: d in m, fc in GHz, h in m. LOS: PL1 = intercept + distance_slope*log10(d3d) + freq_slope*log10(fc)
#   beyond the breakpoint: intercept + far_distance_slope*log10(d3d) + freq_slope*log10(fc)
#   - breakpoint_slope*log10(dbp^2 + (h_bs - h_ut)^2), dbp = 4*(h_bs - h_e)*(h_ut - h_e)*fc/c
# NLOS: max(PL_LOS, intercept + distance_slope*log10(d3d) + freq_slope*log10(fc) - height_slope*(h_ut - 1.5))
effective_environment_height_m 1.0
uma.los.intercept 28.0
uma.los.distance_slope 22.0
uma.los.freq_slope 20.0
uma.los.far_distance_slope 40.0
uma.los.breakpoint_slope 9.0
uma.nlos.intercept 13.54
uma.nlos.distance_slope 39.08
uma.nlos.freq_slope 20.0
uma.nlos.height_slope 0.6
uma.shadow_sigma_los_db 4.0
uma.shadow_sigma_nlos_db 6.0
uma.los_prob.near_m 18.0
uma.los_prob.decay_m 63.0
uma.min_distance_2d_m 10.0
umi.los.intercept 32.4
umi.los.distance_slope 21.0
umi.los.freq_slope 20.0
umi.los.far_distance_slope 40.0
umi.los.breakpoint_slope 9.5
umi.nlos.intercept 22.4
umi.nlos.distance_slope 35.3
umi.nlos.freq_slope 21.3
umi.nlos.height_slope 0.3
umi.shadow_sigma_los_db 4.0
umi.shadow_sigma_nlos_db 7.82
umi.los_prob.near_m 18.0
umi.los_prob.decay_m 36.0
umi.min_distance_2d_m 10.0
inh.los.intercept 32.4
inh.los.distance_slope 17.3
inh.los.freq_slope 20.0
inh.nlos.intercept 17.3
inh.nlos.distance_slope 38.3
inh.nlos.freq_slope 24.9
inh.shadow_sigma_los_db 3.0
inh.shadow_sigma_nlos_db 8.03
inh.los_prob.near_m 5.0
inh.los_prob.decay_m 70.8
inh.los_prob.far_m 49.0
inh.los_prob.far_decay_m 211.7
inh.los_prob.far_scale 0.54
inh.min_distance_3d_m 1.0
# O2I building penetration: PL_tw = wall_const - 10*log10(sum w_i * 10^(-L_i/10)), L_i = a_i + b_i*fc
o2i.wall_const_db 5.0
o2i.glass.a 2.0
o2i.glass.b 0.2
o2i.irr_glass.a 23.0
o2i.irr_glass.b 0.3
o2i.concrete.a 5.0
o2i.concrete.b 4.0
o2i.low.glass_weight 0.3
o2i.low.concrete_weight 0.7
o2i.low.sigma_db 4.4
o2i.high.irr_glass_weight 0.7
o2i.high.concrete_weight 0.3
o2i.high.sigma_db 6.5
o2i.indoor_loss_db_per_m 0.5
o2i.indoor_distance_max_m 25.0
)COEF";

struct LosFormula {
    double intercept = 0, distance_slope = 0, freq_slope = 0, far_distance_slope = 0, breakpoint_slope = 0;
};

struct NlosFormula {
    double intercept = 0, distance_slope = 0, freq_slope = 0, height_slope = 0;
};

struct ModelCoefficients {
    LosFormula los;
    NlosFormula nlos;
    double sigma_los_db = 0, sigma_nlos_db = 0;
    double los_near_m = 0, los_decay_m = 0;
    // InH open office only
    double los_far_m = 0, los_far_decay_m = 0, los_far_scale = 0;
    double min_distance_m = 0;
};

struct O2iCoefficients {
    double wall_const_db = 0;
    double glass_a = 0, glass_b = 0, irr_glass_a = 0, irr_glass_b = 0, concrete_a = 0, concrete_b = 0;
    double low_glass_weight = 0, low_concrete_weight = 0, low_sigma_db = 0;
    double high_irr_glass_weight = 0, high_concrete_weight = 0, high_sigma_db = 0;
    double indoor_loss_db_per_m = 0, indoor_distance_max_m = 0;
};

struct ChannelCoefficients {
    double effective_env_height_m = 1.0;
    ModelCoefficients uma, umi, inh;
    O2iCoefficients o2i;
    std::uint64_t hash = 0;

    const ModelCoefficients& model(PathlossModel m) const {
        switch (m) {
            case PathlossModel::UMa: return uma;
            case PathlossModel::UMiStreetCanyon: return umi;
            case PathlossModel::InH: return inh;
        }
        return uma;
    }

    static ChannelCoefficients parse(std::string_view text) {
        std::map<std::string, double, std::less<>> kv;
        for_each_line(text, [&](std::string_view line, std::size_t lineno) {
            if (auto c = line.find('#'); c != std::string_view::npos) line = line.substr(0, c);
            auto cols = split_ws(line);
            if (cols.empty()) return;
            double v = 0;
            if (cols.size() != 2 || !parse_double(cols[1], v))
                throw std::runtime_error("channel coefficients line " + std::to_string(lineno) + ": expected 'key value'");
            if (!kv.emplace(std::string(cols[0]), v).second)
                throw std::runtime_error("channel coefficients: duplicate key " + std::string(cols[0]));
        });
        auto take = [&](const std::string& key) {
            auto it = kv.find(key);
            if (it == kv.end()) throw std::runtime_error("channel coefficients: missing key " + key);
            const double v = it->second;
            kv.erase(it);
            return v;
        };
        auto outdoor = [&](const std::string& p) {
            ModelCoefficients m;
            m.los = {take(p + ".los.intercept"), take(p + ".los.distance_slope"), take(p + ".los.freq_slope"),
                     take(p + ".los.far_distance_slope"), take(p + ".los.breakpoint_slope")};
            m.nlos = {take(p + ".nlos.intercept"), take(p + ".nlos.distance_slope"), take(p + ".nlos.freq_slope"),
                      take(p + ".nlos.height_slope")};
            m.sigma_los_db = take(p + ".shadow_sigma_los_db");
            m.sigma_nlos_db = take(p + ".shadow_sigma_nlos_db");
            m.los_near_m = take(p + ".los_prob.near_m");
            m.los_decay_m = take(p + ".los_prob.decay_m");
            m.min_distance_m = take(p + ".min_distance_2d_m");
            return m;
        };
        ChannelCoefficients c;
        c.hash = fnv1a64(text);
        c.effective_env_height_m = take("effective_environment_height_m");
        c.uma = outdoor("uma");
        c.umi = outdoor("umi");
        auto& h = c.inh;
        h.los = {take("inh.los.intercept"), take("inh.los.distance_slope"), take("inh.los.freq_slope"), 0, 0};
        h.nlos = {take("inh.nlos.intercept"), take("inh.nlos.distance_slope"), take("inh.nlos.freq_slope"), 0};
        h.sigma_los_db = take("inh.shadow_sigma_los_db");
        h.sigma_nlos_db = take("inh.shadow_sigma_nlos_db");
        h.los_near_m = take("inh.los_prob.near_m");
        h.los_decay_m = take("inh.los_prob.decay_m");
        h.los_far_m = take("inh.los_prob.far_m");
        h.los_far_decay_m = take("inh.los_prob.far_decay_m");
        h.los_far_scale = take("inh.los_prob.far_scale");
        h.min_distance_m = take("inh.min_distance_3d_m");
        auto& o = c.o2i;
        o.wall_const_db = take("o2i.wall_const_db");
        o.glass_a = take("o2i.glass.a");
        o.glass_b = take("o2i.glass.b");
        o.irr_glass_a = take("o2i.irr_glass.a");
        o.irr_glass_b = take("o2i.irr_glass.b");
        o.concrete_a = take("o2i.concrete.a");
        o.concrete_b = take("o2i.concrete.b");
        o.low_glass_weight = take("o2i.low.glass_weight");
        o.low_concrete_weight = take("o2i.low.concrete_weight");
        o.low_sigma_db = take("o2i.low.sigma_db");
        o.high_irr_glass_weight = take("o2i.high.irr_glass_weight");
        o.high_concrete_weight = take("o2i.high.concrete_weight");
        o.high_sigma_db = take("o2i.high.sigma_db");
        o.indoor_loss_db_per_m = take("o2i.indoor_loss_db_per_m");
        o.indoor_distance_max_m = take("o2i.indoor_distance_max_m");
        if (!kv.empty()) throw std::runtime_error("channel coefficients: unknown key " + kv.begin()->first);
        return c;
    }

    static ChannelCoefficients load(const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw std::runtime_error("cannot open channel coefficients " + path);
        std::stringstream ss;
        ss << in.rdbuf();
        return parse(ss.str());
    }

    static const ChannelCoefficients& builtin() {
        static const ChannelCoefficients c = parse(kDefaultChannelCoefficientsText);
        return c;
    }
};

struct LinkGeometry {
    Vec3 tx_position;
    Vec3 rx_position;
    PathlossModel model = PathlossModel::UMa;
    bool rx_indoor = false;
};

struct LinkState {
    bool los = false;
    double shadow_fading_db = 0.0;
    double pathloss_db = 0.0;
    double o2i_loss_db = 0.0;
    double snr_db = 0.0;
    double spectral_efficiency = 0.0;
};

struct PathlossResult {
    double db = 0.0;
    bool clamped = false;  // distance was below the model minimum
};

/// LOS probability as a function of 2-D distance. UMa ignores the UT-height term
/// (zero for terminals at or below 13 m).
inline double los_probability(PathlossModel model, double distance_2d,
                              const ChannelCoefficients& k = ChannelCoefficients::builtin()) {
    const auto& m = k.model(model);
    const double d = std::max(distance_2d, 0.0);
    if (model == PathlossModel::InH) {
        if (d <= m.los_near_m) return 1.0;
        if (d <= m.los_far_m) return std::exp(-(d - m.los_near_m) / m.los_decay_m);
        return m.los_far_scale * std::exp(-(d - m.los_far_m) / m.los_far_decay_m);
    }
    if (d <= m.los_near_m) return 1.0;
    return m.los_near_m / d + std::exp(-d / m.los_decay_m) * (1.0 - m.los_near_m / d);
}

inline PathlossResult pathloss_db(const LinkGeometry& g, bool los, double carrier_frequency_hz,
                                  const ChannelCoefficients& k = ChannelCoefficients::builtin()) {
    constexpr double c = 299792458.0;
    const auto& m = k.model(g.model);
    const double fc_ghz = carrier_frequency_hz / 1e9;
    const double h_bs = g.tx_position.z;
    const double h_ut = g.rx_position.z;
    const double dh = h_bs - h_ut;
    double d2 = distance_2d(g.tx_position, g.rx_position);
    double d3 = distance_3d(g.tx_position, g.rx_position);
    PathlossResult out;
    if (g.model == PathlossModel::InH) {
        if (d3 < m.min_distance_m) {
            d3 = m.min_distance_m;
            out.clamped = true;
        }
    } else if (d2 < m.min_distance_m) {
        d2 = m.min_distance_m;
        d3 = std::hypot(d2, dh);
        out.clamped = true;
    }

    const double lf = std::log10(fc_ghz);
    double pl_los = m.los.intercept + m.los.distance_slope * std::log10(d3) + m.los.freq_slope * lf;
    if (g.model != PathlossModel::InH) {
        const double he = k.effective_env_height_m;
        const double d_bp = 4.0 * (h_bs - he) * (h_ut - he) * carrier_frequency_hz / c;
        if (d_bp > 0.0 && d2 > d_bp) {
            pl_los = m.los.intercept + m.los.far_distance_slope * std::log10(d3) + m.los.freq_slope * lf -
                     m.los.breakpoint_slope * std::log10(d_bp * d_bp + dh * dh);
        }
    }
    if (los) {
        out.db = pl_los;
        return out;
    }
    const double pl_nlos = m.nlos.intercept + m.nlos.distance_slope * std::log10(d3) + m.nlos.freq_slope * lf -
                           m.nlos.height_slope * (h_ut - 1.5);
    out.db = std::max(pl_los, pl_nlos);
    return out;
}

/// Mean building-entry loss of the low- or high-loss wall composition.
inline double o2i_wall_loss_db(bool high_loss, double carrier_frequency_hz,
                               const ChannelCoefficients& k = ChannelCoefficients::builtin()) {
    const auto& o = k.o2i;
    const double f = carrier_frequency_hz / 1e9;
    const double l_glass = o.glass_a + o.glass_b * f;
    const double l_irr = o.irr_glass_a + o.irr_glass_b * f;
    const double l_concrete = o.concrete_a + o.concrete_b * f;
    const double sum = high_loss
                           ? o.high_irr_glass_weight * std::pow(10.0, -l_irr / 10.0) +
                                 o.high_concrete_weight * std::pow(10.0, -l_concrete / 10.0)
                           : o.low_glass_weight * std::pow(10.0, -l_glass / 10.0) +
                                 o.low_concrete_weight * std::pow(10.0, -l_concrete / 10.0);
    return o.wall_const_db - 10.0 * std::log10(sum);
}

/// One O2I draw: wall loss + indoor distance loss + a Gaussian term, floored at 0 dB.
inline double o2i_penetration_db(rng::Stream& rng, bool high_loss, double carrier_frequency_hz,
                                 const ChannelCoefficients& k = ChannelCoefficients::builtin()) {
    const auto& o = k.o2i;
    const double d_in = std::min(rng.uniform(0.0, o.indoor_distance_max_m), rng.uniform(0.0, o.indoor_distance_max_m));
    const double sigma = high_loss ? o.high_sigma_db : o.low_sigma_db;
    const double loss = o2i_wall_loss_db(high_loss, carrier_frequency_hz, k) + o.indoor_loss_db_per_m * d_in +
                        rng.normal(0.0, sigma);
    return std::max(loss, 0.0);
}

/// Perfectly aligned arrays: 10log10(Ntx) + 10log10(Nrx).
inline double beamforming_gain_db(int tx_elements, int rx_elements) {
    if (tx_elements < 1 || rx_elements < 1) throw std::invalid_argument("antenna element count must be >= 1");
    return 10.0 * std::log10(static_cast<double>(tx_elements)) + 10.0 * std::log10(static_cast<double>(rx_elements));
}

inline double noise_power_dbm(double bandwidth_hz, double noise_density_dbm_hz, double noise_margin_db) {
    if (!(bandwidth_hz > 0.0)) throw std::invalid_argument("bandwidth must be > 0");
    return noise_density_dbm_hz + 10.0 * std::log10(bandwidth_hz) + noise_margin_db;
}

inline double link_snr_db(double tx_power_dbm, double bf_gain_db, double pathloss_db, double o2i_db, double shadow_db,
                          double noise_power_dbm) {
    return tx_power_dbm + bf_gain_db - pathloss_db - o2i_db - shadow_db - noise_power_dbm;
}

/// One end of a radio link as the budget needs it.
struct Endpoint {
    NodeId id = kNoNode;
    Vec3 position;
    bool indoor = false;
    double o2i_loss_db = 0.0;  // frozen per device, used when the link crosses its wall
    int elements = 1;
    int building = -1;         // indoor endpoints only
};

/// Penetration loss of a link: none within one building, the indoor end's loss for
/// indoor/outdoor links, both losses between two different buildings.
inline double link_o2i_db(const Endpoint& tx, const Endpoint& rx) {
    if (tx.indoor && rx.indoor) return tx.building == rx.building ? 0.0 : tx.o2i_loss_db + rx.o2i_loss_db;
    if (tx.indoor) return tx.o2i_loss_db;
    if (rx.indoor) return rx.o2i_loss_db;
    return 0.0;
}

/// Per-run link evaluator. LOS and shadowing come from keyed draws on (run seed, tx, rx),
/// so a link's state is the same whenever it is evaluated. LOS is u < p_LOS(d) with u
/// fixed per link, or a fixed flag (see `frozen`) for links with a moving end;
/// shadowing is z * sigma(model, LOS) with z fixed per link.
class LinkBudget {
public:
    LinkBudget(std::uint64_t run_seed, double carrier_frequency_hz, double bandwidth_hz,
               const McsTable& mcs = McsTable::builtin(),
               const ChannelCoefficients& coeffs = ChannelCoefficients::builtin())
        : seed_(run_seed), fc_(carrier_frequency_hz), bw_(bandwidth_hz), mcs_(&mcs), coeffs_(&coeffs) {}

    /// Frozen per-link randomness: LOS uniform and standard-normal shadowing factor.
    /// When `los` is set the LOS state no longer follows the link geometry.
    struct Draws {
        double los_u = 0.0;
        double shadow_z = 0.0;
        std::optional<bool> los;
    };

    Draws draws(NodeId tx, NodeId rx) const {
        return {rng::keyed_uniform(seed_, rng::Concern::Los, key(tx), key(rx)),
                rng::keyed_normal(seed_, rng::Concern::Shadow, key(tx), key(rx)), std::nullopt};
    }

    /// Draws with the LOS state fixed at the current geometry, for links with a moving end.
    Draws frozen(NodeId tx_id, BsRole tx_role, const Vec3& tx_pos, NodeId rx_id, const Vec3& rx_pos) const {
        Draws d = draws(tx_id, rx_id);
        d.los = d.los_u < los_probability(model_for(tx_role), distance_2d(tx_pos, rx_pos), *coeffs_);
        return d;
    }

    LinkState evaluate(const Endpoint& tx, BsRole tx_role, double tx_power_dbm, const Endpoint& rx,
                       double rx_noise_power_dbm) const {
        return evaluate(draws(tx.id, rx.id), tx, tx_role, tx_power_dbm, rx, rx_noise_power_dbm);
    }

    LinkState evaluate(const Draws& d, const Endpoint& tx, BsRole tx_role, double tx_power_dbm, const Endpoint& rx,
                       double rx_noise_power_dbm) const {
        const PathlossModel model = model_for(tx_role);
        LinkState s;
        s.los = d.los ? *d.los : d.los_u < los_probability(model, distance_2d(tx.position, rx.position), *coeffs_);
        s.pathloss_db = pathloss_db({tx.position, rx.position, model, rx.indoor}, s.los, fc_, *coeffs_).db;
        const auto& m = coeffs_->model(model);
        s.shadow_fading_db = d.shadow_z * (s.los ? m.sigma_los_db : m.sigma_nlos_db);
        s.o2i_loss_db = link_o2i_db(tx, rx);
        s.snr_db = link_snr_db(tx_power_dbm, beamforming_gain_db(tx.elements, rx.elements), s.pathloss_db,
                               s.o2i_loss_db, s.shadow_fading_db, rx_noise_power_dbm);
        s.spectral_efficiency = mcs_->spectral_efficiency(s.snr_db);
        return s;
    }

    const McsTable& mcs() const { return *mcs_; }
    const ChannelCoefficients& coefficients() const { return *coeffs_; }
    double bandwidth_hz() const { return bw_; }

private:
    static std::uint64_t key(NodeId id) { return static_cast<std::uint64_t>(static_cast<std::int64_t>(id)); }

    std::uint64_t seed_;
    double fc_;
    double bw_;
    const McsTable* mcs_;
    const ChannelCoefficients* coeffs_;
};

}  // namespace iabsim::channel
