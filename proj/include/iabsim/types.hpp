#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace iabsim {

/// Base stations and terminals share one id space: BSs take [0, num_bs), UEs follow.
using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double distance_2d(const Vec3& a, const Vec3& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double distance_2d(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline double distance_3d(const Vec3& a, const Vec3& b) {
    return std::sqrt((a.x - b.x) * (a.x - b.x) + (a.y - b.y) * (a.y - b.y) + (a.z - b.z) * (a.z - b.z));
}

enum class BsRole { MacroGnb, OutdoorIabNode, IndoorIabNode, Vmr };
enum class DeviceKind { Ue, Mt };
enum class ArchMode { Proposed, ThreeGpp };
enum class ScenarioType { Throughput, Mobility };

inline std::string_view to_string(BsRole r) {
    switch (r) {
        case BsRole::MacroGnb: return "macro_gnb";
        case BsRole::OutdoorIabNode: return "outdoor_iab";
        case BsRole::IndoorIabNode: return "indoor_iab";
        case BsRole::Vmr: return "vmr";
    }
    return "?";
}

inline std::string_view to_string(ArchMode m) { return m == ArchMode::Proposed ? "proposed" : "3gpp"; }
inline std::string_view to_string(ScenarioType s) {
    return s == ScenarioType::Throughput ? "throughput" : "mobility";
}

/// Invalid configuration; `key_path` names the offending entry (e.g. "deployment.num_macro_sites").
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key_path, const std::string& what)
        : std::runtime_error(key_path.empty() ? what : key_path + ": " + what), key_path_(std::move(key_path)) {}

    const std::string& key_path() const noexcept { return key_path_; }

private:
    std::string key_path_;
};

}  // namespace iabsim
