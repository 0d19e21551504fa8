#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "iabsim/rng.hpp"
#include "iabsim/types.hpp"

namespace iabsim::geom {

/// Flat-topped hexagon; neighbor centers sit at 30 + 60k degrees.
struct Hexagon {
    Vec2 center;
    double circumradius = 0.0;

    bool contains(const Vec2& p) const {
        const double dx = std::abs(p.x - center.x);
        const double dy = std::abs(p.y - center.y);
        const double r = circumradius;
        constexpr double s3 = 1.7320508075688772;
        const double eps = 1e-9 * r;
        return dx <= r + eps && dy <= s3 / 2.0 * r + eps && s3 * dx + dy <= s3 * r + eps;
    }

    /// Uniform draw by rejection from the bounding box.
    Vec2 sample(rng::Stream& rng) const {
        constexpr double s3 = 1.7320508075688772;
        const double hx = circumradius;
        const double hy = s3 / 2.0 * circumradius;
        for (;;) {
            Vec2 p{center.x + rng.uniform(-hx, hx), center.y + rng.uniform(-hy, hy)};
            if (contains(p)) return p;
        }
    }
};

/// Axis-aligned rectangle; the long side of an office runs along x.
struct Rect {
    double x_min = 0.0, x_max = 0.0, y_min = 0.0, y_max = 0.0;

    Vec2 center() const { return {(x_min + x_max) / 2.0, (y_min + y_max) / 2.0}; }
    bool contains(const Vec2& p) const { return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max; }
    Vec2 sample(rng::Stream& rng) const { return {rng.uniform(x_min, x_max), rng.uniform(y_min, y_max)}; }
};

inline double cross(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline double distance_to_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const double vx = b.x - a.x, vy = b.y - a.y;
    const double len2 = vx * vx + vy * vy;
    double t = len2 > 0.0 ? ((p.x - a.x) * vx + (p.y - a.y) * vy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * vx), p.y - (a.y + t * vy));
}

/// Convex hull (monotone chain), counter-clockwise, no collinear points.
inline std::vector<Vec2> convex_hull(std::vector<Vec2> pts) {
    std::sort(pts.begin(), pts.end(), [](const Vec2& a, const Vec2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    if (pts.size() < 3) return pts;
    std::vector<Vec2> hull(2 * pts.size());
    std::size_t k = 0;
    for (const auto& p : pts) {
        while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 1e-9) --k;
        hull[k++] = p;
    }
    for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
        while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 1e-9) --k;
        hull[k++] = pts[i];
    }
    hull.resize(k - 1);
    return hull;
}

/// Convex hull of a point set inflated by a margin (Minkowski sum with a disk). Convex,
/// so straight-line motion between two interior points never leaves it.
class InflatedHull {
public:
    InflatedHull(const std::vector<Vec2>& points, double margin) : hull_(convex_hull(points)), margin_(margin) {
        x_min_ = y_min_ = 1e300;
        x_max_ = y_max_ = -1e300;
        for (const auto& p : hull_) {
            x_min_ = std::min(x_min_, p.x - margin);
            x_max_ = std::max(x_max_, p.x + margin);
            y_min_ = std::min(y_min_, p.y - margin);
            y_max_ = std::max(y_max_, p.y + margin);
        }
    }

    bool contains(const Vec2& p) const {
        if (hull_.size() >= 3) {
            bool inside = true;
            for (std::size_t i = 0; i < hull_.size(); ++i) {
                if (cross(hull_[i], hull_[(i + 1) % hull_.size()], p) < 0.0) {
                    inside = false;
                    break;
                }
            }
            if (inside) return true;
        }
        return distance_to_boundary(p) <= margin_ + 1e-9;
    }

    Vec2 sample(rng::Stream& rng) const {
        for (;;) {
            Vec2 p{rng.uniform(x_min_, x_max_), rng.uniform(y_min_, y_max_)};
            if (contains(p)) return p;
        }
    }

    const std::vector<Vec2>& hull() const { return hull_; }
    double margin() const { return margin_; }

private:
    double distance_to_boundary(const Vec2& p) const {
        if (hull_.size() == 1) return distance_2d(p, hull_[0]);
        double d = 1e300;
        for (std::size_t i = 0; i < hull_.size(); ++i) {
            d = std::min(d, distance_to_segment(p, hull_[i], hull_[(i + 1) % hull_.size()]));
        }
        return d;
    }

    std::vector<Vec2> hull_;
    double margin_;
    double x_min_, x_max_, y_min_, y_max_;
};

}  // namespace iabsim::geom
