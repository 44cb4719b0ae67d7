#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "rmap/errors.hpp"

namespace rmap {

using Vec2 = Eigen::Vector2d;

namespace detail {

inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

// Sign of the cross product with a small dead zone so that collinear points
// produced by grid arithmetic are classified as collinear.
inline int orientation(const Vec2& a, const Vec2& b, const Vec2& c) {
    const double v = cross2(b - a, c - a);
    if (std::abs(v) <= 1e-12) return 0;
    return v > 0.0 ? 1 : -1;
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.squaredNorm();
    if (len2 == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

}  // namespace detail

// Simple (non-self-intersecting) polygon in meters. Points on the boundary
// count as inside; see contains().
class Polygon {
  public:
    Polygon() = default;
    explicit Polygon(std::vector<Vec2> vertices) : vertices_(std::move(vertices)) {}

    const std::vector<Vec2>& vertices() const { return vertices_; }
    std::size_t size() const { return vertices_.size(); }

    double area() const {
        double s = 0.0;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[(i + 1) % n];
            s += detail::cross2(a, b);
        }
        return 0.5 * std::abs(s);
    }

    void bounding_box(Vec2& lo, Vec2& hi) const {
        lo = Vec2(std::numeric_limits<double>::max(), std::numeric_limits<double>::max());
        hi = -lo;
        for (const Vec2& v : vertices_) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
    }

    bool on_boundary(const Vec2& p, double tol = 1e-9) const {
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            if (detail::point_segment_distance(p, vertices_[i], vertices_[(i + 1) % n]) <= tol)
                return true;
        }
        return false;
    }

    // Boundary-inclusive point-in-polygon test (even-odd rule with half-open
    // edges, plus an explicit on-boundary check for determinism).
    bool contains(const Vec2& p) const {
        if (vertices_.size() < 3) return false;
        if (on_boundary(p)) return true;
        bool inside = false;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[j];
            if ((a.y() > p.y()) != (b.y() > p.y())) {
                const double x_int = a.x() + (p.y() - a.y()) * (b.x() - a.x()) / (b.y() - a.y());
                if (p.x() < x_int) inside = !inside;
            }
        }
        return inside;
    }

    // True iff the closed segment p-q stays inside the region: both endpoints
    // contained, no proper crossing of any polygon edge, and the midpoint
    // contained (catches notch-straddling segments that only touch vertices).
    bool segment_inside(const Vec2& p, const Vec2& q) const {
        if (!contains(p) || !contains(q)) return false;
        if ((p - q).squaredNorm() == 0.0) return true;
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            const Vec2& a = vertices_[i];
            const Vec2& b = vertices_[(i + 1) % n];
            const int o1 = detail::orientation(p, q, a);
            const int o2 = detail::orientation(p, q, b);
            const int o3 = detail::orientation(a, b, p);
            const int o4 = detail::orientation(a, b, q);
            if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0)
                return false;  // proper crossing
        }
        return contains(Vec2(0.5 * (p + q)));
    }

    // Distance from p to the polygon boundary (0 if p lies on it).
    double boundary_distance(const Vec2& p) const {
        double d = std::numeric_limits<double>::max();
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i)
            d = std::min(d, detail::point_segment_distance(p, vertices_[i], vertices_[(i + 1) % n]));
        return d;
    }

    // Throws unless the polygon is simple with positive area.
    void validate() const {
        if (vertices_.size() < 3) throw DataError("polygon needs at least 3 vertices");
        if (!(area() > 0.0)) throw DataError("polygon area must be positive");
        const std::size_t n = vertices_.size();
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                // skip adjacent edges (shared vertex)
                if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
                const Vec2& a = vertices_[i];
                const Vec2& b = vertices_[(i + 1) % n];
                const Vec2& c = vertices_[j];
                const Vec2& d = vertices_[(j + 1) % n];
                const int o1 = detail::orientation(a, b, c);
                const int o2 = detail::orientation(a, b, d);
                const int o3 = detail::orientation(c, d, a);
                const int o4 = detail::orientation(c, d, b);
                if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0)
                    throw DataError("polygon is self-intersecting");
            }
        }
    }

  private:
    std::vector<Vec2> vertices_;
};

inline Polygon make_rectangle(double width, double height, const Vec2& origin = Vec2(0, 0)) {
    return Polygon({origin,
                    origin + Vec2(width, 0),
                    origin + Vec2(width, height),
                    origin + Vec2(0, height)});
}

// L-shape: an outer square with the top-right quadrant removed.
inline Polygon make_lshape(double outer, double arm) {
    return Polygon({{0, 0}, {outer, 0}, {outer, arm}, {arm, arm}, {arm, outer}, {0, outer}});
}

}  // namespace rmap
