#include "mapmatch/geometry.hpp"

#include <algorithm>
#include <stdexcept>

namespace mapmatch {

namespace {
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;
constexpr double kDegToRad = kPi / 180.0;
}  // namespace

EquirectProjector::EquirectProjector(double origin_lon, double origin_lat)
    : origin_lon_(origin_lon), origin_lat_(origin_lat) {
    meters_per_deg_lat_ = kEarthRadiusM * kDegToRad;
    meters_per_deg_lon_ = meters_per_deg_lat_ * std::cos(origin_lat * kDegToRad);
}

Vec2 EquirectProjector::to_planar(LonLat p) const {
    return {(p.lon - origin_lon_) * meters_per_deg_lon_,
            (p.lat - origin_lat_) * meters_per_deg_lat_};
}

LonLat EquirectProjector::to_lonlat(Vec2 p) const {
    return {origin_lon_ + p.x / meters_per_deg_lon_,
            origin_lat_ + p.y / meters_per_deg_lat_};
}

double polyline_length(const std::vector<Vec2>& pts) {
    double total = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
        total += planar_distance(pts[i - 1], pts[i]);
    }
    return total;
}

Projection project_to_polyline(Vec2 p, const std::vector<Vec2>& pts) {
    Projection best;
    best.projected_point = pts.front();
    best.distance = planar_distance(p, pts.front());
    best.offset = 0.0;

    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const Vec2 a = pts[i];
        const Vec2 b = pts[i + 1];
        const double span = planar_distance(a, b);
        Vec2 proj = a;
        double t = 0.0;
        if (span > 0.0) {
            t = std::clamp(dot(p - a, b - a) / (span * span), 0.0, 1.0);
            proj = a + t * (b - a);
        }
        const double d = planar_distance(p, proj);
        if (d < best.distance) {
            best.distance = d;
            best.projected_point = proj;
            best.offset = cum + t * span;
        }
        cum += span;
    }
    return best;
}

Vec2 polyline_point_at(const std::vector<Vec2>& pts, double offset) {
    if (offset <= 0.0) return pts.front();
    double cum = 0.0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double span = planar_distance(pts[i], pts[i + 1]);
        if (span > 0.0 && offset < cum + span) {
            const double t = (offset - cum) / span;
            return pts[i] + t * (pts[i + 1] - pts[i]);
        }
        cum += span;
    }
    return pts.back();
}

double polyline_bearing(const std::vector<Vec2>& pts, double offset) {
    const double total = polyline_length(pts);
    if (offset < -1e-9 || offset > total + 1e-9) {
        throw std::invalid_argument("polyline_bearing: offset out of range");
    }
    offset = std::clamp(offset, 0.0, total);

    double cum = 0.0;
    double last_bearing = 0.0;
    bool have_bearing = false;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double span = planar_distance(pts[i], pts[i + 1]);
        if (span <= 0.0) continue;
        last_bearing = bearing_deg(pts[i], pts[i + 1]);
        have_bearing = true;
        if (offset < cum + span) return last_bearing;
        cum += span;
    }
    if (!have_bearing) {
        throw std::invalid_argument("polyline_bearing: degenerate polyline");
    }
    return last_bearing;  // offset == total length
}

double bearing_deg(Vec2 from, Vec2 to) {
    const double b = std::atan2(to.x - from.x, to.y - from.y) / kDegToRad;
    return b < 0.0 ? b + 360.0 : b;
}

double angle_difference_deg(double a, double b) {
    double d = std::fmod(std::fabs(a - b), 360.0);
    return d > 180.0 ? 360.0 - d : d;
}

}  // namespace mapmatch
