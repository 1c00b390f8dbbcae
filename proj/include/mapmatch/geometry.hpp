#pragma once

#include <cmath>
#include <vector>

namespace mapmatch {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double planar_distance(Vec2 a, Vec2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;
};

// Equirectangular projection about a fixed origin. The map is linear in
// (lon, lat), so collinearity and incidence survive the round trip exactly.
class EquirectProjector {
  public:
    EquirectProjector() : EquirectProjector(0.0, 0.0) {}
    EquirectProjector(double origin_lon, double origin_lat);

    Vec2 to_planar(LonLat p) const;
    LonLat to_lonlat(Vec2 p) const;

    double origin_lon() const { return origin_lon_; }
    double origin_lat() const { return origin_lat_; }

  private:
    double origin_lon_;
    double origin_lat_;
    double meters_per_deg_lon_;
    double meters_per_deg_lat_;
};

// Closest point on a polyline: the point itself, its distance from the
// query, and the arc-length offset from the polyline start.
struct Projection {
    Vec2 projected_point;
    double distance = 0.0;
    double offset = 0.0;
};

double polyline_length(const std::vector<Vec2>& pts);

Projection project_to_polyline(Vec2 p, const std::vector<Vec2>& pts);

// Point at arc-length `offset` along the polyline (clamped to the ends).
Vec2 polyline_point_at(const std::vector<Vec2>& pts, double offset);

// Bearing in degrees clockwise from north of the sub-segment containing
// `offset`. At a shared vertex the following sub-segment wins.
double polyline_bearing(const std::vector<Vec2>& pts, double offset);

double bearing_deg(Vec2 from, Vec2 to);

// |a - b| folded into [0, 180].
double angle_difference_deg(double a, double b);

}  // namespace mapmatch
