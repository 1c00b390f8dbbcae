#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "mapmatch/geometry.hpp"

namespace mapmatch {

using SegmentId = std::int64_t;
using NodeId = std::int64_t;

struct RoadSegment {
    SegmentId id = -1;
    std::string road_class;
    int class_index = -1;        // index into RoadNetwork::class_vocabulary
    double speed_limit = 0.0;    // m/s
    std::vector<Vec2> polyline;  // planar meters, >= 2 vertices
    double length = 0.0;
    NodeId from_node = -1;
    NodeId to_node = -1;
    bool oneway = true;
    // provenance within the source file, used to reconstruct features on save
    int feature_index = -1;
    bool reversed = false;
};

// A directed walk over adjacent segments. Length counts the full length of
// every segment, including the first and last.
struct Path {
    std::vector<SegmentId> segment_ids;
    double length = 0.0;
    std::vector<double> segment_lengths;
    std::vector<double> speed_limits;
    std::vector<int> class_sequence;

    SegmentId start_segment() const { return segment_ids.front(); }
    SegmentId end_segment() const { return segment_ids.back(); }
};

// One GeoJSON LineString feature before planar projection. The loader and
// the synthetic generator both build networks from these, so a generated
// network and its reloaded file agree segment for segment.
struct NetworkFeature {
    std::vector<LonLat> coords;
    std::string road_class;
    double speed_limit_kmh = 0.0;
    bool oneway = false;
};

// Uniform-bucket index over segment bounding boxes. Queries return a
// superset of the segments within the radius; callers filter exactly.
class SpatialGrid {
  public:
    void build(const std::vector<RoadSegment>& segments, double cell_size);
    std::vector<SegmentId> candidates(Vec2 p, double radius) const;

  private:
    double cell_ = 250.0;
    std::unordered_map<std::int64_t, std::vector<SegmentId>> cells_;
};

struct RoadNetwork {
    std::vector<RoadSegment> segments;  // indexed by SegmentId
    std::vector<Vec2> nodes;            // indexed by NodeId
    std::vector<std::vector<SegmentId>> out_segments;  // per node
    std::vector<std::vector<SegmentId>> in_segments;
    std::vector<std::string> class_vocabulary;  // sorted, unique
    EquirectProjector projector;
    SpatialGrid grid;

    const RoadSegment& segment(SegmentId id) const;
    double max_speed_limit() const;
};

// Validates features, projects them about the dataset centroid and splits
// two-way features into directed twins with reversed geometry.
RoadNetwork build_network(const std::vector<NetworkFeature>& features);

RoadNetwork load_network(const std::string& path);
void save_network(const RoadNetwork& net, const std::string& path);

Projection project_to_segment(Vec2 p, const RoadSegment& s);

// All segments whose projection distance is <= radius, ordered by
// (distance, segment id). Matches a brute-force scan exactly.
std::vector<std::pair<SegmentId, Projection>> nearby_segments(const RoadNetwork& net,
                                                              Vec2 p, double radius);

double segment_bearing(const RoadSegment& s, double offset);

// All simple directed paths from `from` to `to` with length <= max_length,
// truncated to the max_paths shortest; sorted by (length, id sequence).
std::vector<Path> enumerate_paths(const RoadNetwork& net, SegmentId from, SegmentId to,
                                  double max_length, int max_paths);

}  // namespace mapmatch
