#include "mapmatch/road_network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace mapmatch {

namespace {

using nlohmann::json;

constexpr double kGridCell = 250.0;

std::int64_t cell_key(int cx, int cy) {
    return (static_cast<std::int64_t>(cx) << 32) ^ (static_cast<std::uint32_t>(cy));
}

}  // namespace

void SpatialGrid::build(const std::vector<RoadSegment>& segments, double cell_size) {
    cell_ = cell_size;
    cells_.clear();
    for (const RoadSegment& s : segments) {
        double min_x = std::numeric_limits<double>::infinity();
        double min_y = min_x, max_x = -min_x, max_y = -min_x;
        for (const Vec2& v : s.polyline) {
            min_x = std::min(min_x, v.x);
            max_x = std::max(max_x, v.x);
            min_y = std::min(min_y, v.y);
            max_y = std::max(max_y, v.y);
        }
        const int cx0 = static_cast<int>(std::floor(min_x / cell_));
        const int cx1 = static_cast<int>(std::floor(max_x / cell_));
        const int cy0 = static_cast<int>(std::floor(min_y / cell_));
        const int cy1 = static_cast<int>(std::floor(max_y / cell_));
        for (int cx = cx0; cx <= cx1; ++cx) {
            for (int cy = cy0; cy <= cy1; ++cy) {
                cells_[cell_key(cx, cy)].push_back(s.id);
            }
        }
    }
}

std::vector<SegmentId> SpatialGrid::candidates(Vec2 p, double radius) const {
    const int cx0 = static_cast<int>(std::floor((p.x - radius) / cell_));
    const int cx1 = static_cast<int>(std::floor((p.x + radius) / cell_));
    const int cy0 = static_cast<int>(std::floor((p.y - radius) / cell_));
    const int cy1 = static_cast<int>(std::floor((p.y + radius) / cell_));
    std::vector<SegmentId> out;
    for (int cx = cx0; cx <= cx1; ++cx) {
        for (int cy = cy0; cy <= cy1; ++cy) {
            auto it = cells_.find(cell_key(cx, cy));
            if (it == cells_.end()) continue;
            out.insert(out.end(), it->second.begin(), it->second.end());
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

const RoadSegment& RoadNetwork::segment(SegmentId id) const {
    if (id < 0 || id >= static_cast<SegmentId>(segments.size())) {
        throw std::invalid_argument("unknown segment id " + std::to_string(id));
    }
    return segments[static_cast<std::size_t>(id)];
}

double RoadNetwork::max_speed_limit() const {
    double v = 0.0;
    for (const RoadSegment& s : segments) v = std::max(v, s.speed_limit);
    return v;
}

RoadNetwork build_network(const std::vector<NetworkFeature>& features) {
    if (features.empty()) {
        throw std::runtime_error("network has no features");
    }
    for (std::size_t i = 0; i < features.size(); ++i) {
        const NetworkFeature& f = features[i];
        if (f.coords.size() < 2) {
            throw std::runtime_error("feature " + std::to_string(i) +
                                     ": LineString needs at least 2 coordinates");
        }
        if (f.road_class.empty()) {
            throw std::runtime_error("feature " + std::to_string(i) + ": missing road class");
        }
        if (!(f.speed_limit_kmh > 0.0)) {
            throw std::runtime_error("feature " + std::to_string(i) +
                                     ": speed_limit_kmh must be > 0");
        }
    }

    double sum_lon = 0.0, sum_lat = 0.0;
    std::size_t n_vertices = 0;
    for (const NetworkFeature& f : features) {
        for (const LonLat& c : f.coords) {
            sum_lon += c.lon;
            sum_lat += c.lat;
            ++n_vertices;
        }
    }

    RoadNetwork net;
    net.projector = EquirectProjector(sum_lon / static_cast<double>(n_vertices),
                                      sum_lat / static_cast<double>(n_vertices));

    // Endpoints snapped on quantized lon/lat (1e-7 deg ~ 1 cm).
    std::map<std::pair<std::int64_t, std::int64_t>, NodeId> node_ids;
    auto node_of = [&](LonLat c) {
        const std::pair<std::int64_t, std::int64_t> key{std::llround(c.lon * 1e7),
                                                        std::llround(c.lat * 1e7)};
        auto it = node_ids.find(key);
        if (it != node_ids.end()) return it->second;
        const NodeId id = static_cast<NodeId>(net.nodes.size());
        node_ids.emplace(key, id);
        net.nodes.push_back(net.projector.to_planar(c));
        return id;
    };

    std::set<std::string> classes;
    for (const NetworkFeature& f : features) classes.insert(f.road_class);
    net.class_vocabulary.assign(classes.begin(), classes.end());
    auto class_index_of = [&](const std::string& c) {
        return static_cast<int>(std::lower_bound(net.class_vocabulary.begin(),
                                                 net.class_vocabulary.end(), c) -
                                net.class_vocabulary.begin());
    };

    for (std::size_t i = 0; i < features.size(); ++i) {
        const NetworkFeature& f = features[i];
        std::vector<Vec2> pts;
        pts.reserve(f.coords.size());
        for (const LonLat& c : f.coords) pts.push_back(net.projector.to_planar(c));
        const double length = polyline_length(pts);
        if (!(length > 0.0)) {
            throw std::runtime_error("feature " + std::to_string(i) + ": zero-length geometry");
        }
        const NodeId a = node_of(f.coords.front());
        const NodeId b = node_of(f.coords.back());

        RoadSegment fwd;
        fwd.id = static_cast<SegmentId>(net.segments.size());
        fwd.road_class = f.road_class;
        fwd.class_index = class_index_of(f.road_class);
        fwd.speed_limit = f.speed_limit_kmh / 3.6;
        fwd.polyline = pts;
        fwd.length = length;
        fwd.from_node = a;
        fwd.to_node = b;
        fwd.oneway = f.oneway;
        fwd.feature_index = static_cast<int>(i);
        fwd.reversed = false;
        net.segments.push_back(std::move(fwd));

        if (!f.oneway) {
            RoadSegment rev = net.segments.back();
            rev.id = static_cast<SegmentId>(net.segments.size());
            std::reverse(rev.polyline.begin(), rev.polyline.end());
            rev.from_node = b;
            rev.to_node = a;
            rev.reversed = true;
            net.segments.push_back(std::move(rev));
        }
    }

    net.out_segments.assign(net.nodes.size(), {});
    net.in_segments.assign(net.nodes.size(), {});
    for (const RoadSegment& s : net.segments) {
        net.out_segments[static_cast<std::size_t>(s.from_node)].push_back(s.id);
        net.in_segments[static_cast<std::size_t>(s.to_node)].push_back(s.id);
    }
    net.grid.build(net.segments, kGridCell);
    return net;
}

RoadNetwork load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw std::runtime_error("cannot open network file: " + path);
    }
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("network parse error in " + path + ": " + e.what());
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
        !doc.contains("features") || !doc["features"].is_array()) {
        throw std::runtime_error("network file is not a GeoJSON FeatureCollection: " + path);
    }

    std::vector<NetworkFeature> features;
    const json& feats = doc["features"];
    for (std::size_t i = 0; i < feats.size(); ++i) {
        const json& f = feats[i];
        const std::string where = "feature " + std::to_string(i);
        if (!f.is_object() || !f.contains("geometry") || !f.contains("properties")) {
            throw std::runtime_error(where + ": missing geometry or properties");
        }
        const json& geom = f["geometry"];
        if (geom.value("type", "") != "LineString" || !geom.contains("coordinates")) {
            throw std::runtime_error(where + ": geometry must be a LineString");
        }
        NetworkFeature nf;
        for (const json& c : geom["coordinates"]) {
            if (!c.is_array() || c.size() < 2 || !c[0].is_number() || !c[1].is_number()) {
                throw std::runtime_error(where + ": malformed coordinate");
            }
            nf.coords.push_back({c[0].get<double>(), c[1].get<double>()});
        }
        const json& props = f["properties"];
        if (!props.contains("class") || !props["class"].is_string() ||
            props["class"].get<std::string>().empty()) {
            throw std::runtime_error(where + ": invalid or missing class label");
        }
        nf.road_class = props["class"].get<std::string>();
        if (!props.contains("speed_limit_kmh") || !props["speed_limit_kmh"].is_number() ||
            !(props["speed_limit_kmh"].get<double>() > 0.0)) {
            throw std::runtime_error(where + ": speed_limit_kmh must be a positive number");
        }
        nf.speed_limit_kmh = props["speed_limit_kmh"].get<double>();
        if (!props.contains("oneway") || !props["oneway"].is_boolean()) {
            throw std::runtime_error(where + ": oneway must be a boolean");
        }
        nf.oneway = props["oneway"].get<bool>();
        features.push_back(std::move(nf));
    }
    return build_network(features);
}

void save_network(const RoadNetwork& net, const std::string& path) {
    // One feature per source feature: the reverse twin of a two-way road is
    // folded back into its forward copy.
    std::map<int, const RoadSegment*> by_feature;
    for (const RoadSegment& s : net.segments) {
        if (!s.reversed) by_feature[s.feature_index] = &s;
    }
    json feats = json::array();
    for (const auto& [idx, seg] : by_feature) {
        json coords = json::array();
        for (const Vec2& v : seg->polyline) {
            const LonLat c = net.projector.to_lonlat(v);
            coords.push_back({c.lon, c.lat});
        }
        feats.push_back({{"type", "Feature"},
                         {"geometry", {{"type", "LineString"}, {"coordinates", coords}}},
                         {"properties",
                          {{"class", seg->road_class},
                           {"speed_limit_kmh", seg->speed_limit * 3.6},
                           {"oneway", seg->oneway}}}});
    }
    json doc = {{"type", "FeatureCollection"}, {"features", feats}};
    std::ofstream out(path);
    if (!out.is_open()) {
        throw std::runtime_error("cannot write network file: " + path);
    }
    out << doc.dump(1) << "\n";
}

Projection project_to_segment(Vec2 p, const RoadSegment& s) {
    return project_to_polyline(p, s.polyline);
}

std::vector<std::pair<SegmentId, Projection>> nearby_segments(const RoadNetwork& net,
                                                              Vec2 p, double radius) {
    if (!(radius > 0.0)) {
        throw std::invalid_argument("nearby_segments: radius must be > 0");
    }
    std::vector<std::pair<SegmentId, Projection>> out;
    for (SegmentId id : net.grid.candidates(p, radius)) {
        Projection proj = project_to_segment(p, net.segments[static_cast<std::size_t>(id)]);
        if (proj.distance <= radius) out.emplace_back(id, proj);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        if (a.second.distance != b.second.distance) return a.second.distance < b.second.distance;
        return a.first < b.first;
    });
    return out;
}

double segment_bearing(const RoadSegment& s, double offset) {
    return polyline_bearing(s.polyline, offset);
}

namespace {

// Least remaining length after each segment on any walk finishing at `to`,
// ignoring the simple-path constraint; a valid lower bound for pruning.
std::vector<double> completion_bounds(const RoadNetwork& net, SegmentId to) {
    const std::size_t n = net.segments.size();
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    dist[static_cast<std::size_t>(to)] = 0.0;
    using Item = std::pair<double, SegmentId>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    pq.push({0.0, to});
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        const RoadSegment& seg_u = net.segments[static_cast<std::size_t>(u)];
        for (SegmentId s : net.in_segments[static_cast<std::size_t>(seg_u.from_node)]) {
            const double nd = d + seg_u.length;
            if (nd < dist[static_cast<std::size_t>(s)]) {
                dist[static_cast<std::size_t>(s)] = nd;
                pq.push({nd, s});
            }
        }
    }
    return dist;
}

bool path_less(const Path& a, const Path& b) {
    if (a.length != b.length) return a.length < b.length;
    return a.segment_ids < b.segment_ids;
}

}  // namespace

std::vector<Path> enumerate_paths(const RoadNetwork& net, SegmentId from, SegmentId to,
                                  double max_length, int max_paths) {
    if (!(max_length > 0.0)) throw std::invalid_argument("enumerate_paths: max_length must be > 0");
    if (max_paths < 1) throw std::invalid_argument("enumerate_paths: max_paths must be >= 1");
    net.segment(from);
    net.segment(to);

    const std::vector<double> remaining = completion_bounds(net, to);
    std::vector<Path> best;  // kept sorted ascending, size <= max_paths

    auto record = [&](const std::vector<SegmentId>& ids, double length) {
        Path p;
        p.segment_ids = ids;
        p.length = length;
        auto pos = std::upper_bound(best.begin(), best.end(), p, path_less);
        best.insert(pos, std::move(p));
        if (best.size() > static_cast<std::size_t>(max_paths)) best.pop_back();
    };

    std::vector<SegmentId> stack;
    std::vector<char> visited(net.segments.size(), 0);

    auto dfs = [&](auto&& self, SegmentId cur, double length) -> void {
        if (cur == to) {
            record(stack, length);
            return;
        }
        const RoadSegment& seg = net.segments[static_cast<std::size_t>(cur)];
        for (SegmentId next : net.out_segments[static_cast<std::size_t>(seg.to_node)]) {
            if (visited[static_cast<std::size_t>(next)]) continue;
            const double len_next =
                length + net.segments[static_cast<std::size_t>(next)].length;
            const double bound = len_next + remaining[static_cast<std::size_t>(next)];
            if (bound > max_length) continue;
            if (best.size() == static_cast<std::size_t>(max_paths) &&
                bound > best.back().length) {
                continue;
            }
            visited[static_cast<std::size_t>(next)] = 1;
            stack.push_back(next);
            self(self, next, len_next);
            stack.pop_back();
            visited[static_cast<std::size_t>(next)] = 0;
        }
    };

    const double start_len = net.segment(from).length;
    if (start_len + remaining[static_cast<std::size_t>(from)] <= max_length) {
        visited[static_cast<std::size_t>(from)] = 1;
        stack.push_back(from);
        dfs(dfs, from, start_len);
    }

    for (Path& p : best) {
        p.segment_lengths.reserve(p.segment_ids.size());
        p.speed_limits.reserve(p.segment_ids.size());
        p.class_sequence.reserve(p.segment_ids.size());
        for (SegmentId id : p.segment_ids) {
            const RoadSegment& s = net.segments[static_cast<std::size_t>(id)];
            p.segment_lengths.push_back(s.length);
            p.speed_limits.push_back(s.speed_limit);
            p.class_sequence.push_back(s.class_index);
        }
    }
    return best;
}

}  // namespace mapmatch
