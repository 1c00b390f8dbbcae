#include "mapmatch/lattice.hpp"

#include <algorithm>
#include <cmath>

namespace mapmatch {

namespace {

std::vector<PointState> point_candidates(const RoadNetwork& net, Vec2 p,
                                         const LatticeConfig& cfg, int obs_index) {
    std::vector<std::pair<SegmentId, Projection>> found;
    double radius = cfg.radius;
    while (true) {
        found = nearby_segments(net, p, radius);
        if (!found.empty() || radius >= cfg.max_radius) break;
        radius = std::min(radius * 2.0, cfg.max_radius);
    }
    if (found.empty()) {
        throw LatticeBuildError("no candidate segments for observation " +
                                std::to_string(obs_index) + " within " +
                                std::to_string(cfg.max_radius) + " m");
    }
    if (found.size() > static_cast<std::size_t>(cfg.max_point_states)) {
        found.resize(static_cast<std::size_t>(cfg.max_point_states));
    }
    std::vector<PointState> states;
    states.reserve(found.size());
    for (const auto& [id, proj] : found) {
        const RoadSegment& seg = net.segment(id);
        PointState ps;
        ps.segment = id;
        ps.projection = proj;
        ps.bearing = segment_bearing(seg, proj.offset);
        ps.class_index = seg.class_index;
        ps.speed_limit = seg.speed_limit;
        states.push_back(std::move(ps));
    }
    return states;
}

}  // namespace

Lattice build_lattice(const RoadNetwork& net, const Trajectory& t, const LatticeConfig& cfg) {
    if (!(cfg.radius > 0.0) || cfg.slack < 1.0 || cfg.max_point_states < 1 || cfg.max_paths < 1) {
        throw std::invalid_argument("build_lattice: invalid config");
    }
    Lattice l;
    l.trajectory_id = t.id;
    l.observations = t.observations;

    const int n = static_cast<int>(t.observations.size());
    for (int i = 0; i < n; ++i) {
        l.point_states.push_back(point_candidates(net, t.observations[static_cast<std::size_t>(i)].position, cfg, i));
    }

    const double v_max = net.max_speed_limit();
    for (int g = 0; g + 1 < n; ++g) {
        const double dt = t.observations[static_cast<std::size_t>(g) + 1].timestamp -
                          t.observations[static_cast<std::size_t>(g)].timestamp;
        const double budget = dt * v_max * cfg.slack;
        std::vector<PathState> states;
        const auto& from_states = l.point_states[static_cast<std::size_t>(g)];
        const auto& to_states = l.point_states[static_cast<std::size_t>(g) + 1];
        for (std::size_t i = 0; i < from_states.size(); ++i) {
            for (std::size_t j = 0; j < to_states.size(); ++j) {
                for (Path& p : enumerate_paths(net, from_states[i].segment,
                                               to_states[j].segment, budget, cfg.max_paths)) {
                    PathState st;
                    st.path = std::move(p);
                    st.start_point = static_cast<int>(i);
                    st.end_point = static_cast<int>(j);
                    states.push_back(std::move(st));
                }
            }
        }
        if (states.empty()) {
            throw LatticeBuildError("no feasible paths for gap " + std::to_string(g) +
                                    " (budget " + std::to_string(budget) + " m)");
        }
        std::sort(states.begin(), states.end(), [](const PathState& a, const PathState& b) {
            if (a.path.length != b.path.length) return a.path.length < b.path.length;
            return a.path.segment_ids < b.path.segment_ids;
        });
        l.path_states.push_back(std::move(states));
    }

    const int emptied = prune_lattice(l);
    if (emptied >= 0) {
        if (l.node_is_point(emptied)) {
            throw LatticeBuildError("observation " + std::to_string(emptied / 2) +
                                    " lost all states during pruning");
        }
        throw LatticeBuildError("gap " + std::to_string(emptied / 2) +
                                " lost all states during pruning");
    }
    return l;
}

int prune_lattice(Lattice& l) {
    const int n = l.num_observations();
    if (n == 1) return l.point_states[0].empty() ? 0 : -1;

    std::vector<std::vector<char>> point_alive(static_cast<std::size_t>(n));
    std::vector<std::vector<char>> path_alive(static_cast<std::size_t>(n) - 1);
    for (int i = 0; i < n; ++i) {
        point_alive[static_cast<std::size_t>(i)].assign(l.point_states[static_cast<std::size_t>(i)].size(), 1);
    }
    for (int g = 0; g + 1 < n; ++g) {
        path_alive[static_cast<std::size_t>(g)].assign(l.path_states[static_cast<std::size_t>(g)].size(), 1);
    }

    bool changed = true;
    while (changed) {
        changed = false;
        for (int g = 0; g + 1 < n; ++g) {
            auto& alive = path_alive[static_cast<std::size_t>(g)];
            const auto& states = l.path_states[static_cast<std::size_t>(g)];
            for (std::size_t j = 0; j < states.size(); ++j) {
                if (!alive[j]) continue;
                if (!point_alive[static_cast<std::size_t>(g)][static_cast<std::size_t>(states[j].start_point)] ||
                    !point_alive[static_cast<std::size_t>(g) + 1][static_cast<std::size_t>(states[j].end_point)]) {
                    alive[j] = 0;
                    changed = true;
                }
            }
        }
        for (int i = 0; i < n; ++i) {
            auto& alive = point_alive[static_cast<std::size_t>(i)];
            for (std::size_t s = 0; s < alive.size(); ++s) {
                if (!alive[s]) continue;
                bool ok = true;
                if (i > 0) {
                    const auto& prev = l.path_states[static_cast<std::size_t>(i) - 1];
                    const auto& prev_alive = path_alive[static_cast<std::size_t>(i) - 1];
                    ok = false;
                    for (std::size_t j = 0; j < prev.size(); ++j) {
                        if (prev_alive[j] && prev[j].end_point == static_cast<int>(s)) {
                            ok = true;
                            break;
                        }
                    }
                }
                if (ok && i + 1 < n) {
                    const auto& next = l.path_states[static_cast<std::size_t>(i)];
                    const auto& next_alive = path_alive[static_cast<std::size_t>(i)];
                    ok = false;
                    for (std::size_t j = 0; j < next.size(); ++j) {
                        if (next_alive[j] && next[j].start_point == static_cast<int>(s)) {
                            ok = true;
                            break;
                        }
                    }
                }
                if (!ok) {
                    alive[s] = 0;
                    changed = true;
                }
            }
        }
    }

    // compact and remap endpoint indices
    std::vector<std::vector<int>> remap(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& states = l.point_states[static_cast<std::size_t>(i)];
        auto& map = remap[static_cast<std::size_t>(i)];
        map.assign(states.size(), -1);
        std::vector<PointState> kept;
        for (std::size_t s = 0; s < states.size(); ++s) {
            if (point_alive[static_cast<std::size_t>(i)][s]) {
                map[s] = static_cast<int>(kept.size());
                kept.push_back(std::move(states[s]));
            }
        }
        states = std::move(kept);
        if (states.empty()) return 2 * i;
    }
    for (int g = 0; g + 1 < n; ++g) {
        auto& states = l.path_states[static_cast<std::size_t>(g)];
        std::vector<PathState> kept;
        for (std::size_t j = 0; j < states.size(); ++j) {
            if (!path_alive[static_cast<std::size_t>(g)][j]) continue;
            PathState st = std::move(states[j]);
            st.start_point = remap[static_cast<std::size_t>(g)][static_cast<std::size_t>(st.start_point)];
            st.end_point = remap[static_cast<std::size_t>(g) + 1][static_cast<std::size_t>(st.end_point)];
            kept.push_back(std::move(st));
        }
        states = std::move(kept);
        if (states.empty()) return 2 * g + 1;
    }
    return -1;
}

TrainingExample label_lattice(const Lattice& l, const GroundTruth& g) {
    const int n = l.num_observations();
    if (static_cast<int>(g.point_labels.size()) != n ||
        static_cast<int>(g.path_labels.size()) != n - 1) {
        throw std::invalid_argument("label_lattice: truth does not cover the trajectory");
    }
    TrainingExample ex;
    ex.lattice = l;
    ex.labels.resize(static_cast<std::size_t>(l.num_nodes()), -1);

    for (int i = 0; i < n; ++i) {
        const auto& states = l.point_states[static_cast<std::size_t>(i)];
        int found = -1;
        for (std::size_t s = 0; s < states.size(); ++s) {
            if (states[s].segment == g.point_labels[static_cast<std::size_t>(i)]) {
                found = static_cast<int>(s);
                break;
            }
        }
        if (found < 0) {
            throw UnlabelableError("trajectory " + l.trajectory_id +
                                   ": true segment missing from candidates at observation " +
                                   std::to_string(i));
        }
        ex.labels[static_cast<std::size_t>(2 * i)] = found;
    }
    for (int gap = 0; gap + 1 < n; ++gap) {
        const auto& states = l.path_states[static_cast<std::size_t>(gap)];
        int found = -1;
        for (std::size_t j = 0; j < states.size(); ++j) {
            if (states[j].path.segment_ids == g.path_labels[static_cast<std::size_t>(gap)]) {
                found = static_cast<int>(j);
                break;
            }
        }
        if (found < 0) {
            throw UnlabelableError("trajectory " + l.trajectory_id +
                                   ": true path missing from candidates at gap " +
                                   std::to_string(gap));
        }
        ex.labels[static_cast<std::size_t>(2 * gap + 1)] = found;
    }
    return ex;
}

}  // namespace mapmatch
