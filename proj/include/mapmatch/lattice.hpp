#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "mapmatch/road_network.hpp"
#include "mapmatch/trajectory.hpp"

namespace mapmatch {

struct LatticeConfig {
    double radius = 50.0;      // candidate search radius (m)
    double max_radius = 200.0; // escalation ceiling when no candidate is found
    int max_point_states = 8;
    int max_paths = 10;        // per (start, end) candidate pair
    double slack = 1.5;        // path budget = dt * v_max * slack
};

struct PointState {
    SegmentId segment = -1;
    Projection projection;
    double bearing = 0.0;  // road bearing at the projection offset
    int class_index = -1;
    double speed_limit = 0.0;  // m/s
};

struct PathState {
    Path path;
    int start_point = -1;  // index into the point set at t
    int end_point = -1;    // index into the point set at t+1
};

// Dense per-node feature rows; row i belongs to state i of that node.
struct FeatureMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;

    void resize(int r, int c) {
        rows = r;
        cols = c;
        values.assign(static_cast<std::size_t>(r) * c, 0.0);
    }
    double* row(int i) { return values.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return values.data() + static_cast<std::size_t>(i) * cols; }
};

// The alternating point/path chain y_1..y_{2N-1} for one trajectory. Chain
// node 2t is the point set of observation t, chain node 2t+1 the path set of
// gap t. Pairwise compatibility is carried by each path state's start/end
// point indices.
struct Lattice {
    std::string trajectory_id;
    std::vector<GpsObservation> observations;
    std::vector<std::vector<PointState>> point_states;  // size N
    std::vector<std::vector<PathState>> path_states;    // size N-1
    std::vector<FeatureMatrix> point_features;          // filled by the features module
    std::vector<FeatureMatrix> path_features;

    int num_observations() const { return static_cast<int>(point_states.size()); }
    int num_nodes() const { return 2 * num_observations() - 1; }
    bool node_is_point(int node) const { return node % 2 == 0; }
    int node_state_count(int node) const {
        return node_is_point(node)
                   ? static_cast<int>(point_states[static_cast<std::size_t>(node / 2)].size())
                   : static_cast<int>(path_states[static_cast<std::size_t>(node / 2)].size());
    }
    // Compatibility between chain nodes `node` and `node + 1`.
    bool mask_allows(int node, int left_state, int right_state) const {
        if (node_is_point(node)) {
            return path_states[static_cast<std::size_t>(node / 2)][static_cast<std::size_t>(
                                                                       right_state)]
                       .start_point == left_state;
        }
        return path_states[static_cast<std::size_t>(node / 2)][static_cast<std::size_t>(
                                                                   left_state)]
                   .end_point == right_state;
    }
};

struct TrainingExample {
    Lattice lattice;
    std::vector<int> labels;  // the true state index at every chain node
};

struct LatticeBuildError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnlabelableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

Lattice build_lattice(const RoadNetwork& net, const Trajectory& t, const LatticeConfig& cfg);

// Removes states that cannot take part in any full compatible sequence.
// Returns -1, or the chain node index that was emptied.
int prune_lattice(Lattice& l);

TrainingExample label_lattice(const Lattice& l, const GroundTruth& g);

}  // namespace mapmatch
