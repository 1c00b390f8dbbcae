#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mapmatch/geometry.hpp"
#include "mapmatch/road_network.hpp"

namespace mapmatch {

struct GpsObservation {
    Vec2 position;  // planar meters
    double lon = 0.0;
    double lat = 0.0;
    double timestamp = 0.0;  // epoch seconds
    std::optional<double> speed;    // m/s
    std::optional<double> heading;  // degrees [0, 360)
    std::optional<bool> in_service;
};

struct GroundTruth {
    std::vector<SegmentId> point_labels;                // one per observation
    std::vector<std::vector<SegmentId>> path_labels;    // one per gap
};

struct Trajectory {
    std::string id;
    std::vector<GpsObservation> observations;  // time-ordered, N >= 2
    std::optional<GroundTruth> truth;
};

std::vector<Trajectory> load_trajectories(const std::string& path,
                                          const EquirectProjector& projector);
void save_trajectories(const std::vector<Trajectory>& trajectories, const std::string& path,
                       const EquirectProjector& projector);

// Keeps the first observation, then greedily each next one at least
// `interval` seconds after the last kept. Truth labels are subset and the
// per-gap paths concatenated accordingly.
Trajectory degrade_sampling(const Trajectory& t, double interval);

// Deterministic shuffle by seed; first ceil(fraction * n) go to train.
std::pair<std::vector<Trajectory>, std::vector<Trajectory>> split_dataset(
    const std::vector<Trajectory>& trajectories, double train_fraction, std::uint64_t seed);

}  // namespace mapmatch
