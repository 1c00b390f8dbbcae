#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "mapmatch/road_network.hpp"
#include "mapmatch/trajectory.hpp"

namespace mapmatch {

struct WorldSpec {
    int rows = 10;
    int cols = 10;
    double spacing = 200.0;  // block spacing in meters
    int primary_every = 3;   // every k-th row/col line is "primary"
    std::map<std::string, double> speed_limit_kmh = {{"primary", 60.0}, {"residential", 30.0}};
    double origin_lon = 8.55;
    double origin_lat = 47.37;
    std::uint64_t seed = 0;
};

struct NoiseSpec {
    double gps_sigma = 15.0;      // meters, isotropic per axis
    double heading_sigma = 10.0;  // degrees
    double speed_sigma = 1.0;     // m/s
    double sampling_interval = 10.0;  // seconds between emitted observations
};

struct BehaviorSpec {
    // multiplicative edge-cost factor per class; < 1 attracts the router
    std::map<std::string, double> class_preference = {{"primary", 0.8}, {"residential", 1.0}};
    double in_service_prob = 0.5;  // chance a trip carries a passenger
    double cruise_fraction = 0.8;  // of the segment speed limit
};

struct DensePoint {
    double t = 0.0;  // seconds from trip start
    Vec2 pos;
    double speed = 0.0;    // m/s
    double heading = 0.0;  // degrees
    SegmentId segment = -1;
    int route_pos = 0;  // index into Trip::route
};

struct Trip {
    std::vector<SegmentId> route;
    std::vector<DensePoint> dense;  // one sample per second
    bool in_service = false;
    double start_time = 0.0;
};

RoadNetwork generate_network(const WorldSpec& spec);

// Least-cost route under length * class preference, traversed at the cruise
// fraction of each segment's limit, sampled at 1 Hz along the geometry.
Trip simulate_trip(const RoadNetwork& net, const BehaviorSpec& behavior, NodeId origin,
                   NodeId dest, double start_time, std::uint64_t seed);

// Samples the dense track at the noise spec's interval, perturbs position,
// heading and speed, and attaches the exact ground truth.
Trajectory synthesize_observations(const Trip& trip, const NoiseSpec& noise, std::uint64_t seed);

struct Dataset {
    RoadNetwork net;
    std::vector<Trajectory> trajectories;
};

// Random origin/destination trips, rejected until each trip lasts at least
// min_trip_duration seconds.
Dataset generate_dataset(const WorldSpec& world, const BehaviorSpec& behavior,
                         const NoiseSpec& noise, int n_trips, double min_trip_duration,
                         std::uint64_t seed);

NodeId nearest_node(const RoadNetwork& net, Vec2 p);

}  // namespace mapmatch
