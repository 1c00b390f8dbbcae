#pragma once

#include <string>
#include <vector>

#include "mapmatch/lattice.hpp"

namespace mapmatch {

enum class FeatureKind { Point, Path };

enum class FeatureBase {
    // point
    GpsDistanceError,
    AngularDifference,
    SpeedDiffRatio,
    TemporalSpeedDiffRatio,
    RoadUsage,
    IoIndicator,
    // path
    PathLength,
    MinTravelTime,
    MaxAvgSpeed,
    LengthRatio,
    SpeedCosine,
    LengthDifference,
    TimeDifference,
    ClassChanges,
    TemporalLengthDifference,
    ServiceClassChanges,
};

struct FeatureDef {
    std::string name;
    FeatureKind kind = FeatureKind::Point;
    FeatureBase base = FeatureBase::GpsDistanceError;
    int class_filter = -1;    // class index, -1 = unfiltered
    int period_filter = -1;   // daytime period slot, -1 = unfiltered
    int service_filter = -1;  // 0/1, -1 = unfiltered
};

enum class CosineMode { Similarity, OneMinus };

// The tied parameter layout: K point entries followed by S path entries.
// One weight per entry, shared across all positions and states.
struct FeatureRegistry {
    std::vector<FeatureDef> entries;
    std::vector<std::string> class_vocabulary;
    int period_width_hours = 4;
    CosineMode cosine_mode = CosineMode::Similarity;
    int K = 0;
    int S = 0;

    int M() const { return K + S; }
    int periods() const { return 24 / period_width_hours; }
};

FeatureRegistry build_registry(const std::vector<std::string>& class_vocabulary,
                               int period_width_hours,
                               CosineMode cosine_mode = CosineMode::Similarity);

// Daytime period slot of an epoch timestamp.
int period_of(double timestamp, int period_width_hours);

void point_feature_vector(const FeatureRegistry& reg, const PointState& state,
                          const GpsObservation& obs, int t, int n_obs, double* out);
void path_feature_vector(const FeatureRegistry& reg, const PathState& state,
                         const GpsObservation& from, const GpsObservation& to, double* out);

// Fills the lattice's raw feature matrices.
void compute_features(Lattice& l, const FeatureRegistry& reg);

// Per-dimension min/max over training data; apply maps to [0,1] with
// clamping, constant dimensions map to 0.
struct Scaler {
    std::vector<double> min;
    std::vector<double> max;

    double apply_one(int dim, double v) const;
};

Scaler fit_scaler(const FeatureRegistry& reg, const std::vector<const Lattice*>& lattices);
void apply_scaler(Lattice& l, const Scaler& scaler, int point_dims);

}  // namespace mapmatch
