#include "mapmatch/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mapmatch {

namespace {

std::string period_suffix(int v) { return "[p" + std::to_string(v) + "]"; }

}  // namespace

FeatureRegistry build_registry(const std::vector<std::string>& class_vocabulary,
                               int period_width_hours, CosineMode cosine_mode) {
    if (class_vocabulary.empty()) {
        throw std::invalid_argument("build_registry: empty class vocabulary");
    }
    if (period_width_hours < 1 || 24 % period_width_hours != 0) {
        throw std::invalid_argument("build_registry: 24 must be divisible by period width");
    }
    FeatureRegistry reg;
    reg.class_vocabulary = class_vocabulary;
    reg.period_width_hours = period_width_hours;
    reg.cosine_mode = cosine_mode;
    const int periods = reg.periods();
    const int n_classes = static_cast<int>(class_vocabulary.size());

    auto add = [&](std::string name, FeatureKind kind, FeatureBase base, int class_filter = -1,
                   int period_filter = -1, int service_filter = -1) {
        reg.entries.push_back(
            {std::move(name), kind, base, class_filter, period_filter, service_filter});
    };

    add("gps_distance_error", FeatureKind::Point, FeatureBase::GpsDistanceError);
    add("angular_difference", FeatureKind::Point, FeatureBase::AngularDifference);
    add("speed_difference_ratio", FeatureKind::Point, FeatureBase::SpeedDiffRatio);
    for (int v = 0; v < periods; ++v) {
        add("temporal_speed_difference_ratio" + period_suffix(v), FeatureKind::Point,
            FeatureBase::TemporalSpeedDiffRatio, -1, v);
    }
    for (int u = 0; u < n_classes; ++u) {
        for (int svc = 0; svc <= 1; ++svc) {
            add("road_usage[" + class_vocabulary[static_cast<std::size_t>(u)] + ",svc" +
                    std::to_string(svc) + "]",
                FeatureKind::Point, FeatureBase::RoadUsage, u, -1, svc);
        }
    }
    for (int u = 0; u < n_classes; ++u) {
        add("io[" + class_vocabulary[static_cast<std::size_t>(u)] + "]", FeatureKind::Point,
            FeatureBase::IoIndicator, u);
    }
    reg.K = static_cast<int>(reg.entries.size());

    add("length", FeatureKind::Path, FeatureBase::PathLength);
    add("minimum_travel_time", FeatureKind::Path, FeatureBase::MinTravelTime);
    add("maximum_average_speed", FeatureKind::Path, FeatureBase::MaxAvgSpeed);
    add("length_ratio", FeatureKind::Path, FeatureBase::LengthRatio);
    add("speed_cosine", FeatureKind::Path, FeatureBase::SpeedCosine);
    add("length_difference", FeatureKind::Path, FeatureBase::LengthDifference);
    add("time_difference", FeatureKind::Path, FeatureBase::TimeDifference);
    add("road_class_changes", FeatureKind::Path, FeatureBase::ClassChanges);
    for (int v = 0; v < periods; ++v) {
        add("temporal_length_difference" + period_suffix(v), FeatureKind::Path,
            FeatureBase::TemporalLengthDifference, -1, v);
    }
    for (int svc = 0; svc <= 1; ++svc) {
        add("service_class_changes[svc" + std::to_string(svc) + "]", FeatureKind::Path,
            FeatureBase::ServiceClassChanges, -1, -1, svc);
    }
    reg.S = static_cast<int>(reg.entries.size()) - reg.K;
    return reg;
}

int period_of(double timestamp, int period_width_hours) {
    double sec = std::fmod(timestamp, 86400.0);
    if (sec < 0.0) sec += 86400.0;
    const int slot = static_cast<int>(sec / (3600.0 * period_width_hours));
    return std::min(slot, 24 / period_width_hours - 1);
}

void point_feature_vector(const FeatureRegistry& reg, const PointState& state,
                          const GpsObservation& obs, int t, int n_obs, double* out) {
    const double dist = state.projection.distance;
    const double ang =
        obs.heading ? angle_difference_deg(*obs.heading, state.bearing) : 0.0;
    const double speed_ratio =
        obs.speed ? (*obs.speed - state.speed_limit) / state.speed_limit : 0.0;
    const int period = period_of(obs.timestamp, reg.period_width_hours);
    const int svc = obs.in_service.value_or(false) ? 1 : 0;
    const bool boundary = (t == 0 || t == n_obs - 1);

    for (int k = 0; k < reg.K; ++k) {
        const FeatureDef& def = reg.entries[static_cast<std::size_t>(k)];
        double v = 0.0;
        switch (def.base) {
            case FeatureBase::GpsDistanceError:
                v = dist;
                break;
            case FeatureBase::AngularDifference:
                v = ang;
                break;
            case FeatureBase::SpeedDiffRatio:
                v = speed_ratio;
                break;
            case FeatureBase::TemporalSpeedDiffRatio:
                v = (def.period_filter == period) ? speed_ratio : 0.0;
                break;
            case FeatureBase::RoadUsage:
                v = (def.class_filter == state.class_index && def.service_filter == svc) ? 1.0
                                                                                         : 0.0;
                break;
            case FeatureBase::IoIndicator:
                v = (def.class_filter == state.class_index && boundary) ? 1.0 : 0.0;
                break;
            default:
                throw std::logic_error("path feature in point block");
        }
        out[k] = v;
    }
}

void path_feature_vector(const FeatureRegistry& reg, const PathState& state,
                         const GpsObservation& from, const GpsObservation& to, double* out) {
    const Path& p = state.path;
    const double straight = planar_distance(from.position, to.position);
    const double dt = to.timestamp - from.timestamp;
    const std::size_t n = p.speed_limits.size();

    double t_min = 0.0;
    double limit_sum = 0.0;
    double limit_sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        t_min += p.segment_lengths[i] / p.speed_limits[i];
        limit_sum += p.speed_limits[i];
        limit_sq += p.speed_limits[i] * p.speed_limits[i];
    }
    const double mean_limit = limit_sum / static_cast<double>(n);
    // cos between the limit vector and the constant vector of its own mean
    double cosine = limit_sum / (std::sqrt(limit_sq) * std::sqrt(static_cast<double>(n)));
    if (reg.cosine_mode == CosineMode::OneMinus) cosine = 1.0 - cosine;

    int class_changes = 0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
        if (p.class_sequence[i] != p.class_sequence[i + 1]) ++class_changes;
    }
    const int period = period_of(from.timestamp, reg.period_width_hours);
    const int svc = from.in_service.value_or(false) ? 1 : 0;

    for (int s = 0; s < reg.S; ++s) {
        const FeatureDef& def = reg.entries[static_cast<std::size_t>(reg.K + s)];
        double v = 0.0;
        switch (def.base) {
            case FeatureBase::PathLength:
                v = p.length;
                break;
            case FeatureBase::MinTravelTime:
                v = t_min;
                break;
            case FeatureBase::MaxAvgSpeed:
                v = mean_limit;
                break;
            case FeatureBase::LengthRatio:
                v = straight / p.length;
                break;
            case FeatureBase::SpeedCosine:
                v = cosine;
                break;
            case FeatureBase::LengthDifference:
                v = p.length - straight;
                break;
            case FeatureBase::TimeDifference:
                v = t_min - dt;
                break;
            case FeatureBase::ClassChanges:
                v = static_cast<double>(class_changes);
                break;
            case FeatureBase::TemporalLengthDifference:
                v = (def.period_filter == period) ? p.length - straight : 0.0;
                break;
            case FeatureBase::ServiceClassChanges:
                v = (def.service_filter == svc) ? static_cast<double>(class_changes) : 0.0;
                break;
            default:
                throw std::logic_error("point feature in path block");
        }
        out[s] = v;
    }
}

void compute_features(Lattice& l, const FeatureRegistry& reg) {
    const int n = l.num_observations();
    l.point_features.assign(static_cast<std::size_t>(n), {});
    l.path_features.assign(static_cast<std::size_t>(n) - 1, {});
    for (int i = 0; i < n; ++i) {
        auto& mat = l.point_features[static_cast<std::size_t>(i)];
        const auto& states = l.point_states[static_cast<std::size_t>(i)];
        mat.resize(static_cast<int>(states.size()), reg.K);
        for (std::size_t s = 0; s < states.size(); ++s) {
            point_feature_vector(reg, states[s], l.observations[static_cast<std::size_t>(i)], i,
                                 n, mat.row(static_cast<int>(s)));
        }
    }
    for (int g = 0; g + 1 < n; ++g) {
        auto& mat = l.path_features[static_cast<std::size_t>(g)];
        const auto& states = l.path_states[static_cast<std::size_t>(g)];
        mat.resize(static_cast<int>(states.size()), reg.S);
        for (std::size_t j = 0; j < states.size(); ++j) {
            path_feature_vector(reg, states[j], l.observations[static_cast<std::size_t>(g)],
                                l.observations[static_cast<std::size_t>(g) + 1],
                                mat.row(static_cast<int>(j)));
        }
    }
}

double Scaler::apply_one(int dim, double v) const {
    const double lo = min[static_cast<std::size_t>(dim)];
    const double hi = max[static_cast<std::size_t>(dim)];
    if (!(hi > lo)) return 0.0;
    return std::clamp((v - lo) / (hi - lo), 0.0, 1.0);
}

Scaler fit_scaler(const FeatureRegistry& reg, const std::vector<const Lattice*>& lattices) {
    const int m = reg.M();
    Scaler sc;
    sc.min.assign(static_cast<std::size_t>(m), std::numeric_limits<double>::infinity());
    sc.max.assign(static_cast<std::size_t>(m), -std::numeric_limits<double>::infinity());
    bool any = false;
    for (const Lattice* l : lattices) {
        for (const FeatureMatrix& mat : l->point_features) {
            for (int r = 0; r < mat.rows; ++r) {
                const double* row = mat.row(r);
                for (int c = 0; c < mat.cols; ++c) {
                    sc.min[static_cast<std::size_t>(c)] = std::min(sc.min[static_cast<std::size_t>(c)], row[c]);
                    sc.max[static_cast<std::size_t>(c)] = std::max(sc.max[static_cast<std::size_t>(c)], row[c]);
                }
                any = true;
            }
        }
        for (const FeatureMatrix& mat : l->path_features) {
            for (int r = 0; r < mat.rows; ++r) {
                const double* row = mat.row(r);
                for (int c = 0; c < mat.cols; ++c) {
                    const std::size_t dim = static_cast<std::size_t>(reg.K + c);
                    sc.min[dim] = std::min(sc.min[dim], row[c]);
                    sc.max[dim] = std::max(sc.max[dim], row[c]);
                }
                any = true;
            }
        }
    }
    if (!any) {
        throw std::invalid_argument("fit_scaler: no training states");
    }
    return sc;
}

void apply_scaler(Lattice& l, const Scaler& scaler, int point_dims) {
    for (FeatureMatrix& mat : l.point_features) {
        for (int r = 0; r < mat.rows; ++r) {
            double* row = mat.row(r);
            for (int c = 0; c < mat.cols; ++c) row[c] = scaler.apply_one(c, row[c]);
        }
    }
    for (FeatureMatrix& mat : l.path_features) {
        for (int r = 0; r < mat.rows; ++r) {
            double* row = mat.row(r);
            for (int c = 0; c < mat.cols; ++c) {
                row[c] = scaler.apply_one(point_dims + c, row[c]);
            }
        }
    }
}

}  // namespace mapmatch
