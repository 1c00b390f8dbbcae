#include "mapmatch/trajectory.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace mapmatch {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(sep, start);
        if (pos == std::string::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& s, const std::string& what) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        throw std::runtime_error("invalid " + what + ": '" + s + "'");
    }
    return v;
}

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

const char* kHeader =
    "traj_id,lon,lat,timestamp,speed_kmh,heading_deg,in_service,truth_segment,truth_path";

struct RawRow {
    GpsObservation obs;
    std::optional<SegmentId> truth_segment;
    std::optional<std::vector<SegmentId>> truth_path;
    bool has_truth_path_cell = false;
};

void finalize_trajectory(const std::string& id, std::vector<RawRow>& rows,
                         std::vector<Trajectory>& out) {
    if (rows.size() < 2) {
        throw std::runtime_error("trajectory " + id + ": needs at least 2 observations");
    }
    Trajectory t;
    t.id = id;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0) {
            const double prev = rows[i - 1].obs.timestamp;
            const double cur = rows[i].obs.timestamp;
            if (cur == prev) {
                throw std::runtime_error("trajectory " + id + ": duplicate timestamp " +
                                         format_double(cur));
            }
            if (cur < prev) {
                throw std::runtime_error("trajectory " + id + ": timestamps out of order");
            }
        }
        t.observations.push_back(rows[i].obs);
    }

    const bool any_truth = std::any_of(rows.begin(), rows.end(), [](const RawRow& r) {
        return r.truth_segment.has_value() || r.truth_path.has_value();
    });
    if (any_truth) {
        GroundTruth g;
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (!rows[i].truth_segment) {
                throw std::runtime_error("trajectory " + id + ": missing truth_segment at row " +
                                         std::to_string(i));
            }
            g.point_labels.push_back(*rows[i].truth_segment);
        }
        for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
            if (!rows[i].truth_path) {
                throw std::runtime_error("trajectory " + id + ": missing truth_path at row " +
                                         std::to_string(i));
            }
            const std::vector<SegmentId>& p = *rows[i].truth_path;
            if (p.front() != g.point_labels[i] || p.back() != g.point_labels[i + 1]) {
                throw std::runtime_error("trajectory " + id + ": truth path at gap " +
                                         std::to_string(i) +
                                         " does not connect its point labels");
            }
            g.path_labels.push_back(p);
        }
        t.truth = std::move(g);
    }
    out.push_back(std::move(t));
    rows.clear();
}

}  // namespace

std::vector<Trajectory> load_trajectories(const std::string& path,
                                          const EquirectProjector& projector) {
    std::ifstream in(path);
    if (!in.is_open()) {
        throw std::runtime_error("cannot open trajectory file: " + path);
    }
    std::string line;
    if (!std::getline(in, line) || split_line(line, ',').size() != 9) {
        throw std::runtime_error("trajectory file has a malformed header: " + path);
    }

    std::vector<Trajectory> out;
    std::vector<RawRow> rows;
    std::string current_id;
    std::vector<std::string> seen_ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const std::vector<std::string> cells = split_line(line, ',');
        if (cells.size() != 9) {
            throw std::runtime_error("line " + std::to_string(line_no) + ": expected 9 columns");
        }
        const std::string& id = cells[0];
        if (id != current_id) {
            if (!rows.empty()) finalize_trajectory(current_id, rows, out);
            if (std::find(seen_ids.begin(), seen_ids.end(), id) != seen_ids.end()) {
                throw std::runtime_error("trajectory " + id + ": rows are not contiguous");
            }
            seen_ids.push_back(id);
            current_id = id;
        }
        RawRow row;
        row.obs.lon = parse_double(cells[1], "lon");
        row.obs.lat = parse_double(cells[2], "lat");
        row.obs.position = projector.to_planar({row.obs.lon, row.obs.lat});
        row.obs.timestamp = parse_double(cells[3], "timestamp");
        if (!cells[4].empty()) {
            const double kmh = parse_double(cells[4], "speed_kmh");
            if (kmh < 0.0) {
                throw std::runtime_error("trajectory " + id + ": negative speed");
            }
            row.obs.speed = kmh / 3.6;
        }
        if (!cells[5].empty()) {
            const double h = parse_double(cells[5], "heading_deg");
            if (h < 0.0 || h >= 360.0) {
                throw std::runtime_error("trajectory " + id + ": heading out of [0,360)");
            }
            row.obs.heading = h;
        }
        if (!cells[6].empty()) {
            if (cells[6] == "1" || cells[6] == "true") {
                row.obs.in_service = true;
            } else if (cells[6] == "0" || cells[6] == "false") {
                row.obs.in_service = false;
            } else {
                throw std::runtime_error("trajectory " + id + ": invalid in_service value");
            }
        }
        if (!cells[7].empty()) {
            row.truth_segment = static_cast<SegmentId>(parse_double(cells[7], "truth_segment"));
        }
        if (!cells[8].empty()) {
            std::vector<SegmentId> ids;
            for (const std::string& tok : split_line(cells[8], '|')) {
                ids.push_back(static_cast<SegmentId>(parse_double(tok, "truth_path id")));
            }
            row.truth_path = std::move(ids);
        }
        rows.push_back(std::move(row));
    }
    if (!rows.empty()) finalize_trajectory(current_id, rows, out);
    return out;
}

void save_trajectories(const std::vector<Trajectory>& trajectories, const std::string& path,
                       const EquirectProjector& projector) {
    std::ofstream out(path);
    if (!out.is_open()) {
        throw std::runtime_error("cannot write trajectory file: " + path);
    }
    out << kHeader << "\n";
    for (const Trajectory& t : trajectories) {
        for (std::size_t i = 0; i < t.observations.size(); ++i) {
            const GpsObservation& o = t.observations[i];
            LonLat c{o.lon, o.lat};
            if (!std::isfinite(c.lon) || !std::isfinite(c.lat)) {
                c = projector.to_lonlat(o.position);
            }
            out << t.id << ',' << format_double(c.lon) << ',' << format_double(c.lat) << ','
                << format_double(o.timestamp) << ',';
            if (o.speed) out << format_double(*o.speed * 3.6);
            out << ',';
            if (o.heading) out << format_double(*o.heading);
            out << ',';
            if (o.in_service) out << (*o.in_service ? '1' : '0');
            out << ',';
            if (t.truth) out << t.truth->point_labels[i];
            out << ',';
            if (t.truth && i + 1 < t.observations.size()) {
                const std::vector<SegmentId>& p = t.truth->path_labels[i];
                for (std::size_t k = 0; k < p.size(); ++k) {
                    if (k > 0) out << '|';
                    out << p[k];
                }
            }
            out << "\n";
        }
    }
}

Trajectory degrade_sampling(const Trajectory& t, double interval) {
    if (!(interval > 0.0)) {
        throw std::invalid_argument("degrade_sampling: interval must be > 0");
    }
    std::vector<std::size_t> kept{0};
    double last = t.observations.front().timestamp;
    for (std::size_t i = 1; i < t.observations.size(); ++i) {
        if (t.observations[i].timestamp >= last + interval) {
            kept.push_back(i);
            last = t.observations[i].timestamp;
        }
    }
    if (kept.size() < 2) {
        throw std::runtime_error("trajectory " + t.id + ": degenerate after degrading to " +
                                 format_double(interval) + " s");
    }

    Trajectory out;
    out.id = t.id;
    for (std::size_t i : kept) out.observations.push_back(t.observations[i]);
    if (t.truth) {
        GroundTruth g;
        for (std::size_t i : kept) g.point_labels.push_back(t.truth->point_labels[i]);
        for (std::size_t k = 0; k + 1 < kept.size(); ++k) {
            std::vector<SegmentId> merged = t.truth->path_labels[kept[k]];
            for (std::size_t gap = kept[k] + 1; gap < kept[k + 1]; ++gap) {
                const std::vector<SegmentId>& next = t.truth->path_labels[gap];
                // the next gap starts on the segment the previous one ended on
                merged.insert(merged.end(), next.begin() + 1, next.end());
            }
            g.path_labels.push_back(std::move(merged));
        }
        out.truth = std::move(g);
    }
    return out;
}

std::pair<std::vector<Trajectory>, std::vector<Trajectory>> split_dataset(
    const std::vector<Trajectory>& trajectories, double train_fraction, std::uint64_t seed) {
    if (trajectories.size() < 2) {
        throw std::invalid_argument("split_dataset: need at least 2 trajectories");
    }
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw std::invalid_argument("split_dataset: train_fraction must be in (0,1)");
    }
    std::vector<std::size_t> idx(trajectories.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);

    const std::size_t n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(trajectories.size())));
    std::vector<std::size_t> train_idx(idx.begin(), idx.begin() + static_cast<long>(n_train));
    std::vector<std::size_t> test_idx(idx.begin() + static_cast<long>(n_train), idx.end());
    std::sort(train_idx.begin(), train_idx.end());
    std::sort(test_idx.begin(), test_idx.end());

    std::pair<std::vector<Trajectory>, std::vector<Trajectory>> out;
    for (std::size_t i : train_idx) out.first.push_back(trajectories[i]);
    for (std::size_t i : test_idx) out.second.push_back(trajectories[i]);
    return out;
}

}  // namespace mapmatch
