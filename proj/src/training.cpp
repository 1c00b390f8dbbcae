#include "mapmatch/training.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace mapmatch {

namespace {

using nlohmann::json;

// Minimized smooth part: f(theta) = -l(theta) + lambda2 * ||theta||^2.
struct SmoothObjective {
    const std::vector<TrainingExample>* examples;
    int point_dims;
    int path_dims;
    double lambda2;

    double eval(const std::vector<double>& theta, std::vector<double>& grad) const {
        const LikelihoodResult ll =
            log_likelihood_and_gradient(*examples, theta, point_dims, path_dims);
        double f = -ll.value;
        grad.resize(theta.size());
        for (std::size_t m = 0; m < theta.size(); ++m) {
            grad[m] = -ll.gradient[m];
            if (lambda2 > 0.0) {
                f += lambda2 * theta[m] * theta[m];
                grad[m] += 2.0 * lambda2 * theta[m];
            }
        }
        return f;
    }
};

double l1_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += std::fabs(x);
    return s;
}

double inf_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s = std::max(s, std::fabs(x));
    return s;
}

double sign(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// Pseudo-gradient of f + lambda1 * |theta|: at a zero coordinate the move is
// allowed only if the smooth gradient magnitude exceeds lambda1.
std::vector<double> pseudo_gradient(const std::vector<double>& theta,
                                    const std::vector<double>& grad, double lambda1) {
    std::vector<double> pg(theta.size());
    for (std::size_t m = 0; m < theta.size(); ++m) {
        if (theta[m] > 0.0) {
            pg[m] = grad[m] + lambda1;
        } else if (theta[m] < 0.0) {
            pg[m] = grad[m] - lambda1;
        } else if (grad[m] + lambda1 < 0.0) {
            pg[m] = grad[m] + lambda1;
        } else if (grad[m] - lambda1 > 0.0) {
            pg[m] = grad[m] - lambda1;
        } else {
            pg[m] = 0.0;
        }
    }
    return pg;
}

struct CurvaturePair {
    std::vector<double> s;
    std::vector<double> y;
    double rho;
};

// Two-loop recursion: approximates H * g for the current history.
std::vector<double> lbfgs_direction(const std::deque<CurvaturePair>& history,
                                    const std::vector<double>& g) {
    std::vector<double> q = g;
    std::vector<double> alpha(history.size());
    for (std::size_t i = history.size(); i-- > 0;) {
        const CurvaturePair& p = history[i];
        double a = 0.0;
        for (std::size_t m = 0; m < q.size(); ++m) a += p.s[m] * q[m];
        a *= p.rho;
        alpha[i] = a;
        for (std::size_t m = 0; m < q.size(); ++m) q[m] -= a * p.y[m];
    }
    if (!history.empty()) {
        const CurvaturePair& last = history.back();
        double sy = 0.0, yy = 0.0;
        for (std::size_t m = 0; m < q.size(); ++m) {
            sy += last.s[m] * last.y[m];
            yy += last.y[m] * last.y[m];
        }
        const double gamma = sy / yy;
        for (double& x : q) x *= gamma;
    }
    for (std::size_t i = 0; i < history.size(); ++i) {
        const CurvaturePair& p = history[i];
        double b = 0.0;
        for (std::size_t m = 0; m < q.size(); ++m) b += p.y[m] * q[m];
        b *= p.rho;
        for (std::size_t m = 0; m < q.size(); ++m) q[m] += (alpha[i] - b) * p.s[m];
    }
    return q;
}

FitResult fit(const std::vector<TrainingExample>& examples, double lambda1, double lambda2,
              const TrainOptions& opts, int point_dims, int path_dims,
              const std::vector<double>* warm_start) {
    if (examples.empty()) throw std::invalid_argument("training: no examples");
    const std::size_t m_dims = static_cast<std::size_t>(point_dims + path_dims);
    const SmoothObjective obj{&examples, point_dims, path_dims, lambda2};

    std::vector<double> theta(m_dims, 0.0);
    if (warm_start) theta = *warm_start;
    std::vector<double> grad;
    double f = obj.eval(theta, grad);
    if (!std::isfinite(f)) throw TrainingError("training: non-finite objective at start");

    std::deque<CurvaturePair> history;
    FitResult res;
    int iter = 0;
    for (; iter < opts.max_iter; ++iter) {
        const std::vector<double> pg = pseudo_gradient(theta, grad, lambda1);
        res.grad_norm = inf_norm(pg);
        if (res.grad_norm <= opts.tol) {
            res.converged = true;
            break;
        }

        std::vector<double> dir = lbfgs_direction(history, pg);
        for (double& d : dir) d = -d;
        if (lambda1 > 0.0) {
            // keep the direction inside the orthant the pseudo-gradient picks
            for (std::size_t m = 0; m < m_dims; ++m) {
                if (dir[m] * -pg[m] <= 0.0) dir[m] = 0.0;
            }
        }
        double dir_deriv = 0.0;
        for (std::size_t m = 0; m < m_dims; ++m) dir_deriv += pg[m] * dir[m];
        if (!(dir_deriv < 0.0)) {
            for (std::size_t m = 0; m < m_dims; ++m) dir[m] = -pg[m];
            dir_deriv = 0.0;
            for (std::size_t m = 0; m < m_dims; ++m) dir_deriv += pg[m] * dir[m];
        }

        // orthant each coordinate must not leave during the step
        std::vector<double> orthant(m_dims);
        for (std::size_t m = 0; m < m_dims; ++m) {
            orthant[m] = theta[m] != 0.0 ? sign(theta[m]) : sign(-pg[m]);
        }

        double step = 1.0;
        if (history.empty()) {
            double dn = 0.0;
            for (double d : dir) dn += d * d;
            dn = std::sqrt(dn);
            if (dn > 1.0) step = 1.0 / dn;
        }

        std::vector<double> next(m_dims);
        std::vector<double> next_grad;
        double next_f = 0.0;
        bool accepted = false;
        for (int ls = 0; ls < 60; ++ls) {
            for (std::size_t m = 0; m < m_dims; ++m) {
                double v = theta[m] + step * dir[m];
                if (lambda1 > 0.0 && v * orthant[m] < 0.0) v = 0.0;  // crossed zero
                next[m] = v;
            }
            next_f = obj.eval(next, next_grad);
            if (std::isfinite(next_f)) {
                double actual = next_f - f;
                double predicted = 0.0;
                for (std::size_t m = 0; m < m_dims; ++m) {
                    predicted += pg[m] * (next[m] - theta[m]);
                    actual += lambda1 * (std::fabs(next[m]) - std::fabs(theta[m]));
                }
                if (actual <= 1e-4 * predicted) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no further progress expressible in doubles

        CurvaturePair pair;
        pair.s.resize(m_dims);
        pair.y.resize(m_dims);
        double sy = 0.0;
        for (std::size_t m = 0; m < m_dims; ++m) {
            pair.s[m] = next[m] - theta[m];
            pair.y[m] = next_grad[m] - grad[m];
            sy += pair.s[m] * pair.y[m];
        }
        if (sy > 1e-12) {
            pair.rho = 1.0 / sy;
            history.push_back(std::move(pair));
            if (history.size() > static_cast<std::size_t>(opts.lbfgs_history)) {
                history.pop_front();
            }
        }
        theta = std::move(next);
        grad = std::move(next_grad);
        f = next_f;
    }

    if (!res.converged) {
        const std::vector<double> pg = pseudo_gradient(theta, grad, lambda1);
        res.grad_norm = inf_norm(pg);
        res.converged = res.grad_norm <= opts.tol;
    }
    res.theta = std::move(theta);
    res.iterations = iter;
    res.objective = -(f + lambda1 * l1_norm(res.theta));
    return res;
}

}  // namespace

FitResult train_l2(const std::vector<TrainingExample>& examples, double lambda2,
                   const TrainOptions& opts, int point_dims, int path_dims) {
    if (lambda2 < 0.0) throw std::invalid_argument("train_l2: lambda2 must be >= 0");
    return fit(examples, 0.0, lambda2, opts, point_dims, path_dims, nullptr);
}

FitResult train_l1(const std::vector<TrainingExample>& examples, double lambda1,
                   const TrainOptions& opts, int point_dims, int path_dims) {
    if (lambda1 < 0.0) throw std::invalid_argument("train_l1: lambda1 must be >= 0");
    return fit(examples, lambda1, 0.0, opts, point_dims, path_dims, nullptr);
}

double compute_lambda_max(const std::vector<TrainingExample>& examples, int point_dims,
                          int path_dims) {
    if (examples.empty()) throw std::invalid_argument("compute_lambda_max: no examples");
    const std::vector<double> origin(static_cast<std::size_t>(point_dims + path_dims), 0.0);
    const LikelihoodResult ll =
        log_likelihood_and_gradient(examples, origin, point_dims, path_dims);
    return inf_norm(ll.gradient);
}

int nonzero_count(const std::vector<double>& theta) {
    return static_cast<int>(std::count_if(theta.begin(), theta.end(),
                                          [](double x) { return x != 0.0; }));
}

namespace {

// Decode every holdout example and count label disagreements.
std::pair<double, double> holdout_errors(const std::vector<TrainingExample>& holdout,
                                         const std::vector<double>& theta, int point_dims,
                                         int path_dims) {
    long point_nodes = 0, path_nodes = 0, point_err = 0, path_err = 0;
    for (const TrainingExample& ex : holdout) {
        const Potentials pots = compute_potentials(ex.lattice, theta, point_dims, path_dims);
        const MatchResult decoded = viterbi_decode(ex.lattice, pots);
        for (int node = 0; node < ex.lattice.num_nodes(); ++node) {
            const bool wrong = decoded.states[static_cast<std::size_t>(node)] !=
                               ex.labels[static_cast<std::size_t>(node)];
            if (ex.lattice.node_is_point(node)) {
                ++point_nodes;
                point_err += wrong;
            } else {
                ++path_nodes;
                path_err += wrong;
            }
        }
    }
    return {point_nodes ? static_cast<double>(point_err) / point_nodes : 0.0,
            path_nodes ? static_cast<double>(path_err) / path_nodes : 0.0};
}

}  // namespace

SweepResult regularization_sweep(const std::vector<TrainingExample>& train,
                                 const std::vector<TrainingExample>& holdout, int num_points,
                                 double decay, Regularizer reg, const TrainOptions& opts,
                                 int point_dims, int path_dims) {
    if (holdout.empty()) throw std::invalid_argument("regularization_sweep: empty holdout");
    if (num_points < 2) throw std::invalid_argument("regularization_sweep: num_points < 2");
    if (!(decay > 0.0 && decay < 1.0)) {
        throw std::invalid_argument("regularization_sweep: decay must be in (0,1)");
    }

    SweepResult res;
    res.regularizer = reg;
    res.lambda_max = compute_lambda_max(train, point_dims, path_dims);

    std::vector<double> warm(static_cast<std::size_t>(point_dims + path_dims), 0.0);
    double lambda = res.lambda_max;
    int best_index = -1;
    for (int k = 0; k < num_points; ++k) {
        const FitResult f = reg == Regularizer::L1
                                ? fit(train, lambda, 0.0, opts, point_dims, path_dims, &warm)
                                : fit(train, 0.0, lambda, opts, point_dims, path_dims, &warm);
        warm = f.theta;
        const auto [pe, qe] = holdout_errors(holdout, f.theta, point_dims, path_dims);
        res.records.push_back({lambda, nonzero_count(f.theta), pe, qe, f.objective});
        // ties keep the earlier (larger) lambda, i.e. the sparser model
        if (best_index < 0 || pe < res.records[static_cast<std::size_t>(best_index)].holdout_point_error) {
            best_index = k;
            res.selected_lambda = lambda;
            res.selected_fit = f;
        }
        lambda *= decay;
    }
    return res;
}

namespace {

json registry_to_json(const FeatureRegistry& reg) {
    json entries = json::array();
    for (const FeatureDef& d : reg.entries) entries.push_back(d.name);
    return {{"class_vocabulary", reg.class_vocabulary},
            {"period_width_hours", reg.period_width_hours},
            {"cosine_mode", reg.cosine_mode == CosineMode::Similarity ? "similarity" : "one_minus"},
            {"entries", entries}};
}

}  // namespace

void save_model(const Model& model, const std::string& path) {
    json doc = {
        {"format", "mapmatch-model"},
        {"version", 1},
        {"feature_registry", registry_to_json(model.registry)},
        {"scaler", {{"min", model.scaler.min}, {"max", model.scaler.max}}},
        {"theta", model.theta},
        {"lattice_config",
         {{"radius", model.lattice_config.radius},
          {"max_radius", model.lattice_config.max_radius},
          {"max_point_states", model.lattice_config.max_point_states},
          {"max_paths", model.lattice_config.max_paths},
          {"slack", model.lattice_config.slack}}},
        {"training",
         {{"regularizer", model.regularizer},
          {"lambda", model.lambda},
          {"iterations", model.iterations},
          {"objective", model.objective},
          {"gradient_norm", model.grad_norm}}},
    };
    std::ofstream out(path);
    if (!out.is_open()) throw std::runtime_error("cannot write model file: " + path);
    out << doc.dump(1) << "\n";
}

Model load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in.is_open()) throw std::runtime_error("cannot open model file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw std::runtime_error("model parse error in " + path + ": " + e.what());
    }
    if (doc.value("format", "") != "mapmatch-model" || doc.value("version", 0) != 1) {
        throw std::runtime_error("unsupported model file: " + path);
    }

    Model model;
    const json& reg = doc.at("feature_registry");
    const CosineMode mode = reg.value("cosine_mode", "similarity") == std::string("one_minus")
                                ? CosineMode::OneMinus
                                : CosineMode::Similarity;
    model.registry = build_registry(reg.at("class_vocabulary").get<std::vector<std::string>>(),
                                    reg.at("period_width_hours").get<int>(), mode);
    const auto names = reg.at("entries").get<std::vector<std::string>>();
    if (names.size() != model.registry.entries.size()) {
        throw std::runtime_error("model registry entry count mismatch in " + path);
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] != model.registry.entries[i].name) {
            throw std::runtime_error("model registry entry mismatch at index " +
                                     std::to_string(i) + " in " + path);
        }
    }
    model.scaler.min = doc.at("scaler").at("min").get<std::vector<double>>();
    model.scaler.max = doc.at("scaler").at("max").get<std::vector<double>>();
    model.theta = doc.at("theta").get<std::vector<double>>();
    if (static_cast<int>(model.theta.size()) != model.registry.M() ||
        model.scaler.min.size() != model.theta.size() ||
        model.scaler.max.size() != model.theta.size()) {
        throw std::runtime_error("model dimension mismatch in " + path);
    }
    const json& lc = doc.at("lattice_config");
    model.lattice_config.radius = lc.at("radius").get<double>();
    model.lattice_config.max_radius = lc.at("max_radius").get<double>();
    model.lattice_config.max_point_states = lc.at("max_point_states").get<int>();
    model.lattice_config.max_paths = lc.at("max_paths").get<int>();
    model.lattice_config.slack = lc.at("slack").get<double>();
    const json& tr = doc.at("training");
    model.regularizer = tr.at("regularizer").get<std::string>();
    model.lambda = tr.at("lambda").get<double>();
    model.iterations = tr.at("iterations").get<int>();
    model.objective = tr.at("objective").get<double>();
    model.grad_norm = tr.at("gradient_norm").get<double>();
    return model;
}

}  // namespace mapmatch
