#include "weaktomo/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "weaktomo/weaktomo.hpp"

namespace weaktomo {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config reading

class ConfigReader {
public:
    explicit ConfigReader(const std::string &text) : text_(text) {}

    [[noreturn]] void error(const std::string &path, const std::string &message) const {
        fail(ErrorCode::ConfigError, "line " + std::to_string(line_of(path)) + ": field '" + path + "': " + message);
    }

    // Best effort: follow the path components through the source text.
    int line_of(const std::string &path) const {
        std::size_t pos = 0;
        std::size_t found = std::string::npos;
        std::stringstream ss(path);
        std::string part;
        while (std::getline(ss, part, '.')) {
            const std::size_t bracket = part.find('[');
            if (bracket != std::string::npos) part = part.substr(0, bracket);
            const std::size_t at = text_.find("\"" + part + "\"", pos);
            if (at == std::string::npos) break;
            found = pos = at;
        }
        if (found == std::string::npos) return 1;
        return 1 + static_cast<int>(std::count(text_.begin(), text_.begin() + static_cast<std::ptrdiff_t>(found), '\n'));
    }

    void check_keys(const json &obj, const std::string &path, std::initializer_list<const char *> allowed) const {
        if (!obj.is_object()) error(path, "expected an object");
        for (const auto &item : obj.items()) {
            bool ok = false;
            for (const char *a : allowed) ok = ok || item.key() == a;
            if (!ok) error(join(path, item.key()), "unknown key");
        }
    }

    static std::string join(const std::string &path, const std::string &key) {
        return path.empty() ? key : path + "." + key;
    }

    std::uint64_t get_u64(const json &v, const std::string &path) const {
        if (!v.is_number_unsigned()) error(path, "expected a non-negative integer");
        return v.get<std::uint64_t>();
    }

    int get_int(const json &v, const std::string &path, int lo, int hi) const {
        if (!v.is_number_integer()) error(path, "expected an integer");
        const auto x = v.get<std::int64_t>();
        if (x < lo || x > hi) error(path, "must be in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
        return static_cast<int>(x);
    }

    double get_double(const json &v, const std::string &path) const {
        if (!v.is_number()) error(path, "expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x)) error(path, "must be finite");
        return x;
    }

    bool get_bool(const json &v, const std::string &path) const {
        if (!v.is_boolean()) error(path, "expected true or false");
        return v.get<bool>();
    }

    std::string get_string(const json &v, const std::string &path) const {
        if (!v.is_string()) error(path, "expected a string");
        return v.get<std::string>();
    }

    // A complex entry is a real number or a [re, im] pair.
    cplx get_complex(const json &v, const std::string &path) const {
        if (v.is_number()) return {get_double(v, path), 0.0};
        if (v.is_array() && v.size() == 2) return {get_double(v[0], path + "[0]"), get_double(v[1], path + "[1]")};
        error(path, "expected a number or a [re, im] pair");
    }

private:
    const std::string &text_;
};

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json complex_matrix_json(const ComplexMatrix &m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_json(m(i, j)));
        rows.push_back(row);
    }
    return rows;
}

json real_matrix_json(const RealMatrix &m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(row);
    }
    return rows;
}

}  // namespace

ExperimentConfig parse_config(const std::string &text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error &e) {
        const std::size_t upto = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
        const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        const std::size_t last_nl = text.rfind('\n', upto > 0 ? upto - 1 : 0);
        const std::size_t column = (last_nl == std::string::npos || last_nl >= upto) ? upto + 1 : upto - last_nl;
        fail(ErrorCode::ConfigError,
             "line " + std::to_string(line) + ", column " + std::to_string(column) + ": invalid JSON: " + e.what());
    }
    const ConfigReader r(text);
    if (!root.is_object()) r.error("", "top level must be an object");
    r.check_keys(root, "", {"schema_version", "scheme", "dim", "seed", "noise", "state", "probe", "post_count",
                            "repetitions", "scan", "output", "threads"});

    ExperimentConfig c;
    if (!root.contains("schema_version")) r.error("schema_version", "required");
    c.schema_version = r.get_int(root["schema_version"], "schema_version", 0, 1 << 20);
    if (c.schema_version != kConfigSchemaVersion) {
        r.error("schema_version", "unsupported version " + std::to_string(c.schema_version) + " (expected " +
                                      std::to_string(kConfigSchemaVersion) + ")");
    }
    if (root.contains("scheme")) {
        c.scheme = r.get_string(root["scheme"], "scheme");
        if (c.scheme != "standard" && c.scheme != "lb" && c.scheme != "wu") {
            r.error("scheme", "must be one of standard, lb, wu");
        }
    }
    if (!root.contains("dim")) r.error("dim", "required");
    c.dim = r.get_int(root["dim"], "dim", 2, 64);
    const int n = c.dim;
    if (root.contains("seed")) c.seed = r.get_u64(root["seed"], "seed");
    if (root.contains("threads")) c.threads = static_cast<unsigned>(r.get_int(root["threads"], "threads", 0, 1024));
    if (root.contains("repetitions")) {
        c.repetitions = r.get_u64(root["repetitions"], "repetitions");
        if (c.repetitions < 1) r.error("repetitions", "must be at least 1");
    }

    if (root.contains("noise")) {
        const json &nz = root["noise"];
        r.check_keys(nz, "noise", {"delta_w", "ensemble_size", "exact"});
        if (nz.contains("delta_w")) {
            c.noise.delta_w = r.get_double(nz["delta_w"], "noise.delta_w");
            if (!(c.noise.delta_w > 0.0)) r.error("noise.delta_w", "must be positive");
        }
        if (nz.contains("ensemble_size")) {
            c.noise.ensemble_size = r.get_u64(nz["ensemble_size"], "noise.ensemble_size");
            if (c.noise.ensemble_size < 1) r.error("noise.ensemble_size", "must be at least 1");
        }
        if (nz.contains("exact")) c.noise.exact = r.get_bool(nz["exact"], "noise.exact");
    }

    c.state.rank = n;
    if (root.contains("state")) {
        const json &st = root["state"];
        r.check_keys(st, "state", {"seed", "rank", "matrix"});
        if (st.contains("matrix")) {
            if (st.contains("seed") || st.contains("rank")) r.error("state.matrix", "cannot be combined with seed or rank");
            const json &m = st["matrix"];
            if (!m.is_array() || static_cast<int>(m.size()) != n) r.error("state.matrix", "expected " + std::to_string(n) + " rows");
            ComplexMatrix rho(n, n);
            for (int i = 0; i < n; ++i) {
                const std::string row_path = "state.matrix[" + std::to_string(i) + "]";
                if (!m[i].is_array() || static_cast<int>(m[i].size()) != n) r.error(row_path, "expected " + std::to_string(n) + " entries");
                for (int j = 0; j < n; ++j) rho(i, j) = r.get_complex(m[i][j], row_path + "[" + std::to_string(j) + "]");
            }
            const DensityCheck check = check_density(rho);
            if (!check.ok()) {
                r.error("state.matrix", "not a density matrix (hermiticity error " + std::to_string(check.hermiticity_error) +
                                            ", trace error " + std::to_string(check.trace_error) + ", min eigenvalue " +
                                            std::to_string(check.min_eigenvalue) + ")");
            }
            c.state.matrix = rho;
            c.state.rank = 0;
        } else {
            if (st.contains("seed")) c.state.seed = r.get_u64(st["seed"], "state.seed");
            if (st.contains("rank")) c.state.rank = r.get_int(st["rank"], "state.rank", 1, n);
        }
    }

    if (root.contains("probe")) {
        const json &pr = root["probe"];
        r.check_keys(pr, "probe", {"kind", "amplitudes", "weights"});
        if (!pr.contains("kind")) r.error("probe.kind", "required");
        const std::string kind = r.get_string(pr["kind"], "probe.kind");
        if (kind == "mub") {
            c.probe.kind = ProbeKind::Mub;
            if (pr.contains("amplitudes") || pr.contains("weights")) r.error("probe", "mub takes no amplitudes or weights");
        } else if (kind == "amplitudes") {
            c.probe.kind = ProbeKind::Amplitudes;
            if (pr.contains("weights")) r.error("probe.weights", "not allowed with kind amplitudes");
            if (!pr.contains("amplitudes")) r.error("probe.amplitudes", "required");
            const json &a = pr["amplitudes"];
            if (!a.is_array() || static_cast<int>(a.size()) != n) r.error("probe.amplitudes", "expected " + std::to_string(n) + " entries");
            c.probe.amplitudes.resize(n);
            for (int i = 0; i < n; ++i) {
                c.probe.amplitudes(i) = r.get_complex(a[i], "probe.amplitudes[" + std::to_string(i) + "]");
                if (!(std::abs(c.probe.amplitudes(i)) > 0.0)) {
                    r.error("probe.amplitudes[" + std::to_string(i) + "]", "overlap with the eigenbasis must not vanish");
                }
            }
        } else if (kind == "simplex") {
            c.probe.kind = ProbeKind::Simplex;
            if (pr.contains("amplitudes")) r.error("probe.amplitudes", "not allowed with kind simplex");
            if (!pr.contains("weights")) r.error("probe.weights", "required");
            const json &w = pr["weights"];
            if (!w.is_array() || static_cast<int>(w.size()) != n) r.error("probe.weights", "expected " + std::to_string(n) + " entries");
            double total = 0.0;
            for (int i = 0; i < n; ++i) {
                const std::string path = "probe.weights[" + std::to_string(i) + "]";
                const double p = r.get_double(w[i], path);
                if (!(p > 0.0)) r.error(path, "must be positive");
                c.probe.weights.push_back(p);
                total += p;
            }
            if (std::abs(total - 1.0) > 1e-9) r.error("probe.weights", "must sum to 1");
        } else {
            r.error("probe.kind", "must be one of mub, amplitudes, simplex");
        }
    }

    c.post_count = n;
    if (root.contains("post_count")) c.post_count = r.get_int(root["post_count"], "post_count", 1, n);

    if (root.contains("scan")) {
        const json &sc = root["scan"];
        r.check_keys(sc, "scan", {"divisions", "empirical_repetitions"});
        if (sc.contains("divisions")) c.scan.divisions = r.get_int(sc["divisions"], "scan.divisions", 0, 1 << 20);
        if (sc.contains("empirical_repetitions")) {
            c.scan.empirical_repetitions = r.get_u64(sc["empirical_repetitions"], "scan.empirical_repetitions");
        }
    }

    if (root.contains("output")) {
        const json &out = root["output"];
        r.check_keys(out, "output", {"path", "format"});
        if (out.contains("path")) c.output.path = r.get_string(out["path"], "output.path");
        if (out.contains("format")) {
            c.output.format = r.get_string(out["format"], "output.format");
            if (c.output.format != "json" && c.output.format != "csv") r.error("output.format", "must be json or csv");
        }
    }
    return c;
}

ExperimentConfig load_config(const std::string &path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::ConfigError, "cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return parse_config(ss.str());
    } catch (const Error &e) {
        // prefix the file name so diagnostics read path:line
        fail(ErrorCode::ConfigError, path + ": " + std::string(e.what()).substr(std::string("ConfigError: ").size()));
    }
}

json ExperimentConfig::to_json() const {
    json j;
    j["schema_version"] = schema_version;
    j["scheme"] = scheme;
    j["dim"] = dim;
    j["seed"] = seed;
    j["threads"] = threads;
    j["repetitions"] = repetitions;
    j["noise"] = {{"delta_w", noise.delta_w}, {"ensemble_size", noise.ensemble_size}, {"exact", noise.exact}};
    if (state.matrix) {
        j["state"] = {{"matrix", complex_matrix_json(*state.matrix)}};
    } else {
        j["state"] = {{"rank", state.rank}};
        if (state.seed) j["state"]["seed"] = *state.seed;
    }
    switch (probe.kind) {
        case ProbeKind::Mub: j["probe"] = {{"kind", "mub"}}; break;
        case ProbeKind::Amplitudes: {
            json a = json::array();
            for (Eigen::Index i = 0; i < probe.amplitudes.size(); ++i) a.push_back(complex_json(probe.amplitudes(i)));
            j["probe"] = {{"kind", "amplitudes"}, {"amplitudes", a}};
            break;
        }
        case ProbeKind::Simplex: j["probe"] = {{"kind", "simplex"}, {"weights", probe.weights}}; break;
    }
    j["post_count"] = post_count;
    j["scan"] = {{"divisions", scan.divisions}, {"empirical_repetitions", scan.empirical_repetitions}};
    j["output"] = {{"path", output.path}, {"format", output.format}};
    return j;
}

RunSeeds run_seeds(const ExperimentConfig &config) {
    RunSeeds s;
    s.root = config.seed;
    s.state = config.state.seed.value_or(derive_seed(config.seed, 0));
    s.noise = derive_seed(config.seed, 1);
    return s;
}

// ---------------------------------------------------------------------------
// Runners

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

DensityMatrix truth_state(const ExperimentConfig &config, const RunSeeds &seeds) {
    if (config.state.matrix) return DensityMatrix(*config.state.matrix);
    return random_density(config.dim, config.state.rank, seeds.state);
}

LBConfiguration lb_probe(const ExperimentConfig &config) {
    const int n = config.dim;
    StateBasis a = computational_basis(n);
    switch (config.probe.kind) {
        case ProbeKind::Mub: return LBConfiguration::from_weights(std::move(a), std::vector<double>(static_cast<std::size_t>(n), 1.0 / n));
        case ProbeKind::Amplitudes: return LBConfiguration(std::move(a), PureState::normalized(config.probe.amplitudes));
        case ProbeKind::Simplex: return LBConfiguration::from_weights(std::move(a), config.probe.weights);
    }
    fail(ErrorCode::ConfigError, "unknown probe kind");
}

StateBasis wu_post_states(const ExperimentConfig &config) {
    StateBasis post = fourier_basis(config.dim);
    post.resize(static_cast<std::size_t>(config.post_count), post.front());
    return post;
}

struct Repetition {
    ComplexMatrix estimate;
    ComplexMatrix truth;
    std::vector<std::string> flags;
    RealVector flat;   // flat coordinates of the estimate (full reconstructions)
    RealVector weak;   // lb only
};

// Volume from rows of `samples`: exp(log_scale) sqrt(det Cov), with a
// batch-means standard error when enough samples are available.
std::pair<double, double> covariance_volume(const RealMatrix &samples, double log_scale) {
    const auto k = static_cast<std::size_t>(samples.cols());
    const double v = std::exp(log_scale + log_sqrt_det(sample_covariance(samples)));
    const std::size_t reps = static_cast<std::size_t>(samples.rows());
    const std::size_t batches = std::min<std::size_t>(20, reps / (k + 2));
    double err = 0.0;
    if (batches >= 2) {
        std::vector<double> per;
        const std::size_t size = reps / batches;
        for (std::size_t b = 0; b < batches; ++b) {
            const RealMatrix block =
                samples.middleRows(static_cast<Eigen::Index>(b * size), static_cast<Eigen::Index>(size));
            per.push_back(std::exp(log_scale + log_sqrt_det(sample_covariance(block))));
        }
        err = mean_and_error(per).std_error;
    }
    return {v, err};
}

void keep_finite(std::optional<double> &field, std::vector<std::string> &flags) {
    if (field && !std::isfinite(*field)) {
        field.reset();
        if (std::find(flags.begin(), flags.end(), "non_finite_value") == flags.end()) flags.emplace_back("non_finite_value");
    }
}

TomographyReport run_tomography(const ExperimentConfig &config, const std::string &command) {
    const auto t0 = Clock::now();
    const int n = config.dim;
    const int k = state_space_dim(n);
    const RunSeeds seeds = run_seeds(config);
    const DensityMatrix rho = truth_state(config, seeds);
    const NoiseModel base{config.noise.delta_w, config.noise.ensemble_size, seeds.noise};
    const bool exact = config.noise.exact;
    const auto reps = static_cast<std::size_t>(config.repetitions);

    TomographyReport report;
    report.command = command;
    report.scheme = config.scheme;
    report.dim = n;
    report.repetitions = config.repetitions;
    report.reconstruction = "full";
    report.seeds = seeds;
    report.config = config.to_json();

    std::vector<Repetition> results(reps);
    std::function<void(std::size_t)> body;

    std::optional<OperatorBasis> gm;
    std::optional<LBConfiguration> lb;
    std::optional<WuConfiguration> wu;
    if (config.scheme == "standard") {
        gm.emplace(gell_mann_basis(n));
        body = [&](std::size_t r) {
            RealVector x(k);
            if (exact) {
                x = expectation_vector(rho.matrix(), *gm);
            } else {
                const NoiseModel noise = base.derived(r);
                for (int a = 0; a < k; ++a) x(a) = weak_expectation(rho, (*gm)[static_cast<std::size_t>(a)], noise.derived(static_cast<std::uint64_t>(a))).estimate;
            }
            StateEstimate est = standard_reconstruct(x, *gm);
            results[r].estimate = est.rho;
            results[r].flags = est.flags;
        };
    } else if (config.scheme == "lb") {
        lb.emplace(lb_probe(config));
        body = [&](std::size_t r) {
            const LBWeakData data = exact ? lb_exact_weak_data(rho, *lb) : lb_simulated_weak_data(rho, *lb, base.derived(r));
            StateEstimate est = lb_reconstruct(data, *lb);
            results[r].estimate = est.rho;
            results[r].flags = est.flags;
            results[r].weak = lb_weak_coordinates(data.w);
        };
    } else {
        wu.emplace(computational_basis(n), wu_post_states(config));
        if (!wu->post_family_complete()) report.reconstruction = "post-selection block";
        body = [&](std::size_t r) {
            const WuWeakData data = exact ? wu_exact_data(rho, *wu) : wu_simulated_data(rho, *wu, base.derived(r));
            if (wu->post_family_complete()) {
                // a-basis is computational, so the a-basis estimate is already in place
                StateEstimate est = wu_reconstruct_in_a(data, *wu);
                results[r].estimate = est.rho;
                results[r].flags = est.flags;
            } else {
                results[r].estimate = wu_reconstruct_in_b(data, *wu);
                const ComplexMatrix bm = basis_matrix(wu->post_states());
                results[r].truth = bm.adjoint() * rho.matrix() * bm;
            }
        };
    }

    parallel_for(
        reps,
        [&](std::size_t r) {
            body(r);
            if (results[r].truth.size() == 0) {
                results[r].truth = rho.matrix();
                results[r].flat = flat_coordinates(results[r].estimate);
            }
        },
        config.threads);

    const ComplexMatrix &truth = results.front().truth;
    report.truth = truth;
    report.mean_estimate = ComplexMatrix::Zero(truth.rows(), truth.cols());
    report.per_entry_residuals = RealMatrix::Zero(truth.rows(), truth.cols());
    std::set<std::string> flags;
    double frob_sum = 0.0;
    for (const Repetition &rep : results) {
        report.mean_estimate += rep.estimate;
        report.per_entry_residuals += (rep.estimate - truth).cwiseAbs();
        const double f = frobenius_distance(rep.estimate, truth);
        frob_sum += f;
        report.frobenius_distance_max = std::max(report.frobenius_distance_max, f);
        if (!rep.flags.empty()) ++report.flagged_repetitions;
        flags.insert(rep.flags.begin(), rep.flags.end());
    }
    report.mean_estimate /= static_cast<double>(reps);
    report.per_entry_residuals /= static_cast<double>(reps);
    report.frobenius_distance = frob_sum / static_cast<double>(reps);
    report.flags.assign(flags.begin(), flags.end());

    const FlatMetric flat = flat_metric(n);
    if (!exact && reps >= static_cast<std::size_t>(k) + 2 && report.reconstruction == "full") {
        RealMatrix state(static_cast<Eigen::Index>(reps), k);
        for (std::size_t r = 0; r < reps; ++r) state.row(static_cast<Eigen::Index>(r)) = results[r].flat.transpose();
        const auto [state_volume, state_error] = covariance_volume(state, flat.log_det_sqrt);
        report.state_space_error_volume = state_volume;
        if (lb) {
            RealMatrix weak(static_cast<Eigen::Index>(reps), k);
            for (std::size_t r = 0; r < reps; ++r) weak.row(static_cast<Eigen::Index>(r)) = results[r].weak.transpose();
            const auto [volume, error] = covariance_volume(weak, 0.5 * std::log(lb_metric_det(*lb, flat)));
            report.empirical_error_volume = volume;
            report.empirical_error_volume_std_error = error;
            report.pushforward_error_volume =
                std::exp(0.5 * std::log(lb_pushforward_metric_det(*lb, flat)) + log_sqrt_det(sample_covariance(weak)));
        } else {
            report.empirical_error_volume = state_volume;
            report.empirical_error_volume_std_error = state_error;
        }
    }
    if (lb) {
        report.metric_det = lb_metric_det(*lb, flat);
        report.analytic_error_volume = lb_error_volume(*lb, config.noise.delta_w, flat);
        report.analytic_ensemble_error_volume =
            lb_error_volume(*lb, config.noise.delta_w / std::sqrt(static_cast<double>(config.noise.ensemble_size)), flat);
        report.probe_weights = lb->weights();
    }
    if (wu) {
        const FeasibilityVerdict v = wu_feasibility(n, config.post_count);
        FeasibilityInfo info;
        info.verdict = std::string(feasibility_name(v.verdict));
        info.real_data = v.real_data;
        info.required = v.required;
        if (v.verdict == Feasibility::ExactMatch) {
            info.summary = "exact-match";
        } else if (!v.match_possible_for_dim) {
            info.summary = "never exact-match";
        } else {
            info.summary = "exact-match only at M = " + std::to_string((n + 1) / 2);
        }
        report.feasibility = info;
    }
    for (auto *field : {&report.empirical_error_volume, &report.empirical_error_volume_std_error,
                        &report.state_space_error_volume, &report.pushforward_error_volume,
                        &report.analytic_error_volume, &report.analytic_ensemble_error_volume, &report.metric_det}) {
        keep_finite(*field, report.flags);
    }
    report.wall_time_s = seconds_since(t0);
    return report;
}

}  // namespace

TomographyReport run_reconstruct(const ExperimentConfig &config) { return run_tomography(config, "reconstruct"); }

TomographyReport run_error_volume(const ExperimentConfig &config) {
    if (config.scheme != "lb") fail(ErrorCode::ConfigError, "field 'scheme': error-volume requires scheme lb");
    if (config.noise.exact) fail(ErrorCode::ConfigError, "field 'noise.exact': error-volume needs a noisy ensemble");
    const auto needed = static_cast<std::uint64_t>(state_space_dim(config.dim)) + 2;
    if (config.repetitions < needed) {
        fail(ErrorCode::ConfigError, "field 'repetitions': error-volume needs at least " + std::to_string(needed));
    }
    return run_tomography(config, "error-volume");
}

ScanReport run_optimality_scan(const ExperimentConfig &config) {
    const auto t0 = Clock::now();
    if (config.scheme != "lb") fail(ErrorCode::ConfigError, "field 'scheme': optimality-scan requires scheme lb");
    const int n = config.dim;
    const int divisions = config.scan.divisions;
    if (divisions < n) {
        fail(ErrorCode::ConfigError, "field 'scan.divisions': grid of " + std::to_string(divisions) +
                                         " divisions has no interior point for N = " + std::to_string(n));
    }
    const auto empirical = static_cast<std::size_t>(config.scan.empirical_repetitions);
    if (empirical > 0 && empirical < static_cast<std::size_t>(state_space_dim(n)) + 2) {
        fail(ErrorCode::ConfigError, "field 'scan.empirical_repetitions': needs at least " +
                                         std::to_string(state_space_dim(n) + 2) + " or 0");
    }
    if (config.noise.exact && empirical > 0) {
        fail(ErrorCode::ConfigError, "field 'noise.exact': empirical volumes need a noisy ensemble");
    }

    ScanReport report;
    report.dim = n;
    report.delta_w = config.noise.delta_w;
    report.divisions = divisions;
    report.seeds = run_seeds(config);
    report.config = config.to_json();
    const FlatMetric flat = flat_metric(n);
    const StateBasis a = computational_basis(n);
    std::optional<DensityMatrix> rho;
    if (empirical > 0) rho.emplace(truth_state(config, report.seeds));

    for_each_interior_composition(n, divisions, [&](const std::vector<int> &parts) {
        ScanRow row;
        for (int part : parts) row.weights.push_back(static_cast<double>(part) / divisions);
        const LBConfiguration cfg = LBConfiguration::from_weights(a, row.weights);
        row.analytic_volume = lb_error_volume(cfg, config.noise.delta_w, flat);
        if (empirical > 0) {
            const NoiseModel noise{config.noise.delta_w, config.noise.ensemble_size,
                                   derive_seed(report.seeds.noise, static_cast<std::uint64_t>(report.rows.size()))};
            const EmpiricalErrorVolume ev = lb_monte_carlo_error_volume(*rho, cfg, noise, empirical, 20, config.threads);
            row.empirical_volume = ev.weak_box_volume;
            row.empirical_volume_std_error = ev.weak_box_volume_error;
        }
        report.rows.push_back(std::move(row));
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < report.rows.size(); ++i) {
        if (report.rows[i].analytic_volume < report.rows[best].analytic_volume) best = i;
    }
    report.rows[best].argmin = true;

    OptimalityScanSettings settings;
    settings.delta_w = config.noise.delta_w;
    const OptimalityReport refined = lb_optimality_scan(n, a, settings);
    report.refined_argmin = refined.argmin;
    report.refined_min_volume = refined.min_volume;
    report.refined_distance_to_uniform = refined.distance_to_uniform;
    report.certified = refined.certified;
    report.wall_time_s = seconds_since(t0);
    return report;
}

MubReport run_mub(const ExperimentConfig &config) {
    const auto t0 = Clock::now();
    const BasisFamily family = mub_prime(config.dim);
    MubReport report;
    report.dim = config.dim;
    report.bases = family.bases;
    const auto count = static_cast<Eigen::Index>(family.bases.size());
    report.deviation_table = RealMatrix::Zero(count, count);
    for (Eigen::Index p = 0; p < count; ++p)
        for (Eigen::Index q = 0; q < count; ++q)
            if (p != q) {
                report.deviation_table(p, q) =
                    unbiasedness_deviation(family.bases[static_cast<std::size_t>(p)], family.bases[static_cast<std::size_t>(q)]);
            }
    report.max_pairwise_deviation = report.deviation_table.maxCoeff();
    if (report.max_pairwise_deviation > tol::kExact) report.flags.emplace_back("not_unbiased");
    report.config = config.to_json();
    report.wall_time_s = seconds_since(t0);
    return report;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

bool same(const ComplexMatrix &a, const ComplexMatrix &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}
bool same(const RealMatrix &a, const RealMatrix &b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

[[noreturn]] void schema_error(const std::string &what) { fail(ErrorCode::ConfigError, "report: " + what); }

const json &field(const json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
    return j.at(key);
}

ComplexMatrix complex_matrix_from(const json &j) {
    if (!j.is_array() || j.empty()) schema_error("expected a complex matrix");
    ComplexMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        for (std::size_t c = 0; c < j[i].size(); ++c)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = cplx(j[i][c].at(0).get<double>(), j[i][c].at(1).get<double>());
    return m;
}

RealMatrix real_matrix_from(const json &j) {
    if (!j.is_array() || j.empty()) schema_error("expected a real matrix");
    RealMatrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        for (std::size_t c = 0; c < j[i].size(); ++c) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = j[i][c].get<double>();
    return m;
}

std::optional<double> optional_double(const json &j, const char *key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

json seeds_json(const RunSeeds &s) { return {{"root", s.root}, {"state", s.state}, {"noise", s.noise}}; }

RunSeeds seeds_from(const json &j) {
    return {field(j, "root").get<std::uint64_t>(), field(j, "state").get<std::uint64_t>(), field(j, "noise").get<std::uint64_t>()};
}

std::vector<std::string> strings_from(const json &j) {
    std::vector<std::string> out;
    if (j.is_null()) return out;
    for (const auto &s : j) out.push_back(s.get<std::string>());
    return out;
}

}  // namespace

bool TomographyReport::operator==(const TomographyReport &o) const {
    return command == o.command && scheme == o.scheme && dim == o.dim && repetitions == o.repetitions &&
           reconstruction == o.reconstruction && same(truth, o.truth) && same(mean_estimate, o.mean_estimate) &&
           frobenius_distance == o.frobenius_distance && frobenius_distance_max == o.frobenius_distance_max &&
           same(per_entry_residuals, o.per_entry_residuals) && empirical_error_volume == o.empirical_error_volume &&
           empirical_error_volume_std_error == o.empirical_error_volume_std_error &&
           state_space_error_volume == o.state_space_error_volume &&
           pushforward_error_volume == o.pushforward_error_volume && analytic_error_volume == o.analytic_error_volume &&
           analytic_ensemble_error_volume == o.analytic_ensemble_error_volume &&
           metric_det == o.metric_det && probe_weights == o.probe_weights && feasibility == o.feasibility &&
           flags == o.flags && flagged_repetitions == o.flagged_repetitions && seeds == o.seeds && config == o.config &&
           wall_time_s == o.wall_time_s;
}

bool ScanReport::operator==(const ScanReport &o) const {
    return dim == o.dim && delta_w == o.delta_w && divisions == o.divisions && rows == o.rows &&
           refined_argmin == o.refined_argmin && refined_min_volume == o.refined_min_volume &&
           refined_distance_to_uniform == o.refined_distance_to_uniform && certified == o.certified &&
           seeds == o.seeds && config == o.config && wall_time_s == o.wall_time_s;
}

json to_json(const TomographyReport &r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = r.command;
    j["scheme"] = r.scheme;
    j["dim"] = r.dim;
    j["repetitions"] = r.repetitions;
    j["reconstruction"] = r.reconstruction;
    j["truth"] = complex_matrix_json(r.truth);
    j["mean_estimate"] = complex_matrix_json(r.mean_estimate);
    j["frobenius_distance"] = {{"mean", r.frobenius_distance}, {"max", r.frobenius_distance_max}};
    j["per_entry_residuals"] = real_matrix_json(r.per_entry_residuals);
    json empirical = json::object();
    if (r.empirical_error_volume) empirical["error_volume"] = *r.empirical_error_volume;
    if (r.empirical_error_volume_std_error) empirical["error_volume_std_error"] = *r.empirical_error_volume_std_error;
    if (r.state_space_error_volume) empirical["state_space_error_volume"] = *r.state_space_error_volume;
    if (r.pushforward_error_volume) empirical["pushforward_error_volume"] = *r.pushforward_error_volume;
    j["empirical"] = empirical;
    if (r.analytic_error_volume || r.metric_det || r.probe_weights) {
        json analytic = json::object();
        if (r.analytic_error_volume) analytic["error_volume"] = *r.analytic_error_volume;
        if (r.analytic_ensemble_error_volume) analytic["ensemble_error_volume"] = *r.analytic_ensemble_error_volume;
        if (r.metric_det) analytic["metric_det"] = *r.metric_det;
        if (r.probe_weights) analytic["probe_weights"] = *r.probe_weights;
        j["analytic"] = analytic;
    }
    if (r.feasibility) {
        j["feasibility"] = {{"verdict", r.feasibility->verdict},
                            {"summary", r.feasibility->summary},
                            {"real_data", r.feasibility->real_data},
                            {"required", r.feasibility->required}};
    }
    j["validity"] = {{"valid", r.valid()}, {"flags", r.flags}, {"flagged_repetitions", r.flagged_repetitions}};
    j["seeds"] = seeds_json(r.seeds);
    j["config"] = r.config;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

TomographyReport tomography_report_from_json(const json &j) {
    if (field(j, "schema_version").get<int>() != kReportSchemaVersion) schema_error("unsupported schema_version");
    TomographyReport r;
    r.command = field(j, "command").get<std::string>();
    r.scheme = field(j, "scheme").get<std::string>();
    r.dim = field(j, "dim").get<int>();
    r.repetitions = field(j, "repetitions").get<std::uint64_t>();
    r.reconstruction = field(j, "reconstruction").get<std::string>();
    r.truth = complex_matrix_from(field(j, "truth"));
    r.mean_estimate = complex_matrix_from(field(j, "mean_estimate"));
    r.frobenius_distance = field(field(j, "frobenius_distance"), "mean").get<double>();
    r.frobenius_distance_max = field(field(j, "frobenius_distance"), "max").get<double>();
    r.per_entry_residuals = real_matrix_from(field(j, "per_entry_residuals"));
    const json &e = field(j, "empirical");
    if (!e.is_null()) {
        r.empirical_error_volume = optional_double(e, "error_volume");
        r.empirical_error_volume_std_error = optional_double(e, "error_volume_std_error");
        r.state_space_error_volume = optional_double(e, "state_space_error_volume");
        r.pushforward_error_volume = optional_double(e, "pushforward_error_volume");
    }
    if (j.contains("analytic")) {
        const json &a = j.at("analytic");
        r.analytic_error_volume = optional_double(a, "error_volume");
        r.analytic_ensemble_error_volume = optional_double(a, "ensemble_error_volume");
        r.metric_det = optional_double(a, "metric_det");
        if (a.contains("probe_weights")) r.probe_weights = a.at("probe_weights").get<std::vector<double>>();
    }
    if (j.contains("feasibility")) {
        const json &f = j.at("feasibility");
        r.feasibility = FeasibilityInfo{field(f, "verdict").get<std::string>(), field(f, "summary").get<std::string>(),
                                        field(f, "real_data").get<long>(), field(f, "required").get<long>()};
    }
    const json &v = field(j, "validity");
    r.flags = strings_from(field(v, "flags"));
    r.flagged_repetitions = field(v, "flagged_repetitions").get<std::uint64_t>();
    r.seeds = seeds_from(field(j, "seeds"));
    r.config = field(j, "config");
    r.wall_time_s = field(j, "wall_time_s").get<double>();
    return r;
}

json to_json(const ScanReport &r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "optimality-scan";
    j["scheme"] = "lb";
    j["dim"] = r.dim;
    j["delta_w"] = r.delta_w;
    j["divisions"] = r.divisions;
    json rows = json::array();
    for (const ScanRow &row : r.rows) {
        json jr = {{"weights", row.weights}, {"analytic_volume", row.analytic_volume}, {"argmin", row.argmin}};
        if (row.empirical_volume) jr["empirical_volume"] = *row.empirical_volume;
        if (row.empirical_volume_std_error) jr["empirical_volume_std_error"] = *row.empirical_volume_std_error;
        rows.push_back(jr);
    }
    j["rows"] = rows;
    j["refined"] = {{"argmin", r.refined_argmin},
                    {"min_volume", r.refined_min_volume},
                    {"distance_to_uniform", r.refined_distance_to_uniform},
                    {"certified", r.certified}};
    j["seeds"] = seeds_json(r.seeds);
    j["config"] = r.config;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

ScanReport scan_report_from_json(const json &j) {
    if (field(j, "schema_version").get<int>() != kReportSchemaVersion) schema_error("unsupported schema_version");
    ScanReport r;
    r.dim = field(j, "dim").get<int>();
    r.delta_w = field(j, "delta_w").get<double>();
    r.divisions = field(j, "divisions").get<int>();
    for (const json &jr : field(j, "rows")) {
        ScanRow row;
        row.weights = field(jr, "weights").get<std::vector<double>>();
        row.analytic_volume = field(jr, "analytic_volume").get<double>();
        row.argmin = field(jr, "argmin").get<bool>();
        row.empirical_volume = optional_double(jr, "empirical_volume");
        row.empirical_volume_std_error = optional_double(jr, "empirical_volume_std_error");
        r.rows.push_back(row);
    }
    const json &refined = field(j, "refined");
    r.refined_argmin = field(refined, "argmin").get<std::vector<double>>();
    r.refined_min_volume = field(refined, "min_volume").get<double>();
    r.refined_distance_to_uniform = field(refined, "distance_to_uniform").get<double>();
    r.certified = field(refined, "certified").get<bool>();
    r.seeds = seeds_from(field(j, "seeds"));
    r.config = field(j, "config");
    r.wall_time_s = field(j, "wall_time_s").get<double>();
    return r;
}

json to_json(const MubReport &r) {
    json j;
    j["schema_version"] = kReportSchemaVersion;
    j["command"] = "mub";
    j["dim"] = r.dim;
    j["basis_count"] = r.bases.size();
    json bases = json::array();
    for (const StateBasis &b : r.bases) {
        json states = json::array();
        for (const PureState &s : b) {
            json amps = json::array();
            for (int k = 0; k < s.dim(); ++k) amps.push_back(complex_json(s[k]));
            states.push_back(amps);
        }
        bases.push_back(states);
    }
    j["bases"] = bases;
    j["deviation_table"] = real_matrix_json(r.deviation_table);
    j["max_pairwise_deviation"] = r.max_pairwise_deviation;
    j["validity"] = {{"valid", r.valid()}, {"flags", r.flags}};
    j["config"] = r.config;
    j["wall_time_s"] = r.wall_time_s;
    return j;
}

}  // namespace weaktomo
