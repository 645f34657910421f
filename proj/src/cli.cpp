#include "weaktomo/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "weaktomo/experiment.hpp"

namespace weaktomo {

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string format;
    std::string out;
};

void add_common(CLI::App *sub, Options &o) {
    sub->add_option("--config", o.config_path, "experiment config (JSON)")->required();
    sub->add_option("--seed", o.seed, "root seed, overrides the config");
    sub->add_option("--format", o.format, "report format")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", o.out, "output path, '-' for stdout");
}

void emit(const std::string &text, const std::string &path, std::ostream &out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::ConfigError, "cannot open output '" + path + "'");
    f << text;
    if (!f) fail(ErrorCode::ConfigError, "failed writing output '" + path + "'");
}

std::string tomography_summary(const TomographyReport &r) {
    std::string s = r.command + ": scheme " + r.scheme + ", N = " + std::to_string(r.dim) + ", " +
                    std::to_string(r.repetitions) + " repetitions, mean Frobenius error " +
                    format_double(r.frobenius_distance);
    if (r.empirical_error_volume) s += ", empirical volume " + format_double(*r.empirical_error_volume);
    if (r.analytic_error_volume) s += ", analytic volume " + format_double(*r.analytic_error_volume);
    if (r.feasibility) s += ", feasibility " + r.feasibility->verdict + " (" + r.feasibility->summary + ")";
    s += r.flags.empty() ? ", flags: none" : ", flags tripped";
    return s;
}

}  // namespace

int run_cli(int argc, const char *const *argv, std::ostream &out, std::ostream &err) {
    CLI::App app{"Weak-measurement quantum state tomography experiments"};
    app.require_subcommand(1);
    Options opts;
    CLI::App *reconstruct = app.add_subcommand("reconstruct", "simulate, reconstruct and compare to the true state");
    CLI::App *scan = app.add_subcommand("optimality-scan", "error volume over the probe simplex");
    CLI::App *mub = app.add_subcommand("mub", "mutually unbiased bases for prime N");
    CLI::App *volume = app.add_subcommand("error-volume", "Monte Carlo error volume against the analytic law");
    for (CLI::App *sub : {reconstruct, scan, mub, volume}) add_common(sub, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        ExperimentConfig config = load_config(opts.config_path);
        if (opts.seed) config.seed = *opts.seed;
        if (!opts.format.empty()) config.output.format = opts.format;
        if (!opts.out.empty()) config.output.path = opts.out;
        const bool csv = config.output.format == "csv";

        bool valid = true;
        std::string text;
        if (reconstruct->parsed() || volume->parsed()) {
            const TomographyReport r = reconstruct->parsed() ? run_reconstruct(config) : run_error_volume(config);
            text = csv ? json_to_csv(to_json(r)) : to_json(r).dump(2) + "\n";
            valid = r.valid();
            err << tomography_summary(r) << "\n";
        } else if (scan->parsed()) {
            const ScanReport r = run_optimality_scan(config);
            text = csv ? scan_to_csv(r) : to_json(r).dump(2) + "\n";
            err << "optimality-scan: " << r.rows.size() << " grid points, refined argmin distance to uniform "
                << format_double(r.refined_distance_to_uniform) << (r.certified ? " (certified)" : " (not certified)") << "\n";
        } else {
            const MubReport r = run_mub(config);
            text = csv ? json_to_csv(to_json(r)) : to_json(r).dump(2) + "\n";
            valid = r.valid();
            err << "mub: N = " << r.dim << ", " << r.bases.size() << " bases, max pairwise deviation "
                << format_double(r.max_pairwise_deviation) << "\n";
        }
        emit(text, config.output.path, out);
        if (!valid) {
            err << "validity flags tripped\n";
            return kExitValidity;
        }
        return kExitOk;
    } catch (const Error &e) {
        err << "error: " << e.what() << "\n";
        return e.code() == ErrorCode::ConfigError ? kExitConfigError : kExitFailure;
    } catch (const std::exception &e) {
        err << "error: " << e.what() << "\n";
        return kExitFailure;
    }
}

}  // namespace weaktomo
