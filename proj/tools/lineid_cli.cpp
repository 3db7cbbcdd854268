// lineid: simulate, estimate, screen and sweep subcommands.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "lineid/lineid.hpp"

namespace {

using lineid::io::Json;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code(lineid::ErrorKind kind) {
    switch (kind) {
        case lineid::ErrorKind::InvalidArgument: return 2;
        case lineid::ErrorKind::Parse: return 3;
        case lineid::ErrorKind::Io: return 4;
        case lineid::ErrorKind::SingularMatrix: return 5;
        case lineid::ErrorKind::InsufficientExcitation: return 6;
        case lineid::ErrorKind::ExcessiveRejection: return 7;
    }
    return 1;
}

void emit_error(const Json& j) { std::cerr << j.dump() << '\n'; }

struct Options {
    std::string config;
    std::string input;
    std::string output;
    std::string method;
    std::uint64_t seed_value = 0;
    double threshold_value = 0.0;
    std::optional<std::uint64_t> seed;
    std::optional<double> threshold;
    std::string reference;
};

lineid::RunConfig load_config(const Options& o) {
    lineid::RunConfig c = o.config.empty() ? lineid::RunConfig{} : lineid::load_run_config(o.config);
    if (o.seed) c.noise.seed = *o.seed;
    if (o.threshold) {
        if (!(*o.threshold > 0.0)) throw UsageError("--threshold must be positive");
        c.screening.threshold = *o.threshold;
    }
    if (!o.method.empty()) c.method = lineid::parse_method(o.method);
    if (!o.reference.empty()) c.reference = lineid::io::load_line_parameters(o.reference);
    if (!o.output.empty()) c.output = o.output;
    return c;
}

void write_output(const std::optional<std::string>& path, const std::string& text) {
    if (path)
        lineid::io::write_text_file(*path, text);
    else
        std::cout << text;
}

std::vector<lineid::SampleRecord> read_input(const Options& o) {
    if (o.input.empty()) throw UsageError("--input <csv> is required");
    return lineid::io::read_samples_csv(o.input);
}

int cmd_simulate(const Options& o) {
    const auto c = load_config(o);
    const auto profile = c.resolved_profile(c.line, c.n_samples);
    auto records = lineid::generate_series(c.line, profile, c.n_samples, c.sending_voltage(), c.start_time_us);
    if (c.noise.sigma_fraction > 0.0) records = lineid::add_noise(records, c.noise);
    write_output(c.output, lineid::io::samples_to_csv(records));
    return 0;
}

int cmd_estimate(const Options& o) {
    const auto c = load_config(o);
    const auto records = read_input(o);
    if (records.empty()) throw UsageError("input contains no samples");
    Json report;
    switch (c.method) {
        case lineid::Method::Single:
            report = lineid::report::single_report(records, lineid::estimate_single_each(records), c.reference);
            break;
        case lineid::Method::Double:
            if (records.size() < 2) throw UsageError("double method needs at least two samples");
            report = lineid::report::double_report(records, lineid::estimate_double_consecutive(records), c.reference);
            break;
        case lineid::Method::Optimal:
            if (records.size() < 2) throw UsageError("optimal method needs at least two samples");
            report = lineid::report::optimal_report(records, lineid::estimate_optimal(records), c.reference);
            break;
    }
    write_output(c.output, report.dump(2) + "\n");
    return 0;
}

int cmd_screen(const Options& o) {
    const auto c = load_config(o);
    const auto records = read_input(o);
    if (records.size() < 3) throw UsageError("screening needs at least three samples");
    const auto rep = lineid::screen_and_estimate(records, c.screening);
    write_output(c.output, lineid::report::screening_report(records, rep, c.screening, c.reference).dump(2) + "\n");
    return 0;
}

int cmd_sweep(const Options& o) {
    const auto c = load_config(o);
    if (!c.output) throw UsageError("sweep needs --output <csv> (or \"output\" in the config)");
    const auto sweep = c.sweep_config();
    const auto result = lineid::run_length_sweep(sweep);
    lineid::export_sweep(result, *c.output);
    write_output(c.summary_output, lineid::report::sweep_summary(sweep, result).dump(2) + "\n");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmission-line parameter identification from synchronized phasors"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config, "Run configuration JSON")->check(CLI::ExistingFile);
        sub->add_option("--output", o.output, "Output path (default: stdout)");
    };
    auto* simulate = app.add_subcommand("simulate", "Generate a sample CSV from line parameters");
    add_common(simulate);
    CLI::Option* sim_seed = simulate->add_option("--seed", o.seed_value, "Noise seed");

    auto* estimate = app.add_subcommand("estimate", "Estimate line parameters from a sample CSV");
    add_common(estimate);
    estimate->add_option("--input", o.input, "Sample CSV")->required();
    estimate->add_option("--method", o.method, "single|double|optimal")
        ->check(CLI::IsMember({"single", "double", "optimal"}));
    estimate->add_option("--reference", o.reference, "Reference line-parameters JSON")->check(CLI::ExistingFile);

    auto* screen = app.add_subcommand("screen", "Bad-data screening around the optimal estimator");
    add_common(screen);
    screen->add_option("--input", o.input, "Sample CSV")->required();
    CLI::Option* threshold = screen->add_option("--threshold", o.threshold_value, "Scaled-residual threshold");
    screen->add_option("--reference", o.reference, "Reference line-parameters JSON")->check(CLI::ExistingFile);

    auto* sweep = app.add_subcommand("sweep", "Monte Carlo error study versus line length");
    add_common(sweep);
    CLI::Option* sweep_seed = sweep->add_option("--seed", o.seed_value, "Master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        emit_error(Json{{"error", "usage_error"}, {"message", e.what()}});
        return 2;
    }
    if (sim_seed->count() || sweep_seed->count()) o.seed = o.seed_value;
    if (threshold->count()) o.threshold = o.threshold_value;

    try {
        if (*simulate) return cmd_simulate(o);
        if (*estimate) return cmd_estimate(o);
        if (*screen) return cmd_screen(o);
        if (*sweep) return cmd_sweep(o);
    } catch (const UsageError& e) {
        emit_error(Json{{"error", "usage_error"}, {"message", e.what()}});
        return 2;
    } catch (const lineid::Error& e) {
        emit_error(lineid::report::error_json(e));
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        emit_error(Json{{"error", "internal_error"}, {"message", e.what()}});
        return 1;
    }
    return 1;
}
