// semires <kind> --config FILE [--out DIR] [--seed N] [--h-points N] [--quiet]
// semires validate --config FILE

#include <filesystem>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "semires/experiment.hpp"

namespace {

struct Args {
    std::string config;
    std::string out;
    unsigned long long seed = 0;
    int h_points = 0;
    bool quiet = false;
};

void add_run_options(CLI::App* sub, Args& a) {
    sub->add_option("--config", a.config, "experiment config file")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", a.out, "output directory (default: [output] dir, else out/<kind>)");
    sub->add_option("--seed", a.seed, "rng seed (default: config seed, else 42)");
    sub->add_option("--h-points", a.h_points, "resample the h list to N log-spaced points")->check(CLI::PositiveNumber);
    sub->add_flag("--quiet", a.quiet, "print nothing on success");
}

int run_kind(const std::string& kind, const Args& a, const CLI::App* sub) {
    using namespace semires;
    const Config cfg = Config::load(a.config);
    RunOverrides ov;
    if (sub->count("--seed")) ov.seed = a.seed;
    if (sub->count("--h-points")) ov.h_points = a.h_points;
    const Artifacts art = run(cfg, ov, kind);
    std::filesystem::path out = a.out;
    if (out.empty()) out = cfg.get_string("output.dir", "out/" + kind);
    write_artifacts(out, art);
    for (const auto& w : art.warnings) std::cerr << "warning: " << w << "\n";
    if (!a.quiet) {
        std::cout << kind << ": ";
        if (art.report.contains("verdict") && art.report["verdict"].contains("verdict"))
            std::cout << art.report["verdict"]["verdict"].get<std::string>();
        else if (art.report.contains("glue")) std::cout << art.report["glue"]["verdict"].get<std::string>();
        else if (art.report.contains("billiard")) std::cout << art.report["billiard"]["verdict"].get<std::string>();
        else if (art.report.contains("gevrey")) std::cout << (art.report["gevrey"]["passes"].get<bool>() ? "passes" : "fails");
        else std::cout << "complete";
        std::cout << " (exit " << art.exit_code << ") -> " << out.string() << "\n";
    }
    return art.exit_code;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"semiclassical resolvent scaling experiments"};
    app.require_subcommand(1);
    Args args;
    std::vector<std::pair<std::string, CLI::App*>> subs;
    for (const char* k : {"classify", "sweep", "quasimode", "glue", "billiard", "gevrey"}) {
        auto* s = app.add_subcommand(k, std::string("run a ") + k + " experiment");
        add_run_options(s, args);
        subs.emplace_back(k, s);
    }
    auto* val = app.add_subcommand("validate", "static config check without running");
    val->add_option("--config", args.config, "experiment config file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : semires::exit_error;
    }

    try {
        if (val->parsed()) {
            const auto cfg = semires::Config::load(args.config);
            const auto diags = semires::validate(cfg);
            for (const auto& d : diags) std::cout << d << "\n";
            if (diags.empty()) std::cout << args.config << ": ok\n";
            return diags.empty() ? semires::exit_ok : semires::exit_error;
        }
        for (const auto& [k, s] : subs)
            if (s->parsed()) return run_kind(k, args, s);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return semires::exit_error;
    }
    return semires::exit_error;
}
