// decoupler.cpp - command-line entry point for the batch experiment runner
//
//   decoupler <decay|qpt|scaling|compare> --config <path> --out <dir> [--seed <u64>] [--threads <k>]
//   decoupler fit --curve <csv> --model <gaussian|cubic|one_over_e> --out <dir>
//
// Exit codes: 0 success, 2 configuration error, 3 numerical failure, 1 anything else.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "decoupler/config.hpp"
#include "decoupler/errors.hpp"
#include "decoupler/fitting.hpp"
#include "decoupler/io.hpp"
#include "decoupler/runner.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

struct TaskArgs {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    unsigned threads = 1;
};

int run_task(const std::string& task, const TaskArgs& args)
{
    auto cfg = decoupler::cli::load_config(args.config);
    if (decoupler::cli::task_from_string(task) != cfg.task)
        throw decoupler::ConfigError("command '" + task + "' does not match config task '" + to_string(cfg.task) + "'");
    if (args.seed) cfg.monte_carlo.seed = *args.seed;

    const auto report = decoupler::cli::run(cfg, {args.out, args.threads});
    for (const auto& w : report.warnings) std::cerr << "warning: " << w << '\n';
    return report.numerical_failure ? kExitNumerical : 0;
}

struct FitArgs {
    std::string curve;
    std::string model = "cubic";
    std::string out;
    bool free_amplitude = false;
    double amplitude = 1.0;
    double baseline = 0.0;
};

int run_fit(const FitArgs& args)
{
    namespace fitting = decoupler::fitting;
    const auto curve = decoupler::io::read_curve_csv(std::filesystem::path(args.curve));
    fitting::FitOptions fo;
    fo.free_amplitude = args.free_amplitude;
    fo.amplitude = args.amplitude;
    fo.baseline = args.baseline;

    decoupler::io::json out;
    out["model"] = args.model;
    bool converged = true;
    if (args.model == "one_over_e") {
        out["one_over_e_us"] = fitting::one_over_e_time(curve, args.amplitude, args.baseline);
    } else {
        const auto r = args.model == "gaussian" ? fitting::fit_gaussian_decay(curve, fo) : fitting::fit_cubic_exp(curve, fo);
        out["fit"] = decoupler::io::to_json(r);
        converged = r.converged;
    }
    std::filesystem::create_directories(args.out);
    decoupler::io::write_json(std::filesystem::path(args.out) / "fit.json", out);
    std::cout << out.dump(2) << '\n';
    return converged ? 0 : kExitNumerical;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Dynamical decoupling simulation toolkit"};
    app.require_subcommand(1);

    TaskArgs targs;
    std::string chosen;
    for (const char* name : {"decay", "qpt", "scaling", "compare"}) {
        auto* sub = app.add_subcommand(name, std::string("run the ") + name + " task");
        sub->add_option("--config", targs.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", targs.out, "output directory")->required();
        sub->add_option("--seed", targs.seed, "override monte_carlo.seed");
        sub->add_option("--threads", targs.threads, "worker threads")->check(CLI::Range(1u, 1024u));
        sub->callback([&chosen, name] { chosen = name; });
    }

    FitArgs fargs;
    auto* fit = app.add_subcommand("fit", "fit a decay curve CSV (t_us,value,std_error)");
    fit->add_option("--curve", fargs.curve)->required()->check(CLI::ExistingFile);
    fit->add_option("--model", fargs.model)->check(CLI::IsMember({"gaussian", "cubic", "one_over_e"}));
    fit->add_option("--out", fargs.out)->required();
    fit->add_flag("--free-amplitude", fargs.free_amplitude);
    fit->add_option("--amplitude", fargs.amplitude);
    fit->add_option("--baseline", fargs.baseline);
    fit->callback([&chosen] { chosen = "fit"; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        return chosen == "fit" ? run_fit(fargs) : run_task(chosen, targs);
    } catch (const decoupler::ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const decoupler::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
