#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <sstream>

#include "roughflow/experiments/runners.hpp"

namespace rx = roughflow::experiments;

namespace {

nlohmann::json load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw roughflow::Error(roughflow::ErrorKind::config, "cannot open config file " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        return nlohmann::json::parse(ss.str());
    } catch (const nlohmann::json::parse_error& e) {
        throw roughflow::Error(roughflow::ErrorKind::config, path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"roughflow: invariance principles, diffusion approximation and LIL experiments"};
    app.set_version_flag("--version", rx::version());
    app.require_subcommand(1, 1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    std::size_t replicas = 0, threads = 1;
    for (const auto& kind : rx::experiment_kinds()) {
        auto* sub = app.add_subcommand(kind, "run the " + kind + " experiment");
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--seed", seed, "master seed (overrides the config)");
        sub->add_option("--replicas", replicas, "replica count (overrides the config)");
        sub->add_option("--out", out_dir, "output directory for report.json and series.csv")->required();
        sub->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const std::string kind = app.get_subcommands().front()->get_name();
    auto* sub = app.get_subcommands().front();
    rx::RunOptions opt;
    if (sub->count("--seed")) opt.seed = seed;
    if (sub->count("--replicas")) opt.replicas = replicas;
    opt.threads = threads;

    try {
        const auto out = rx::run_experiment(kind, load_config(config_path), opt);
        out.write(out_dir);
        std::size_t asserted = 0, failed = 0;
        for (const auto& c : out.checks)
            if (c.asserted) {
                ++asserted;
                if (!c.passed()) {
                    ++failed;
                    std::cerr << "FAIL " << c.name << ": " << c.statistic << " " << (c.relation == ">" ? "<=" : ">") << " "
                              << c.threshold << "\n";
                }
            }
        if (!out.error.empty()) std::cerr << "error: " << out.error << "\n";
        std::cout << kind << ": " << (asserted - failed) << "/" << asserted << " asserted checks passed"
                  << (out.error.empty() ? "" : " (library error reported)") << "; wrote " << out_dir << "\n";
        return out.passed() ? 0 : 1;
    } catch (const roughflow::Error& e) {
        std::cerr << "error [" << roughflow::to_string(e.kind()) << "]: " << e.what() << "\n";
        return e.kind() == roughflow::ErrorKind::config ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
