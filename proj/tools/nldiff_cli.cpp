#include <iostream>

#include <CLI11.hpp>

#include "nldiff/nldiff.hpp"

int main(int argc, char** argv) {
    CLI::App app{"nldiff - numerical laboratory for diffusions with uncertain drift"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::int64_t seed = -1;
    unsigned workers = 0;

    CLI::App* run = app.add_subcommand("run", "execute one command from a config file");
    run->add_option("config", config_path, "path to the JSON run config")->required();
    run->add_option("--seed", seed, "override the config seed");
    run->add_option("--out", out_dir, "override the output directory");
    run->add_option("--workers", workers, "worker thread count (default: all cores)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (workers > 0) nldiff::set_worker_count(workers);
        const nldiff::RunConfig rc = nldiff::load_config(config_path);
        const nldiff::RunResult res = nldiff::run_config(rc, out_dir, seed);
        std::cout << res.summary;
        return res.exit_code;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
