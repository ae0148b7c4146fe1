#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "stcsta/app.hpp"

int main(int argc, char** argv)
{
    CLI::App app{"Correlation-driven adaptive sampling simulator for clustered sensor networks"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    int jobs = 1;
    auto* run = app.add_subcommand("run", "Run the configured scenario x mode sweep");
    run->add_option("--config", config_path, "JSON run configuration")->required();
    run->add_option("--out", out_dir, "Output directory")->required();
    run->add_option("--jobs", jobs, "Sweep cells to run concurrently")->check(CLI::PositiveNumber);

    std::string spec_path;
    std::string out_file;
    std::optional<std::uint64_t> seed;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset in the canonical CSV schema");
    synth->add_option("--spec", spec_path, "JSON generator spec")->required();
    synth->add_option("--out", out_file, "Output CSV")->required();
    synth->add_option("--seed", seed, "Overrides the seed in the generator file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed())
            return stcsta::cmd_run(config_path, out_dir, jobs, std::cerr);
        return stcsta::cmd_synth(spec_path, out_file, seed, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
