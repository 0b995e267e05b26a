// simulate --config <path> --out <dir> [--seed N] [--override key=value]...

#include <cstdio>
#include <exception>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rbnoma/rbnoma.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Sidelink autonomous-mode simulator with cancellation-capable receivers"};
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> overrides;
    std::optional<int> trace_vehicle;
    bool quiet = false;
    app.add_option("--config", config_path, "Scenario file (key = value lines)")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "Output directory for the CSV files")->required();
    app.add_option("--seed", seed, "Overrides rng_seed");
    app.add_option("--override", overrides, "key=value applied after the file (repeatable)");
    app.add_option("--trace-receiver", trace_vehicle, "Write receiver_trace.csv for this vehicle id");
    app.add_flag("-q,--quiet", quiet, "No summary on stdout");
    CLI11_PARSE(app, argc, argv);

    try {
        rbnoma::SimConfig cfg = rbnoma::load_config(config_path);
        for (const auto& o : overrides) rbnoma::apply_override(cfg, o);
        if (seed) cfg.rng_seed = *seed;
        rbnoma::validate(cfg);

        rbnoma::SimOptions opt;
        opt.trace_vehicle = trace_vehicle;
        const auto out = rbnoma::run_simulation(cfg, opt);
        rbnoma::write_metrics_csv(out, out_dir);
        if (trace_vehicle) rbnoma::write_trace_csv(out.trace, std::filesystem::path(out_dir) / "receiver_trace.csv");
        if (!quiet) {
            std::printf("receiver=%s traffic=%s n_retx=%d density=%g seed=%llu\n",
                        std::string(rbnoma::to_string(cfg.receiver_mode)).c_str(),
                        std::string(rbnoma::to_string(cfg.traffic_mode)).c_str(), cfg.n_retx,
                        cfg.density_veh_per_km, static_cast<unsigned long long>(cfg.rng_seed));
            std::printf("packets=%ld measured=%ld transmissions=%ld median_cbr=%.4f range_m=%g missed_bkc=%ld\n",
                        out.stats.packets_generated, out.stats.packets_measured, out.stats.transmissions,
                        rbnoma::median_cbr(out), out.range_m, out.stats.missed_backward_cancellations);
        }
    } catch (const rbnoma::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
