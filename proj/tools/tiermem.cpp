// tiermem: tiered-memory queueing simulator CLI.
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdio>
#include <exception>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tiermem/scenario.hpp"

using namespace tiermem;

namespace {

Scenario load_scenario(const std::string& arg) {
    for (const auto& p : preset_names())
        if (p == arg) return make_preset(p);
    std::ifstream f(arg);
    if (!f) throw ConfigError("cannot open scenario file '" + arg + "'");
    json j = json::parse(f);  // throws json::parse_error on bad input
    return scenario_from_json(j);
}

int cmd_run(const std::string& file, long long seed, const std::string& out_dir, bool event_log,
            const std::string& controller) {
    Scenario s = load_scenario(file);
    if (seed >= 0) s.seed = uint64_t(seed);
    if (event_log) s.event_log = true;
    if (controller == "off") s.controller.mode = ControllerMode::off;
    else if (controller == "on") s.controller.mode = ControllerMode::on;
    else if (controller == "mba") s.controller.mode = ControllerMode::mba;
    else if (!controller.empty()) throw ConfigError("unknown controller mode '" + controller + "'");
    RunResult r = run_scenario(s);
    write_outputs(r, out_dir);
    std::cout << "scenario " << s.name << ": " << r.retired << " requests retired in "
              << s.duration_cycles << " cycles\n";
    std::cout << "outputs written to " << out_dir << "/\n";
    return 0;
}

int cmd_calibrate(long long seed, const std::string& platform) {
    PlatformSpec plat = platform == "platform_b" ? platform_b() : platform_a();
    CalibrationReport rep = calibrate(plat, seed >= 0 ? uint64_t(seed) : 42);
    char buf[256];
    std::snprintf(buf, sizeof buf,
                  "t_ddr_ref            %.3f cycles\n"
                  "unloaded ddr latency %.3f cycles\n"
                  "unloaded cxl latency %.3f cycles\n"
                  "suggested read_threshold %lld cycles\n",
                  rep.t_ddr_ref, rep.unloaded_ddr_latency, rep.unloaded_cxl_latency,
                  (long long)rep.suggested_read_threshold);
    std::cout << buf;
    return 0;
}

int cmd_list() {
    for (const auto& p : preset_names()) std::cout << p << "\n";
    return 0;
}

int cmd_sweep(const std::string& file, const std::string& param, const std::string& values,
              long long seed, const std::string& out_dir) {
    Scenario base = load_scenario(file);
    if (seed >= 0) base.seed = uint64_t(seed);
    std::vector<long long> vals;
    size_t pos = 0;
    while (pos < values.size()) {
        size_t comma = values.find(',', pos);
        if (comma == std::string::npos) comma = values.size();
        vals.push_back(std::stoll(values.substr(pos, comma - pos)));
        pos = comma + 1;
    }
    if (vals.empty()) throw ConfigError("sweep: empty value list");
    std::filesystem::create_directories(out_dir);
    std::ofstream idx(out_dir + "/sweep.csv");
    idx << param << ",dir,ddr_bytes,cxl_bytes,retired\n";
    for (long long v : vals) {
        Scenario s = base;
        if (param == "threads") {
            for (auto& w : s.workloads) w.threads = int(v);
        } else if (param == "mlp") {
            for (auto& w : s.workloads) w.mlp_per_thread = int(v);
        } else if (param == "seed") {
            s.seed = uint64_t(v);
        } else {
            throw ConfigError("sweep: unknown parameter '" + param +
                              "' (supported: threads, mlp, seed)");
        }
        s.name = base.name + "_" + param + std::to_string(v);
        RunResult r = run_scenario(s);
        std::string sub = out_dir + "/" + param + std::to_string(v);
        write_outputs(r, sub);
        uint64_t b0 = 0, b1 = 0;
        for (const auto& w : r.metrics.windows()) b0 += w.bytes[0], b1 += w.bytes[1];
        idx << v << "," << sub << "," << b0 << "," << b1 << "," << r.retired << "\n";
        std::cout << param << "=" << v << " -> " << sub << "/\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tiermem: cycle-stepped tiered-memory queueing simulator"};
    app.require_subcommand(1);

    std::string file, out_dir = "out", controller, param, values, platform = "platform_a";
    long long seed = -1;
    bool event_log = false;

    auto* run = app.add_subcommand("run", "Run a scenario (preset name or JSON file)");
    run->add_option("file", file, "Preset name or scenario JSON path")->required();
    run->add_option("--seed", seed, "Override the scenario seed");
    run->add_option("--out", out_dir, "Output directory (default: out)");
    run->add_flag("--event-log", event_log, "Write per-request events.csv");
    run->add_option("--controller", controller, "Override controller mode")
        ->check(CLI::IsMember({"on", "off", "mba"}));

    auto* cal = app.add_subcommand("calibrate", "Measure reference latencies");
    cal->add_option("--seed", seed, "Calibration seed");
    cal->add_option("--platform", platform, "platform_a or platform_b")
        ->check(CLI::IsMember({"platform_a", "platform_b"}));

    app.add_subcommand("list", "List bundled scenario presets");

    auto* sw = app.add_subcommand("sweep", "Run a scenario across parameter values");
    sw->add_option("file", file, "Preset name or scenario JSON path")->required();
    sw->add_option("--param", param, "Parameter to vary: threads, mlp, seed")->required();
    sw->add_option("--values", values, "Comma-separated values")->required();
    sw->add_option("--seed", seed, "Override the scenario seed");
    sw->add_option("--out", out_dir, "Output directory (default: out)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand("run"))
            return cmd_run(file, seed, out_dir, event_log, controller);
        if (app.got_subcommand("calibrate")) return cmd_calibrate(seed, platform);
        if (app.got_subcommand("list")) return cmd_list();
        if (app.got_subcommand("sweep")) return cmd_sweep(file, param, values, seed, out_dir);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
