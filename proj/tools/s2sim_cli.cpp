// Command-line front end: run a scenario, dry-run the endpointer, or
// re-render a saved report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include <s2sim/s2sim.hpp>

namespace {

s2sim::RunConfig build_config(const std::string& config_path,
                              const std::optional<std::string>& pipeline,
                              const std::optional<std::string>& mode,
                              const std::optional<std::string>& streaming,
                              const std::optional<std::uint64_t>& seed) {
    nlohmann::json j = nlohmann::json::object();
    if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f) throw s2sim::ConfigError("cannot open config file: " + config_path);
        try {
            j = nlohmann::json::parse(f);
        } catch (const nlohmann::json::exception& e) {
            throw s2sim::ConfigError("config " + config_path + ": " + e.what());
        }
    }
    // command-line flags override the file; the seed must be patched before
    // parsing because tier presets bake it into their latency models
    if (seed) j["seed"] = *seed;
    if (pipeline) j["pipeline"] = *pipeline;
    if (mode) j["mode"] = *mode;
    if (streaming) j["streaming"] = (*streaming == "on");
    return s2sim::parse_config(j);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw s2sim::ConfigError("cannot write report file: " + path);
    out << content;
}

int cmd_run(const std::string& trace_path, const std::string& config_path,
            const std::optional<std::string>& pipeline, const std::optional<std::string>& mode,
            const std::optional<std::string>& streaming, const std::optional<std::uint64_t>& seed,
            const std::string& report_path, const std::string& format) {
    const auto trace = s2sim::load_trace(trace_path);
    const auto cfg = build_config(config_path, pipeline, mode, streaming, seed);
    const auto report = s2sim::run_scenario(trace, cfg);
    const auto json_text = s2sim::report_to_json(report).dump(2) + "\n";
    if (!report_path.empty()) write_file(report_path, json_text);
    std::cout << s2sim::render_table(report, s2sim::parse_report_format(format));
    return 0;
}

int cmd_vad_check(const std::string& trace_path, const std::string& config_path,
                  const std::string& report_path) {
    const auto trace = s2sim::load_trace(trace_path);
    s2sim::RunConfig cfg;
    if (!config_path.empty()) cfg = s2sim::load_config(config_path);
    const auto signals = s2sim::vad_check(trace, cfg);
    const auto json_text = s2sim::vad_signals_to_json(signals).dump(2) + "\n";
    if (!report_path.empty()) write_file(report_path, json_text);
    std::cout << json_text;
    return 0;
}

int cmd_table(const std::string& report_path, const std::string& format) {
    std::ifstream f(report_path);
    if (!f) throw s2sim::ConfigError("cannot open report file: " + report_path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw s2sim::ConfigError("report " + report_path + ": " + e.what());
    }
    const auto report = s2sim::report_from_json(j);
    std::cout << s2sim::render_table(report, s2sim::parse_report_format(format));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"deterministic virtual-clock simulator for speech-to-speech pipelines"};
    app.require_subcommand(1);

    std::string trace_path, config_path, report_path, format = "json";
    std::optional<std::string> pipeline, mode, streaming;
    std::optional<std::uint64_t> seed;

    auto* run = app.add_subcommand("run", "execute a trace end to end");
    run->add_option("--trace", trace_path, "JSONL input trace")->required();
    run->add_option("--config", config_path, "JSON run configuration");
    run->add_option("--pipeline", pipeline, "tier selection")
        ->check(CLI::IsMember({"fluid", "precise", "reasoning", "deep-reasoning", "realtime",
                               "route"}));
    run->add_option("--mode", mode, "duplex mode")->check(CLI::IsMember({"half", "full"}));
    run->add_option("--streaming", streaming, "streaming LLM+TTS")
        ->check(CLI::IsMember({"on", "off"}));
    run->add_option("--seed", seed, "run seed");
    run->add_option("--report", report_path, "write the JSON report here");
    run->add_option("--format", format, "stdout rendering")
        ->check(CLI::IsMember({"json", "csv", "table"}));

    auto* vadc = app.add_subcommand("vad-check", "endpointing dry run on a frame trace");
    std::string vc_trace, vc_config, vc_report;
    vadc->add_option("--trace", vc_trace, "JSONL frame trace")->required();
    vadc->add_option("--config", vc_config, "JSON run configuration");
    vadc->add_option("--report", vc_report, "write the signal list here");

    auto* tab = app.add_subcommand("table", "re-render a saved JSON report");
    std::string tb_report, tb_format = "table";
    tab->add_option("--report", tb_report, "saved JSON report")->required();
    tab->add_option("--format", tb_format, "rendering")
        ->check(CLI::IsMember({"json", "csv", "table"}));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        if (run->parsed())
            return cmd_run(trace_path, config_path, pipeline, mode, streaming, seed, report_path,
                           format);
        if (vadc->parsed()) return cmd_vad_check(vc_trace, vc_config, vc_report);
        if (tab->parsed()) return cmd_table(tb_report, tb_format);
    } catch (const s2sim::TraceError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const s2sim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const s2sim::SimError& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
