#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "wigig/config.hpp"
#include "wigig/metrics.hpp"
#include "wigig/sweep.hpp"

using namespace wigig;

namespace {

void report_warnings(const ScenarioConfig& config) {
    for (const std::string& w : config.warnings)
        std::cerr << "warning: " << w << "\n";
}

RadioMap build_map(const ScenarioConfig& config) {
    return build_radio_map(config.env, config.aps, config.lps, config.map_params());
}

int cmd_radiomap_build(const std::string& config_path, const std::string& out_path) {
    const ScenarioConfig config = parse_config(config_path);
    report_warnings(config);
    const RadioMap map = build_map(config);
    save_radio_map(map, out_path);
    int covered = 0;
    for (int l = 0; l < map.num_lps(); ++l)
        for (int n = 0; n < map.num_aps(); ++n)
            if (map.phi(l, n) != 0) ++covered;
    std::cout << "radio map: " << map.num_lps() << " learning points x " << map.num_aps()
              << " APs, " << covered << " covered cells -> " << out_path << "\n";
    return 0;
}

int cmd_learn(const std::string& db_path, double damping, int max_iter, int stable_iter) {
    ExemplarSet existing;
    const RadioMap map = load_radio_map(db_path, &existing);
    ClusteringParams params;
    params.damping = damping;
    params.max_iter = max_iter;
    params.stable_iter = stable_iter;
    const ExemplarSet exemplars = build_exemplars(map, params);
    save_radio_map(map, db_path, &exemplars);
    int clusters = 0;
    for (const auto& per_ap : exemplars.clusters)
        for (const auto& [sector, cl] : per_ap) clusters += static_cast<int>(cl.size());
    std::cout << "exemplars: " << clusters << " clusters across " << map.num_aps()
              << " APs appended to " << db_path << "\n";
    return 0;
}

void print_report(const MetricsReport& m) {
    std::cout << "throughput_gbps " << m.throughput_gbps << "\n";
    if (m.avg_delay_ms) {
        std::cout << "avg_delay_ms " << *m.avg_delay_ms << "\n";
    } else {
        std::cout << "avg_delay_ms -\n";
    }
    std::cout << "drop_rate_pct " << m.drop_rate_pct << "\n";
    std::cout << "ns " << m.ns << "\nnd " << m.nd << "\ngenerated " << m.generated
              << "\nin_flight " << m.in_flight << "\n";
    if (m.no_packets) std::cout << "note no packets were resolved in this run\n";
    for (std::size_t i = 0; i < m.per_ap.size(); ++i)
        std::cout << "ap[" << i << "] packets " << m.per_ap[i].packets << " throughput_gbps "
                  << m.per_ap[i].throughput_gbps << "\n";
}

int cmd_simulate(const std::string& config_path, const std::string& db_path,
                 const std::string& mode_str, std::uint64_t seed,
                 const std::string& trace_path) {
    ScenarioConfig config = parse_config(config_path);
    report_warnings(config);
    const sim::Mode mode =
        mode_str.empty() ? config.mode
                         : (mode_str == "coordinated" ? sim::Mode::coordinated
                                                      : sim::Mode::uncoordinated);

    RadioMap map;
    ExemplarSet exemplars;
    if (!db_path.empty()) {
        map = load_radio_map(db_path, &exemplars);
    } else if (mode == sim::Mode::coordinated) {
        throw std::runtime_error("simulate: coordinated mode needs --db");
    }
    if (mode == sim::Mode::coordinated && exemplars.empty())
        throw std::runtime_error(
            "simulate: database has no exemplars; run `learn` on it first");
    if (mode == sim::Mode::uncoordinated && db_path.empty()) {
        // the baseline never touches the databases; give it empty ones of
        // the right shape
        map = build_radio_map(config.env, config.aps, {{0, config.lps.front().position}},
                              config.map_params());
        exemplars = build_exemplars(map);
    }

    const auto ids = config.all_ap_ids();
    sim::Scenario scenario = config.make_scenario(map, exemplars, mode, ids);

    std::ofstream trace_file;
    std::unique_ptr<sim::TraceWriter> writer;
    if (!trace_path.empty()) {
        trace_file.open(trace_path, std::ios::binary);
        if (!trace_file) throw std::runtime_error("simulate: cannot open " + trace_path);
        writer = std::make_unique<sim::TraceWriter>(trace_file);
    }

    sim::Simulation run(scenario, seed, writer.get());
    const MetricsReport m = compute_metrics(run.run());
    std::cout << "mode " << sim::mode_name(mode) << "\nseed " << seed << "\n";
    print_report(m);
    return 0;
}

int cmd_sweep(const std::string& config_path, const std::string& db_path,
              const std::string& out_path) {
    const ScenarioConfig config = parse_config(config_path);
    report_warnings(config);
    ExemplarSet exemplars;
    const RadioMap map = load_radio_map(db_path, &exemplars);
    if (map.num_aps() != static_cast<int>(config.aps.size()))
        throw std::runtime_error("sweep: database does not cover every configured AP");
    const auto rows = run_sweep(config, map,
                                {sim::Mode::coordinated, sim::Mode::uncoordinated},
                                config.seeds);
    emit_csv(rows, out_path);
    std::cout << csv_text(rows);
    std::cout << "results -> " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"coordinated WiGig WLAN simulator"};
    app.require_subcommand(1);

    std::string config_path, db_path, out_path, mode_str, trace_path;
    std::uint64_t seed = 1;
    double damping = 0.9;
    int max_iter = 500;
    int stable_iter = 50;

    auto* radiomap = app.add_subcommand("radiomap", "offline database construction");
    radiomap->require_subcommand(1);
    auto* rm_build = radiomap->add_subcommand("build", "survey the radio maps");
    rm_build->add_option("--config", config_path, "scenario file")->required();
    rm_build->add_option("--out", out_path, "output database")->required();

    auto* learn = app.add_subcommand("learn", "cluster fingerprints into exemplars");
    learn->add_option("--db", db_path, "database file")->required();
    learn->add_option("--damping", damping, "message damping factor");
    learn->add_option("--max-iter", max_iter, "iteration cap");
    learn->add_option("--stable-iter", stable_iter, "stability window");

    auto* simulate = app.add_subcommand("simulate", "run one simulation");
    simulate->add_option("--config", config_path, "scenario file")->required();
    simulate->add_option("--db", db_path, "database file");
    simulate->add_option("--mode", mode_str, "coordinated | uncoordinated")
        ->check(CLI::IsMember({"coordinated", "uncoordinated", ""}));
    simulate->add_option("--seed", seed, "random seed");
    simulate->add_option("--trace", trace_path, "event trace output path");

    auto* sweep = app.add_subcommand("sweep", "run the AP-count experiment ladder");
    sweep->add_option("--config", config_path, "scenario file")->required();
    sweep->add_option("--db", db_path, "database file")->required();
    sweep->add_option("--out", out_path, "CSV output path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (rm_build->parsed()) return cmd_radiomap_build(config_path, out_path);
        if (learn->parsed()) return cmd_learn(db_path, damping, max_iter, stable_iter);
        if (simulate->parsed())
            return cmd_simulate(config_path, db_path, mode_str, seed, trace_path);
        if (sweep->parsed()) return cmd_sweep(config_path, db_path, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
