#include "wigig/sweep.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

namespace wigig {

namespace {

struct Accumulator {
    std::vector<double> values;
    void add(double v) { values.push_back(v); }
    double mean() const {
        double s = 0.0;
        for (double v : values) s += v;
        return values.empty() ? 0.0 : s / static_cast<double>(values.size());
    }
    // population deviation: a single seed reports exactly zero spread
    double stddev() const {
        if (values.size() < 2) return 0.0;
        const double m = mean();
        double s = 0.0;
        for (double v : values) s += (v - m) * (v - m);
        return std::sqrt(s / static_cast<double>(values.size()));
    }
};

std::string format_number(double v) {
    char buf[40];
    auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                 std::chars_format::general, 9);
    return std::string(buf, p);
}

}  // namespace

std::vector<SweepRow> run_sweep(const ScenarioConfig& config, const RadioMap& full_map,
                                const std::vector<sim::Mode>& modes,
                                const std::vector<std::uint64_t>& seeds) {
    std::vector<SweepRow> rows;
    for (const auto& [count, ids] : config.sweep_subsets) {
        const RadioMap submap = full_map.select_aps(ids);
        const ExemplarSet exemplars = build_exemplars(submap);
        for (sim::Mode mode : modes) {
            Accumulator tp, delay, drop;
            const sim::Scenario scenario =
                config.make_scenario(submap, exemplars, mode, ids);
            for (std::uint64_t seed : seeds) {
                sim::Simulation run(scenario, seed);
                const MetricsReport m = compute_metrics(run.run());
                tp.add(m.throughput_gbps);
                if (m.avg_delay_ms) delay.add(*m.avg_delay_ms);
                drop.add(m.drop_rate_pct);
            }
            SweepRow row;
            row.ap_count = count;
            row.mode = mode;
            row.throughput_gbps = tp.mean();
            row.delay_ms = delay.mean();
            row.drop_rate_pct = drop.mean();
            row.throughput_std = tp.stddev();
            row.delay_std = delay.stddev();
            row.drop_std = drop.stddev();
            row.seeds = static_cast<int>(seeds.size());
            rows.push_back(row);
        }
    }
    return rows;
}

std::string csv_text(const std::vector<SweepRow>& rows) {
    std::string out =
        "ap_count,mode,throughput_gbps,delay_ms,drop_rate_pct,"
        "throughput_std,delay_std,drop_std,seeds\n";
    for (const SweepRow& r : rows) {
        out += std::to_string(r.ap_count);
        out += ',';
        out += sim::mode_name(r.mode);
        out += ',';
        out += format_number(r.throughput_gbps);
        out += ',';
        out += format_number(r.delay_ms);
        out += ',';
        out += format_number(r.drop_rate_pct);
        out += ',';
        out += format_number(r.throughput_std);
        out += ',';
        out += format_number(r.delay_std);
        out += ',';
        out += format_number(r.drop_std);
        out += ',';
        out += std::to_string(r.seeds);
        out += '\n';
    }
    return out;
}

void emit_csv(const std::vector<SweepRow>& rows, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("emit_csv: cannot open " + path);
    out << csv_text(rows);
    if (!out) throw std::runtime_error("emit_csv: write failed for " + path);
}

}  // namespace wigig
