#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>

#include "wigig/sim/simulation.hpp"
#include "wigig/units.hpp"

using namespace wigig;
using namespace wigig::sim;

namespace {

std::vector<LearningPoint> grid_lps(const Environment& env, int nx, int ny) {
    std::vector<LearningPoint> lps;
    int idx = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            lps.push_back({idx++, Position{(i + 0.5) * env.width / nx,
                                           (j + 0.5) * env.depth / ny, 1.0}});
    return lps;
}

Scenario make_scenario(std::vector<Position> ap_pos, std::vector<Position> ues,
                       Mode mode, double load_bps = 0.0) {
    Scenario sc;
    sc.env.width = 18.0;
    sc.env.depth = 10.0;
    sc.env.height = 3.0;
    sc.env.set_reflection_loss(10.0);
    int id = 1;
    for (const Position& p : ap_pos) {
        sc.aps.push_back({id, p, make_codebook(id)});
        ++id;
    }
    sc.ues = std::move(ues);
    sc.mode = mode;
    sc.traffic.offered_load_bps = load_bps;
    sc.online_shadowing_std_db = 0.0;
    sc.duration = seconds(0.05);

    RadioMapParams params;
    params.coverage_threshold_dbm = sc.env.noise_dbm + sc.mcs.min_snr_db(1);
    sc.map = build_radio_map(sc.env, sc.aps, grid_lps(sc.env, 15, 6), params);
    sc.exemplars = build_exemplars(sc.map);
    return sc;
}

std::vector<TraceEvent> filter(const std::vector<TraceEvent>& ev, const std::string& action,
                               const std::string& station = "") {
    std::vector<TraceEvent> out;
    for (const auto& e : ev)
        if (e.action == action && (station.empty() || e.station == station))
            out.push_back(e);
    return out;
}

bool detail_has(const TraceEvent& e, const std::string& token) {
    return e.detail.find(token) != std::string::npos;
}

}  // namespace

TEST_CASE("timing: refinement over six beams beats a full sweep") {
    const TimingConfig t;
    CHECK(t.brp_phase(6) < t.sls_phase(36));
    // even with the wifi signalling added, setup stays cheaper
    const Time coord_setup = t.wifi_mreq + t.wifi_sifs + t.wifi_mresp + t.wifi_switch_on +
                             t.wifi_navset + t.wifi_bid + t.brp_phase(6);
    CHECK(coord_setup < t.sls_phase(36));
}

TEST_CASE("zero offered load produces an empty run") {
    auto sc = make_scenario({{4.0, 5.0, 3.0}}, {{10.0, 5.0, 1.0}}, Mode::coordinated);
    Simulation sim(sc, 1);
    const RunTally tally = sim.run();
    CHECK(tally.generated() == 0);
    CHECK(tally.ns() == 0);
    CHECK(tally.nd() == 0);
}

TEST_CASE("same seed gives byte-identical traces and tallies") {
    auto sc = make_scenario({{4.0, 5.0, 3.0}, {14.0, 5.0, 3.0}},
                            {{2.0, 2.0, 1.0}, {16.0, 8.0, 1.0}, {9.0, 5.0, 1.0}},
                            Mode::coordinated, 200e6);
    const auto run_once = [&] {
        TraceRecorder rec;
        Simulation sim(sc, 42, &rec);
        const RunTally tally = sim.run();
        std::string lines;
        for (const auto& e : rec.events) lines += e.line() + "\n";
        return std::pair{lines, tally};
    };
    const auto [lines_a, tally_a] = run_once();
    const auto [lines_b, tally_b] = run_once();
    CHECK(lines_a == lines_b);
    CHECK(!lines_a.empty());
    CHECK(tally_a.ns() == tally_b.ns());
    CHECK(tally_a.nd() == tally_b.nd());
    CHECK(tally_a.delay_sum_s() == tally_b.delay_sum_s());

    // different seed moves things around
    TraceRecorder rec_c;
    Simulation sim_c(sc, 43, &rec_c);
    sim_c.run();
    std::string lines_c;
    for (const auto& e : rec_c.events) lines_c += e.line() + "\n";
    CHECK(lines_c != lines_a);
}

TEST_CASE("coordinated session runs the full protocol sequence") {
    // UE exactly on a learning point, no shadowing: refinement must pick the
    // offline best sector of that point
    Environment env;
    env.width = 18.0;
    env.depth = 10.0;
    env.height = 3.0;
    const auto lps = grid_lps(env, 15, 6);
    const Position ue_pos = lps[34].position;

    auto sc = make_scenario({{14.0, 3.5, 3.0}}, {ue_pos}, Mode::coordinated);
    TraceRecorder rec;
    Simulation sim(sc, 7, &rec);
    sim.inject_packet(0, 0);
    const RunTally tally = sim.run();

    CHECK(tally.ns() == 1);
    CHECK(tally.nd() == 0);
    // reception cannot complete faster than one data frame
    CHECK(tally.delay_sum_s() >= to_seconds(sc.timing.data_overhead));

    const int expected_beam = sc.map.phi(34, 0);
    REQUIRE(expected_beam != 0);
    const auto bids = filter(rec.events, "bid");
    REQUIRE(bids.size() == 1);
    CHECK(detail_has(bids[0], "beam=" + std::to_string(expected_beam)));

    // protocol order: measurement, association, switch-on, reservation,
    // refinement, feedback, identification, data
    const char* sequence[] = {"assoc", "disseminate", "navset", "brp-start", "bid",
                              "data-start", "session-end"};
    Time prev = -1;
    for (const char* action : sequence) {
        const auto ev = filter(rec.events, action);
        REQUIRE_MESSAGE(!ev.empty(), action);
        CHECK(ev.front().t >= prev);
        prev = ev.front().t;
    }
}

TEST_CASE("two simultaneous sessions: refinement serialized, data overlapping") {
    auto sc = make_scenario({{4.0, 5.0, 3.0}, {14.0, 5.0, 3.0}},
                            {{3.0, 4.0, 1.0}, {15.0, 6.0, 1.0}}, Mode::coordinated);
    TraceRecorder rec;
    Simulation sim(sc, 11, &rec);
    for (int k = 0; k < 40; ++k) {
        sim.inject_packet(0, 0);
        sim.inject_packet(1, 0);
    }
    const RunTally tally = sim.run();
    CHECK(tally.ns() == 80);
    CHECK(tally.nd() == 0);

    // window of BRP transmissions per AP must not interleave
    const auto brp_window = [&](const std::string& st) {
        Time lo = std::numeric_limits<Time>::max(), hi = -1;
        for (const auto& e : filter(rec.events, "tx", st))
            if (detail_has(e, "BRP")) {
                lo = std::min(lo, e.t - sc.timing.brp_frame);
                hi = std::max(hi, e.t);
            }
        return std::pair{lo, hi};
    };
    const auto [lo1, hi1] = brp_window("AP1");
    const auto [lo2, hi2] = brp_window("AP2");
    REQUIRE(hi1 >= 0);
    REQUIRE(hi2 >= 0);
    CHECK((hi1 <= lo2 || hi2 <= lo1));

    // data phases of the two links do overlap
    const auto data_window = [&](const std::string& st) {
        Time lo = std::numeric_limits<Time>::max(), hi = -1;
        for (const auto& e : filter(rec.events, "tx", st))
            if (detail_has(e, "Data")) {
                lo = std::min(lo, e.t);
                hi = std::max(hi, e.t);
            }
        return std::pair{lo, hi};
    };
    const auto [d1lo, d1hi] = data_window("AP1");
    const auto [d2lo, d2hi] = data_window("AP2");
    CHECK(d1lo < d2hi);
    CHECK(d2lo < d1hi);
}

TEST_CASE("refinement exclusivity guard fires on an injected violation") {
    auto sc = make_scenario({{4.0, 5.0, 3.0}, {14.0, 5.0, 3.0}},
                            {{3.0, 4.0, 1.0}}, Mode::coordinated);
    Simulation sim(sc, 3);
    sim.test_force_bf_state(0);
    sim.test_force_bf_state(1);
    sim.inject_packet(0, 0);
    CHECK_THROWS_AS(sim.run(), SimAbort);
}

TEST_CASE("lone uncoordinated AP delivers everything after a sector sweep") {
    auto sc = make_scenario({{9.0, 5.0, 3.0}}, {{4.0, 3.0, 1.0}}, Mode::uncoordinated);
    TraceRecorder rec;
    Simulation sim(sc, 5, &rec);
    for (int k = 0; k < 10; ++k) sim.inject_packet(0, 0);
    const RunTally tally = sim.run();
    CHECK(tally.ns() == 10);
    CHECK(tally.nd() == 0);
    CHECK(!filter(rec.events, "sls-start").empty());
    // the sweep transmits one frame per sector
    int ssw = 0;
    for (const auto& e : filter(rec.events, "tx", "AP1"))
        if (detail_has(e, "SSW ")) ++ssw;
    CHECK(ssw >= 36);
}

TEST_CASE("directional carrier sense stays blind across the room") {
    // two APs serving their own corners: neither defers for the other and
    // the two sector sweeps overlap in time
    auto sc = make_scenario({{2.0, 2.0, 3.0}, {16.0, 8.0, 3.0}},
                            {{2.0, 4.0, 1.0}, {16.0, 6.0, 1.0}}, Mode::uncoordinated);
    TraceRecorder rec;
    Simulation sim(sc, 13, &rec);
    for (int k = 0; k < 5; ++k) {
        sim.inject_packet(0, 0);
        sim.inject_packet(1, 0);
    }
    const RunTally tally = sim.run();
    CHECK(tally.ns() == 10);
    CHECK(filter(rec.events, "cs-busy").empty());

    const auto sweep_window = [&](const std::string& st) {
        Time lo = std::numeric_limits<Time>::max(), hi = -1;
        for (const auto& e : filter(rec.events, "tx", st))
            if (detail_has(e, "SSW ")) {
                lo = std::min(lo, e.t - sc.timing.ssw_frame);
                hi = std::max(hi, e.t);
            }
        return std::pair{lo, hi};
    };
    const auto [a_lo, a_hi] = sweep_window("AP1");
    const auto [b_lo, b_hi] = sweep_window("AP2");
    REQUIRE(a_hi >= 0);
    REQUIRE(b_hi >= 0);
    CHECK(a_lo < b_hi);
    CHECK(b_lo < a_hi);
}

namespace {

// Strongest sector of `ap` toward a target, and its received power.
std::pair<int, double> strongest_sector(const Scenario& sc, int ap, const Position& at) {
    const auto rays = trace_rays(sc.env, sc.aps[static_cast<std::size_t>(ap)].position, at,
                                 sc.max_reflections);
    const double lambda = kSpeedOfLight / sc.env.wigig_freq_hz;
    int best = 0;
    double best_p = -1e300;
    for (const Sector& s : sc.aps[static_cast<std::size_t>(ap)].codebook.sectors) {
        const double p = *rx_power_from_rays(rays, s, sc.wigig_tx_power_dbm, lambda);
        if (p > best_p) {
            best_p = p;
            best = s.id;
        }
    }
    return {best, best_p};
}

double power_through(const Scenario& sc, int ap, int sector, const Position& at) {
    const auto rays = trace_rays(sc.env, sc.aps[static_cast<std::size_t>(ap)].position, at,
                                 sc.max_reflections);
    const double lambda = kSpeedOfLight / sc.env.wigig_freq_hz;
    return *rx_power_from_rays(
        rays, sc.aps[static_cast<std::size_t>(ap)].codebook.sector(sector),
        sc.wigig_tx_power_dbm, lambda);
}

}  // namespace

TEST_CASE("training through live beams corrupts the sweep and forces retries") {
    // two saturated links cross at UE1's position; AP1 (UE1's strongest AP)
    // cannot get a clean sector sweep through
    const Position ap1{1.5, 5.0, 3.0};
    const Position ap2{14.0, 9.3, 3.0};
    const Position ap3{14.0, 0.9, 3.0};
    const Position ue1{8.0, 5.1, 1.0};
    const Position ue2{9.5, 6.2, 1.0};
    const Position ue3{9.5, 4.0, 1.0};
    auto sc = make_scenario({ap1, ap2, ap3}, {ue1, ue2, ue3}, Mode::uncoordinated);
    sc.duration = seconds(0.03);

    // the crossing beams put UE1's wanted signal below the lowest-rate
    // threshold whenever both links are on the air
    const auto [w_sec, wanted] = strongest_sector(sc, 0, ue1);
    const auto [i2_sec, p2] = strongest_sector(sc, 1, ue2);
    const auto [i3_sec, p3] = strongest_sector(sc, 2, ue3);
    const double interf_mw = dbm_to_mw(power_through(sc, 1, i2_sec, ue1)) +
                             dbm_to_mw(power_through(sc, 2, i3_sec, ue1));
    const double sinr_db = wanted - linear_to_db(interf_mw + sc.env.noise_mw());
    CHECK(sinr_db < sc.mcs.min_snr_db(1));
    // while UE1 still hears AP1 best, so it associates there
    CHECK(wanted > strongest_sector(sc, 1, ue1).second);
    CHECK(wanted > strongest_sector(sc, 2, ue1).second);

    TraceRecorder rec;
    Simulation sim(sc, 17, &rec);
    // keep the two interfering links saturated the whole run; UE1 has
    // enough backlog that AP1 keeps sweeping into the crossfire
    for (int k = 0; k < 2000; ++k) {
        sim.inject_packet(1, 0);
        sim.inject_packet(2, 0);
    }
    for (int k = 0; k < 200; ++k) sim.inject_packet(0, microseconds(900));
    const RunTally tally = sim.run();

    CHECK(!filter(rec.events, "sls-fail", "AP1").empty());
    CHECK(tally.generated() == tally.ns() + tally.nd() + tally.queued());
}

TEST_CASE("persistent interference drains the retry budget and drops packets") {
    // mild cross-coupling: both sweeps survive (SINR above the control
    // threshold) but neither data link holds its MCS while the other
    // transmits, so retries exhaust and packets drop
    const Position ap1{1.0, 8.0, 3.0};
    const Position ap2{17.0, 5.0, 3.0};
    const Position ue1{8.0, 8.0, 1.0};  // served by AP1
    const Position ue2{9.0, 5.0, 1.0};  // served by AP2
    auto sc = make_scenario({ap1, ap2}, {ue1, ue2}, Mode::uncoordinated);
    sc.duration = seconds(0.05);

    const auto [s1, w1] = strongest_sector(sc, 0, ue1);
    const auto [s2, w2] = strongest_sector(sc, 1, ue2);
    const double i_at_ue1 = power_through(sc, 1, s2, ue1);
    const double i_at_ue2 = power_through(sc, 0, s1, ue2);
    for (auto [wanted, interf] : {std::pair{w1, i_at_ue1}, std::pair{w2, i_at_ue2}}) {
        const double sinr =
            wanted - linear_to_db(dbm_to_mw(interf) + sc.env.noise_mw());
        const int mcs = mcs_from_snr(wanted - sc.env.noise_dbm, sc.mcs);
        CHECK(sinr >= sc.mcs.min_snr_db(1));  // sweeps stay clean
        CHECK(sinr < sc.mcs.min_snr_db(mcs)); // data frames fail under overlap
    }

    TraceRecorder rec;
    Simulation sim(sc, 19, &rec);
    for (int k = 0; k < 400; ++k) {
        sim.inject_packet(0, 0);
        sim.inject_packet(1, 0);
    }
    const RunTally tally = sim.run();
    CHECK(tally.nd() > 0);
    CHECK(tally.generated() == tally.ns() + tally.nd() + tally.queued());

    // a clean single-link control run drops nothing
    auto solo = make_scenario({ap1}, {ue1}, Mode::uncoordinated);
    Simulation control(solo, 19);
    for (int k = 0; k < 400; ++k) control.inject_packet(0, 0);
    const RunTally clean = control.run();
    CHECK(clean.nd() == 0);
}

TEST_CASE("coordinated and uncoordinated single-AP runs deliver the same packets") {
    const std::vector<Position> ues = {{4.0, 3.0, 1.0}, {12.0, 7.0, 1.0}};
    auto coord = make_scenario({{9.0, 5.0, 3.0}}, ues, Mode::coordinated, 20e6);
    coord.traffic.stop_fraction = 0.5;
    coord.duration = seconds(0.05);
    auto uncoord = coord;
    uncoord.mode = Mode::uncoordinated;

    Simulation a(coord, 29);
    Simulation b(uncoord, 29);
    const RunTally ta = a.run();
    const RunTally tb = b.run();

    REQUIRE(ta.generated() > 0);
    // identical arrival processes for the same seed
    for (int u = 0; u < 2; ++u)
        CHECK(ta.per_ue[u].generated == tb.per_ue[u].generated);
    // low offered load, no interference: every packet gets through in both
    for (int u = 0; u < 2; ++u) {
        CHECK(ta.per_ue[u].delivered == ta.per_ue[u].generated);
        CHECK(tb.per_ue[u].delivered == tb.per_ue[u].generated);
        CHECK(ta.per_ue[u].dropped == 0);
        CHECK(tb.per_ue[u].dropped == 0);
    }
}

TEST_CASE("conservation holds on a saturated coordinated run") {
    auto sc = make_scenario({{4.0, 5.0, 3.0}, {14.0, 5.0, 3.0}},
                            {{2.0, 2.0, 1.0}, {16.0, 8.0, 1.0}, {9.0, 5.0, 1.0},
                             {5.0, 8.0, 1.0}},
                            Mode::coordinated, 1e9);
    sc.online_shadowing_std_db = 2.0;
    sc.duration = seconds(0.03);
    Simulation sim(sc, 31);
    const RunTally tally = sim.run();
    REQUIRE(tally.generated() > 100);
    CHECK(tally.ns() > 0);
    CHECK(tally.generated() == tally.ns() + tally.nd() + tally.queued());
}
