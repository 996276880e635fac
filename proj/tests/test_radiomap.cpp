#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "wigig/exemplars.hpp"
#include "wigig/radiomap.hpp"
#include "wigig/units.hpp"

using namespace wigig;

namespace {

Environment fig3_room() {
    Environment env;
    env.width = 18.0;
    env.depth = 10.0;
    env.height = 3.0;
    return env;
}

std::vector<LearningPoint> grid_lps(const Environment& env, int nx, int ny, double z) {
    std::vector<LearningPoint> lps;
    const double dx = env.width / nx;
    const double dy = env.depth / ny;
    int idx = 0;
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            lps.push_back({idx++, Position{(i + 0.5) * dx, (j + 0.5) * dy, z}});
    return lps;
}

RadioMapParams default_params() {
    RadioMapParams p;
    p.coverage_threshold_dbm = -70.5;
    return p;
}

RadioMap fig3_map(const Environment& env) {
    std::vector<ApSite> aps;
    aps.push_back({1, Position{14.0, 3.5, 3.0}, make_codebook(1)});
    aps.push_back({2, Position{4.0, 7.0, 3.0}, make_codebook(2)});
    return build_radio_map(env, aps, grid_lps(env, 15, 6, 1.0), default_params());
}

std::string temp_path(const char* name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

}  // namespace

TEST_CASE("best sector argmax with threshold and ties") {
    const double powers[] = {-60.0, -50.0, -55.0};
    CHECK(best_sector_id(powers, -78.0) == 2);

    const double weak[] = {-90.0, -85.0};
    CHECK_FALSE(best_sector_id(weak, -78.0).has_value());

    // equal maxima at ids 3 and 7: lowest wins
    const double tied[] = {-60.0, -55.0, -50.0, -52.0, -51.0, -53.0, -50.0};
    CHECK(best_sector_id(tied, -78.0) == 3);

    CHECK_THROWS_AS(best_sector_id({}, -78.0), std::invalid_argument);
}

TEST_CASE("single cell map at a beam center") {
    Environment env = fig3_room();
    std::vector<ApSite> aps;
    aps.push_back({1, Position{9.0, 5.0, 3.0}, make_codebook(1)});

    // position one learning point in the boresight of sector 5
    const Sector& s = aps[0].codebook.sector(5);
    const double d = 2.0;
    const double az = deg2rad(s.az_center_deg);
    const double el = deg2rad(s.el_tilt_deg);
    const Position lp_pos = aps[0].position +
                            d * Position{std::cos(el) * std::cos(az),
                                         std::cos(el) * std::sin(az), std::sin(el)};
    REQUIRE(env.contains(lp_pos));

    const auto map = build_radio_map(env, aps, {{0, lp_pos}}, default_params());
    CHECK(map.phi(0, 0) == 5);
    CHECK(map.p_off(0, 0) > 0.0);
}

TEST_CASE("out of budget learning point is null with zero power") {
    Environment env;
    env.width = 60.0;
    env.depth = 10.0;
    env.height = 3.0;
    std::vector<ApSite> aps;
    aps.push_back({1, Position{1.0, 5.0, 3.0}, make_codebook(1)});
    RadioMapParams params = default_params();
    params.max_reflections = 0;
    params.wigig_tx_power_dbm = -20.0;  // starve the link budget

    const auto map = build_radio_map(env, aps, {{0, Position{59.0, 5.0, 1.0}}}, params);
    CHECK(map.phi(0, 0) == 0);
    CHECK(map.p_off(0, 0) == 0.0);
    map.validate();
}

TEST_CASE("map construction invariants on a two-AP grid") {
    const Environment env = fig3_room();
    const auto map = fig3_map(env);
    map.validate();
    CHECK(map.num_lps() == 90);
    CHECK(map.num_aps() == 2);

    std::vector<ApSite> aps;
    aps.push_back({1, Position{14.0, 3.5, 3.0}, make_codebook(1)});
    aps.push_back({2, Position{4.0, 7.0, 3.0}, make_codebook(2)});
    const RadioMapParams params = default_params();
    const double lambda = kSpeedOfLight / env.wigig_freq_hz;

    // every stored best sector agrees with a brute-force recomputation
    for (int l = 0; l < map.num_lps(); ++l) {
        for (int n = 0; n < map.num_aps(); ++n) {
            const auto rays =
                trace_rays(env, aps[n].position, map.lps[l].position, params.max_reflections);
            int best = 0;
            double best_p = -1e300;
            for (const Sector& s : aps[n].codebook.sectors) {
                const auto p = rx_power_from_rays(rays, s, params.wigig_tx_power_dbm, lambda);
                if (*p > best_p) {
                    best_p = *p;
                    best = s.id;
                }
            }
            if (best_p < params.coverage_threshold_dbm) best = 0;
            CHECK(map.phi(l, n) == best);
            if (best != 0)
                CHECK(map.p_off(l, n) == doctest::Approx(dbm_to_mw(best_p)).epsilon(1e-12));
        }
    }
}

TEST_CASE("fig 3 style map is directionally coherent") {
    const Environment env = fig3_room();
    std::vector<ApSite> aps;
    aps.push_back({1, Position{14.0, 3.5, 3.0}, make_codebook(1)});
    const auto map = build_radio_map(env, aps, grid_lps(env, 15, 6, 1.0), default_params());

    std::set<int> ids;
    int aligned = 0;
    int covered = 0;
    for (int l = 0; l < map.num_lps(); ++l) {
        const int d = map.phi(l, 0);
        if (d == 0) continue;
        ++covered;
        ids.insert(d);
        const Position rel = map.lps[l].position - aps[0].position;
        const double az = rad2deg(std::atan2(rel.y(), rel.x()));
        const Sector& s = aps[0].codebook.sector(d);
        if (std::abs(wrap_deg(az - s.az_center_deg)) <= s.az_width_deg) ++aligned;
    }
    CHECK(covered > 45);            // most of the room is covered
    CHECK(ids.size() >= 8);         // many distinct sector regions
    CHECK(aligned >= covered * 9 / 10);  // best sectors point at their points
}

TEST_CASE("overlapped learning points equal a brute force scan") {
    const Environment env = fig3_room();
    const auto map = fig3_map(env);

    int checked = 0;
    for (int d_n = 1; d_n <= 36; ++d_n) {
        for (int d_m = 1; d_m <= 36; d_m += 5) {
            const auto got = overlapped_lps(map, 0, d_n, 1, d_m);
            std::vector<int> expect;
            for (int l = 0; l < map.num_lps(); ++l)
                if (map.phi(l, 0) == d_n && map.phi(l, 1) == d_m) expect.push_back(l);
            CHECK(got == expect);
            checked += static_cast<int>(got.size());
        }
    }
    CHECK(checked > 0);  // the two coverages do overlap somewhere

    CHECK(overlapped_lps(map, 0, 1, 1, 1).empty() ==
          [&] {
              for (int l = 0; l < map.num_lps(); ++l)
                  if (map.phi(l, 0) == 1 && map.phi(l, 1) == 1) return false;
              return true;
          }());
    CHECK_THROWS_AS(overlapped_lps(map, 0, 1, 0, 2), std::invalid_argument);
}

TEST_CASE("save and load round trip") {
    const Environment env = fig3_room();
    const auto map = fig3_map(env);
    const auto exemplars = build_exemplars(map);
    const std::string path = temp_path("wigig_map_roundtrip.json");

    save_radio_map(map, path, &exemplars);
    ExemplarSet loaded_ex;
    const RadioMap loaded = load_radio_map(path, &loaded_ex);

    CHECK(loaded.psi == map.psi);
    CHECK(loaded.phi == map.phi);
    CHECK(loaded.p_off == map.p_off);
    CHECK(loaded.ap_ids == map.ap_ids);
    CHECK(loaded.sectors_per_ap == map.sectors_per_ap);
    CHECK(loaded.noise_mw == map.noise_mw);
    REQUIRE(loaded_ex.num_aps() == exemplars.num_aps());
    for (int n = 0; n < exemplars.num_aps(); ++n) {
        REQUIRE(loaded_ex.clusters[n].size() == exemplars.clusters[n].size());
        for (const auto& [sector, clusters] : exemplars.clusters[n]) {
            const auto* got = loaded_ex.find(n, sector);
            REQUIRE(got != nullptr);
            REQUIRE(got->size() == clusters.size());
            for (std::size_t c = 0; c < clusters.size(); ++c) {
                CHECK((*got)[c].exemplar_lp == clusters[c].exemplar_lp);
                CHECK((*got)[c].member_lps == clusters[c].member_lps);
                CHECK((*got)[c].exemplar == clusters[c].exemplar);
            }
        }
    }
    std::remove(path.c_str());
}

TEST_CASE("load rejects damaged files") {
    const Environment env = fig3_room();
    std::vector<ApSite> aps;
    aps.push_back({1, Position{14.0, 3.5, 3.0}, make_codebook(1)});
    const auto map = build_radio_map(env, aps, grid_lps(env, 5, 3, 1.0), default_params());
    const std::string path = temp_path("wigig_map_damage.json");
    save_radio_map(map, path);

    // truncation
    {
        std::ifstream in(path);
        std::string all((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(path, std::ios::trunc);
        out << all.substr(0, all.size() / 2);
    }
    CHECK_THROWS_AS(load_radio_map(path), std::runtime_error);

    // dimension mismatch between header and matrices
    save_radio_map(map, path);
    {
        std::ifstream in(path);
        nlohmann::json j;
        in >> j;
        j["L"] = map.num_lps() + 1;
        std::ofstream out(path, std::ios::trunc);
        out << j.dump();
    }
    CHECK_THROWS_AS(load_radio_map(path), std::runtime_error);

    // not a radio map at all
    {
        std::ofstream out(path, std::ios::trunc);
        out << "{\"format\": \"something-else\"}";
    }
    CHECK_THROWS_AS(load_radio_map(path), std::runtime_error);

    CHECK_THROWS_AS(load_radio_map(temp_path("wigig_no_such_file.json")),
                    std::runtime_error);
    std::remove(path.c_str());
}

TEST_CASE("null and zero entries stay consistent through selection") {
    const Environment env = fig3_room();
    const auto map = fig3_map(env);
    const int ids[] = {2};
    const RadioMap sub = map.select_aps(ids);
    sub.validate();
    CHECK(sub.num_aps() == 1);
    CHECK(sub.ap_ids == std::vector<int>{2});
    CHECK(sub.phi.col(0) == map.phi.col(1));
    const int bad[] = {9};
    CHECK_THROWS_AS(map.select_aps(bad), std::invalid_argument);
}
