#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "wigig/coordinator.hpp"
#include "wigig/units.hpp"

using namespace wigig;

namespace {

// Hand-built map with arbitrary but invariant-respecting contents. Powers
// are drawn in dBm around a plausible 60 GHz indoor range.
RadioMap random_map(std::mt19937_64& gen, int l, int n, int d_max) {
    std::uniform_real_distribution<double> rss(-70.0, -30.0);
    std::uniform_real_distribution<double> p_dbm(-75.0, -40.0);
    RadioMap map;
    map.psi.resize(l, n);
    map.phi.resize(l, n);
    map.p_off.resize(l, n);
    for (int i = 0; i < l; ++i) {
        map.lps.push_back({i, Position{0.0, 0.0, 0.0}});
        for (int j = 0; j < n; ++j) {
            map.psi(i, j) = rss(gen);
            const bool covered = gen() % 5 != 0;
            if (covered) {
                map.phi(i, j) = 1 + static_cast<int>(gen() % d_max);
                map.p_off(i, j) = dbm_to_mw(p_dbm(gen));
            } else {
                map.phi(i, j) = 0;
                map.p_off(i, j) = 0.0;
            }
        }
    }
    for (int j = 0; j < n; ++j) {
        map.ap_ids.push_back(j + 1);
        map.sectors_per_ap.push_back(d_max);
    }
    map.noise_mw = dbm_to_mw(-71.5);
    map.validate();
    return map;
}

McsTable short_table() {
    McsTable t;
    t.entries = {{1, 2.0, 400e6}, {2, 8.0, 1000e6}, {3, 14.0, 2000e6}};
    return t;
}

}  // namespace

TEST_CASE("mcs lookup boundaries and monotonicity") {
    const McsTable t = default_mcs_table();
    t.validate();
    CHECK(t.max_index() == 12);
    CHECK(t.rate_bps(1) == doctest::Approx(385e6));
    CHECK(t.rate_bps(12) == doctest::Approx(4620e6));

    CHECK(mcs_from_snr(0.5, t) == 0);           // below the ladder
    CHECK(mcs_from_snr(1.0, t) == 1);           // inclusive at the threshold
    CHECK(mcs_from_snr(21.0, t) == 12);
    CHECK(mcs_from_snr(100.0, t) == 12);

    int prev = 0;
    for (double snr = -5.0; snr < 30.0; snr += 0.25) {
        const int idx = mcs_from_snr(snr, t);
        CHECK(idx >= prev);
        prev = idx;
    }

    McsTable bad = t;
    bad.entries[3].min_snr_db = bad.entries[2].min_snr_db;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("snr and sinr at learning points") {
    std::mt19937_64 gen(5);
    RadioMap map = random_map(gen, 6, 2, 8);
    map.phi(0, 0) = 3;
    map.p_off(0, 0) = 1e-6;
    map.phi(0, 1) = 5;
    map.p_off(0, 1) = 1e-6;
    map.noise_mw = 1e-10;

    CHECK(snr_at_lp(map, 0, 0, 3) == doctest::Approx(1e4));
    // equal signal and interference far above the noise: 0 dB
    CHECK(linear_to_db(sinr_at_lp(map, 0, 0, 3, 1, 5)) == doctest::Approx(0.0).epsilon(1e-3));
    // interference of zero reduces to the SNR
    map.phi(1, 0) = 2;
    map.p_off(1, 0) = 4e-7;
    map.phi(1, 1) = 7;
    map.p_off(1, 1) = map.noise_mw * 1e-9;
    CHECK(sinr_at_lp(map, 1, 0, 2, 1, 7) ==
          doctest::Approx(snr_at_lp(map, 1, 0, 2)).epsilon(1e-6));

    // SINR never exceeds SNR at the same point
    for (int z = 0; z < map.num_lps(); ++z) {
        const int dn = map.phi(z, 0), dm = map.phi(z, 1);
        if (dn == 0 || dm == 0) continue;
        CHECK(sinr_at_lp(map, z, 0, dn, 1, dm) <= snr_at_lp(map, z, 0, dn));
    }

    CHECK_THROWS_AS(snr_at_lp(map, 0, 0, 4), std::invalid_argument);
    map.phi(2, 0) = 0;
    map.p_off(2, 0) = 0.0;
    CHECK_THROWS_AS(snr_at_lp(map, 2, 0, 0), std::invalid_argument);
}

TEST_CASE("association picks the closest covered unused AP") {
    ExemplarSet ex;
    ex.clusters.resize(3);
    const auto mk = [](double a, double b) {
        Cluster c;
        c.exemplar_lp = 0;
        c.exemplar = Eigen::Vector2d{a, b};
        c.member_lps = {0};
        return c;
    };
    ex.clusters[0][4] = {mk(-40.0, -60.0)};
    ex.clusters[1][9] = {mk(-55.0, -45.0)};
    // AP 2 covers nothing (no groups at all)

    const OnlineFingerprint psi = Eigen::Vector2d{-41.0, -59.0};
    CHECK(associate_ue(psi, ex, {0, 1, 2}) == 0);
    CHECK(associate_ue(psi, ex, {1, 2}) == 1);
    CHECK(associate_ue(psi, ex, {2}) == std::nullopt);
    CHECK(associate_ue(psi, ex, {}) == std::nullopt);
}

TEST_CASE("association equals a brute force scan over all exemplars") {
    std::mt19937_64 gen(17);
    std::uniform_real_distribution<double> rss(-70.0, -30.0);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(gen() % 2);
        ExemplarSet ex;
        ex.clusters.resize(n);
        for (int ap = 0; ap < n; ++ap) {
            const int groups = 1 + static_cast<int>(gen() % 3);
            for (int g = 0; g < groups; ++g) {
                const int sector = 1 + static_cast<int>(gen() % 12);
                auto& clusters = ex.clusters[ap][sector];
                const int cc = 1 + static_cast<int>(gen() % 2);
                for (int c = 0; c < cc; ++c) {
                    Cluster cl;
                    cl.exemplar_lp = c;
                    cl.exemplar = Eigen::Vector3d{rss(gen), rss(gen), rss(gen)};
                    cl.member_lps = {c};
                    clusters.push_back(cl);
                }
            }
        }
        OnlineFingerprint psi = Eigen::Vector3d{rss(gen), rss(gen), rss(gen)};

        std::set<int> unused;
        for (int ap = 0; ap < n; ++ap)
            if (gen() % 3 != 0) unused.insert(ap);

        std::optional<int> expect;
        double best = std::numeric_limits<double>::infinity();
        for (int ap : unused)
            for (const auto& [sector, clusters] : ex.clusters[ap])
                for (const Cluster& c : clusters) {
                    const double d = (psi - c.exemplar).squaredNorm();
                    if (d < best) {
                        best = d;
                        expect = ap;
                    }
                }
        CHECK(associate_ue(psi, ex, unused) == expect);
    }
}

TEST_CASE("beam selection ranks by minimum exemplar distance") {
    ExemplarSet ex;
    ex.clusters.resize(1);
    const auto mk = [](std::initializer_list<double> v) {
        Cluster c;
        c.exemplar_lp = 0;
        c.exemplar = Eigen::VectorXd(2);
        int i = 0;
        for (double x : v) c.exemplar(i++) = x;
        c.member_lps = {0};
        return c;
    };
    ex.clusters[0][15] = {mk({-40.0, -60.0}), mk({-42.0, -58.0})};
    ex.clusters[0][3] = {mk({-48.0, -52.0})};
    ex.clusters[0][22] = {mk({-70.0, -30.0})};

    // psi exactly equal to an exemplar of sector 15: rank 1 at distance 0
    const OnlineFingerprint psi = Eigen::Vector2d{-42.0, -58.0};
    const auto beams = select_best_beams(psi, 0, ex, 2);
    REQUIRE(beams.size() == 2);
    CHECK(beams[0] == 15);
    CHECK(beams[1] == 3);

    // X larger than the number of occurring sectors returns all of them
    CHECK(select_best_beams(psi, 0, ex, 10).size() == 3);
}

TEST_CASE("beam selection distances are non-decreasing and offset invariant") {
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> rss(-70.0, -30.0);
    for (int trial = 0; trial < 30; ++trial) {
        ExemplarSet ex;
        ex.clusters.resize(1);
        const int sectors = 3 + static_cast<int>(gen() % 8);
        for (int sct = 1; sct <= sectors; ++sct) {
            auto& cl = ex.clusters[0][sct];
            const int cc = 1 + static_cast<int>(gen() % 3);
            for (int c = 0; c < cc; ++c) {
                Cluster x;
                x.exemplar_lp = c;
                x.exemplar = Eigen::Vector2d{rss(gen), rss(gen)};
                x.member_lps = {c};
                cl.push_back(x);
            }
        }
        OnlineFingerprint psi = Eigen::Vector2d{rss(gen), rss(gen)};
        const auto beams = select_best_beams(psi, 0, ex, 6);

        const auto min_dist = [&](int sector) {
            double best = std::numeric_limits<double>::infinity();
            for (const Cluster& c : ex.clusters[0].at(sector))
                best = std::min(best, (psi - c.exemplar).squaredNorm());
            return best;
        };
        for (std::size_t i = 1; i < beams.size(); ++i)
            CHECK(min_dist(beams[i - 1]) <= min_dist(beams[i]) + 1e-12);

        // a common additive offset on every fingerprint leaves the order intact
        ExemplarSet shifted = ex;
        for (auto& [sct, clusters] : shifted.clusters[0])
            for (Cluster& c : clusters) c.exemplar.array() += 7.5;
        OnlineFingerprint psi2 = psi.array() + 7.5;
        CHECK(select_best_beams(psi2, 0, shifted, 6) == beams);
    }
}

TEST_CASE("bad beam candidates equal the exhaustive criterion scan") {
    std::mt19937_64 gen(31);
    const McsTable table = short_table();
    for (int trial = 0; trial < 100; ++trial) {
        const int l = 5 + static_cast<int>(gen() % 26);  // up to 30
        const int n_aps = 2 + static_cast<int>(gen() % 2);
        const int d_max = 3 + static_cast<int>(gen() % 10);  // up to 12
        const RadioMap map = random_map(gen, l, n_aps, d_max);

        const int victim = static_cast<int>(gen() % n_aps);
        int interferer = static_cast<int>(gen() % n_aps);
        if (interferer == victim) interferer = (victim + 1) % n_aps;

        std::vector<int> beams;
        for (int d = 1; d <= std::min(4, d_max); ++d) beams.push_back(d);

        const auto got = bad_beam_candidates(map, victim, beams, interferer, table);
        REQUIRE(got.size() == beams.size());

        for (std::size_t x = 0; x < beams.size(); ++x) {
            std::set<int> expect;
            for (int d_m = 1; d_m <= d_max; ++d_m) {
                for (int z = 0; z < l; ++z) {
                    if (map.phi(z, victim) != beams[x]) continue;
                    if (map.phi(z, interferer) != d_m) continue;
                    const double snr = map.p_off(z, victim) / map.noise_mw;
                    const double sinr =
                        map.p_off(z, victim) / (map.p_off(z, interferer) + map.noise_mw);
                    if (mcs_from_snr(linear_to_db(sinr), table) <
                        mcs_from_snr(linear_to_db(snr), table))
                        expect.insert(d_m);
                }
            }
            CHECK(got[x] == expect);
        }
    }
}

TEST_CASE("best sector and beam ranking against brute force on random instances") {
    // Eq. 2 and Eq. 4 style brute force over random inputs
    std::mt19937_64 gen(37);
    std::uniform_real_distribution<double> p_dbm(-90.0, -40.0);
    std::uniform_real_distribution<double> rss(-70.0, -30.0);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(gen() % 12);
        std::vector<double> powers;
        for (int i = 0; i < d; ++i) powers.push_back(p_dbm(gen));
        const double thr = -70.0;
        int expect = 0;
        double best = -1e300;
        for (int i = 0; i < d; ++i)
            if (powers[static_cast<std::size_t>(i)] > best) {
                best = powers[static_cast<std::size_t>(i)];
                expect = i + 1;
            }
        const auto got = best_sector_id(powers, thr);
        if (best < thr)
            CHECK_FALSE(got.has_value());
        else
            CHECK(got == expect);
    }
}

TEST_CASE("bad beam cases with no or weak overlap") {
    std::mt19937_64 gen(41);
    RadioMap map = random_map(gen, 9, 2, 6);
    const McsTable table = short_table();

    // disjoint coverage: interferer column all null
    map.phi.col(1).setZero();
    map.p_off.col(1).setZero();
    map.phi(0, 0) = 2;
    map.p_off(0, 0) = 1e-6;
    const auto sets = bad_beam_candidates(map, 0, {2}, 1, table);
    CHECK(sets[0].empty());

    // interference too weak to shift any MCS boundary
    map.phi(0, 1) = 3;
    map.p_off(0, 1) = map.noise_mw * 1e-6;
    const auto weak = bad_beam_candidates(map, 0, {2}, 1, table);
    CHECK(weak[0].empty());

    CHECK_THROWS_AS(bad_beam_candidates(map, 0, {2}, 0, table), std::invalid_argument);
}

TEST_CASE("bid refinement reproduces and prunes the offline candidates") {
    // one victim beam covering exactly one learning point, so the offline
    // and substituted criteria coincide when the BID matches the database
    RadioMap map;
    const int l = 4;
    map.psi.resize(l, 2);
    map.psi.setConstant(-50.0);
    map.phi.resize(l, 2);
    map.p_off.resize(l, 2);
    map.phi << 7, 1, 0, 2, 0, 3, 0, 0;
    map.p_off << 2e-7, 5e-8, 0.0, 1e-7, 0.0, 1e-7, 0.0, 0.0;
    for (int i = 0; i < l; ++i) map.lps.push_back({i, Position{0.0, 0.0, 0.0}});
    map.ap_ids = {1, 2};
    map.sectors_per_ap = {12, 12};
    map.noise_mw = 1e-9;
    map.validate();

    const McsTable table = short_table();
    const auto offline = bad_beam_candidates(map, 0, {7}, 1, table).front();
    REQUIRE(!offline.empty());

    ActiveLinkRecord bid;
    bid.ap_col = 0;
    bid.beam = 7;
    bid.rx_power_dbm = mw_to_dbm(map.p_off(0, 0));
    bid.mcs_index = mcs_from_snr(linear_to_db(snr_at_lp(map, 0, 0, 7)), table);

    // actual values equal to the offline database: identical candidate set
    CHECK(refine_bad_beams(map, bid, 1, table) == offline);

    // 10 dB more actual power: still a subset of the offline candidates
    ActiveLinkRecord strong = bid;
    strong.rx_power_dbm += 10.0;
    strong.mcs_index = mcs_from_snr(strong.rx_power_dbm - mw_to_dbm(map.noise_mw), table);
    const auto refined = refine_bad_beams(map, strong, 1, table);
    for (int d : refined) CHECK(offline.contains(d));

    // actual MCS at the lowest nonzero index with the SINR still meeting it
    ActiveLinkRecord floor = bid;
    floor.mcs_index = 1;
    floor.rx_power_dbm = mw_to_dbm((map.p_off(0, 1) + map.noise_mw) *
                                   db_to_linear(table.min_snr_db(1) + 1.0));
    CHECK(refine_bad_beams(map, floor, 1, table).empty());

    ActiveLinkRecord bogus = bid;
    bogus.beam = 99;
    CHECK_THROWS_AS(refine_bad_beams(map, bogus, 1, table), std::invalid_argument);
}

TEST_CASE("refinement subset property on random maps") {
    std::mt19937_64 gen(43);
    const McsTable table = short_table();
    for (int trial = 0; trial < 50; ++trial) {
        const RadioMap map = random_map(gen, 12, 2, 8);
        for (int beam = 1; beam <= 8; ++beam) {
            // pick any covered learning point for that beam
            int z = -1;
            for (int i = 0; i < map.num_lps(); ++i)
                if (map.phi(i, 0) == beam) z = i;
            if (z < 0) continue;
            const auto offline = bad_beam_candidates(map, 0, {beam}, 1, table).front();
            ActiveLinkRecord bid;
            bid.ap_col = 0;
            bid.beam = beam;
            bid.rx_power_dbm = mw_to_dbm(map.p_off(z, 0)) + 10.0;
            bid.mcs_index = mcs_from_snr(bid.rx_power_dbm - mw_to_dbm(map.noise_mw), table);
            for (int d : refine_bad_beams(map, bid, 1, table)) CHECK(offline.contains(d));
        }
    }
}

TEST_CASE("bad beam elimination is an order preserving set difference") {
    CHECK(eliminate_bad_beams({3, 7, 9}, {7}) == std::vector<int>{3, 9});
    CHECK(eliminate_bad_beams({3, 7, 9}, {}) == std::vector<int>{3, 7, 9});
    CHECK(eliminate_bad_beams({3, 7, 9}, {3, 7, 9, 11}).empty());
    CHECK(eliminate_bad_beams({}, {1}).empty());
}
