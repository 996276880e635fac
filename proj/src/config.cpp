#include "wigig/config.hpp"

#include <fstream>
#include <json.hpp>
#include <set>
#include <sstream>

#include "wigig/rng.hpp"

namespace wigig {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw std::runtime_error("config: " + field + ": " + what);
}

void check_keys(const json& obj, const std::set<std::string>& known,
                const std::string& where, std::vector<std::string>& warnings) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.contains(it.key()))
            warnings.push_back("unknown key \"" + where + "." + it.key() + "\" ignored");
}

Position read_position(const json& j, const std::string& field) {
    if (!j.is_array() || j.size() != 3) fail(field, "expected [x, y, z]");
    return Position(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

sim::Time us_field(const json& j, const char* key, sim::Time fallback) {
    if (!j.contains(key)) return fallback;
    return sim::microseconds(j.at(key).get<double>());
}

}  // namespace

RadioMapParams ScenarioConfig::map_params() const {
    RadioMapParams p;
    p.wigig_tx_power_dbm = wigig_tx_power_dbm;
    p.wifi_tx_power_dbm = wifi_tx_power_dbm;
    p.max_reflections = max_reflections;
    p.coverage_threshold_dbm = coverage_threshold_dbm;
    p.wifi = wifi_channel;
    return p;
}

std::vector<ApSite> ScenarioConfig::active_sites(const std::vector<int>& ids) const {
    std::vector<ApSite> out;
    for (int id : ids) {
        bool found = false;
        for (const ApSite& ap : aps)
            if (ap.id == id) {
                out.push_back(ap);
                found = true;
            }
        if (!found) fail("sweep", "AP id " + std::to_string(id) + " not configured");
    }
    return out;
}

std::vector<int> ScenarioConfig::all_ap_ids() const {
    std::vector<int> ids;
    for (const ApSite& ap : aps) ids.push_back(ap.id);
    return ids;
}

sim::Scenario ScenarioConfig::make_scenario(const RadioMap& map,
                                            const ExemplarSet& exemplars,
                                            sim::Mode run_mode,
                                            const std::vector<int>& active_ids) const {
    sim::Scenario sc;
    sc.env = env;
    sc.aps = active_sites(active_ids);
    sc.ues = ues;
    sc.map = map;
    sc.exemplars = exemplars;
    sc.mcs = mcs;
    sc.timing = timing;
    sc.traffic = traffic;
    sc.wigig_tx_power_dbm = wigig_tx_power_dbm;
    sc.wifi_tx_power_dbm = wifi_tx_power_dbm;
    sc.ue_tx_power_dbm = ue_tx_power_dbm;
    sc.wifi_channel = wifi_channel;
    sc.online_shadowing_std_db = online_shadowing_std_db;
    sc.cs_threshold_dbm = cs_threshold_dbm;
    sc.link_margin_db = link_margin_db;
    sc.best_beams = best_beams;
    sc.max_reflections = max_reflections;
    sc.duration = duration;
    sc.mode = run_mode;
    return sc;
}

ScenarioConfig default_config() {
    ScenarioConfig c;
    c.env.width = 18.0;
    c.env.depth = 10.0;
    c.env.height = 3.0;

    // two ceiling rows of four, ids 1-4 south and 5-8 north, so the
    // standard subsets {1}, {1,8}, {1,2,7,8}, ... are maximally dispersed
    int id = 1;
    for (double y : {2.5, 7.5})
        for (double x : {2.25, 6.75, 11.25, 15.75})
            c.aps.push_back({id++, Position{x, y, 3.0}, SectorCodebook{}});
    for (ApSite& ap : c.aps) ap.codebook = make_codebook(ap.id, c.codebook);

    Rng placement(42);
    for (int u = 0; u < 24; ++u)
        c.ues.push_back(Position{0.5 + placement.u01() * (c.env.width - 1.0),
                                 0.5 + placement.u01() * (c.env.depth - 1.0), 1.0});

    int lp = 0;
    for (int j = 0; j < 6; ++j)
        for (int i = 0; i < 15; ++i)
            c.lps.push_back({lp++, Position{(i + 0.5) * c.env.width / 15.0,
                                            (j + 0.5) * c.env.depth / 6.0, 1.0}});

    c.coverage_threshold_dbm = c.env.noise_dbm + c.mcs.min_snr_db(1);
    for (std::uint64_t s = 1; s <= 10; ++s) c.seeds.push_back(s);

    c.sweep_subsets = {{1, {1}},
                       {2, {1, 8}},
                       {4, {1, 2, 7, 8}},
                       {6, {1, 2, 3, 4, 5, 7}},
                       {8, {1, 2, 3, 4, 5, 6, 7, 8}}};
    return c;
}

ScenarioConfig parse_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw std::runtime_error(std::string("config: malformed JSON: ") + e.what());
    }
    if (!j.is_object()) throw std::runtime_error("config: top level must be an object");

    ScenarioConfig c = default_config();
    check_keys(j,
               {"environment", "codebook", "aps", "ues", "lps", "traffic", "radio",
                "timing", "mcs_table", "sim", "sweep"},
               "", c.warnings);

    bool codebook_changed = false;

    if (j.contains("environment")) {
        const json& e = j.at("environment");
        check_keys(e,
                   {"width", "depth", "height", "reflection_loss_db", "noise_dbm",
                    "wifi_wall_loss_db", "interior_walls"},
                   "environment", c.warnings);
        c.env.width = e.value("width", c.env.width);
        c.env.depth = e.value("depth", c.env.depth);
        c.env.height = e.value("height", c.env.height);
        if (c.env.width <= 0 || c.env.depth <= 0 || c.env.height <= 0)
            fail("environment", "dimensions must be positive");
        if (e.contains("reflection_loss_db")) {
            const double loss = e.at("reflection_loss_db").get<double>();
            if (loss < 0) fail("environment.reflection_loss_db", "must be >= 0");
            c.env.set_reflection_loss(loss);
        }
        c.env.noise_dbm = e.value("noise_dbm", c.env.noise_dbm);
        c.env.wifi_wall_loss_db = e.value("wifi_wall_loss_db", c.env.wifi_wall_loss_db);
        if (e.contains("interior_walls")) {
            for (const json& w : e.at("interior_walls")) {
                InteriorWall wall;
                const std::string axis = w.at("axis").get<std::string>();
                if (axis != "x" && axis != "y")
                    fail("environment.interior_walls.axis", "must be \"x\" or \"y\"");
                wall.axis = axis == "x" ? 0 : 1;
                wall.position = w.at("position").get<double>();
                wall.from = w.at("from").get<double>();
                wall.to = w.at("to").get<double>();
                c.env.interior_walls.push_back(wall);
            }
        }
    }

    if (j.contains("codebook")) {
        const json& cb = j.at("codebook");
        check_keys(cb,
                   {"azimuth_count", "azimuth_offset_deg", "elevation_tilts_deg",
                    "az_width_deg", "el_width_deg", "g0_override_dbi"},
                   "codebook", c.warnings);
        c.codebook.azimuth_count = cb.value("azimuth_count", c.codebook.azimuth_count);
        if (c.codebook.azimuth_count < 1) fail("codebook.azimuth_count", "must be >= 1");
        c.codebook.azimuth_offset_deg =
            cb.value("azimuth_offset_deg", c.codebook.azimuth_offset_deg);
        if (cb.contains("elevation_tilts_deg"))
            c.codebook.elevation_tilts_deg =
                cb.at("elevation_tilts_deg").get<std::vector<double>>();
        c.codebook.az_width_deg = cb.value("az_width_deg", c.codebook.az_width_deg);
        c.codebook.el_width_deg = cb.value("el_width_deg", c.codebook.el_width_deg);
        if (c.codebook.az_width_deg <= 0 || c.codebook.az_width_deg >= 180 ||
            c.codebook.el_width_deg <= 0 || c.codebook.el_width_deg >= 180)
            fail("codebook", "beamwidths must lie in (0, 180)");
        if (cb.contains("g0_override_dbi") && !cb.at("g0_override_dbi").is_null())
            c.codebook.g0_override_db = cb.at("g0_override_dbi").get<double>();
        codebook_changed = true;
    }

    if (j.contains("aps")) {
        c.aps.clear();
        int idx = 0;
        for (const json& a : j.at("aps")) {
            const std::string where = "aps[" + std::to_string(idx) + "]";
            check_keys(a, {"id", "position"}, where, c.warnings);
            ApSite site;
            site.id = a.value("id", idx + 1);
            site.position = read_position(a.at("position"), where + ".position");
            if (!c.env.contains(site.position)) fail(where + ".position", "outside room");
            c.aps.push_back(site);
            ++idx;
        }
        if (c.aps.empty()) fail("aps", "need at least one AP");
        codebook_changed = true;
    }
    if (codebook_changed)
        for (ApSite& ap : c.aps) ap.codebook = make_codebook(ap.id, c.codebook);

    if (j.contains("ues")) {
        const json& u = j.at("ues");
        c.ues.clear();
        if (u.is_array()) {
            int idx = 0;
            for (const json& p : u)
                c.ues.push_back(
                    read_position(p, "ues[" + std::to_string(idx++) + "]"));
        } else {
            check_keys(u, {"count", "height", "placement_seed"}, "ues", c.warnings);
            const int count = u.value("count", 24);
            if (count < 1) fail("ues.count", "must be >= 1");
            const double height = u.value("height", 1.0);
            Rng placement(u.value("placement_seed", 42ULL));
            for (int k = 0; k < count; ++k)
                c.ues.push_back(Position{0.5 + placement.u01() * (c.env.width - 1.0),
                                         0.5 + placement.u01() * (c.env.depth - 1.0),
                                         height});
        }
        int idx = 0;
        for (const Position& p : c.ues) {
            if (!c.env.contains(p))
                fail("ues[" + std::to_string(idx) + "]", "outside room");
            ++idx;
        }
    }

    if (j.contains("lps")) {
        const json& l = j.at("lps");
        c.lps.clear();
        if (l.is_array()) {
            int idx = 0;
            for (const json& p : l) {
                c.lps.push_back(
                    {idx, read_position(p, "lps[" + std::to_string(idx) + "]")});
                ++idx;
            }
        } else {
            check_keys(l, {"nx", "ny", "height"}, "lps", c.warnings);
            const int nx = l.value("nx", 15);
            const int ny = l.value("ny", 6);
            if (nx < 1 || ny < 1) fail("lps", "grid must be at least 1x1");
            const double height = l.value("height", 1.0);
            int idx = 0;
            for (int jj = 0; jj < ny; ++jj)
                for (int ii = 0; ii < nx; ++ii)
                    c.lps.push_back({idx++, Position{(ii + 0.5) * c.env.width / nx,
                                                     (jj + 0.5) * c.env.depth / ny,
                                                     height}});
        }
        int idx = 0;
        for (const LearningPoint& p : c.lps) {
            if (!c.env.contains(p.position))
                fail("lps[" + std::to_string(idx) + "]", "outside room");
            ++idx;
        }
    }

    if (j.contains("traffic")) {
        const json& t = j.at("traffic");
        check_keys(t,
                   {"offered_load_bps", "per_ue", "packet_octets", "max_retransmissions",
                    "stop_fraction"},
                   "traffic", c.warnings);
        c.traffic.offered_load_bps = t.value("offered_load_bps", c.traffic.offered_load_bps);
        c.traffic.per_ue = t.value("per_ue", c.traffic.per_ue);
        c.traffic.packet_octets = t.value("packet_octets", c.traffic.packet_octets);
        c.traffic.max_retransmissions =
            t.value("max_retransmissions", c.traffic.max_retransmissions);
        c.traffic.stop_fraction = t.value("stop_fraction", c.traffic.stop_fraction);
        if (c.traffic.offered_load_bps < 0) fail("traffic.offered_load_bps", "negative");
        if (c.traffic.packet_octets < 1) fail("traffic.packet_octets", "must be >= 1");
        if (c.traffic.max_retransmissions < 1)
            fail("traffic.max_retransmissions", "must be >= 1");
    }

    bool coverage_set = false;
    if (j.contains("radio")) {
        const json& r = j.at("radio");
        check_keys(r,
                   {"wigig_tx_power_dbm", "wifi_tx_power_dbm", "ue_tx_power_dbm",
                    "path_loss_exponent", "online_shadowing_std_db", "cs_threshold_dbm",
                    "coverage_threshold_dbm", "max_reflections", "best_beams"},
                   "radio", c.warnings);
        c.wigig_tx_power_dbm = r.value("wigig_tx_power_dbm", c.wigig_tx_power_dbm);
        c.wifi_tx_power_dbm = r.value("wifi_tx_power_dbm", c.wifi_tx_power_dbm);
        c.ue_tx_power_dbm = r.value("ue_tx_power_dbm", c.ue_tx_power_dbm);
        c.wifi_channel.path_loss_exponent =
            r.value("path_loss_exponent", c.wifi_channel.path_loss_exponent);
        c.online_shadowing_std_db =
            r.value("online_shadowing_std_db", c.online_shadowing_std_db);
        c.cs_threshold_dbm = r.value("cs_threshold_dbm", c.cs_threshold_dbm);
        c.link_margin_db = r.value("link_margin_db", c.link_margin_db);
        if (r.contains("coverage_threshold_dbm") &&
            !r.at("coverage_threshold_dbm").is_null()) {
            c.coverage_threshold_dbm = r.at("coverage_threshold_dbm").get<double>();
            coverage_set = true;
        }
        c.max_reflections = r.value("max_reflections", c.max_reflections);
        if (c.max_reflections < 0 || c.max_reflections > 4)
            fail("radio.max_reflections", "supported range is 0..4");
        c.best_beams = r.value("best_beams", c.best_beams);
        if (c.best_beams < 1) fail("radio.best_beams", "must be >= 1");
    }

    if (j.contains("mcs_table")) {
        c.mcs.entries.clear();
        for (const json& e : j.at("mcs_table")) {
            McsEntry entry;
            entry.index = e.at("index").get<int>();
            entry.min_snr_db = e.at("min_snr_db").get<double>();
            entry.rate_bps = e.at("rate_mbps").get<double>() * 1e6;
            c.mcs.entries.push_back(entry);
        }
        try {
            c.mcs.validate();
        } catch (const std::exception& e) {
            fail("mcs_table", e.what());
        }
    }
    if (!coverage_set) c.coverage_threshold_dbm = c.env.noise_dbm + c.mcs.min_snr_db(1);

    if (j.contains("timing")) {
        const json& t = j.at("timing");
        check_keys(t,
                   {"wifi_slot_us", "wifi_sifs_us", "wifi_difs_us", "wifi_cw_min",
                    "wifi_cw_max", "wifi_mreq_us", "wifi_mresp_us", "wifi_switch_on_us",
                    "wifi_navset_us", "wifi_bid_us", "wigig_slot_us", "wigig_sifs_us",
                    "wigig_sbifs_us", "wigig_cw_min", "wigig_cw_max", "ssw_frame_us",
                    "ssw_feedback_us", "brp_frame_us", "fbk_frame_us", "ack_frame_us",
                    "beacon_frame_us", "data_overhead_us", "beacon_interval_s",
                    "txop_us", "holdoff_us"},
                   "timing", c.warnings);
        sim::TimingConfig& tc = c.timing;
        tc.wifi_slot = us_field(t, "wifi_slot_us", tc.wifi_slot);
        tc.wifi_sifs = us_field(t, "wifi_sifs_us", tc.wifi_sifs);
        tc.wifi_difs = us_field(t, "wifi_difs_us", tc.wifi_difs);
        tc.wifi_cw_min = t.value("wifi_cw_min", tc.wifi_cw_min);
        tc.wifi_cw_max = t.value("wifi_cw_max", tc.wifi_cw_max);
        tc.wifi_mreq = us_field(t, "wifi_mreq_us", tc.wifi_mreq);
        tc.wifi_mresp = us_field(t, "wifi_mresp_us", tc.wifi_mresp);
        tc.wifi_switch_on = us_field(t, "wifi_switch_on_us", tc.wifi_switch_on);
        tc.wifi_navset = us_field(t, "wifi_navset_us", tc.wifi_navset);
        tc.wifi_bid = us_field(t, "wifi_bid_us", tc.wifi_bid);
        tc.wigig_slot = us_field(t, "wigig_slot_us", tc.wigig_slot);
        tc.wigig_sifs = us_field(t, "wigig_sifs_us", tc.wigig_sifs);
        tc.wigig_sbifs = us_field(t, "wigig_sbifs_us", tc.wigig_sbifs);
        tc.wigig_cw_min = t.value("wigig_cw_min", tc.wigig_cw_min);
        tc.wigig_cw_max = t.value("wigig_cw_max", tc.wigig_cw_max);
        tc.ssw_frame = us_field(t, "ssw_frame_us", tc.ssw_frame);
        tc.ssw_feedback = us_field(t, "ssw_feedback_us", tc.ssw_feedback);
        tc.brp_frame = us_field(t, "brp_frame_us", tc.brp_frame);
        tc.fbk_frame = us_field(t, "fbk_frame_us", tc.fbk_frame);
        tc.ack_frame = us_field(t, "ack_frame_us", tc.ack_frame);
        tc.beacon_frame = us_field(t, "beacon_frame_us", tc.beacon_frame);
        tc.data_overhead = us_field(t, "data_overhead_us", tc.data_overhead);
        if (t.contains("beacon_interval_s"))
            tc.beacon_interval = sim::seconds(t.at("beacon_interval_s").get<double>());
        tc.txop_limit = us_field(t, "txop_us", tc.txop_limit);
        tc.holdoff = us_field(t, "holdoff_us", tc.holdoff);
    }

    if (j.contains("sim")) {
        const json& s = j.at("sim");
        check_keys(s, {"duration_s", "mode", "seeds"}, "sim", c.warnings);
        if (s.contains("duration_s")) {
            const double d = s.at("duration_s").get<double>();
            if (d <= 0) fail("sim.duration_s", "must be positive");
            c.duration = sim::seconds(d);
        }
        if (s.contains("mode")) {
            const std::string m = s.at("mode").get<std::string>();
            if (m == "coordinated") {
                c.mode = sim::Mode::coordinated;
            } else if (m == "uncoordinated") {
                c.mode = sim::Mode::uncoordinated;
            } else {
                fail("sim.mode", "expected \"coordinated\" or \"uncoordinated\"");
            }
        }
        if (s.contains("seeds")) {
            c.seeds = s.at("seeds").get<std::vector<std::uint64_t>>();
            if (c.seeds.empty()) fail("sim.seeds", "need at least one seed");
        }
    }

    if (j.contains("sweep")) {
        c.sweep_subsets.clear();
        for (auto it = j.at("sweep").begin(); it != j.at("sweep").end(); ++it) {
            const int count = std::stoi(it.key());
            const auto ids = it.value().get<std::vector<int>>();
            if (static_cast<int>(ids.size()) != count)
                fail("sweep." + it.key(), "subset size does not match its key");
            c.sweep_subsets[count] = ids;
        }
    } else if (j.contains("aps")) {
        // the standard ladder only makes sense over the default AP plan
        c.sweep_subsets.clear();
        c.sweep_subsets[static_cast<int>(c.aps.size())] = c.all_ap_ids();
    }

    // cross checks
    for (const auto& [count, ids] : c.sweep_subsets) c.active_sites(ids);
    std::set<int> seen;
    for (const ApSite& ap : c.aps)
        if (!seen.insert(ap.id).second) fail("aps", "duplicate AP id");

    return c;
}

ScenarioConfig parse_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("config: cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_json(ss.str());
}

}  // namespace wigig
