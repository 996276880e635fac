#include "wigig/radiomap.hpp"

#include <fstream>
#include <json.hpp>
#include <stdexcept>

#include "wigig/exemplars.hpp"
#include "wigig/units.hpp"

namespace wigig {

using nlohmann::json;

void RadioMap::validate() const {
    const Eigen::Index l = psi.rows(), n = psi.cols();
    if (phi.rows() != l || phi.cols() != n || p_off.rows() != l || p_off.cols() != n)
        throw std::runtime_error("radio map: matrix dimensions disagree");
    if (static_cast<Eigen::Index>(lps.size()) != l)
        throw std::runtime_error("radio map: learning point list does not match L");
    if (static_cast<Eigen::Index>(ap_ids.size()) != n ||
        static_cast<Eigen::Index>(sectors_per_ap.size()) != n)
        throw std::runtime_error("radio map: AP list does not match N");
    if (noise_mw <= 0.0) throw std::runtime_error("radio map: noise power must be positive");
    for (Eigen::Index i = 0; i < l; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const int d = phi(i, j);
            if (d < 0 || d > sectors_per_ap[static_cast<std::size_t>(j)])
                throw std::runtime_error("radio map: sector id out of range");
            const bool null_id = d == 0;
            const bool zero_p = p_off(i, j) == 0.0;
            if (null_id != zero_p)
                throw std::runtime_error("radio map: null/zero consistency violated");
            if (p_off(i, j) < 0.0)
                throw std::runtime_error("radio map: negative power");
        }
    }
}

RadioMap RadioMap::select_aps(std::span<const int> ids) const {
    RadioMap out;
    const Eigen::Index l = psi.rows();
    const Eigen::Index m = static_cast<Eigen::Index>(ids.size());
    out.psi.resize(l, m);
    out.phi.resize(l, m);
    out.p_off.resize(l, m);
    out.lps = lps;
    out.noise_mw = noise_mw;
    out.coverage_threshold_dbm = coverage_threshold_dbm;
    for (Eigen::Index j = 0; j < m; ++j) {
        const int id = ids[static_cast<std::size_t>(j)];
        Eigen::Index col = -1;
        for (Eigen::Index c = 0; c < psi.cols(); ++c)
            if (ap_ids[static_cast<std::size_t>(c)] == id) col = c;
        if (col < 0) throw std::invalid_argument("select_aps: unknown AP id");
        out.psi.col(j) = psi.col(col);
        out.phi.col(j) = phi.col(col);
        out.p_off.col(j) = p_off.col(col);
        out.ap_ids.push_back(id);
        out.sectors_per_ap.push_back(sectors_per_ap[static_cast<std::size_t>(col)]);
    }
    return out;
}

std::optional<int> best_sector_id(std::span<const double> powers_dbm, double threshold_dbm) {
    if (powers_dbm.empty())
        throw std::invalid_argument("best_sector_id: empty power list");
    int best = 0;
    double best_p = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < powers_dbm.size(); ++i) {
        if (powers_dbm[i] > best_p) {
            best_p = powers_dbm[i];
            best = static_cast<int>(i) + 1;
        }
    }
    if (best_p < threshold_dbm) return std::nullopt;
    return best;
}

RadioMap build_radio_map(const Environment& env, const std::vector<ApSite>& aps,
                         const std::vector<LearningPoint>& lps, const RadioMapParams& params) {
    if (aps.empty() || lps.empty())
        throw std::invalid_argument("build_radio_map: need at least one AP and one LP");
    const Eigen::Index l = static_cast<Eigen::Index>(lps.size());
    const Eigen::Index n = static_cast<Eigen::Index>(aps.size());

    RadioMap map;
    map.psi.resize(l, n);
    map.phi.resize(l, n);
    map.p_off.resize(l, n);
    map.lps = lps;
    map.noise_mw = env.noise_mw();
    map.coverage_threshold_dbm = params.coverage_threshold_dbm;

    for (const ApSite& ap : aps) {
        map.ap_ids.push_back(ap.id);
        map.sectors_per_ap.push_back(ap.codebook.size());
    }

    std::vector<double> powers;
    for (Eigen::Index i = 0; i < l; ++i) {
        const Position& p = lps[static_cast<std::size_t>(i)].position;
        if (!env.contains(p))
            throw std::invalid_argument("build_radio_map: learning point outside environment");
        for (Eigen::Index j = 0; j < n; ++j) {
            const ApSite& ap = aps[static_cast<std::size_t>(j)];
            map.psi(i, j) = wifi_rss_dbm(env, ap.position, p, params.wifi_tx_power_dbm,
                                         0.0, params.wifi);

            const auto rays = trace_rays(env, ap.position, p, params.max_reflections);
            const double lambda = kSpeedOfLight / env.wigig_freq_hz;
            powers.clear();
            for (const Sector& s : ap.codebook.sectors) {
                const auto pw =
                    rx_power_from_rays(rays, s, params.wigig_tx_power_dbm, lambda);
                powers.push_back(pw.value_or(-std::numeric_limits<double>::infinity()));
            }
            const auto best = best_sector_id(powers, params.coverage_threshold_dbm);
            if (best) {
                map.phi(i, j) = *best;
                map.p_off(i, j) = dbm_to_mw(powers[static_cast<std::size_t>(*best - 1)]);
            } else {
                map.phi(i, j) = 0;
                map.p_off(i, j) = 0.0;
            }
        }
    }
    map.validate();
    return map;
}

std::vector<int> overlapped_lps(const RadioMap& map, int n, int d_n, int m, int d_m) {
    if (n == m) throw std::invalid_argument("overlapped_lps: identical AP columns");
    std::vector<int> out;
    for (Eigen::Index l = 0; l < map.phi.rows(); ++l)
        if (map.phi(l, n) == d_n && map.phi(l, m) == d_m)
            out.push_back(static_cast<int>(l));
    return out;
}

namespace {

json matrix_to_json(const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

json imatrix_to_json(const Eigen::MatrixXi& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename Matrix>
void matrix_from_json(const json& j, Eigen::Index l, Eigen::Index n, Matrix& out,
                      const char* name) {
    if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != l)
        throw std::runtime_error(std::string("radio map file: bad row count in ") + name);
    out.resize(l, n);
    for (Eigen::Index i = 0; i < l; ++i) {
        const json& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n)
            throw std::runtime_error(std::string("radio map file: bad column count in ") + name);
        for (Eigen::Index c = 0; c < n; ++c)
            out(i, c) = row[static_cast<std::size_t>(c)]
                            .get<typename Matrix::Scalar>();
    }
}

constexpr const char* kFormatTag = "wigig-radiomap";
constexpr int kFormatVersion = 1;

}  // namespace

void save_radio_map(const RadioMap& map, const std::string& path, const ExemplarSet* ex) {
    map.validate();
    json j;
    j["format"] = kFormatTag;
    j["version"] = kFormatVersion;
    j["L"] = map.num_lps();
    j["N"] = map.num_aps();
    j["ap_ids"] = map.ap_ids;
    j["sectors_per_ap"] = map.sectors_per_ap;
    j["noise_mw"] = map.noise_mw;
    j["coverage_threshold_dbm"] = map.coverage_threshold_dbm;
    json lps = json::array();
    for (const auto& lp : map.lps)
        lps.push_back({{"x", lp.position.x()}, {"y", lp.position.y()}, {"z", lp.position.z()}});
    j["lps"] = std::move(lps);
    j["psi"] = matrix_to_json(map.psi);
    j["phi"] = imatrix_to_json(map.phi);
    j["p_off"] = matrix_to_json(map.p_off);

    if (ex != nullptr && !ex->empty()) {
        json all = json::array();
        for (const auto& per_ap : ex->clusters) {
            json ap_obj = json::object();
            for (const auto& [sector, clusters] : per_ap) {
                json cl = json::array();
                for (const Cluster& c : clusters)
                    cl.push_back({{"exemplar_lp", c.exemplar_lp}, {"members", c.member_lps}});
                ap_obj[std::to_string(sector)] = std::move(cl);
            }
            all.push_back(std::move(ap_obj));
        }
        j["exemplars"] = std::move(all);
    }

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_radio_map: cannot open " + path);
    out << j.dump(1) << "\n";
    if (!out) throw std::runtime_error("save_radio_map: write failed for " + path);
}

RadioMap load_radio_map(const std::string& path, ExemplarSet* ex) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_radio_map: cannot open " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw std::runtime_error("load_radio_map: malformed file: " + std::string(e.what()));
    }
    if (!j.is_object() || j.value("format", "") != kFormatTag)
        throw std::runtime_error("load_radio_map: not a radio map file");
    if (j.value("version", 0) != kFormatVersion)
        throw std::runtime_error("load_radio_map: unsupported version");

    RadioMap map;
    const Eigen::Index l = j.at("L").get<Eigen::Index>();
    const Eigen::Index n = j.at("N").get<Eigen::Index>();
    map.ap_ids = j.at("ap_ids").get<std::vector<int>>();
    map.sectors_per_ap = j.at("sectors_per_ap").get<std::vector<int>>();
    map.noise_mw = j.at("noise_mw").get<double>();
    map.coverage_threshold_dbm = j.at("coverage_threshold_dbm").get<double>();
    const json& lps = j.at("lps");
    if (static_cast<Eigen::Index>(lps.size()) != l)
        throw std::runtime_error("load_radio_map: LP list does not match L");
    int idx = 0;
    for (const json& lp : lps) {
        LearningPoint p;
        p.index = idx++;
        p.position = Position(lp.at("x").get<double>(), lp.at("y").get<double>(),
                              lp.at("z").get<double>());
        map.lps.push_back(p);
    }
    matrix_from_json(j.at("psi"), l, n, map.psi, "psi");
    matrix_from_json(j.at("phi"), l, n, map.phi, "phi");
    matrix_from_json(j.at("p_off"), l, n, map.p_off, "p_off");
    try {
        map.validate();
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string("load_radio_map: ") + e.what());
    }

    if (ex != nullptr) {
        ex->clusters.clear();
        if (j.contains("exemplars")) {
            const json& all = j.at("exemplars");
            if (static_cast<Eigen::Index>(all.size()) != n)
                throw std::runtime_error("load_radio_map: exemplar block does not match N");
            for (const json& ap_obj : all) {
                std::map<int, std::vector<Cluster>> per_ap;
                for (auto it = ap_obj.begin(); it != ap_obj.end(); ++it) {
                    const int sector = std::stoi(it.key());
                    std::vector<Cluster> clusters;
                    for (const json& cj : it.value()) {
                        Cluster c;
                        c.exemplar_lp = cj.at("exemplar_lp").get<int>();
                        c.member_lps = cj.at("members").get<std::vector<int>>();
                        if (c.exemplar_lp < 0 || c.exemplar_lp >= map.num_lps())
                            throw std::runtime_error("load_radio_map: exemplar LP out of range");
                        c.exemplar = map.psi.row(c.exemplar_lp).transpose();
                        clusters.push_back(std::move(c));
                    }
                    per_ap[sector] = std::move(clusters);
                }
                ex->clusters.push_back(std::move(per_ap));
            }
        }
    }
    return map;
}

}  // namespace wigig
