#include "wigig/sim/simulation.hpp"

#include <algorithm>
#include <cmath>

#include "wigig/channel.hpp"
#include "wigig/units.hpp"

namespace wigig::sim {

long RunTally::ns() const {
    long v = 0;
    for (const auto& u : per_ue) v += u.delivered;
    return v;
}
long RunTally::nd() const {
    long v = 0;
    for (const auto& u : per_ue) v += u.dropped;
    return v;
}
long RunTally::generated() const {
    long v = 0;
    for (const auto& u : per_ue) v += u.generated;
    return v;
}
long RunTally::queued() const {
    long v = 0;
    for (const auto& u : per_ue) v += u.queued_at_end;
    return v;
}
double RunTally::delay_sum_s() const {
    double v = 0.0;
    for (const auto& u : per_ue) v += u.delay_sum_s;
    return v;
}

namespace {

struct Packet {
    long id = 0;
    Time gen = 0;
    int retries = 0;
    bool delivered = false;
};

struct ApState {
    bool serving = false;
    bool reserved = false;
    bool in_bf = false;
    int linked_ue = -1;
    // uncoordinated side
    std::deque<int> pending;
    bool session_running = false;
    int cw = 15;
};

struct UeState {
    enum class S { idle, pending, setup, linked };
    S state = S::idle;
    std::deque<Packet> queue;
    int assoc_ap = -1;
    double assoc_power = -1e300;
    int setup_failures = 0;  // consecutive, backs the retry holdoff off
    bool wigig_awake = false;
};

struct Link {
    int ap = -1;
    int ue = -1;
    int beam = 0;
    int mcs = 0;
    double power_dbm = 0.0;
    std::map<int, std::set<int>> bad;  // per other AP: refined bad beams
};

struct BeamMeasurement {
    double power_dbm = 0.0;
    double sinr_db = 0.0;
};

struct CoordSetup {
    int ue = -1;
    int initiator = 0;
    Time queued_at = 0;
    OnlineFingerprint psi;
    int ap = -1;
    BeamPlan plan;
    std::vector<int> training;
    std::map<int, BeamMeasurement> brp_meas;
    int fbk_tries = 0;
};

struct UncoordSession {
    int ap = -1;
    int ue = -1;
    std::map<int, double> sls_meas;
    int best = 0;
    double best_power = 0.0;
    double link_sinr_db = 0.0;
    int failures = 0;
};

struct AirTx {
    std::uint64_t id = 0;
    int station = 0;
    int sector = 0;  // 0 = quasi-omni
    Time start = 0;
    Time end = 0;
    double power_dbm = 0.0;
};

}  // namespace

struct Simulation::Impl {
    Scenario sc;
    Engine engine;
    Rng mac_rng;
    std::vector<Rng> traffic_rng;
    WifiMedium wifi;
    TraceSink* sink = nullptr;

    int n_aps = 0;
    int n_ues = 0;
    std::vector<ApState> aps;
    std::vector<UeState> ues;
    std::vector<std::string> names;

    // coordinated control state
    std::deque<int> apc_pending;
    std::deque<std::shared_ptr<CoordSetup>> apc_waitlist;  // measured, waiting for a free AP
    int setups_inflight = 0;
    int setup_rr = 0;
    std::map<int, Link> links;  // keyed by AP index
    Time bf_nav_until = 0;
    int in_bf_count = 0;

    // 60 GHz air
    std::vector<AirTx> air;
    std::uint64_t air_seq = 1;

    // propagation caches
    std::map<std::pair<int, int>, std::vector<Ray>> ray_cache;
    std::unordered_map<std::uint64_t, double> power_cache;
    std::vector<std::vector<int>> rx_sector_cache;  // ap x ue

    RunTally tally;
    long next_packet_id = 0;
    Time traffic_stop = 0;
    double noise_mw = 0.0;
    long payload_bits = 0;

    Impl(const Scenario& s, std::uint64_t seed, TraceSink* snk)
        : sc(s), mac_rng(seed ^ 0xC0FFEE123456789ULL),
          wifi(engine, sc.timing, mac_rng,
               static_cast<int>(s.aps.size() + s.ues.size())),
          sink(snk) {
        n_aps = static_cast<int>(sc.aps.size());
        n_ues = static_cast<int>(sc.ues.size());
        aps.resize(static_cast<std::size_t>(n_aps));
        ues.resize(static_cast<std::size_t>(n_ues));
        for (auto& a : aps) a.cw = sc.timing.wigig_cw_min;
        for (int i = 0; i < n_aps; ++i)
            names.push_back("AP" + std::to_string(sc.aps[static_cast<std::size_t>(i)].id));
        for (int u = 0; u < n_ues; ++u) names.push_back("UE" + std::to_string(u + 1));
        // traffic streams are independent of the MAC stream so that both
        // modes see identical arrival processes for the same seed
        for (int u = 0; u < n_ues; ++u)
            traffic_rng.emplace_back(seed * 0x9E3779B97F4A7C15ULL + 0x1234567ULL +
                                     static_cast<std::uint64_t>(u));
        if (sink) engine.add_sink(sink);
        noise_mw = sc.env.noise_mw();
        payload_bits = 8L * sc.traffic.packet_octets;
        traffic_stop = static_cast<Time>(static_cast<double>(sc.duration) *
                                         sc.traffic.stop_fraction);
        tally.per_ue.resize(static_cast<std::size_t>(n_ues));
        tally.per_ap_packets.assign(static_cast<std::size_t>(n_aps), 0);
        tally.per_ap_bits.assign(static_cast<std::size_t>(n_aps), 0.0);
        tally.duration_s = to_seconds(sc.duration);
        tally.packet_octets = sc.traffic.packet_octets;
        rx_sector_cache.assign(static_cast<std::size_t>(n_aps),
                               std::vector<int>(static_cast<std::size_t>(n_ues), 0));

        if (sc.mode == Mode::coordinated) {
            if (sc.map.num_aps() != n_aps || sc.exemplars.num_aps() != n_aps)
                throw std::invalid_argument(
                    "simulation: coordinated mode needs radio map and exemplars for every AP");
            engine.post_event_check = [this] {
                if (in_bf_count > 1)
                    throw SimAbort("refinement exclusivity violated: " +
                                       std::to_string(in_bf_count) + " APs refining",
                                   engine.recent_trace());
            };
        }

        wifi.on_deliver = [this](const Frame& f) {
            trace(f.source, "tx", Band::wifi5, "delivered",
                  std::string(frame_name(f.kind)) + " dst=" + dest_name(f.destination));
        };
    }

    // --- naming and tracing -------------------------------------------------

    const std::string& name(int station) const {
        return names[static_cast<std::size_t>(station)];
    }
    std::string dest_name(int station) const {
        return station == kBroadcast ? "*" : name(station);
    }
    int ue_station(int ue) const { return n_aps + ue; }

    void trace(int station, const char* action, Band band, const std::string& outcome,
               const std::string& detail = "") {
        engine.trace(name(station), action, band_name(band), outcome, detail);
    }

    // --- propagation --------------------------------------------------------

    const Position& position(int station) const {
        return station < n_aps ? sc.aps[static_cast<std::size_t>(station)].position
                               : sc.ues[static_cast<std::size_t>(station - n_aps)];
    }

    const std::vector<Ray>& rays_between(int a, int b) {
        const auto key = std::minmax(a, b);
        auto it = ray_cache.find(key);
        if (it == ray_cache.end()) {
            it = ray_cache
                     .emplace(key, trace_rays(sc.env, position(key.first),
                                              position(key.second), sc.max_reflections))
                     .first;
        }
        return it->second;
    }

    double tx_power_dbm(int station) const {
        return station < n_aps ? sc.wigig_tx_power_dbm : sc.ue_tx_power_dbm;
    }

    // Received power over the 60 GHz channel with optional sector gain at
    // either end (sector 0 = quasi-omni, 0 dBi).
    double power60_dbm(int tx, int tx_sector, int rx, int rx_sector) {
        const std::uint64_t key = (static_cast<std::uint64_t>(tx) << 48) |
                                  (static_cast<std::uint64_t>(tx_sector) << 32) |
                                  (static_cast<std::uint64_t>(rx) << 16) |
                                  static_cast<std::uint64_t>(rx_sector);
        auto it = power_cache.find(key);
        if (it != power_cache.end()) return it->second;

        const auto pair = std::minmax(tx, rx);
        const std::vector<Ray>& rays = rays_between(tx, rx);
        const bool forward = tx == pair.first;
        const double lambda = kSpeedOfLight / sc.env.wigig_freq_hz;
        double sum_mw = 0.0;
        for (const Ray& r : rays) {
            const double tx_az = forward ? r.dep_az_deg : r.arr_az_deg;
            const double tx_el = forward ? r.dep_el_deg : r.arr_el_deg;
            const double rx_az = forward ? r.arr_az_deg : r.dep_az_deg;
            const double rx_el = forward ? r.arr_el_deg : r.dep_el_deg;
            double gain = 0.0;
            if (tx_sector != 0)
                gain += antenna_gain_db(codebook(tx).sector(tx_sector), tx_az, tx_el);
            if (rx_sector != 0)
                gain += antenna_gain_db(codebook(rx).sector(rx_sector), rx_az, rx_el);
            const double amp = lambda / (4.0 * std::numbers::pi * r.length_m);
            sum_mw += db_to_linear(gain - r.loss_db) * amp * amp;
        }
        const double dbm = tx_power_dbm(tx) + linear_to_db(sum_mw);
        power_cache.emplace(key, dbm);
        return dbm;
    }

    const SectorCodebook& codebook(int station) const {
        return sc.aps[static_cast<std::size_t>(station)].codebook;
    }

    /// The AP sector with the strongest channel toward the UE; used as the
    /// receive pattern for feedback frames arriving before a beam is final.
    int best_rx_sector(int ap, int ue) {
        int& cached = rx_sector_cache[static_cast<std::size_t>(ap)]
                                     [static_cast<std::size_t>(ue)];
        if (cached != 0) return cached;
        int best = 1;
        double best_p = -1e300;
        for (const Sector& s : codebook(ap).sectors) {
            const double p = power60_dbm(ap, s.id, ue_station(ue), 0);
            if (p > best_p) {
                best_p = p;
                best = s.id;
            }
        }
        cached = best;
        return best;
    }

    // --- 60 GHz air and frame outcomes --------------------------------------

    void prune_air() {
        std::erase_if(air, [this](const AirTx& a) { return a.end <= engine.now(); });
    }

    double interference_mw(int rx, int rx_sector, Time start, Time end,
                           std::uint64_t exclude_id) {
        double sum = 0.0;
        for (const AirTx& a : air) {
            if (a.id == exclude_id || a.station == rx) continue;
            if (a.end <= start || a.start >= end) continue;
            sum += dbm_to_mw(power60_dbm(a.station, a.sector, rx, rx_sector));
        }
        return sum;
    }

    /// Transmit one 60 GHz frame and evaluate it at the receiver when it
    /// ends. done(delivered, rx_power_dbm, sinr_db) runs at the end instant;
    /// the measured SINR is what a receiver would report for link adaptation.
    void send60(FrameKind kind, int tx, int tx_sector, int rx, int rx_sector,
                Time duration, double snr_threshold_db,
                std::function<void(bool, double, double)> done) {
        prune_air();
        const Time start = engine.now();
        const Time end = start + duration;
        const std::uint64_t id = air_seq++;
        air.push_back({id, tx, tx_sector, start, end, tx_power_dbm(tx)});

        engine.at(end, [this, kind, tx, tx_sector, rx, rx_sector, start, end, id,
                        snr_threshold_db, done = std::move(done)] {
            const double wanted_dbm = power60_dbm(tx, tx_sector, rx, rx_sector);
            const double interf = interference_mw(rx, rx_sector, start, end, id);
            const double sinr_db =
                wanted_dbm - linear_to_db(interf + noise_mw);
            const bool ok = sinr_db >= snr_threshold_db;
            trace(tx, "tx", Band::wigig60, ok ? "delivered" : "corrupted",
                  std::string(frame_name(kind)) + " dst=" + name(rx) +
                      (tx_sector != 0 ? " sec=" + std::to_string(tx_sector) : ""));
            done(ok, wanted_dbm, sinr_db);
        });
    }

    double control_threshold_db() const { return sc.mcs.min_snr_db(1); }

    // --- traffic -------------------------------------------------------------

    double per_ue_rate() const {
        const double load = sc.traffic.per_ue
                                ? sc.traffic.offered_load_bps
                                : sc.traffic.offered_load_bps / n_ues;
        return load / static_cast<double>(payload_bits);
    }

    void schedule_arrival(int ue) {
        const double rate = per_ue_rate();
        if (rate <= 0.0) return;
        const Time dt = seconds(traffic_rng[static_cast<std::size_t>(ue)].exponential(rate));
        const Time t = engine.now() + std::max<Time>(dt, 1);
        if (t > traffic_stop) return;
        engine.at(t, [this, ue] {
            add_packet(ue);
            schedule_arrival(ue);
        });
    }

    void add_packet(int ue) {
        ues[static_cast<std::size_t>(ue)].queue.push_back(
            {next_packet_id++, engine.now(), 0, false});
        ++tally.per_ue[static_cast<std::size_t>(ue)].generated;
        on_ue_has_traffic(ue);
    }

    void on_ue_has_traffic(int ue) {
        auto& u = ues[static_cast<std::size_t>(ue)];
        if (u.state != UeState::S::idle) return;
        u.state = UeState::S::pending;
        if (sc.mode == Mode::coordinated) {
            apc_pending.push_back(ue);
            apc_kick();
        } else {
            if (u.assoc_ap < 0) {
                u.state = UeState::S::idle;  // nobody covers this UE
                return;
            }
            aps[static_cast<std::size_t>(u.assoc_ap)].pending.push_back(ue);
            uncoord_kick(u.assoc_ap);
        }
    }

    // --- shared data phase ----------------------------------------------------

    Time data_frame_duration(int mcs) const {
        const double rate = sc.mcs.rate_bps(mcs);
        return sc.timing.data_overhead +
               static_cast<Time>(static_cast<double>(payload_bits) / rate * 1e9 + 0.5);
    }

    void start_data(int ap, int ue, int beam, int mcs, double power_dbm) {
        auto& a = aps[static_cast<std::size_t>(ap)];
        a.serving = true;
        a.linked_ue = ue;
        ues[static_cast<std::size_t>(ue)].state = UeState::S::linked;
        ues[static_cast<std::size_t>(ue)].setup_failures = 0;
        trace(ap, "data-start", Band::wigig60,
              "mcs=" + std::to_string(mcs), "ue=" + name(ue_station(ue)) +
                  " beam=" + std::to_string(beam));
        serve_next(ap, ue, beam, mcs, engine.now());
    }

    void serve_next(int ap, int ue, int beam, int mcs, Time txop_start) {
        auto& u = ues[static_cast<std::size_t>(ue)];
        if (u.queue.empty() || engine.now() - txop_start >= sc.timing.txop_limit) {
            teardown(ap, ue);
            return;
        }
        attempt_packet(ap, ue, beam, mcs, txop_start);
    }

    void attempt_packet(int ap, int ue, int beam, int mcs, Time txop_start) {
        auto& u = ues[static_cast<std::size_t>(ue)];
        Packet& pkt = u.queue.front();
        const Time dur = data_frame_duration(mcs);
        send60(FrameKind::Data, ap, beam, ue_station(ue), 0, dur, sc.mcs.min_snr_db(mcs),
               [this, ap, ue, beam, mcs, txop_start](bool ok, double, double) {
                   auto& uu = ues[static_cast<std::size_t>(ue)];
                   Packet& p = uu.queue.front();
                   if (ok) {
                       if (!p.delivered) {
                           p.delivered = true;
                           auto& t = tally.per_ue[static_cast<std::size_t>(ue)];
                           ++t.delivered;
                           t.delay_sum_s += to_seconds(engine.now() - p.gen);
                           ++tally.per_ap_packets[static_cast<std::size_t>(ap)];
                           tally.per_ap_bits[static_cast<std::size_t>(ap)] +=
                               static_cast<double>(payload_bits);
                       }
                       engine.after(sc.timing.wigig_sifs, [this, ap, ue, beam, mcs,
                                                           txop_start] {
                           send60(FrameKind::Ack, ue_station(ue), 0, ap, beam,
                                  sc.timing.ack_frame, control_threshold_db(),
                                  [this, ap, ue, beam, mcs, txop_start](bool ack_ok,
                                                                        double, double) {
                                      if (ack_ok) {
                                          finish_packet(ap, ue, beam, mcs, txop_start);
                                      } else {
                                          packet_failure(ap, ue, beam, mcs, txop_start);
                                      }
                                  });
                       });
                   } else {
                       packet_failure(ap, ue, beam, mcs, txop_start);
                   }
               });
    }

    void finish_packet(int ap, int ue, int beam, int mcs, Time txop_start) {
        ues[static_cast<std::size_t>(ue)].queue.pop_front();
        engine.after(sc.timing.wigig_sifs,
                     [this, ap, ue, beam, mcs, txop_start] {
                         serve_next(ap, ue, beam, mcs, txop_start);
                     });
    }

    void packet_failure(int ap, int ue, int beam, int mcs, Time txop_start) {
        auto& u = ues[static_cast<std::size_t>(ue)];
        Packet& p = u.queue.front();
        ++p.retries;
        if (p.retries >= sc.traffic.max_retransmissions) {
            if (!p.delivered) {
                ++tally.per_ue[static_cast<std::size_t>(ue)].dropped;
                trace(ap, "drop", Band::wigig60, "retx-limit",
                      "ue=" + name(ue_station(ue)) + " pkt=" + std::to_string(p.id));
            }
            u.queue.pop_front();
            // a full retry budget burned means the beam or rate is stale;
            // end the session and set up afresh
            teardown(ap, ue);
            return;
        }
        engine.after(sc.timing.wigig_sifs, [this, ap, ue, beam, mcs, txop_start] {
            auto& uu = ues[static_cast<std::size_t>(ue)];
            if (engine.now() - txop_start >= sc.timing.txop_limit || uu.queue.empty()) {
                teardown(ap, ue);
                return;
            }
            attempt_packet(ap, ue, beam, mcs, txop_start);
        });
    }

    void teardown(int ap, int ue) {
        auto& a = aps[static_cast<std::size_t>(ap)];
        a.serving = false;
        a.reserved = false;
        a.linked_ue = -1;
        a.session_running = false;
        links.erase(ap);
        auto& u = ues[static_cast<std::size_t>(ue)];
        u.state = UeState::S::idle;
        trace(ap, "session-end", Band::wigig60, "ok", "ue=" + name(ue_station(ue)));
        if (!u.queue.empty()) on_ue_has_traffic(ue);
        if (sc.mode == Mode::coordinated) {
            apc_kick();
        } else {
            uncoord_kick(ap);
        }
    }

    // --- coordinated control plane -------------------------------------------

    std::set<int> unused_aps() const {
        std::set<int> out;
        for (int n = 0; n < n_aps; ++n) {
            const auto& a = aps[static_cast<std::size_t>(n)];
            if (!a.serving && !a.reserved && !a.in_bf) out.insert(n);
        }
        return out;
    }

    void apc_kick() {
        serve_waitlist();
        while (!apc_pending.empty() &&
               setups_inflight + static_cast<int>(apc_waitlist.size()) < n_aps) {
            const int ue = apc_pending.front();
            apc_pending.pop_front();
            ++setups_inflight;
            start_setup(ue);
        }
    }

    double min_exemplar_distance(const OnlineFingerprint& psi, int ap) const {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& [sector, clusters] :
             sc.exemplars.clusters[static_cast<std::size_t>(ap)])
            for (const Cluster& c : clusters)
                best = std::min(best, (psi - c.exemplar).squaredNorm());
        return best;
    }

    // Freed APs go to the waiting user they fit best, so links stay short;
    // a long-waiting head overrides the matching to prevent starvation.
    void serve_waitlist() {
        while (!apc_waitlist.empty()) {
            const std::set<int> unused = unused_aps();
            if (unused.empty()) return;

            std::size_t pick = 0;
            std::optional<int> pick_ap;
            const bool aged = engine.now() - apc_waitlist.front()->queued_at >
                              3 * sc.timing.txop_limit;
            if (aged) {
                pick_ap = associate_ue(apc_waitlist.front()->psi, sc.exemplars, unused);
                if (!pick_ap) return;
            } else {
                double best_d = std::numeric_limits<double>::infinity();
                for (std::size_t i = 0; i < apc_waitlist.size(); ++i) {
                    const auto cand =
                        associate_ue(apc_waitlist[i]->psi, sc.exemplars, unused);
                    if (!cand) continue;
                    const double d =
                        min_exemplar_distance(apc_waitlist[i]->psi, *cand);
                    if (d < best_d) {
                        best_d = d;
                        pick = i;
                        pick_ap = cand;
                    }
                }
                if (!pick_ap) return;
            }
            auto session = apc_waitlist[pick];
            apc_waitlist.erase(apc_waitlist.begin() +
                               static_cast<std::ptrdiff_t>(pick));
            proceed_with_ap(session, *pick_ap, false);
        }
    }

    void start_setup(int ue) {
        auto session = std::make_shared<CoordSetup>();
        session->ue = ue;
        session->initiator = setup_rr++ % n_aps;
        ues[static_cast<std::size_t>(ue)].state = UeState::S::setup;
        send_mreq(session);
    }

    void send_mreq(const std::shared_ptr<CoordSetup>& session) {
        Frame mreq;
        mreq.kind = FrameKind::WiFiMReq;
        mreq.source = session->initiator;
        mreq.destination = ue_station(session->ue);
        mreq.duration = sc.timing.wifi_mreq;
        wifi.enqueue(session->initiator, mreq, [this, session](bool) {
            // the request is contended, so it always arrives; the UE answers
            // a SIFS later with a broadcast measurement response
            engine.after(sc.timing.wifi_sifs, [this, session] {
                Frame mresp;
                mresp.kind = FrameKind::WiFiMResp;
                mresp.source = ue_station(session->ue);
                mresp.destination = kBroadcast;
                mresp.duration = sc.timing.wifi_mresp;
                wifi.transmit_now(
                    ue_station(session->ue), mresp, [this, session](bool ok) {
                        if (ok) {
                            on_fingerprint(session);
                        } else {
                            // response collided; re-request once the medium clears
                            engine.after(sc.timing.wifi_difs,
                                         [this, session] { send_mreq(session); });
                        }
                    });
            });
        });
    }

    void on_fingerprint(const std::shared_ptr<CoordSetup>& session) {
        // every AP measures the broadcast; draws happen in AP order
        session->psi.resize(n_aps);
        for (int n = 0; n < n_aps; ++n) {
            const double rss =
                wifi_rss_dbm(sc.env, sc.aps[static_cast<std::size_t>(n)].position,
                             sc.ues[static_cast<std::size_t>(session->ue)],
                             sc.wifi_tx_power_dbm,
                             sc.online_shadowing_std_db > 0.0
                                 ? mac_rng.gaussian(0.0, sc.online_shadowing_std_db)
                                 : 0.0,
                             sc.wifi_channel);
            session->psi(n) = rss;
        }

        const auto chosen = associate_ue(session->psi, sc.exemplars, unused_aps());
        --setups_inflight;
        if (!chosen) {
            // no unused AP right now: the measurement stays valid, queue the
            // session until a teardown frees one
            trace(session->initiator, "assoc", Band::wifi5, "queued",
                  "ue=" + name(ue_station(session->ue)));
            session->queued_at = engine.now();
            apc_waitlist.push_back(session);
            apc_kick();
            return;
        }
        proceed_with_ap(session, *chosen, true);
        apc_kick();
    }

    void proceed_with_ap(const std::shared_ptr<CoordSetup>& session, int ap,
                         bool fresh_measurement) {
        session->ap = ap;
        aps[static_cast<std::size_t>(ap)].reserved = true;
        trace(session->ap, "assoc", Band::wifi5, "ok",
              "ue=" + name(ue_station(session->ue)));

        session->plan.ue = session->ue;
        session->plan.ap_col = session->ap;
        session->plan.best_beams =
            select_best_beams(session->psi, session->ap, sc.exemplars, sc.best_beams);
        if (session->plan.best_beams.empty()) {
            release_setup(session);
            return;
        }
        for (int m = 0; m < n_aps; ++m) {
            if (m == session->ap) continue;
            const auto sets =
                bad_beam_candidates(sc.map, session->ap, session->plan.best_beams, m, sc.mcs);
            std::vector<BadBeam> flat;
            for (std::size_t x = 0; x < sets.size(); ++x)
                for (int d : sets[x])
                    flat.push_back({d, session->plan.best_beams[x]});
            session->plan.bad[m] = std::move(flat);
        }

        auto& u = ues[static_cast<std::size_t>(session->ue)];
        if (u.wigig_awake) {
            // the UE's 60 GHz radio is already on; no wake-up needed
            trace(session->ap, "disseminate", Band::wifi5, "ok",
                  "beams=" + std::to_string(session->plan.best_beams.size()));
            try_navset(session);
            return;
        }
        Frame sw;
        sw.kind = FrameKind::SwitchOn;
        sw.source = session->ap;
        sw.destination = ue_station(session->ue);
        sw.duration = sc.timing.wifi_switch_on;
        const auto follow_up = [this, session](bool ok) {
            if (!ok) {
                // rare collision of the chained response; fall back to
                // contended delivery
                Frame sw2;
                sw2.kind = FrameKind::SwitchOn;
                sw2.source = session->ap;
                sw2.destination = ue_station(session->ue);
                sw2.duration = sc.timing.wifi_switch_on;
                wifi.enqueue(
                    session->ap, sw2,
                    [this, session](bool) {
                        ues[static_cast<std::size_t>(session->ue)].wigig_awake = true;
                        trace(session->ap, "disseminate", Band::wifi5, "ok",
                              "beams=" +
                                  std::to_string(session->plan.best_beams.size()));
                        try_navset(session);
                    },
                    /*priority=*/true);
                return;
            }
            ues[static_cast<std::size_t>(session->ue)].wigig_awake = true;
            trace(session->ap, "disseminate", Band::wifi5, "ok",
                  "beams=" + std::to_string(session->plan.best_beams.size()));
            try_navset(session);
        };
        if (fresh_measurement) {
            // chained a SIFS after the measurement response, per the
            // protocol sequence
            engine.after(sc.timing.wifi_sifs, [this, session, follow_up] {
                Frame sw3;
                sw3.kind = FrameKind::SwitchOn;
                sw3.source = session->ap;
                sw3.destination = ue_station(session->ue);
                sw3.duration = sc.timing.wifi_switch_on;
                wifi.transmit_now(session->ap, sw3, follow_up);
            });
        } else {
            wifi.enqueue(session->ap, sw, [follow_up](bool) { follow_up(true); },
                         /*priority=*/true);
        }
    }

    void release_setup(const std::shared_ptr<CoordSetup>& session) {
        aps[static_cast<std::size_t>(session->ap)].reserved = false;
        defer_ue(session->ue);
        apc_kick();
    }

    void defer_ue(int ue) {
        auto& u = ues[static_cast<std::size_t>(ue)];
        u.state = UeState::S::idle;
        const int shift = std::min(u.setup_failures, 4);
        ++u.setup_failures;
        engine.after(sc.timing.holdoff << shift, [this, ue] {
            if (!ues[static_cast<std::size_t>(ue)].queue.empty()) on_ue_has_traffic(ue);
        });
    }

    std::set<int> flagged_bad_for(int ap) const {
        std::set<int> bad;
        for (const auto& [link_ap, link] : links) {
            auto it = link.bad.find(ap);
            if (it == link.bad.end()) continue;
            bad.insert(it->second.begin(), it->second.end());
        }
        return bad;
    }

    void try_navset(const std::shared_ptr<CoordSetup>& session) {
        session->training =
            eliminate_bad_beams(session->plan.best_beams, flagged_bad_for(session->ap));
        if (session->training.empty()) {
            // every candidate would interfere with a live link; free the AP
            // and come back after the blocking transmission has progressed
            trace(session->ap, "nav-defer", Band::wifi5, "all-bad", "");
            release_setup(session);
            return;
        }
        if (bf_nav_until > engine.now()) {
            engine.at(bf_nav_until, [this, session] { try_navset(session); });
            return;
        }
        Frame nav;
        nav.kind = FrameKind::NAVset;
        nav.source = session->ap;
        nav.destination = kBroadcast;
        nav.duration = sc.timing.wifi_navset;
        wifi.enqueue(
            session->ap, nav,
            [this, session](bool) {
                if (bf_nav_until > engine.now()) {
                    // somebody else reserved first while we contended
                    engine.at(bf_nav_until, [this, session] { try_navset(session); });
                    return;
                }
                // reserve for the configured best-beam count: the training
                // list is re-derived at refinement start and may grow back
                // toward X as blocking links end
                bf_nav_until =
                    engine.now() + sc.timing.nav_reservation(sc.best_beams);
                trace(session->ap, "navset", Band::wifi5, "ok",
                      "until=" + std::to_string(bf_nav_until));
                engine.after(sc.timing.wigig_sifs,
                             [this, session] { start_brp(session); });
            },
            /*priority=*/true);
    }

    void start_brp(const std::shared_ptr<CoordSetup>& session) {
        // the training list is re-derived against the links active right now
        session->training =
            eliminate_bad_beams(session->plan.best_beams, flagged_bad_for(session->ap));
        if (session->training.empty()) {
            trace(session->ap, "nav-defer", Band::wifi5, "all-bad", "");
            release_setup(session);
            return;
        }
        for (int beam : session->training)
            for (const auto& [link_ap, link] : links) {
                auto it = link.bad.find(session->ap);
                if (it != link.bad.end() && it->second.contains(beam))
                    throw SimAbort("refinement began on a beam flagged bad",
                                   engine.recent_trace());
            }

        auto& a = aps[static_cast<std::size_t>(session->ap)];
        a.in_bf = true;
        ++in_bf_count;
        session->brp_meas.clear();
        trace(session->ap, "brp-start", Band::wigig60, "ok",
              "beams=" + std::to_string(session->training.size()));

        const Time step = sc.timing.brp_frame + sc.timing.wigig_sifs;
        for (std::size_t k = 0; k < session->training.size(); ++k) {
            const int beam = session->training[k];
            engine.after(static_cast<Time>(k) * step, [this, session, beam] {
                send60(FrameKind::BRP, session->ap, beam, ue_station(session->ue), 0,
                       sc.timing.brp_frame, control_threshold_db(),
                       [this, session, beam](bool ok, double power, double sinr) {
                           if (ok) session->brp_meas[beam] = {power, sinr};
                       });
            });
        }
        const Time done_at = static_cast<Time>(session->training.size()) * step;
        engine.after(done_at, [this, session] { brp_finished(session); });
    }

    void brp_finished(const std::shared_ptr<CoordSetup>& session) {
        if (session->brp_meas.empty()) {
            bf_failed(session, "no-measurement");
            return;
        }
        // the feedback names the highest link-quality beam: under ambient
        // interference that is the best measured SINR, not raw power
        int best = 0;
        BeamMeasurement best_m{0.0, -1e300};
        for (const auto& [beam, m] : session->brp_meas) {
            if (m.sinr_db > best_m.sinr_db) {
                best_m = m;
                best = beam;
            }
        }
        session->fbk_tries = 0;
        send_fbk(session, best, best_m);
    }

    void send_fbk(const std::shared_ptr<CoordSetup>& session, int best,
                  BeamMeasurement meas) {
        send60(FrameKind::FBK, ue_station(session->ue), 0, session->ap,
               best_rx_sector(session->ap, session->ue), sc.timing.fbk_frame,
               control_threshold_db(),
               [this, session, best, meas](bool ok, double, double) {
                   if (!ok) {
                       if (++session->fbk_tries < 3) {
                           engine.after(sc.timing.wigig_sifs, [this, session, best,
                                                               meas] {
                               send_fbk(session, best, meas);
                           });
                       } else {
                           bf_failed(session, "fbk-lost");
                       }
                       return;
                   }
                   leave_bf(session->ap);
                   broadcast_bid(session, best, meas);
               });
    }

    void bf_failed(const std::shared_ptr<CoordSetup>& session, const char* why) {
        leave_bf(session->ap);
        trace(session->ap, "bf-fail", Band::wigig60, why, "");
        release_setup(session);
    }

    void leave_bf(int ap) {
        auto& a = aps[static_cast<std::size_t>(ap)];
        if (a.in_bf) {
            a.in_bf = false;
            --in_bf_count;
        }
    }

    void broadcast_bid(const std::shared_ptr<CoordSetup>& session, int beam,
                       BeamMeasurement meas) {
        Frame bid;
        bid.kind = FrameKind::BID;
        bid.source = session->ap;
        bid.destination = kBroadcast;
        bid.duration = sc.timing.wifi_bid;
        bid.payload_id = beam;
        const auto on_bid = [this, session, beam, meas](bool) {
            // the refinement reported the realized link quality, so the MCS
            // already accounts for interference present during training
            const int mcs = mcs_from_snr(meas.sinr_db - sc.link_margin_db, sc.mcs);
            const double power_dbm = meas.power_dbm;
            if (mcs == 0) {
                release_setup(session);
                return;
            }
            Link link;
            link.ap = session->ap;
            link.ue = session->ue;
            link.beam = beam;
            link.mcs = mcs;
            link.power_dbm = power_dbm;
            ActiveLinkRecord rec{session->ap, beam, power_dbm, mcs};
            for (int m = 0; m < n_aps; ++m) {
                if (m == session->ap) continue;
                link.bad[m] = refine_bad_beams(sc.map, rec, m, sc.mcs);
            }
            links[session->ap] = std::move(link);
            trace(session->ap, "bid", Band::wifi5, "ok",
                  "beam=" + std::to_string(beam) + " mcs=" + std::to_string(mcs));
            engine.after(sc.timing.wigig_sifs, [this, session, beam, mcs, power_dbm] {
                start_data(session->ap, session->ue, beam, mcs, power_dbm);
            });
        };
        wifi.enqueue(session->ap, bid, on_bid, /*priority=*/true);
    }

    // --- uncoordinated mode ----------------------------------------------------

    void init_uncoordinated() {
        // association by strongest beacon; beacons are also emitted on air,
        // which re-confirms the choice and costs the same airtime as the
        // real protocol would
        for (int u = 0; u < n_ues; ++u) {
            auto& ue = ues[static_cast<std::size_t>(u)];
            for (int n = 0; n < n_aps; ++n) {
                const int sec = best_rx_sector(n, u);
                const double p = power60_dbm(n, sec, ue_station(u), 0);
                if (p > ue.assoc_power) {
                    ue.assoc_power = p;
                    ue.assoc_ap = n;
                }
            }
            if (ues[static_cast<std::size_t>(u)].assoc_power < sc.env.noise_dbm)
                ues[static_cast<std::size_t>(u)].assoc_ap = -1;
        }
        for (int n = 0; n < n_aps; ++n) schedule_beacon(n, static_cast<Time>(n) * 2 *
                                                               sc.timing.beacon_frame);
    }

    void schedule_beacon(int ap, Time at) {
        if (at > sc.duration) return;
        engine.at(at, [this, ap, at] {
            prune_air();
            const Time end = engine.now() + sc.timing.beacon_frame;
            const std::uint64_t id = air_seq++;
            air.push_back({id, ap, 0, engine.now(), end, tx_power_dbm(ap)});
            engine.at(end, [this, ap, id] {
                trace(ap, "beacon", Band::wigig60, "sent", "");
                for (int u = 0; u < n_ues; ++u) {
                    const double wanted = power60_dbm(ap, 0, ue_station(u), 0);
                    const double interf = interference_mw(
                        ue_station(u), 0, engine.now() - sc.timing.beacon_frame,
                        engine.now(), id);
                    if (dbm_to_mw(wanted) / (interf + noise_mw) >=
                        db_to_linear(control_threshold_db())) {
                        auto& ue = ues[static_cast<std::size_t>(u)];
                        const int sec = best_rx_sector(ap, u);
                        const double p = power60_dbm(ap, sec, ue_station(u), 0);
                        if (p > ue.assoc_power) {
                            ue.assoc_power = p;
                            ue.assoc_ap = ap;
                        }
                    }
                }
            });
            schedule_beacon(ap, at + sc.timing.beacon_interval);
        });
    }

    void uncoord_kick(int ap) {
        auto& a = aps[static_cast<std::size_t>(ap)];
        if (a.session_running || a.serving || a.pending.empty()) return;
        a.session_running = true;
        a.cw = sc.timing.wigig_cw_min;
        const int ue = a.pending.front();
        a.pending.pop_front();
        auto session = std::make_shared<UncoordSession>();
        session->ap = ap;
        session->ue = ue;
        cs_attempt(session);
    }

    bool cs_busy(int ap) {
        prune_air();
        for (const AirTx& a : air) {
            if (a.station == ap) continue;
            if (a.start > engine.now() || a.end <= engine.now()) continue;
            if (power60_dbm(a.station, a.sector, ap, 0) > sc.cs_threshold_dbm) return true;
        }
        return false;
    }

    void cs_attempt(const std::shared_ptr<UncoordSession>& session) {
        auto& a = aps[static_cast<std::size_t>(session->ap)];
        if (cs_busy(session->ap)) {
            trace(session->ap, "cs-busy", Band::wigig60, "defer", "");
            a.cw = std::min(2 * a.cw + 1, sc.timing.wigig_cw_max);
            const Time backoff =
                sc.timing.wigig_slot *
                static_cast<Time>(mac_rng.uniform_int(0, static_cast<std::uint64_t>(a.cw)));
            engine.after(sc.timing.wigig_sifs + 2 * sc.timing.wigig_slot + backoff,
                         [this, session] { cs_attempt(session); });
            return;
        }
        const Time backoff =
            sc.timing.wigig_slot *
            static_cast<Time>(mac_rng.uniform_int(0, static_cast<std::uint64_t>(a.cw)));
        engine.after(sc.timing.wigig_sifs + 2 * sc.timing.wigig_slot + backoff,
                     [this, session] { start_sls(session); });
    }

    void start_sls(const std::shared_ptr<UncoordSession>& session) {
        if (cs_busy(session->ap)) {
            cs_attempt(session);
            return;
        }
        session->sls_meas.clear();
        trace(session->ap, "sls-start", Band::wigig60, "ok",
              "ue=" + name(ue_station(session->ue)));
        const int d_n = codebook(session->ap).size();
        const Time step = sc.timing.ssw_frame + sc.timing.wigig_sbifs;
        for (int k = 0; k < d_n; ++k) {
            const int beam = k + 1;
            engine.after(static_cast<Time>(k) * step, [this, session, beam] {
                send60(FrameKind::SSW, session->ap, beam, ue_station(session->ue), 0,
                       sc.timing.ssw_frame, control_threshold_db(),
                       [this, session, beam](bool ok, double power, double) {
                           if (ok) session->sls_meas[beam] = power;
                       });
            });
        }
        engine.after(static_cast<Time>(d_n) * step + sc.timing.wigig_sifs,
                     [this, session] { sls_finished(session); });
    }

    void sls_finished(const std::shared_ptr<UncoordSession>& session) {
        if (session->sls_meas.empty()) {
            sls_failed(session, "no-measurement");
            return;
        }
        session->best = 0;
        session->best_power = -1e300;
        for (const auto& [beam, p] : session->sls_meas) {
            if (p > session->best_power) {
                session->best_power = p;
                session->best = beam;
            }
        }
        // sector sweep feedback from the UE
        send60(FrameKind::SSWFeedback, ue_station(session->ue), 0, session->ap,
               best_rx_sector(session->ap, session->ue), sc.timing.ssw_feedback,
               control_threshold_db(), [this, session](bool ok, double, double) {
                   if (!ok) {
                       sls_failed(session, "fbk-lost");
                       return;
                   }
                   engine.after(sc.timing.wigig_sifs, [this, session] {
                       confirm_brp(session);
                   });
               });
    }

    void confirm_brp(const std::shared_ptr<UncoordSession>& session) {
        send60(FrameKind::BRP, session->ap, session->best, ue_station(session->ue), 0,
               sc.timing.brp_frame, control_threshold_db(),
               [this, session](bool ok, double, double) {
                   if (!ok) {
                       sls_failed(session, "brp-lost");
                       return;
                   }
                   engine.after(sc.timing.wigig_sifs, [this, session] {
                       send60(FrameKind::FBK, ue_station(session->ue), 0, session->ap,
                              session->best, sc.timing.fbk_frame, control_threshold_db(),
                              [this, session](bool fbk_ok, double, double) {
                                  if (!fbk_ok) {
                                      sls_failed(session, "fbk-lost");
                                      return;
                                  }
                                  // the sweep feedback reports received power;
                                  // without shared link information the rate
                                  // choice cannot anticipate interference
                                  const int mcs = mcs_from_snr(
                                      session->best_power - sc.env.noise_dbm -
                                          sc.link_margin_db,
                                      sc.mcs);
                                  if (mcs == 0) {
                                      park_ue(session);
                                      return;
                                  }
                                  engine.after(sc.timing.wigig_sifs, [this, session,
                                                                      mcs] {
                                      aps[static_cast<std::size_t>(session->ap)]
                                          .session_running = false;
                                      start_data(session->ap, session->ue, session->best,
                                                 mcs, session->best_power);
                                  });
                              });
                       });
               });
    }

    void sls_failed(const std::shared_ptr<UncoordSession>& session, const char* why) {
        trace(session->ap, "sls-fail", Band::wigig60, why,
              "ue=" + name(ue_station(session->ue)));
        auto& a = aps[static_cast<std::size_t>(session->ap)];
        a.cw = std::min(2 * a.cw + 1, sc.timing.wigig_cw_max);
        if (++session->failures >= 8) {
            // persistent failure toward this user; stop blocking the queue
            park_ue(session);
            return;
        }
        cs_attempt(session);
    }

    void park_ue(const std::shared_ptr<UncoordSession>& session) {
        // link budget too thin for any rate; move on to the next user
        auto& a = aps[static_cast<std::size_t>(session->ap)];
        a.session_running = false;
        auto& u = ues[static_cast<std::size_t>(session->ue)];
        u.state = UeState::S::idle;
        engine.after(sc.timing.holdoff, [this, ue = session->ue] {
            if (!ues[static_cast<std::size_t>(ue)].queue.empty()) on_ue_has_traffic(ue);
        });
        uncoord_kick(session->ap);
    }

    // --- run -------------------------------------------------------------------

    RunTally run() {
        if (sc.mode == Mode::uncoordinated) init_uncoordinated();
        for (int u = 0; u < n_ues; ++u) schedule_arrival(u);
        engine.run_until(sc.duration);
        for (int u = 0; u < n_ues; ++u) {
            // packets already received but still awaiting their ack count as
            // delivered, not as in flight
            long pending = 0;
            for (const Packet& p : ues[static_cast<std::size_t>(u)].queue)
                if (!p.delivered) ++pending;
            tally.per_ue[static_cast<std::size_t>(u)].queued_at_end = pending;
        }
        return tally;
    }
};

Simulation::Simulation(const Scenario& scenario, std::uint64_t seed, TraceSink* sink)
    : impl_(std::make_unique<Impl>(scenario, seed, sink)) {}

Simulation::~Simulation() = default;

void Simulation::inject_packet(int ue, Time t) {
    impl_->engine.at(t, [impl = impl_.get(), ue] { impl->add_packet(ue); });
}

RunTally Simulation::run() { return impl_->run(); }

void Simulation::test_force_bf_state(int ap) {
    impl_->aps[static_cast<std::size_t>(ap)].in_bf = true;
    ++impl_->in_bf_count;
}

}  // namespace wigig::sim
