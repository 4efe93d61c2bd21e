#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "foodog/gcl.hpp"
#include "foodog/model.hpp"

namespace foodog {

enum class SimMode { none, standard_psfp, foodog };

/// Switch-internal frame metadata. The stream/queue/discard fields pack into
/// the 64-bit on-wire descriptor layout.
struct FrameDescriptor {
    int stream = 0;                 // 14 bits, up to 16384 streams
    int queue = 0;                  // 3 bits
    bool discard = false;           // 1 bit
    Nanos arrival = 0;
    std::int64_t frame_index = 0;
};

inline std::uint64_t pack_descriptor(const FrameDescriptor& fd) {
    if (fd.stream < 0 || fd.stream >= 16384) throw std::invalid_argument("stream id needs 14 bits");
    if (fd.queue < 0 || fd.queue >= 8) throw std::invalid_argument("queue id needs 3 bits");
    return static_cast<std::uint64_t>(fd.stream) |
           (static_cast<std::uint64_t>(fd.queue) << 14) |
           (static_cast<std::uint64_t>(fd.discard ? 1 : 0) << 17);
}

inline FrameDescriptor unpack_descriptor(std::uint64_t bits) {
    FrameDescriptor fd;
    fd.stream = static_cast<int>(bits & 0x3fff);
    fd.queue = static_cast<int>((bits >> 14) & 0x7);
    fd.discard = ((bits >> 17) & 0x1) != 0;
    return fd;
}

/// Time-triggered executor of one Period-wise GCL; tracks where in the pGCL
/// cycle the engine stands and which entry fires next.
struct UpdateUnit {
    PeriodWiseGcl gcl;
    std::size_t addr_ptr = 0;
    Nanos pgcl_cycle = 0;
    Nanos local_phase = 0;
    Nanos cycle_base = 0;       // local time at which the current pGCL cycle started
};

inline UpdateUnit make_update_unit(const PeriodWiseGcl& gcl) {
    UpdateUnit uu;
    uu.gcl = gcl;
    uu.pgcl_cycle = gcl.pgcl_cycle;
    return uu;
}

/// Applies every entry whose update time has elapsed by `now` (local clock)
/// into the Stream-wise GCL, wrapping to the first entry at each pGCL cycle
/// boundary. Returns the number of writes. `now` must not go backwards.
inline int gate_update_step(UpdateUnit& uu, StreamWiseGcl& sgcl, Nanos now) {
    if (uu.gcl.entries.empty() || now < uu.cycle_base) return 0;
    int writes = 0;
    while (true) {
        const PeriodWiseGclEntry& e = uu.gcl.entries[uu.addr_ptr];
        const Nanos fire_at = uu.cycle_base + e.update_time;
        if (fire_at > now) break;
        if (e.gate_id >= 0 && e.gate_id < static_cast<int>(sgcl.entries.size()))
            sgcl.entries[static_cast<std::size_t>(e.gate_id)] = {e.gate_state, e.queue};
        ++writes;
        if (++uu.addr_ptr == uu.gcl.entries.size()) {
            uu.addr_ptr = 0;
            uu.cycle_base += uu.pgcl_cycle;
        }
    }
    uu.local_phase = now - uu.cycle_base;
    return writes;
}

/// Single indexed read: open gate passes the frame into the gate's queue,
/// closed gate (or an out-of-range stream id) marks it discarded.
inline FrameDescriptor police_foodog(FrameDescriptor fd, const StreamWiseGcl& sgcl) {
    if (fd.stream < 0 || fd.stream >= static_cast<int>(sgcl.entries.size())) {
        fd.discard = true;
        return fd;
    }
    const SgclEntry& e = sgcl.entries[static_cast<std::size_t>(fd.stream)];
    if (e.gate_state == GateState::open) {
        fd.discard = false;
        fd.queue = e.queue;
    } else {
        fd.discard = true;
    }
    return fd;
}

/// Search-ready view of one standard PSFP GCL (cumulative entry starts).
struct StdPsfpIndex {
    int stream = 0;
    Nanos cycle = 0;
    std::vector<Nanos> starts;          // entry start offsets within the cycle
    std::vector<StdPsfpEntry> entries;
};

inline StdPsfpIndex index_std_gcl(const StdPsfpGcl& gcl, Nanos cycle) {
    StdPsfpIndex idx;
    idx.stream = gcl.stream;
    idx.cycle = cycle;
    Nanos at = 0;
    for (const auto& e : gcl.entries) {
        if (e.time_interval < 0) throw std::invalid_argument("negative GCL interval");
        idx.starts.push_back(at);
        idx.entries.push_back(e);
        at += e.time_interval;
    }
    if (at != cycle) throw std::invalid_argument("GCL intervals do not tile the cycle period");
    return idx;
}

/// Locates the entry whose interval contains (now mod T) and applies its
/// state, mirroring the standard per-stream policing semantics.
inline FrameDescriptor police_standard(FrameDescriptor fd, const StdPsfpIndex& gcl, Nanos now) {
    const Nanos pos = floor_mod(now, gcl.cycle);
    auto it = std::upper_bound(gcl.starts.begin(), gcl.starts.end(), pos);
    std::size_t i = static_cast<std::size_t>(it - gcl.starts.begin());
    // step back over zero-length entries to the interval actually covering pos
    while (i > 0) {
        --i;
        const Nanos start = gcl.starts[i];
        if (pos >= start && pos < start + gcl.entries[i].time_interval) break;
    }
    const StdPsfpEntry& e = gcl.entries[i];
    if (e.gate_state == GateState::open && pos >= gcl.starts[i] &&
        pos < gcl.starts[i] + e.time_interval) {
        fd.discard = false;
        fd.queue = e.queue;
    } else {
        fd.discard = true;
    }
    return fd;
}

/// Timing fault of one source: transmission instants of frames whose ideal
/// emission lies at or after `start` are displaced by `shift`.
struct AnomalySpec {
    int stream = 0;
    Nanos start = 0;
    Nanos shift = 0;
};

enum class SimEventKind { sent, policed_pass, policed_drop, enqueued, dequeued, delivered, error };

inline const char* to_string(SimEventKind k) {
    switch (k) {
        case SimEventKind::sent: return "sent";
        case SimEventKind::policed_pass: return "policed_pass";
        case SimEventKind::policed_drop: return "policed_drop";
        case SimEventKind::enqueued: return "enqueued";
        case SimEventKind::dequeued: return "dequeued";
        case SimEventKind::delivered: return "delivered";
        case SimEventKind::error: return "error";
    }
    return "?";
}

struct SimEvent {
    Nanos time = 0;
    SimEventKind kind = SimEventKind::sent;
    int stream = 0;
    std::int64_t frame_index = 0;
    std::string vertex;
};

/// Trace plus the run facts metrics need: the unshifted (ideal) emission
/// pattern of every source and the observation horizon.
struct SimTrace {
    std::vector<SimEvent> events;
    Nanos horizon = 0;
    struct SendBase {
        int stream = 0;
        Nanos base = 0;         // true time of the unshifted first emission
        Nanos period = 0;
    };
    std::vector<SendBase> send_bases;
};

struct StreamMetrics {
    int stream = 0;
    std::vector<Nanos> delays;            // per delivered frame, post-warmup
    std::optional<Nanos> jitter;          // absent when nothing was delivered
    std::int64_t drops = 0;
    std::int64_t sent = 0;
};

/// Per-stream end-to-end delay/jitter/drop metrics over [warmup, horizon).
/// Delay is measured against the ideal (shift-free) emission instant.
inline std::vector<StreamMetrics> metrics(const SimTrace& trace, Nanos warmup) {
    if (warmup >= trace.horizon && trace.horizon > 0)
        throw std::invalid_argument("warmup must precede the horizon");
    std::vector<StreamMetrics> out;
    for (const auto& sb : trace.send_bases) {
        StreamMetrics m;
        m.stream = sb.stream;
        auto in_window = [&](std::int64_t frame) {
            const Nanos ideal = sb.base + frame * sb.period;
            return ideal >= warmup && ideal < trace.horizon;
        };
        for (const auto& e : trace.events) {
            if (e.stream != sb.stream || !in_window(e.frame_index)) continue;
            if (e.kind == SimEventKind::sent) ++m.sent;
            if (e.kind == SimEventKind::policed_drop) ++m.drops;
            if (e.kind == SimEventKind::delivered)
                m.delays.push_back(e.time - (sb.base + e.frame_index * sb.period));
        }
        if (!m.delays.empty()) {
            const auto [lo, hi] = std::minmax_element(m.delays.begin(), m.delays.end());
            m.jitter = *hi - *lo;
        }
        out.push_back(std::move(m));
    }
    return out;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

class Simulator {
public:
    Simulator(const Problem& p, const GclSet& gcls, SimMode mode,
              const std::vector<AnomalySpec>& anomalies,
              const std::unordered_map<std::string, Nanos>& clock_offsets, Nanos horizon,
              std::uint64_t seed)
        : p_(p), gcls_(gcls), mode_(mode), horizon_(horizon), seed_(seed) {
        cycle_ = network_cycle_period(p.streams);
        if (horizon <= 0 || horizon % cycle_ != 0)
            throw std::invalid_argument("horizon must be a positive multiple of the cycle period");
        if (gcls.ports.size() != p.links.size())
            throw std::invalid_argument("GCL set does not match the topology");
        for (const auto& v : p.vertices) {
            Nanos off = 0;
            if (auto it = clock_offsets.find(v.id); it != clock_offsets.end()) off = it->second;
            if (off < -p.sync_precision_ns || off > p.sync_precision_ns)
                throw std::invalid_argument("clock offset outside sync precision: " + v.id);
            offset_[v.id] = off;
        }
        for (const auto& a : anomalies) {
            if (a.stream < 0 || a.stream >= static_cast<int>(p.streams.size()))
                throw std::invalid_argument("anomaly references unknown stream");
            if (std::abs(a.shift) > p.streams[static_cast<std::size_t>(a.stream)].period_ns)
                throw std::invalid_argument("anomaly shift exceeds the stream period");
            anomaly_[a.stream] = a;
        }
        build_ports();
        seed_sources();
    }

    SimTrace run() {
        while (!events_.empty()) {
            const Event ev = events_.top();
            events_.pop();
            switch (ev.type) {
                case EventType::gate_open:
                case EventType::tx_complete:
                    try_start(ev.link, ev.time);
                    break;
                case EventType::emit:
                    handle_emit(ev);
                    break;
                case EventType::arrival:
                    handle_arrival(ev);
                    break;
            }
        }
        trace_.horizon = horizon_;
        return std::move(trace_);
    }

private:
    enum class EventType { gate_open = 0, tx_complete = 1, emit = 2, arrival = 3 };
    struct Event {
        Nanos time = 0;
        EventType type = EventType::emit;
        std::uint64_t seq = 0;
        int link = -1;
        int stream = -1;
        std::int64_t frame = 0;
        bool operator>(const Event& o) const {
            return std::tie(time, type, seq) > std::tie(o.time, o.type, o.seq);
        }
    };

    struct OpenInterval {
        Nanos start = 0, end = 0;
        int queue = 0;
    };
    struct PortState {
        std::vector<OpenInterval> open;              // within [0, cycle), sorted
        std::vector<std::deque<std::pair<int, std::int64_t>>> queues;
        Nanos busy_until = 0;
        // policing state for frames arriving over this link
        std::vector<UpdateUnit> uus;
        StreamWiseGcl sgcl;
        std::vector<StdPsfpIndex> std_index;         // by stream id, may be empty
    };

    Nanos offset_of(const std::string& v) const {
        auto it = offset_.find(v);
        return it == offset_.end() ? 0 : it->second;
    }
    Nanos link_delay(int link, int stream, std::int64_t frame) const {
        const Link& ln = p_.links[static_cast<std::size_t>(link)];
        const std::uint64_t h = splitmix64(
            splitmix64(splitmix64(seed_ ^ static_cast<std::uint64_t>(link + 1)) ^
                       static_cast<std::uint64_t>(stream + 1)) ^
            static_cast<std::uint64_t>(frame + 1));
        const std::uint64_t span = static_cast<std::uint64_t>(ln.max_delay_ns - ln.min_delay_ns) + 1;
        return ln.min_delay_ns + static_cast<Nanos>(h % span);
    }
    Nanos dur_of(int stream, int link) const {
        return tx_duration_ns(p_.streams[static_cast<std::size_t>(stream)].size_bytes,
                              p_.links[static_cast<std::size_t>(link)].bandwidth_bps);
    }

    void build_ports() {
        ports_.resize(p_.links.size());
        const Nanos drain = horizon_ + 4 * cycle_;
        for (std::size_t li = 0; li < p_.links.size(); ++li) {
            PortState& port = ports_[li];
            const PortGcls& cfg = gcls_.ports[li];
            port.queues.resize(static_cast<std::size_t>(p_.links[li].ts_queues));
            Nanos at = 0;
            for (const auto& e : cfg.tas) {
                if (e.gate_state == GateState::open && e.time_interval > 0)
                    port.open.push_back({at, at + e.time_interval, e.queue});
                at += e.time_interval;
            }
            if (at != cycle_)
                throw std::invalid_argument("TAS GCL does not tile the cycle on " +
                                            p_.link_name(static_cast<int>(li)));
            for (const auto& uu : cfg.foodog.pgcls) port.uus.push_back(make_update_unit(uu));
            port.sgcl = cfg.foodog.sgcl;
            if (mode_ == SimMode::standard_psfp) {
                port.std_index.resize(p_.streams.size());
                for (const auto& g : cfg.std_psfp)
                    port.std_index[static_cast<std::size_t>(g.stream)] = index_std_gcl(g, cycle_);
            }
            const Nanos off = offset_of(p_.links[li].from);
            for (const auto& iv : port.open)
                for (Nanos base = 0; base + iv.start - off < drain; base += cycle_)
                    push_event({base + iv.start - off, EventType::gate_open, next_seq(),
                                static_cast<int>(li), -1, 0});
        }
    }

    void seed_sources() {
        for (const auto& tk : gcls_.talkers) {
            const Stream& st = p_.streams[static_cast<std::size_t>(tk.stream)];
            const Nanos src_off = offset_of(p_.links[static_cast<std::size_t>(tk.link)].from);
            SimTrace::SendBase sb;
            sb.stream = st.id;
            sb.period = st.period_ns;
            sb.base = tk.first_tx_ns - src_off;
            trace_.send_bases.push_back(sb);
            for (std::int64_t j = 0; tk.first_tx_ns + j * st.period_ns < horizon_; ++j) {
                Nanos t = tk.first_tx_ns + j * st.period_ns - src_off;
                if (auto it = anomaly_.find(st.id); it != anomaly_.end()) {
                    if (tk.first_tx_ns + j * st.period_ns >= it->second.start)
                        t += it->second.shift;
                }
                push_event({t, EventType::emit, next_seq(), tk.link, st.id, j});
            }
        }
    }

    void handle_emit(const Event& ev) {
        const Stream& st = p_.streams[static_cast<std::size_t>(ev.stream)];
        const Link& ln = p_.links[static_cast<std::size_t>(ev.link)];
        record(ev.time, SimEventKind::sent, ev.stream, ev.frame, ln.from);
        if (st.route.back() == ev.link) {
            record(ev.time, SimEventKind::delivered, ev.stream, ev.frame, ln.to);
            return;
        }
        push_event({ev.time + link_delay(ev.link, ev.stream, ev.frame), EventType::arrival,
                    next_seq(), ev.link, ev.stream, ev.frame});
    }

    void handle_arrival(const Event& ev) {
        const Stream& st = p_.streams[static_cast<std::size_t>(ev.stream)];
        const Link& in = p_.links[static_cast<std::size_t>(ev.link)];
        const std::string& here = in.to;
        PortState& port = ports_[static_cast<std::size_t>(ev.link)];
        const Nanos local = ev.time + offset_of(here);

        FrameDescriptor fd;
        fd.stream = ev.stream;
        fd.frame_index = ev.frame;
        fd.arrival = local;

        int next_link = -1;
        for (std::size_t pos = 0; pos + 1 < st.route.size(); ++pos)
            if (st.route[pos] == ev.link) next_link = st.route[pos + 1];
        if (next_link < 0) {
            record(ev.time, SimEventKind::error, ev.stream, ev.frame, here);
            return;
        }

        switch (mode_) {
            case SimMode::none:
                fd.discard = false;
                fd.queue = planned_queue(ev.link, ev.stream);
                break;
            case SimMode::foodog:
                for (auto& uu : port.uus) gate_update_step(uu, port.sgcl, local);
                if (ev.stream >= static_cast<int>(port.sgcl.entries.size()))
                    record(ev.time, SimEventKind::error, ev.stream, ev.frame, here);
                fd = police_foodog(fd, port.sgcl);
                break;
            case SimMode::standard_psfp: {
                const auto& idx = port.std_index[static_cast<std::size_t>(ev.stream)];
                if (idx.entries.empty()) {
                    record(ev.time, SimEventKind::error, ev.stream, ev.frame, here);
                    fd.discard = true;
                } else {
                    fd = police_standard(fd, idx, local);
                }
                break;
            }
        }
        if (fd.discard) {
            record(ev.time, SimEventKind::policed_drop, ev.stream, ev.frame, here);
            return;
        }
        if (mode_ != SimMode::none)
            record(ev.time, SimEventKind::policed_pass, ev.stream, ev.frame, here);

        PortState& out_port = ports_[static_cast<std::size_t>(next_link)];
        if (fd.queue < 0 || fd.queue >= static_cast<int>(out_port.queues.size())) {
            record(ev.time, SimEventKind::error, ev.stream, ev.frame, here);
            return;
        }
        record(ev.time, SimEventKind::enqueued, ev.stream, ev.frame, here);
        out_port.queues[static_cast<std::size_t>(fd.queue)].push_back({ev.stream, ev.frame});
        try_start(next_link, ev.time);
    }

    // Planned queue at the hop after `in_link`, read from the stream-wise GCL.
    int planned_queue(int in_link, int stream) const {
        const auto& sgcl = gcls_.ports[static_cast<std::size_t>(in_link)].foodog.sgcl;
        if (stream < static_cast<int>(sgcl.entries.size()))
            return sgcl.entries[static_cast<std::size_t>(stream)].queue;
        return 0;
    }

    // Starts one transmission on `link` if its gate is open for a non-empty
    // queue, the head frame fits before the gate closes, and the wire is idle.
    void try_start(int link, Nanos now) {
        PortState& port = ports_[static_cast<std::size_t>(link)];
        if (port.busy_until > now) return;
        const Link& ln = p_.links[static_cast<std::size_t>(link)];
        const Nanos local = now + offset_of(ln.from);
        const Nanos pos = floor_mod(local, cycle_);
        const OpenInterval* iv = nullptr;
        auto it = std::upper_bound(port.open.begin(), port.open.end(), pos,
                                   [](Nanos v, const OpenInterval& o) { return v < o.start; });
        if (it != port.open.begin()) {
            const OpenInterval& cand = *(it - 1);
            if (pos >= cand.start && pos < cand.end) iv = &cand;
        }
        if (iv == nullptr) return;
        auto& queue = port.queues[static_cast<std::size_t>(iv->queue)];
        if (queue.empty()) return;
        const auto [stream, frame] = queue.front();
        const Nanos dur = dur_of(stream, link);
        if (pos + dur > iv->end) return;            // does not fit before close
        queue.pop_front();
        record(now, SimEventKind::dequeued, stream, frame, ln.from);
        port.busy_until = now + dur;
        push_event({now + dur, EventType::tx_complete, next_seq(), link, -1, 0});
        const Stream& st = p_.streams[static_cast<std::size_t>(stream)];
        if (st.route.back() == link) {
            record(now, SimEventKind::delivered, stream, frame, ln.to);
        } else {
            push_event({now + link_delay(link, stream, frame), EventType::arrival, next_seq(),
                        link, stream, frame});
        }
    }

    void record(Nanos t, SimEventKind k, int stream, std::int64_t frame, const std::string& v) {
        trace_.events.push_back({t, k, stream, frame, v});
    }
    std::uint64_t next_seq() { return seq_++; }
    void push_event(Event e) { events_.push(std::move(e)); }

    const Problem& p_;
    const GclSet& gcls_;
    SimMode mode_;
    Nanos horizon_;
    std::uint64_t seed_;
    Nanos cycle_ = 0;
    std::unordered_map<std::string, Nanos> offset_;
    std::unordered_map<int, AnomalySpec> anomaly_;
    std::vector<PortState> ports_;
    std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
    SimTrace trace_;
    std::uint64_t seq_ = 0;
};

}  // namespace detail

/// Event-driven execution of the network under the given GCLs. Sources emit
/// strictly periodically (plus any anomaly shift), every intermediate hop
/// polices per `mode`, TAS gates dequeue on each vertex's offset clock, and
/// link delays are drawn deterministically from the seed. Identical inputs
/// produce identical traces.
inline SimTrace run(const Problem& problem, const GclSet& gcls, SimMode mode,
                    const std::vector<AnomalySpec>& anomalies,
                    const std::unordered_map<std::string, Nanos>& clock_offsets, Nanos horizon,
                    std::uint64_t seed) {
    detail::Simulator sim(problem, gcls, mode, anomalies, clock_offsets, horizon, seed);
    return sim.run();
}

}  // namespace foodog
