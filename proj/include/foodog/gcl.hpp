#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "foodog/memmodel.hpp"
#include "foodog/model.hpp"

namespace foodog {

enum class GateState { open, closed };

/// One state of a port's time-aware shaper; entries of one port tile the
/// network cycle period exactly.
struct TasGclEntry {
    Nanos time_interval = 0;
    GateState gate_state = GateState::closed;
    int queue = 0;              // meaningful only while open
};

struct StdPsfpEntry {
    GateState gate_state = GateState::closed;
    Nanos time_interval = 0;
    int queue = 0;
};

/// Standard per-stream policing GCL: 2*(T/T_i)+1 alternating entries.
struct StdPsfpGcl {
    int stream = 0;
    std::vector<StdPsfpEntry> entries;
};

struct PeriodWiseGclEntry {
    Nanos update_time = 0;      // within the pGCL cycle period
    int gate_id = 0;            // stream id it updates
    GateState gate_state = GateState::closed;
    int queue = 0;
};

/// Records only the first frame's open/close timings of every stream sharing
/// one period; replaying it every pgcl_cycle expresses all later frames.
struct PeriodWiseGcl {
    Nanos pgcl_cycle = 0;
    std::vector<PeriodWiseGclEntry> entries;
};

struct SgclEntry {
    GateState gate_state = GateState::closed;
    int queue = 0;
};

/// Live gate state of every stream, addressed by stream id.
struct StreamWiseGcl {
    std::vector<SgclEntry> entries;
};

struct ArrivalWindow {
    Nanos lower = 0;            // inf |kappa|
    Nanos upper = 0;            // sup |kappa|
};

/// Planned arrival window of a frame transmitted at tx_time over `link`:
/// [tx + min_delay - delta, tx + max_delay + delta], closed on both ends.
inline ArrivalWindow arrival_window(Nanos tx_time, const Link& link, Nanos delta) {
    if (tx_time < 0) throw std::invalid_argument("negative transmission time");
    ArrivalWindow w;
    w.lower = tx_time + link.min_delay_ns - delta;
    w.upper = tx_time + link.max_delay_ns + delta;
    if (w.lower < 0) throw std::invalid_argument("window underflows cycle start");
    return w;
}

namespace detail {

inline Nanos schedule_tx_ns(const Problem& p, const FrameSlot& f) {
    return f.tx_time * p.links[static_cast<std::size_t>(f.link)].granularity_ns;
}

/// Queue the stream is directed into at the policing hop: the planned queue
/// on the link after `link`, or 0 when the route ends there.
inline int next_hop_queue(const Problem& p, const ScheduleIndex& idx, const Stream& st,
                          int link) {
    for (std::size_t pos = 0; pos < st.route.size(); ++pos) {
        if (st.route[pos] != link) continue;
        if (pos + 1 == st.route.size()) return 0;
        const FrameSlot* f = idx.find(st.id, 0, st.route[pos + 1]);
        if (f == nullptr) throw std::invalid_argument("incomplete schedule for " + stream_name(st.id));
        return f->queue;
    }
    throw std::invalid_argument(stream_name(st.id) + " does not use " + p.link_name(link));
}

}  // namespace detail

/// Egress gate schedule of one port: an open interval [w, w + C/BD) per frame
/// slot, closed elsewhere, contiguous same-queue intervals merged.
inline std::vector<TasGclEntry> synth_tas(const Problem& p, const Schedule& s, int link) {
    const Nanos cycle = network_cycle_period(p.streams);
    struct Iv {
        Nanos start, end;
        int queue;
    };
    std::vector<Iv> ivs;
    for (const auto& f : s.slots) {
        if (f.link != link) continue;
        const Nanos start = detail::schedule_tx_ns(p, f);
        const Nanos dur = tx_duration_ns(p.streams[static_cast<std::size_t>(f.stream)].size_bytes,
                                         p.links[static_cast<std::size_t>(link)].bandwidth_bps);
        ivs.push_back({start, start + dur, f.queue});
    }
    std::sort(ivs.begin(), ivs.end(),
              [](const Iv& a, const Iv& b) { return std::tie(a.start, a.end) < std::tie(b.start, b.end); });
    std::vector<Iv> merged;
    for (const auto& iv : ivs) {
        if (iv.end > cycle) throw std::invalid_argument("transmission crosses cycle end on " +
                                                        p.link_name(link));
        if (!merged.empty() && iv.start < merged.back().end)
            throw std::invalid_argument("overlapping transmissions on " + p.link_name(link));
        if (!merged.empty() && iv.start == merged.back().end && iv.queue == merged.back().queue)
            merged.back().end = iv.end;
        else
            merged.push_back(iv);
    }
    std::vector<TasGclEntry> out;
    Nanos at = 0;
    for (const auto& iv : merged) {
        if (iv.start > at) out.push_back({iv.start - at, GateState::closed, 0});
        out.push_back({iv.end - iv.start, GateState::open, iv.queue});
        at = iv.end;
    }
    if (at < cycle || out.empty()) out.push_back({cycle - at, GateState::closed, 0});
    return out;
}

/// One standard PSFP GCL per stream ingressing over `link`: per frame j an
/// open entry spanning its closed arrival window, alternating with closed
/// entries (kept even when zero-length) so the depth is exactly 2*(T/T_i)+1.
inline std::vector<StdPsfpGcl> synth_standard_psfp(const Problem& p, const Schedule& s, int link,
                                                   Nanos delta) {
    const Nanos cycle = network_cycle_period(p.streams);
    const Link& ln = p.links[static_cast<std::size_t>(link)];
    ScheduleIndex idx(s);
    std::vector<StdPsfpGcl> out;
    for (const auto& st : p.streams) {
        if (std::find(st.route.begin(), st.route.end(), link) == st.route.end()) continue;
        StdPsfpGcl gcl;
        gcl.stream = st.id;
        const int queue = detail::next_hop_queue(p, idx, st, link);
        Nanos at = 0;
        for (std::int64_t j = 0; j < cycle / st.period_ns; ++j) {
            const FrameSlot* f = idx.find(st.id, j, link);
            if (f == nullptr)
                throw std::invalid_argument("incomplete schedule for " + stream_name(st.id));
            const ArrivalWindow w = arrival_window(detail::schedule_tx_ns(p, *f), ln, delta);
            if (w.lower < at)
                throw std::invalid_argument("overlapping open windows: " + stream_name(st.id) +
                                            " on " + p.link_name(link));
            gcl.entries.push_back({GateState::closed, w.lower - at, 0});
            gcl.entries.push_back({GateState::open, w.upper + 1 - w.lower, queue});
            at = w.upper + 1;
        }
        if (at > cycle)
            throw std::invalid_argument("window crosses cycle end: " + stream_name(st.id) +
                                        " on " + p.link_name(link));
        gcl.entries.push_back({GateState::closed, cycle - at, 0});
        out.push_back(std::move(gcl));
    }
    return out;
}

struct FoodogPortGcl {
    std::vector<PeriodWiseGcl> pgcls;    // one per distinct stream period
    StreamWiseGcl sgcl;                  // state each gate holds at cycle start
};

/// Compressed policing configuration for one ingress port: per stream two
/// period-wise entries placed at the first frame's window bounds (wrapped
/// into the pGCL cycle when the window crosses it), plus the stream-wise
/// cycle-start states.
inline FoodogPortGcl synth_foodog(const Problem& p, const Schedule& s, int link, Nanos delta) {
    const Nanos cycle = network_cycle_period(p.streams);
    const Link& ln = p.links[static_cast<std::size_t>(link)];
    ScheduleIndex idx(s);
    FoodogPortGcl out;

    std::map<Nanos, std::vector<PeriodWiseGclEntry>> by_period;
    std::vector<std::pair<int, SgclEntry>> initial;
    for (const auto& st : p.streams) {
        if (std::find(st.route.begin(), st.route.end(), link) == st.route.end()) continue;
        const std::int64_t frames = cycle / st.period_ns;
        const FrameSlot* first = idx.find(st.id, 0, link);
        if (first == nullptr)
            throw std::invalid_argument("incomplete schedule for " + stream_name(st.id));
        for (std::int64_t j = 1; j < frames; ++j) {
            const FrameSlot* f = idx.find(st.id, j, link);
            if (f == nullptr)
                throw std::invalid_argument("incomplete schedule for " + stream_name(st.id));
            if (f->queue != first->queue)
                throw std::invalid_argument("schedule not foodog: queue changes for " +
                                            stream_name(st.id) + " on " + p.link_name(link));
            if (detail::schedule_tx_ns(p, *f) !=
                detail::schedule_tx_ns(p, *first) + j * st.period_ns)
                throw std::invalid_argument("schedule not foodog: not strictly periodic for " +
                                            stream_name(st.id) + " on " + p.link_name(link));
        }
        const ArrivalWindow w = arrival_window(detail::schedule_tx_ns(p, *first), ln, delta);
        const Nanos width = w.upper - w.lower + 1;
        if (width > st.period_ns)
            throw std::invalid_argument("arrival window wider than period: " + stream_name(st.id));
        const int queue = detail::next_hop_queue(p, idx, st, link);
        const Nanos open_at = floor_mod(w.lower, st.period_ns);
        const Nanos close_at = floor_mod(w.upper + 1, st.period_ns);
        auto& entries = by_period[st.period_ns];
        entries.push_back({open_at, st.id, GateState::open, queue});
        entries.push_back({close_at, st.id, GateState::closed, queue});

        SgclEntry init;
        init.queue = queue;
        if (open_at < close_at)
            init.gate_state = open_at == 0 ? GateState::open : GateState::closed;
        else
            init.gate_state = GateState::open;   // wrapped or full-period window
        initial.emplace_back(st.id, init);
    }

    for (auto& [period, entries] : by_period) {
        std::sort(entries.begin(), entries.end(),
                  [](const PeriodWiseGclEntry& a, const PeriodWiseGclEntry& b) {
                      const int sa = a.gate_state == GateState::closed ? 0 : 1;
                      const int sb = b.gate_state == GateState::closed ? 0 : 1;
                      return std::tie(a.update_time, sa, a.gate_id) <
                             std::tie(b.update_time, sb, b.gate_id);
                  });
        PeriodWiseGcl g;
        g.pgcl_cycle = period;
        g.entries = std::move(entries);
        out.pgcls.push_back(std::move(g));
    }
    if (!initial.empty()) {
        out.sgcl.entries.resize(p.streams.size());
        for (const auto& [id, e] : initial) out.sgcl.entries[static_cast<std::size_t>(id)] = e;
    }
    return out;
}

/// Per-stream source transmission offset on its first link; the talker-side
/// counterpart of the switch GCLs.
struct TalkerEntry {
    int stream = 0;
    int link = 0;
    Nanos first_tx_ns = 0;
};

struct PortGcls {
    int link = 0;
    std::vector<TasGclEntry> tas;
    std::vector<StdPsfpGcl> std_psfp;
    FoodogPortGcl foodog;
};

/// Everything a deployment needs: per-port shaping and policing tables plus
/// the talker offsets, for one verified schedule.
struct GclSet {
    Nanos cycle_ns = 0;
    WidthConfig widths;
    std::vector<PortGcls> ports;          // one per link, index-aligned
    std::vector<TalkerEntry> talkers;     // one per stream
};

inline GclSet synth_all(const Problem& p, const Schedule& s, const WidthConfig& widths) {
    GclSet set;
    set.cycle_ns = network_cycle_period(p.streams);
    set.widths = widths;
    ScheduleIndex idx(s);
    for (std::size_t li = 0; li < p.links.size(); ++li) {
        PortGcls port;
        port.link = static_cast<int>(li);
        port.tas = synth_tas(p, s, static_cast<int>(li));
        port.std_psfp = synth_standard_psfp(p, s, static_cast<int>(li), p.sync_precision_ns);
        port.foodog = synth_foodog(p, s, static_cast<int>(li), p.sync_precision_ns);
        set.ports.push_back(std::move(port));
    }
    for (const auto& st : p.streams) {
        const FrameSlot* f = idx.find(st.id, 0, st.route.front());
        if (f == nullptr)
            throw std::invalid_argument("incomplete schedule for " + stream_name(st.id));
        set.talkers.push_back({st.id, st.route.front(), detail::schedule_tx_ns(p, *f)});
    }
    return set;
}

}  // namespace foodog
