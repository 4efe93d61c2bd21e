#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "foodog/constraints.hpp"
#include "foodog/model.hpp"

namespace foodog {

namespace detail {

inline std::string frame_name(int stream, std::int64_t j) {
    return stream_name(stream) + "[" + std::to_string(j) + "]";
}

}  // namespace detail

/// Brute-force checker of the full constraint system by direct expansion over
/// every frame in the network cycle period. Independent of the constraint
/// builder and solver on purpose: this is the oracle they are held against.
/// foodog mode additionally checks the same-queue and strict-periodicity
/// structure. Throws on incomplete coverage; violations are returned as data.
inline std::vector<std::string> verify_schedule(const Problem& p, const Schedule& s,
                                                PlanMode mode) {
    std::vector<std::string> out;
    if (p.streams.empty()) {
        if (!s.slots.empty()) throw std::invalid_argument("schedule has slots but no streams");
        return out;
    }
    const Nanos T = network_cycle_period(p.streams);
    const Nanos delta = p.sync_precision_ns;
    ScheduleIndex idx(s);

    std::size_t expected = 0;
    for (const auto& st : p.streams)
        expected += static_cast<std::size_t>(T / st.period_ns) * st.route.size();
    if (s.slots.size() != expected)
        throw std::invalid_argument("incomplete schedule: expected " + std::to_string(expected) +
                                    " slots, got " + std::to_string(s.slots.size()));

    auto slot_of = [&](int stream, std::int64_t j, int link) -> const FrameSlot& {
        const FrameSlot* f = idx.find(stream, j, link);
        if (f == nullptr)
            throw std::invalid_argument("incomplete schedule: missing " +
                                        detail::frame_name(stream, j) + " on " +
                                        p.link_name(link));
        return *f;
    };
    auto tx_ns = [&](const FrameSlot& f) {
        return f.tx_time * p.links[static_cast<std::size_t>(f.link)].granularity_ns;
    };
    auto dur_ns = [&](int stream, int link) {
        return tx_duration_ns(p.streams[static_cast<std::size_t>(stream)].size_bytes,
                              p.links[static_cast<std::size_t>(link)].bandwidth_bps);
    };

    // Eq.3 window + fit, Eq.8 queue range, Eq.5 sequence, Eq.6 deadline.
    for (const auto& st : p.streams) {
        const std::int64_t frames = T / st.period_ns;
        for (std::int64_t j = 0; j < frames; ++j) {
            for (std::size_t pos = 0; pos < st.route.size(); ++pos) {
                const int li = st.route[pos];
                const Link& ln = p.links[static_cast<std::size_t>(li)];
                const FrameSlot& f = slot_of(st.id, j, li);
                const Nanos start = tx_ns(f);
                const Nanos dur = dur_ns(st.id, li);
                if (f.tx_time < 0 || start < j * st.period_ns ||
                    start + dur > (j + 1) * st.period_ns)
                    out.push_back("Eq.3 violation: " + detail::frame_name(st.id, j) + " on " +
                                  p.link_name(li));
                if (f.queue < 0 || f.queue >= ln.ts_queues)
                    out.push_back("Eq.8 violation: " + detail::frame_name(st.id, j) + " on " +
                                  p.link_name(li));
            }
            for (std::size_t pos = 0; pos + 1 < st.route.size(); ++pos) {
                const int up = st.route[pos];
                const int dn = st.route[pos + 1];
                const Link& upl = p.links[static_cast<std::size_t>(up)];
                const Nanos ready =
                    tx_ns(slot_of(st.id, j, up)) + dur_ns(st.id, up) + upl.max_delay_ns + delta;
                if (tx_ns(slot_of(st.id, j, dn)) < ready)
                    out.push_back("Eq.5 violation: " + detail::frame_name(st.id, j) + " " +
                                  p.link_name(up) + "->" + p.link_name(dn));
            }
            const int src = st.route.front();
            const int dst = st.route.back();
            const Nanos end = tx_ns(slot_of(st.id, j, dst)) + dur_ns(st.id, dst) + delta;
            if (end > tx_ns(slot_of(st.id, j, src)) + st.deadline_ns)
                out.push_back("Eq.6 violation: " + detail::frame_name(st.id, j));
        }
    }

    // Eq.4 contention: transmission intervals on one link must be pairwise
    // disjoint across the whole cycle (same-stream pairs included).
    for (std::size_t li = 0; li < p.links.size(); ++li) {
        struct Iv {
            Nanos start, end;
            int stream;
            std::int64_t frame;
        };
        std::vector<Iv> ivs;
        for (const auto& st : p.streams) {
            bool uses = false;
            for (int l : st.route) uses = uses || l == static_cast<int>(li);
            if (!uses) continue;
            const Nanos dur = dur_ns(st.id, static_cast<int>(li));
            for (std::int64_t j = 0; j < T / st.period_ns; ++j) {
                const Nanos start = tx_ns(slot_of(st.id, j, static_cast<int>(li)));
                ivs.push_back({start, start + dur, st.id, j});
            }
        }
        std::sort(ivs.begin(), ivs.end(), [](const Iv& a, const Iv& b) {
            return a.start != b.start ? a.start < b.start
                                      : std::tie(a.stream, a.frame) < std::tie(b.stream, b.frame);
        });
        for (std::size_t k = 0; k + 1 < ivs.size(); ++k)
            if (ivs[k].end > ivs[k + 1].start)
                out.push_back("Eq.4 violation: " + detail::frame_name(ivs[k].stream, ivs[k].frame) +
                              " vs " + detail::frame_name(ivs[k + 1].stream, ivs[k + 1].frame) +
                              " on " + p.link_name(static_cast<int>(li)));
    }

    // Eq.7 frame isolation over every frame pair sharing a link: one frame
    // must leave the shared link before the other can possibly arrive at it
    // (earliest arrival = upstream tx + min delay, less the sync precision),
    // unless the two use different queues. The disjunct referencing a stream
    // with no upstream link is dropped; pairs where both streams are sourced
    // at the link head carry no isolation requirement.
    for (std::size_t li = 0; li < p.links.size(); ++li) {
        struct User {
            int stream;
            int pos;
        };
        std::vector<User> users;
        for (const auto& st : p.streams)
            for (std::size_t pos = 0; pos < st.route.size(); ++pos)
                if (st.route[pos] == static_cast<int>(li))
                    users.push_back({st.id, static_cast<int>(pos)});
        for (std::size_t a = 0; a < users.size(); ++a) {
            for (std::size_t b = a + 1; b < users.size(); ++b) {
                const bool a_sourced = users[a].pos == 0;
                const bool b_sourced = users[b].pos == 0;
                if (a_sourced && b_sourced) continue;
                const Stream& sa = p.streams[static_cast<std::size_t>(users[a].stream)];
                const Stream& sb = p.streams[static_cast<std::size_t>(users[b].stream)];
                const int up_a = a_sourced ? -1 : sa.route[static_cast<std::size_t>(users[a].pos) - 1];
                const int up_b = b_sourced ? -1 : sb.route[static_cast<std::size_t>(users[b].pos) - 1];
                for (std::int64_t m = 0; m < T / sa.period_ns; ++m) {
                    const FrameSlot& fa_dn = slot_of(sa.id, m, static_cast<int>(li));
                    const Nanos phi_a_dn = tx_ns(fa_dn);
                    const Nanos phi_a_up = a_sourced ? 0 : tx_ns(slot_of(sa.id, m, up_a));
                    for (std::int64_t n = 0; n < T / sb.period_ns; ++n) {
                        const FrameSlot& fb_dn = slot_of(sb.id, n, static_cast<int>(li));
                        if (fa_dn.queue != fb_dn.queue) continue;
                        const Nanos phi_b_dn = tx_ns(fb_dn);
                        const Nanos phi_b_up = b_sourced ? 0 : tx_ns(slot_of(sb.id, n, up_b));
                        const bool d1 =
                            !a_sourced &&
                            phi_b_dn + delta <=
                                phi_a_up + p.links[static_cast<std::size_t>(up_a)].min_delay_ns;
                        const bool d2 =
                            !b_sourced &&
                            phi_a_dn + delta <=
                                phi_b_up + p.links[static_cast<std::size_t>(up_b)].min_delay_ns;
                        if (!d1 && !d2)
                            out.push_back("Eq.7 violation: " + detail::frame_name(sa.id, m) +
                                          " vs " + detail::frame_name(sb.id, n) + " on " +
                                          p.link_name(static_cast<int>(li)));
                    }
                }
            }
        }
    }

    if (mode == PlanMode::foodog) {
        for (const auto& st : p.streams) {
            const std::int64_t frames = T / st.period_ns;
            for (int li : st.route) {
                const FrameSlot& first = slot_of(st.id, 0, li);
                bool queue_bad = false, period_bad = false;
                for (std::int64_t j = 1; j < frames; ++j) {
                    const FrameSlot& f = slot_of(st.id, j, li);
                    queue_bad = queue_bad || f.queue != first.queue;
                    period_bad = period_bad || tx_ns(f) != tx_ns(first) + j * st.period_ns;
                }
                if (queue_bad)
                    out.push_back("same-queue violation: " + stream_name(st.id) + " on " +
                                  p.link_name(li));
                if (period_bad)
                    out.push_back("periodicity violation: " + stream_name(st.id) + " on " +
                                  p.link_name(li));
            }
        }
    }
    return out;
}

}  // namespace foodog
