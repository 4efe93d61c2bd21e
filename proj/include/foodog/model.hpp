#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace foodog {

// All absolute times and durations are integer nanoseconds on the global
// planned timeline. Solver variables are integer ticks of the owning link's
// planning granularity; tick * granularity_ns converts back to nanoseconds.
using Nanos = std::int64_t;
using Ticks = std::int64_t;

enum class VertexKind { tsn_switch, end_system };

struct Vertex {
    std::string id;
    VertexKind kind = VertexKind::tsn_switch;
};

/// Directed link (a,b) with the per-link planning parameters.
struct Link {
    std::string from;
    std::string to;
    std::int64_t bandwidth_bps = 0;
    int ts_queues = 0;           // transmission queues usable by TS streams
    Nanos min_delay_ns = 0;
    Nanos max_delay_ns = 0;
    Nanos granularity_ns = 0;    // planning tick
};

/// Periodic time-sensitive stream. Route is an ordered list of link indices
/// forming a simple path from the stream's source to its sink.
struct Stream {
    int id = 0;
    std::vector<int> route;
    std::int64_t size_bytes = 0;
    Nanos period_ns = 0;
    Nanos deadline_ns = 0;       // max end-to-end delay
    Nanos jitter_ns = 0;         // carried but not enforced by the planner
};

struct Problem {
    std::vector<Vertex> vertices;
    std::vector<Link> links;
    std::vector<Stream> streams;
    Nanos sync_precision_ns = 0;

    int link_index(const std::string& from, const std::string& to) const {
        for (std::size_t i = 0; i < links.size(); ++i)
            if (links[i].from == from && links[i].to == to) return static_cast<int>(i);
        return -1;
    }
    std::string link_name(int idx) const {
        if (idx < 0 || idx >= static_cast<int>(links.size())) return "(?)";
        return "(" + links[static_cast<std::size_t>(idx)].from + "," +
               links[static_cast<std::size_t>(idx)].to + ")";
    }
};

inline std::string stream_name(int id) { return "f" + std::to_string(id); }

inline std::int64_t floor_mod(std::int64_t x, std::int64_t m) {
    std::int64_t r = x % m;
    return r < 0 ? r + m : r;
}

/// Wire time of one frame, rounded up to the next nanosecond.
inline Nanos tx_duration_ns(std::int64_t size_bytes, std::int64_t bandwidth_bps) {
    if (bandwidth_bps <= 0) throw std::invalid_argument("bandwidth must be positive");
    const __int128 bits_ns = static_cast<__int128>(size_bytes) * 8 * 1000000000;
    return static_cast<Nanos>((bits_ns + bandwidth_bps - 1) / bandwidth_bps);
}

/// One solved transmission: frame `frame_index` of `stream` leaves on `link`
/// at tick `tx_time` from queue `queue`.
struct FrameSlot {
    int stream = 0;
    std::int64_t frame_index = 0;
    int link = 0;
    Ticks tx_time = 0;
    int queue = 0;
};

struct Schedule {
    std::vector<FrameSlot> slots;
};

/// Hash-indexed view of a schedule for (stream, frame, link) lookups.
class ScheduleIndex {
public:
    explicit ScheduleIndex(const Schedule& s) {
        map_.reserve(s.slots.size());
        for (const auto& slot : s.slots) map_.emplace(key(slot.stream, slot.frame_index, slot.link), &slot);
    }
    const FrameSlot* find(int stream, std::int64_t frame, int link) const {
        auto it = map_.find(key(stream, frame, link));
        return it == map_.end() ? nullptr : it->second;
    }

private:
    static std::uint64_t key(int stream, std::int64_t frame, int link) {
        return (static_cast<std::uint64_t>(stream) << 44) ^
               (static_cast<std::uint64_t>(frame) << 12) ^
               static_cast<std::uint64_t>(link);
    }
    std::unordered_map<std::uint64_t, const FrameSlot*> map_;
};

/// Least common multiple of all stream periods (the network cycle period T).
inline Nanos network_cycle_period(const std::vector<Stream>& streams) {
    if (streams.empty()) throw std::invalid_argument("no streams");
    Nanos acc = 1;
    for (const auto& s : streams) {
        if (s.period_ns <= 0) throw std::invalid_argument("period not positive: " + stream_name(s.id));
        const Nanos g = std::gcd(acc, s.period_ns);
        const __int128 wide = static_cast<__int128>(acc / g) * s.period_ns;
        if (wide > static_cast<__int128>(INT64_MAX))
            throw std::overflow_error("network cycle period overflows int64 nanoseconds");
        acc = static_cast<Nanos>(wide);
    }
    return acc;
}

/// Checks every structural invariant of a Problem. Violations are data, not
/// failures: each entry names the offending entity. Empty result == valid.
inline std::vector<std::string> validate_problem(const Problem& p) {
    std::vector<std::string> out;
    std::unordered_map<std::string, VertexKind> vertex_by_id;
    for (const auto& v : p.vertices) {
        if (!vertex_by_id.emplace(v.id, v.kind).second)
            out.push_back("duplicate vertex id: " + v.id);
    }
    std::unordered_set<std::string> link_keys;
    for (std::size_t i = 0; i < p.links.size(); ++i) {
        const Link& l = p.links[i];
        const std::string name = p.link_name(static_cast<int>(i));
        if (!vertex_by_id.count(l.from) || !vertex_by_id.count(l.to))
            out.push_back("link endpoint unknown: " + name);
        if (!link_keys.insert(l.from + "\n" + l.to).second)
            out.push_back("duplicate link: " + name);
        if (l.min_delay_ns > l.max_delay_ns) out.push_back("delay bounds inverted: " + name);
        if (l.min_delay_ns < 0) out.push_back("negative delay: " + name);
        if (l.bandwidth_bps <= 0) out.push_back("bandwidth not positive: " + name);
        if (l.granularity_ns <= 0) out.push_back("granularity not positive: " + name);
        if (l.ts_queues < 1) out.push_back("no ts queues: " + name);
    }

    std::vector<int> seen_ids;
    for (const auto& s : p.streams) {
        const std::string name = stream_name(s.id);
        seen_ids.push_back(s.id);
        if (s.period_ns <= 0) out.push_back("period not positive: " + name);
        if (s.size_bytes <= 0) out.push_back("size not positive: " + name);
        if (s.route.empty()) {
            out.push_back("route empty: " + name);
            continue;
        }
        bool refs_ok = true;
        for (int li : s.route)
            if (li < 0 || li >= static_cast<int>(p.links.size())) {
                out.push_back("route references unknown link: " + name);
                refs_ok = false;
                break;
            }
        if (!refs_ok) continue;
        std::unordered_set<std::string> visited;
        visited.insert(p.links[static_cast<std::size_t>(s.route.front())].from);
        for (std::size_t h = 0; h < s.route.size(); ++h) {
            const Link& l = p.links[static_cast<std::size_t>(s.route[h])];
            if (h + 1 < s.route.size() &&
                l.to != p.links[static_cast<std::size_t>(s.route[h + 1])].from) {
                out.push_back("route not connected: " + name);
                break;
            }
            if (!visited.insert(l.to).second) {
                out.push_back("route not simple: " + name);
                break;
            }
        }
        if (s.period_ns > 0 && s.size_bytes > 0) {
            for (int li : s.route) {
                const Link& l = p.links[static_cast<std::size_t>(li)];
                if (l.bandwidth_bps > 0 && tx_duration_ns(s.size_bytes, l.bandwidth_bps) > s.period_ns)
                    out.push_back("frame does not fit period: " + name + " on " + p.link_name(li));
            }
        }
    }
    std::sort(seen_ids.begin(), seen_ids.end());
    for (std::size_t i = 0; i < seen_ids.size(); ++i)
        if (seen_ids[i] != static_cast<int>(i)) {
            out.push_back("stream ids not dense 0..N-1");
            break;
        }
    if (p.sync_precision_ns < 0) out.push_back("sync precision negative");
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

}  // namespace foodog
