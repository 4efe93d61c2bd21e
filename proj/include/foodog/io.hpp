#pragma once

#include <cstdio>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "foodog/gcl.hpp"
#include "foodog/memmodel.hpp"
#include "foodog/model.hpp"
#include "foodog/sim.hpp"
#include "foodog/solver.hpp"

namespace foodog {

struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Everything a scenario file describes: the planning problem plus the
/// simulation options that ride along with it.
struct Scenario {
    Problem problem;
    std::vector<AnomalySpec> anomalies;
    std::unordered_map<std::string, Nanos> clock_offsets;
};

namespace detail {

inline void position_of(const std::string& text, std::size_t byte, std::size_t* line,
                        std::size_t* column) {
    *line = 1;
    *column = 1;
    for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++*line;
            *column = 1;
        } else {
            ++*column;
        }
    }
}

inline nlohmann::json parse_json(const std::string& text) {
    try {
        return nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        std::size_t line = 0, column = 0;
        position_of(text, e.byte > 0 ? e.byte - 1 : 0, &line, &column);
        throw ParseError("line " + std::to_string(line) + " column " + std::to_string(column) +
                         ": " + e.what());
    }
}

inline void require_keys(const nlohmann::json& j, const std::vector<std::string>& required,
                         const std::vector<std::string>& optional, const std::string& where) {
    if (!j.is_object()) throw ParseError(where + ": expected an object");
    for (const auto& k : required)
        if (!j.contains(k)) throw ParseError(where + ": missing key '" + k + "'");
    for (const auto& [k, v] : j.items()) {
        bool known = false;
        for (const auto& r : required) known = known || r == k;
        for (const auto& o : optional) known = known || o == k;
        if (!known) throw ParseError(where + ": unknown key '" + k + "'");
    }
}

inline GateState state_of(const std::string& s, const std::string& where) {
    if (s == "open") return GateState::open;
    if (s == "closed") return GateState::closed;
    throw ParseError(where + ": bad gate state '" + s + "'");
}

inline const char* state_name(GateState s) { return s == GateState::open ? "open" : "closed"; }

inline int resolve_link(const Problem& p, const nlohmann::json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 2) throw ParseError(where + ": link must be [from, to]");
    const int li = p.link_index(j[0].get<std::string>(), j[1].get<std::string>());
    if (li < 0)
        throw ParseError(where + ": unknown link (" + j[0].get<std::string>() + "," +
                         j[1].get<std::string>() + ")");
    return li;
}

inline nlohmann::json link_json(const Problem& p, int li) {
    const Link& l = p.links[static_cast<std::size_t>(li)];
    return nlohmann::json::array({l.from, l.to});
}

}  // namespace detail

inline Scenario parse_scenario(const std::string& text) {
    using nlohmann::json;
    const json j = detail::parse_json(text);
    detail::require_keys(j, {"vertices", "links", "streams", "sync_precision_ns"},
                         {"anomalies", "clock_offsets"}, "scenario");
    Scenario sc;
    for (const auto& v : j.at("vertices")) {
        detail::require_keys(v, {"id", "kind"}, {}, "vertex");
        const std::string kind = v.at("kind").get<std::string>();
        if (kind != "switch" && kind != "end_system")
            throw ParseError("vertex " + v.at("id").get<std::string>() + ": bad kind '" + kind + "'");
        sc.problem.vertices.push_back(
            {v.at("id").get<std::string>(),
             kind == "switch" ? VertexKind::tsn_switch : VertexKind::end_system});
    }
    for (const auto& l : j.at("links")) {
        detail::require_keys(l,
                             {"from", "to", "bandwidth_bps", "ts_queues", "min_delay_ns",
                              "max_delay_ns", "granularity_ns"},
                             {}, "link");
        Link ln;
        ln.from = l.at("from").get<std::string>();
        ln.to = l.at("to").get<std::string>();
        ln.bandwidth_bps = l.at("bandwidth_bps").get<std::int64_t>();
        ln.ts_queues = l.at("ts_queues").get<int>();
        ln.min_delay_ns = l.at("min_delay_ns").get<Nanos>();
        ln.max_delay_ns = l.at("max_delay_ns").get<Nanos>();
        ln.granularity_ns = l.at("granularity_ns").get<Nanos>();
        sc.problem.links.push_back(ln);
    }
    for (const auto& s : j.at("streams")) {
        detail::require_keys(
            s, {"id", "route", "size_bytes", "period_ns", "deadline_ns", "jitter_ns"}, {},
            "stream");
        Stream st;
        st.id = s.at("id").get<int>();
        st.size_bytes = s.at("size_bytes").get<std::int64_t>();
        st.period_ns = s.at("period_ns").get<Nanos>();
        st.deadline_ns = s.at("deadline_ns").get<Nanos>();
        st.jitter_ns = s.at("jitter_ns").get<Nanos>();
        const auto& route = s.at("route");
        if (!route.is_array() || route.size() < 2)
            throw ParseError("stream " + std::to_string(st.id) + ": route needs >= 2 vertices");
        for (std::size_t i = 0; i + 1 < route.size(); ++i) {
            const int li = sc.problem.link_index(route[i].get<std::string>(),
                                                 route[i + 1].get<std::string>());
            if (li < 0)
                throw ParseError("stream " + std::to_string(st.id) + ": no link " +
                                 route[i].get<std::string>() + " -> " +
                                 route[i + 1].get<std::string>());
            st.route.push_back(li);
        }
        sc.problem.streams.push_back(std::move(st));
    }
    sc.problem.sync_precision_ns = j.at("sync_precision_ns").get<Nanos>();
    if (j.contains("anomalies")) {
        for (const auto& a : j.at("anomalies")) {
            detail::require_keys(a, {"stream", "start_ns", "shift_ns"}, {}, "anomaly");
            sc.anomalies.push_back({a.at("stream").get<int>(), a.at("start_ns").get<Nanos>(),
                                    a.at("shift_ns").get<Nanos>()});
        }
    }
    if (j.contains("clock_offsets")) {
        for (const auto& [vertex, off] : j.at("clock_offsets").items())
            sc.clock_offsets[vertex] = off.get<Nanos>();
    }
    return sc;
}

inline std::string emit_scenario(const Scenario& sc) {
    using nlohmann::json;
    json j;
    j["vertices"] = json::array();
    for (const auto& v : sc.problem.vertices)
        j["vertices"].push_back(
            {{"id", v.id}, {"kind", v.kind == VertexKind::tsn_switch ? "switch" : "end_system"}});
    j["links"] = json::array();
    for (const auto& l : sc.problem.links)
        j["links"].push_back({{"from", l.from},
                              {"to", l.to},
                              {"bandwidth_bps", l.bandwidth_bps},
                              {"ts_queues", l.ts_queues},
                              {"min_delay_ns", l.min_delay_ns},
                              {"max_delay_ns", l.max_delay_ns},
                              {"granularity_ns", l.granularity_ns}});
    j["streams"] = json::array();
    for (const auto& s : sc.problem.streams) {
        json route = json::array();
        route.push_back(sc.problem.links[static_cast<std::size_t>(s.route.front())].from);
        for (int li : s.route)
            route.push_back(sc.problem.links[static_cast<std::size_t>(li)].to);
        j["streams"].push_back({{"id", s.id},
                                {"route", route},
                                {"size_bytes", s.size_bytes},
                                {"period_ns", s.period_ns},
                                {"deadline_ns", s.deadline_ns},
                                {"jitter_ns", s.jitter_ns}});
    }
    j["sync_precision_ns"] = sc.problem.sync_precision_ns;
    if (!sc.anomalies.empty()) {
        j["anomalies"] = nlohmann::json::array();
        for (const auto& a : sc.anomalies)
            j["anomalies"].push_back(
                {{"stream", a.stream}, {"start_ns", a.start}, {"shift_ns", a.shift}});
    }
    if (!sc.clock_offsets.empty()) {
        std::vector<std::pair<std::string, Nanos>> sorted(sc.clock_offsets.begin(),
                                                          sc.clock_offsets.end());
        std::sort(sorted.begin(), sorted.end());
        for (const auto& [v, off] : sorted) j["clock_offsets"][v] = off;
    }
    return j.dump(2) + "\n";
}

inline std::string emit_schedule(const Problem& p, const Schedule& s, PlanMode mode) {
    using nlohmann::json;
    json j;
    j["mode"] = mode == PlanMode::foodog ? "foodog" : "comp";
    j["slots"] = json::array();
    std::vector<FrameSlot> slots = s.slots;
    std::sort(slots.begin(), slots.end(), [](const FrameSlot& a, const FrameSlot& b) {
        return std::tie(a.stream, a.frame_index, a.link) < std::tie(b.stream, b.frame_index, b.link);
    });
    for (const auto& f : slots)
        j["slots"].push_back({{"stream", f.stream},
                              {"frame", f.frame_index},
                              {"link", detail::link_json(p, f.link)},
                              {"tx_tick", f.tx_time},
                              {"queue", f.queue}});
    return j.dump(2) + "\n";
}

inline std::pair<Schedule, PlanMode> parse_schedule(const std::string& text, const Problem& p) {
    const nlohmann::json j = detail::parse_json(text);
    detail::require_keys(j, {"mode", "slots"}, {}, "schedule");
    const std::string mode = j.at("mode").get<std::string>();
    if (mode != "comp" && mode != "foodog") throw ParseError("schedule: bad mode '" + mode + "'");
    Schedule s;
    for (const auto& f : j.at("slots")) {
        detail::require_keys(f, {"stream", "frame", "link", "tx_tick", "queue"}, {}, "slot");
        s.slots.push_back({f.at("stream").get<int>(), f.at("frame").get<std::int64_t>(),
                           detail::resolve_link(p, f.at("link"), "slot"),
                           f.at("tx_tick").get<Ticks>(), f.at("queue").get<int>()});
    }
    return {std::move(s), mode == "foodog" ? PlanMode::foodog : PlanMode::comp};
}

inline std::string emit_gcl(const Problem& p, const GclSet& set) {
    using nlohmann::json;
    json j;
    j["cycle_ns"] = set.cycle_ns;
    j["widths"] = {{"w_interval", set.widths.w_interval},
                   {"w_state", set.widths.w_state},
                   {"w_que", set.widths.w_que},
                   {"w_time", set.widths.w_time},
                   {"w_gate", set.widths.w_gate}};
    j["talkers"] = json::array();
    for (const auto& t : set.talkers)
        j["talkers"].push_back({{"stream", t.stream},
                                {"link", detail::link_json(p, t.link)},
                                {"first_tx_ns", t.first_tx_ns}});
    j["ports"] = json::array();
    for (const auto& port : set.ports) {
        json pj;
        pj["link"] = detail::link_json(p, port.link);
        pj["tas"] = json::array();
        for (const auto& e : port.tas)
            pj["tas"].push_back({{"interval_ns", e.time_interval},
                                 {"state", detail::state_name(e.gate_state)},
                                 {"queue", e.queue}});
        pj["std_psfp"] = json::array();
        for (const auto& g : port.std_psfp) {
            json gj;
            gj["stream"] = g.stream;
            gj["entries"] = json::array();
            for (const auto& e : g.entries)
                gj["entries"].push_back({{"state", detail::state_name(e.gate_state)},
                                         {"interval_ns", e.time_interval},
                                         {"queue", e.queue}});
            pj["std_psfp"].push_back(std::move(gj));
        }
        pj["pgcls"] = json::array();
        for (const auto& g : port.foodog.pgcls) {
            json gj;
            gj["pgcl_cycle_ns"] = g.pgcl_cycle;
            gj["entries"] = json::array();
            for (const auto& e : g.entries)
                gj["entries"].push_back({{"update_time_ns", e.update_time},
                                         {"gate", e.gate_id},
                                         {"state", detail::state_name(e.gate_state)},
                                         {"queue", e.queue}});
            pj["pgcls"].push_back(std::move(gj));
        }
        pj["sgcl"] = json::array();
        for (const auto& e : port.foodog.sgcl.entries)
            pj["sgcl"].push_back(
                {{"state", detail::state_name(e.gate_state)}, {"queue", e.queue}});
        j["ports"].push_back(std::move(pj));
    }
    return j.dump(2) + "\n";
}

inline GclSet parse_gcl(const std::string& text, const Problem& p) {
    const nlohmann::json j = detail::parse_json(text);
    detail::require_keys(j, {"cycle_ns", "widths", "talkers", "ports"}, {}, "gcl");
    GclSet set;
    set.cycle_ns = j.at("cycle_ns").get<Nanos>();
    const auto& w = j.at("widths");
    detail::require_keys(w, {"w_interval", "w_state", "w_que", "w_time", "w_gate"}, {}, "widths");
    set.widths.w_interval = w.at("w_interval").get<int>();
    set.widths.w_state = w.at("w_state").get<int>();
    set.widths.w_que = w.at("w_que").get<int>();
    set.widths.w_time = w.at("w_time").get<int>();
    set.widths.w_gate = w.at("w_gate").get<int>();
    for (const auto& t : j.at("talkers")) {
        detail::require_keys(t, {"stream", "link", "first_tx_ns"}, {}, "talker");
        set.talkers.push_back({t.at("stream").get<int>(),
                               detail::resolve_link(p, t.at("link"), "talker"),
                               t.at("first_tx_ns").get<Nanos>()});
    }
    set.ports.resize(p.links.size());
    for (auto& port : set.ports) port.link = -1;
    for (const auto& pj : j.at("ports")) {
        detail::require_keys(pj, {"link", "tas", "std_psfp", "pgcls", "sgcl"}, {}, "port");
        const int li = detail::resolve_link(p, pj.at("link"), "port");
        PortGcls& port = set.ports[static_cast<std::size_t>(li)];
        if (port.link == li) throw ParseError("gcl: duplicate port " + p.link_name(li));
        port.link = li;
        for (const auto& e : pj.at("tas")) {
            detail::require_keys(e, {"interval_ns", "state", "queue"}, {}, "tas entry");
            port.tas.push_back({e.at("interval_ns").get<Nanos>(),
                                detail::state_of(e.at("state").get<std::string>(), "tas entry"),
                                e.at("queue").get<int>()});
        }
        for (const auto& gj : pj.at("std_psfp")) {
            detail::require_keys(gj, {"stream", "entries"}, {}, "std gcl");
            StdPsfpGcl g;
            g.stream = gj.at("stream").get<int>();
            for (const auto& e : gj.at("entries")) {
                detail::require_keys(e, {"state", "interval_ns", "queue"}, {}, "std entry");
                g.entries.push_back(
                    {detail::state_of(e.at("state").get<std::string>(), "std entry"),
                     e.at("interval_ns").get<Nanos>(), e.at("queue").get<int>()});
            }
            port.std_psfp.push_back(std::move(g));
        }
        for (const auto& gj : pj.at("pgcls")) {
            detail::require_keys(gj, {"pgcl_cycle_ns", "entries"}, {}, "pgcl");
            PeriodWiseGcl g;
            g.pgcl_cycle = gj.at("pgcl_cycle_ns").get<Nanos>();
            for (const auto& e : gj.at("entries")) {
                detail::require_keys(e, {"update_time_ns", "gate", "state", "queue"}, {},
                                     "pgcl entry");
                g.entries.push_back(
                    {e.at("update_time_ns").get<Nanos>(), e.at("gate").get<int>(),
                     detail::state_of(e.at("state").get<std::string>(), "pgcl entry"),
                     e.at("queue").get<int>()});
            }
            port.foodog.pgcls.push_back(std::move(g));
        }
        for (const auto& e : pj.at("sgcl")) {
            detail::require_keys(e, {"state", "queue"}, {}, "sgcl entry");
            port.foodog.sgcl.entries.push_back(
                {detail::state_of(e.at("state").get<std::string>(), "sgcl entry"),
                 e.at("queue").get<int>()});
        }
    }
    for (const auto& port : set.ports)
        if (port.link < 0) throw ParseError("gcl: missing port configuration for a link");
    return set;
}

inline std::string trace_csv(const SimTrace& trace) {
    std::string out = "time_ns,kind,stream,frame_index,vertex\n";
    for (const auto& e : trace.events)
        out += std::to_string(e.time) + "," + to_string(e.kind) + "," + std::to_string(e.stream) +
               "," + std::to_string(e.frame_index) + "," + e.vertex + "\n";
    return out;
}

inline std::string metrics_csv(const std::vector<StreamMetrics>& rows) {
    std::string out = "stream,delivered,drops,min_delay_ns,max_delay_ns,jitter_ns\n";
    for (const auto& m : rows) {
        out += std::to_string(m.stream) + "," + std::to_string(m.delays.size()) + "," +
               std::to_string(m.drops) + ",";
        if (m.delays.empty()) {
            out += ",,\n";
        } else {
            const auto [lo, hi] = std::minmax_element(m.delays.begin(), m.delays.end());
            out += std::to_string(*lo) + "," + std::to_string(*hi) + "," +
                   std::to_string(*m.jitter) + "\n";
        }
    }
    return out;
}

inline std::string memgrid_csv(const std::vector<MemReport>& rows) {
    std::string out = "ports,streams,proportion_small,std_bits,foodog_bits,reduction\n";
    char buf[64];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2f", r.proportion_small);
        out += std::to_string(r.ports) + "," + std::to_string(r.streams) + "," + buf + "," +
               std::to_string(r.std_bits) + "," + std::to_string(r.foodog_bits) + ",";
        std::snprintf(buf, sizeof buf, "%.6f", r.reduction);
        out += std::string(buf) + "\n";
    }
    return out;
}

}  // namespace foodog
