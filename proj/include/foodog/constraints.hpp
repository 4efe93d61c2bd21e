#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "foodog/model.hpp"

namespace foodog {

enum class PlanMode { comp, foodog };

/// True iff x + s*m lands in the open interval (lo, hi) for some integer s.
/// m == 0 means no wrapping: plain containment test.
inline bool hits_zone(std::int64_t x, std::int64_t lo, std::int64_t hi, std::int64_t m) {
    if (hi <= lo) return false;
    if (m <= 0) return x > lo && x < hi;
    if (hi - lo >= m) return true;
    const std::int64_t shifted = floor_mod(x - lo, m);
    return shifted > 0 && shifted < hi - lo;
}

/// One (omega, rho) pair: the transmission tick and queue of one frame on one
/// link. In foodog mode only frame 0 exists; later frames are derived points.
struct VarInfo {
    int stream = 0;
    std::int64_t frame = 0;
    int link = 0;
    int route_pos = 0;
    Ticks lb = 0, ub = 0;   // tick domain from the period window and fit
    int queues = 0;         // rho domain [0, queues)
    Nanos tick = 1;         // link granularity
    Nanos period = 0;
    Nanos dur = 0;          // wire time of this stream's frame on this link
};

/// Period-window instance: lo <= omega*t and omega*t + dur <= hi.
struct CnPeriod {
    int var = 0;
    Nanos lo = 0, hi = 0;
};

/// Contention-free instance family for one ordered stream pair on one link.
/// comp: frames are distinct variables (stride walks them, mod_l == 0).
/// foodog: one variable per stream, derived points k*period, wrapped mod_l.
struct CnContention {
    int link = 0;
    int stream_a = 0, stream_b = 0;
    int base_a = 0, stride_a = 0;
    int base_b = 0, stride_b = 0;
    std::int64_t frames_a = 1, frames_b = 1;
    Nanos period_a = 0, period_b = 0;
    Nanos dur_a = 0, dur_b = 0;
    Nanos mod_l = 0;
    std::int64_t expansion = 1;    // number of (k,l) instances this row stands for
};

/// omega_next * t_next >= omega_prev * t_prev + lag.
struct CnSequence {
    int var_prev = 0, var_next = 0;
    Nanos lag = 0;      // dur_prev + max_delay_prev + delta
};

/// omega_dst * t_dst <= omega_src * t_src + budget.
struct CnDeadline {
    int var_src = 0, var_dst = 0;
    Nanos budget = 0;   // deadline - dur_dst - delta
};

/// Frame-isolation family for one stream pair on one shared link (a,b).
/// Disjunction per (k,l): B leaves before A can possibly arrive, or A leaves
/// before B can possibly arrive, or the two use different queues. "Can
/// possibly arrive" is the earliest arrival (upstream tx + min delay) less
/// the sync precision, so queue order is certain under any delay draw. A
/// disjunct referencing a stream sourced at `a` (no upstream link) is
/// dropped; if both are sourced the instance is never built.
struct CnIsolation {
    int link = 0;
    int stream_a = 0, stream_b = 0;
    int base_a_dn = 0, stride_a = 0;
    int base_b_dn = 0, stride_b = 0;
    int base_a_up = -1;             // -1: stream A sourced at the link head
    int base_b_up = -1;
    std::int64_t frames_a = 1, frames_b = 1;
    Nanos period_a = 0, period_b = 0;
    Nanos c_a = 0;                  // min_delay of A's upstream link - delta
    Nanos c_b = 0;
    Nanos mod_l = 0;
    std::int64_t expansion = 1;
};

/// 0 <= rho < queues.
struct CnQueue {
    int var = 0;
    int queues = 0;
};

struct ConstraintStats {
    std::int64_t variables = 0;
    std::int64_t constraints = 0;
};

struct Assignment {
    Ticks w = 0;
    int q = 0;
};

struct ConstraintSet {
    PlanMode mode = PlanMode::comp;
    Problem problem;
    Nanos cycle_ns = 0;

    std::vector<VarInfo> vars;
    std::vector<CnPeriod> periods;
    std::vector<CnContention> contentions;
    std::vector<CnSequence> sequences;
    std::vector<CnDeadline> deadlines;
    std::vector<CnIsolation> isolations;
    std::vector<CnQueue> queue_limits;

    // var id = stream_var_base[i] + frame * hops(i) + route_pos
    std::vector<int> stream_var_base;

    std::int64_t frames_of(int stream) const {
        if (mode == PlanMode::foodog) return 1;
        return cycle_ns / problem.streams[static_cast<std::size_t>(stream)].period_ns;
    }
    int var_of(int stream, std::int64_t frame, int route_pos) const {
        const auto& st = problem.streams[static_cast<std::size_t>(stream)];
        return stream_var_base[static_cast<std::size_t>(stream)] +
               static_cast<int>(frame) * static_cast<int>(st.route.size()) + route_pos;
    }
    std::string var_name(int v, bool queue_var) const {
        const VarInfo& vi = vars[static_cast<std::size_t>(v)];
        return std::string(queue_var ? "q" : "w") + "[" + stream_name(vi.stream) + "," +
               std::to_string(vi.frame) + "," + problem.link_name(vi.link) + "]";
    }

    ConstraintStats stats() const {
        ConstraintStats s;
        s.variables = 2 * static_cast<std::int64_t>(vars.size());
        s.constraints = static_cast<std::int64_t>(periods.size()) +
                        static_cast<std::int64_t>(sequences.size()) +
                        static_cast<std::int64_t>(deadlines.size()) +
                        static_cast<std::int64_t>(queue_limits.size());
        for (const auto& c : contentions) s.constraints += c.expansion;
        for (const auto& c : isolations) s.constraints += c.expansion;
        return s;
    }
};

namespace detail {

inline Nanos ceil_div(Nanos a, Nanos b) { return (a + b - 1) / b; }

inline bool contention_pair_ok(const CnContention& c, const std::vector<Assignment>& asg,
                               const std::vector<VarInfo>& vars,
                               std::int64_t k, std::int64_t l) {
    const VarInfo& va = vars[static_cast<std::size_t>(c.base_a + k * c.stride_a)];
    const VarInfo& vb = vars[static_cast<std::size_t>(c.base_b + l * c.stride_b)];
    Nanos xa = asg[static_cast<std::size_t>(c.base_a + k * c.stride_a)].w * va.tick;
    Nanos xb = asg[static_cast<std::size_t>(c.base_b + l * c.stride_b)].w * vb.tick;
    if (c.mod_l > 0) {
        xa += k * c.period_a;
        xb += l * c.period_b;
    }
    return !hits_zone(xa - xb, -c.dur_a, c.dur_b, c.mod_l);
}

inline bool isolation_pair_ok(const CnIsolation& c, const std::vector<Assignment>& asg,
                              const std::vector<VarInfo>& vars,
                              std::int64_t k, std::int64_t l) {
    const int va_dn = c.base_a_dn + static_cast<int>(k) * c.stride_a;
    const int vb_dn = c.base_b_dn + static_cast<int>(l) * c.stride_b;
    const Nanos off_a = c.mod_l > 0 ? k * c.period_a : 0;
    const Nanos off_b = c.mod_l > 0 ? l * c.period_b : 0;
    if (asg[static_cast<std::size_t>(va_dn)].q != asg[static_cast<std::size_t>(vb_dn)].q)
        return true;
    const Nanos phi_a_dn =
        asg[static_cast<std::size_t>(va_dn)].w * vars[static_cast<std::size_t>(va_dn)].tick + off_a;
    const Nanos phi_b_dn =
        asg[static_cast<std::size_t>(vb_dn)].w * vars[static_cast<std::size_t>(vb_dn)].tick + off_b;
    if (c.base_a_up >= 0) {
        const int va_up = c.base_a_up + static_cast<int>(k) * c.stride_a;
        const Nanos phi_a_up = asg[static_cast<std::size_t>(va_up)].w *
                                   vars[static_cast<std::size_t>(va_up)].tick + off_a;
        if (phi_b_dn <= phi_a_up + c.c_a) return true;
    }
    if (c.base_b_up >= 0) {
        const int vb_up = c.base_b_up + static_cast<int>(l) * c.stride_b;
        const Nanos phi_b_up = asg[static_cast<std::size_t>(vb_up)].w *
                                   vars[static_cast<std::size_t>(vb_up)].tick + off_b;
        if (phi_a_dn <= phi_b_up + c.c_b) return true;
    }
    return false;
}

}  // namespace detail

/// Evaluates every instance in the set against a full assignment. Returns the
/// first violated instance as a description, or nullopt when all hold.
inline std::optional<std::string> first_violation(const ConstraintSet& cs,
                                                  const std::vector<Assignment>& asg) {
    for (const auto& c : cs.periods) {
        const VarInfo& v = cs.vars[static_cast<std::size_t>(c.var)];
        const Nanos t = asg[static_cast<std::size_t>(c.var)].w * v.tick;
        if (t < c.lo || t + v.dur > c.hi)
            return "period constraint: " + cs.var_name(c.var, false);
    }
    for (const auto& c : cs.queue_limits) {
        const int q = asg[static_cast<std::size_t>(c.var)].q;
        if (q < 0 || q >= c.queues) return "queue constraint: " + cs.var_name(c.var, true);
    }
    for (const auto& c : cs.sequences) {
        const Nanos prev = asg[static_cast<std::size_t>(c.var_prev)].w *
                           cs.vars[static_cast<std::size_t>(c.var_prev)].tick;
        const Nanos next = asg[static_cast<std::size_t>(c.var_next)].w *
                           cs.vars[static_cast<std::size_t>(c.var_next)].tick;
        if (next < prev + c.lag) return "sequence constraint: " + cs.var_name(c.var_next, false);
    }
    for (const auto& c : cs.deadlines) {
        const Nanos src = asg[static_cast<std::size_t>(c.var_src)].w *
                          cs.vars[static_cast<std::size_t>(c.var_src)].tick;
        const Nanos dst = asg[static_cast<std::size_t>(c.var_dst)].w *
                          cs.vars[static_cast<std::size_t>(c.var_dst)].tick;
        if (dst > src + c.budget) return "deadline constraint: " + cs.var_name(c.var_dst, false);
    }
    for (const auto& c : cs.contentions)
        for (std::int64_t k = 0; k < c.frames_a; ++k)
            for (std::int64_t l = 0; l < c.frames_b; ++l)
                if (!detail::contention_pair_ok(c, asg, cs.vars, k, l))
                    return "contention constraint: " + stream_name(c.stream_a) + " vs " +
                           stream_name(c.stream_b) + " on " + cs.problem.link_name(c.link);
    for (const auto& c : cs.isolations)
        for (std::int64_t k = 0; k < c.frames_a; ++k)
            for (std::int64_t l = 0; l < c.frames_b; ++l)
                if (!detail::isolation_pair_ok(c, asg, cs.vars, k, l))
                    return "isolation constraint: " + stream_name(c.stream_a) + " vs " +
                           stream_name(c.stream_b) + " on " + cs.problem.link_name(c.link);
    return std::nullopt;
}

namespace detail {

inline ConstraintSet build_constraints(const Problem& p, PlanMode mode) {
    {
        const auto violations = validate_problem(p);
        if (!violations.empty())
            throw std::invalid_argument("invalid problem: " + violations.front());
    }
    ConstraintSet cs;
    cs.mode = mode;
    cs.problem = p;
    cs.cycle_ns = network_cycle_period(p.streams);
    const Nanos delta = p.sync_precision_ns;
    const Nanos T = cs.cycle_ns;

    // Variables, period windows, queue ranges.
    cs.stream_var_base.resize(p.streams.size(), 0);
    for (const auto& st : p.streams) {
        cs.stream_var_base[static_cast<std::size_t>(st.id)] = static_cast<int>(cs.vars.size());
        const std::int64_t frames = mode == PlanMode::foodog ? 1 : T / st.period_ns;
        for (std::int64_t j = 0; j < frames; ++j) {
            for (std::size_t pos = 0; pos < st.route.size(); ++pos) {
                const Link& ln = p.links[static_cast<std::size_t>(st.route[pos])];
                if (mode == PlanMode::foodog && st.period_ns % ln.granularity_ns != 0)
                    throw std::invalid_argument("granularity does not divide period: " +
                                                stream_name(st.id) + " on " +
                                                p.link_name(st.route[pos]));
                VarInfo v;
                v.stream = st.id;
                v.frame = j;
                v.link = st.route[pos];
                v.route_pos = static_cast<int>(pos);
                v.tick = ln.granularity_ns;
                v.period = st.period_ns;
                v.dur = tx_duration_ns(st.size_bytes, ln.bandwidth_bps);
                const Nanos lo = j * st.period_ns;
                const Nanos hi = (j + 1) * st.period_ns;
                v.lb = ceil_div(lo, v.tick);
                v.ub = (hi - v.dur) / v.tick;   // fit: omega*t + dur <= hi
                v.queues = ln.ts_queues;
                const int id = static_cast<int>(cs.vars.size());
                cs.vars.push_back(v);
                cs.periods.push_back({id, lo, hi});
                cs.queue_limits.push_back({id, ln.ts_queues});
            }
        }
    }

    // Sequence and deadline per frame (foodog: only the first frame exists;
    // derived frames shift both sides equally).
    for (const auto& st : p.streams) {
        const std::int64_t frames = cs.frames_of(st.id);
        for (std::int64_t j = 0; j < frames; ++j) {
            for (std::size_t pos = 0; pos + 1 < st.route.size(); ++pos) {
                const Link& up = p.links[static_cast<std::size_t>(st.route[pos])];
                const Nanos lag =
                    tx_duration_ns(st.size_bytes, up.bandwidth_bps) + up.max_delay_ns + delta;
                cs.sequences.push_back({cs.var_of(st.id, j, static_cast<int>(pos)),
                                        cs.var_of(st.id, j, static_cast<int>(pos) + 1), lag});
            }
            const Link& last = p.links[static_cast<std::size_t>(st.route.back())];
            const Nanos budget =
                st.deadline_ns - tx_duration_ns(st.size_bytes, last.bandwidth_bps) - delta;
            cs.deadlines.push_back({cs.var_of(st.id, j, 0),
                                    cs.var_of(st.id, j, static_cast<int>(st.route.size()) - 1),
                                    budget});
        }
    }

    // Contention-free and frame isolation per shared link.
    for (std::size_t li = 0; li < p.links.size(); ++li) {
        struct User { int stream; int pos; };
        std::vector<User> users;
        for (const auto& st : p.streams)
            for (std::size_t pos = 0; pos < st.route.size(); ++pos)
                if (st.route[pos] == static_cast<int>(li))
                    users.push_back({st.id, static_cast<int>(pos)});
        for (std::size_t a = 0; a < users.size(); ++a) {
            for (std::size_t b = a + 1; b < users.size(); ++b) {
                const Stream& sa = p.streams[static_cast<std::size_t>(users[a].stream)];
                const Stream& sb = p.streams[static_cast<std::size_t>(users[b].stream)];
                const Link& ln = p.links[li];
                const Nanos pair_lcm = std::lcm(sa.period_ns, sb.period_ns);

                CnContention con;
                con.link = static_cast<int>(li);
                con.stream_a = sa.id;
                con.stream_b = sb.id;
                // foodog walks derived points of one variable, not frame vars
                con.stride_a = mode == PlanMode::foodog ? 0 : static_cast<int>(sa.route.size());
                con.stride_b = mode == PlanMode::foodog ? 0 : static_cast<int>(sb.route.size());
                con.base_a = cs.var_of(sa.id, 0, users[a].pos);
                con.base_b = cs.var_of(sb.id, 0, users[b].pos);
                con.period_a = sa.period_ns;
                con.period_b = sb.period_ns;
                con.dur_a = tx_duration_ns(sa.size_bytes, ln.bandwidth_bps);
                con.dur_b = tx_duration_ns(sb.size_bytes, ln.bandwidth_bps);
                if (mode == PlanMode::foodog) {
                    con.mod_l = pair_lcm;
                    con.frames_a = pair_lcm / sa.period_ns;
                    con.frames_b = pair_lcm / sb.period_ns;
                } else {
                    con.frames_a = T / sa.period_ns;
                    con.frames_b = T / sb.period_ns;
                }
                con.expansion = con.frames_a * con.frames_b;
                cs.contentions.push_back(con);

                // Isolation needs at least one upstream link among the pair.
                const bool a_sourced = users[a].pos == 0;
                const bool b_sourced = users[b].pos == 0;
                if (a_sourced && b_sourced) continue;
                CnIsolation iso;
                iso.link = con.link;
                iso.stream_a = sa.id;
                iso.stream_b = sb.id;
                iso.stride_a = con.stride_a;
                iso.stride_b = con.stride_b;
                iso.base_a_dn = con.base_a;
                iso.base_b_dn = con.base_b;
                iso.period_a = sa.period_ns;
                iso.period_b = sb.period_ns;
                iso.frames_a = con.frames_a;
                iso.frames_b = con.frames_b;
                iso.mod_l = con.mod_l;
                iso.expansion = con.expansion;
                if (!a_sourced) {
                    iso.base_a_up = cs.var_of(sa.id, 0, users[a].pos - 1);
                    iso.c_a =
                        p.links[static_cast<std::size_t>(sa.route[users[a].pos - 1])].min_delay_ns -
                        delta;
                }
                if (!b_sourced) {
                    iso.base_b_up = cs.var_of(sb.id, 0, users[b].pos - 1);
                    iso.c_b =
                        p.links[static_cast<std::size_t>(sb.route[users[b].pos - 1])].min_delay_ns -
                        delta;
                }
                cs.isolations.push_back(iso);
            }
        }
    }
    return cs;
}

}  // namespace detail

/// Appendix-style constraint system: one (omega, rho) pair per frame per
/// route link, pairwise families expanded over the full network cycle period.
inline ConstraintSet build_constraints_comp(const Problem& p) {
    return detail::build_constraints(p, PlanMode::comp);
}

/// First-frame-only variant. Frames beyond the first are derived points
/// omega + j*period; pairwise families wrap modulo the pair's lcm.
inline ConstraintSet build_constraints_foodog(const Problem& p) {
    return detail::build_constraints(p, PlanMode::foodog);
}

inline ConstraintStats constraint_stats(const ConstraintSet& cs) { return cs.stats(); }

}  // namespace foodog
