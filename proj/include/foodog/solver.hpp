#pragma once

#include <algorithm>
#include <bit>
#include <chrono>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "foodog/constraints.hpp"

namespace foodog {

enum class SolveStatus { feasible, infeasible, timeout };

struct SolveOutcome {
    SolveStatus status = SolveStatus::infeasible;
    Schedule schedule;                       // present iff feasible
    std::chrono::nanoseconds elapsed{0};
    std::int64_t nodes = 0;                  // search nodes explored
};

namespace detail {

constexpr Ticks kNoHint = -1;     // advance one candidate at a time
constexpr Ticks kDeadHint = -2;   // advancing the blamed slot cannot help

// Fixed-capacity bit set over slot indices; conflict sets of the backjumping
// search.
class ConflictSet {
public:
    void reset(std::size_t bits) {
        words_.assign((bits + 63) / 64, 0);
    }
    void clear() { std::fill(words_.begin(), words_.end(), 0); }
    void add(int bit) {
        words_[static_cast<std::size_t>(bit) >> 6] |= std::uint64_t{1} << (bit & 63);
    }
    void remove(int bit) {
        words_[static_cast<std::size_t>(bit) >> 6] &= ~(std::uint64_t{1} << (bit & 63));
    }
    void merge(const ConflictSet& o) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= o.words_[i];
    }
    // Highest set bit strictly below `limit`, or -1.
    int highest_below(int limit) const {
        int word = std::min(static_cast<int>(words_.size()) - 1, (limit - 1) >> 6);
        for (; word >= 0; --word) {
            std::uint64_t w = words_[static_cast<std::size_t>(word)];
            if (word == (limit - 1) >> 6) {
                const int top = (limit - 1) & 63;
                if (top < 63) w &= (std::uint64_t{1} << (top + 1)) - 1;
            }
            if (w != 0) return word * 64 + 63 - std::countl_zero(w);
        }
        return -1;
    }

private:
    std::vector<std::uint64_t> words_;
};

// Search state for one slot: the candidate (omega, rho) currently assigned,
// the dynamic tick bounds, per-queue isolation ceilings against the assigned
// prefix, the jump hint left when the slot exhausts, and the conflict set of
// assigned slots that rejected candidates here.
struct SlotCursor {
    Ticks w = 0;
    int q = 0;
    Ticks dyn_lb = 0, dyn_ub = 0;
    std::vector<Nanos> queue_ub;     // d2 ceiling in ns per queue
    std::vector<char> queue_dead;    // queue blocked regardless of omega
    std::vector<Nanos> need_up;      // upstream ns flipping the queue's blockers
    Ticks hint = kNoHint;
    ConflictSet conf;
};

class BranchAndBound {
public:
    BranchAndBound(const ConstraintSet& cs, std::chrono::nanoseconds budget)
        : cs_(cs), budget_(budget), start_(std::chrono::steady_clock::now()) {
        const Problem& p = cs.problem;
        asg_.resize(cs.vars.size());
        cursors_.resize(cs.vars.size());
        for (auto& c : cursors_) c.conf.reset(cs.vars.size());
        on_link_.resize(p.links.size());
        up_max_delay_.resize(cs.vars.size(), -1);
        up_min_delay_.resize(cs.vars.size(), -1);
        up_var_.resize(cs.vars.size(), -1);
        min_lag_to_last_.resize(cs.vars.size(), 0);
        for (std::size_t v = 0; v < cs.vars.size(); ++v) {
            const VarInfo& vi = cs.vars[v];
            const Stream& st = p.streams[static_cast<std::size_t>(vi.stream)];
            if (vi.route_pos > 0) {
                const Link& up = p.links[static_cast<std::size_t>(st.route[
                    static_cast<std::size_t>(vi.route_pos) - 1])];
                up_max_delay_[v] = up.max_delay_ns;
                up_min_delay_[v] = up.min_delay_ns;
                up_var_[v] = static_cast<int>(v) - 1;   // route order is contiguous
            }
            Nanos lag = 0;
            for (std::size_t h = static_cast<std::size_t>(vi.route_pos);
                 h + 1 < st.route.size(); ++h) {
                const Link& ln = p.links[static_cast<std::size_t>(st.route[h])];
                lag += tx_duration_ns(st.size_bytes, ln.bandwidth_bps) + ln.max_delay_ns +
                       p.sync_precision_ns;
            }
            min_lag_to_last_[v] = lag;
        }
        // Assignment order: frames by release time, streams in id order within
        // a window, hops along the route. Failures then concern temporal
        // neighbors and backjumps stay local.
        order_.resize(cs.vars.size());
        for (std::size_t v = 0; v < cs.vars.size(); ++v) order_[v] = static_cast<int>(v);
        std::sort(order_.begin(), order_.end(), [&](int a, int b) {
            const VarInfo& va = cs.vars[static_cast<std::size_t>(a)];
            const VarInfo& vb = cs.vars[static_cast<std::size_t>(b)];
            const Nanos ra = va.frame * va.period;
            const Nanos rb = vb.frame * vb.period;
            return std::tie(ra, va.stream, va.route_pos) < std::tie(rb, vb.stream, vb.route_pos);
        });
        pos_of_.resize(cs.vars.size());
        for (std::size_t d = 0; d < order_.size(); ++d)
            pos_of_[static_cast<std::size_t>(order_[d])] = static_cast<int>(d);
    }

    SolveStatus run() {
        const int n = static_cast<int>(cs_.vars.size());
        if (n == 0) return SolveStatus::feasible;
        int depth = 0;
        while (true) {
            if (expired()) return SolveStatus::timeout;
            // descend: open the slot and look for its first candidate
            SlotCursor& cur = cursors_[static_cast<std::size_t>(depth)];
            bool found = enter_slot(depth, cur) && find_candidate(depth, cur);
            while (!found) {
                // backjump to the deepest slot this failure depends on
                if (expired()) return SolveStatus::timeout;
                SlotCursor& failed = cursors_[static_cast<std::size_t>(depth)];
                const int target = failed.conf.highest_below(depth);
                if (target < 0) return SolveStatus::infeasible;
                for (int k = depth - 1; k >= target; --k) pop_slot(k);
                SlotCursor& tc = cursors_[static_cast<std::size_t>(target)];
                failed.conf.remove(target);
                tc.conf.merge(failed.conf);
                // tick hints speak about the failed slot's own upstream hop
                const Ticks hint =
                    up_var_[static_cast<std::size_t>(var_at(depth))] == var_at(target)
                        ? failed.hint
                        : kNoHint;
                failed.hint = kNoHint;
                depth = target;
                found = advance(target, tc, hint) && find_candidate(target, tc);
            }
            push_slot(depth, cursors_[static_cast<std::size_t>(depth)]);
            if (++depth == n) return SolveStatus::feasible;
        }
    }

    const std::vector<Assignment>& assignment() const { return asg_; }
    std::int64_t nodes() const { return nodes_; }

private:
    bool expired() {
        if (!timed_out_ && (nodes_++ & 0xfff) == 0)
            timed_out_ = std::chrono::steady_clock::now() - start_ >= budget_;
        return timed_out_;
    }

    // Computes dynamic bounds and positions the cursor at the first candidate.
    // The conflict set starts from the slots the bounds came from.
    bool enter_slot(int depth, SlotCursor& cur) {
        const int v = var_at(depth);
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(v)];
        cur.hint = kNoHint;
        cur.conf.clear();
        cur.dyn_lb = vi.lb;
        cur.dyn_ub = vi.ub;
        const Stream& st = cs_.problem.streams[static_cast<std::size_t>(vi.stream)];
        const Link& last = cs_.problem.links[static_cast<std::size_t>(st.route.back())];
        const Nanos dur_last = tx_duration_ns(st.size_bytes, last.bandwidth_bps);
        const Nanos budget = st.deadline_ns - dur_last - cs_.problem.sync_precision_ns -
                             min_lag_to_last_[static_cast<std::size_t>(v)];
        if (vi.route_pos == 0) {
            // an empty conflict set on failure means: nothing can ever help
            if (budget < 0) return false;
            if (cur.dyn_lb > cur.dyn_ub) return false;
        } else {
            const int prev = up_var_[static_cast<std::size_t>(v)];
            cur.conf.add(pos_of_[static_cast<std::size_t>(prev)]);
            const VarInfo& pv = cs_.vars[static_cast<std::size_t>(prev)];
            const Nanos lag = pv.dur + up_max_delay_[static_cast<std::size_t>(v)] +
                              cs_.problem.sync_precision_ns;
            const Nanos at_least = asg_[static_cast<std::size_t>(prev)].w * pv.tick + lag;
            cur.dyn_lb = std::max(cur.dyn_lb, ceil_div(at_least, vi.tick));

            const int src_var = cs_.var_of(vi.stream, vi.frame, 0);
            cur.conf.add(pos_of_[static_cast<std::size_t>(src_var)]);
            const VarInfo& sv = cs_.vars[static_cast<std::size_t>(src_var)];
            const Nanos limit = asg_[static_cast<std::size_t>(src_var)].w * sv.tick + budget;
            const Ticks floor_ticks =
                limit >= 0 ? limit / vi.tick : -ceil_div(-limit, vi.tick);
            cur.dyn_ub = std::min(cur.dyn_ub, floor_ticks);
            if (cur.dyn_lb > cur.dyn_ub) {
                // raising the previous hop only raises the bound again; at hop 1
                // the deadline cap moves with the source, so stepping it helps
                cur.hint = vi.route_pos >= 2 ? kDeadHint : kNoHint;
                return false;
            }
        }
        cur.w = cur.dyn_lb;
        cur.q = 0;
        prepare_isolation(depth, cur);
        return true;
    }

    // Moves the cursor to the slot's next untried candidate, honoring the
    // jump hint a failed child left behind.
    bool advance(int depth, SlotCursor& cur, Ticks hint) {
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(var_at(depth))];
        if (hint == kDeadHint) return false;
        if (hint >= 0) {
            cur.w = std::max(cur.w + 1, hint);
            cur.q = 0;
        } else if (++cur.q >= vi.queues) {
            cur.q = 0;
            ++cur.w;
        }
        if (cur.w > cur.dyn_ub) return false;
        prepare_isolation(depth, cur);
        return true;
    }

    // Isolation summarized against the assigned prefix: per queue, omega*t may
    // not exceed the tightest "leave before the blocker can arrive" ceiling
    // over queue mates whose own departure did not precede this frame's
    // earliest possible arrival. Comp mode only; foodog instances are small
    // enough to evaluate per candidate.
    void prepare_isolation(int depth, SlotCursor& cur) {
        if (cs_.mode != PlanMode::comp) return;
        const int v = var_at(depth);
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(v)];
        const int queues = vi.queues;
        cur.queue_ub.assign(static_cast<std::size_t>(queues), INT64_MAX);
        cur.queue_dead.assign(static_cast<std::size_t>(queues), 0);
        cur.need_up.assign(static_cast<std::size_t>(queues), 0);
        const bool self_sourced = vi.route_pos == 0;
        const Nanos delta = cs_.problem.sync_precision_ns;
        Nanos self_up = 0, c_self = 0;
        if (!self_sourced) {
            const int uv = up_var_[static_cast<std::size_t>(v)];
            self_up = asg_[static_cast<std::size_t>(uv)].w *
                      cs_.vars[static_cast<std::size_t>(uv)].tick;
            c_self = up_min_delay_[static_cast<std::size_t>(v)] - delta;
        }
        for (int other : on_link_[static_cast<std::size_t>(vi.link)]) {
            const VarInfo& ov = cs_.vars[static_cast<std::size_t>(other)];
            if (ov.stream == vi.stream) continue;
            const bool other_sourced = ov.route_pos == 0;
            if (self_sourced && other_sourced) continue;
            const Nanos phi_o_dn = asg_[static_cast<std::size_t>(other)].w * ov.tick;
            // d1: the other frame leaves before this frame can arrive
            if (!self_sourced && phi_o_dn <= self_up + c_self) continue;
            const std::size_t q = static_cast<std::size_t>(asg_[static_cast<std::size_t>(other)].q);
            if (q >= cur.queue_ub.size()) continue;
            cur.conf.add(pos_of_[static_cast<std::size_t>(other)]);
            if (!self_sourced)
                cur.need_up[q] = std::max(cur.need_up[q], phi_o_dn - c_self);
            if (other_sourced) {
                cur.queue_dead[q] = 1;
            } else {
                const int uv = up_var_[static_cast<std::size_t>(other)];
                cur.conf.add(pos_of_[static_cast<std::size_t>(uv)]);
                const Nanos other_up = asg_[static_cast<std::size_t>(uv)].w *
                                       cs_.vars[static_cast<std::size_t>(uv)].tick;
                const Nanos c_other = up_min_delay_[static_cast<std::size_t>(other)] - delta;
                // d2: this frame must leave before the other can arrive
                cur.queue_ub[q] = std::min(cur.queue_ub[q], other_up + c_other);
            }
        }
    }

    // Scans (omega, rho) lexicographically from the cursor until a candidate
    // passes every constraint against the assigned prefix. On exhaustion the
    // cursor's conflict set names every slot that rejected a candidate.
    bool find_candidate(int depth, SlotCursor& cur) {
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(var_at(depth))];
        while (cur.w <= cur.dyn_ub) {
            if (expired()) return false;
            Ticks jump = 0;
            if (!omega_ok(depth, cur, cur.w, &jump)) {
                cur.w = std::max(cur.w + 1, jump);
                cur.q = 0;
                continue;
            }
            bool queue_found = false;
            for (; cur.q < vi.queues; ++cur.q) {
                if (isolation_ok(depth, cur, cur.w, cur.q)) {
                    queue_found = true;
                    break;
                }
            }
            if (queue_found) return true;
            ++cur.w;
            cur.q = 0;
        }
        cur.hint = exhaustion_hint(depth, cur);
        return false;
    }

    // When isolation alone capped every queue below the feasible range, the
    // same-frame upstream slot must move far enough to flip the blockers.
    Ticks exhaustion_hint(int depth, const SlotCursor& cur) const {
        if (cs_.mode != PlanMode::comp) return kNoHint;
        const int v = var_at(depth);
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(v)];
        if (vi.route_pos == 0 || cur.queue_ub.empty()) return kNoHint;
        const Nanos lb_ns = cur.dyn_lb * vi.tick;
        Nanos best_need = INT64_MAX;
        for (std::size_t q = 0; q < cur.queue_ub.size(); ++q) {
            if (!cur.queue_dead[q] && cur.queue_ub[q] >= lb_ns)
                return kNoHint;    // this queue was open; contention exhausted the scan
            best_need = std::min(best_need, cur.need_up[q]);
        }
        const VarInfo& uv =
            cs_.vars[static_cast<std::size_t>(up_var_[static_cast<std::size_t>(v)])];
        return ceil_div(best_need, uv.tick);
    }

    // rho-independent checks: contention against every assigned frame slot on
    // the same link. On violation reports the first tick clearing the
    // conflicting interval so the scan can jump.
    bool omega_ok(int depth, SlotCursor& cur, Ticks w, Ticks* jump) {
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(var_at(depth))];
        const Nanos phi = w * vi.tick;
        for (int other : on_link_[static_cast<std::size_t>(vi.link)]) {
            const VarInfo& ov = cs_.vars[static_cast<std::size_t>(other)];
            if (ov.stream == vi.stream) continue;   // same stream: fit covers it
            const Nanos phi_o = asg_[static_cast<std::size_t>(other)].w * ov.tick;
            const Nanos x = phi - phi_o;
            const Nanos g = cs_.mode == PlanMode::foodog ? std::gcd(vi.period, ov.period) : 0;
            if (hits_zone(x, -vi.dur, ov.dur, g)) {
                cur.conf.add(pos_of_[static_cast<std::size_t>(other)]);
                Nanos advance_ns;
                if (g > 0) {
                    const Nanos width = vi.dur + ov.dur;
                    const Nanos shifted = floor_mod(x + vi.dur, g);
                    advance_ns = width - shifted;
                } else {
                    advance_ns = (phi_o + ov.dur) - phi;
                }
                *jump = std::max(*jump, w + ceil_div(advance_ns, vi.tick));
                return false;
            }
        }
        return true;
    }

    bool isolation_ok(int depth, SlotCursor& cur, Ticks w, int q) {
        const int v = var_at(depth);
        const VarInfo& vi = cs_.vars[static_cast<std::size_t>(v)];
        if (cs_.mode == PlanMode::comp) {
            const std::size_t qi = static_cast<std::size_t>(q);
            return !cur.queue_dead[qi] && w * vi.tick <= cur.queue_ub[qi];
        }
        // foodog: evaluate the derived-frame disjunction per queue mate
        const Nanos phi_dn = w * vi.tick;
        const bool self_sourced = vi.route_pos == 0;
        const Nanos delta = cs_.problem.sync_precision_ns;
        for (int other : on_link_[static_cast<std::size_t>(vi.link)]) {
            const VarInfo& ov = cs_.vars[static_cast<std::size_t>(other)];
            if (ov.stream == vi.stream) continue;
            const bool other_sourced = ov.route_pos == 0;
            if (self_sourced && other_sourced) continue;   // no interleaving hazard
            if (asg_[static_cast<std::size_t>(other)].q != q) continue;
            const Nanos phi_o_dn = asg_[static_cast<std::size_t>(other)].w * ov.tick;
            Nanos self_up = 0, other_up = 0;
            Nanos c_self = 0, c_other = 0;
            if (!self_sourced) {
                const int uv = up_var_[static_cast<std::size_t>(v)];
                self_up = asg_[static_cast<std::size_t>(uv)].w *
                          cs_.vars[static_cast<std::size_t>(uv)].tick;
                c_self = up_min_delay_[static_cast<std::size_t>(v)] - delta;
            }
            if (!other_sourced) {
                const int uv = up_var_[static_cast<std::size_t>(other)];
                other_up = asg_[static_cast<std::size_t>(uv)].w *
                           cs_.vars[static_cast<std::size_t>(uv)].tick;
                c_other = up_min_delay_[static_cast<std::size_t>(other)] - delta;
            }
            if (!isolation_ok_derived(vi, ov, phi_dn, phi_o_dn, self_up, other_up, c_self,
                                      c_other, self_sourced, other_sourced)) {
                cur.conf.add(pos_of_[static_cast<std::size_t>(other)]);
                if (!other_sourced)
                    cur.conf.add(pos_of_[static_cast<std::size_t>(
                        up_var_[static_cast<std::size_t>(other)])]);
                return false;
            }
        }
        return true;
    }

    // Derived-frame isolation for the strictly periodic case: the disjunction
    // must hold for every pair of derived points across the hyperperiod.
    bool isolation_ok_derived(const VarInfo& vi, const VarInfo& ov, Nanos phi_dn,
                              Nanos phi_o_dn, Nanos self_up, Nanos other_up, Nanos c_self,
                              Nanos c_other, bool self_sourced, bool other_sourced) const {
        // u = (other frame offset) - (self frame offset), multiples of gcd
        const Nanos g = std::gcd(vi.period, ov.period);
        if (!self_sourced && !other_sourced) {
            const Nanos a_bound = self_up - phi_o_dn + c_self;   // d1: u <= a_bound
            const Nanos b_bound = phi_dn - other_up - c_other;   // d2: u >= b_bound
            return !hits_zone(0, a_bound, b_bound, g);
        }
        const Nanos t = cs_.cycle_ns;
        if (self_sourced) {
            // only d2 remains; the worst derived pair minimizes u
            const Nanos b_bound = phi_dn - other_up - c_other;
            return -(t - vi.period) >= b_bound;
        }
        // only d1 remains; the worst derived pair maximizes u
        const Nanos a_bound = self_up - phi_o_dn + c_self;
        return t - ov.period <= a_bound;
    }

    void push_slot(int depth, const SlotCursor& cur) {
        const int v = var_at(depth);
        asg_[static_cast<std::size_t>(v)] = {cur.w, cur.q};
        on_link_[static_cast<std::size_t>(cs_.vars[static_cast<std::size_t>(v)].link)]
            .push_back(v);
    }
    void pop_slot(int depth) {
        const int v = var_at(depth);
        on_link_[static_cast<std::size_t>(cs_.vars[static_cast<std::size_t>(v)].link)]
            .pop_back();
    }

    int var_at(int depth) const { return order_[static_cast<std::size_t>(depth)]; }

    const ConstraintSet& cs_;
    std::chrono::nanoseconds budget_;
    std::chrono::steady_clock::time_point start_;
    std::vector<Assignment> asg_;
    std::vector<SlotCursor> cursors_;
    std::vector<std::vector<int>> on_link_;
    std::vector<Nanos> up_max_delay_;
    std::vector<Nanos> up_min_delay_;
    std::vector<int> up_var_;
    std::vector<Nanos> min_lag_to_last_;
    std::vector<int> order_;     // depth -> var id
    std::vector<int> pos_of_;    // var id -> depth
    std::int64_t nodes_ = 0;
    bool timed_out_ = false;
};

}  // namespace detail

/// Expands a satisfying assignment into a full-coverage schedule. In foodog
/// mode each first-frame slot yields T/T_i strictly periodic frame slots.
inline Schedule expand_assignment(const ConstraintSet& cs, const std::vector<Assignment>& asg) {
    Schedule out;
    for (std::size_t v = 0; v < cs.vars.size(); ++v) {
        const VarInfo& vi = cs.vars[v];
        if (cs.mode == PlanMode::comp) {
            out.slots.push_back({vi.stream, vi.frame, vi.link, asg[v].w, asg[v].q});
        } else {
            const std::int64_t frames = cs.cycle_ns / vi.period;
            const Ticks step = vi.period / vi.tick;
            for (std::int64_t j = 0; j < frames; ++j)
                out.slots.push_back({vi.stream, j, vi.link, asg[v].w + j * step, asg[v].q});
        }
    }
    return out;
}

/// Deterministic exact search: smallest omega first, then smallest rho,
/// streams scanned in id order, with conflict-directed backjumping. `seed` is
/// accepted for interface stability; the canonical order does not depend on
/// it.
inline SolveOutcome solve(const ConstraintSet& cs, std::uint64_t seed,
                          std::chrono::nanoseconds timeout) {
    (void)seed;
    const auto start = std::chrono::steady_clock::now();
    detail::BranchAndBound search(cs, timeout);
    SolveOutcome out;
    out.status = search.run();
    out.nodes = search.nodes();
    if (out.status == SolveStatus::feasible) {
        if (auto bad = first_violation(cs, search.assignment()))
            throw std::logic_error("solver returned an assignment violating: " + *bad);
        out.schedule = expand_assignment(cs, search.assignment());
    }
    out.elapsed = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::steady_clock::now() - start);
    return out;
}

}  // namespace foodog
