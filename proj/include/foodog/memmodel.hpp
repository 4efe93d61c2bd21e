#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "foodog/model.hpp"

namespace foodog {

/// GCL field widths in bits. Defaults follow the prototype configuration:
/// 32-bit interval/time, 1-bit state, 3-bit queue id, 9-bit gate id.
struct WidthConfig {
    int w_interval = 32;
    int w_state = 1;
    int w_que = 3;
    int w_time = 32;
    int w_gate = 9;
};

inline int ceil_log2(std::int64_t n) {
    int bits = 0;
    while ((std::int64_t{1} << bits) < n) ++bits;
    return bits;
}

/// Standard per-stream PSFP GCL memory: P * sum_i W_std * (2*T/T_i + 1).
inline std::int64_t mem_standard(int ports, const std::vector<Nanos>& periods, Nanos cycle_ns,
                                 const WidthConfig& w) {
    if (ports < 0) throw std::invalid_argument("negative port count");
    const std::int64_t width = w.w_interval + w.w_state + w.w_que;
    std::int64_t entries = 0;
    for (Nanos t : periods) {
        if (t <= 0 || cycle_ns % t != 0)
            throw std::invalid_argument("cycle period not divisible by stream period");
        entries += 2 * (cycle_ns / t) + 1;
    }
    return ports * width * entries;
}

/// FooDog memory: P * (W_pgcl * depth + W_sgcl * N). The period-wise depth
/// must cover two entries per stream and the gate field must address N gates.
inline std::int64_t mem_foodog(int ports, std::int64_t streams, std::int64_t pgcl_depth,
                               const WidthConfig& w) {
    if (ports < 0) throw std::invalid_argument("negative port count");
    if (pgcl_depth < 2 * streams)
        throw std::invalid_argument("pgcl depth below the 2N lower bound");
    if (streams > 0 && w.w_gate < ceil_log2(streams))
        throw std::invalid_argument("gate id width cannot address all streams");
    const std::int64_t w_pgcl = w.w_time + w.w_gate + w.w_state + w.w_que;
    const std::int64_t w_sgcl = w.w_state + w.w_que;
    return ports * (w_pgcl * pgcl_depth + w_sgcl * streams);
}

struct DepthRow {
    double proportion = 0.0;
    std::int64_t std_entries = 0;
    std::int64_t foodog_entries = 0;
};

/// Total GCL entries per port for a two-period stream mix, standard vs
/// foodog, across a sweep of small-period proportions. The foodog column is
/// 2N regardless of the mix.
inline std::vector<DepthRow> depth_report(std::int64_t streams,
                                          const std::vector<double>& proportions,
                                          Nanos small_period, Nanos large_period) {
    const Nanos cycle = std::lcm(small_period, large_period);
    std::vector<DepthRow> rows;
    rows.reserve(proportions.size());
    for (double p : proportions) {
        if (p < 0.0 || p > 1.0) throw std::invalid_argument("proportion outside [0,1]");
        const std::int64_t n_small = std::llround(p * static_cast<double>(streams));
        const std::int64_t n_large = streams - n_small;
        DepthRow r;
        r.proportion = p;
        r.std_entries = n_small * (2 * (cycle / small_period) + 1) +
                        n_large * (2 * (cycle / large_period) + 1);
        r.foodog_entries = 2 * streams;
        rows.push_back(r);
    }
    return rows;
}

struct MemReport {
    int ports = 0;
    std::int64_t streams = 0;
    double proportion_small = 0.0;
    std::int64_t std_bits = 0;
    std::int64_t foodog_bits = 0;
    double reduction = 0.0;    // 1 - foodog/std
};

/// One report cell per (stream count, small-period proportion) combination.
/// pgcl_depth == 0 sizes the period-wise GCL at the 2N lower bound.
inline std::vector<MemReport> grid_report(const std::vector<std::int64_t>& stream_counts,
                                          const std::vector<double>& proportions, int ports,
                                          const WidthConfig& w,
                                          Nanos small_period = 1'000'000,
                                          Nanos large_period = 100'000'000,
                                          std::int64_t pgcl_depth = 0) {
    if (stream_counts.empty() || proportions.empty())
        throw std::invalid_argument("empty report range");
    const Nanos cycle = std::lcm(small_period, large_period);
    std::vector<MemReport> out;
    out.reserve(stream_counts.size() * proportions.size());
    for (std::int64_t n : stream_counts) {
        for (double p : proportions) {
            const std::int64_t n_small = std::llround(p * static_cast<double>(n));
            std::vector<Nanos> periods(static_cast<std::size_t>(n_small), small_period);
            periods.resize(static_cast<std::size_t>(n), large_period);
            MemReport r;
            r.ports = ports;
            r.streams = n;
            r.proportion_small = p;
            r.std_bits = mem_standard(ports, periods, cycle, w);
            r.foodog_bits = mem_foodog(ports, n, pgcl_depth > 0 ? pgcl_depth : 2 * n, w);
            r.reduction = r.std_bits > 0
                              ? 1.0 - static_cast<double>(r.foodog_bits) /
                                          static_cast<double>(r.std_bits)
                              : 0.0;
            out.push_back(r);
        }
    }
    return out;
}

}  // namespace foodog
