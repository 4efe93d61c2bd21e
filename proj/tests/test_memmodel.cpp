#include <doctest.h>

#include <cmath>

#include "foodog/memmodel.hpp"

using namespace foodog;

namespace {

constexpr Nanos kMs = 1'000'000;
const WidthConfig kPrototypeWidths{};   // 32/1/3 interval widths, 32-bit time, 9-bit gate

std::vector<Nanos> mix(std::int64_t n_small, std::int64_t n_large) {
    std::vector<Nanos> periods(static_cast<std::size_t>(n_small), 1 * kMs);
    periods.resize(static_cast<std::size_t>(n_small + n_large), 100 * kMs);
    return periods;
}

std::vector<double> paper_proportions() {
    std::vector<double> out;
    for (int pct = 10; pct <= 90; pct += 5) out.push_back(pct / 100.0);
    return out;
}

std::vector<std::int64_t> paper_stream_counts() {
    std::vector<std::int64_t> out;
    for (std::int64_t n = 100; n <= 500; n += 50) out.push_back(n);
    return out;
}

}  // namespace

TEST_CASE("standard PSFP memory formula") {
    CHECK(mem_standard(1, mix(1, 1), 100 * kMs, kPrototypeWidths) == 7'344);
    CHECK(mem_standard(4, mix(450, 50), 100 * kMs, kPrototypeWidths) == 13'046'400);
    CHECK(mem_standard(3, {}, 100 * kMs, kPrototypeWidths) == 0);
    CHECK_THROWS(mem_standard(1, {3 * kMs}, 100 * kMs, kPrototypeWidths));
}

TEST_CASE("foodog memory formula") {
    CHECK(mem_foodog(4, 500, 1000, kPrototypeWidths) == 188'000);
    CHECK(mem_foodog(4, 500, 1000, kPrototypeWidths) <= 200'000);   // under 0.2 Mb
    CHECK(mem_foodog(1, 1, 2, kPrototypeWidths) == 94);
    CHECK(mem_foodog(2, 0, 0, kPrototypeWidths) == 0);
    CHECK_THROWS(mem_foodog(1, 10, 19, kPrototypeWidths));
    WidthConfig narrow = kPrototypeWidths;
    narrow.w_gate = 8;
    CHECK_THROWS(mem_foodog(1, 500, 1000, narrow));
    CHECK(mem_foodog(1, 256, 512, narrow) > 0);    // 8 bits address 256 gates
}

TEST_CASE("depth report: standard grows with the small-period share, foodog does not") {
    const auto rows = depth_report(500, paper_proportions(), 1 * kMs, 100 * kMs);
    REQUIRE(rows.size() == 17);
    CHECK(rows.front().std_entries == 11'400);    // 50*201 + 450*3
    CHECK(rows.back().std_entries == 90'600);     // 450*201 + 50*3
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].foodog_entries == 1000);
        if (i > 0) CHECK(rows[i].std_entries > rows[i - 1].std_entries);
    }
}

TEST_CASE("grid report covers the 153-cell study") {
    const auto grid =
        grid_report(paper_stream_counts(), paper_proportions(), 4, kPrototypeWidths);
    CHECK(grid.size() == 153);
    for (const auto& cell : grid) {
        CHECK(cell.reduction >= 0.60);
        CHECK(cell.reduction <= 0.99);
    }
    const MemReport& max_cell = grid.back();    // N=500, 90%
    CHECK(max_cell.streams == 500);
    CHECK(max_cell.proportion_small == doctest::Approx(0.90));
    CHECK(max_cell.reduction == doctest::Approx(0.9856).epsilon(0.001));
}

TEST_CASE("foodog bits do not depend on the cycle period or the period mix") {
    const std::int64_t fixed_n = mem_foodog(4, 300, 600, kPrototypeWidths);
    for (double prop : paper_proportions()) {
        const auto grid = grid_report({300}, {prop}, 4, kPrototypeWidths);
        CHECK(grid[0].foodog_bits == fixed_n);
    }
}

TEST_CASE("both formulas scale linearly in the port count") {
    for (int k = 1; k <= 4; ++k) {
        CHECK(mem_standard(k, mix(45, 5), 100 * kMs, kPrototypeWidths) ==
              k * mem_standard(1, mix(45, 5), 100 * kMs, kPrototypeWidths));
        CHECK(mem_foodog(k, 50, 100, kPrototypeWidths) ==
              k * mem_foodog(1, 50, 100, kPrototypeWidths));
    }
}

TEST_CASE("both formulas are monotone in the stream count") {
    std::int64_t prev_std = -1, prev_food = -1;
    for (std::int64_t n = 100; n <= 500; n += 50) {
        const std::int64_t s =
            mem_standard(4, mix(n / 2, n - n / 2), 100 * kMs, kPrototypeWidths);
        const std::int64_t f = mem_foodog(4, n, 2 * n, kPrototypeWidths);
        CHECK(s > prev_std);
        CHECK(f > prev_food);
        prev_std = s;
        prev_food = f;
    }
}
