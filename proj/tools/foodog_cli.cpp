// Command-line front end for the planning / synthesis / simulation pipeline:
//   foodog plan      scenario.json  --mode foodog --out schedule.json
//   foodog synth     scenario.json schedule.json --out gcl.json
//   foodog simulate  scenario.json gcl.json --mode foodog --out run
//   foodog memreport --out grid.csv
//
// Exit codes: 0 success, 1 parse/usage failure, 2 infeasible or failed
// verification or mismatched inputs, 3 solver timeout.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "foodog/constraints.hpp"
#include "foodog/io.hpp"
#include "foodog/memmodel.hpp"
#include "foodog/sim.hpp"
#include "foodog/solver.hpp"
#include "foodog/verify.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitParse = 1;
constexpr int kExitInfeasible = 2;
constexpr int kExitTimeout = 3;

bool log_enabled() {
    const char* v = std::getenv("FOODOG_LOG");
    return v != nullptr && *v != '\0';
}

void log_line(const std::string& msg) {
    if (log_enabled()) std::cerr << "[foodog] " << msg << "\n";
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw foodog::ParseError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw foodog::ParseError("cannot write " + path);
    out << content;
}

int cmd_plan(const std::string& scenario_path, const std::string& mode_name, std::uint64_t seed,
             double timeout_s, const std::string& out_path) {
    const foodog::Scenario sc = foodog::parse_scenario(read_file(scenario_path));
    const auto violations = foodog::validate_problem(sc.problem);
    if (!violations.empty()) {
        std::cerr << "invalid scenario: " << violations.front() << "\n";
        return kExitParse;
    }
    const foodog::PlanMode mode =
        mode_name == "comp" ? foodog::PlanMode::comp : foodog::PlanMode::foodog;
    const foodog::ConstraintSet cs = mode == foodog::PlanMode::comp
                                         ? foodog::build_constraints_comp(sc.problem)
                                         : foodog::build_constraints_foodog(sc.problem);
    const auto stats = foodog::constraint_stats(cs);
    log_line("built " + std::to_string(stats.variables) + " variables");
    const auto budget = std::chrono::duration_cast<std::chrono::nanoseconds>(
        std::chrono::duration<double>(timeout_s));
    const foodog::SolveOutcome out = foodog::solve(cs, seed, budget);
    std::cout << "mode=" << mode_name << " variables=" << stats.variables
              << " constraints=" << stats.constraints << " elapsed_ms="
              << std::chrono::duration_cast<std::chrono::milliseconds>(out.elapsed).count()
              << " status="
              << (out.status == foodog::SolveStatus::feasible
                      ? "feasible"
                      : out.status == foodog::SolveStatus::infeasible ? "infeasible" : "timeout")
              << "\n";
    if (out.status == foodog::SolveStatus::timeout) return kExitTimeout;
    if (out.status == foodog::SolveStatus::infeasible) return kExitInfeasible;
    write_file(out_path, foodog::emit_schedule(sc.problem, out.schedule, mode));
    return kExitOk;
}

int cmd_synth(const std::string& scenario_path, const std::string& schedule_path,
              const std::string& out_path) {
    const foodog::Scenario sc = foodog::parse_scenario(read_file(scenario_path));
    const auto [schedule, mode] = foodog::parse_schedule(read_file(schedule_path), sc.problem);
    (void)mode;   // GCL synthesis always needs the periodic structure
    const auto violations =
        foodog::verify_schedule(sc.problem, schedule, foodog::PlanMode::foodog);
    if (!violations.empty()) {
        std::cerr << "schedule fails verification: " << violations.front() << "\n";
        return kExitInfeasible;
    }
    foodog::WidthConfig widths;
    widths.w_gate = std::max(
        1, foodog::ceil_log2(static_cast<std::int64_t>(sc.problem.streams.size())));
    write_file(out_path,
               foodog::emit_gcl(sc.problem, foodog::synth_all(sc.problem, schedule, widths)));
    log_line("synthesized GCLs for " + std::to_string(sc.problem.links.size()) + " ports");
    return kExitOk;
}

int cmd_simulate(const std::string& scenario_path, const std::string& gcl_path,
                 const std::string& mode_name, foodog::Nanos horizon, foodog::Nanos warmup,
                 std::uint64_t seed, const std::string& out_prefix) {
    const foodog::Scenario sc = foodog::parse_scenario(read_file(scenario_path));
    const foodog::GclSet gcls = foodog::parse_gcl(read_file(gcl_path), sc.problem);
    if (gcls.talkers.size() != sc.problem.streams.size()) {
        std::cerr << "gcl file covers " << gcls.talkers.size() << " streams, scenario has "
                  << sc.problem.streams.size() << "\n";
        return kExitInfeasible;
    }
    const foodog::SimMode mode = mode_name == "none"
                                     ? foodog::SimMode::none
                                     : mode_name == "standard_psfp"
                                           ? foodog::SimMode::standard_psfp
                                           : foodog::SimMode::foodog;
    foodog::SimTrace trace;
    try {
        trace = foodog::run(sc.problem, gcls, mode, sc.anomalies, sc.clock_offsets, horizon, seed);
    } catch (const std::invalid_argument& e) {
        std::cerr << "simulation rejected inputs: " << e.what() << "\n";
        return kExitInfeasible;
    }
    const auto rows = foodog::metrics(trace, warmup);
    write_file(out_prefix + "_trace.csv", foodog::trace_csv(trace));
    write_file(out_prefix + "_metrics.csv", foodog::metrics_csv(rows));
    for (const auto& m : rows) {
        std::cout << foodog::stream_name(m.stream) << ": sent=" << m.sent
                  << " delivered=" << m.delays.size() << " drops=" << m.drops << " jitter=";
        if (m.jitter.has_value())
            std::cout << *m.jitter << "ns";
        else
            std::cout << "n/a";
        std::cout << "\n";
    }
    return kExitOk;
}

int cmd_memreport(std::int64_t n_min, std::int64_t n_max, std::int64_t n_step, int prop_min_pct,
                  int prop_max_pct, int prop_step_pct, int ports, foodog::Nanos small_period,
                  foodog::Nanos large_period, std::int64_t depth, const foodog::WidthConfig& w,
                  const std::string& out_path) {
    std::vector<std::int64_t> counts;
    for (std::int64_t n = n_min; n <= n_max; n += n_step) counts.push_back(n);
    std::vector<double> props;
    for (int pct = prop_min_pct; pct <= prop_max_pct; pct += prop_step_pct)
        props.push_back(pct / 100.0);
    const auto grid =
        foodog::grid_report(counts, props, ports, w, small_period, large_period, depth);
    write_file(out_path, foodog::memgrid_csv(grid));
    std::cout << "rows=" << grid.size() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Traffic planning, gate-control-list synthesis, and policing simulation"};
    app.require_subcommand(1);

    std::string scenario_path, schedule_path, gcl_path, out_path, mode_name;
    std::uint64_t seed = 1;
    double timeout_s = 60.0;
    foodog::Nanos horizon = 0, warmup = 0;

    auto* plan = app.add_subcommand("plan", "Solve the transmission schedule");
    plan->add_option("scenario", scenario_path)->required();
    plan->add_option("--mode", mode_name)->check(CLI::IsMember({"comp", "foodog"}))->required();
    plan->add_option("--seed", seed);
    plan->add_option("--timeout-s", timeout_s);
    plan->add_option("--out", out_path)->required();

    auto* synth = app.add_subcommand("synth", "Derive all GCLs from a schedule");
    synth->add_option("scenario", scenario_path)->required();
    synth->add_option("schedule", schedule_path)->required();
    synth->add_option("--out", out_path)->required();

    auto* simulate = app.add_subcommand("simulate", "Run the discrete-event switch network");
    simulate->add_option("scenario", scenario_path)->required();
    simulate->add_option("gcl", gcl_path)->required();
    simulate->add_option("--mode", mode_name)
        ->check(CLI::IsMember({"none", "standard_psfp", "foodog"}))
        ->required();
    simulate->add_option("--horizon-ns", horizon)->required();
    simulate->add_option("--warmup-ns", warmup);
    simulate->add_option("--seed", seed);
    simulate->add_option("--out", out_path)->required();

    std::int64_t n_min = 100, n_max = 500, n_step = 50, depth = 0;
    int prop_min = 10, prop_max = 90, prop_step = 5, ports = 4;
    foodog::Nanos small_period = 1'000'000, large_period = 100'000'000;
    foodog::WidthConfig widths;
    auto* memreport = app.add_subcommand("memreport", "Memory model grid as CSV");
    memreport->add_option("--n-min", n_min);
    memreport->add_option("--n-max", n_max);
    memreport->add_option("--n-step", n_step);
    memreport->add_option("--prop-min-pct", prop_min);
    memreport->add_option("--prop-max-pct", prop_max);
    memreport->add_option("--prop-step-pct", prop_step);
    memreport->add_option("--ports", ports);
    memreport->add_option("--small-period-ns", small_period);
    memreport->add_option("--large-period-ns", large_period);
    memreport->add_option("--pgcl-depth", depth, "0 sizes the pGCL at the 2N bound");
    memreport->add_option("--w-interval", widths.w_interval);
    memreport->add_option("--w-state", widths.w_state);
    memreport->add_option("--w-que", widths.w_que);
    memreport->add_option("--w-time", widths.w_time);
    memreport->add_option("--w-gate", widths.w_gate);
    memreport->add_option("--out", out_path)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed()) return cmd_plan(scenario_path, mode_name, seed, timeout_s, out_path);
        if (synth->parsed()) return cmd_synth(scenario_path, schedule_path, out_path);
        if (simulate->parsed())
            return cmd_simulate(scenario_path, gcl_path, mode_name, horizon, warmup, seed,
                                out_path);
        if (memreport->parsed())
            return cmd_memreport(n_min, n_max, n_step, prop_min, prop_max, prop_step, ports,
                                 small_period, large_period, depth, widths, out_path);
    } catch (const foodog::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kExitParse;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInfeasible;
    }
    return kExitParse;
}
