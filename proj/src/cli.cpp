#include "numamap/cli.hpp"

#include "numamap/report.hpp"
#include "numamap/sim.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <future>
#include <iostream>
#include <sstream>

namespace numamap {

namespace {

enum class Level { Error = 0, Warn = 1, Info = 2, Debug = 3 };

class Log {
public:
    Log(std::ostream& err, Level level) : err_(err), level_(level) {}
    void operator()(Level level, const std::string& msg) const {
        static constexpr const char* kNames[] = {"error", "warn", "info", "debug"};
        if (level <= level_) err_ << kNames[static_cast<int>(level)] << ": " << msg << '\n';
    }

private:
    std::ostream& err_;
    Level level_;
};

struct Options {
    std::string topology;
    std::string scenario;
    std::string perf_params;
    std::vector<std::string> algorithms;
    std::uint64_t seed = 1;
    int epochs = 100;
    int repeats = 1;
    int warmup = 3;
    std::string out;
    std::string format;
    std::string trace;
    int epoch = -1;
    int run_index = 0;
    std::string log_level = "warn";
};

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void emit(const Options& o, std::ostream& out, const std::string& text) {
    if (o.out.empty()) {
        out << text;
        return;
    }
    std::ofstream file(o.out, std::ios::binary);
    if (!file) throw RuntimeError("cannot write '" + o.out + "'");
    file << text;
    if (!file) throw RuntimeError("write to '" + o.out + "' failed");
}

RunConfig make_config(const Options& o, Algorithm algorithm) {
    if (o.topology.empty()) throw ValidationError("--topology is required");
    if (o.scenario.empty()) throw ValidationError("--scenario is required");
    RunConfig cfg{.topology = load_topology_file(o.topology),
                  .scenario = parse_scenario_file(o.scenario),
                  .params = o.perf_params.empty() ? PerfParams::defaults() : load_perf_params_file(o.perf_params),
                  .algorithm = algorithm,
                  .seed = o.seed,
                  .epochs = o.epochs,
                  .repeats = o.repeats,
                  .warmup = o.warmup,
                  .algo = {},
                  .vanilla = {},
                  .classes = ClassMatrix::defaults()};
    cfg.validate();
    return cfg;
}

void log_trace(const RunTrace& t, const Log& log) {
    for (const auto& rec : t.records)
        for (const auto& line : rec.log) {
            const bool loud = line.find("rejected") != std::string::npos || line.find("best-effort") != std::string::npos;
            log(loud ? Level::Warn : Level::Debug,
                std::string(to_string(t.algorithm)) + " seed " + std::to_string(t.seed) + " epoch " +
                    std::to_string(rec.epoch) + ": " + line);
        }
}

std::string render_stats(const std::string& format, const std::vector<VmStats>& rows,
                         const std::vector<GroupFactor>& groups) {
    if (format == "csv") return stats_csv(rows);
    if (format == "table") return stats_table(rows, groups);
    return stats_json(rows, groups).dump(2) + "\n";
}

// Aggregates per algorithm (in order of first appearance) and compares when there are several.
std::string summarize(const std::vector<RunTrace>& traces, const std::string& format) {
    std::vector<Algorithm> order;
    std::map<Algorithm, std::vector<RunTrace>> by_algo;
    for (const auto& t : traces) {
        if (!by_algo.contains(t.algorithm)) order.push_back(t.algorithm);
        by_algo[t.algorithm].push_back(t);
    }
    std::vector<RunStats> stats;
    for (auto a : order) stats.push_back(aggregate(by_algo.at(a)));
    if (stats.size() == 1) return render_stats(format, stats.front().vms, {});
    const auto cmp = compare(stats);
    return render_stats(format, cmp.rows, cmp.groups);
}

int cmd_validate(const Options& o, std::ostream& out) {
    const auto t = load_topology_file(o.topology);
    if (!o.scenario.empty()) {
        const auto s = parse_scenario_file(o.scenario);
        const int peak = peak_live_vcpus(s);
        if (peak > static_cast<int>(t.core_count()))
            out << "note: scenario peaks at " << peak << " vCPUs, more than " << t.core_count() << " cores\n";
    }
    if (!o.perf_params.empty()) load_perf_params_file(o.perf_params);
    std::ostringstream text;
    text << t.core_count() << " cores, " << t.numa_count() << " NUMA nodes, " << t.servers().size() << " servers\n";
    emit(o, out, text.str());
    return 0;
}

int cmd_run(const Options& o, std::ostream& out, const Log& log) {
    if (o.algorithms.size() > 1) throw ValidationError("run takes a single --algorithm; use compare");
    const auto algo = parse_algorithm(o.algorithms.empty() ? "sm-ipc" : o.algorithms.front());
    const auto cfg = make_config(o, algo);
    log(Level::Info, "running " + std::string(to_string(algo)) + ", " + std::to_string(cfg.repeats) + " repeat(s)");
    const auto traces = run_repeats(cfg);
    for (const auto& t : traces) log_trace(t, log);
    if (o.format == "json") {
        std::string text;
        for (const auto& t : traces) text += serialize_trace(t);
        emit(o, out, text);
    } else {
        emit(o, out, render_stats(o.format, aggregate(traces).vms, {}));
    }
    return 0;
}

int cmd_compare(const Options& o, std::ostream& out, const Log& log) {
    if (o.algorithms.size() < 2) throw ValidationError("compare needs at least two --algorithm flags");
    std::vector<RunConfig> cfgs;
    for (const auto& name : o.algorithms) cfgs.push_back(make_config(o, parse_algorithm(name)));
    std::vector<std::future<std::vector<RunTrace>>> jobs;
    for (const auto& cfg : cfgs) jobs.push_back(std::async(std::launch::async, [&cfg] { return run_repeats(cfg); }));
    std::vector<RunStats> stats;
    for (auto& j : jobs) {
        const auto traces = j.get();
        for (const auto& t : traces) log_trace(t, log);
        stats.push_back(aggregate(traces));
    }
    const auto cmp = compare(stats);
    emit(o, out, render_stats(o.format, cmp.rows, cmp.groups));
    return 0;
}

int cmd_snapshot(const Options& o, std::ostream& out, const Log& log) {
    std::vector<RunTrace> traces;
    if (!o.trace.empty()) {
        traces = parse_traces(read_file(o.trace));
    } else {
        if (o.algorithms.size() > 1) throw ValidationError("snapshot takes a single --algorithm");
        auto cfg = make_config(o, parse_algorithm(o.algorithms.empty() ? "sm-ipc" : o.algorithms.front()));
        traces.push_back(run(cfg));
        log_trace(traces.back(), log);
    }
    if (o.run_index < 0 || o.run_index >= static_cast<int>(traces.size()))
        throw ValidationError("--run " + std::to_string(o.run_index) + " out of range");
    const auto& trace = traces[o.run_index];
    const int epoch = o.epoch >= 0 ? o.epoch : static_cast<int>(trace.records.size()) - 1;
    if (o.format == "json")
        emit(o, out, snapshot_json(trace, epoch).dump(2) + "\n");
    else
        emit(o, out, render_snapshot(trace, epoch));
    return 0;
}

int cmd_report(const Options& o, std::ostream& out) {
    const auto traces = parse_traces(read_file(o.trace));
    if (traces.empty()) throw ValidationError("trace '" + o.trace + "' holds no runs");
    emit(o, out, summarize(traces, o.format));
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"NUMA-aware vCPU and memory mapping simulator"};
    app.name("numamap");
    app.require_subcommand(1);
    app.fallthrough();
    Options o;

    const std::vector<std::string> levels{"error", "warn", "info", "debug"};
    app.add_option("--log-level", o.log_level, "Diagnostics verbosity")->check(CLI::IsMember(levels));

    auto add_inputs = [&](CLI::App* sub) {
        sub->add_option("--topology", o.topology, "Topology document")->check(CLI::ExistingFile);
        sub->add_option("--scenario", o.scenario, "Scenario document")->check(CLI::ExistingFile);
        sub->add_option("--perf-params", o.perf_params, "Performance model parameters")->check(CLI::ExistingFile);
    };
    auto add_run = [&](CLI::App* sub) {
        sub->add_option("--algorithm", o.algorithms, "vanilla, sm-ipc or sm-mpi")
            ->check(CLI::IsMember({"vanilla", "sm-ipc", "sm-mpi", "sm_ipc", "sm_mpi"}));
        sub->add_option("--seed", o.seed, "Base seed");
        sub->add_option("--epochs", o.epochs, "Epochs per run")->check(CLI::PositiveNumber);
        sub->add_option("--repeats", o.repeats, "Runs per algorithm")->check(CLI::PositiveNumber);
        sub->add_option("--warmup", o.warmup, "Leading epochs left out of statistics")->check(CLI::NonNegativeNumber);
    };
    auto add_output = [&](CLI::App* sub, const std::string& default_format) {
        sub->add_option("--out", o.out, "Output file (default: standard output)");
        sub->add_option("--format", o.format, "json, csv or table")
            ->check(CLI::IsMember({"json", "csv", "table"}))
            ->default_str(default_format);
    };

    auto* validate = app.add_subcommand("validate-topology", "Check documents and print the machine size");
    add_inputs(validate);
    validate->get_option("--topology")->required();
    validate->add_option("--out", o.out, "Output file (default: standard output)");

    auto* run_cmd = app.add_subcommand("run", "Run a scenario under one algorithm");
    add_inputs(run_cmd);
    add_run(run_cmd);
    add_output(run_cmd, "json");
    run_cmd->get_option("--topology")->required();
    run_cmd->get_option("--scenario")->required();

    auto* compare_cmd = app.add_subcommand("compare", "Run a scenario under several algorithms");
    add_inputs(compare_cmd);
    add_run(compare_cmd);
    add_output(compare_cmd, "csv");
    compare_cmd->get_option("--topology")->required();
    compare_cmd->get_option("--scenario")->required();

    auto* snapshot_cmd = app.add_subcommand("snapshot", "Render the core mapping at one epoch");
    add_inputs(snapshot_cmd);
    add_run(snapshot_cmd);
    add_output(snapshot_cmd, "table");
    snapshot_cmd->add_option("--trace", o.trace, "Trace written by run")->check(CLI::ExistingFile);
    snapshot_cmd->add_option("--epoch", o.epoch, "Epoch to render (default: last)")->check(CLI::NonNegativeNumber);
    snapshot_cmd->add_option("--run", o.run_index, "Run within a multi-run trace");

    auto* report_cmd = app.add_subcommand("report", "Summarize a trace written by run");
    report_cmd->add_option("--trace", o.trace, "Trace written by run")->required()->check(CLI::ExistingFile);
    add_output(report_cmd, "csv");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 1;
    }

    if (o.format.empty()) {
        if (app.got_subcommand(run_cmd)) o.format = "json";
        else if (app.got_subcommand(snapshot_cmd)) o.format = "table";
        else o.format = "csv";
    }
    const Log log(err, static_cast<Level>(std::find(levels.begin(), levels.end(), o.log_level) - levels.begin()));

    try {
        if (app.got_subcommand(validate)) return cmd_validate(o, out);
        if (app.got_subcommand(run_cmd)) return cmd_run(o, out, log);
        if (app.got_subcommand(compare_cmd)) return cmd_compare(o, out, log);
        if (app.got_subcommand(snapshot_cmd)) {
            if (o.trace.empty() && (o.topology.empty() || o.scenario.empty()))
                throw ValidationError("snapshot needs --trace, or --topology and --scenario");
            return cmd_snapshot(o, out, log);
        }
        return cmd_report(o, out);
    } catch (const ValidationError& e) {
        log(Level::Error, e.what());
        return 1;
    } catch (const std::exception& e) {
        log(Level::Error, e.what());
        return 2;
    }
}

} // namespace numamap
