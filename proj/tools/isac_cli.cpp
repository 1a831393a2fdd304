// Scenario-driven experiment harness.
//
//   isac_cli solve       scenario.json [--design crit:rx] [--out result.json]
//   isac_cli sweep       scenario.json [--out sweep.csv] [--timing]
//   isac_cli beampattern scenario.json [--out pattern.csv]
//   isac_cli dump        scenario.json [--design crit:rx] [--out program.txt]
//
// Every command accepts --summary run.json (config hash, seeds, versions).
// Exit codes: 0 success, 1 configuration error, 2 infeasible, 3 numerical failure.

#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "isac/pipeline.hpp"
#include "isac/scenario.hpp"

#ifndef ISAC_VERSION
#define ISAC_VERSION "unknown"
#endif

using namespace isac;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kConfig = 1, kInfeasible = 2, kNumerical = 3 };

struct Loaded {
    json doc;
    Scenario scenario;
    std::string path;
};

Loaded load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    Loaded l;
    l.path = path;
    try {
        l.doc = json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    l.scenario = parse_scenario(l.doc);
    return l;
}

/// FNV-1a over the canonical (key-sorted, compact) serialization.
std::string config_hash(const json& doc) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : doc.dump()) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016" PRIx64, h);
    return out;
}

/// Locale-independent shortest-roundtrip-ish formatting for CSV cells.
std::string num(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

class Output {
public:
    explicit Output(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ConfigError("cannot open output file '" + path + "'");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void write_summary(const std::string& path, const std::string& command, const Loaded& l, const json& seeds,
                   const json& extra) {
    if (path.empty()) return;
    json s;
    s["command"] = command;
    s["scenario_file"] = l.path;
    s["config_hash"] = config_hash(l.doc);
    s["seeds"] = seeds;
    s["versions"] = {{"isac", ISAC_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__}};
    s["result"] = extra;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot open summary file '" + path + "'");
    out << s.dump(2) << "\n";
}

PipelineOptions pipeline_options(const Scenario& s) {
    PipelineOptions opt;
    opt.settings = s.solver;
    opt.los_channels = s.channels.kind == ChannelKind::LOS;
    return opt;
}

int exit_for(const DesignOutcome& o) {
    if (o.solved()) return kOk;
    return o.infeasible() ? kInfeasible : kNumerical;
}

json cvec_json(const CVec& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back({v(i).real(), v(i).imag()});
    return arr;
}

json outcome_json(const conic::ProblemSpec& spec, const DesignOutcome& o) {
    json r;
    r["design"] = std::string(conic::to_string(o.criterion)) + ":" + conic::to_string(o.receiver);
    r["status"] = solver::to_string(o.solve.status);
    r["iterations"] = o.solve.iterations;
    r["solve_seconds"] = o.solve.solve_seconds;
    if (!o.solved()) return r;
    r["sdr_objective"] = o.sdr_objective;
    r["recovered_objective"] = o.recovered_objective;
    r["objective_gap"] = o.objective_gap;
    r["tight"] = o.tight;
    r["recovery"] = to_string(o.recovery);
    r["relaxed_ranks"] = o.relaxed_ranks;
    const auto& sol = *o.recovered;
    r["alpha"] = sol.alpha;
    r["min_gain"] = sol.min_gain;
    r["total_power"] = total_power(sol);
    const auto rx = o.receiver == conic::Receiver::TypeII ? ReceiverType::TypeII : ReceiverType::TypeI;
    json sinrs = json::array();
    for (int i = 0; i < sol.num_users(); ++i) sinrs.push_back(sinr(rx, spec.channels, sol, i));
    r["sinr"] = sinrs;
    json beams = json::array();
    for (const auto& t : sol.info_beamformers) beams.push_back(cvec_json(t));
    r["info_beamformers"] = beams;
    json radar = json::array();
    for (const auto& w : radar_beamformers(sol.radar_covariance)) radar.push_back(cvec_json(w));
    r["radar_beamformers"] = radar;
    json feas;
    feas["feasible"] = o.feasibility.feasible;
    feas["max_violation"] = o.feasibility.max_violation;
    feas["tolerance"] = o.feasibility.tol;
    if (const auto* w = o.feasibility.worst()) feas["worst"] = w->name;
    r["feasibility"] = feas;
    return r;
}

// ---------------------------------------------------------------------------

int cmd_solve(const std::string& file, const std::string& design, const std::string& out_path,
              const std::string& summary) {
    const auto l = load(file);
    const Design d = design.empty() ? l.scenario.design : parse_design(design);
    const auto spec = l.scenario.problem(d, l.scenario.realize_channels(l.scenario.channels.seed));
    const auto o = run_design(spec, pipeline_options(l.scenario));
    const json rec = outcome_json(spec, o);
    Output out(out_path);
    out.stream() << rec.dump(2) << "\n";
    write_summary(summary, "solve", l, json::array({l.scenario.channels.seed}), rec);
    if (!o.solved()) std::cerr << "isac_cli: " << d.name() << ": " << solver::to_string(o.solve.status) << "\n";
    return exit_for(o);
}

std::vector<Design> sweep_designs(const Scenario& s) {
    if (!s.designs.empty()) return s.designs;
    const auto c = s.design.criterion;
    return {{c, conic::Receiver::TypeI}, {c, conic::Receiver::TypeII}, {c, conic::Receiver::NoRadar},
            {c, conic::Receiver::RadarOnly}};
}

int cmd_sweep(const std::string& file, const std::string& out_path, const std::string& summary, bool timing,
              int threads) {
    const auto l = load(file);
    const Scenario& base = l.scenario;
    if (!base.sweep) throw ConfigError("sweep: scenario has no 'sweep' section");
    const Sweep& sw = *base.sweep;
    const auto designs = sweep_designs(base);
    const int points = static_cast<int>(sw.values.size());
    const int reals = sw.realizations;
    const int nd = static_cast<int>(designs.size());

    std::vector<Scenario> at;
    for (double v : sw.values) at.push_back(base.at(sw.variable, v));

    // Realization r uses the same channel seed at every sweep point.
    std::vector<std::uint64_t> seeds(reals);
    for (int r = 0; r < reals; ++r) seeds[r] = derive_seed(base.channels.seed, {static_cast<std::uint64_t>(r)});

    struct Cell {
        solver::Status status = solver::Status::Numerical;
        bool solved = false, tight = false;
        double objective = 0.0, seconds = 0.0;
    };
    std::vector<Cell> cells(static_cast<std::size_t>(points) * reals * nd);
    std::atomic<int> next{0};
    const int tasks = points * reals;
    const int workers = std::max(1, std::min(tasks, threads > 0 ? threads
                                                               : static_cast<int>(std::thread::hardware_concurrency())));
    std::vector<std::future<void>> jobs;
    for (int w = 0; w < workers; ++w) {
        jobs.push_back(std::async(std::launch::async, [&] {
            for (int task = next++; task < tasks; task = next++) {
                const int p = task / reals, r = task % reals;
                const auto chans = at[p].realize_channels(seeds[r]);
                for (int d = 0; d < nd; ++d) {
                    Cell& c = cells[(static_cast<std::size_t>(p) * reals + r) * nd + d];
                    try {
                        const auto o = run_design(at[p].problem(designs[d], chans), pipeline_options(at[p]));
                        c.status = o.solve.status;
                        c.solved = o.solved();
                        c.tight = o.tight;
                        c.objective = o.sdr_objective;
                        c.seconds = o.solve.solve_seconds;
                    } catch (const NumericalError&) {
                        c.status = solver::Status::Numerical;
                    }
                }
            }
        }));
    }
    for (auto& j : jobs) j.get();

    Output out(out_path);
    auto& os = out.stream();
    os << "variable,value,design,realizations,solved,infeasible,failed,mean_objective,std_objective,tightness_rate";
    if (timing) os << ",mean_solve_seconds";
    os << "\n";
    int total_solved = 0, total_infeasible = 0, total_failed = 0;
    json rows = json::array();
    for (int p = 0; p < points; ++p) {
        for (int d = 0; d < nd; ++d) {
            int solved = 0, infeasible = 0, failed = 0, tight = 0;
            double sum = 0.0, secs = 0.0;
            std::vector<double> vals;
            for (int r = 0; r < reals; ++r) {
                const Cell& c = cells[(static_cast<std::size_t>(p) * reals + r) * nd + d];
                secs += c.seconds;
                if (c.solved) {
                    ++solved;
                    tight += c.tight;
                    sum += c.objective;
                    vals.push_back(c.objective);
                } else if (c.status == solver::Status::PrimalInfeasible) {
                    ++infeasible;
                } else {
                    ++failed;
                }
            }
            const double mean = solved ? sum / solved : std::nan("");
            double var = 0.0;
            for (double v : vals) var += (v - mean) * (v - mean);
            const double sd = solved > 1 ? std::sqrt(var / (solved - 1)) : (solved == 1 ? 0.0 : std::nan(""));
            const double rate = solved ? static_cast<double>(tight) / solved : std::nan("");
            os << to_string(sw.variable) << "," << num(sw.values[p]) << "," << designs[d].name() << "," << reals << ","
               << solved << "," << infeasible << "," << failed << "," << num(mean) << "," << num(sd) << ","
               << num(rate);
            if (timing) os << "," << num(secs / reals);
            os << "\n";
            total_solved += solved;
            total_infeasible += infeasible;
            total_failed += failed;
        }
    }
    json seeds_json = seeds;
    write_summary(summary, "sweep", l, seeds_json,
                  {{"points", points},
                   {"realizations", reals},
                   {"solved", total_solved},
                   {"infeasible", total_infeasible},
                   {"failed", total_failed}});
    if (total_solved > 0) return kOk;
    return total_failed > 0 ? kNumerical : kInfeasible;
}

int cmd_beampattern(const std::string& file, const std::string& out_path, const std::string& summary) {
    const auto l = load(file);
    const Scenario& s = l.scenario;
    const std::vector<Design> designs = s.designs.empty() ? std::vector<Design>{s.design} : s.designs;
    const auto chans = s.realize_channels(s.channels.seed);
    const auto grid = uniform_angle_grid(s.grid_points);
    const UlaConfig ula = s.ula();

    Output out(out_path);
    auto& os = out.stream();
    os << "theta_rad,theta_deg,design,total,R_d";
    for (int k = 1; k <= s.num_users; ++k) os << ",T" << k;
    os << "\n";
    int code = kOk;
    json results = json::array();
    for (const auto& d : designs) {
        const auto spec = s.problem(d, chans);
        const auto o = run_design(spec, pipeline_options(s));
        results.push_back({{"design", d.name()}, {"status", solver::to_string(o.solve.status)}});
        if (!o.solved()) {
            std::cerr << "isac_cli: " << d.name() << ": " << solver::to_string(o.solve.status) << "\n";
            code = std::max(code, exit_for(o));
            continue;
        }
        const auto& sol = *o.recovered;
        const CMat total = aggregate_covariance(sol);
        for (double th : grid) {
            const CVec a = steering_vector(ula, th);
            os << num(th) << "," << num(rad_to_deg(th)) << "," << d.name() << "," << num(quad_form(a, total)) << ","
               << num(quad_form(a, sol.radar_covariance));
            for (int k = 0; k < s.num_users; ++k) {
                // Radar-only designs have no information beams.
                os << "," << num(k < sol.num_users() ? std::norm(a.dot(sol.info_beamformers[k])) : 0.0);
            }
            os << "\n";
        }
    }
    write_summary(summary, "beampattern", l, json::array({s.channels.seed}), results);
    return code;
}

int cmd_dump(const std::string& file, const std::string& design, const std::string& out_path,
             const std::string& summary) {
    const auto l = load(file);
    const Design d = design.empty() ? l.scenario.design : parse_design(design);
    const auto prog = conic::build(l.scenario.problem(d, l.scenario.realize_channels(l.scenario.channels.seed)));
    Output out(out_path);
    conic::dump(prog, out.stream());
    write_summary(summary, "dump", l, json::array({l.scenario.channels.seed}),
                  {{"design", d.name()}, {"rows", prog.num_rows()}, {"vars", prog.num_vars}});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint information/radar transmit beamforming for ISAC with a uniform linear array"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ISAC_VERSION);

    std::string file, out_path, summary, design;
    bool timing = false;
    int threads = 0;
    auto common = [&](CLI::App* sub) {
        sub->add_option("scenario", file, "Scenario JSON file")->required();
        sub->add_option("--out,-o", out_path, "Output file (default: stdout)");
        sub->add_option("--summary", summary, "Write a JSON run summary to this file");
    };
    auto* solve = app.add_subcommand("solve", "Solve one design end-to-end and print the result record");
    common(solve);
    solve->add_option("--design", design, "Override the design, e.g. maxmin:type2");
    auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep over the scenario's sweep variable (CSV)");
    common(sweep);
    sweep->add_flag("--timing", timing, "Add a mean_solve_seconds column (not reproducible)");
    sweep->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    auto* pattern = app.add_subcommand("beampattern", "Per-angle gains of the total, R_d and each T_k (CSV)");
    common(pattern);
    auto* dump = app.add_subcommand("dump", "Write the cone program in the plain-text dump format");
    common(dump);
    dump->add_option("--design", design, "Override the design, e.g. maxmin:type2");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kConfig;
    }

    try {
        if (*solve) return cmd_solve(file, design, out_path, summary);
        if (*sweep) return cmd_sweep(file, out_path, summary, timing, threads);
        if (*pattern) return cmd_beampattern(file, out_path, summary);
        if (*dump) return cmd_dump(file, design, out_path, summary);
    } catch (const ConfigError& e) {
        std::cerr << "isac_cli: " << e.what() << "\n";
        return kConfig;
    } catch (const ContractError& e) {
        std::cerr << "isac_cli: " << e.what() << "\n";
        return kConfig;
    } catch (const DomainError& e) {
        std::cerr << "isac_cli: " << e.what() << "\n";
        return kConfig;
    } catch (const std::exception& e) {
        std::cerr << "isac_cli: numerical failure: " << e.what() << "\n";
        return kNumerical;
    }
    return kConfig;
}
