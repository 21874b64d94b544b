// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
//
// distinv: synthesize and independently verify affine inductive
// distributional invariants for MDP safety objectives.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "distinv/certificate.hpp"
#include "distinv/synth.hpp"

namespace {

using distinv::ParseError;
using distinv::Rat;
using distinv::rat_str;
namespace model = distinv::model;
namespace certificate = distinv::certificate;
namespace constraints = distinv::constraints;
namespace qelim = distinv::qelim;
namespace solver = distinv::solver;
namespace synth = distinv::synth;
using nlohmann::ordered_json;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open file: " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw ParseError("cannot write file: " + path);
    }
    out << content;
}

/// A problem argument is a file path or a builtin fixture name.
model::SynthesisProblem load_problem(const std::string& arg) {
    if (std::filesystem::exists(arg)) {
        return model::parse_problem(slurp(arg));
    }
    try {
        return model::builtin_fixture(arg);
    } catch (const ParseError&) {
        throw ParseError("no such file or builtin fixture: " + arg);
    }
}

struct ProblemFlags {
    std::string mode;       // "", "memless", "dist"
    int ni = -1;
    int k = -1;
    int unroll = -1;
    bool initial_free = false;
    std::string initial_constraints_file;
    std::string hints_file;
    std::string strengthen = "on";

    void add_to(CLI::App* cmd) {
        cmd->add_option("--mode", mode, "strategy mode: memless | dist")
            ->check(CLI::IsMember({"memless", "dist"}));
        cmd->add_option("--ni", ni, "invariant template size N_I");
        cmd->add_option("--k", k, "Handelman product-degree cap K (dist mode)");
        cmd->add_option("--unroll", unroll, "exact unrolled prefix length");
        cmd->add_flag("--initial", initial_free,
                      "treat the initial distribution as existential (--initial free)");
        cmd->add_option("--initial-constraints", initial_constraints_file,
                        "JSON file of affine constraints on the initial distribution");
        cmd->add_option("--hints", hints_file,
                        "JSON file mapping template variable names to fixed values");
        cmd->add_option("--strengthen", strengthen,
                        "add the safe set to the inductiveness antecedent (on | off)")
            ->check(CLI::IsMember({"on", "off"}));
    }

    void apply(model::SynthesisProblem& prob) const {
        if (!mode.empty()) {
            auto m = mode == "dist" ? model::StrategyMode::Distribution
                                    : model::StrategyMode::Memoryless;
            if (m != prob.mode && !prob.hints.empty()) {
                std::cerr << "note: dropping hints (they name variables of the "
                          << (prob.mode == model::StrategyMode::Distribution ? "dist"
                                                                             : "memless")
                          << " templates)\n";
                prob.hints.clear();
            }
            prob.mode = m;
        }
        if (ni >= 0) {
            prob.invariant_size = ni;
        }
        if (k >= 0) {
            prob.handelman_degree = k;
        }
        if (unroll >= 0) {
            prob.unroll = unroll;
        }
        if (initial_free) {
            prob.initial.kind = model::InitialSpec::Kind::Free;
            prob.initial.fixed.reset();
        }
        if (!initial_constraints_file.empty()) {
            nlohmann::json j = nlohmann::json::parse(slurp(initial_constraints_file));
            prob.initial.kind = model::InitialSpec::Kind::Constrained;
            prob.initial.fixed.reset();
            prob.initial.constraints.clear();
            for (const auto& c : j) {
                model::AffineInequality ineq;
                ineq.expr.constant =
                    c.contains("const")
                        ? distinv::parse_rat(c.at("const").is_string()
                                                 ? c.at("const").get<std::string>()
                                                 : c.at("const").dump())
                        : Rat(0);
                ineq.expr.coeffs.assign(prob.mdp.states.size(), Rat(0));
                for (const auto& [state, coeff] : c.at("coeffs").items()) {
                    int si = prob.mdp.state_index(state);
                    if (si < 0) {
                        throw ParseError("unknown state in initial constraint: " + state);
                    }
                    ineq.expr.coeffs[si] = distinv::parse_rat(
                        coeff.is_string() ? coeff.get<std::string>() : coeff.dump());
                }
                std::string rel = c.value("rel", ">=");
                if (rel == ">=") {
                    ineq.rel = model::Rel::Geq;
                } else if (rel == "=") {
                    ineq.rel = model::Rel::Eq;
                } else {
                    throw ParseError("unknown relation in initial constraint: " + rel);
                }
                prob.initial.constraints.push_back(std::move(ineq));
            }
        }
        if (!hints_file.empty()) {
            nlohmann::json j = nlohmann::json::parse(slurp(hints_file));
            for (const auto& [name, value] : j.items()) {
                prob.hints[name] = distinv::parse_rat(
                    value.is_string() ? value.get<std::string>() : value.dump());
            }
        }
    }
};

struct SolverFlags {
    std::vector<std::string> commands;
    double timeout_secs = 300;

    void add_to(CLI::App* cmd) {
        cmd->add_option("--solver-cmd", commands,
                        "solver command line (repeatable; portfolio if several)");
        cmd->add_option("--timeout-secs", timeout_secs, "per-query solver timeout");
    }

    solver::SolverConfig config() const {
        solver::SolverConfig cfg;
        for (const auto& line : commands) {
            solver::SolverCommand cmd;
            std::istringstream words(line);
            std::string w;
            while (words >> w) {
                cmd.argv.push_back(w);
            }
            if (!cmd.argv.empty()) {
                cfg.commands.push_back(std::move(cmd));
            }
        }
        if (cfg.commands.empty()) {
            cfg = solver::default_solver_config();
        }
        cfg.timeout_secs = timeout_secs;
        return cfg;
    }
};

ordered_json config_json(const model::SynthesisProblem& prob, bool strengthen,
                         const solver::SolverConfig& cfg) {
    ordered_json j;
    j["mode"] = prob.mode == model::StrategyMode::Memoryless ? "memless" : "dist";
    j["ni"] = prob.invariant_size;
    j["k"] = prob.handelman_degree;
    j["unroll"] = prob.unroll;
    j["strengthen"] = strengthen;
    ordered_json solvers = ordered_json::array();
    for (const auto& cmd : cfg.commands) {
        solvers.push_back(cmd.argv);
    }
    j["solver"] = std::move(solvers);
    j["timeout_secs"] = cfg.timeout_secs;
    return j;
}

const char* kind_str(solver::SolveOutcome::Kind k) {
    switch (k) {
        case solver::SolveOutcome::Kind::Sat:
            return "sat";
        case solver::SolveOutcome::Kind::Unsat:
            return "unsat";
        case solver::SolveOutcome::Kind::Unknown:
            return "unknown";
        case solver::SolveOutcome::Kind::Timeout:
            return "timeout";
        case solver::SolveOutcome::Kind::SolverError:
            return "solver-error";
    }
    return "?";
}

int cmd_synth(const std::string& problem_arg, const ProblemFlags& pf, const SolverFlags& sf,
              int ni_max, bool fixpoint, bool no_check, const std::string& emit_smt_path,
              const std::string& out_path, bool json_out) {
    model::SynthesisProblem prob = load_problem(problem_arg);
    pf.apply(prob);

    synth::Options opt;
    opt.strengthen = pf.strengthen != "off";
    opt.solver = sf.config();
    if (opt.solver.commands.empty()) {
        std::cerr << "error: no SMT solver found (set DISTINV_SOLVER, pass --solver-cmd, or "
                     "run `npm install` in solvers/z3wasm)\n";
        return 2;
    }

    int ni_cap = ni_max >= 0 ? ni_max : prob.invariant_size;
    synth::Result res;
    for (int ni = prob.invariant_size;; ++ni) {
        prob.invariant_size = ni;
        res = fixpoint ? synth::synthesize_fixpoint(prob, opt) : synth::synthesize(prob, opt);
        if (res.kind != solver::SolveOutcome::Kind::Unsat || ni >= ni_cap || fixpoint) {
            break;
        }
        std::cerr << "note: N_I=" << ni << " unsat, retrying with N_I=" << ni + 1 << "\n";
    }
    if (!emit_smt_path.empty()) {
        spit(emit_smt_path, res.smt_script);
    }

    ordered_json report;
    report["config"] = config_json(prob, opt.strengthen, opt.solver);
    report["fixpoint"] = fixpoint;
    report["variables"] = res.num_variables;
    report["constraints"] = res.num_constraints;
    report["verdict"] = kind_str(res.kind);
    if (!res.detail.empty()) {
        report["detail"] = res.detail;
    }
    report["build_secs"] = res.build_secs;
    report["solve_secs"] = res.solve_secs;

    int exit_code = 2;
    double check_secs = 0;
    if (res.kind == solver::SolveOutcome::Kind::Sat) {
        std::string cert_text = certificate::print_certificate(*res.cert, prob.mdp);
        spit(out_path, cert_text);
        report["certificate"] = out_path;
        exit_code = 0;
        if (!no_check) {
            auto t0 = std::chrono::steady_clock::now();
            certificate::CheckReport cr =
                certificate::check(prob.mdp, prob.safe, *res.cert, opt.solver);
            check_secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                             .count();
            report["check"] = nlohmann::ordered_json::parse(cr.json());
            if (!cr.all_pass()) {
                // must never happen: the emitted system was satisfied
                std::cerr << "internal error: synthesized certificate rejected by the "
                             "independent checker\n"
                          << cr.str(prob.mdp);
                exit_code = 4;
            }
        }
    } else if (res.kind == solver::SolveOutcome::Kind::Unsat) {
        exit_code = 1;
    }
    report["check_secs"] = check_secs;

    if (json_out) {
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << "verdict:     " << kind_str(res.kind) << "\n";
        std::cout << "variables:   " << res.num_variables << "\n";
        std::cout << "constraints: " << res.num_constraints << "\n";
        std::cout << "build:       " << res.build_secs << " s\n";
        std::cout << "solve:       " << res.solve_secs << " s\n";
        if (exit_code == 0) {
            std::cout << "certificate: " << out_path
                      << (no_check ? " (unchecked)" : " (verified by independent checker, " +
                                                          std::to_string(check_secs) + " s)")
                      << "\n";
        } else if (!res.detail.empty()) {
            std::cout << "detail:      " << res.detail << "\n";
        }
    }
    return exit_code;
}

int cmd_check(const std::string& problem_arg, const std::string& cert_path,
              const SolverFlags& sf, bool json_out) {
    model::SynthesisProblem prob = load_problem(problem_arg);
    certificate::Certificate cert = certificate::parse_certificate(slurp(cert_path), prob.mdp);
    solver::SolverConfig cfg = sf.config();
    certificate::CheckReport report = certificate::check(prob.mdp, prob.safe, cert, cfg);
    if (json_out) {
        std::cout << report.json();
    } else {
        std::cout << report.str(prob.mdp);
    }
    if (report.all_pass()) {
        return 0;
    }
    auto failed = [](const certificate::Verdict& v) {
        return v.kind == certificate::Verdict::Kind::Fail;
    };
    if (failed(report.initial_membership) || failed(report.invariant_in_safe) ||
        failed(report.strategy_wellformed) || failed(report.inductiveness) ||
        failed(report.simulation)) {
        return 1;
    }
    return 2;
}

int cmd_simulate(const std::string& problem_arg, const std::string& strat_path, int horizon,
                 const std::string& csv_path, bool json_out) {
    model::SynthesisProblem prob = load_problem(problem_arg);
    certificate::Strategy strat;  // monostate: Markov chain
    std::optional<model::StateDist> initial;
    if (!strat_path.empty()) {
        certificate::Certificate cert =
            certificate::parse_certificate(slurp(strat_path), prob.mdp);
        strat = cert.strategy;
        initial = cert.initial;
    }
    if (prob.initial.kind == model::InitialSpec::Kind::Fixed) {
        initial = *prob.initial.fixed;  // the problem's mu_0 wins
    }
    if (!initial) {
        throw ParseError("no initial distribution: the problem's initial is not fixed and no "
                         "certificate was given");
    }
    auto stream = certificate::simulate(prob.mdp, strat, *initial, horizon);

    std::optional<std::pair<int, model::StateDist>> violation;
    for (size_t t = 0; t < stream.size(); ++t) {
        if (!prob.safe.member(stream[t])) {
            violation = {int(t), stream[t]};
            break;
        }
    }

    std::ostringstream csv;
    csv << "step";
    for (const auto& s : prob.mdp.states) {
        csv << "," << s;
    }
    csv << ",in_safe\n";
    for (size_t t = 0; t < stream.size(); ++t) {
        csv << t;
        for (const auto& p : stream[t].p) {
            csv << "," << rat_str(p);
        }
        csv << "," << (prob.safe.member(stream[t]) ? 1 : 0) << "\n";
    }
    if (!csv_path.empty()) {
        spit(csv_path, csv.str());
    }

    if (json_out) {
        ordered_json j;
        ordered_json rows = ordered_json::array();
        for (const auto& mu : stream) {
            ordered_json row = ordered_json::array();
            for (const auto& p : mu.p) {
                row.push_back(rat_str(p));
            }
            rows.push_back(std::move(row));
        }
        j["states"] = prob.mdp.states;
        j["trace"] = std::move(rows);
        if (violation) {
            j["violated_at"] = violation->first;
        }
        std::cout << j.dump(2) << "\n";
    } else {
        std::cout << csv.str();
        if (violation) {
            std::cout << "safe set violated at step " << violation->first << "\n";
        } else {
            std::cout << "stayed in the safe set for " << horizon << " steps\n";
        }
    }
    return violation ? 1 : 0;
}

int cmd_dump(const std::string& problem_arg, const ProblemFlags& pf, const std::string& stage) {
    model::SynthesisProblem prob = load_problem(problem_arg);
    pf.apply(prob);
    constraints::TemplateSet tpl = constraints::make_templates(prob);
    constraints::ConstraintSystem sys =
        constraints::build_system(prob, tpl, pf.strengthen != "off");
    if (stage == "step2") {
        std::cout << sys.dump();
        return 0;
    }
    qelim::ExistentialSystem esys = qelim::eliminate_all(sys, prob.handelman_degree);
    if (stage == "step3") {
        std::cout << esys.dump();
    } else {
        std::cout << solver::emit_smt(solver::presolve(esys).sys, "QF_NRA");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affine inductive distributional invariants for MDP safety: synthesis, "
                 "independent checking, exact simulation"};
    app.require_subcommand(1);

    // synth
    auto* synth_cmd = app.add_subcommand(
        "synth", "synthesize an invariant + strategy certificate for a problem");
    std::string problem_arg, out_path = "cert.json", emit_smt_path;
    int ni_max = -1;
    bool fixpoint = false, no_check = false, json_out = false;
    ProblemFlags pf;
    SolverFlags sf;
    synth_cmd->add_option("problem", problem_arg, "problem file or builtin fixture name")
        ->required();
    pf.add_to(synth_cmd);
    sf.add_to(synth_cmd);
    synth_cmd->add_option("--ni-max", ni_max, "retry with larger N_I up to this cap");
    synth_cmd->add_flag("--fixpoint", fixpoint,
                        "find a safe fixpoint distribution (use with --ni 0)");
    synth_cmd->add_flag("--no-check", no_check, "skip the independent checker");
    synth_cmd->add_option("--emit-smt", emit_smt_path, "write the SMT-LIB2 script here");
    synth_cmd->add_option("-o,--out", out_path, "certificate output path");
    synth_cmd->add_flag("--json", json_out, "machine-readable report on stdout");

    // check
    auto* check_cmd =
        app.add_subcommand("check", "independently verify a certificate against a problem");
    std::string check_problem, check_cert;
    bool check_json = false;
    SolverFlags check_sf;
    check_cmd->add_option("problem", check_problem, "problem file or fixture")->required();
    check_cmd->add_option("certificate", check_cert, "certificate file")->required();
    check_sf.add_to(check_cmd);
    check_cmd->add_flag("--json", check_json, "machine-readable report");

    // simulate
    auto* sim_cmd = app.add_subcommand(
        "simulate", "exact distribution stream under a strategy; flags safe-set violations");
    std::string sim_problem, sim_strat, sim_csv;
    int horizon = 20;
    bool sim_json = false;
    sim_cmd->add_option("problem", sim_problem, "problem file or fixture")->required();
    sim_cmd->add_option("certificate", sim_strat,
                        "certificate file providing the strategy (optional for Markov chains)");
    sim_cmd->add_option("--horizon", horizon, "number of steps");
    sim_cmd->add_option("--csv", sim_csv, "write the trace as CSV");
    sim_cmd->add_flag("--json", sim_json, "machine-readable trace");

    // dump
    auto* dump_cmd =
        app.add_subcommand("dump", "print an intermediate representation of the pipeline");
    std::string dump_problem, stage = "step2";
    ProblemFlags dump_pf;
    dump_cmd->add_option("problem", dump_problem, "problem file or fixture")->required();
    dump_cmd->add_option("--stage", stage, "step2 | step3 | smt")
        ->check(CLI::IsMember({"step2", "step3", "smt"}));
    dump_pf.add_to(dump_cmd);

    // fixture
    auto* fix_cmd = app.add_subcommand("fixture", "print a builtin fixture as a problem file");
    std::string fixture_name;
    fix_cmd->add_option("name", fixture_name, "running | running-ex2 | chain | split")
        ->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (synth_cmd->parsed()) {
            return cmd_synth(problem_arg, pf, sf, ni_max, fixpoint, no_check, emit_smt_path,
                             out_path, json_out);
        }
        if (check_cmd->parsed()) {
            return cmd_check(check_problem, check_cert, check_sf, check_json);
        }
        if (sim_cmd->parsed()) {
            return cmd_simulate(sim_problem, sim_strat, horizon, sim_csv, sim_json);
        }
        if (dump_cmd->parsed()) {
            return cmd_dump(dump_problem, dump_pf, stage);
        }
        if (fix_cmd->parsed()) {
            std::cout << model::print_problem(model::builtin_fixture(fixture_name));
            return 0;
        }
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const certificate::SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
    return 3;
}
