// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
//
// Python bindings for the main operations: fixtures, parsing, synthesis,
// certificate checking and exact simulation. Rationals cross the boundary
// as canonical "p/q" strings; certificates as their JSON text form.
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "distinv/certificate.hpp"
#include "distinv/model.hpp"
#include "distinv/synth.hpp"

namespace py = pybind11;
using namespace distinv;
using model::StrategyMode;
using model::SynthesisProblem;

namespace {

std::string mode_str(StrategyMode m) {
    return m == StrategyMode::Memoryless ? "memless" : "dist";
}

StrategyMode mode_from(const std::string& s) {
    if (s == "memless" || s == "memoryless") {
        return StrategyMode::Memoryless;
    }
    if (s == "dist" || s == "distribution") {
        return StrategyMode::Distribution;
    }
    throw ParseError("unknown strategy mode: " + s);
}

solver::SolverConfig config(double timeout) {
    auto cfg = solver::default_solver_config();
    cfg.timeout_secs = timeout;
    return cfg;
}

std::vector<std::vector<std::string>> dist_rows(const std::vector<model::StateDist>& stream) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& mu : stream) {
        std::vector<std::string> row;
        for (const auto& v : mu.p) {
            row.push_back(rat_str(v));
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

const char* outcome_str(solver::SolveOutcome::Kind k) {
    using Kind = solver::SolveOutcome::Kind;
    switch (k) {
        case Kind::Sat: return "sat";
        case Kind::Unsat: return "unsat";
        case Kind::Timeout: return "timeout";
        case Kind::SolverError: return "error";
        default: return "unknown";
    }
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "exact synthesis of affine distribution invariants for MDPs";

    py::register_exception<ParseError>(m, "ParseError");
    py::register_exception<certificate::SimulationError>(m, "SimulationError");

    py::class_<SynthesisProblem>(m, "Problem")
        .def_readwrite("invariant_size", &SynthesisProblem::invariant_size)
        .def_readwrite("handelman_degree", &SynthesisProblem::handelman_degree)
        .def_readwrite("unroll", &SynthesisProblem::unroll)
        .def_property(
            "mode", [](const SynthesisProblem& p) { return mode_str(p.mode); },
            [](SynthesisProblem& p, const std::string& s) { p.mode = mode_from(s); })
        .def_property_readonly("states",
                               [](const SynthesisProblem& p) { return p.mdp.states; })
        .def_property_readonly("actions",
                               [](const SynthesisProblem& p) { return p.mdp.actions; })
        .def("clear_hints", [](SynthesisProblem& p) { p.hints.clear(); })
        .def("__str__", &model::print_problem);

    m.def("fixture", [](const std::string& name) { return model::builtin_fixture(name); },
          "Built-in benchmark: running-ex1, running-ex2, chain or split.");
    m.def("parse_problem", &model::parse_problem);

    m.def(
        "synthesize",
        [](const SynthesisProblem& prob, double timeout, bool strengthen) {
            synth::Options opt;
            opt.strengthen = strengthen;
            opt.solver = config(timeout);
            auto res = synth::synthesize(prob, opt);
            py::dict out;
            out["status"] = outcome_str(res.kind);
            out["detail"] = res.detail;
            out["num_variables"] = res.num_variables;
            out["num_constraints"] = res.num_constraints;
            out["certificate"] =
                res.cert ? py::object(py::str(certificate::print_certificate(*res.cert, prob.mdp)))
                         : py::object(py::none());
            return out;
        },
        py::arg("problem"), py::arg("timeout") = 300.0, py::arg("strengthen") = true);

    m.def(
        "check",
        [](const SynthesisProblem& prob, const std::string& cert_json, double timeout,
           int horizon) {
            auto cert = certificate::parse_certificate(cert_json, prob.mdp);
            auto report = certificate::check(prob.mdp, prob.safe, cert, config(timeout), horizon);
            py::dict out;
            out["all_pass"] = report.all_pass();
            out["report"] = report.json();
            return out;
        },
        py::arg("problem"), py::arg("certificate"), py::arg("timeout") = 60.0,
        py::arg("horizon") = 25);

    m.def(
        "simulate",
        [](const SynthesisProblem& prob, const std::string& cert_json, int horizon) {
            auto cert = certificate::parse_certificate(cert_json, prob.mdp);
            return dist_rows(certificate::simulate(prob.mdp, cert.strategy, cert.initial, horizon));
        },
        py::arg("problem"), py::arg("certificate"), py::arg("horizon") = 25,
        "Exact distribution stream mu_0..mu_horizon; entries are 'p/q' strings.");
}
