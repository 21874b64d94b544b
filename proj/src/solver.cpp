// Copyright (c) distinv contributors.
// SPDX-License-Identifier: Apache-2.0
#include "distinv/solver.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cctype>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

namespace distinv::solver {

using distinv::ParseError;
using ring::Monomial;

std::string smt_rat(const Rat& r) {
    if (r < 0) {
        return "(- " + smt_rat(Rat(-r)) + ")";
    }
    if (r.get_den() == 1) {
        return r.get_num().get_str();
    }
    return "(/ " + r.get_num().get_str() + " " + r.get_den().get_str() + ")";
}

std::string smt_poly(const Polynomial& p) {
    if (p.is_zero()) {
        return "0";
    }
    std::vector<std::string> terms;
    for (const auto& [mono, coeff] : p.terms()) {
        std::vector<std::string> factors;
        if (coeff != 1 || mono.empty()) {
            factors.push_back(smt_rat(coeff));
        }
        for (const auto& [v, e] : mono) {
            for (int i = 0; i < e; ++i) {
                factors.push_back(ring::var_name(v));
            }
        }
        if (factors.size() == 1) {
            terms.push_back(factors.front());
        } else {
            std::string t = "(*";
            for (const auto& f : factors) {
                t += " " + f;
            }
            terms.push_back(t + ")");
        }
    }
    if (terms.size() == 1) {
        return terms.front();
    }
    std::string s = "(+";
    for (const auto& t : terms) {
        s += " " + t;
    }
    return s + ")";
}

std::string emit_smt(const ExistentialSystem& sys, const std::string& logic) {
    std::ostringstream out;
    out << "(set-option :produce-models true)\n";
    out << "(set-logic " << logic << ")\n";
    for (const auto& v : sys.variables) {
        out << "(declare-const " << ring::var_name(v) << " Real)\n";
    }
    for (const auto& c : sys.constraints) {
        out << "(assert (" << (c.rel == qelim::GroundRel::Eq ? "=" : ">=") << " "
            << smt_poly(c.poly) << " 0))\n";
    }
    out << "(check-sat)\n";
    if (!sys.variables.empty()) {
        out << "(get-value (";
        bool first = true;
        for (const auto& v : sys.variables) {
            if (!first) {
                out << " ";
            }
            first = false;
            out << ring::var_name(v);
        }
        out << "))\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// s-expression parsing of solver responses

namespace {

struct Sexpr {
    bool is_atom = true;
    std::string atom;
    std::vector<Sexpr> items;
};

std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == '(' || c == ')') {
            tokens.push_back(std::string(1, c));
            ++i;
        } else if (c == '"') {
            size_t j = i + 1;
            while (j < text.size() && text[j] != '"') {
                ++j;
            }
            tokens.push_back(text.substr(i, j + 1 - i));
            i = j + 1;
        } else {
            size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) &&
                   text[j] != '(' && text[j] != ')') {
                ++j;
            }
            tokens.push_back(text.substr(i, j - i));
            i = j;
        }
    }
    return tokens;
}

Sexpr parse_sexpr(const std::vector<std::string>& tokens, size_t& pos) {
    if (pos >= tokens.size()) {
        throw ParseError("malformed s-expression: unexpected end of input");
    }
    if (tokens[pos] == "(") {
        Sexpr list;
        list.is_atom = false;
        ++pos;
        while (pos < tokens.size() && tokens[pos] != ")") {
            list.items.push_back(parse_sexpr(tokens, pos));
        }
        if (pos >= tokens.size()) {
            throw ParseError("malformed s-expression: missing )");
        }
        ++pos;  // consume )
        return list;
    }
    if (tokens[pos] == ")") {
        throw ParseError("malformed s-expression: unexpected )");
    }
    Sexpr atom;
    atom.atom = tokens[pos++];
    return atom;
}

bool looks_numeric(const std::string& s) {
    if (s.empty()) {
        return false;
    }
    size_t start = (s[0] == '-' || s[0] == '+') ? 1 : 0;
    if (start == s.size()) {
        return false;
    }
    for (size_t i = start; i < s.size(); ++i) {
        if (!std::isdigit(static_cast<unsigned char>(s[i])) && s[i] != '.' && s[i] != '/') {
            return false;
        }
    }
    return true;
}

std::optional<Rat> value_of(const Sexpr& e) {
    if (e.is_atom) {
        if (!looks_numeric(e.atom)) {
            throw ParseError("malformed value: " + e.atom);
        }
        return parse_rat(e.atom);
    }
    if (e.items.empty()) {
        throw ParseError("malformed value: empty list");
    }
    const Sexpr& head = e.items.front();
    if (head.is_atom && head.atom == "-" && e.items.size() == 2) {
        auto v = value_of(e.items[1]);
        if (!v) {
            return std::nullopt;
        }
        return Rat(-*v);
    }
    if (head.is_atom && head.atom == "/" && e.items.size() == 3) {
        auto num = value_of(e.items[1]);
        auto den = value_of(e.items[2]);
        if (!num || !den) {
            return std::nullopt;
        }
        if (*den == 0) {
            throw ParseError("malformed value: division by zero");
        }
        return Rat(*num / *den);
    }
    // root-obj and friends: well-formed but not rational
    return std::nullopt;
}

}  // namespace

std::optional<Rat> parse_value(const std::string& sexpr) {
    auto tokens = tokenize(sexpr);
    size_t pos = 0;
    Sexpr e = parse_sexpr(tokens, pos);
    if (pos != tokens.size()) {
        throw ParseError("malformed value: trailing tokens");
    }
    return value_of(e);
}

// ---------------------------------------------------------------------------
// subprocess management

namespace {

struct ProcResult {
    int exit_code = -1;
    bool timed_out = false;
    std::string out;
    std::string err;
};

class Subprocess {
public:
    Subprocess() = default;

    ProcResult run(const std::vector<std::string>& argv, double timeout_secs) {
        ProcResult result;
        int out_pipe[2];
        int err_pipe[2];
        if (pipe(out_pipe) != 0 || pipe(err_pipe) != 0) {
            result.err = "pipe failed";
            return result;
        }
        pid_t child = fork();
        if (child < 0) {
            result.err = "fork failed";
            return result;
        }
        if (child == 0) {
            setpgid(0, 0);
            dup2(out_pipe[1], STDOUT_FILENO);
            dup2(err_pipe[1], STDERR_FILENO);
            close(out_pipe[0]);
            close(out_pipe[1]);
            close(err_pipe[0]);
            close(err_pipe[1]);
            std::vector<char*> args;
            for (const auto& a : argv) {
                args.push_back(const_cast<char*>(a.c_str()));
            }
            args.push_back(nullptr);
            execvp(args[0], args.data());
            fprintf(stderr, "exec failed: %s: %s\n", args[0], strerror(errno));
            _exit(127);
        }
        close(out_pipe[1]);
        close(err_pipe[1]);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            pid_ = child;
        }

        auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::milliseconds(int64_t(timeout_secs * 1000));
        struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
        bool open_fds[2] = {true, true};
        std::string* sinks[2] = {&result.out, &result.err};
        char buf[4096];
        while (open_fds[0] || open_fds[1]) {
            auto now = std::chrono::steady_clock::now();
            if (now >= deadline || cancelled_.load()) {
                result.timed_out = now >= deadline;
                kill_group(child);
                break;
            }
            int wait_ms = int(std::chrono::duration_cast<std::chrono::milliseconds>(
                                  deadline - now)
                                  .count());
            wait_ms = std::min(wait_ms, 100);
            int rc = poll(fds, 2, wait_ms);
            if (rc < 0) {
                break;
            }
            for (int i = 0; i < 2; ++i) {
                if (!open_fds[i] || !(fds[i].revents & (POLLIN | POLLHUP))) {
                    continue;
                }
                ssize_t n = read(fds[i].fd, buf, sizeof(buf));
                if (n > 0) {
                    sinks[i]->append(buf, size_t(n));
                } else {
                    open_fds[i] = false;
                    fds[i].fd = -1;
                }
            }
        }
        // drain anything left after a kill
        for (int i = 0; i < 2; ++i) {
            int fd = i == 0 ? out_pipe[0] : err_pipe[0];
            fcntl(fd, F_SETFL, O_NONBLOCK);
            ssize_t n;
            while ((n = read(fd, buf, sizeof(buf))) > 0) {
                sinks[i]->append(buf, size_t(n));
            }
            close(fd);
        }
        int status = 0;
        waitpid(child, &status, 0);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            pid_ = -1;
        }
        result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
        return result;
    }

    void cancel() {
        cancelled_.store(true);
        std::lock_guard<std::mutex> lock(mutex_);
        if (pid_ > 0) {
            kill_group(pid_);
        }
    }

private:
    static void kill_group(pid_t pid) {
        kill(-pid, SIGKILL);
        kill(pid, SIGKILL);
    }

    std::mutex mutex_;
    pid_t pid_ = -1;
    std::atomic<bool> cancelled_{false};
};

struct TempFile {
    std::string path;

    explicit TempFile(const std::string& content) {
        char tmpl[] = "/tmp/distinv-XXXXXX";
        int fd = mkstemp(tmpl);
        if (fd < 0) {
            throw std::runtime_error("cannot create temporary file");
        }
        path = tmpl;
        ssize_t written = write(fd, content.data(), content.size());
        close(fd);
        if (written != ssize_t(content.size())) {
            throw std::runtime_error("short write to temporary file");
        }
    }
    ~TempFile() { unlink(path.c_str()); }
    TempFile(const TempFile&) = delete;
    TempFile& operator=(const TempFile&) = delete;
};

RawResult interpret_output(const ProcResult& proc) {
    RawResult r;
    if (proc.timed_out) {
        r.kind = SolveOutcome::Kind::Timeout;
        r.detail = "solver timed out";
        return r;
    }
    // find the verdict line
    std::istringstream lines(proc.out);
    std::string line;
    std::string rest;
    bool found = false;
    while (std::getline(lines, line)) {
        std::string trimmed = line;
        while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) {
            trimmed.pop_back();
        }
        if (!found) {
            if (trimmed == "sat" || trimmed == "unsat" || trimmed == "unknown") {
                found = true;
                r.kind = trimmed == "sat"    ? SolveOutcome::Kind::Sat
                         : trimmed == "unsat" ? SolveOutcome::Kind::Unsat
                                              : SolveOutcome::Kind::Unknown;
            }
        } else {
            rest += line + "\n";
        }
    }
    if (!found) {
        r.kind = SolveOutcome::Kind::SolverError;
        r.detail = "no verdict in solver output";
        if (!proc.err.empty()) {
            r.detail += ": " + proc.err.substr(0, 500);
        } else if (!proc.out.empty()) {
            r.detail += ": " + proc.out.substr(0, 500);
        }
        return r;
    }
    if (r.kind == SolveOutcome::Kind::Sat && !rest.empty()) {
        // get-value response: ((name value) ...)
        auto tokens = tokenize(rest);
        size_t pos = 0;
        if (!tokens.empty() && tokens[0] == "(") {
            Sexpr top = parse_sexpr(tokens, pos);
            for (const auto& pair : top.items) {
                if (pair.is_atom || pair.items.size() != 2 || !pair.items[0].is_atom) {
                    throw ParseError("malformed get-value response");
                }
                r.values[pair.items[0].atom] = value_of(pair.items[1]);
            }
        }
    }
    return r;
}

bool executable_on_path(const std::string& name) {
    const char* path = getenv("PATH");
    if (!path) {
        return false;
    }
    std::istringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) {
            continue;
        }
        std::string full = dir + "/" + name;
        if (access(full.c_str(), X_OK) == 0) {
            return true;
        }
    }
    return false;
}

}  // namespace

RawResult run_script(const std::string& script, const SolverConfig& cfg) {
    if (cfg.commands.empty()) {
        RawResult r;
        r.kind = SolveOutcome::Kind::SolverError;
        r.detail = "no solver command configured";
        return r;
    }
    TempFile file(script);

    auto run_one = [&](const SolverCommand& cmd, Subprocess& proc) {
        std::vector<std::string> argv = cmd.argv;
        argv.push_back(file.path);
        return interpret_output(proc.run(argv, cfg.timeout_secs));
    };

    if (cfg.commands.size() == 1 || !cfg.portfolio) {
        RawResult best;
        best.kind = SolveOutcome::Kind::SolverError;
        best.detail = "no solver produced output";
        for (const auto& cmd : cfg.commands) {
            Subprocess proc;
            RawResult r = run_one(cmd, proc);
            if (r.kind == SolveOutcome::Kind::Sat || r.kind == SolveOutcome::Kind::Unsat) {
                return r;
            }
            if (best.kind == SolveOutcome::Kind::SolverError) {
                best = r;
            }
        }
        return best;
    }

    // Portfolio: run everything concurrently, first definitive answer wins.
    std::vector<std::unique_ptr<Subprocess>> procs;
    std::vector<RawResult> results(cfg.commands.size());
    for (size_t i = 0; i < cfg.commands.size(); ++i) {
        procs.push_back(std::make_unique<Subprocess>());
    }
    std::mutex winner_mutex;
    int winner = -1;
    std::vector<std::thread> threads;
    for (size_t i = 0; i < cfg.commands.size(); ++i) {
        threads.emplace_back([&, i]() {
            results[i] = run_one(cfg.commands[i], *procs[i]);
            if (results[i].kind == SolveOutcome::Kind::Sat ||
                results[i].kind == SolveOutcome::Kind::Unsat) {
                std::lock_guard<std::mutex> lock(winner_mutex);
                if (winner < 0) {
                    winner = int(i);
                    for (size_t j = 0; j < procs.size(); ++j) {
                        if (j != i) {
                            procs[j]->cancel();
                        }
                    }
                }
            }
        });
    }
    for (auto& t : threads) {
        t.join();
    }
    if (winner >= 0) {
        return results[winner];
    }
    // no definitive answer: prefer Unknown/Timeout over SolverError
    for (const auto& r : results) {
        if (r.kind == SolveOutcome::Kind::Unknown || r.kind == SolveOutcome::Kind::Timeout) {
            return r;
        }
    }
    return results.front();
}

Presolved presolve(const ExistentialSystem& in) {
    Presolved out;
    out.sys = in;
    auto& cs = out.sys.constraints;

    auto purely_linear = [&]() {
        // vars whose every occurrence is a singleton degree-1 monomial
        std::map<VarId, bool> lin;
        for (const auto& c : cs) {
            for (const auto& [mono, coeff] : c.poly.terms()) {
                bool singleton = mono.size() == 1 && mono.front().second == 1;
                for (const auto& [v, e] : mono) {
                    auto [it, inserted] = lin.emplace(v, singleton);
                    it->second = it->second && singleton;
                }
            }
        }
        return lin;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        auto lin = purely_linear();
        for (size_t i = 0; i < cs.size(); ++i) {
            if (cs[i].rel != qelim::GroundRel::Eq) {
                continue;
            }
            // a*v + c = 0 pins v to a constant; that substitution is safe
            // even where v occurs inside products
            bool pins_constant = true;
            for (const auto& [mono, coeff] : cs[i].poly.terms()) {
                pins_constant = pins_constant &&
                                (mono.empty() || (mono.size() == 1 && mono.front().second == 1));
            }
            pins_constant = pins_constant && cs[i].poly.vars().size() == 1;
            // largest eligible variable in this equation
            std::optional<VarId> best;
            Rat best_coeff;
            for (const auto& [mono, coeff] : cs[i].poly.terms()) {
                if (mono.size() == 1 && mono.front().second == 1) {
                    const VarId& v = mono.front().first;
                    auto it = lin.find(v);
                    bool eligible = pins_constant || (it != lin.end() && it->second);
                    if (eligible && (!best || *best < v)) {
                        best = v;
                        best_coeff = coeff;
                    }
                }
            }
            if (!best) {
                continue;
            }
            Polynomial rhs =
                (cs[i].poly - Polynomial::var(*best) * best_coeff) * (Rat(-1) / best_coeff);
            out.steps.push_back({*best, rhs, {}, {}});
            std::map<VarId, Polynomial> sigma = {{*best, rhs}};
            cs.erase(cs.begin() + long(i));
            for (auto& c : cs) {
                if (c.poly.vars().count(*best)) {
                    c.poly = c.poly.substitute(sigma);
                }
            }
            auto& vars = out.sys.variables;
            vars.erase(std::remove(vars.begin(), vars.end(), *best), vars.end());
            changed = true;
            break;  // occurrence classification is stale; recompute
        }
    }

    // one-sided Fourier-Motzkin pass: a variable confined to inequalities,
    // occurring only as a singleton degree-1 monomial and bounded from one
    // side only, makes all its rows satisfiable by pushing it far enough;
    // those rows are simply dropped. (Two-sided elimination is exact too
    // but emits cross rows, which has proven harder on the solver.)
    changed = true;
    while (changed) {
        changed = false;
        auto lin = purely_linear();
        std::set<VarId> in_equality;
        for (const auto& c : cs) {
            if (c.rel == qelim::GroundRel::Eq) {
                for (const auto& v : c.poly.vars()) {
                    in_equality.insert(v);
                }
            }
        }
        for (const VarId& v : out.sys.variables) {
            auto it = lin.find(v);
            if (it == lin.end() || !it->second || in_equality.count(v)) {
                continue;
            }
            std::vector<Polynomial> lowers, uppers;
            std::vector<qelim::ExistentialConstraint> rest;
            for (const auto& c : cs) {
                auto terms_it = c.poly.terms().find(Monomial{{v, 1}});
                if (terms_it == c.poly.terms().end()) {
                    rest.push_back(c);
                    continue;
                }
                Rat coeff = terms_it->second;
                Polynomial remainder = c.poly - Polynomial::var(v) * coeff;
                if (coeff > 0) {
                    lowers.push_back(remainder * (Rat(-1) / coeff));
                } else {
                    uppers.push_back(remainder * (Rat(1) / -coeff));
                }
            }
            if (!lowers.empty() && !uppers.empty()) {
                // two-sided elimination emits cross rows that tend to be
                // harder for the solver than the originals; skip it
                continue;
            }
            out.steps.push_back({v, std::nullopt, lowers, uppers});
            cs = std::move(rest);
            auto& vars = out.sys.variables;
            vars.erase(std::remove(vars.begin(), vars.end(), v), vars.end());
            changed = true;
            break;  // occurrence classification is stale; recompute
        }
    }

    // drop constraints that became trivially true; falsified ones stay so
    // the solver reports unsat
    std::erase_if(cs, [](const qelim::ExistentialConstraint& c) {
        if (!c.poly.is_constant()) {
            return false;
        }
        Rat v = c.poly.eval({});
        return c.rel == qelim::GroundRel::Eq ? v == 0 : v >= 0;
    });
    return out;
}

SolveOutcome solve(const ExistentialSystem& orig, const SolverConfig& cfg) {
    Presolved pre = presolve(orig);
    const ExistentialSystem& sys = pre.sys;
    std::string script = emit_smt(sys, cfg.logic);
    RawResult raw = run_script(script, cfg);
    SolveOutcome outcome;
    outcome.kind = raw.kind;
    outcome.detail = raw.detail;
    if (raw.kind != SolveOutcome::Kind::Sat) {
        return outcome;
    }
    // collect and validate the model
    for (const auto& v : sys.variables) {
        auto it = raw.values.find(ring::var_name(v));
        if (it == raw.values.end()) {
            outcome.kind = SolveOutcome::Kind::Unknown;
            outcome.detail = "model misses variable " + ring::var_name(v);
            outcome.model.clear();
            return outcome;
        }
        if (!it->second) {
            outcome.kind = SolveOutcome::Kind::Unknown;
            outcome.detail = "non-rational model value for " + ring::var_name(v);
            outcome.model.clear();
            return outcome;
        }
        outcome.model[v] = *it->second;
    }
    // reconstruct eliminated variables by back-substitution; an interval
    // variable takes its tightest lower bound (feasible by construction)
    for (auto it = pre.steps.rbegin(); it != pre.steps.rend(); ++it) {
        if (it->exact) {
            outcome.model[it->v] = it->exact->eval(outcome.model);
            continue;
        }
        std::optional<Rat> lo, hi;
        for (const auto& l : it->lowers) {
            Rat v = l.eval(outcome.model);
            lo = lo ? std::max(*lo, v) : v;
        }
        for (const auto& u : it->uppers) {
            Rat v = u.eval(outcome.model);
            hi = hi ? std::min(*hi, v) : v;
        }
        outcome.model[it->v] = lo ? *lo : (hi ? *hi : Rat(0));
    }
    // never trust solver arithmetic: re-check every constraint exactly
    for (const auto& c : orig.constraints) {
        Rat value = c.poly.eval(outcome.model);
        bool ok = c.rel == qelim::GroundRel::Eq ? value == 0 : value >= 0;
        if (!ok) {
            outcome.kind = SolveOutcome::Kind::Unknown;
            outcome.detail = "model failed exact re-validation at " + c.label;
            outcome.model.clear();
            return outcome;
        }
    }
    return outcome;
}

SolverConfig default_solver_config() {
    SolverConfig cfg;
    if (const char* env = getenv("DISTINV_SOLVER")) {
        SolverCommand cmd;
        std::istringstream words(env);
        std::string w;
        while (words >> w) {
            cmd.argv.push_back(w);
        }
        if (!cmd.argv.empty()) {
            cfg.commands.push_back(cmd);
            return cfg;
        }
    }
    if (executable_on_path("z3")) {
        cfg.commands.push_back({{"z3"}});
    }
    if (executable_on_path("cvc5")) {
        cfg.commands.push_back({{"cvc5"}});
    }
    if (!cfg.commands.empty()) {
        return cfg;
    }
    // bundled wasm build of z3, run through node
    std::vector<std::string> candidates = {"solvers/z3wasm/z3smt2.mjs"};
    if (const char* root = getenv("DISTINV_ROOT")) {
        candidates.insert(candidates.begin(), std::string(root) + "/solvers/z3wasm/z3smt2.mjs");
    }
    for (const auto& c : candidates) {
        if (std::filesystem::exists(c)) {
            cfg.commands.push_back({{"node", std::filesystem::absolute(c).string()}});
            return cfg;
        }
    }
    return cfg;  // empty: solve() reports SolverError
}

}  // namespace distinv::solver
