// Scenario- and property-level acceptance checks. Prints one PASS/FAIL line
// per criterion; the exit code is the number of failures. argv[1] must name
// the CLI binary (used by the determinism check).

#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include "creole/builtin_vm.hpp"
#include "creole/frontends.hpp"
#include "creole/parser.hpp"
#include "creole/transport.hpp"
#include "relalg_gen.hpp"

using namespace creole;
using namespace testutil;

namespace {

struct Check {
    int failures = 0;

    void criterion(int n, const std::string& what, const std::function<void()>& body) {
        std::string detail;
        bool ok = true;
        try {
            body();
        } catch (const std::exception& e) {
            ok = false;
            detail = e.what();
        }
        std::cout << "criterion " << n << " (" << what << "): " << (ok ? "PASS" : "FAIL");
        if (!ok) {
            std::cout << " — " << detail;
            ++failures;
        }
        std::cout << "\n" << std::flush;
    }
};

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::runtime_error(msg);
}

std::string fileText(const std::string& path) {
    std::ifstream in(path);
    require(in.good(), "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// ---------------------------------------------------------------------------
// Shared scenario plumbing

DistRunResult runScenario(const std::string& text, Registry& reg, std::uint64_t seed) {
    DistributedConfig d = elaborate(*parseProcess(text), reg, defaultNativeFactories());
    Scheduler sch = Scheduler::seeded(seed);
    DistRunResult r = runDistributed(std::move(d), reg, sch);
    require(r.status == RunStatus::Final, "scenario did not reach a final configuration");
    return r;
}

std::optional<std::int64_t> singleIntAtom(const DistributedConfig& d, const std::string& vm,
                                          const std::string& pred) {
    const VmInstance* v = d.findVm(vm);
    require(v != nullptr, "missing vm " + vm);
    std::optional<std::int64_t> found;
    for (const Atom& a : v->config.solution)
        if (a.headIsRef() && a.headRef().name == pred) {
            if (found) return std::nullopt;  // not unique
            found = std::get<std::int64_t>(a.valArgs[0].value());
        }
    return found;
}

// Independent brute-force date filter over a fixture file.
int fixtureInRange(const std::string& path, const std::string& from, const std::string& to) {
    auto backend = loadFixture(path);
    int n = 0;
    for (const PhotoRecord& r : backend->read("photos", CrudQuery{})) {
        auto d = dateOracle(r.dateTaken), lo = dateOracle(from), hi = dateOracle(to);
        if (d && lo && hi && *lo <= *d && *d <= *hi) ++n;
    }
    return n;
}

// The counting configuration over n distinct M atoms.
Configuration countConfig(int n) {
    Configuration c;
    c.reaction = {
        scriptRule(Rule{{}, Molecule{{ga("Count", {std::int64_t{0}})}}, {}}),
        scriptRepl(scriptRule([] {
            Rule r;
            r.lhs.atoms = {pa("Count", {Term::var("n")}), pa("M", {Term::var("y")})};
            r.rhs.atoms = {
                pa("Count", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})};
            return r;
        }())),
    };
    for (int i = 0; i < n; ++i) c.solution.push_back(ga("M", {std::int64_t(i)}));
    return c;
}

Registry countReg() {
    return makeReg({{"M", PredKind::MultiRelation, 0, 1}, {"Count", PredKind::Relation, 0, 1}});
}

bool finalHasExactly(const Configuration& c, const std::string& pred, std::int64_t v) {
    int seen = 0;
    bool value = false;
    for (const Atom& a : c.solution)
        if (a.headIsRef() && a.headRef().name == pred) {
            ++seen;
            value = compareValue(a.valArgs[0].value(), Value{v}) == 0;
        }
    return seen == 1 && value;
}

// Per-VM canonical solution sections, keyed by VM id.
std::map<std::string, std::string> vmSections(const DistributedConfig& d) {
    std::map<std::string, std::string> out;
    for (const VmInstance& vm : d.vms)
        out[vm.id] = canonicalAtoms({&vm.config.solution})[0];
    return out;
}

std::string capture(const std::string& cmd) {
    FILE* p = popen(cmd.c_str(), "r");
    require(p != nullptr, "popen failed: " + cmd);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    int rc = pclose(p);
    require(rc == 0, "command failed (" + std::to_string(rc) + "): " + cmd);
    return out;
}

// ---------------------------------------------------------------------------
// Random keep-form programs for the sugar-equivalence criterion

struct SugarProgram {
    std::string keepForm;
    std::string desugared;
};

SugarProgram randomSugarProgram(Rng& rng) {
    // Terminating by construction: rules either consume an M occurrence
    // (finite supply, never replenished) or read R persistently into the
    // deduplicating relation Out.
    std::ostringstream init;
    init << "  (0 -> ";
    int seeds = 1 + rng.below(4);
    for (int i = 0; i < seeds; ++i) {
        if (i) init << " & ";
        init << (rng.coin() ? "M(" : "R(") << rng.below(3) << ")";
    }
    init << ")";

    std::vector<std::string> keepRules, plainRules;
    int nRules = 1 + rng.below(3);
    for (int i = 0; i < nRules; ++i) {
        if (rng.coin()) {
            // M-consumer, optionally reading R persistently alongside.
            bool alsoR = rng.coin();
            std::string rhs = rng.coin() ? "Out(x)" : (rng.coin() ? "R(x)" : "Out(2)");
            std::string lhsKeep = std::string(alsoR ? "keep R(y) & " : "") + "M(x)";
            std::string lhsPlain = std::string(alsoR ? "R(y) & " : "") + "M(x)";
            std::string rhsPlain = rhs + (alsoR ? " & R(y)" : "");
            keepRules.push_back("  !(" + lhsKeep + " -> " + rhs + ")");
            plainRules.push_back("  !(" + lhsPlain + " -> " + rhsPlain + ")");
        } else {
            // Persistent selection into Out, optionally guarded.
            bool guarded = rng.coin();
            std::string g = guarded ? "keep Lt(x, 2) & " : "";
            std::string gp = guarded ? "Lt(x, 2) & " : "";
            std::string rhs = rng.coin() ? "Out(x)" : "Out(x+1)";
            keepRules.push_back("  !(" + g + "keep R(x) -> " + rhs + ")");
            plainRules.push_back("  !(" + gp + "R(x) -> " + rhs + " & R(x))");
        }
    }

    auto render = [&](const std::vector<std::string>& rules) {
        std::ostringstream os;
        os << "vm T pub(mrel M/0/1, rel R/0/1, rel Out/0/1) {\n" << init.str();
        for (const std::string& r : rules) os << ",\n" << r;
        os << "\n}\n";
        return os.str();
    };
    return {render(keepRules), render(plainRules)};
}

std::set<std::string> solutionFinals(const std::string& text) {
    Registry reg;
    DistributedConfig d = elaborate(*parseProcess(text), reg);
    std::set<std::string> out;
    for (const auto& [key, f] : distExhaustiveFinals(d, reg, Bounds{128, 100000}))
        out.insert(vmSections(f).at("T"));
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    const std::string cli = argc > 1 ? argv[1] : "";
    Check ck;

    ck.criterion(1, "count encoding over 0/1/5/25 elements", [&] {
        for (int n : {0, 1, 5}) {
            Registry reg = countReg();
            Configuration c = countConfig(n);
            normalize(c, reg);
            FreshNameSupply fresh("T");
            EngineCtx ctx{&reg, "T", &fresh, nullptr};
            auto finals = exhaustiveFinals(c, ctx, Bounds{128, 100000});
            require(!finals.empty(), "no finals for n=" + std::to_string(n));
            for (const auto& [key, f] : finals)
                require(finalHasExactly(f, "Count", n),
                        "a final lacks Count(" + std::to_string(n) + ")");
        }
        for (std::uint64_t seed = 0; seed < 100; ++seed) {
            Registry reg = countReg();
            Configuration c = countConfig(25);
            normalize(c, reg);
            FreshNameSupply fresh("T");
            EngineCtx ctx{&reg, "T", &fresh, nullptr};
            Scheduler sch = Scheduler::seeded(seed);
            RunResult r = run(c, ctx, sch);
            require(r.status == RunStatus::Final, "seeded run hit the budget");
            require(finalHasExactly(r.config, "Count", 25), "seeded run missed Count(25)");
        }
    });

    ck.criterion(2, "echo and session reach a single final with one continuation firing", [&] {
        for (const char* path : {"samples/echo.cre", "samples/session.cre"}) {
            Registry reg;
            DistributedConfig d =
                elaborate(*parseProcess(fileText(path), path), reg, defaultNativeFactories());
            auto finals = distExhaustiveFinals(d, reg, Bounds{128, 100000});
            require(finals.size() == 1, std::string(path) + ": expected one canonical final");
            const DistributedConfig& f = finals.begin()->second;
            const VmInstance* cvm = f.findVm("CVM");
            int results = 0;
            for (const Atom& a : cvm->config.solution) {
                const std::string& n = a.headRef().name;
                require(n != "K", std::string(path) + ": unconsumed continuation atom");
                if (n == "Done" || n == "W") ++results;
            }
            require(results == 1, std::string(path) + ": continuation fired " +
                                      std::to_string(results) + " times");
        }
    });

    ck.criterion(3, "adaptation counts via the picasa adapter and the flickr rewiring", [&] {
        int picasaOracle = fixtureInRange("fixtures/picasa.json", "01/01/2009", "31/12/2009");
        Registry reg;
        DistRunResult r = runScenario(fileText("samples/adaptation_picasa.cre"), reg, 1);
        require(singleIntAtom(r.config, "CVM", "Result") == std::int64_t(picasaOracle),
                "picasa adaptation result differs from the filter oracle");
        require(picasaOracle == 3, "picasa fixture drifted from its documented count");

        int flickrOracle = fixtureInRange("fixtures/flickr.json", "01/01/2009", "31/12/2009");
        const std::string rewired =
            "let builtin FVM flickr \"fixtures/flickr.json\"\n"
            "in vm CVM pub(rel CountsOut/0/2, rel Result/0/1) priv(rel Session/0/1) {\n"
            "  (0 -> new x. CountsIn(CountsOut, x, \"01/01/2009\", \"31/12/2009\")"
            " & Session(x)),\n"
            "  (Session(x) & CountsOut(x, count) -> Result(count))\n"
            "}\n";
        Registry reg2;
        DistRunResult r2 = runScenario(rewired, reg2, 1);
        require(singleIntAtom(r2.config, "CVM", "Result") == std::int64_t(flickrOracle),
                "flickr rewiring result differs from the filter oracle");
        require(flickrOracle == 4, "flickr fixture drifted from its documented count");
    });

    ck.criterion(4, "integration facade merges both stores with one sentinel", [&] {
        int merged = fixtureInRange("fixtures/picasa.json", "01/01/2009", "31/12/2009") +
                     fixtureInRange("fixtures/flickr.json", "01/01/2009", "31/12/2009");
        require(merged == 7, "fixtures drifted from their documented counts");
        Registry reg;
        DistRunResult r = runScenario(fileText("samples/integration_facade.cre"), reg, 1);
        require(singleIntAtom(r.config, "CVM", "Result") == std::int64_t(merged),
                "merged count differs from the concatenation oracle");
        int sentinels = 0;
        for (const TraceEvent& e : r.trace) {
            if (e.value("ev", "") != "migrated" || e.value("direction", "") != "in") continue;
            std::string atom = e.value("atom", "");
            if (atom.rfind("AVM.Photo(", 0) == 0 && atom.find("\"null\"") != std::string::npos)
                ++sentinels;
        }
        require(sentinels == 1,
                "expected exactly one sentinel at the counting script, saw " +
                    std::to_string(sentinels));
    });

    ck.criterion(5, "coordination composes search, mediator, and count on one vm", [&] {
        int oracle = fixtureInRange("fixtures/flickr.json", "01/01/2009", "31/12/2009");
        Registry reg;
        DistRunResult r = runScenario(fileText("samples/coordination.cre"), reg, 1);
        require(singleIntAtom(r.config, "CVM", "Count") == std::int64_t(oracle),
                "coordination count differs from the filter oracle");
    });

    ck.criterion(6, "relational algebra encodings match the set oracle (200 per operator)", [&] {
        using Op = RelAlgInstr::Op;
        Rng rng(0xA15E);
        for (Op op : {Op::Select, Op::Project, Op::Product, Op::Union, Op::Difference,
                      Op::Rename}) {
            for (int i = 0; i < 200; ++i) {
                RelAlgInstance in = randomInstance(rng, op);
                TupleSet got = runInstanceExhaustive(in);
                if (got != oracleEval(in))
                    throw std::runtime_error("operator " + std::to_string(int(op)) +
                                             " instance " + std::to_string(i) +
                                             " disagrees with the oracle");
            }
        }
    });

    ck.criterion(7, "invariants hold across 1000 fuzzed runs of 100+ steps", [&] {
        Rng rng(0xF022);
        for (int iter = 0; iter < 1000; ++iter) {
            Registry reg = makeReg({{"T", PredKind::MultiRelation, 0, 1},
                                    {"R", PredKind::Relation, 0, 1},
                                    {"M", PredKind::MultiRelation, 0, 1},
                                    {"Out", PredKind::Relation, 0, 1}});
            Configuration c;
            c.reaction.push_back(scriptRepl(scriptRule([] {
                Rule r;
                r.lhs.atoms = {pa("T", {Term::var("n")})};
                r.rhs.atoms = {
                    pa("T", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})};
                return r;
            }())));
            c.solution.push_back(ga("T", {std::int64_t{0}}));
            int extra = rng.below(4);
            for (int i = 0; i < extra; ++i) {
                std::string src = rng.coin() ? "R" : "M";
                std::string dst = rng.coin() ? "Out" : "R";
                Rule r;
                r.lhs.atoms = {pa(src, {Term::var("x")})};
                r.rhs.atoms = {pa(dst, {Term::var("x")})};
                c.reaction.push_back(rng.coin() ? scriptRepl(scriptRule(r)) : scriptRule(r));
            }
            int seedAtoms = rng.below(5);
            for (int i = 0; i < seedAtoms; ++i)
                c.solution.push_back(ga(rng.coin() ? "R" : "M", {std::int64_t(rng.below(3))}));
            normalize(c, reg);

            FreshNameSupply fresh("T");
            EngineCtx ctx{&reg, "T", &fresh, nullptr};
            Scheduler sch = Scheduler::seeded(std::uint64_t(iter));
            for (int s = 0; s < 100; ++s) {
                auto next = step(c, ctx, sch);
                require(next.has_value(), "pumped program stalled");
                c = std::move(*next);
                std::map<std::string, int> rel;
                for (const Atom& a : c.solution) {
                    require(a.isGround(), "non-ground solution atom");
                    if (a.headIsRef() && reg.isRelation(a.headRef()))
                        require(++rel[showAtom(a)] == 1, "duplicated relation atom");
                }
            }
        }
    });

    ck.criterion(8, "keep sugar is observationally equivalent to its expansion (50 programs)",
                 [&] {
                     Rng rng(0x5E1F);
                     for (int i = 0; i < 50; ++i) {
                         SugarProgram p = randomSugarProgram(rng);
                         if (solutionFinals(p.keepForm) != solutionFinals(p.desugared))
                             throw std::runtime_error("program " + std::to_string(i) +
                                                      " diverged:\n" + p.keepForm);
                     }
                 });

    ck.criterion(9, "scenarios agree across in-memory and tcp transports (10 seeds)", [&] {
        int basePort = 18300;
        for (const char* path : {"samples/adaptation_picasa.cre",
                                 "samples/integration_facade.cre", "samples/coordination.cre"}) {
            std::string text = fileText(path);
            for (std::uint64_t seed = 1; seed <= 10; ++seed) {
                Registry regMem;
                DistributedConfig dm =
                    elaborate(*parseProcess(text), regMem, defaultNativeFactories());
                InMemoryTransport mem;
                ThreadedRunResult rm = runThreaded(std::move(dm), regMem, mem, seed);
                require(!rm.budgetExhausted, std::string(path) + ": in-memory budget");

                Registry regTcp;
                DistributedConfig dt =
                    elaborate(*parseProcess(text), regTcp, defaultNativeFactories());
                std::map<std::string, TcpTransport::Endpoint> eps;
                std::vector<std::string> locals;
                for (const VmInstance& vm : dt.vms) {
                    eps[vm.id] = {"127.0.0.1", basePort++};
                    locals.push_back(vm.id);
                }
                TcpTransport tcp(eps, locals);
                tcp.start();
                ThreadedRunResult rt = runThreaded(std::move(dt), regTcp, tcp, seed);
                tcp.stop();
                require(!rt.budgetExhausted, std::string(path) + ": tcp budget");

                if (vmSections(rm.config) != vmSections(rt.config))
                    throw std::runtime_error(std::string(path) + " seed " +
                                             std::to_string(seed) +
                                             ": transports disagree on the final solutions");
            }
        }
    });

    ck.criterion(10, "identity rewrites never progress; sequences skip only when blocked", [&] {
        Registry reg = makeReg({{"R", PredKind::Relation, 0, 1},
                                {"P", PredKind::Relation, 0, 0},
                                {"Q", PredKind::Relation, 0, 0}});
        Configuration c;
        Rule ident;
        ident.lhs.atoms = {pa("R", {Term::var("x")})};
        ident.rhs.atoms = {pa("R", {Term::var("x")})};
        c.reaction = {scriptRepl(scriptRule(ident))};
        c.solution = {ga("R", {std::int64_t{1}})};
        normalize(c, reg);
        FreshNameSupply fresh("T");
        EngineCtx ctx{&reg, "T", &fresh, nullptr};
        require(stepCandidates(c, ctx).empty(), "identity rewrite offered as progression");

        Rule consumeP;
        consumeP.lhs.atoms = {pa("P", {})};
        Rule emitQ;
        emitQ.rhs.atoms = {pa("Q", {})};
        Configuration s;
        s.reaction = {scriptSeq(scriptRule(consumeP), scriptRule(emitQ))};
        s.solution = {ga("P", {})};
        normalize(s, reg);
        auto cands = stepCandidates(s, ctx);
        require(cands.size() == 1 && cands[0].event["ev"] == "fired",
                "skip offered while the left part could progress");
        Configuration blocked;
        blocked.reaction = s.reaction;
        auto cands2 = stepCandidates(blocked, ctx);
        require(cands2.size() == 1 && cands2[0].event["ev"] == "skipped",
                "blocked left part was not skippable");
    });

    ck.criterion(11, "seeded cli runs are byte-identical across repetitions", [&] {
        require(!cli.empty(), "cli binary path missing (argv[1])");
        for (const char* sample : {"samples/count.cre", "samples/coordination.cre"}) {
            std::string ref, refTrace;
            for (int rep = 0; rep < 3; ++rep) {
                std::string trace = "/tmp/acceptance_trace.jsonl";
                std::remove(trace.c_str());
                std::string out = capture("'" + cli + "' run " + sample +
                                          " --seed 5 --trace " + trace + " 2>/dev/null");
                std::string tr = fileText(trace);
                if (rep == 0) {
                    ref = out;
                    refTrace = tr;
                } else {
                    require(out == ref, std::string(sample) + ": reports differ across runs");
                    require(tr == refTrace, std::string(sample) + ": traces differ across runs");
                }
            }
        }
    });

    if (ck.failures == 0) std::cout << "all criteria passed\n";
    return ck.failures;
}
