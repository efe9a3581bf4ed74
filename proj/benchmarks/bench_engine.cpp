// Microbenchmarks for the hot paths: matching, normalization, and full
// seeded runs of the counting script at various solution sizes.

#include <benchmark/benchmark.h>

#include "creole/engine.hpp"
#include "creole/matcher.hpp"
#include "creole/parser.hpp"

using namespace creole;

namespace {

Registry countRegistry() {
    Registry reg;
    reg.add("T", PredicateDecl{"M", PredKind::MultiRelation, 0, 1, Visibility::Public});
    reg.add("T", PredicateDecl{"Count", PredKind::Relation, 0, 1, Visibility::Public});
    reg.add("T", PredicateDecl{"R", PredKind::Relation, 0, 2, Visibility::Public});
    return reg;
}

Atom mAtom(std::int64_t v) {
    Atom a;
    a.head = PredicateRef{"T", "M"};
    a.valArgs.push_back(Term::val(Value{v}));
    return a;
}

Atom rAtom(std::int64_t x, std::int64_t y) {
    Atom a;
    a.head = PredicateRef{"T", "R"};
    a.valArgs.push_back(Term::val(Value{x}));
    a.valArgs.push_back(Term::val(Value{y}));
    return a;
}

Configuration countConfig(int n) {
    Configuration c;
    Rule init;
    {
        Atom z;
        z.head = PredicateRef{"T", "Count"};
        z.valArgs.push_back(Term::val(Value{std::int64_t{0}}));
        init.rhs.atoms.push_back(z);
    }
    Rule stepRule;
    {
        Atom cnt;
        cnt.head = PredicateRef{"T", "Count"};
        cnt.valArgs.push_back(Term::var("n"));
        Atom m;
        m.head = PredicateRef{"T", "M"};
        m.valArgs.push_back(Term::var("y"));
        Atom cnt2;
        cnt2.head = PredicateRef{"T", "Count"};
        cnt2.valArgs.push_back(Term::add(Term::var("n"), Term::val(Value{std::int64_t{1}})));
        stepRule.lhs.atoms = {cnt, m};
        stepRule.rhs.atoms = {cnt2};
    }
    c.reaction = {scriptRule(init), scriptRepl(scriptRule(stepRule))};
    for (int i = 0; i < n; ++i) c.solution.push_back(mAtom(i));
    return c;
}

void BM_EnumerateMatches(benchmark::State& state) {
    const int n = int(state.range(0));
    std::vector<Atom> sol;
    for (int i = 0; i < n; ++i) sol.push_back(rAtom(i % 8, (i * 7) % 8));
    Molecule lhs;
    {
        Atom p;
        p.head = PredicateRef{"T", "R"};
        p.valArgs = {Term::var("x"), Term::var("y")};
        Atom q;
        q.head = PredicateRef{"T", "R"};
        q.valArgs = {Term::var("y"), Term::var("z")};
        lhs.atoms = {p, q};
    }
    for (auto _ : state) benchmark::DoNotOptimize(enumerateMatches(lhs, sol));
    state.SetComplexityN(n);
}

void BM_Normalize(benchmark::State& state) {
    const int n = int(state.range(0));
    Registry reg = countRegistry();
    Configuration base;
    for (int i = 0; i < n; ++i) base.solution.push_back(rAtom(i % 16, i % 4));
    for (auto _ : state) {
        Configuration c = base;
        normalize(c, reg);
        benchmark::DoNotOptimize(c.solution.size());
    }
}

void BM_CountRun(benchmark::State& state) {
    const int n = int(state.range(0));
    Registry reg = countRegistry();
    for (auto _ : state) {
        Configuration c = countConfig(n);
        normalize(c, reg);
        FreshNameSupply fresh("T");
        EngineCtx ctx{&reg, "T", &fresh, nullptr};
        Scheduler sch = Scheduler::seeded(1);
        RunResult r = run(c, ctx, sch);
        benchmark::DoNotOptimize(r.steps);
    }
    state.SetComplexityN(n);
}

void BM_ParseCount(benchmark::State& state) {
    const std::string text =
        "vm CVM pub(mrel R/0/1, rel Count/0/1) {\n"
        "  (0 -> R(1) & R(2) & R(3)),\n"
        "  (0 -> Count(0)),\n"
        "  !(Count(n) & R(y) -> Count(n+1))\n"
        "}\n";
    for (auto _ : state) benchmark::DoNotOptimize(parseProcess(text));
}

BENCHMARK(BM_EnumerateMatches)->RangeMultiplier(2)->Range(4, 64)->Complexity();
BENCHMARK(BM_Normalize)->RangeMultiplier(4)->Range(16, 1024);
BENCHMARK(BM_CountRun)->RangeMultiplier(2)->Range(8, 64)->Complexity();
BENCHMARK(BM_ParseCount);

}  // namespace

BENCHMARK_MAIN();
