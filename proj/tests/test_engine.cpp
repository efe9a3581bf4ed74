#include <doctest.h>

#include "helpers.hpp"

using namespace creole;
using namespace testutil;

namespace {

struct Harness {
    Registry reg;
    FreshNameSupply fresh{"T"};
    Trace trace;
    EngineCtx ctx;

    explicit Harness(Registry r) : reg(std::move(r)) {
        ctx.reg = &reg;
        ctx.vmId = "T";
        ctx.fresh = &fresh;
        ctx.trace = &trace;
    }
};

Registry stdReg() {
    return makeReg({{"R", PredKind::Relation, 0, 1},
                    {"M", PredKind::MultiRelation, 0, 1},
                    {"P", PredKind::Relation, 0, 0},
                    {"Q", PredKind::Relation, 0, 0},
                    {"A", PredKind::Relation, 0, 0},
                    {"B", PredKind::Relation, 0, 0},
                    {"Count", PredKind::Relation, 0, 1},
                    {"Out", PredKind::Relation, 0, 1}});
}

// (∅ ▷ Count(0)), !(Count(n) ∧ M(y) ▷ Count(n+1)) — the counting fold.
std::vector<ScriptPtr> countScript() {
    Rule init = rule({}, {ga("Count", {std::int64_t{0}})});
    Rule fold = rule({pa("Count", {Term::var("n")}), pa("M", {Term::var("y")})},
                     {pa("Count", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})});
    return {scriptRule(init), scriptRepl(scriptRule(fold))};
}

std::vector<Atom> mAtoms(int n) {
    std::vector<Atom> out;
    for (int i = 0; i < n; ++i) out.push_back(ga("M", {std::int64_t(i)}));
    return out;
}

size_t countOf(const Configuration& c, const std::string& pred) {
    size_t n = 0;
    for (const Atom& a : c.solution)
        if (a.headIsRef() && a.headRef().name == pred) ++n;
    return n;
}

const Atom* findAtom(const Configuration& c, const std::string& pred) {
    for (const Atom& a : c.solution)
        if (a.headIsRef() && a.headRef().name == pred) return &a;
    return nullptr;
}

}  // namespace

TEST_CASE("normalization eliminates relation duplicates, not multi-relation ones") {
    Harness h(stdReg());
    Configuration c;
    c.solution = {ga("R", {std::int64_t{1}}), ga("R", {std::int64_t{1}}),
                  ga("M", {std::int64_t{1}}), ga("M", {std::int64_t{1}})};
    std::vector<Atom> removed;
    normalize(c, h.reg, &removed);
    CHECK(countOf(c, "R") == 1);
    CHECK(countOf(c, "M") == 2);
    REQUIRE(removed.size() == 1);
    CHECK(showAtom(removed[0]) == showAtom(ga("R", {std::int64_t{1}})));

    // Distinct tuples survive; normalization is idempotent; empty stays empty.
    Configuration d;
    d.solution = {ga("R", {std::int64_t{1}}), ga("R", {std::int64_t{2}})};
    normalize(d, h.reg);
    CHECK(d.solution.size() == 2);
    std::string before = canonicalForm(d, h.reg);
    normalize(d, h.reg);
    CHECK(canonicalForm(d, h.reg) == before);
    Configuration e;
    normalize(e, h.reg);
    CHECK(e.solution.empty());
}

TEST_CASE("canonical form quotients out multiset order, replication unfoldings, fresh names") {
    Harness h(stdReg());
    Rule fold = rule({pa("M", {Term::var("x")})}, {pa("R", {Term::var("x")})});
    ScriptPtr bang = scriptRepl(scriptRule(fold));

    Configuration a, b;
    a.solution = {ga("R", {std::int64_t{1}}), ga("M", {std::int64_t{2}})};
    b.solution = {ga("M", {std::int64_t{2}}), ga("R", {std::int64_t{1}})};
    CHECK(canonicalForm(a, h.reg) == canonicalForm(b, h.reg));

    // ⟨!s⟩ ≡ ⟨!s, s⟩: an unfired unfolding is erased.
    Configuration ra, rb;
    ra.reaction = {bang};
    rb.reaction = {bang, scriptRule(fold)};
    CHECK(canonicalForm(ra, h.reg) == canonicalForm(rb, h.reg));
    // ...but an unrelated extra rule is not.
    Configuration rc;
    rc.reaction = {bang, scriptRule(rule({pa("P", {})}, {}))};
    CHECK(canonicalForm(rc, h.reg) != canonicalForm(ra, h.reg));

    // Fresh tokens are compared by first occurrence, not identity.
    Configuration fa, fb;
    fa.solution = {ga("R", {FreshName{"T", 7}})};
    fb.solution = {ga("R", {FreshName{"T", 42}})};
    CHECK(canonicalForm(fa, h.reg) == canonicalForm(fb, h.reg));
    Configuration fc;
    fc.solution = {ga("R", {FreshName{"T", 7}}), ga("Out", {FreshName{"T", 7}})};
    Configuration fd;
    fd.solution = {ga("R", {FreshName{"T", 7}}), ga("Out", {FreshName{"T", 8}})};
    CHECK(canonicalForm(fc, h.reg) != canonicalForm(fd, h.reg));
}

TEST_CASE("a firing that reproduces a congruent configuration is not progression") {
    Harness h(stdReg());
    Configuration c;
    c.reaction = {scriptRepl(scriptRule(rule({pa("R", {Term::var("x")})},
                                             {pa("R", {Term::var("x")})})))};
    c.solution = {ga("R", {std::int64_t{1}})};
    normalize(c, h.reg);
    CHECK(stepCandidates(c, h.ctx).empty());
    CHECK_FALSE(progresses(c, h.ctx));
    Scheduler sch = Scheduler::deterministic();
    RunResult r = run(c, h.ctx, sch);
    CHECK(r.status == RunStatus::Final);
    CHECK(r.steps == 0);
}

TEST_CASE("sequence right part waits for the left part to block") {
    Harness h(stdReg());
    Rule consumeP = rule({pa("P", {})}, {});
    Rule emitQ = rule({}, {pa("Q", {})});
    Configuration c;
    c.reaction = {scriptSeq(scriptRule(consumeP), scriptRule(emitQ))};

    SUBCASE("left blocked: skip, then the right fires") {
        normalize(c, h.reg);
        auto cands = stepCandidates(c, h.ctx);
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].event["ev"] == "skipped");
        Scheduler sch = Scheduler::deterministic();
        RunResult r = run(c, h.ctx, sch);
        CHECK(r.status == RunStatus::Final);
        CHECK(countOf(r.config, "Q") == 1);
        CHECK(countOf(r.config, "P") == 0);
    }

    SUBCASE("left can progress: the skip is not offered") {
        c.solution = {ga("P", {})};
        normalize(c, h.reg);
        auto cands = stepCandidates(c, h.ctx);
        REQUIRE(cands.size() == 1);
        CHECK(cands[0].event["ev"] == "fired");
        Scheduler sch = Scheduler::deterministic();
        RunResult r = run(c, h.ctx, sch);
        // P consumed by the left part, then the exhausted left is skipped.
        CHECK(countOf(r.config, "P") == 0);
        CHECK(countOf(r.config, "Q") == 1);
    }
}

TEST_CASE("counting runs fold every M atom exactly once") {
    for (int n : {0, 3, 10}) {
        CAPTURE(n);
        Harness h(stdReg());
        Configuration c;
        c.reaction = countScript();
        c.solution = mAtoms(n);
        normalize(c, h.reg);
        Scheduler sch = Scheduler::seeded(99);
        RunResult r = run(c, h.ctx, sch);
        CHECK(r.status == RunStatus::Final);
        const Atom* count = findAtom(r.config, "Count");
        REQUIRE(count != nullptr);
        CHECK(countOf(r.config, "Count") == 1);
        CHECK(compareValue(count->valArgs[0].value(), Value{std::int64_t(n)}) == 0);
        CHECK(countOf(r.config, "M") == 0);
    }
}

TEST_CASE("exhaustive finals: confluent programs have one, races have two") {
    Harness h(stdReg());

    Configuration count;
    count.reaction = countScript();
    count.solution = mAtoms(2);
    normalize(count, h.reg);
    CHECK(exhaustiveFinals(count, h.ctx).size() == 1);

    Configuration indep;
    indep.reaction = {scriptRule(rule({}, {ga("A", {})})), scriptRule(rule({}, {ga("B", {})}))};
    auto finals = exhaustiveFinals(indep, h.ctx);
    REQUIRE(finals.size() == 1);
    const Configuration& f = finals.begin()->second;
    CHECK(countOf(f, "A") == 1);
    CHECK(countOf(f, "B") == 1);

    // Two rules race for a single M occurrence.
    Configuration race;
    race.reaction = {scriptRule(rule({pa("M", {Term::var("x")})}, {ga("A", {})})),
                     scriptRule(rule({pa("M", {Term::var("x")})}, {ga("B", {})}))};
    race.solution = {ga("M", {std::int64_t{1}})};
    normalize(race, h.reg);
    CHECK(exhaustiveFinals(race, h.ctx).size() == 2);
}

TEST_CASE("exhaustive search reports bound exhaustion explicitly") {
    Harness h(stdReg());
    Configuration c;
    // An unbounded pump: Count(n) -> Count(n+1) forever.
    c.reaction = {scriptRule(rule({}, {ga("Count", {std::int64_t{0}})})),
                  scriptRepl(scriptRule(
                      rule({pa("Count", {Term::var("n")})},
                           {pa("Count", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})})))};
    CHECK_THROWS_AS(exhaustiveFinals(c, h.ctx, Bounds{8, 100000}), BoundExceeded);
    CHECK_THROWS_AS(exhaustiveFinals(c, h.ctx, Bounds{1000, 16}), BoundExceeded);
}

TEST_CASE("a fired non-replicated rule is consumed from the reaction part") {
    Harness h(stdReg());
    Configuration c;
    c.reaction = {scriptRule(rule({}, {ga("A", {})}))};
    Scheduler sch = Scheduler::deterministic();
    auto next = step(c, h.ctx, sch);
    REQUIRE(next.has_value());
    CHECK(next->reaction.empty());
    CHECK(countOf(*next, "A") == 1);
    CHECK_FALSE(step(*next, h.ctx, sch).has_value());
}

TEST_CASE("seeded scheduling is reproducible, different seeds may diverge in traces") {
    auto runOnce = [&](std::uint64_t seed) {
        Harness h(stdReg());
        Configuration c;
        c.reaction = countScript();
        c.solution = mAtoms(6);
        normalize(c, h.reg);
        Scheduler sch = Scheduler::seeded(seed);
        RunResult r = run(c, h.ctx, sch);
        nlohmann::json j = h.trace;
        return std::pair<std::string, std::string>(j.dump(), canonicalForm(r.config, h.reg));
    };
    auto [t1, f1] = runOnce(7);
    auto [t2, f2] = runOnce(7);
    CHECK(t1 == t2);
    CHECK(f1 == f2);
    auto [t3, f3] = runOnce(8);
    CHECK(f3 == f1);  // confluent result regardless of schedule
}

TEST_CASE("budget exhaustion is reported when the program cannot finish") {
    Harness h(stdReg());
    Configuration c;
    c.reaction = {scriptRule(rule({}, {ga("Count", {std::int64_t{0}})})),
                  scriptRepl(scriptRule(
                      rule({pa("Count", {Term::var("n")})},
                           {pa("Count", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})})))};
    Scheduler sch = Scheduler::seeded(1);
    RunResult r = run(c, h.ctx, sch, 25);
    CHECK(r.status == RunStatus::BudgetExhausted);
    CHECK(r.steps == 25);
}

TEST_CASE("invariants hold along random pumped runs") {
    // A scaled-down version of the long fuzz in the acceptance harness.
    Rng rng(0x5EED);
    for (int iter = 0; iter < 40; ++iter) {
        CAPTURE(iter);
        Harness h(makeReg({{"T", PredKind::MultiRelation, 0, 1},
                           {"R", PredKind::Relation, 0, 1},
                           {"M", PredKind::MultiRelation, 0, 1},
                           {"Out", PredKind::Relation, 0, 1}}));
        Configuration c;
        // Guaranteed-progress pump plus random extra rules and atoms.
        c.reaction.push_back(scriptRepl(scriptRule(
            rule({pa("T", {Term::var("n")})},
                 {pa("T", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))})}))));
        c.solution.push_back(ga("T", {std::int64_t{0}}));
        int extra = rng.below(4);
        for (int i = 0; i < extra; ++i) {
            std::string src = rng.coin() ? "R" : "M";
            std::string dst = rng.coin() ? "Out" : "R";
            Rule r = rule({pa(src, {Term::var("x")})}, {pa(dst, {Term::var("x")})});
            c.reaction.push_back(rng.coin() ? scriptRepl(scriptRule(r)) : scriptRule(r));
        }
        int seedAtoms = rng.below(5);
        for (int i = 0; i < seedAtoms; ++i)
            c.solution.push_back(ga(rng.coin() ? "R" : "M", {std::int64_t(rng.below(3))}));
        normalize(c, h.reg);

        Scheduler sch = Scheduler::seeded(std::uint64_t(iter));
        for (int s = 0; s < 120; ++s) {
            auto next = step(c, h.ctx, sch);
            REQUIRE(next.has_value());  // the pump always progresses
            c = std::move(*next);
            std::map<std::string, int> relSeen;
            for (const Atom& a : c.solution) {
                CHECK(a.isGround());
                if (a.headIsRef() && h.reg.isRelation(a.headRef()))
                    CHECK(++relSeen[showAtom(a)] == 1);
            }
        }
    }
}
