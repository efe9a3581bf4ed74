#include <doctest.h>

#include <functional>

#include "helpers.hpp"

using namespace creole;
using namespace testutil;

namespace testutil {

namespace {

// Post-hoc binding check: walk one pattern/ground atom pair and extend the
// maps, failing on any inconsistency. Deliberately naive — this is the
// oracle the production matcher is compared against.
bool bindAtom(const Atom& pat, const Atom& g, std::map<std::string, Value>& vals,
              std::map<std::string, PredicateRef>& preds) {
    if (!g.headIsRef()) return false;
    if (const auto* pv = std::get_if<PredVar>(&pat.head)) {
        auto it = preds.find(pv->id);
        if (it == preds.end()) preds.emplace(pv->id, g.headRef());
        else if (it->second != g.headRef()) return false;
    } else if (pat.headIsRef()) {
        if (pat.headRef() != g.headRef()) return false;
    } else {
        return false;
    }
    if (pat.predArgs.size() != g.predArgs.size()) return false;
    if (pat.valArgs.size() != g.valArgs.size()) return false;
    for (size_t i = 0; i < pat.predArgs.size(); ++i) {
        const PredicateRef& gr = std::get<PredicateRef>(g.predArgs[i]);
        if (const auto* pv = std::get_if<PredVar>(&pat.predArgs[i])) {
            auto it = preds.find(pv->id);
            if (it == preds.end()) preds.emplace(pv->id, gr);
            else if (it->second != gr) return false;
        } else if (std::get<PredicateRef>(pat.predArgs[i]) != gr) {
            return false;
        }
    }
    for (size_t i = 0; i < pat.valArgs.size(); ++i) {
        const Value& gv = g.valArgs[i].value();
        const Term& pt = pat.valArgs[i];
        if (pt.isVar()) {
            auto it = vals.find(pt.var().id);
            if (it == vals.end()) vals.emplace(pt.var().id, gv);
            else if (compareValue(it->second, gv) != 0) return false;
        } else if (pt.isValue()) {
            if (compareValue(pt.value(), gv) != 0) return false;
        } else {
            return false;  // no lhs arithmetic
        }
    }
    return true;
}

}  // namespace

std::set<std::string> bruteForceMatches(const Molecule& lhs, const std::vector<Atom>& solution) {
    std::vector<Atom> pats, guards;
    for (const Atom& a : lhs.atoms) (a.isBuiltin() ? guards : pats).push_back(a);

    std::set<std::string> keys;
    std::vector<size_t> pick(pats.size(), 0);
    std::function<void(size_t)> go = [&](size_t i) {
        if (i == pats.size()) {
            for (size_t x = 0; x < pick.size(); ++x)  // injectivity
                for (size_t y = x + 1; y < pick.size(); ++y)
                    if (pick[x] == pick[y]) return;
            Substitution s;
            for (size_t k = 0; k < pats.size(); ++k)
                if (!bindAtom(pats[k], solution[pick[k]], s.vals, s.preds)) return;
            for (const Atom& g : guards) {
                Atom inst = g;
                for (Term& t : inst.valArgs) {
                    if (t.isVar()) {
                        auto it = s.vals.find(t.var().id);
                        if (it == s.vals.end()) return;  // guard var never bound
                        t = Term::val(it->second);
                    }
                }
                if (!evalGuard(inst)) return;
            }
            std::vector<Atom> consumed;
            for (size_t k : pick) consumed.push_back(solution[k]);
            keys.insert(matchKey(s, std::move(consumed)));
            return;
        }
        for (size_t k = 0; k < solution.size(); ++k) {
            pick[i] = k;
            go(i + 1);
        }
    };
    if (!solution.empty() || pats.empty()) go(0);
    return keys;
}

}  // namespace testutil

namespace {

std::set<std::string> productionMatches(const Molecule& lhs, const std::vector<Atom>& sol) {
    std::set<std::string> keys;
    for (const MatchResult& m : enumerateMatches(lhs, sol))
        keys.insert(matchKey(m.subst, m.consumed));
    return keys;
}

}  // namespace

TEST_CASE("single-atom and repeated-variable matching") {
    Molecule one;
    one.atoms.push_back(pa("R", {Term::var("x")}));
    std::vector<Atom> sol{ga("R", {std::int64_t{1}})};
    auto ms = enumerateMatches(one, sol);
    REQUIRE(ms.size() == 1);
    CHECK(compareValue(ms[0].subst.vals.at("x"), Value{std::int64_t{1}}) == 0);
    REQUIRE(ms[0].consumed.size() == 1);
    CHECK(atomEqual(ms[0].consumed[0], sol[0]));

    Molecule twice;
    twice.atoms.push_back(pa("P", {Term::var("x"), Term::var("x")}));
    CHECK(enumerateMatches(twice, {ga("P", {std::int64_t{1}, std::int64_t{2}})}).empty());
    CHECK(enumerateMatches(twice, {ga("P", {std::int64_t{3}, std::int64_t{3}})}).size() == 1);
}

TEST_CASE("session key joins two atoms through a shared variable") {
    Molecule lhs;
    lhs.atoms.push_back(pa("Session", {Term::var("x")}));
    lhs.atoms.push_back(pa("CountsOut", {Term::var("x"), Term::var("n")}));
    Value s1{FreshName{"T", 1}}, s2{FreshName{"T", 2}};
    std::vector<Atom> sol{ga("Session", {s1}), ga("CountsOut", {s1, std::int64_t{3}}),
                          ga("CountsOut", {s2, std::int64_t{9}})};
    auto ms = enumerateMatches(lhs, sol);
    REQUIRE(ms.size() == 1);
    CHECK(compareValue(ms[0].subst.vals.at("x"), s1) == 0);
    CHECK(compareValue(ms[0].subst.vals.at("n"), Value{std::int64_t{3}}) == 0);
}

TEST_CASE("predicate variables bind to references found in argument positions") {
    Molecule lhs;
    lhs.atoms.push_back(pa("I", {}, {PredVar{"K"}}));
    std::vector<Atom> sol{ga("I", {}, {pr("K", "CVM")})};
    auto ms = enumerateMatches(lhs, sol);
    REQUIRE(ms.size() == 1);
    CHECK(ms[0].subst.preds.at("K") == PredicateRef{"CVM", "K"});
}

TEST_CASE("guard evaluation follows the independent date oracle") {
    CHECK(evalGuard(guard(BuiltinPred::Null, {Term::val(std::string("null"))})));
    CHECK_FALSE(evalGuard(guard(BuiltinPred::Null, {Term::val(std::string("p01"))})));
    CHECK_FALSE(evalGuard(guard(BuiltinPred::Null, {Term::val(std::int64_t{0})})));
    CHECK(evalGuard(guard(BuiltinPred::NotNull, {Term::val(std::string("p01"))})));

    auto between = [](const char* a, const char* x, const char* b) {
        return evalGuard(guard(BuiltinPred::Between,
                               {Term::val(std::string(a)), Term::val(std::string(x)),
                                Term::val(std::string(b))}));
    };
    CHECK(between("01/01/2009", "15/06/2009", "31/12/2009"));
    CHECK_FALSE(between("01/01/2009", "15/06/2008", "31/12/2009"));
    CHECK(evalGuard(guard(BuiltinPred::NotBetween,
                          {Term::val(std::string("01/01/2009")), Term::val(std::string("15/06/2008")),
                           Term::val(std::string("31/12/2009"))})));
    // Bounds are inclusive.
    CHECK(between("14/02/2009", "14/02/2009", "14/02/2009"));

    // Malformed dates make the guard false and emit a warning.
    std::vector<std::string> warnings;
    bool ok = evalGuard(guard(BuiltinPred::Between,
                              {Term::val(std::string("01/01/2009")), Term::val(std::string("nonsense")),
                               Term::val(std::string("31/12/2009"))}),
                        [&](const std::string& m) { warnings.push_back(m); });
    CHECK_FALSE(ok);
    CHECK(warnings.size() == 1);

    // Integer comparisons.
    auto cmp = [](BuiltinPred b, int x, int y) {
        return evalGuard(guard(b, {Term::val(std::int64_t(x)), Term::val(std::int64_t(y))}));
    };
    CHECK(cmp(BuiltinPred::Lt, 1, 2));
    CHECK_FALSE(cmp(BuiltinPred::Lt, 2, 2));
    CHECK(cmp(BuiltinPred::Leq, 2, 2));
    CHECK(cmp(BuiltinPred::Eq, 5, 5));
    CHECK(cmp(BuiltinPred::Neq, 5, 6));
}

TEST_CASE("date parsing agrees with the calendar oracle") {
    CHECK(parseDate("01/01/1970") == std::int64_t{0});
    for (const char* s : {"14/02/2009", "31/12/2009", "29/02/2008", "29/02/2009", "31/04/2010",
                          "00/01/2000", "2009-01-01", "1/1/2009", "nonsense", "32/01/2000",
                          "01/13/2000", "15/06/2008"}) {
        CAPTURE(s);
        CHECK(parseDate(s) == dateOracle(s));
    }
    Rng rng(42);
    for (int i = 0; i < 2000; ++i) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%02d/%02d/%04d", rng.below(35), rng.below(16),
                      1969 + rng.below(80));
        CAPTURE(buf);
        CHECK(parseDate(buf) == dateOracle(buf));
    }
    // Ordering carries over: later date, larger number.
    CHECK(*parseDate("02/01/2009") > *parseDate("31/12/2008"));
}

TEST_CASE("instantiation evaluates arithmetic and mints distinct fresh names") {
    FreshNameSupply fresh("T");
    Molecule rhs;
    rhs.atoms.push_back(pa("Count", {Term::add(Term::var("n"), Term::val(std::int64_t{1}))}));
    Substitution s;
    s.vals["n"] = std::int64_t{2};
    auto out = applySubst(rhs, s, {}, fresh);
    REQUIRE(out.size() == 1);
    CHECK(showAtom(out[0]) == showAtom(ga("Count", {std::int64_t{3}})));

    Molecule mint;
    mint.atoms.push_back(pa("I", {Term::var("x")}, {PredVar{"K"}}));
    mint.atoms.push_back(pa("W", {Term::var("x"), Term::var("y")}));
    Substitution s2;
    s2.preds["K"] = pr("K", "CVM");
    auto minted = applySubst(mint, s2, {"x", "y"}, fresh);
    REQUIRE(minted.size() == 2);
    const Value& x0 = minted[0].valArgs[0].value();
    const Value& x1 = minted[1].valArgs[0].value();
    const Value& y1 = minted[1].valArgs[1].value();
    CHECK(compareValue(x0, x1) == 0);                      // same new var, same token
    CHECK(compareValue(x1, y1) != 0);                      // distinct new vars differ
    CHECK(std::holds_alternative<FreshName>(x0));
    CHECK(std::get<PredicateRef>(minted[0].predArgs[0]) == pr("K", "CVM"));

    // Empty molecule instantiates to nothing.
    CHECK(applySubst(Molecule{}, s, {}, fresh).empty());

    // Arithmetic over a non-integer aborts the firing.
    Substitution bad;
    bad.vals["n"] = std::string("oops");
    CHECK_THROWS_AS(applySubst(rhs, bad, {}, fresh), RuntimeFault);
}

TEST_CASE("consumed multiset equals the instantiated non-builtin lhs") {
    Molecule lhs;
    Atom r = pa("R", {Term::var("x")});
    lhs.atoms.push_back(r);
    lhs.atoms.push_back(guard(BuiltinPred::NotNull, {Term::var("x")}));
    std::vector<Atom> sol{ga("R", {std::string("a")}), ga("R", {std::string("b")})};
    for (const MatchResult& m : enumerateMatches(lhs, sol)) {
        FreshNameSupply fresh("T");
        Molecule noGuards;
        noGuards.atoms.push_back(r);
        auto inst = applySubst(noGuards, m.subst, {}, fresh);
        REQUIRE(inst.size() == m.consumed.size());
        CHECK(atomEqual(inst[0], m.consumed[0]));
    }
}

TEST_CASE("matcher agrees with the brute-force enumerator on random instances") {
    Rng rng(0xBEEF);
    int nonEmpty = 0;
    for (int iter = 0; iter < 400; ++iter) {
        CAPTURE(iter);
        // Random solution: up to 8 ground atoms over 3 predicates, small values.
        // Arities are fixed per predicate (P/1, Q/2, R/0; Q also carries one
        // predicate argument) so patterns actually stand a chance of matching.
        auto valArity = [](char n) { return n == 'P' ? 1 : n == 'Q' ? 2 : 0; };
        std::vector<Atom> sol;
        int ns = rng.below(9);
        for (int i = 0; i < ns; ++i) {
            char n = char('P' + rng.below(3));
            std::vector<Value> vals;
            for (int k = 0; k < valArity(n); ++k) {
                if (rng.below(5) == 0) vals.emplace_back(std::string("null"));
                else vals.emplace_back(std::int64_t(rng.below(4)));
            }
            std::vector<PredicateRef> preds;
            if (n == 'Q') preds.push_back(pr("K", rng.coin() ? "A" : "B"));
            sol.push_back(ga(std::string(1, n), std::move(vals), std::move(preds)));
        }
        // Random lhs: up to 3 pattern atoms plus optional guards.
        Molecule lhs;
        int np = 1 + rng.below(3);
        std::vector<std::string> vars{"x", "y", "z"};
        std::set<std::string> usedVars;
        for (int i = 0; i < np; ++i) {
            char n = char('P' + rng.below(3));
            std::vector<Term> args;
            for (int k = 0; k < valArity(n); ++k) {
                if (rng.coin()) {
                    const std::string& v = vars[size_t(rng.below(3))];
                    usedVars.insert(v);
                    args.push_back(Term::var(v));
                } else {
                    args.push_back(Term::val(std::int64_t(rng.below(4))));
                }
            }
            std::vector<PredArg> preds;
            if (n == 'Q')
                preds.push_back(rng.coin() ? PredArg{PredVar{"K"}}
                                           : PredArg{pr("K", rng.coin() ? "A" : "B")});
            lhs.atoms.push_back(pa(std::string(1, n), std::move(args), std::move(preds)));
        }
        if (!usedVars.empty() && rng.below(3) == 0) {
            std::string v = *usedVars.begin();
            switch (rng.below(3)) {
                case 0: lhs.atoms.push_back(guard(BuiltinPred::NotNull, {Term::var(v)})); break;
                case 1: lhs.atoms.push_back(guard(BuiltinPred::Null, {Term::var(v)})); break;
                default:
                    lhs.atoms.push_back(guard(BuiltinPred::Lt,
                                              {Term::var(v), Term::val(std::int64_t(rng.below(4)))}));
            }
        }
        auto expect = bruteForceMatches(lhs, sol);
        auto got = productionMatches(lhs, sol);
        if (!expect.empty()) ++nonEmpty;
        CHECK(got == expect);
    }
    // The generator must actually exercise matching, not just misses.
    CHECK(nonEmpty > 50);
}
