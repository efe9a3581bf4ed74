#ifndef CREOLE_TEST_HELPERS_HPP
#define CREOLE_TEST_HELPERS_HPP

#include <algorithm>
#include <chrono>
#include <random>
#include <set>
#include <sstream>

#include "creole/engine.hpp"
#include "creole/matcher.hpp"

namespace testutil {

using namespace creole;

// ---------------------------------------------------------------------------
// Construction shorthands (resolved atoms on a single VM named "T")

inline PredicateRef pr(const std::string& name, const std::string& vm = "T") {
    return PredicateRef{vm, name};
}

inline Atom ga(const std::string& name, std::vector<Value> vals,
               std::vector<PredicateRef> preds = {}, const std::string& vm = "T") {
    Atom a;
    a.head = pr(name, vm);
    for (PredicateRef& p : preds) a.predArgs.emplace_back(std::move(p));
    for (Value& v : vals) a.valArgs.push_back(Term::val(std::move(v)));
    return a;
}

inline Atom pa(const std::string& name, std::vector<Term> args,
               std::vector<PredArg> preds = {}, const std::string& vm = "T") {
    Atom a;
    a.head = pr(name, vm);
    a.predArgs = std::move(preds);
    a.valArgs = std::move(args);
    return a;
}

inline Atom guard(BuiltinPred b, std::vector<Term> args) {
    Atom a;
    a.head = b;
    a.valArgs = std::move(args);
    return a;
}

inline Rule rule(std::vector<Atom> lhs, std::vector<Atom> rhs,
                 std::vector<std::string> newVars = {}) {
    Rule r;
    r.lhs.atoms = std::move(lhs);
    r.rhs.atoms = std::move(rhs);
    if (newVars.empty()) {
        FreeVars fl = freeVars(r.lhs), fr = freeVars(r.rhs);
        for (const std::string& v : fr.vals)
            if (!fl.vals.count(v)) r.newVars.push_back(v);
    } else {
        r.newVars = std::move(newVars);
    }
    return r;
}

// Registry with relation/multirelation declarations on VM "T".
inline Registry makeReg(
    const std::vector<std::tuple<std::string, PredKind, int, int>>& decls) {
    Registry reg;
    for (const auto& [name, kind, pArity, vArity] : decls)
        reg.add("T", PredicateDecl{name, kind, pArity, vArity, Visibility::Public});
    return reg;
}

// ---------------------------------------------------------------------------
// Independent oracles

// Date oracle via std::chrono civil-calendar types (independent of the
// production DD/MM/YYYY parser).
inline std::optional<std::int64_t> dateOracle(const std::string& s) {
    if (s.size() != 10 || s[2] != '/' || s[5] != '/') return std::nullopt;
    for (size_t i : {0u, 1u, 3u, 4u, 6u, 7u, 8u, 9u})
        if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
    int d = std::stoi(s.substr(0, 2)), m = std::stoi(s.substr(3, 2)),
        y = std::stoi(s.substr(6, 4));
    std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{unsigned(m)},
                                    std::chrono::day{unsigned(d)}};
    if (!ymd.ok()) return std::nullopt;
    return std::chrono::sys_days{ymd}.time_since_epoch().count();
}

// Brute-force match enumerator: tries every injection of non-builtin lhs
// atoms onto solution occurrences and keeps consistent, guard-satisfying
// ones. Returns a canonical multiset-of-consumed-plus-bindings key set.
std::set<std::string> bruteForceMatches(const Molecule& lhs, const std::vector<Atom>& solution);

inline std::string matchKey(const Substitution& s, std::vector<Atom> consumed) {
    std::sort(consumed.begin(), consumed.end(),
              [](const Atom& a, const Atom& b) { return compareAtom(a, b) < 0; });
    std::ostringstream out;
    for (const auto& [k, v] : s.vals) out << k << "=" << showValue(v) << ";";
    for (const auto& [k, v] : s.preds) out << k << "=@" << v.vm << "." << v.name << ";";
    out << "|";
    for (const Atom& a : consumed) out << showAtom(a) << ",";
    return out.str();
}

// Set-semantics relational algebra oracle over tuples of Values.
using Tuple = std::vector<Value>;
struct TupleLess {
    bool operator()(const Tuple& a, const Tuple& b) const {
        return std::lexicographical_compare(
            a.begin(), a.end(), b.begin(), b.end(),
            [](const Value& x, const Value& y) { return compareValue(x, y) < 0; });
    }
};
using TupleSet = std::set<Tuple, TupleLess>;

// ---------------------------------------------------------------------------
// Random-program utilities

struct Rng {
    std::mt19937_64 g;
    explicit Rng(std::uint64_t seed) : g(seed) {}
    int below(int n) { return int(std::uniform_int_distribution<int>(0, n - 1)(g)); }
    bool coin() { return below(2) == 0; }
};

}  // namespace testutil

#endif
