#include "creole/matcher.hpp"

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace creole {

bool isNullValue(const Value& v) {
    const std::string* s = std::get_if<std::string>(&v);
    return s && *s == "null";
}

// Days since the Unix epoch from a civil date (Hinnant's algorithm).
static std::int64_t daysFromCivil(int y, unsigned m, unsigned d) {
    y -= m <= 2;
    const int era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097LL + static_cast<std::int64_t>(doe) - 719468;
}

std::optional<std::int64_t> parseDate(const std::string& s) {
    unsigned d = 0, m = 0;
    int y = 0;
    char tail = 0;
    if (std::sscanf(s.c_str(), "%2u/%2u/%4d%c", &d, &m, &y, &tail) != 3) return std::nullopt;
    if (s.size() != 10 || s[2] != '/' || s[5] != '/') return std::nullopt;
    if (m < 1 || m > 12 || d < 1) return std::nullopt;
    static const unsigned kMonthLen[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    const bool leap = y % 4 == 0 && (y % 100 != 0 || y % 400 == 0);
    if (d > (m == 2 && leap ? 29u : kMonthLen[m - 1])) return std::nullopt;
    return daysFromCivil(y, m, d);
}

// Dates arrive as "DD/MM/YYYY" strings or precomputed day numbers.
static std::optional<std::int64_t> asDay(const Value& v) {
    if (const std::int64_t* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const std::string* s = std::get_if<std::string>(&v)) return parseDate(*s);
    return std::nullopt;
}

bool evalGuard(const Atom& g, const std::function<void(const std::string&)>& warn) {
    const BuiltinPred b = std::get<BuiltinPred>(g.head);
    std::vector<Value> args;
    for (const Term& t : g.valArgs) args.push_back(t.value());
    switch (b) {
        case BuiltinPred::Null: return isNullValue(args[0]);
        case BuiltinPred::NotNull: return !isNullValue(args[0]);
        case BuiltinPred::Between:
        case BuiltinPred::NotBetween: {
            auto a = asDay(args[0]), x = asDay(args[1]), c = asDay(args[2]);
            if (!a || !x || !c) {
                if (warn) warn("guard " + showAtom(g) + ": operand is not a date");
                return false;
            }
            const bool in = *a <= *x && *x <= *c;
            return b == BuiltinPred::Between ? in : !in;
        }
        case BuiltinPred::Eq: return compareValue(args[0], args[1]) == 0;
        case BuiltinPred::Neq: return compareValue(args[0], args[1]) != 0;
        case BuiltinPred::Lt:
        case BuiltinPred::Leq: {
            const std::int64_t* x = std::get_if<std::int64_t>(&args[0]);
            const std::int64_t* y = std::get_if<std::int64_t>(&args[1]);
            if (!x || !y) {
                if (warn) warn("guard " + showAtom(g) + ": operand is not an integer");
                return false;
            }
            return b == BuiltinPred::Lt ? *x < *y : *x <= *y;
        }
    }
    return false;
}

// ---------------------------------------------------------------------------
// Matching

namespace {

bool unifyPred(const PredArg& pat, const PredicateRef& g, Substitution& s) {
    if (const PredicateRef* r = std::get_if<PredicateRef>(&pat)) return *r == g;
    const std::string& id = std::get<PredVar>(pat).id;
    auto it = s.preds.find(id);
    if (it != s.preds.end()) return it->second == g;
    s.preds[id] = g;
    return true;
}

bool unifyTerm(const Term& pat, const Value& g, Substitution& s) {
    if (pat.isValue()) return compareValue(pat.value(), g) == 0;
    if (pat.isVar()) {
        auto it = s.vals.find(pat.var().id);
        if (it != s.vals.end()) return compareValue(it->second, g) == 0;
        s.vals[pat.var().id] = g;
        return true;
    }
    return false;  // Arith never appears in patterns
}

bool unifyAtom(const Atom& pat, const Atom& g, Substitution& s) {
    if (const PredicateRef* r = std::get_if<PredicateRef>(&pat.head)) {
        if (!g.headIsRef() || g.headRef() != *r) return false;
    } else if (const PredVar* pv = std::get_if<PredVar>(&pat.head)) {
        if (!g.headIsRef()) return false;
        if (!unifyPred(PredArg{*pv}, g.headRef(), s)) return false;
    } else {
        return false;
    }
    if (pat.predArgs.size() != g.predArgs.size() || pat.valArgs.size() != g.valArgs.size())
        return false;
    for (size_t i = 0; i < pat.predArgs.size(); ++i)
        if (!unifyPred(pat.predArgs[i], std::get<PredicateRef>(g.predArgs[i]), s)) return false;
    for (size_t i = 0; i < pat.valArgs.size(); ++i)
        if (!unifyTerm(pat.valArgs[i], g.valArgs[i].value(), s)) return false;
    return true;
}

std::string substKey(const Substitution& s) {
    std::ostringstream os;
    for (const auto& [k, v] : s.vals) os << k << "=" << showValue(v) << ";";
    for (const auto& [k, v] : s.preds) os << k << "=@" << v.vm << "." << v.name << ";";
    return os.str();
}

}  // namespace

std::vector<MatchResult> enumerateMatches(const Molecule& lhs, const std::vector<Atom>& solution) {
    std::vector<Atom> consumables, guards;
    for (const Atom& a : lhs.atoms) (a.isBuiltin() ? guards : consumables).push_back(a);

    std::vector<MatchResult> out;
    std::set<std::string> seen;
    std::vector<size_t> chosen(consumables.size());
    std::vector<bool> used(solution.size(), false);

    std::function<void(size_t, Substitution)> go = [&](size_t i, Substitution s) {
        if (i == consumables.size()) {
            for (const Atom& g : guards) {
                Atom inst = g;
                for (Term& t : inst.valArgs) t = Term::val(evalTerm(t, s));
                if (!evalGuard(inst)) return;
            }
            MatchResult mr;
            mr.subst = std::move(s);
            mr.consumedIdx.assign(chosen.begin(), chosen.end());
            std::sort(mr.consumedIdx.begin(), mr.consumedIdx.end());
            for (size_t k : mr.consumedIdx) mr.consumed.push_back(solution[k]);
            std::string key = substKey(mr.subst) + "|";
            for (const Atom& a : mr.consumed) key += showAtom(a) + ",";
            if (seen.insert(key).second) out.push_back(std::move(mr));
            return;
        }
        for (size_t k = 0; k < solution.size(); ++k) {
            if (used[k]) continue;
            Substitution s2 = s;
            if (!unifyAtom(consumables[i], solution[k], s2)) continue;
            used[k] = true;
            chosen[i] = k;
            go(i + 1, std::move(s2));
            used[k] = false;
        }
    };
    go(0, Substitution{});
    return out;
}

Value evalTerm(const Term& t, const Substitution& s) {
    if (t.isValue()) return t.value();
    if (t.isVar()) {
        auto it = s.vals.find(t.var().id);
        if (it == s.vals.end()) throw RuntimeFault("unbound variable " + t.var().id);
        return it->second;
    }
    const Arith& a = t.arith();
    const Value l = evalTerm(a.lhs, s);
    const Value r = evalTerm(a.rhs, s);
    const std::int64_t* li = std::get_if<std::int64_t>(&l);
    const std::int64_t* ri = std::get_if<std::int64_t>(&r);
    if (!li || !ri) throw RuntimeFault("arithmetic over non-integer in " + showTerm(t));
    return a.op == ArithOp::Add ? *li + *ri : *li - *ri;
}

std::vector<Atom> applySubst(const Molecule& m, const Substitution& s,
                             const std::vector<std::string>& newVars, FreshNameSupply& fresh) {
    Substitution full = s;
    for (const std::string& v : newVars) full.vals[v] = fresh.next();
    std::vector<Atom> out;
    for (const Atom& a : m.atoms) {
        Atom g = a;
        g.persistent = false;
        if (const PredVar* pv = std::get_if<PredVar>(&a.head)) {
            auto it = full.preds.find(pv->id);
            if (it == full.preds.end()) {
                // A predicate variable may also be bound through a value
                // position (a reply reference received as a plain value).
                auto vit = full.vals.find(pv->id);
                if (vit != full.vals.end())
                    if (const PredicateRef* r = std::get_if<PredicateRef>(&vit->second)) {
                        g.head = *r;
                        goto headDone;
                    }
                throw RuntimeFault("unbound predicate variable " + pv->id);
            }
            g.head = it->second;
        }
    headDone:
        for (PredArg& p : g.predArgs) {
            if (const PredVar* pv = std::get_if<PredVar>(&p)) {
                auto it = full.preds.find(pv->id);
                if (it == full.preds.end()) throw RuntimeFault("unbound predicate variable " + pv->id);
                p = it->second;
            }
        }
        for (Term& t : g.valArgs) t = Term::val(evalTerm(t, full));
        out.push_back(std::move(g));
    }
    return out;
}

}  // namespace creole
