#include "creole/engine.hpp"

#include <algorithm>
#include <cctype>

#include "creole/wire.hpp"

namespace creole {

namespace {

void splitTopPar(const ScriptPtr& s, std::vector<ScriptPtr>& out) {
    if (!s || s->kind == ScriptKind::Empty) return;
    if (s->kind == ScriptKind::Par)
        for (const ScriptPtr& c : s->children) splitTopPar(c, out);
    else
        out.push_back(s);
}

ScriptPtr replaceParChild(const ScriptNode& par, size_t i, ScriptPtr repl) {
    std::vector<ScriptPtr> kids = par.children;
    kids[i] = std::move(repl);
    return scriptPar(std::move(kids));
}

}  // namespace

std::vector<ActiveRule> activeRules(const ScriptPtr& s) {
    std::vector<ActiveRule> out;
    switch (s->kind) {
        case ScriptKind::Empty: break;
        case ScriptKind::RuleNode: out.push_back({s->rule, scriptEmpty()}); break;
        case ScriptKind::Par:
            for (size_t i = 0; i < s->children.size(); ++i)
                for (ActiveRule& f : activeRules(s->children[i]))
                    out.push_back({f.rule, replaceParChild(*s, i, f.residue)});
            break;
        case ScriptKind::Seq:
            // Rules in the left part fire against the shared solution; the
            // right part contributes nothing until the left is skipped.
            for (ActiveRule& f : activeRules(s->children[0]))
                out.push_back({f.rule, scriptSeq(f.residue, s->children[1])});
            break;
        case ScriptKind::Repl:
            for (ActiveRule& f : activeRules(s->children[0]))
                out.push_back({f.rule, scriptPar({s, f.residue})});
            break;
    }
    return out;
}

// A skippable sequence occurrence: left part + item rebuilt with the sequence
// replaced by its right part.
namespace {

struct SkipSite {
    ScriptPtr left;
    ScriptPtr residue;
};

std::vector<SkipSite> skipSites(const ScriptPtr& s) {
    std::vector<SkipSite> out;
    switch (s->kind) {
        case ScriptKind::Seq:
            out.push_back({s->children[0], s->children[1]});
            for (SkipSite& k : skipSites(s->children[0]))
                out.push_back({k.left, scriptSeq(k.residue, s->children[1])});
            break;
        case ScriptKind::Par:
            for (size_t i = 0; i < s->children.size(); ++i)
                for (SkipSite& k : skipSites(s->children[i]))
                    out.push_back({k.left, replaceParChild(*s, i, k.residue)});
            break;
        case ScriptKind::Repl:
            for (SkipSite& k : skipSites(s->children[0]))
                out.push_back({k.left, scriptPar({s, k.residue})});
            break;
        default: break;
    }
    return out;
}

}  // namespace

void normalize(Configuration& c, const Registry& reg, std::vector<Atom>* removed) {
    std::vector<ScriptPtr> items;
    for (const ScriptPtr& s : c.reaction) splitTopPar(s, items);
    c.reaction = std::move(items);

    std::sort(c.solution.begin(), c.solution.end(),
              [](const Atom& a, const Atom& b) { return compareAtom(a, b) < 0; });
    std::vector<Atom> kept;
    for (Atom& a : c.solution) {
        const bool dup = !kept.empty() && atomEqual(kept.back(), a) && a.headIsRef() &&
                         reg.isRelation(a.headRef());
        if (dup) {
            if (removed) removed->push_back(a);
        } else {
            kept.push_back(std::move(a));
        }
    }
    c.solution = std::move(kept);
}

// ---------------------------------------------------------------------------
// Canonical forms

namespace {

// Serialization with fresh-name tokens replaced by a placeholder, used to fix
// an order before first-occurrence renaming.
std::string maskFresh(const std::string& s) {
    std::string out;
    for (size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '#') {
            out += "#\xFF";
            while (i + 1 < s.size() && (std::isalnum((unsigned char)s[i + 1]) || s[i + 1] == ':' ||
                                        s[i + 1] == '_' || s[i + 1] == '-'))
                ++i;
        } else {
            out += s[i];
        }
    }
    return out;
}

void collectFresh(const Value& v, std::vector<FreshName>& order) {
    if (const FreshName* f = std::get_if<FreshName>(&v))
        if (std::find(order.begin(), order.end(), *f) == order.end()) order.push_back(*f);
}

Atom renameAtom(const Atom& a, const std::map<FreshName, std::uint64_t>& ids) {
    Atom out = a;
    for (Term& t : out.valArgs) {
        if (!t.isValue()) continue;
        if (const FreshName* f = std::get_if<FreshName>(&t.value()))
            t = Term::val(FreshName{"", ids.at(*f)});
    }
    return out;
}

}  // namespace

std::string canonicalReaction(const std::vector<ScriptPtr>& reaction) {
    // Erase unfired replication unfoldings: an item congruent to the body of a
    // present replication is redundant.
    std::vector<std::string> rparts;
    for (const ScriptPtr& s : reaction) {
        bool redundant = false;
        if (s->kind != ScriptKind::Repl)
            for (const ScriptPtr& r : reaction)
                if (r->kind == ScriptKind::Repl && compareScript(*r->children[0], *s) == 0) {
                    redundant = true;
                    break;
                }
        if (!redundant) rparts.push_back(showScript(*s));
    }
    std::sort(rparts.begin(), rparts.end());
    std::string out = "R{";
    for (const std::string& p : rparts) out += p + " | ";
    out += "}";
    return out;
}

std::vector<std::string> canonicalAtoms(const std::vector<const std::vector<Atom>*>& sections) {
    // Fix an order by fresh-masked print per section, then assign fresh ids by
    // first occurrence scanning all sections in order.
    std::vector<std::vector<size_t>> order(sections.size());
    for (size_t s = 0; s < sections.size(); ++s) {
        const std::vector<Atom>& atoms = *sections[s];
        std::vector<size_t> idx(atoms.size());
        for (size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        std::vector<std::string> masked(atoms.size());
        for (size_t i = 0; i < idx.size(); ++i) masked[i] = maskFresh(showAtom(atoms[i]));
        std::stable_sort(idx.begin(), idx.end(),
                         [&](size_t a, size_t b) { return masked[a] < masked[b]; });
        order[s] = std::move(idx);
    }
    std::vector<FreshName> firstSeen;
    for (size_t s = 0; s < sections.size(); ++s)
        for (size_t i : order[s])
            for (const Term& t : (*sections[s])[i].valArgs)
                if (t.isValue()) collectFresh(t.value(), firstSeen);
    std::map<FreshName, std::uint64_t> ids;
    for (size_t k = 0; k < firstSeen.size(); ++k) ids[firstSeen[k]] = k;

    std::vector<std::string> out;
    for (size_t s = 0; s < sections.size(); ++s) {
        std::vector<std::string> parts;
        for (size_t i : order[s]) parts.push_back(showAtom(renameAtom((*sections[s])[i], ids)));
        std::sort(parts.begin(), parts.end());
        std::string joined = "S{";
        for (const std::string& p : parts) joined += p + " | ";
        joined += "}";
        out.push_back(std::move(joined));
    }
    return out;
}

std::string canonicalForm(const Configuration& c, const Registry& reg) {
    Configuration n = c;
    normalize(n, reg);
    return canonicalReaction(n.reaction) + " " + canonicalAtoms({&n.solution})[0];
}

// ---------------------------------------------------------------------------
// Progression

std::vector<StepCandidate> stepCandidates(const Configuration& c, EngineCtx& ctx) {
    const std::string selfKey = canonicalForm(c, *ctx.reg);
    const std::uint64_t base = ctx.fresh ? ctx.fresh->mark() : 0;
    std::vector<StepCandidate> out;
    std::set<std::string> seen;

    auto consider = [&](StepCandidate cand) {
        std::vector<Atom> removed;
        normalize(cand.result, *ctx.reg, &removed);
        cand.key = canonicalForm(cand.result, *ctx.reg);
        if (cand.key == selfKey) return;
        if (!removed.empty()) {
            nlohmann::json rm = nlohmann::json::array();
            for (const Atom& a : removed) rm.push_back(showAtom(a));
            cand.extraEvents.push_back({{"ev", "dedup"}, {"vm", ctx.vmId}, {"removed", rm}});
        }
        if (!seen.insert(cand.key).second) return;
        out.push_back(std::move(cand));
    };

    for (size_t i = 0; i < c.reaction.size(); ++i) {
        for (const ActiveRule& f : activeRules(c.reaction[i])) {
            for (const MatchResult& m : enumerateMatches(f.rule.lhs, c.solution)) {
                FreshNameSupply spec(ctx.vmId);
                spec.resume(base);
                std::vector<Atom> produced;
                try {
                    produced = applySubst(f.rule.rhs, m.subst, f.rule.newVars, spec);
                } catch (const RuntimeFault&) {
                    throw;  // firing aborts; configuration unchanged
                }
                StepCandidate cand;
                cand.result.reaction = c.reaction;
                cand.result.reaction[i] = f.residue;
                std::set<size_t> gone(m.consumedIdx.begin(), m.consumedIdx.end());
                for (size_t k = 0; k < c.solution.size(); ++k)
                    if (!gone.count(k)) cand.result.solution.push_back(c.solution[k]);
                for (const Atom& a : produced) cand.result.solution.push_back(a);
                cand.freshEnd = spec.mark();
                nlohmann::json consumed = nlohmann::json::array(), prod = nlohmann::json::array();
                for (const Atom& a : m.consumed) consumed.push_back(showAtom(a));
                for (const Atom& a : produced) prod.push_back(showAtom(a));
                nlohmann::json subst = nlohmann::json::object();
                for (const auto& [k, v] : m.subst.vals) subst[k] = showValue(v);
                for (const auto& [k, v] : m.subst.preds) subst[k] = "@" + v.vm + "." + v.name;
                cand.event = {{"ev", "fired"},   {"vm", ctx.vmId},       {"rule", showRule(f.rule)},
                              {"subst", subst},  {"consumed", consumed}, {"produced", prod}};
                consider(std::move(cand));
            }
        }
        for (const SkipSite& k : skipSites(c.reaction[i])) {
            bool blocked;
            if (k.left->kind == ScriptKind::Empty) {
                blocked = true;  // an exhausted left part never progresses
            } else {
                Configuration sub;
                sub.reaction = {k.left};
                sub.solution = c.solution;
                normalize(sub, *ctx.reg);
                blocked = !progresses(sub, ctx);
            }
            if (!blocked) continue;
            StepCandidate cand;
            cand.result.reaction = c.reaction;
            cand.result.reaction[i] = k.residue;
            cand.result.solution = c.solution;
            cand.freshEnd = base;
            cand.event = {{"ev", "skipped"}, {"vm", ctx.vmId}, {"seq", showScript(*k.left)}};
            consider(std::move(cand));
        }
    }
    std::sort(out.begin(), out.end(),
              [](const StepCandidate& a, const StepCandidate& b) { return a.key < b.key; });
    return out;
}

bool progresses(const Configuration& c, EngineCtx& ctx) {
    return !stepCandidates(c, ctx).empty();
}

std::optional<Configuration> step(const Configuration& c, EngineCtx& ctx, Scheduler& sch) {
    std::vector<StepCandidate> cands = stepCandidates(c, ctx);
    if (cands.empty()) return std::nullopt;
    StepCandidate& pick = cands[sch.choose(cands.size())];
    if (ctx.fresh) ctx.fresh->resume(pick.freshEnd);
    if (ctx.trace) {
        ctx.trace->push_back(pick.event);
        for (TraceEvent& e : pick.extraEvents) ctx.trace->push_back(std::move(e));
    }
    return std::move(pick.result);
}

RunResult run(Configuration c, EngineCtx& ctx, Scheduler& sch, size_t maxSteps) {
    normalize(c, *ctx.reg);
    RunResult rr;
    while (rr.steps < maxSteps) {
        std::optional<Configuration> next = step(c, ctx, sch);
        if (!next) {
            rr.config = std::move(c);
            rr.status = RunStatus::Final;
            return rr;
        }
        c = std::move(*next);
        ++rr.steps;
    }
    rr.config = std::move(c);
    rr.status = RunStatus::BudgetExhausted;
    return rr;
}

std::map<std::string, Configuration> exhaustiveFinals(const Configuration& c, EngineCtx& ctx,
                                                      Bounds bounds) {
    struct State {
        Configuration config;
        std::uint64_t freshMark;
    };
    Configuration start = c;
    normalize(start, *ctx.reg);
    const std::uint64_t baseMark = ctx.fresh ? ctx.fresh->mark() : 0;

    std::map<std::string, Configuration> finals;
    std::set<std::string> visited;
    std::vector<State> frontier{{start, baseMark}};
    visited.insert(canonicalForm(start, *ctx.reg));

    for (size_t depth = 0; !frontier.empty(); ++depth) {
        if (depth > bounds.maxDepth)
            throw BoundExceeded("exhaustive exploration exceeded depth " +
                                std::to_string(bounds.maxDepth));
        std::vector<State> next;
        for (State& st : frontier) {
            FreshNameSupply supply(ctx.vmId);
            supply.resume(st.freshMark);
            EngineCtx sub{ctx.reg, ctx.vmId, &supply, nullptr};
            std::vector<StepCandidate> cands = stepCandidates(st.config, sub);
            if (cands.empty()) {
                finals.emplace(canonicalForm(st.config, *ctx.reg), st.config);
                continue;
            }
            for (StepCandidate& cand : cands) {
                if (!visited.insert(cand.key).second) continue;
                if (visited.size() > bounds.maxStates)
                    throw BoundExceeded("exhaustive exploration exceeded " +
                                        std::to_string(bounds.maxStates) + " states");
                next.push_back({std::move(cand.result), cand.freshEnd});
            }
        }
        frontier = std::move(next);
    }
    return finals;
}

}  // namespace creole
