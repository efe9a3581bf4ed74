#include "creole/dist.hpp"

#include <algorithm>

#include "creole/wire.hpp"

namespace creole {

ElabError::ElabError(std::vector<std::string> diags)
    : std::runtime_error([&] {
          std::string m;
          for (const std::string& d : diags) m += (m.empty() ? "" : "\n") + d;
          return m.empty() ? std::string("elaboration failed") : m;
      }()),
      diagnostics(std::move(diags)) {}

VmInstance* DistributedConfig::findVm(const std::string& id) {
    for (VmInstance& v : vms)
        if (v.id == id) return &v;
    return nullptr;
}
const VmInstance* DistributedConfig::findVm(const std::string& id) const {
    for (const VmInstance& v : vms)
        if (v.id == id) return &v;
    return nullptr;
}

// ---------------------------------------------------------------------------
// Elaboration

namespace {

struct Scope {
    std::string self;
    std::map<std::string, PredicateDecl> own;
    std::map<std::string, std::vector<PredicateRef>> visible;  // server publics
};

struct Elab {
    std::vector<std::string> diags;
    Registry* reg = nullptr;
    const std::map<std::string, NativeFactory>* natives = nullptr;
    std::vector<VmInstance> vms;
    std::map<std::string, std::vector<std::pair<std::string, PredicateDecl>>> grantsByVm;

    void err(const std::string& m) { diags.push_back(m); }

    const PredicateDecl* lookup(const PredicateRef& r) { return reg ? reg->find(r) : nullptr; }

    // Resolves one molecule in the scope of `sc`. `lhsSide` enforces locality
    // on heads; `boundPreds` carries the lhs predicate binders for rhs checks.
    Molecule resolveMolecule(const Molecule& m, const Scope& sc, bool lhsSide,
                             const std::set<std::string>& boundPreds, const std::string& where) {
        Molecule out;
        for (const Atom& a0 : m.atoms) {
            Atom a = a0;
            if (a.isBuiltin()) {
                if (!lhsSide) err(where + ": builtin " + showAtom(a) + " cannot be produced");
                out.atoms.push_back(a);
                continue;
            }
            const std::string headName = std::get<PredVar>(a.head).id;
            auto ownIt = sc.own.find(headName);
            auto visIt = sc.visible.find(headName);
            if (lhsSide) {
                if (ownIt != sc.own.end()) {
                    a.head = PredicateRef{sc.self, headName};
                } else if (visIt != sc.visible.end()) {
                    err(where + ": consuming " + headName +
                        " violates locality (declared by the server, not this VM)");
                    continue;
                } else {
                    err(where + ": cannot consume undeclared predicate " + headName);
                    continue;
                }
            } else {
                if (ownIt != sc.own.end()) {
                    a.head = PredicateRef{sc.self, headName};
                } else if (visIt != sc.visible.end()) {
                    if (visIt->second.size() > 1) {
                        err(where + ": predicate " + headName + " is visible from several servers");
                        continue;
                    }
                    a.head = visIt->second[0];
                } else if (boundPreds.count(headName)) {
                    // stays a PredVar; bound at firing time
                } else {
                    err(where + ": unresolved predicate " + headName);
                    continue;
                }
            }
            for (PredArg& p : a.predArgs) {
                const std::string argName = std::get<PredVar>(p).id;
                auto aoIt = sc.own.find(argName);
                auto avIt = sc.visible.find(argName);
                if (aoIt != sc.own.end()) {
                    if (aoIt->second.vis != Visibility::Public)
                        err(where + ": private predicate " + argName +
                            " cannot be passed as an argument");
                    p = PredicateRef{sc.self, argName};
                } else if (avIt != sc.visible.end()) {
                    if (avIt->second.size() > 1) {
                        err(where + ": predicate " + argName + " is visible from several servers");
                    } else {
                        p = avIt->second[0];
                    }
                } else if (lhsSide || boundPreds.count(argName)) {
                    // binder (lhs) or bound occurrence (rhs)
                } else {
                    err(where + ": unresolved predicate argument " + argName);
                }
            }
            if (a.headIsRef()) {
                const PredicateDecl* d = lookup(a.headRef());
                if (d) {
                    if (int(a.predArgs.size()) != d->predArity ||
                        int(a.valArgs.size()) != d->valArity)
                        err(where + ": arity mismatch for " + a.headRef().name + " (expected " +
                            std::to_string(d->predArity) + "/" + std::to_string(d->valArity) +
                            ", got " + std::to_string(a.predArgs.size()) + "/" +
                            std::to_string(a.valArgs.size()) + ")");
                }
            }
            out.atoms.push_back(std::move(a));
        }
        return out;
    }

    ScriptPtr resolveScript(const ScriptPtr& s, const Scope& sc) {
        switch (s->kind) {
            case ScriptKind::Empty: return s;
            case ScriptKind::RuleNode: {
                Rule r = s->rule;
                const std::string where = sc.self + ": rule " + showRule(r);
                std::set<std::string> boundPreds;
                for (const Atom& a : r.lhs.atoms) {
                    if (a.isBuiltin()) continue;
                    for (const PredArg& p : a.predArgs)
                        if (const PredVar* pv = std::get_if<PredVar>(&p))
                            if (!sc.own.count(pv->id) && !sc.visible.count(pv->id))
                                boundPreds.insert(pv->id);
                }
                r.lhs = resolveMolecule(r.lhs, sc, true, {}, where);
                r.rhs = resolveMolecule(r.rhs, sc, false, boundPreds, where);
                return scriptRule(desugarKeep(r));
            }
            case ScriptKind::Par: {
                std::vector<ScriptPtr> kids;
                for (const ScriptPtr& c : s->children) kids.push_back(resolveScript(c, sc));
                return scriptPar(std::move(kids));
            }
            case ScriptKind::Seq:
                return scriptSeq(resolveScript(s->children[0], sc),
                                 resolveScript(s->children[1], sc));
            case ScriptKind::Repl: return scriptRepl(resolveScript(s->children[0], sc));
        }
        return s;
    }

    void collectPublics(const ProcessNode& p,
                        std::vector<std::pair<std::string, PredicateDecl>>& out) {
        switch (p.kind) {
            case ProcessKind::Vm:
                for (const PredicateDecl& d : p.decls)
                    if (d.vis == Visibility::Public) out.push_back({p.vmName, d});
                break;
            case ProcessKind::Builtin:
                if (natives && natives->count(p.builtinKind)) {
                    auto h = natives->at(p.builtinKind)(p.fixturePath, p.vmName);
                    for (const PredicateDecl& d : h->decls()) out.push_back({p.vmName, d});
                }
                break;
            case ProcessKind::Par:
                collectPublics(*p.left, out);
                collectPublics(*p.right, out);
                break;
            case ProcessKind::Let:
                // A let binds its server's names inside itself; only the
                // client side's exports escape.
                collectPublics(*p.right, out);
                break;
        }
    }

    void declare(const ProcessNode& p) {
        switch (p.kind) {
            case ProcessKind::Vm: {
                if (std::any_of(vms.begin(), vms.end(),
                                [&](const VmInstance& v) { return v.id == p.vmName; })) {
                    err("duplicate VM name " + p.vmName);
                    return;
                }
                VmInstance vm;
                vm.id = p.vmName;
                vm.decls = p.decls;
                for (const PredicateDecl& d : p.decls) reg->add(p.vmName, d);
                vms.push_back(std::move(vm));
                break;
            }
            case ProcessKind::Builtin: {
                if (!natives || !natives->count(p.builtinKind)) {
                    err("no builtin VM implementation registered for kind " + p.builtinKind);
                    return;
                }
                if (std::any_of(vms.begin(), vms.end(),
                                [&](const VmInstance& v) { return v.id == p.vmName; })) {
                    err("duplicate VM name " + p.vmName);
                    return;
                }
                VmInstance vm;
                vm.id = p.vmName;
                vm.nativePrototype = natives->at(p.builtinKind)(p.fixturePath, p.vmName);
                vm.native = vm.nativePrototype;
                vm.decls = vm.nativePrototype->decls();
                for (const PredicateDecl& d : vm.decls) reg->add(p.vmName, d);
                vms.push_back(std::move(vm));
                break;
            }
            default:
                declare(*p.left);
                declare(*p.right);
        }
    }

    void resolve(const ProcessNode& p,
                 std::vector<std::pair<std::string, PredicateDecl>> grants) {
        switch (p.kind) {
            case ProcessKind::Vm: {
                VmInstance* vm = nullptr;
                for (VmInstance& v : vms)
                    if (v.id == p.vmName) vm = &v;
                if (!vm) return;
                Scope sc;
                sc.self = p.vmName;
                for (const PredicateDecl& d : p.decls) sc.own[d.name] = d;
                for (const auto& [srv, d] : grants)
                    if (!sc.own.count(d.name)) sc.visible[d.name].push_back({srv, d.name});
                ScriptPtr body = resolveScript(p.body, sc);
                vm->config.reaction = {body};
                break;
            }
            case ProcessKind::Builtin: break;
            case ProcessKind::Let: {
                resolve(*p.left, grants);
                std::vector<std::pair<std::string, PredicateDecl>> granted;
                collectPublics(*p.left, granted);
                std::vector<std::pair<std::string, PredicateDecl>> next = grants;
                next.insert(next.end(), granted.begin(), granted.end());
                resolve(*p.right, std::move(next));
                break;
            }
            case ProcessKind::Par:
                resolve(*p.left, grants);
                resolve(*p.right, grants);
                break;
        }
    }
};

}  // namespace

std::vector<std::string> checkProcess(const ProcessNode& p,
                                      const std::map<std::string, NativeFactory>& natives) {
    Registry scratch;
    Elab e;
    e.reg = &scratch;
    e.natives = &natives;
    e.declare(p);
    e.resolve(p, {});
    return e.diags;
}

DistributedConfig elaborate(const ProcessNode& p, Registry& reg,
                            const std::map<std::string, NativeFactory>& natives) {
    Elab e;
    e.reg = &reg;
    e.natives = &natives;
    e.declare(p);
    e.resolve(p, {});
    if (!e.diags.empty()) throw ElabError(std::move(e.diags));
    DistributedConfig d;
    d.vms = std::move(e.vms);
    std::sort(d.vms.begin(), d.vms.end(),
              [](const VmInstance& a, const VmInstance& b) { return a.id < b.id; });
    for (VmInstance& vm : d.vms) normalize(vm.config, reg);
    return d;
}

// ---------------------------------------------------------------------------
// Distributed progression

void sweepOut(DistributedConfig& d, const Registry& reg, Trace* trace) {
    for (VmInstance& vm : d.vms) {
        std::vector<Atom> keep;
        for (Atom& a : vm.config.solution) {
            if (a.headIsRef() && a.headRef().vm != vm.id) {
                if (trace)
                    trace->push_back({{"ev", "migrated"},
                                      {"direction", "out"},
                                      {"vm", vm.id},
                                      {"atom", showAtom(a)}});
                d.ether.push_back(std::move(a));
            } else {
                keep.push_back(std::move(a));
            }
        }
        vm.config.solution = std::move(keep);
        normalize(vm.config, reg);
    }
    std::sort(d.ether.begin(), d.ether.end(),
              [](const Atom& a, const Atom& b) { return compareAtom(a, b) < 0; });
}

std::string distCanonicalForm(const DistributedConfig& d, const Registry& reg) {
    std::vector<std::string> header;
    std::vector<std::vector<Atom>> sections;
    for (const VmInstance& vm : d.vms) {
        Configuration c = vm.config;
        normalize(c, reg);
        std::string h = "[" + vm.id + "] " + canonicalReaction(c.reaction);
        if (vm.native) h += " N{" + vm.native->stateKey() + "}";
        header.push_back(std::move(h));
        sections.push_back(std::move(c.solution));
    }
    sections.push_back(d.ether);
    std::vector<const std::vector<Atom>*> ptrs;
    for (const std::vector<Atom>& s : sections) ptrs.push_back(&s);
    std::vector<std::string> atomParts = canonicalAtoms(ptrs);
    std::string out;
    for (size_t i = 0; i < header.size(); ++i) out += header[i] + " " + atomParts[i] + "\n";
    out += "E " + atomParts.back();
    return out;
}

std::vector<DistCandidate> distCandidates(const DistributedConfig& d, const Registry& reg,
                                          Trace*) {
    const std::string selfKey = distCanonicalForm(d, reg);
    std::vector<DistCandidate> out;
    std::set<std::string> seen;

    auto consider = [&](DistCandidate cand) {
        sweepOut(cand.result, reg, &cand.extraEvents);
        cand.key = distCanonicalForm(cand.result, reg);
        if (cand.key == selfKey) return;
        if (!seen.insert(cand.key).second) return;
        out.push_back(std::move(cand));
    };

    for (size_t i = 0; i < d.vms.size(); ++i) {
        const VmInstance& vm = d.vms[i];
        if (vm.isNative()) {
            if (vm.config.solution.empty()) continue;
            DistCandidate cand;
            cand.result = d;
            VmInstance& tvm = cand.result.vms[i];
            tvm.native = vm.native->clone();
            Atom req = tvm.config.solution.front();
            tvm.config.solution.erase(tvm.config.solution.begin());
            tvm.native->warn = [&cand, id = vm.id](const std::string& m) {
                cand.extraEvents.push_back({{"ev", "warning"}, {"vm", id}, {"msg", m}});
            };
            std::vector<Atom> produced = tvm.native->handle(req);
            tvm.native->warn = nullptr;
            nlohmann::json prod = nlohmann::json::array();
            for (Atom& a : produced) {
                prod.push_back(showAtom(a));
                tvm.config.solution.push_back(std::move(a));
            }
            cand.event = {{"ev", "native"},
                          {"vm", vm.id},
                          {"request", showAtom(req)},
                          {"produced", prod}};
            consider(std::move(cand));
        } else {
            FreshNameSupply supply(vm.id);
            supply.resume(vm.freshMark);
            EngineCtx ctx{&reg, vm.id, &supply, nullptr};
            for (StepCandidate& sc : stepCandidates(vm.config, ctx)) {
                DistCandidate cand;
                cand.result = d;
                cand.result.vms[i].config = std::move(sc.result);
                cand.result.vms[i].freshMark = sc.freshEnd;
                cand.event = std::move(sc.event);
                cand.extraEvents = std::move(sc.extraEvents);
                consider(std::move(cand));
            }
        }
    }
    for (size_t j = 0; j < d.ether.size(); ++j) {
        const Atom& a = d.ether[j];
        const VmInstance* owner = d.findVm(a.headRef().vm);
        if (!owner) throw std::runtime_error("ether atom with no owning VM: " + showAtom(a));
        DistCandidate cand;
        cand.result = d;
        cand.result.ether.erase(cand.result.ether.begin() + long(j));
        VmInstance* tvm = cand.result.findVm(a.headRef().vm);
        tvm->config.solution.push_back(a);
        normalize(tvm->config, reg);
        cand.event = {{"ev", "migrated"}, {"direction", "in"}, {"vm", owner->id},
                      {"atom", showAtom(a)}};
        consider(std::move(cand));
    }
    std::sort(out.begin(), out.end(),
              [](const DistCandidate& a, const DistCandidate& b) { return a.key < b.key; });
    return out;
}

std::optional<DistributedConfig> distStep(const DistributedConfig& d, const Registry& reg,
                                          Scheduler& sch, Trace* trace) {
    std::vector<DistCandidate> cands = distCandidates(d, reg);
    if (cands.empty()) return std::nullopt;
    DistCandidate& pick = cands[sch.choose(cands.size())];
    if (trace) {
        trace->push_back(std::move(pick.event));
        for (TraceEvent& e : pick.extraEvents) trace->push_back(std::move(e));
    }
    return std::move(pick.result);
}

DistRunResult runDistributed(DistributedConfig d, const Registry& reg, Scheduler& sch,
                             size_t maxSteps, bool withTrace) {
    DistRunResult rr;
    Trace* tr = withTrace ? &rr.trace : nullptr;
    sweepOut(d, reg, tr);
    while (rr.steps < maxSteps) {
        std::optional<DistributedConfig> next = distStep(d, reg, sch, tr);
        if (!next) {
            rr.config = std::move(d);
            rr.status = RunStatus::Final;
            return rr;
        }
        d = std::move(*next);
        ++rr.steps;
    }
    rr.config = std::move(d);
    rr.status = RunStatus::BudgetExhausted;
    return rr;
}

std::map<std::string, DistributedConfig> distExhaustiveFinals(const DistributedConfig& d,
                                                              const Registry& reg, Bounds bounds) {
    DistributedConfig start = d;
    sweepOut(start, reg);
    std::map<std::string, DistributedConfig> finals;
    std::set<std::string> visited{distCanonicalForm(start, reg)};
    std::vector<DistributedConfig> frontier{std::move(start)};
    for (size_t depth = 0; !frontier.empty(); ++depth) {
        if (depth > bounds.maxDepth)
            throw BoundExceeded("distributed exploration exceeded depth " +
                                std::to_string(bounds.maxDepth));
        std::vector<DistributedConfig> next;
        for (DistributedConfig& st : frontier) {
            std::vector<DistCandidate> cands = distCandidates(st, reg);
            if (cands.empty()) {
                finals.emplace(distCanonicalForm(st, reg), std::move(st));
                continue;
            }
            for (DistCandidate& cand : cands) {
                if (!visited.insert(cand.key).second) continue;
                if (visited.size() > bounds.maxStates)
                    throw BoundExceeded("distributed exploration exceeded " +
                                        std::to_string(bounds.maxStates) + " states");
                next.push_back(std::move(cand.result));
            }
        }
        frontier = std::move(next);
    }
    return finals;
}

}  // namespace creole
