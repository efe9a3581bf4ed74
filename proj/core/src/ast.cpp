#include "creole/ast.hpp"

#include <algorithm>
#include <sstream>

namespace creole {

const char* builtinName(BuiltinPred b) {
    switch (b) {
        case BuiltinPred::Null: return "Null";
        case BuiltinPred::NotNull: return "NotNull";
        case BuiltinPred::Between: return "Between";
        case BuiltinPred::NotBetween: return "NotBetween";
        case BuiltinPred::Lt: return "Lt";
        case BuiltinPred::Leq: return "Leq";
        case BuiltinPred::Eq: return "Eq";
        case BuiltinPred::Neq: return "Neq";
    }
    return "?";
}

std::optional<BuiltinPred> builtinByName(const std::string& name) {
    static const std::map<std::string, BuiltinPred> table = {
        {"Null", BuiltinPred::Null},       {"NotNull", BuiltinPred::NotNull},
        {"Between", BuiltinPred::Between}, {"NotBetween", BuiltinPred::NotBetween},
        {"Lt", BuiltinPred::Lt},           {"Leq", BuiltinPred::Leq},
        {"Eq", BuiltinPred::Eq},           {"Neq", BuiltinPred::Neq},
    };
    auto it = table.find(name);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

int builtinArity(BuiltinPred b) {
    switch (b) {
        case BuiltinPred::Null:
        case BuiltinPred::NotNull: return 1;
        case BuiltinPred::Between:
        case BuiltinPred::NotBetween: return 3;
        default: return 2;
    }
}

Term Term::add(Term l, Term r) {
    return Term{std::make_shared<const Arith>(Arith{ArithOp::Add, std::move(l), std::move(r)})};
}
Term Term::sub(Term l, Term r) {
    return Term{std::make_shared<const Arith>(Arith{ArithOp::Sub, std::move(l), std::move(r)})};
}

int compareValue(const Value& a, const Value& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    int r = 0;
    std::visit(
        [&](const auto& va) {
            using T = std::decay_t<decltype(va)>;
            const T& vb = std::get<T>(b);
            if (va < vb) r = -1;
            else if (vb < va) r = 1;
        },
        a);
    return r;
}

int compareTerm(const Term& a, const Term& b) {
    if (a.node.index() != b.node.index()) return a.node.index() < b.node.index() ? -1 : 1;
    if (a.isValue()) return compareValue(a.value(), b.value());
    if (a.isVar()) {
        if (a.var() < b.var()) return -1;
        if (b.var() < a.var()) return 1;
        return 0;
    }
    const Arith& x = a.arith();
    const Arith& y = b.arith();
    if (x.op != y.op) return x.op < y.op ? -1 : 1;
    if (int c = compareTerm(x.lhs, y.lhs)) return c;
    return compareTerm(x.rhs, y.rhs);
}

static int comparePredArg(const PredArg& a, const PredArg& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    int r = 0;
    std::visit(
        [&](const auto& va) {
            using T = std::decay_t<decltype(va)>;
            const T& vb = std::get<T>(b);
            if (va < vb) r = -1;
            else if (vb < va) r = 1;
        },
        a);
    return r;
}

static int compareHead(const AtomHead& a, const AtomHead& b) {
    if (a.index() != b.index()) return a.index() < b.index() ? -1 : 1;
    int r = 0;
    std::visit(
        [&](const auto& va) {
            using T = std::decay_t<decltype(va)>;
            const T& vb = std::get<T>(b);
            if (va < vb) r = -1;
            else if (vb < va) r = 1;
        },
        a);
    return r;
}

int compareAtom(const Atom& a, const Atom& b) {
    if (int c = compareHead(a.head, b.head)) return c;
    if (a.predArgs.size() != b.predArgs.size())
        return a.predArgs.size() < b.predArgs.size() ? -1 : 1;
    for (size_t i = 0; i < a.predArgs.size(); ++i)
        if (int c = comparePredArg(a.predArgs[i], b.predArgs[i])) return c;
    if (a.valArgs.size() != b.valArgs.size()) return a.valArgs.size() < b.valArgs.size() ? -1 : 1;
    for (size_t i = 0; i < a.valArgs.size(); ++i)
        if (int c = compareTerm(a.valArgs[i], b.valArgs[i])) return c;
    if (a.persistent != b.persistent) return a.persistent ? 1 : -1;
    return 0;
}

bool atomEqual(const Atom& a, const Atom& b) { return compareAtom(a, b) == 0; }

bool Atom::isGround() const {
    if (persistent) return false;
    if (!headIsRef() && !isBuiltin()) return false;
    for (const PredArg& p : predArgs)
        if (!std::holds_alternative<PredicateRef>(p)) return false;
    for (const Term& t : valArgs)
        if (!t.isValue()) return false;
    return true;
}

static void termVars(const Term& t, std::set<std::string>& out) {
    if (t.isVar()) out.insert(t.var().id);
    else if (t.isArith()) {
        termVars(t.arith().lhs, out);
        termVars(t.arith().rhs, out);
    }
}

FreeVars freeVars(const Atom& a) {
    FreeVars fv;
    if (const PredVar* pv = std::get_if<PredVar>(&a.head)) fv.preds.insert(pv->id);
    for (const PredArg& p : a.predArgs)
        if (const PredVar* pv = std::get_if<PredVar>(&p)) fv.preds.insert(pv->id);
    for (const Term& t : a.valArgs) termVars(t, fv.vals);
    return fv;
}

FreeVars freeVars(const Molecule& m) {
    FreeVars fv;
    for (const Atom& a : m.atoms) {
        FreeVars f = freeVars(a);
        fv.vals.insert(f.vals.begin(), f.vals.end());
        fv.preds.insert(f.preds.begin(), f.preds.end());
    }
    return fv;
}

Rule desugarKeep(const Rule& r) {
    Rule out;
    out.newVars = r.newVars;
    out.rhs = r.rhs;
    for (Atom a : r.lhs.atoms) {
        if (a.persistent) {
            a.persistent = false;
            if (!a.isBuiltin()) out.rhs.atoms.push_back(a);
        }
        out.lhs.atoms.push_back(a);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Script constructors

ScriptPtr scriptEmpty() {
    static ScriptPtr e = std::make_shared<const ScriptNode>();
    return e;
}

ScriptPtr scriptRule(Rule r) {
    auto n = std::make_shared<ScriptNode>();
    n->kind = ScriptKind::RuleNode;
    n->rule = std::move(r);
    return n;
}

ScriptPtr scriptPar(std::vector<ScriptPtr> items) {
    std::vector<ScriptPtr> flat;
    for (ScriptPtr& s : items) {
        if (!s || s->kind == ScriptKind::Empty) continue;
        if (s->kind == ScriptKind::Par)
            flat.insert(flat.end(), s->children.begin(), s->children.end());
        else
            flat.push_back(std::move(s));
    }
    if (flat.empty()) return scriptEmpty();
    if (flat.size() == 1) return flat[0];
    auto n = std::make_shared<ScriptNode>();
    n->kind = ScriptKind::Par;
    n->children = std::move(flat);
    return n;
}

ScriptPtr scriptSeq(ScriptPtr l, ScriptPtr r) {
    auto n = std::make_shared<ScriptNode>();
    n->kind = ScriptKind::Seq;
    n->children = {std::move(l), std::move(r)};
    return n;
}

ScriptPtr scriptRepl(ScriptPtr s) {
    auto n = std::make_shared<ScriptNode>();
    n->kind = ScriptKind::Repl;
    n->children = {std::move(s)};
    return n;
}

int compareScript(const ScriptNode& a, const ScriptNode& b) {
    if (a.kind != b.kind) return a.kind < b.kind ? -1 : 1;
    if (a.kind == ScriptKind::RuleNode) {
        const std::string sa = showRule(a.rule);
        const std::string sb = showRule(b.rule);
        return sa.compare(sb);
    }
    if (a.children.size() != b.children.size()) return a.children.size() < b.children.size() ? -1 : 1;
    for (size_t i = 0; i < a.children.size(); ++i)
        if (int c = compareScript(*a.children[i], *b.children[i])) return c;
    return 0;
}

bool processEqual(const ProcessNode& a, const ProcessNode& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case ProcessKind::Vm:
            return a.vmName == b.vmName && a.decls == b.decls &&
                   compareScript(*a.body, *b.body) == 0;
        case ProcessKind::Builtin:
            return a.vmName == b.vmName && a.builtinKind == b.builtinKind &&
                   a.fixturePath == b.fixturePath;
        default:
            return processEqual(*a.left, *b.left) && processEqual(*a.right, *b.right);
    }
}

// ---------------------------------------------------------------------------
// Printing

std::string showValue(const Value& v) {
    std::ostringstream os;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) os << x;
            else if constexpr (std::is_same_v<T, std::string>) os << '"' << x << '"';
            else if constexpr (std::is_same_v<T, FreshName>) os << "#" << x.vm << ":" << x.seq;
            else os << "@" << x.vm << "." << x.name;
        },
        v);
    return os.str();
}

std::string showTerm(const Term& t) {
    if (t.isValue()) return showValue(t.value());
    if (t.isVar()) return t.var().id;
    const Arith& a = t.arith();
    return "(" + showTerm(a.lhs) + (a.op == ArithOp::Add ? "+" : "-") + showTerm(a.rhs) + ")";
}

std::string showAtom(const Atom& a) {
    std::ostringstream os;
    if (a.persistent) os << "keep ";
    std::visit(
        [&](const auto& h) {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, PredicateRef>) os << h.vm << "." << h.name;
            else if constexpr (std::is_same_v<T, PredVar>) os << "?" << h.id;
            else os << builtinName(h);
        },
        a.head);
    os << "(";
    bool first = true;
    for (const PredArg& p : a.predArgs) {
        if (!first) os << ",";
        first = false;
        if (const PredicateRef* r = std::get_if<PredicateRef>(&p)) os << r->vm << "." << r->name;
        else os << "?" << std::get<PredVar>(p).id;
    }
    for (const Term& t : a.valArgs) {
        if (!first) os << ",";
        first = false;
        os << showTerm(t);
    }
    os << ")";
    return os.str();
}

std::string showMolecule(const Molecule& m) {
    if (m.atoms.empty()) return "0";
    std::string s;
    for (size_t i = 0; i < m.atoms.size(); ++i) {
        if (i) s += " & ";
        s += showAtom(m.atoms[i]);
    }
    return s;
}

std::string showRule(const Rule& r) {
    std::string s = showMolecule(r.lhs) + " -> ";
    if (!r.newVars.empty()) {
        s += "new";
        for (const std::string& v : r.newVars) s += " " + v;
        s += ". ";
    }
    s += showMolecule(r.rhs);
    return s;
}

std::string showScript(const ScriptNode& s) {
    switch (s.kind) {
        case ScriptKind::Empty: return "0";
        case ScriptKind::RuleNode: return "(" + showRule(s.rule) + ")";
        case ScriptKind::Par: {
            std::string out;
            for (size_t i = 0; i < s.children.size(); ++i) {
                if (i) out += ", ";
                out += showScript(*s.children[i]);
            }
            return "(" + out + ")";
        }
        case ScriptKind::Seq:
            return "(" + showScript(*s.children[0]) + " ; " + showScript(*s.children[1]) + ")";
        case ScriptKind::Repl: return "!" + showScript(*s.children[0]);
    }
    return "?";
}

}  // namespace creole
