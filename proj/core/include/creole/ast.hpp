#ifndef CREOLE_AST_HPP
#define CREOLE_AST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace creole {

// ---------------------------------------------------------------------------
// Predicates

enum class PredKind { Relation, MultiRelation };
enum class Visibility { Public, Private };

struct PredicateDecl {
    std::string name;
    PredKind kind = PredKind::Relation;
    int predArity = 0;
    int valArity = 0;
    Visibility vis = Visibility::Public;

    bool operator==(const PredicateDecl&) const = default;
};

// A predicate reference names a declaration on a specific VM.
struct PredicateRef {
    std::string vm;
    std::string name;

    auto operator<=>(const PredicateRef&) const = default;
};

// Built-in guard predicates. Never consumed, never declared by user scripts.
enum class BuiltinPred { Null, NotNull, Between, NotBetween, Lt, Leq, Eq, Neq };

const char* builtinName(BuiltinPred b);
std::optional<BuiltinPred> builtinByName(const std::string& name);
int builtinArity(BuiltinPred b);

// ---------------------------------------------------------------------------
// Values and terms

// Opaque globally unique token minted when a rule introduces new names.
struct FreshName {
    std::string vm;
    std::uint64_t seq = 0;

    auto operator<=>(const FreshName&) const = default;
};

using Value = std::variant<std::int64_t, std::string, FreshName, PredicateRef>;

struct Arith;
struct VarName {
    std::string id;
    auto operator<=>(const VarName&) const = default;
};

struct Term {
    std::variant<Value, VarName, std::shared_ptr<const Arith>> node;

    static Term val(Value v) { return Term{std::move(v)}; }
    static Term var(std::string id) { return Term{VarName{std::move(id)}}; }
    static Term add(Term l, Term r);
    static Term sub(Term l, Term r);

    bool isValue() const { return std::holds_alternative<Value>(node); }
    bool isVar() const { return std::holds_alternative<VarName>(node); }
    bool isArith() const { return std::holds_alternative<std::shared_ptr<const Arith>>(node); }
    const Value& value() const { return std::get<Value>(node); }
    const VarName& var() const { return std::get<VarName>(node); }
    const Arith& arith() const { return *std::get<std::shared_ptr<const Arith>>(node); }
};

enum class ArithOp { Add, Sub };

struct Arith {
    ArithOp op;
    Term lhs;
    Term rhs;
};

int compareValue(const Value& a, const Value& b);
int compareTerm(const Term& a, const Term& b);

// ---------------------------------------------------------------------------
// Atoms and molecules

// An unresolved uppercase identifier: either a predicate variable or a name
// resolved later against the declaring VM's scope.
struct PredVar {
    std::string id;
    auto operator<=>(const PredVar&) const = default;
};

using AtomHead = std::variant<PredicateRef, PredVar, BuiltinPred>;
using PredArg = std::variant<PredicateRef, PredVar>;

struct Atom {
    AtomHead head;
    std::vector<PredArg> predArgs;
    std::vector<Term> valArgs;
    bool persistent = false;  // `keep` sugar, pattern side only

    bool isBuiltin() const { return std::holds_alternative<BuiltinPred>(head); }
    bool headIsRef() const { return std::holds_alternative<PredicateRef>(head); }
    const PredicateRef& headRef() const { return std::get<PredicateRef>(head); }
    bool isGround() const;
};

int compareAtom(const Atom& a, const Atom& b);
bool atomEqual(const Atom& a, const Atom& b);

struct Molecule {
    std::vector<Atom> atoms;
};

struct FreeVars {
    std::set<std::string> vals;
    std::set<std::string> preds;
};

FreeVars freeVars(const Molecule& m);
FreeVars freeVars(const Atom& a);

// ---------------------------------------------------------------------------
// Rules, scripts, processes

struct Rule {
    Molecule lhs;
    Molecule rhs;
    std::vector<std::string> newVars;  // = fv(rhs).vals - fv(lhs).vals
};

// Copies every persistent lhs atom into the rhs (builtins excepted: guards are
// never solution atoms) and clears the flags. Idempotent.
Rule desugarKeep(const Rule& r);

enum class ScriptKind { Empty, RuleNode, Par, Seq, Repl };

struct ScriptNode;
using ScriptPtr = std::shared_ptr<const ScriptNode>;

struct ScriptNode {
    ScriptKind kind = ScriptKind::Empty;
    Rule rule;                       // RuleNode
    std::vector<ScriptPtr> children; // Par: n >= 2, Seq: 2, Repl: 1
};

ScriptPtr scriptEmpty();
ScriptPtr scriptRule(Rule r);
ScriptPtr scriptPar(std::vector<ScriptPtr> items);  // flattens, drops Empty
ScriptPtr scriptSeq(ScriptPtr l, ScriptPtr r);
ScriptPtr scriptRepl(ScriptPtr s);

int compareScript(const ScriptNode& a, const ScriptNode& b);

enum class ProcessKind { Vm, Let, Par, Builtin };

struct ProcessNode;
using ProcessPtr = std::shared_ptr<const ProcessNode>;

struct ProcessNode {
    ProcessKind kind = ProcessKind::Vm;
    // Vm
    std::string vmName;
    std::vector<PredicateDecl> decls;
    ScriptPtr body;
    // Builtin connector VM ("flickr" | "picasa") backed by a fixture
    std::string builtinKind;
    std::string fixturePath;
    // Let (left = server, right = client) / Par
    ProcessPtr left;
    ProcessPtr right;
};

bool processEqual(const ProcessNode& a, const ProcessNode& b);

// ---------------------------------------------------------------------------
// Registry of declarations, keyed by (vm, predicate name)

class Registry {
  public:
    void add(const std::string& vm, const PredicateDecl& d) { decls_[{vm, d.name}] = d; }
    const PredicateDecl* find(const PredicateRef& r) const {
        auto it = decls_.find({r.vm, r.name});
        return it == decls_.end() ? nullptr : &it->second;
    }
    bool isRelation(const PredicateRef& r) const {
        const PredicateDecl* d = find(r);
        return d && d->kind == PredKind::Relation;
    }
    const std::map<std::pair<std::string, std::string>, PredicateDecl>& all() const { return decls_; }

  private:
    std::map<std::pair<std::string, std::string>, PredicateDecl> decls_;
};

// Monotone counter; tokens are never reused within a run.
class FreshNameSupply {
  public:
    explicit FreshNameSupply(std::string vm = "") : vm_(std::move(vm)) {}
    FreshName next() { return FreshName{vm_, counter_++}; }
    std::uint64_t mark() const { return counter_; }
    void resume(std::uint64_t at) { if (at > counter_) counter_ = at; }

  private:
    std::string vm_;
    std::uint64_t counter_ = 0;
};

// ---------------------------------------------------------------------------
// Printing (debug/canonical form; the surface pretty-printer lives in printer.hpp)

std::string showValue(const Value& v);
std::string showTerm(const Term& t);
std::string showAtom(const Atom& a);
std::string showMolecule(const Molecule& m);
std::string showRule(const Rule& r);
std::string showScript(const ScriptNode& s);

}  // namespace creole

#endif
