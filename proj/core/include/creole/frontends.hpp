#ifndef CREOLE_FRONTENDS_HPP
#define CREOLE_FRONTENDS_HPP

#include "creole/ast.hpp"
#include "creole/toml_lite.hpp"

namespace creole {

struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Mini query dialects (frozen grammars; see docs/dialects.md)

struct WhereCond {
    enum class Kind { Eq, Between } kind = Kind::Eq;
    std::string col;
    Value a;  // Eq literal, or Between lower bound
    Value b;  // Between upper bound
};

struct MiniQuery {
    bool countStar = false;
    bool selectAll = false;
    std::vector<std::string> cols;
    std::string table;
    std::vector<WhereCond> where;
};

MiniQuery parseSql(const std::string& text);
MiniQuery parseYql(const std::string& text);

// ---------------------------------------------------------------------------
// Table mapping (virtual table -> request/response relations on a VM)

struct TableEntry {
    std::string request;   // request relation on the owning VM
    std::string response;  // reply relation declared on the client
    std::string pull;      // streaming only: per-item pull relation on the VM
    std::vector<std::string> in;   // input columns, bound by WHERE equalities
    std::vector<std::string> out;  // output columns carried by the response
    std::string vm;
    bool sessionFirst = true;      // session key position in the request atom
    std::string outRel = "Result";

    bool streaming() const { return !pull.empty(); }
};

struct TableMapping {
    std::map<std::string, TableEntry> tables;
    std::map<std::string, std::vector<std::string>> relationCols;  // for mini-SQL
};

// [table.Name] request= response= pull= in=[..] out=[..] vm= session= result=
// [relation.R] cols=[..]
TableMapping loadTableMapping(const TomlDoc& doc);

// ---------------------------------------------------------------------------
// Generated script fragments. Heads are left unresolved (plain names); the
// standard elaboration resolves them against the composed process, so the
// same fragment serves both direct execution and `.cre` emission.

struct ScriptFragment {
    std::vector<PredicateDecl> decls;
    ScriptPtr script;
};

// Merges fragments into one VM process; duplicate declarations must agree.
ProcessPtr fragmentVm(const std::string& vmName, const std::vector<ScriptFragment>& frags);

// Scalar query: request/Session/reply two-rule shape. Streaming query
// (entry.pull set): request + replicated pull + sentinel stop.
ScriptFragment compileYql(const MiniQuery& q, const TableMapping& m);

// COUNT(*) consumes the counted atoms unless preserveInput, which first
// copies into a scratch relation (collapsing duplicates). Plain SELECT
// compiles to a persistent selection+projection into `Result`.
ScriptFragment compileSql(const MiniQuery& q, const TableMapping& m,
                          bool preserveInput = false);

// ---------------------------------------------------------------------------
// Relational algebra over relations R (and S), output Out.

struct RelAlgInstr {
    enum class Op { Select, Project, Product, Union, Difference, Rename } op;
    int arityR = 0;
    int arityS = 0;  // product/union/difference
    std::vector<int> projectCols;
    struct Guard {
        BuiltinPred cmp;  // Lt/Leq/Eq/Neq (col vs a) or Between/NotBetween (a..b)
        int col = 0;
        Value a;
        Value b;
    };
    std::vector<Guard> guards;  // select
};

ScriptFragment encodeRelAlg(const RelAlgInstr& instr);

// ---------------------------------------------------------------------------
// Integration script templates

struct AdapterSpec {
    std::string cloningRel = "PhotoCloning";  // upstream streaming request
    int attrCount = 2;                        // photo attrs after id and date
    // true: request the next photo after each one (connector cursor protocol);
    // false: a single request, the upstream streams eagerly (facade protocol).
    bool pullPerItem = true;
};

struct FacadeSpec {
    std::string pCloningRel = "PPhotoCloning";
    std::string fCloningRel = "FPhotoCloning";
    int pAttrCount = 2;
    int fAttrCount = 2;
    std::vector<int> pKeep = {0};  // attr indices forwarded to the client
    std::vector<int> fKeep = {0};
};

// Counts photos in a date range by draining an upstream photo stream.
// Exports CountsIn/1/3 and the stream reply Photo/0/(3+attrCount).
ScriptFragment makeAdapter(const AdapterSpec& spec);

// Streams the Picasa-like store, then on its sentinel the Flickr-like store,
// projecting both attr sets onto a common list. Exports PhotoCloning/1/1.
ScriptFragment makeFacade(const FacadeSpec& spec);

// !(From(v̄) ▷ To(v̄)) renaming bridge; From must be local to the host VM.
ScriptFragment makeMediator(const std::string& from, const std::string& to, int valArity);

}  // namespace creole

#endif
