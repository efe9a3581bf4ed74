#include "creole/frontends.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

namespace creole {

namespace {

// ---------------------------------------------------------------------------
// Query tokenizer

struct QTok {
    enum Type { Ident, Int, Str, Star, Comma, Eq, LParen, RParen, End } type;
    std::string text;   // Ident (as written), Str (unquoted)
    std::int64_t num = 0;
    size_t pos = 0;
};

std::string upper(std::string s) {
    for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return s;
}

std::vector<QTok> lexQuery(const std::string& text) {
    std::vector<QTok> out;
    size_t i = 0;
    auto fail = [&](const std::string& msg) {
        throw CompileError("query:" + std::to_string(i + 1) + ": " + msg);
    };
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) { ++i; continue; }
        size_t start = i;
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            while (i < text.size() &&
                   (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_'))
                ++i;
            out.push_back({QTok::Ident, text.substr(start, i - start), 0, start});
        } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                   (c == '-' && i + 1 < text.size() &&
                    std::isdigit(static_cast<unsigned char>(text[i + 1])))) {
            ++i;
            while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
            out.push_back({QTok::Int, "", std::stoll(text.substr(start, i - start)), start});
        } else if (c == '"' || c == '\'') {
            char q = c;
            ++i;
            std::string s;
            while (i < text.size() && text[i] != q) s += text[i++];
            if (i >= text.size()) fail("unterminated string literal");
            ++i;
            out.push_back({QTok::Str, s, 0, start});
        } else {
            ++i;
            switch (c) {
                case '*': out.push_back({QTok::Star, "*", 0, start}); break;
                case ',': out.push_back({QTok::Comma, ",", 0, start}); break;
                case '=': out.push_back({QTok::Eq, "=", 0, start}); break;
                case '(': out.push_back({QTok::LParen, "(", 0, start}); break;
                case ')': out.push_back({QTok::RParen, ")", 0, start}); break;
                case ';':
                    if (i != text.size() &&
                        text.find_first_not_of(" \t\r\n", i) != std::string::npos)
                        fail("text after ';'");
                    break;
                default: fail(std::string("unexpected character '") + c + "'");
            }
        }
    }
    out.push_back({QTok::End, "", 0, text.size()});
    return out;
}

const std::set<std::string> kUnsupported = {
    "GROUP", "ORDER", "HAVING", "LIMIT", "JOIN", "DISTINCT",
    "UNION", "INSERT", "UPDATE", "DELETE", "ON"};

MiniQuery parseQuery(const std::string& text) {
    std::vector<QTok> toks = lexQuery(text);
    size_t i = 0;
    auto fail = [&](const std::string& msg) {
        throw CompileError("query:" + std::to_string(toks[i].pos + 1) + ": " + msg);
    };
    auto isKw = [&](const char* kw) {
        return toks[i].type == QTok::Ident && upper(toks[i].text) == kw;
    };
    auto expectKw = [&](const char* kw) {
        if (!isKw(kw)) fail(std::string("expected ") + kw);
        ++i;
    };
    auto checkUnsupported = [&] {
        if (toks[i].type == QTok::Ident && kUnsupported.count(upper(toks[i].text)))
            fail("unsupported construct: " + upper(toks[i].text));
    };
    auto literal = [&]() -> Value {
        if (toks[i].type == QTok::Int) return Value{toks[i++].num};
        if (toks[i].type == QTok::Str) return Value{toks[i++].text};
        fail("expected literal");
        return Value{};
    };

    MiniQuery q;
    checkUnsupported();
    expectKw("SELECT");
    checkUnsupported();
    if (toks[i].type == QTok::Star) {
        q.selectAll = true;
        ++i;
    } else if (isKw("COUNT") && toks[i + 1].type == QTok::LParen) {
        i += 2;
        if (toks[i].type != QTok::Star) fail("expected '*' in COUNT(*)");
        ++i;
        if (toks[i].type != QTok::RParen) fail("expected ')'");
        ++i;
        q.countStar = true;
    } else {
        while (true) {
            checkUnsupported();
            if (toks[i].type != QTok::Ident) fail("expected column name");
            q.cols.push_back(toks[i++].text);
            if (toks[i].type != QTok::Comma) break;
            ++i;
        }
    }
    expectKw("FROM");
    if (toks[i].type != QTok::Ident) fail("expected table name");
    q.table = toks[i++].text;
    if (isKw("WHERE")) {
        ++i;
        while (true) {
            checkUnsupported();
            if (toks[i].type != QTok::Ident) fail("expected column name in WHERE");
            WhereCond c;
            c.col = toks[i++].text;
            if (toks[i].type == QTok::Eq) {
                ++i;
                c.kind = WhereCond::Kind::Eq;
                c.a = literal();
            } else if (isKw("BETWEEN")) {
                ++i;
                c.kind = WhereCond::Kind::Between;
                c.a = literal();
                expectKw("AND");
                c.b = literal();
            } else {
                fail("expected '=' or BETWEEN");
            }
            q.where.push_back(std::move(c));
            if (!isKw("AND")) break;
            ++i;
        }
    }
    checkUnsupported();
    if (toks[i].type != QTok::End) fail("trailing tokens after query");
    return q;
}

// ---------------------------------------------------------------------------
// AST construction helpers

Term V(const std::string& v) { return Term::var(v); }
Term L(Value v) { return Term::val(std::move(v)); }

Atom atomN(const std::string& name, std::vector<Term> vals,
           std::vector<std::string> predVars = {}, bool keep = false) {
    Atom a;
    a.head = PredVar{name};
    for (std::string& pv : predVars) a.predArgs.emplace_back(PredVar{std::move(pv)});
    a.valArgs = std::move(vals);
    a.persistent = keep;
    return a;
}

Atom guardAtom(BuiltinPred b, std::vector<Term> vals, bool keep = true) {
    Atom a;
    a.head = b;
    a.valArgs = std::move(vals);
    a.persistent = keep;
    return a;
}

Rule mkRule(std::vector<Atom> lhs, std::vector<Atom> rhs) {
    Rule r;
    r.lhs.atoms = std::move(lhs);
    r.rhs.atoms = std::move(rhs);
    FreeVars fl = freeVars(r.lhs), fr = freeVars(r.rhs);
    for (const std::string& v : fr.vals)
        if (!fl.vals.count(v)) r.newVars.push_back(v);
    return r;
}

std::string colVar(const std::string& col) {
    if (col.empty() || !std::islower(static_cast<unsigned char>(col[0])))
        throw CompileError("column name '" + col + "' cannot name a variable");
    for (char c : col)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_')
            throw CompileError("column name '" + col + "' cannot name a variable");
    return col;
}

std::vector<Term> varRange(const std::string& prefix, int n) {
    std::vector<Term> ts;
    for (int i = 0; i < n; ++i) ts.push_back(V(prefix + std::to_string(i + 1)));
    return ts;
}

PredicateDecl rel(const std::string& name, int predArity, int valArity,
                  Visibility vis = Visibility::Public) {
    return {name, PredKind::Relation, predArity, valArity, vis};
}

PredicateDecl mrel(const std::string& name, int predArity, int valArity,
                   Visibility vis = Visibility::Public) {
    return {name, PredKind::MultiRelation, predArity, valArity, vis};
}

}  // namespace

MiniQuery parseSql(const std::string& text) { return parseQuery(text); }
MiniQuery parseYql(const std::string& text) { return parseQuery(text); }

// ---------------------------------------------------------------------------
// Table mapping

TableMapping loadTableMapping(const TomlDoc& doc) {
    TableMapping m;
    for (const auto& [section, kv] : doc) {
        if (section.rfind("table.", 0) == 0) {
            TableEntry e;
            std::string name = section.substr(6);
            auto need = [&](const char* key) -> const TomlValue& {
                auto it = kv.find(key);
                if (it == kv.end())
                    throw CompileError("[" + section + "] missing key '" + key + "'");
                return it->second;
            };
            e.request = need("request").str();
            e.response = need("response").str();
            if (auto it = kv.find("pull"); it != kv.end()) e.pull = it->second.str();
            e.in = need("in").list();
            e.out = need("out").list();
            e.vm = need("vm").str();
            if (auto it = kv.find("session"); it != kv.end()) {
                if (it->second.str() == "last") e.sessionFirst = false;
                else if (it->second.str() != "first")
                    throw CompileError("[" + section + "] session must be first|last");
            }
            if (auto it = kv.find("result"); it != kv.end()) e.outRel = it->second.str();
            if (e.streaming() && e.out.empty())
                throw CompileError("[" + section + "] streaming table needs output columns");
            m.tables.emplace(name, std::move(e));
        } else if (section.rfind("relation.", 0) == 0) {
            auto it = kv.find("cols");
            if (it == kv.end())
                throw CompileError("[" + section + "] missing key 'cols'");
            m.relationCols.emplace(section.substr(9), it->second.list());
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// YQL

ScriptFragment compileYql(const MiniQuery& q, const TableMapping& m) {
    if (q.countStar)
        throw CompileError("unsupported construct: COUNT(*) over a virtual table");
    auto te = m.tables.find(q.table);
    if (te == m.tables.end()) throw CompileError("unknown table " + q.table);
    const TableEntry& e = te->second;

    // Bind every input column from WHERE equalities.
    std::map<std::string, Value> bound;
    for (const WhereCond& c : q.where) {
        if (c.kind != WhereCond::Kind::Eq)
            throw CompileError("unsupported construct: BETWEEN over a virtual table");
        if (std::find(e.in.begin(), e.in.end(), c.col) == e.in.end())
            throw CompileError("column " + c.col + " is not an input of " + q.table);
        if (!bound.emplace(c.col, c.a).second)
            throw CompileError("input column " + c.col + " bound twice");
    }
    std::vector<Term> inVals;
    for (const std::string& col : e.in) {
        auto it = bound.find(col);
        if (it == bound.end())
            throw CompileError("unbound input column " + col);
        inVals.push_back(L(it->second));
    }

    std::vector<std::string> selCols = q.selectAll ? e.out : q.cols;
    for (const std::string& col : selCols)
        if (std::find(e.out.begin(), e.out.end(), col) == e.out.end())
            throw CompileError("column " + col + " is not an output of " + q.table);

    std::vector<Term> outVars, selVars;
    for (const std::string& col : e.out) outVars.push_back(V(colVar(col)));
    for (const std::string& col : selCols) selVars.push_back(V(colVar(col)));

    ScriptFragment f;
    int outN = static_cast<int>(e.out.size());
    f.decls.push_back(rel(e.response, 0, 1 + outN));
    f.decls.push_back(rel(e.outRel, 0, static_cast<int>(selCols.size())));

    if (!e.streaming()) {
        f.decls.push_back(rel("Session", 0, 1, Visibility::Private));
        // ∅ ▷ new x. Request(x, in…, Response) ∧ Session(x)
        std::vector<Term> reqVals;
        if (e.sessionFirst) {
            reqVals.push_back(V("x"));
            reqVals.insert(reqVals.end(), inVals.begin(), inVals.end());
        } else {
            reqVals = inVals;
            reqVals.push_back(V("x"));
        }
        Rule r1 = mkRule({}, {atomN(e.request, reqVals, {e.response}),
                              atomN("Session", {V("x")})});
        // Session(x) ∧ Response(x, out…) ▷ Result(sel…)
        std::vector<Term> respPat{V("x")};
        respPat.insert(respPat.end(), outVars.begin(), outVars.end());
        Rule r2 = mkRule({atomN("Session", {V("x")}), atomN(e.response, respPat)},
                         {atomN(e.outRel, selVars)});
        f.script = scriptPar({scriptRule(r1), scriptRule(r2)});
        return f;
    }

    // Streaming: request + pull, replicated pull on non-sentinel rows,
    // stop on the sentinel (first output column is the stream id).
    std::string idv = colVar(e.out.front());
    std::vector<Term> reqVals;
    if (e.sessionFirst) {
        reqVals.push_back(V("x"));
        reqVals.insert(reqVals.end(), inVals.begin(), inVals.end());
    } else {
        reqVals = inVals;
        reqVals.push_back(V("x"));
    }
    Rule r1 = mkRule({}, {atomN(e.request, reqVals),
                          atomN(e.pull, {V("x")}, {e.response})});
    std::vector<Term> rowPat{V("x")};
    rowPat.insert(rowPat.end(), outVars.begin(), outVars.end());
    Rule r2 = mkRule({guardAtom(BuiltinPred::NotNull, {V(idv)}), atomN(e.response, rowPat)},
                     {atomN(e.pull, {V("x")}, {e.response}), atomN(e.outRel, selVars)});
    Rule r3 = mkRule({guardAtom(BuiltinPred::Null, {V(idv)}), atomN(e.response, rowPat)}, {});
    f.script = scriptPar({scriptRule(r1), scriptRepl(scriptRule(r2)), scriptRule(r3)});
    return f;
}

// ---------------------------------------------------------------------------
// SQL

ScriptFragment compileSql(const MiniQuery& q, const TableMapping& m, bool preserveInput) {
    auto rc = m.relationCols.find(q.table);
    if (rc == m.relationCols.end())
        throw CompileError("unknown relation " + q.table);
    const std::vector<std::string>& cols = rc->second;
    int k = static_cast<int>(cols.size());
    ScriptFragment f;

    if (q.countStar) {
        if (!q.where.empty())
            throw CompileError("unsupported construct: WHERE with COUNT(*)");
        f.decls.push_back(mrel(q.table, 0, k));
        f.decls.push_back(rel("Count", 0, 1));
        Rule init = mkRule({}, {atomN("Count", {L(std::int64_t{0})})});
        std::string src = q.table;
        if (preserveInput) {
            // Copy (collapsing duplicates) so the count leaves inputs intact.
            src = "CountSrc";
            f.decls.push_back(rel(src, 0, k, Visibility::Private));
            Atom from = atomN(q.table, varRange("y", k));
            from.persistent = true;
            Rule copy = mkRule({from}, {atomN(src, varRange("y", k))});
            std::vector<Atom> stepLhs{atomN("Count", {V("n")}), atomN(src, varRange("y", k))};
            Rule step = mkRule(stepLhs, {atomN("Count", {Term::add(V("n"), L(std::int64_t{1}))})});
            f.script = scriptSeq(scriptRepl(scriptRule(copy)),
                                 scriptPar({scriptRule(init), scriptRepl(scriptRule(step))}));
            return f;
        }
        std::vector<Atom> stepLhs{atomN("Count", {V("n")}), atomN(src, varRange("y", k))};
        Rule step = mkRule(stepLhs, {atomN("Count", {Term::add(V("n"), L(std::int64_t{1}))})});
        f.script = scriptPar({scriptRule(init), scriptRepl(scriptRule(step))});
        return f;
    }

    // Selection + projection, inputs read persistently.
    std::map<std::string, const WhereCond*> eq;
    std::vector<Atom> guards;
    for (const WhereCond& c : q.where) {
        if (std::find(cols.begin(), cols.end(), c.col) == cols.end())
            throw CompileError("unknown column " + c.col);
        if (c.kind == WhereCond::Kind::Eq) {
            if (!eq.emplace(c.col, &c).second)
                throw CompileError("column " + c.col + " constrained twice");
        } else {
            guards.push_back(guardAtom(BuiltinPred::Between, {L(c.a), V(colVar(c.col)), L(c.b)}));
        }
    }
    std::vector<std::string> selCols = (q.selectAll || q.cols.empty()) ? cols : q.cols;
    for (const std::string& col : selCols)
        if (std::find(cols.begin(), cols.end(), col) == cols.end())
            throw CompileError("unknown column " + col);

    std::vector<Term> pattern;
    for (const std::string& col : cols) {
        auto it = eq.find(col);
        pattern.push_back(it != eq.end() ? L(it->second->a) : V(colVar(col)));
    }
    std::vector<Term> sel;
    for (const std::string& col : selCols) {
        auto it = eq.find(col);
        sel.push_back(it != eq.end() ? L(it->second->a) : V(colVar(col)));
    }

    f.decls.push_back(mrel(q.table, 0, k));
    f.decls.push_back(rel("Result", 0, static_cast<int>(selCols.size())));
    Atom src = atomN(q.table, pattern);
    src.persistent = true;
    std::vector<Atom> lhs{src};
    lhs.insert(lhs.end(), guards.begin(), guards.end());
    Rule r = mkRule(lhs, {atomN("Result", sel)});
    f.script = scriptRepl(scriptRule(r));
    return f;
}

// ---------------------------------------------------------------------------
// Relational algebra

ScriptFragment encodeRelAlg(const RelAlgInstr& instr) {
    using Op = RelAlgInstr::Op;
    ScriptFragment f;
    int a = instr.arityR;
    auto keepAtom = [&](const std::string& name, std::vector<Term> vals) {
        Atom at = atomN(name, std::move(vals));
        at.persistent = true;
        return at;
    };
    std::vector<Term> rv = varRange("v", a);

    switch (instr.op) {
        case Op::Select: {
            f.decls = {rel("R", 0, a), rel("Out", 0, a)};
            std::vector<Atom> lhs{keepAtom("R", rv)};
            for (const RelAlgInstr::Guard& g : instr.guards) {
                Term col = V("v" + std::to_string(g.col + 1));
                if (g.cmp == BuiltinPred::Between || g.cmp == BuiltinPred::NotBetween)
                    lhs.push_back(guardAtom(g.cmp, {L(g.a), col, L(g.b)}));
                else
                    lhs.push_back(guardAtom(g.cmp, {col, L(g.a)}));
            }
            f.script = scriptRepl(scriptRule(mkRule(lhs, {atomN("Out", rv)})));
            break;
        }
        case Op::Project: {
            std::vector<Term> proj;
            for (int c : instr.projectCols) proj.push_back(V("v" + std::to_string(c + 1)));
            f.decls = {rel("R", 0, a), rel("Out", 0, static_cast<int>(proj.size()))};
            f.script = scriptRepl(scriptRule(mkRule({keepAtom("R", rv)}, {atomN("Out", proj)})));
            break;
        }
        case Op::Product: {
            std::vector<Term> sv = varRange("w", instr.arityS);
            std::vector<Term> both = rv;
            both.insert(both.end(), sv.begin(), sv.end());
            f.decls = {rel("R", 0, a), rel("S", 0, instr.arityS),
                       rel("Out", 0, a + instr.arityS)};
            f.script = scriptRepl(scriptRule(
                mkRule({keepAtom("R", rv), keepAtom("S", sv)}, {atomN("Out", both)})));
            break;
        }
        case Op::Union: {
            f.decls = {rel("R", 0, a), rel("S", 0, a), rel("Out", 0, a)};
            f.script = scriptPar(
                {scriptRepl(scriptRule(mkRule({keepAtom("R", rv)}, {atomN("Out", rv)}))),
                 scriptRepl(scriptRule(mkRule({keepAtom("S", rv)}, {atomN("Out", rv)})))});
            break;
        }
        case Op::Difference: {
            f.decls = {rel("R", 0, a), rel("S", 0, a), rel("Out", 0, a),
                       rel("Cand", 0, a, Visibility::Private),
                       rel("Dead", 0, a, Visibility::Private)};
            // Phase 1: copy candidates and mark S-membership. Phase 2 (once
            // phase 1 is exhausted): delete marked pairs. Phase 3: emit.
            ScriptPtr phase1 = scriptPar(
                {scriptRepl(scriptRule(mkRule({keepAtom("R", rv)}, {atomN("Cand", rv)}))),
                 scriptRepl(scriptRule(
                     mkRule({keepAtom("S", rv), keepAtom("Cand", rv)}, {atomN("Dead", rv)})))});
            ScriptPtr phase2 = scriptRepl(
                scriptRule(mkRule({atomN("Cand", rv), atomN("Dead", rv)}, {})));
            ScriptPtr phase3 =
                scriptRepl(scriptRule(mkRule({atomN("Cand", rv)}, {atomN("Out", rv)})));
            f.script = scriptSeq(phase1, scriptSeq(phase2, phase3));
            break;
        }
        case Op::Rename: {
            f.decls = {rel("R", 0, a), rel("Out", 0, a)};
            f.script = scriptRepl(scriptRule(mkRule({keepAtom("R", rv)}, {atomN("Out", rv)})));
            break;
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// Integration templates

ScriptFragment makeAdapter(const AdapterSpec& spec) {
    ScriptFragment f;
    int n = spec.attrCount;
    f.decls.push_back(rel("CountsIn", 1, 3));
    f.decls.push_back(rel("Photo", 0, 3 + n));
    f.decls.push_back(rel("Response", 1, 5, Visibility::Private));

    std::vector<Term> attrs = varRange("a", n);
    auto photoPat = [&] {
        std::vector<Term> p{V("y"), V("id"), V("date")};
        p.insert(p.end(), attrs.begin(), attrs.end());
        return p;
    }();
    auto respPat = std::vector<Term>{V("x"), V("y"), V("from"), V("to"), V("n")};

    // CountsIn(x, from, to, K) ▷ new y. Response(x,y,from,to,0,K) ∧ Cloning(Photo,y)
    Rule r1 = mkRule(
        {atomN("CountsIn", {V("x"), V("from"), V("to")}, {"K"})},
        {atomN("Response", {V("x"), V("y"), V("from"), V("to"), L(std::int64_t{0})}, {"K"}),
         atomN(spec.cloningRel, {V("y")}, {"Photo"})});

    // In-range photo: bump the counter (and pull the next one in pull mode).
    std::vector<Atom> r2rhs{atomN("Response", {V("x"), V("y"), V("from"), V("to"),
                                               Term::add(V("n"), L(std::int64_t{1}))}, {"K"})};
    if (spec.pullPerItem)
        r2rhs.insert(r2rhs.begin(), atomN(spec.cloningRel, {V("y")}, {"Photo"}));
    Rule r2 = mkRule(
        {guardAtom(BuiltinPred::NotNull, {V("id")}),
         guardAtom(BuiltinPred::Between, {V("from"), V("date"), V("to")}),
         atomN("Response", respPat, {"K"}), atomN("Photo", photoPat)},
        std::move(r2rhs));

    // Out-of-range photo: drop it (and pull the next one in pull mode).
    Atom keepResp = atomN("Response", respPat, {"K"});
    keepResp.persistent = true;
    std::vector<Atom> r3rhs;
    if (spec.pullPerItem) r3rhs.push_back(atomN(spec.cloningRel, {V("y")}, {"Photo"}));
    Rule r3 = mkRule(
        {guardAtom(BuiltinPred::NotNull, {V("id")}),
         guardAtom(BuiltinPred::NotBetween, {V("from"), V("date"), V("to")}),
         keepResp, atomN("Photo", photoPat)},
        std::move(r3rhs));

    // Sentinel: reply with the count.
    Rule r4 = mkRule(
        {guardAtom(BuiltinPred::Null, {V("id")}), atomN("Photo", photoPat),
         atomN("Response", respPat, {"K"})},
        {Atom{PredVar{"K"}, {}, {V("x"), V("n")}, false}});

    f.script = scriptRepl(scriptPar(
        {scriptRule(r1), scriptRepl(scriptPar({scriptRule(r2), scriptRule(r3)})),
         scriptRule(r4)}));
    return f;
}

ScriptFragment makeFacade(const FacadeSpec& spec) {
    if (spec.pKeep.size() != spec.fKeep.size())
        throw CompileError("facade attr merge lists differ in length");
    ScriptFragment f;
    int common = static_cast<int>(spec.pKeep.size());
    f.decls.push_back(rel("PhotoCloning", 1, 1));
    f.decls.push_back(rel("PPhoto", 0, 3 + spec.pAttrCount));
    f.decls.push_back(rel("FPhoto", 0, 3 + spec.fAttrCount));
    f.decls.push_back(rel("Response", 1, 1, Visibility::Private));
    (void)common;

    auto pat = [&](const char* relName, const char* prefix, int nAttrs) {
        std::vector<Term> p{V("x"), V("id"), V("date")};
        auto more = varRange(prefix, nAttrs);
        p.insert(p.end(), more.begin(), more.end());
        return atomN(relName, p);
    };
    auto merged = [&](const char* prefix, const std::vector<int>& keepIdx) {
        std::vector<Term> p{V("x"), V("id"), V("date")};
        for (int idx : keepIdx) p.push_back(V(prefix + std::to_string(idx + 1)));
        return p;
    };
    Atom keepResp = atomN("Response", {V("x")}, {"P"});
    keepResp.persistent = true;

    // PhotoCloning(P, x) ▷ PPhotoCloning(PPhoto, x) ∧ Response(P, x)
    Rule r1 = mkRule({atomN("PhotoCloning", {V("x")}, {"P"})},
                     {atomN(spec.pCloningRel, {V("x")}, {"PPhoto"}),
                      atomN("Response", {V("x")}, {"P"})});
    // Picasa-like photo: forward, pull next.
    Rule r2 = mkRule({guardAtom(BuiltinPred::NotNull, {V("id")}),
                      pat("PPhoto", "p", spec.pAttrCount), keepResp},
                     {Atom{PredVar{"P"}, {}, merged("p", spec.pKeep), false},
                      atomN(spec.pCloningRel, {V("x")}, {"PPhoto"})});
    // Picasa-like sentinel: switch to the Flickr-like store.
    Rule r3 = mkRule({guardAtom(BuiltinPred::Null, {V("id")}),
                      pat("PPhoto", "p", spec.pAttrCount)},
                     {atomN(spec.fCloningRel, {V("x")}, {"FPhoto"})});
    // Flickr-like photo: forward, pull next.
    Rule r4 = mkRule({guardAtom(BuiltinPred::NotNull, {V("id")}),
                      pat("FPhoto", "f", spec.fAttrCount), keepResp},
                     {Atom{PredVar{"P"}, {}, merged("f", spec.fKeep), false},
                      atomN(spec.fCloningRel, {V("x")}, {"FPhoto"})});
    // Flickr-like sentinel: forward it (ending the session).
    Rule r5 = mkRule({guardAtom(BuiltinPred::Null, {V("id")}),
                      pat("FPhoto", "f", spec.fAttrCount),
                      atomN("Response", {V("x")}, {"P"})},
                     {Atom{PredVar{"P"}, {}, merged("f", spec.fKeep), false}});

    f.script = scriptRepl(scriptPar(
        {scriptRule(r1),
         scriptRepl(scriptPar({scriptRule(r2), scriptRule(r3), scriptRule(r4)})),
         scriptRule(r5)}));
    return f;
}

ScriptFragment makeMediator(const std::string& from, const std::string& to, int valArity) {
    ScriptFragment f;
    std::vector<Term> vs = varRange("v", valArity);
    f.script = scriptRepl(scriptRule(mkRule({atomN(from, vs)}, {atomN(to, vs)})));
    return f;
}

// ---------------------------------------------------------------------------

ProcessPtr fragmentVm(const std::string& vmName, const std::vector<ScriptFragment>& frags) {
    auto p = std::make_shared<ProcessNode>();
    p->kind = ProcessKind::Vm;
    p->vmName = vmName;
    std::vector<ScriptPtr> scripts;
    for (const ScriptFragment& f : frags) {
        for (const PredicateDecl& d : f.decls) {
            auto prev = std::find_if(p->decls.begin(), p->decls.end(),
                                     [&](const PredicateDecl& e) { return e.name == d.name; });
            if (prev == p->decls.end()) p->decls.push_back(d);
            else if (!(*prev == d))
                throw CompileError("conflicting declarations for " + d.name);
        }
        scripts.push_back(f.script);
    }
    p->body = scriptPar(std::move(scripts));
    return p;
}

}  // namespace creole
