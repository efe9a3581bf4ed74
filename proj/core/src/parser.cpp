#include "creole/parser.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

namespace creole {

namespace {

enum class Tok {
    End, Ident, Int, Str,
    LParen, RParen, LBrace, RBrace,
    Comma, Semi, Amp, Bang, Arrow, Plus, Minus, Slash, Dot, Zero,
    KwVm, KwPub, KwPriv, KwLet, KwIn, KwPar, KwRel, KwMrel, KwKeep, KwNew, KwBuiltin,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;
    std::int64_t num = 0;
    SourcePos pos;
};

class Lexer {
  public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }
    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

  private:
    void advance() {
        skipWs();
        cur_ = Token{};
        cur_.pos = pos_;
        if (i_ >= src_.size()) return;
        const char c = src_[i_];
        if (c == '0' && (i_ + 1 >= src_.size() || !std::isdigit((unsigned char)src_[i_ + 1]))) {
            ++i_; ++pos_.col;
            cur_.kind = Tok::Zero;
            return;
        }
        if (std::isdigit((unsigned char)c)) {
            size_t j = i_;
            while (j < src_.size() && std::isdigit((unsigned char)src_[j])) ++j;
            cur_.kind = Tok::Int;
            cur_.num = std::stoll(src_.substr(i_, j - i_));
            pos_.col += int(j - i_);
            i_ = j;
            return;
        }
        if (std::isalpha((unsigned char)c) || c == '_') {
            size_t j = i_;
            while (j < src_.size() && (std::isalnum((unsigned char)src_[j]) || src_[j] == '_')) ++j;
            const std::string w = src_.substr(i_, j - i_);
            pos_.col += int(j - i_);
            i_ = j;
            static const std::map<std::string, Tok> kw = {
                {"vm", Tok::KwVm},   {"pub", Tok::KwPub},   {"priv", Tok::KwPriv},
                {"let", Tok::KwLet}, {"in", Tok::KwIn},     {"par", Tok::KwPar},
                {"rel", Tok::KwRel}, {"mrel", Tok::KwMrel}, {"keep", Tok::KwKeep},
                {"new", Tok::KwNew}, {"builtin", Tok::KwBuiltin},
            };
            auto it = kw.find(w);
            cur_.kind = it != kw.end() ? it->second : Tok::Ident;
            cur_.text = w;
            return;
        }
        if (c == '"') {
            size_t j = i_ + 1;
            std::string s;
            while (j < src_.size() && src_[j] != '"') {
                s += src_[j];
                ++j;
            }
            if (j >= src_.size()) throw ParseError(pos_, "unterminated string literal");
            pos_.col += int(j + 1 - i_);
            i_ = j + 1;
            cur_.kind = Tok::Str;
            cur_.text = std::move(s);
            return;
        }
        auto one = [&](Tok k) {
            ++i_; ++pos_.col;
            cur_.kind = k;
        };
        switch (c) {
            case '(': one(Tok::LParen); return;
            case ')': one(Tok::RParen); return;
            case '{': one(Tok::LBrace); return;
            case '}': one(Tok::RBrace); return;
            case ',': one(Tok::Comma); return;
            case ';': one(Tok::Semi); return;
            case '&': one(Tok::Amp); return;
            case '!': one(Tok::Bang); return;
            case '+': one(Tok::Plus); return;
            case '/': one(Tok::Slash); return;
            case '.': one(Tok::Dot); return;
            case '-':
                if (i_ + 1 < src_.size() && src_[i_ + 1] == '>') {
                    i_ += 2; pos_.col += 2;
                    cur_.kind = Tok::Arrow;
                } else {
                    one(Tok::Minus);
                }
                return;
            default:
                throw ParseError(pos_, std::string("unexpected character '") + c + "'");
        }
    }

    void skipWs() {
        while (i_ < src_.size()) {
            const char c = src_[i_];
            if (c == '\n') {
                ++i_; ++pos_.line;
                pos_.col = 1;
            } else if (std::isspace((unsigned char)c)) {
                ++i_; ++pos_.col;
            } else if (c == '/' && i_ + 1 < src_.size() && src_[i_ + 1] == '/') {
                while (i_ < src_.size() && src_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    const std::string& src_;
    size_t i_ = 0;
    SourcePos pos_;
    Token cur_;
};

bool isUpperName(const std::string& s) { return !s.empty() && std::isupper((unsigned char)s[0]); }

class Parser {
  public:
    explicit Parser(const std::string& src) : lex_(src) {}

    ProcessPtr process() {
        ProcessPtr p = processPrim();
        return p;
    }

    ScriptPtr scriptTop() {
        ScriptPtr s = script();
        expect(Tok::End, "end of input");
        return s;
    }

    void expectEnd() { expect(Tok::End, "end of input"); }

  private:
    Lexer lex_;

    [[noreturn]] void fail(const std::string& msg) { throw ParseError(lex_.peek().pos, msg); }

    Token expect(Tok k, const std::string& what) {
        if (lex_.peek().kind != k) fail("expected " + what);
        return lex_.take();
    }

    bool accept(Tok k) {
        if (lex_.peek().kind != k) return false;
        lex_.take();
        return true;
    }

    ProcessPtr processPrim() {
        switch (lex_.peek().kind) {
            case Tok::KwVm: return vmDef();
            case Tok::KwBuiltin: return builtinDef();
            case Tok::KwLet: {
                lex_.take();
                ProcessPtr server = processPrim();
                expect(Tok::KwIn, "'in'");
                ProcessPtr client = processPrim();
                auto n = std::make_shared<ProcessNode>();
                n->kind = ProcessKind::Let;
                n->left = server;
                n->right = client;
                return n;
            }
            case Tok::KwPar: {
                lex_.take();
                ProcessPtr a = processPrim();
                ProcessPtr b = processPrim();
                auto n = std::make_shared<ProcessNode>();
                n->kind = ProcessKind::Par;
                n->left = a;
                n->right = b;
                return n;
            }
            case Tok::LParen: {
                lex_.take();
                ProcessPtr p = processPrim();
                expect(Tok::RParen, "')'");
                return p;
            }
            default: fail("expected a process ('vm', 'builtin', 'let', 'par')");
        }
    }

    ProcessPtr vmDef() {
        expect(Tok::KwVm, "'vm'");
        Token name = expect(Tok::Ident, "VM name");
        auto n = std::make_shared<ProcessNode>();
        n->kind = ProcessKind::Vm;
        n->vmName = name.text;
        if (accept(Tok::KwPub)) declList(*n, Visibility::Public);
        if (accept(Tok::KwPriv)) declList(*n, Visibility::Private);
        expect(Tok::LBrace, "'{'");
        n->body = script();
        expect(Tok::RBrace, "'}'");
        return n;
    }

    ProcessPtr builtinDef() {
        expect(Tok::KwBuiltin, "'builtin'");
        Token name = expect(Tok::Ident, "VM name");
        Token kind = expect(Tok::Ident, "builtin kind");
        if (kind.text != "flickr" && kind.text != "picasa")
            fail("unknown builtin kind '" + kind.text + "' (expected flickr or picasa)");
        Token fixture = expect(Tok::Str, "fixture path string");
        auto n = std::make_shared<ProcessNode>();
        n->kind = ProcessKind::Builtin;
        n->vmName = name.text;
        n->builtinKind = kind.text;
        n->fixturePath = fixture.text;
        return n;
    }

    int arity(const char* what) {
        if (accept(Tok::Zero)) return 0;
        return int(expect(Tok::Int, what).num);
    }

    void declList(ProcessNode& vm, Visibility vis) {
        expect(Tok::LParen, "'('");
        if (accept(Tok::RParen)) return;
        do {
            PredicateDecl d;
            if (accept(Tok::KwRel)) d.kind = PredKind::Relation;
            else if (accept(Tok::KwMrel)) d.kind = PredKind::MultiRelation;
            else fail("expected 'rel' or 'mrel'");
            Token name = expect(Tok::Ident, "predicate name");
            if (!isUpperName(name.text))
                throw ParseError(name.pos, "predicate names start uppercase: " + name.text);
            if (builtinByName(name.text))
                throw ParseError(name.pos, "'" + name.text + "' shadows a builtin predicate");
            d.name = name.text;
            expect(Tok::Slash, "'/'");
            d.predArity = arity("predicate arity");
            expect(Tok::Slash, "'/'");
            d.valArity = arity("value arity");
            d.vis = vis;
            for (const PredicateDecl& e : vm.decls)
                if (e.name == d.name)
                    throw ParseError(name.pos, "duplicate declaration of " + d.name);
            vm.decls.push_back(d);
        } while (accept(Tok::Comma));
        expect(Tok::RParen, "')'");
    }

    ScriptPtr script() {
        std::vector<ScriptPtr> items{seqScript()};
        while (accept(Tok::Comma)) items.push_back(seqScript());
        return scriptPar(std::move(items));
    }

    ScriptPtr seqScript() {
        ScriptPtr s = primScript();
        while (accept(Tok::Semi)) s = scriptSeq(s, primScript());
        return s;
    }

    ScriptPtr primScript() {
        switch (lex_.peek().kind) {
            case Tok::Bang: {
                lex_.take();
                expect(Tok::LParen, "'('");
                ScriptPtr body = script();
                expect(Tok::RParen, "')'");
                return scriptRepl(body);
            }
            case Tok::LParen: {
                lex_.take();
                ScriptPtr s = script();
                expect(Tok::RParen, "')'");
                return s;
            }
            case Tok::Zero: {
                // Either the empty script or the lhs of a rule '0 -> ...'.
                Token z = lex_.take();
                if (lex_.peek().kind == Tok::Arrow) return ruleTail(Molecule{}, z.pos);
                return scriptEmpty();
            }
            case Tok::KwKeep:
            case Tok::Ident: {
                SourcePos at = lex_.peek().pos;
                return ruleTail(molecule(), at);
            }
            default: fail("expected a script");
        }
    }

    ScriptPtr ruleTail(Molecule lhs, SourcePos at) {
        expect(Tok::Arrow, "'->'");
        Rule r;
        r.lhs = std::move(lhs);
        std::vector<std::string> declared;
        bool explicitNew = false;
        if (accept(Tok::KwNew)) {
            explicitNew = true;
            while (lex_.peek().kind == Tok::Ident && !isUpperName(lex_.peek().text))
                declared.push_back(lex_.take().text);
            if (declared.empty()) fail("expected variable names after 'new'");
            expect(Tok::Dot, "'.'");
        }
        if (lex_.peek().kind == Tok::Zero) lex_.take();
        else r.rhs = molecule();
        validateRule(r, declared, explicitNew, at);
        return scriptRule(std::move(r));
    }

    void validateRule(Rule& r, const std::vector<std::string>& declared, bool explicitNew,
                      SourcePos at) {
        for (const Atom& a : r.lhs.atoms)
            for (const Term& t : a.valArgs)
                if (t.isArith())
                    throw ParseError(at, "arithmetic is not allowed in a rule left-hand side");
        FreeVars fl = freeVars(r.lhs);
        FreeVars fr = freeVars(r.rhs);
        std::set<std::string> computed;
        std::set_difference(fr.vals.begin(), fr.vals.end(), fl.vals.begin(), fl.vals.end(),
                            std::inserter(computed, computed.begin()));
        if (explicitNew) {
            std::set<std::string> given(declared.begin(), declared.end());
            if (given != computed)
                throw ParseError(at, "explicit 'new' list differs from fv(rhs) - fv(lhs)");
        }
        r.newVars.assign(computed.begin(), computed.end());
        // Every lhs value variable must be bound by a consumable atom; a rule
        // constrained only by guards has no way to ground its variables.
        std::set<std::string> bindable;
        for (const Atom& a : r.lhs.atoms)
            if (!a.isBuiltin()) {
                FreeVars f = freeVars(a);
                bindable.insert(f.vals.begin(), f.vals.end());
            }
        for (const std::string& v : fl.vals)
            if (!bindable.count(v))
                throw ParseError(at, "variable " + v + " occurs only in builtin guards");
        for (const Atom& a : r.lhs.atoms)
            if (a.isBuiltin() && a.persistent) {
                // 'keep' on a guard is inert sugar; normalize it away here.
            }
    }

    Molecule molecule() {
        Molecule m;
        m.atoms.push_back(atom());
        while (accept(Tok::Amp)) m.atoms.push_back(atom());
        return m;
    }

    Atom atom() {
        Atom a;
        if (accept(Tok::KwKeep)) a.persistent = true;
        Token head = expect(Tok::Ident, "predicate name");
        if (!isUpperName(head.text))
            throw ParseError(head.pos, "predicate head must start uppercase: " + head.text);
        if (std::optional<BuiltinPred> b = builtinByName(head.text)) a.head = *b;
        else a.head = PredVar{head.text};
        expect(Tok::LParen, "'('");
        if (!accept(Tok::RParen)) {
            do {
                if (lex_.peek().kind == Tok::Ident && isUpperName(lex_.peek().text)) {
                    Token t = lex_.take();
                    if (builtinByName(t.text))
                        throw ParseError(t.pos, "builtin " + t.text + " cannot be an argument");
                    a.predArgs.push_back(PredVar{t.text});
                } else {
                    a.valArgs.push_back(term());
                }
            } while (accept(Tok::Comma));
            expect(Tok::RParen, "')'");
        }
        if (a.isBuiltin()) {
            const BuiltinPred b = std::get<BuiltinPred>(a.head);
            if (!a.predArgs.empty() || int(a.valArgs.size()) != builtinArity(b))
                throw ParseError(head.pos, std::string("builtin ") + builtinName(b) +
                                               " takes " + std::to_string(builtinArity(b)) +
                                               " value arguments");
        }
        return a;
    }

    Term term() {
        Term t = termPrim();
        while (lex_.peek().kind == Tok::Plus || lex_.peek().kind == Tok::Minus) {
            const bool add = lex_.take().kind == Tok::Plus;
            Term r = termPrim();
            t = add ? Term::add(t, r) : Term::sub(t, r);
        }
        return t;
    }

    Term termPrim() {
        switch (lex_.peek().kind) {
            case Tok::Zero: lex_.take(); return Term::val(std::int64_t{0});
            case Tok::Int: return Term::val(lex_.take().num);
            case Tok::Minus: {
                lex_.take();
                Token t = expect(Tok::Int, "integer");
                return Term::val(-t.num);
            }
            case Tok::Str: return Term::val(lex_.take().text);
            case Tok::Ident: {
                Token t = lex_.take();
                if (isUpperName(t.text))
                    throw ParseError(t.pos, "unexpected predicate name in value position: " + t.text);
                return Term::var(t.text);
            }
            default: fail("expected a term");
        }
    }
};

}  // namespace

ProcessPtr parseProcess(const std::string& text, const std::string&) {
    Parser p(text);
    ProcessPtr proc = p.process();
    p.expectEnd();
    return proc;
}

ScriptPtr parseScript(const std::string& text) {
    Parser p(text);
    return p.scriptTop();
}

// ---------------------------------------------------------------------------
// Pretty-printing (output reparses to an equal AST)

namespace {

std::string prettyTerm(const Term& t);

std::string prettyValue(const Value& v) {
    std::ostringstream os;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) os << x;
            else if constexpr (std::is_same_v<T, std::string>) os << '"' << x << '"';
            else if constexpr (std::is_same_v<T, FreshName>) os << "#" << x.vm << ":" << x.seq;
            else os << x.name;
        },
        v);
    return os.str();
}

std::string prettyTerm(const Term& t) {
    if (t.isValue()) return prettyValue(t.value());
    if (t.isVar()) return t.var().id;
    const Arith& a = t.arith();
    return prettyTerm(a.lhs) + (a.op == ArithOp::Add ? "+" : "-") + prettyTerm(a.rhs);
}

std::string prettyAtom(const Atom& a) {
    std::string s;
    if (a.persistent) s += "keep ";
    std::visit(
        [&](const auto& h) {
            using T = std::decay_t<decltype(h)>;
            if constexpr (std::is_same_v<T, PredicateRef>) s += h.name;
            else if constexpr (std::is_same_v<T, PredVar>) s += h.id;
            else s += builtinName(h);
        },
        a.head);
    s += "(";
    bool first = true;
    for (const PredArg& p : a.predArgs) {
        if (!first) s += ", ";
        first = false;
        if (const PredicateRef* r = std::get_if<PredicateRef>(&p)) s += r->name;
        else s += std::get<PredVar>(p).id;
    }
    for (const Term& t : a.valArgs) {
        if (!first) s += ", ";
        first = false;
        s += prettyTerm(t);
    }
    s += ")";
    return s;
}

std::string prettyMolecule(const Molecule& m) {
    if (m.atoms.empty()) return "0";
    std::string s;
    for (size_t i = 0; i < m.atoms.size(); ++i) {
        if (i) s += " & ";
        s += prettyAtom(m.atoms[i]);
    }
    return s;
}

std::string prettyRule(const Rule& r) {
    std::string s = prettyMolecule(r.lhs) + " -> ";
    if (!r.newVars.empty()) {
        s += "new";
        for (const std::string& v : r.newVars) s += " " + v;
        s += ". ";
    }
    s += prettyMolecule(r.rhs);
    return s;
}

std::string prettyScriptAt(const ScriptNode& s, bool parenSeq) {
    switch (s.kind) {
        case ScriptKind::Empty: return "0";
        case ScriptKind::RuleNode: return "(" + prettyRule(s.rule) + ")";
        case ScriptKind::Par: {
            std::string out;
            for (size_t i = 0; i < s.children.size(); ++i) {
                if (i) out += ", ";
                out += prettyScriptAt(*s.children[i], true);
            }
            return parenSeq ? "(" + out + ")" : out;
        }
        case ScriptKind::Seq: {
            std::string out = prettyScriptAt(*s.children[0], true) + " ; " +
                              prettyScriptAt(*s.children[1], true);
            return parenSeq ? "(" + out + ")" : out;
        }
        case ScriptKind::Repl: return "!(" + prettyScriptAt(*s.children[0], false) + ")";
    }
    return "0";
}

std::string prettyDecl(const PredicateDecl& d) {
    return std::string(d.kind == PredKind::Relation ? "rel " : "mrel ") + d.name + "/" +
           std::to_string(d.predArity) + "/" + std::to_string(d.valArity);
}

}  // namespace

std::string prettyScript(const ScriptNode& s) { return prettyScriptAt(s, false); }

std::string prettyProcess(const ProcessNode& p) {
    switch (p.kind) {
        case ProcessKind::Vm: {
            std::string s = "vm " + p.vmName;
            std::string pub, priv;
            for (const PredicateDecl& d : p.decls) {
                std::string& dst = d.vis == Visibility::Public ? pub : priv;
                if (!dst.empty()) dst += ", ";
                dst += prettyDecl(d);
            }
            s += " pub(" + pub + ")";
            if (!priv.empty()) s += " priv(" + priv + ")";
            s += " {\n  " + prettyScript(*p.body) + "\n}";
            return s;
        }
        case ProcessKind::Builtin:
            return "builtin " + p.vmName + " " + p.builtinKind + " \"" + p.fixturePath + "\"";
        case ProcessKind::Let:
            return "let " + prettyProcess(*p.left) + "\nin " + prettyProcess(*p.right);
        case ProcessKind::Par:
            return "par (" + prettyProcess(*p.left) + ") (" + prettyProcess(*p.right) + ")";
    }
    return "";
}

}  // namespace creole
