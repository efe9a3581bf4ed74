#ifndef CREOLE_PARSER_HPP
#define CREOLE_PARSER_HPP

#include <stdexcept>
#include <string>

#include "creole/ast.hpp"

namespace creole {

struct SourcePos {
    int line = 1;
    int col = 1;
};

struct ParseError : std::runtime_error {
    SourcePos pos;
    ParseError(SourcePos p, const std::string& msg)
        : std::runtime_error(std::to_string(p.line) + ":" + std::to_string(p.col) + ": " + msg),
          pos(p) {}
};

// Concrete syntax (documented in docs/syntax.md):
//   process  := 'vm' NAME ['pub' '(' decls ')'] ['priv' '(' decls ')'] '{' script '}'
//             | 'builtin' NAME KIND STRING
//             | 'let' process 'in' process
//             | 'par' process process
//             | '(' process ')'
//   decl     := ('rel'|'mrel') NAME '/' INT '/' INT
//   script   := seq (',' seq)*
//   seq      := prim (';' prim)*
//   prim     := '0' | '!' '(' script ')' | '(' script ')' | rule
//   rule     := molecule '->' ['new' var+ '.'] molecule
//   molecule := '0' | atom ('&' atom)*
//   atom     := ['keep'] UNAME '(' args ')'
// Uppercase-initial identifiers are predicates, lowercase-initial are value
// variables. Comments run '//' to end of line.
//
// In parsed atoms every user predicate occurrence is a PredVar; resolution to
// PredicateRefs happens during elaboration, where the VM scope is known.
ProcessPtr parseProcess(const std::string& text, const std::string& origin = "<memory>");

// A bare script with no process wrapper (used by the compilers and tests).
ScriptPtr parseScript(const std::string& text);

std::string prettyProcess(const ProcessNode& p);
std::string prettyScript(const ScriptNode& s);

}  // namespace creole

#endif
