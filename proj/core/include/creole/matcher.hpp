#ifndef CREOLE_MATCHER_HPP
#define CREOLE_MATCHER_HPP

#include <functional>
#include <optional>
#include <stdexcept>

#include "creole/ast.hpp"

namespace creole {

struct Substitution {
    std::map<std::string, Value> vals;
    std::map<std::string, PredicateRef> preds;
};

struct MatchResult {
    Substitution subst;
    std::vector<Atom> consumed;        // ground, sorted
    std::vector<size_t> consumedIdx;   // indices into the solution vector
};

// Raised when a rhs instantiation hits arithmetic over non-integers; the
// firing is aborted and the configuration left unchanged.
struct RuntimeFault : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// "null" is the distinguished null value.
bool isNullValue(const Value& v);

// "DD/MM/YYYY" -> days since 1970-01-01.
std::optional<std::int64_t> parseDate(const std::string& s);

// Ground builtin atom -> truth value. Unparseable Between/NotBetween operands
// make the guard false; `warn` (when set) receives a message.
bool evalGuard(const Atom& g, const std::function<void(const std::string&)>& warn = {});

// All substitutions matching lhs against the solution, up to consumed-multiset
// identity. Non-builtin lhs atoms map injectively onto distinct occurrences;
// builtins constrain only.
std::vector<MatchResult> enumerateMatches(const Molecule& lhs, const std::vector<Atom>& solution);

// Instantiates m under s, minting a FreshName for each of newVars and
// evaluating arithmetic. All result atoms are ground.
std::vector<Atom> applySubst(const Molecule& m, const Substitution& s,
                             const std::vector<std::string>& newVars, FreshNameSupply& fresh);

Value evalTerm(const Term& t, const Substitution& s);

}  // namespace creole

#endif
