#ifndef CREOLE_ENGINE_HPP
#define CREOLE_ENGINE_HPP

#include <json.hpp>
#include <optional>
#include <random>
#include <set>
#include <stdexcept>

#include "creole/matcher.hpp"

namespace creole {

// The CHAM state of one virtual machine: a multiset of executing script items
// and a multiset of ground atoms. The reaction vector is kept with top-level
// parallel compositions split into separate items and empties dropped.
struct Configuration {
    std::vector<ScriptPtr> reaction;
    std::vector<Atom> solution;  // sorted
};

using TraceEvent = nlohmann::json;
using Trace = std::vector<TraceEvent>;

struct Scheduler {
    enum class Kind { SeededRandom, Deterministic };
    Kind kind = Kind::SeededRandom;
    std::mt19937_64 rng;

    static Scheduler seeded(std::uint64_t seed) {
        Scheduler s;
        s.kind = Kind::SeededRandom;
        s.rng.seed(seed);
        return s;
    }
    static Scheduler deterministic() {
        Scheduler s;
        s.kind = Kind::Deterministic;
        return s;
    }
    // Candidates are presented sorted by canonical key; Deterministic takes
    // the first.
    size_t choose(size_t n) {
        if (n <= 1 || kind == Kind::Deterministic) return 0;
        return std::uniform_int_distribution<size_t>(0, n - 1)(rng);
    }
};

struct Bounds {
    size_t maxDepth = 64;
    size_t maxStates = 10000;
};

struct BoundExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct EngineCtx {
    const Registry* reg = nullptr;
    std::string vmId;
    FreshNameSupply* fresh = nullptr;
    Trace* trace = nullptr;
};

struct StepCandidate {
    Configuration result;
    TraceEvent event;
    std::string key;             // canonical form of result, used for ordering
    std::uint64_t freshEnd = 0;  // supply position after this firing
    Trace extraEvents;           // dedup records
};

// Exhaustive duplicate elimination: each relation-headed ground atom occurs at
// most once; multi-relation multiplicities untouched. Also splits top-level
// parallel reaction items. `removed` receives the eliminated atoms.
void normalize(Configuration& c, const Registry& reg, std::vector<Atom>* removed = nullptr);

// Structural-congruence decision procedure: equal strings iff configurations
// are congruent up to multiset reordering, Par flattening, unfired replication
// unfoldings, and first-occurrence renaming of fresh names.
std::string canonicalForm(const Configuration& c, const Registry& reg);

// Pieces shared with the distributed canonical form. `canonicalAtoms` renames
// fresh names globally across all sections by first occurrence, then returns
// one sorted, joined string per section.
std::string canonicalReaction(const std::vector<ScriptPtr>& reaction);
std::vector<std::string> canonicalAtoms(const std::vector<const std::vector<Atom>*>& sections);

// All progressions from c: rule firings and sequence skips whose normalized
// result is not congruent to c. Sorted by canonical key.
std::vector<StepCandidate> stepCandidates(const Configuration& c, EngineCtx& ctx);

bool progresses(const Configuration& c, EngineCtx& ctx);

std::optional<Configuration> step(const Configuration& c, EngineCtx& ctx, Scheduler& sch);

enum class RunStatus { Final, BudgetExhausted };

struct RunResult {
    Configuration config;
    RunStatus status = RunStatus::Final;
    size_t steps = 0;
};

RunResult run(Configuration c, EngineCtx& ctx, Scheduler& sch, size_t maxSteps = 100000);

// BFS over every scheduler choice; canonical forms of all reachable finals.
std::map<std::string, Configuration> exhaustiveFinals(const Configuration& c, EngineCtx& ctx,
                                                      Bounds bounds = {});

// Active rule occurrences: through Par, Repl (one unfolding), and Seq left
// children; never a Seq right child.
struct ActiveRule {
    Rule rule;
    ScriptPtr residue;  // the item after consuming this rule occurrence
};
std::vector<ActiveRule> activeRules(const ScriptPtr& s);

}  // namespace creole

#endif
