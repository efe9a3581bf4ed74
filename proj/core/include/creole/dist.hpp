#ifndef CREOLE_DIST_HPP
#define CREOLE_DIST_HPP

#include <functional>
#include <memory>

#include "creole/engine.hpp"

namespace creole {

// Natively implemented VM (a CRUD connector). Receives one migrated atom at a
// time and produces reply atoms. Must be copyable through clone() so the
// exhaustive oracle can branch over distributed states.
class NativeHandler {
  public:
    virtual ~NativeHandler() = default;
    virtual std::vector<PredicateDecl> decls() const = 0;
    virtual std::vector<Atom> handle(const Atom& request) = 0;
    virtual std::unique_ptr<NativeHandler> clone() const = 0;
    // Internal state folded into the distributed canonical form.
    virtual std::string stateKey() const = 0;
    // Warnings (dropped requests, malformed dates) surfaced to the trace.
    std::function<void(const std::string&)> warn;
};

using NativeFactory = std::function<std::unique_ptr<NativeHandler>(const std::string& fixturePath,
                                                                   const std::string& vmId)>;

struct ElabError : std::runtime_error {
    std::vector<std::string> diagnostics;
    explicit ElabError(std::vector<std::string> diags);
};

struct VmInstance {
    std::string id;
    std::vector<PredicateDecl> decls;
    Configuration config;  // for native VMs the solution acts as the inbox
    std::shared_ptr<NativeHandler> nativePrototype;  // unset for script VMs
    std::shared_ptr<NativeHandler> native;           // per-state working copy
    std::uint64_t freshMark = 0;

    bool isNative() const { return nativePrototype != nullptr; }
    bool declares(const std::string& predName) const {
        for (const PredicateDecl& d : decls)
            if (d.name == predName) return true;
        return false;
    }
};

struct DistributedConfig {
    std::vector<VmInstance> vms;  // sorted by id
    std::vector<Atom> ether;

    VmInstance* findVm(const std::string& id);
    const VmInstance* findVm(const std::string& id) const;
};

// Static checks only; empty result means the process elaborates cleanly.
std::vector<std::string> checkProcess(const ProcessNode& p,
                                      const std::map<std::string, NativeFactory>& natives = {});

// Builds one VmInstance per VM, resolves predicate names against each VM's
// scope (own declarations, let-granted server publics, builtins), applies the
// keep desugaring, and registers every declaration in `reg`.
DistributedConfig elaborate(const ProcessNode& p, Registry& reg,
                            const std::map<std::string, NativeFactory>& natives = {});

std::string distCanonicalForm(const DistributedConfig& d, const Registry& reg);

struct DistCandidate {
    DistributedConfig result;
    TraceEvent event;
    Trace extraEvents;
    std::string key;
};

// One progression: a VM engine step, a native request handled, or an ether
// atom delivered (In). Out migration is eager: it is folded into
// normalization, so a freshly produced non-local atom is in the ether before
// any further choice.
std::vector<DistCandidate> distCandidates(const DistributedConfig& d, const Registry& reg,
                                          Trace* trace = nullptr);

std::optional<DistributedConfig> distStep(const DistributedConfig& d, const Registry& reg,
                                          Scheduler& sch, Trace* trace = nullptr);

struct DistRunResult {
    DistributedConfig config;
    RunStatus status = RunStatus::Final;
    size_t steps = 0;
    Trace trace;
};

DistRunResult runDistributed(DistributedConfig d, const Registry& reg, Scheduler& sch,
                             size_t maxSteps = 100000, bool withTrace = true);

std::map<std::string, DistributedConfig> distExhaustiveFinals(const DistributedConfig& d,
                                                              const Registry& reg,
                                                              Bounds bounds = {});

// Moves every non-local solution atom into the ether and delivers nothing.
void sweepOut(DistributedConfig& d, const Registry& reg, Trace* trace = nullptr);

}  // namespace creole

#endif
