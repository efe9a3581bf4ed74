#ifndef CREOLE_TRANSPORT_HPP
#define CREOLE_TRANSPORT_HPP

#include <atomic>
#include <deque>
#include <mutex>

#include "creole/dist.hpp"
#include "creole/toml_lite.hpp"

namespace creole {

// Atom routing between VM instances for the threaded runtime. Delivery is
// at-least-once-exactly (each sent atom arrives exactly once); inFlight()
// counts atoms sent but not yet handed to the destination VM, which the
// quiescence detector relies on.
class Transport {
  public:
    virtual ~Transport() = default;
    virtual void send(const Atom& a) = 0;  // routed by the head's owning VM
    virtual std::optional<Atom> receive(const std::string& vmId) = 0;  // non-blocking
    virtual size_t inFlight() const = 0;
};

class InMemoryTransport : public Transport {
  public:
    void send(const Atom& a) override;
    std::optional<Atom> receive(const std::string& vmId) override;
    size_t inFlight() const override;

  private:
    mutable std::mutex mu_;
    std::map<std::string, std::deque<Atom>> queues_;
    size_t pending_ = 0;
};

// Newline-delimited JSON frames over TCP; one listener socket per local VM.
// All endpoints (local and remote) are dialed per message.
class TcpTransport : public Transport {
  public:
    struct Endpoint {
        std::string host;
        int port = 0;
    };

    TcpTransport(std::map<std::string, Endpoint> endpoints, std::vector<std::string> localVms);
    ~TcpTransport() override;

    void start();
    void stop();

    void send(const Atom& a) override;
    std::optional<Atom> receive(const std::string& vmId) override;
    size_t inFlight() const override;

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Parses `[vm.NAME] host = "..." port = N` sections.
std::map<std::string, TcpTransport::Endpoint> loadDeployment(const TomlDoc& doc);

struct ThreadedRunResult {
    DistributedConfig config;
    size_t steps = 0;
    bool budgetExhausted = false;
};

// Runs every VM on its own thread, exchanging migrated atoms through the
// transport. Terminates when all VMs are idle, nothing is in flight, and the
// state stays stable across a re-check. Nondeterministic by nature; only
// final configurations are meaningful.
ThreadedRunResult runThreaded(DistributedConfig d, const Registry& reg, Transport& t,
                              std::uint64_t seed, size_t maxTotalSteps = 100000);

}  // namespace creole

#endif
