#include "creole/transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <thread>

#include "creole/wire.hpp"

namespace creole {

// ---------------------------------------------------------------------------
// In-memory transport

void InMemoryTransport::send(const Atom& a) {
    std::lock_guard<std::mutex> lock(mu_);
    queues_[a.headRef().vm].push_back(a);
    ++pending_;
}

std::optional<Atom> InMemoryTransport::receive(const std::string& vmId) {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = queues_.find(vmId);
    if (it == queues_.end() || it->second.empty()) return std::nullopt;
    Atom a = std::move(it->second.front());
    it->second.pop_front();
    --pending_;
    return a;
}

size_t InMemoryTransport::inFlight() const {
    std::lock_guard<std::mutex> lock(mu_);
    return pending_;
}

// ---------------------------------------------------------------------------
// TCP transport

struct TcpTransport::Impl {
    std::map<std::string, Endpoint> endpoints;
    std::vector<std::string> localVms;

    std::mutex mu;
    std::map<std::string, std::deque<Atom>> queues;
    std::atomic<size_t> pending{0};
    std::atomic<bool> stopping{false};

    std::vector<int> listenFds;
    std::vector<std::thread> acceptors;

    void enqueueFrame(const std::string& line) {
        Atom a = decodeAtom(nlohmann::json::parse(line));
        std::lock_guard<std::mutex> lock(mu);
        queues[a.headRef().vm].push_back(std::move(a));
    }

    void drainConnection(int fd) {
        std::string buf;
        char chunk[4096];
        for (;;) {
            ssize_t n = ::read(fd, chunk, sizeof chunk);
            if (n <= 0) break;
            buf.append(chunk, size_t(n));
        }
        ::close(fd);
        size_t start = 0;
        for (;;) {
            size_t nl = buf.find('\n', start);
            if (nl == std::string::npos) break;
            std::string line = buf.substr(start, nl - start);
            start = nl + 1;
            if (!line.empty()) enqueueFrame(line);
        }
    }

    void acceptLoop(int listenFd) {
        while (!stopping.load()) {
            pollfd p{listenFd, POLLIN, 0};
            int r = ::poll(&p, 1, 50);
            if (r <= 0) continue;
            int fd = ::accept(listenFd, nullptr, nullptr);
            if (fd >= 0) drainConnection(fd);
        }
    }
};

TcpTransport::TcpTransport(std::map<std::string, Endpoint> endpoints,
                           std::vector<std::string> localVms)
    : impl_(std::make_unique<Impl>()) {
    impl_->endpoints = std::move(endpoints);
    impl_->localVms = std::move(localVms);
}

TcpTransport::~TcpTransport() { stop(); }

void TcpTransport::start() {
    for (const std::string& vm : impl_->localVms) {
        auto it = impl_->endpoints.find(vm);
        if (it == impl_->endpoints.end())
            throw std::runtime_error("no deployment endpoint for VM " + vm);
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) throw std::runtime_error("socket() failed");
        int one = 1;
        ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(uint16_t(it->second.port));
        if (::inet_pton(AF_INET, it->second.host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd);
            throw std::runtime_error("bad listen address " + it->second.host);
        }
        if (::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 ||
            ::listen(fd, 64) != 0) {
            ::close(fd);
            throw std::runtime_error("cannot listen on " + it->second.host + ":" +
                                     std::to_string(it->second.port));
        }
        impl_->listenFds.push_back(fd);
        impl_->acceptors.emplace_back([this, fd] { impl_->acceptLoop(fd); });
    }
}

void TcpTransport::stop() {
    if (!impl_ || impl_->stopping.exchange(true)) return;
    for (std::thread& t : impl_->acceptors)
        if (t.joinable()) t.join();
    for (int fd : impl_->listenFds) ::close(fd);
    impl_->acceptors.clear();
    impl_->listenFds.clear();
}

void TcpTransport::send(const Atom& a) {
    auto it = impl_->endpoints.find(a.headRef().vm);
    if (it == impl_->endpoints.end())
        throw std::runtime_error("no deployment endpoint for VM " + a.headRef().vm);
    std::string frame = encodeAtom(a).dump() + "\n";
    impl_->pending.fetch_add(1);

    for (int attempt = 0; attempt < 50; ++attempt) {
        int fd = ::socket(AF_INET, SOCK_STREAM, 0);
        if (fd < 0) break;
        sockaddr_in addr{};
        addr.sin_family = AF_INET;
        addr.sin_port = htons(uint16_t(it->second.port));
        if (::inet_pton(AF_INET, it->second.host.c_str(), &addr.sin_addr) != 1) {
            ::close(fd);
            break;
        }
        if (::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0) {
            size_t off = 0;
            bool ok = true;
            while (off < frame.size()) {
                ssize_t n = ::write(fd, frame.data() + off, frame.size() - off);
                if (n <= 0) { ok = false; break; }
                off += size_t(n);
            }
            ::shutdown(fd, SHUT_WR);
            char sink[64];
            while (::read(fd, sink, sizeof sink) > 0) {}
            ::close(fd);
            if (ok) return;
        } else {
            ::close(fd);
        }
        std::this_thread::sleep_for(std::chrono::milliseconds(2));
    }
    impl_->pending.fetch_sub(1);
    throw std::runtime_error("cannot deliver atom to VM " + a.headRef().vm);
}

std::optional<Atom> TcpTransport::receive(const std::string& vmId) {
    std::lock_guard<std::mutex> lock(impl_->mu);
    auto it = impl_->queues.find(vmId);
    if (it == impl_->queues.end() || it->second.empty()) return std::nullopt;
    Atom a = std::move(it->second.front());
    it->second.pop_front();
    impl_->pending.fetch_sub(1);
    return a;
}

size_t TcpTransport::inFlight() const { return impl_->pending.load(); }

std::map<std::string, TcpTransport::Endpoint> loadDeployment(const TomlDoc& doc) {
    std::map<std::string, TcpTransport::Endpoint> eps;
    for (const auto& [section, kv] : doc) {
        if (section.rfind("vm.", 0) != 0) continue;
        TcpTransport::Endpoint e;
        e.host = "127.0.0.1";
        if (auto it = kv.find("host"); it != kv.end()) e.host = it->second.str();
        auto it = kv.find("port");
        if (it == kv.end()) throw TomlError("[" + section + "] missing port");
        e.port = int(it->second.integer());
        eps.emplace(section.substr(3), std::move(e));
    }
    return eps;
}

// ---------------------------------------------------------------------------
// Threaded runner

ThreadedRunResult runThreaded(DistributedConfig d, const Registry& reg, Transport& t,
                              std::uint64_t seed, size_t maxTotalSteps) {
    const size_t n = d.vms.size();
    // Seed the transport with anything already destined elsewhere.
    {
        Trace scratch;
        sweepOut(d, reg, &scratch);
        for (Atom& a : d.ether) t.send(a);
        d.ether.clear();
    }

    std::vector<std::atomic<bool>> idle(n);
    for (auto& f : idle) f.store(false);
    std::atomic<bool> stop{false};
    std::atomic<size_t> steps{0};
    std::vector<std::thread> threads;

    for (size_t i = 0; i < n; ++i) {
        threads.emplace_back([&, i] {
            VmInstance& vm = d.vms[i];
            Scheduler sch =
                Scheduler::seeded(seed ^ std::hash<std::string>{}(vm.id) ^ 0x9e3779b97f4a7c15ull);
            FreshNameSupply supply(vm.id);
            supply.resume(vm.freshMark);
            EngineCtx ctx{&reg, vm.id, &supply, nullptr};

            auto flushNonLocal = [&] {
                std::vector<Atom> keep;
                for (Atom& a : vm.config.solution) {
                    if (a.headIsRef() && a.headRef().vm != vm.id) t.send(a);
                    else keep.push_back(std::move(a));
                }
                vm.config.solution = std::move(keep);
                normalize(vm.config, reg);
            };

            while (!stop.load()) {
                // Mark busy before draining the transport: once an atom is
                // popped the transport's in-flight count no longer covers it,
                // so this flag must already be down or the quiescence check
                // could observe "all idle, nothing in flight" mid-hand-off.
                idle[i].store(false);
                bool didWork = false;
                while (std::optional<Atom> a = t.receive(vm.id)) {
                    vm.config.solution.push_back(std::move(*a));
                    if (!vm.isNative()) normalize(vm.config, reg);
                    didWork = true;
                }
                if (vm.isNative()) {
                    if (!vm.config.solution.empty()) {
                        Atom req = std::move(vm.config.solution.front());
                        vm.config.solution.erase(vm.config.solution.begin());
                        for (Atom& a : vm.native->handle(req))
                            vm.config.solution.push_back(std::move(a));
                        flushNonLocal();
                        steps.fetch_add(1);
                        didWork = true;
                    }
                } else {
                    std::vector<StepCandidate> cands = stepCandidates(vm.config, ctx);
                    if (!cands.empty()) {
                        StepCandidate& pick = cands[sch.choose(cands.size())];
                        vm.config = std::move(pick.result);
                        supply.resume(pick.freshEnd);
                        flushNonLocal();
                        steps.fetch_add(1);
                        didWork = true;
                    }
                }
                idle[i].store(!didWork);
                if (!didWork) std::this_thread::sleep_for(std::chrono::microseconds(200));
            }
        });
    }

    ThreadedRunResult rr;
    auto allIdle = [&] {
        for (const auto& f : idle)
            if (!f.load()) return false;
        return true;
    };
    for (;;) {
        std::this_thread::sleep_for(std::chrono::milliseconds(1));
        if (steps.load() > maxTotalSteps) {
            rr.budgetExhausted = true;
            break;
        }
        if (allIdle() && t.inFlight() == 0) {
            size_t before = steps.load();
            std::this_thread::sleep_for(std::chrono::milliseconds(3));
            if (allIdle() && t.inFlight() == 0 && steps.load() == before) break;
        }
    }
    stop.store(true);
    for (std::thread& th : threads) th.join();

    rr.steps = steps.load();
    rr.config = std::move(d);
    for (VmInstance& vm : rr.config.vms) normalize(vm.config, reg);
    return rr;
}

}  // namespace creole
