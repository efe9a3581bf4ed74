#include <chrono>
#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "creole/builtin_vm.hpp"
#include "creole/frontends.hpp"
#include "creole/parser.hpp"
#include "creole/toml_lite.hpp"
#include "creole/transport.hpp"

namespace {

using namespace creole;

constexpr int kExitOk = 0;
constexpr int kExitStatic = 1;
constexpr int kExitBudget = 2;
constexpr int kExitBound = 3;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

nlohmann::json reportJson(const DistributedConfig& d, const Registry& reg,
                          const std::string& status, size_t steps) {
    std::vector<const std::vector<Atom>*> sections;
    for (const VmInstance& vm : d.vms) sections.push_back(&vm.config.solution);
    sections.push_back(&d.ether);
    std::vector<std::string> parts = canonicalAtoms(sections);
    nlohmann::json vms = nlohmann::json::object();
    for (size_t i = 0; i < d.vms.size(); ++i) vms[d.vms[i].id] = parts[i];
    return {{"status", status}, {"steps", steps}, {"vms", vms}, {"ether", parts.back()}};
}

void printReport(const nlohmann::json& r, bool asJson) {
    if (asJson) {
        std::cout << r.dump(2) << "\n";
        return;
    }
    std::cout << "status: " << r.at("status").get<std::string>() << "\n";
    std::cout << "steps: " << r.at("steps").get<size_t>() << "\n";
    for (const auto& [vm, sol] : r.at("vms").items())
        std::cout << "[" << vm << "] " << sol.get<std::string>() << "\n";
    std::cout << "ether: " << r.at("ether").get<std::string>() << "\n";
}

int cmdRun(const std::string& file, std::uint64_t seed, size_t maxSteps,
           const std::string& tracePath, const std::string& deployPath, bool asJson) {
    auto t0 = std::chrono::steady_clock::now();
    ProcessPtr p = parseProcess(slurp(file), file);
    Registry reg;
    DistributedConfig d = elaborate(*p, reg, defaultNativeFactories());

    nlohmann::json report;
    Trace trace;
    int code = kExitOk;
    if (!deployPath.empty()) {
        auto endpoints = loadDeployment(parseTomlFile(deployPath));
        std::vector<std::string> local;
        for (const VmInstance& vm : d.vms) local.push_back(vm.id);
        TcpTransport t(endpoints, local);
        t.start();
        ThreadedRunResult rr = runThreaded(std::move(d), reg, t, seed, maxSteps);
        t.stop();
        code = rr.budgetExhausted ? kExitBudget : kExitOk;
        report = reportJson(rr.config, reg, rr.budgetExhausted ? "budget-exhausted" : "final",
                            rr.steps);
    } else {
        Scheduler sch = Scheduler::seeded(seed);
        DistRunResult rr = runDistributed(std::move(d), reg, sch, maxSteps, !tracePath.empty());
        trace = std::move(rr.trace);
        code = rr.status == RunStatus::Final ? kExitOk : kExitBudget;
        report = reportJson(rr.config, reg,
                            rr.status == RunStatus::Final ? "final" : "budget-exhausted",
                            rr.steps);
    }
    if (!tracePath.empty()) {
        std::ofstream out(tracePath);
        for (const TraceEvent& e : trace) out << e.dump() << "\n";
        report["trace"] = tracePath;
    }
    printReport(report, asJson);
    auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                  std::chrono::steady_clock::now() - t0).count();
    std::cerr << "elapsed: " << ms << " ms\n";
    return code;
}

int cmdCheck(const std::string& file) {
    ProcessPtr p = parseProcess(slurp(file), file);
    std::vector<std::string> diags = checkProcess(*p, defaultNativeFactories());
    for (const std::string& m : diags) std::cerr << file << ": " << m << "\n";
    return diags.empty() ? kExitOk : kExitStatic;
}

int cmdCompile(const std::string& from, const std::string& queryArg, const std::string& mapPath,
               const std::string& outPath, const std::string& vmName, bool preserveInput) {
    std::string queryText =
        queryArg.rfind('@', 0) == 0 ? slurp(queryArg.substr(1)) : queryArg;
    TomlDoc doc = parseTomlFile(mapPath);
    TableMapping mapping = loadTableMapping(doc);

    ScriptFragment frag;
    if (from == "sql") {
        frag = compileSql(parseSql(queryText), mapping, preserveInput);
    } else if (from == "yql") {
        frag = compileYql(parseYql(queryText), mapping);
    } else {
        std::cerr << "unknown dialect " << from << " (expected sql|yql)\n";
        return kExitStatic;
    }
    ProcessPtr client = fragmentVm(vmName, {frag});

    ProcessPtr whole = client;
    if (auto it = doc.find("server"); it != doc.end() && from == "yql") {
        auto server = std::make_shared<ProcessNode>();
        server->kind = ProcessKind::Builtin;
        server->vmName = it->second.at("name").str();
        server->builtinKind = it->second.at("kind").str();
        server->fixturePath = it->second.at("source").str();
        auto let = std::make_shared<ProcessNode>();
        let->kind = ProcessKind::Let;
        let->left = server;
        let->right = client;
        whole = let;
    }
    std::string text = prettyProcess(*whole);

    std::vector<std::string> diags = checkProcess(*whole, defaultNativeFactories());
    if (!diags.empty()) {
        for (const std::string& m : diags) std::cerr << m << "\n";
        return kExitStatic;
    }
    if (outPath.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(outPath);
        out << text;
    }
    return kExitOk;
}

int cmdOracle(const std::string& file, size_t maxDepth, size_t maxStates, bool asJson) {
    ProcessPtr p = parseProcess(slurp(file), file);
    Registry reg;
    DistributedConfig d = elaborate(*p, reg, defaultNativeFactories());
    Bounds bounds{maxDepth, maxStates};
    try {
        auto finals = distExhaustiveFinals(d, reg, bounds);
        if (asJson) {
            nlohmann::json arr = nlohmann::json::array();
            for (const auto& [key, cfg] : finals) arr.push_back(key);
            std::cout << nlohmann::json{{"finals", arr}}.dump(2) << "\n";
        } else {
            std::cout << "finals: " << finals.size() << "\n";
            size_t i = 0;
            for (const auto& [key, cfg] : finals)
                std::cout << "--- final " << ++i << " ---\n" << key << "\n";
        }
        return kExitOk;
    } catch (const BoundExceeded& e) {
        std::cerr << "oracle bound exceeded: " << e.what() << "\n";
        return kExitBound;
    }
}

int cmdServeFixture(const std::string& fixture, int port) {
    auto backend = loadFixture(fixture);
    FixtureServer server(backend, port);
    server.start();
    std::cerr << "serving " << fixture << " on port " << port << "\n";
    for (;;) std::this_thread::sleep_for(std::chrono::seconds(3600));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"CREOLE pivot-language toolchain"};
    app.require_subcommand(1);

    std::string file, tracePath, deployPath, from, query, mapPath, outPath;
    std::string vmName = "CVM";
    std::uint64_t seed = 0;
    size_t maxSteps = 100000, maxDepth = 64, maxStates = 10000;
    int port = 8080;
    bool asJson = false, preserveInput = false;

    CLI::App* run = app.add_subcommand("run", "Execute a program");
    run->add_option("file", file)->required();
    run->add_option("--seed", seed);
    run->add_option("--steps", maxSteps);
    run->add_option("--trace", tracePath);
    run->add_option("--deploy", deployPath);
    run->add_flag("--json", asJson);

    CLI::App* check = app.add_subcommand("check", "Static checks only");
    check->add_option("file", file)->required();

    CLI::App* compile = app.add_subcommand("compile", "Compile a mini-SQL/YQL query");
    compile->add_option("--from", from)->required();
    compile->add_option("query", query)->required();
    compile->add_option("--map", mapPath)->required();
    compile->add_option("-o", outPath);
    compile->add_option("--vm", vmName);
    compile->add_flag("--preserve-input", preserveInput);

    CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive finals");
    oracle->add_option("file", file)->required();
    oracle->add_option("--max-depth", maxDepth);
    oracle->add_option("--max-states", maxStates);
    oracle->add_flag("--json", asJson);

    CLI::App* serve = app.add_subcommand("serve-fixture", "CRUD HTTP service over a fixture");
    serve->add_option("--fixture", file)->required();
    serve->add_option("--port", port);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmdRun(file, seed, maxSteps, tracePath, deployPath, asJson);
        if (check->parsed()) return cmdCheck(file);
        if (compile->parsed())
            return cmdCompile(from, query, mapPath, outPath, vmName, preserveInput);
        if (oracle->parsed()) return cmdOracle(file, maxDepth, maxStates, asJson);
        if (serve->parsed()) return cmdServeFixture(file, port);
    } catch (const ParseError& e) {
        std::cerr << file << ":" << e.what() << "\n";
        return kExitStatic;
    } catch (const ElabError& e) {
        std::cerr << e.what() << "\n";
        return kExitStatic;
    } catch (const CompileError& e) {
        std::cerr << e.what() << "\n";
        return kExitStatic;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitStatic;
    }
    return kExitStatic;
}
