#include "creole/wire.hpp"

#include <stdexcept>

namespace creole {

nlohmann::json encodeValue(const Value& v) {
    nlohmann::json j;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, std::int64_t>) j = {{"t", "int"}, {"v", x}};
            else if constexpr (std::is_same_v<T, std::string>) j = {{"t", "str"}, {"v", x}};
            else if constexpr (std::is_same_v<T, FreshName>)
                j = {{"t", "name"}, {"v", x.vm + ":" + std::to_string(x.seq)}};
            else j = {{"t", "pref"}, {"vm", x.vm}, {"pred", x.name}};
        },
        v);
    return j;
}

Value decodeValue(const nlohmann::json& j) {
    const std::string t = j.at("t");
    if (t == "int") return j.at("v").get<std::int64_t>();
    if (t == "str") return j.at("v").get<std::string>();
    if (t == "name") {
        const std::string v = j.at("v");
        const size_t colon = v.rfind(':');
        if (colon == std::string::npos) throw std::runtime_error("bad fresh-name encoding: " + v);
        return FreshName{v.substr(0, colon), std::stoull(v.substr(colon + 1))};
    }
    if (t == "pref") return PredicateRef{j.at("vm"), j.at("pred")};
    throw std::runtime_error("unknown value tag: " + t);
}

nlohmann::json encodeAtom(const Atom& a) {
    const PredicateRef& h = a.headRef();
    nlohmann::json j;
    j["to"] = h.vm;
    j["pred"] = h.name;
    j["predArgs"] = nlohmann::json::array();
    for (const PredArg& p : a.predArgs) {
        const PredicateRef& r = std::get<PredicateRef>(p);
        j["predArgs"].push_back({{"vm", r.vm}, {"pred", r.name}});
    }
    j["valArgs"] = nlohmann::json::array();
    for (const Term& t : a.valArgs) j["valArgs"].push_back(encodeValue(t.value()));
    return j;
}

Atom decodeAtom(const nlohmann::json& j) {
    Atom a;
    a.head = PredicateRef{j.at("to"), j.at("pred")};
    for (const auto& p : j.at("predArgs")) a.predArgs.push_back(PredicateRef{p.at("vm"), p.at("pred")});
    for (const auto& v : j.at("valArgs")) a.valArgs.push_back(Term::val(decodeValue(v)));
    return a;
}

}  // namespace creole
