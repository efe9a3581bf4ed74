#include "creole/builtin_vm.hpp"

#include <algorithm>
#include <sstream>

#include "creole/matcher.hpp"

namespace creole {

namespace {

std::optional<std::string> asString(const Value& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    return std::nullopt;
}

}  // namespace

PhotoServiceVm::PhotoServiceVm(std::string vmId, bool flickr,
                               std::shared_ptr<CrudBackend> backend)
    : vmId_(std::move(vmId)), flickr_(flickr), backend_(std::move(backend)) {
    attrs_ = flickr_ ? std::vector<std::string>{"title", "tags"}
                     : std::vector<std::string>{"title", "album"};
}

std::vector<PredicateDecl> PhotoServiceVm::decls() const {
    std::vector<PredicateDecl> ds;
    if (flickr_) {
        ds.push_back({"FPhotoCloning", PredKind::Relation, 1, 1, Visibility::Public});
        ds.push_back({"CountsIn", PredKind::Relation, 1, 3, Visibility::Public});
        ds.push_back({"PhotoSearch", PredKind::Relation, 0, 3, Visibility::Public});
        ds.push_back({"SearchResult", PredKind::Relation, 1, 1, Visibility::Public});
    } else {
        ds.push_back({"PPhotoCloning", PredKind::Relation, 1, 1, Visibility::Public});
    }
    return ds;
}

void PhotoServiceVm::emitWarn(const std::string& msg) const {
    if (warn) warn("[" + vmId_ + "] " + msg);
}

Atom PhotoServiceVm::reply(const PredicateRef& k, std::vector<Value> vals) const {
    Atom a;
    a.head = k;
    for (Value& v : vals) a.valArgs.push_back(Term::val(std::move(v)));
    return a;
}

Atom PhotoServiceVm::streamNext(const PredicateRef& k, const Value& sessionKey,
                                Cursor& c) const {
    std::vector<Value> vals{sessionKey};
    if (c.pos < c.snapshot.size()) {
        const PhotoRecord& r = c.snapshot[c.pos++];
        vals.emplace_back(r.id);
        vals.emplace_back(r.dateTaken);
        for (const std::string& name : attrs_) {
            auto it = r.attrs.find(name);
            vals.emplace_back(it == r.attrs.end() ? std::string() : it->second);
        }
    } else {
        vals.emplace_back(std::string("null"));
        for (size_t i = 0; i < attrs_.size() + 1; ++i) vals.emplace_back(std::string());
    }
    return reply(k, std::move(vals));
}

std::vector<Atom> PhotoServiceVm::handle(const Atom& request) {
    if (!request.headIsRef()) {
        emitWarn("dropped request with non-ground head");
        return {};
    }
    const std::string& op = request.headRef().name;
    auto ground = [&](size_t i) { return request.valArgs[i].value(); };

    if (op == "PhotoCloning" || op == "FPhotoCloning" || op == "PPhotoCloning") {
        if (request.predArgs.size() != 1 || request.valArgs.size() != 1) {
            emitWarn("dropped malformed " + op + " request");
            return {};
        }
        const auto* k = std::get_if<PredicateRef>(&request.predArgs[0]);
        if (!k) {
            emitWarn("dropped " + op + " with unresolved reply predicate");
            return {};
        }
        Value session = ground(0);
        std::string key = showValue(session);
        auto it = cloneCursors_.find(key);
        if (it == cloneCursors_.end()) {
            Cursor c;
            c.snapshot = backend_->read("photos", CrudQuery{});
            it = cloneCursors_.emplace(key, std::move(c)).first;
        }
        return {streamNext(*k, session, it->second)};
    }

    if (op == "CountsIn" && flickr_) {
        if (request.predArgs.size() != 1 || request.valArgs.size() != 3) {
            emitWarn("dropped malformed CountsIn request");
            return {};
        }
        const auto* k = std::get_if<PredicateRef>(&request.predArgs[0]);
        if (!k) {
            emitWarn("dropped CountsIn with unresolved reply predicate");
            return {};
        }
        Value session = ground(0);
        auto from = asString(ground(1)), to = asString(ground(2));
        if (!from || !to || !parseDate(*from) || !parseDate(*to)) {
            emitWarn("CountsIn: malformed date range");
            return {reply(*k, {session, std::int64_t{-1}})};
        }
        CrudQuery q;
        q.fromDate = *from;
        q.toDate = *to;
        auto rows = backend_->read("photos", q);
        return {reply(*k, {session, static_cast<std::int64_t>(rows.size())})};
    }

    if (op == "PhotoSearch" && flickr_) {
        if (!request.predArgs.empty() || request.valArgs.size() != 3) {
            emitWarn("dropped malformed PhotoSearch request");
            return {};
        }
        auto from = asString(ground(0)), to = asString(ground(1));
        std::string key = showValue(ground(2));
        if (searchCursors_.count(key)) {
            emitWarn("PhotoSearch: duplicate session " + key + " dropped");
            return {};
        }
        Cursor c;
        if (from && to && parseDate(*from) && parseDate(*to)) {
            CrudQuery q;
            q.fromDate = *from;
            q.toDate = *to;
            c.snapshot = backend_->read("photos", q);
        } else {
            emitWarn("PhotoSearch: malformed date range, empty result");
        }
        searchCursors_.emplace(key, std::move(c));
        return {};
    }

    if (op == "SearchResult" && flickr_) {
        if (request.predArgs.size() != 1 || request.valArgs.size() != 1) {
            emitWarn("dropped malformed SearchResult request");
            return {};
        }
        const auto* k = std::get_if<PredicateRef>(&request.predArgs[0]);
        if (!k) {
            emitWarn("dropped SearchResult with unresolved reply predicate");
            return {};
        }
        Value session = ground(0);
        auto it = searchCursors_.find(showValue(session));
        if (it == searchCursors_.end()) {
            emitWarn("SearchResult: unknown session " + showValue(session) + " dropped");
            return {};
        }
        return {streamNext(*k, session, it->second)};
    }

    emitWarn("dropped request for unknown operation " + op);
    return {};
}

std::unique_ptr<NativeHandler> PhotoServiceVm::clone() const {
    auto copy = std::make_unique<PhotoServiceVm>(vmId_, flickr_, backend_);
    copy->cloneCursors_ = cloneCursors_;
    copy->searchCursors_ = searchCursors_;
    return copy;
}

std::string PhotoServiceVm::stateKey() const {
    std::ostringstream out;
    auto dump = [&](const char* tag, const std::map<std::string, Cursor>& cs) {
        out << tag << "{";
        for (const auto& [key, c] : cs) {
            out << key << "@" << c.pos << "[";
            for (const PhotoRecord& r : c.snapshot) out << r.id << ",";
            out << "];";
        }
        out << "}";
    };
    dump("clone", cloneCursors_);
    dump("search", searchCursors_);
    return out.str();
}

std::shared_ptr<CrudBackend> backendForSource(const std::string& source) {
    if (source.rfind("http://", 0) == 0) {
        std::string rest = source.substr(7);
        size_t colon = rest.rfind(':');
        if (colon == std::string::npos)
            throw CrudError(400, "connector source needs host:port: " + source);
        std::string host = rest.substr(0, colon);
        int port = std::stoi(rest.substr(colon + 1));
        return std::shared_ptr<CrudBackend>(httpBackend(host, port));
    }
    return loadFixture(source);
}

std::map<std::string, NativeFactory> defaultNativeFactories() {
    std::map<std::string, NativeFactory> fs;
    fs["flickr"] = [](const std::string& source, const std::string& vmId) {
        return std::make_unique<PhotoServiceVm>(vmId, true, backendForSource(source));
    };
    fs["picasa"] = [](const std::string& source, const std::string& vmId) {
        return std::make_unique<PhotoServiceVm>(vmId, false, backendForSource(source));
    };
    return fs;
}

}  // namespace creole
