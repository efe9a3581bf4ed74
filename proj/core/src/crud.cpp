#include "creole/crud.hpp"

#include <algorithm>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "creole/matcher.hpp"

namespace creole {

namespace {

using nlohmann::json;

bool matchesQuery(const PhotoRecord& r, const CrudQuery& q) {
    for (const auto& [k, v] : q.equals) {
        if (k == "id") {
            if (r.id != v) return false;
        } else if (k == "dateTaken") {
            if (r.dateTaken != v) return false;
        } else {
            auto it = r.attrs.find(k);
            if (it == r.attrs.end() || it->second != v) return false;
        }
    }
    if (q.fromDate || q.toDate) {
        auto d = parseDate(r.dateTaken);
        if (!d) return false;
        if (q.fromDate) {
            auto lo = parseDate(*q.fromDate);
            if (!lo) throw CrudError(400, "bad from date: " + *q.fromDate);
            if (*d < *lo) return false;
        }
        if (q.toDate) {
            auto hi = parseDate(*q.toDate);
            if (!hi) throw CrudError(400, "bad to date: " + *q.toDate);
            if (*d > *hi) return false;
        }
    }
    return true;
}

json recordToJson(const PhotoRecord& r) {
    json attrs = json::object();
    for (const auto& [k, v] : r.attrs) attrs[k] = v;
    return json{{"id", r.id}, {"dateTaken", r.dateTaken}, {"attrs", attrs}};
}

PhotoRecord recordFromJson(const json& j) {
    PhotoRecord r;
    r.id = j.at("id").get<std::string>();
    r.dateTaken = j.value("dateTaken", "");
    if (j.contains("attrs"))
        for (auto& [k, v] : j.at("attrs").items()) r.attrs[k] = v.get<std::string>();
    return r;
}

}  // namespace

void MemoryBackend::create(const std::string& table, const PhotoRecord& rec) {
    if (rec.id.empty() || rec.id == "null")
        throw CrudError(400, "invalid record id '" + rec.id + "'");
    auto& t = tables_[table];
    if (t.count(rec.id)) throw CrudError(409, "duplicate id " + rec.id);
    t.emplace(rec.id, rec);
}

std::vector<PhotoRecord> MemoryBackend::read(const std::string& table, const CrudQuery& q) {
    std::vector<PhotoRecord> out;
    auto it = tables_.find(table);
    if (it == tables_.end()) return out;
    for (const auto& [id, rec] : it->second)  // map order: ascending by id
        if (matchesQuery(rec, q)) out.push_back(rec);
    return out;
}

void MemoryBackend::update(const std::string& table, const std::string& id,
                           const PhotoRecord& rec) {
    auto t = tables_.find(table);
    if (t == tables_.end() || !t->second.count(id))
        throw CrudError(404, "no record " + id + " in " + table);
    if (rec.id != id) throw CrudError(400, "id mismatch in update");
    t->second[id] = rec;
}

void MemoryBackend::remove(const std::string& table, const std::string& id) {
    auto t = tables_.find(table);
    if (t == tables_.end() || t->second.erase(id) == 0)
        throw CrudError(404, "no record " + id + " in " + table);
}

std::shared_ptr<MemoryBackend> loadFixtureText(const std::string& jsonText) {
    json j = json::parse(jsonText);
    auto b = std::make_shared<MemoryBackend>();
    for (const json& rec : j.at("photos")) b->create("photos", recordFromJson(rec));
    return b;
}

std::shared_ptr<MemoryBackend> loadFixture(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw CrudError(404, "cannot open fixture " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return loadFixtureText(buf.str());
}

// ---------------------------------------------------------------------------
// HTTP layer

struct FixtureServer::Impl {
    std::shared_ptr<CrudBackend> backend;
    std::mutex mu;  // serializes mutations; reads share it too for simplicity
    httplib::Server srv;
    std::thread thread;
    std::string host;

    void route() {
        auto guard = [this](auto&& fn, httplib::Response& res) {
            std::lock_guard<std::mutex> lock(mu);
            try {
                fn();
            } catch (const CrudError& e) {
                res.status = e.code;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            } catch (const std::exception& e) {
                res.status = 400;
                res.set_content(json{{"error", e.what()}}.dump(), "application/json");
            }
        };

        srv.Get(R"(/tables/([^/]+))", [=, this](const httplib::Request& req,
                                                httplib::Response& res) {
            guard([&] {
                CrudQuery q;
                for (const auto& [k, v] : req.params) {
                    if (k == "from") q.fromDate = v;
                    else if (k == "to") q.toDate = v;
                    else q.equals[k] = v;
                }
                json arr = json::array();
                for (const PhotoRecord& r : backend->read(req.matches[1], q))
                    arr.push_back(recordToJson(r));
                res.set_content(arr.dump(), "application/json");
            }, res);
        });

        srv.Get(R"(/tables/([^/]+)/([^/]+))", [=, this](const httplib::Request& req,
                                                        httplib::Response& res) {
            guard([&] {
                CrudQuery q;
                q.equals["id"] = req.matches[2];
                auto rows = backend->read(req.matches[1], q);
                if (rows.empty()) throw CrudError(404, "no record " + std::string(req.matches[2]));
                res.set_content(recordToJson(rows.front()).dump(), "application/json");
            }, res);
        });

        srv.Put(R"(/tables/([^/]+)/([^/]+))", [=, this](const httplib::Request& req,
                                                        httplib::Response& res) {
            guard([&] {
                PhotoRecord r = recordFromJson(json::parse(req.body));
                if (r.id != std::string(req.matches[2]))
                    throw CrudError(400, "id mismatch in create");
                backend->create(req.matches[1], r);
                res.status = 201;
                res.set_content(json{{"ok", true}}.dump(), "application/json");
            }, res);
        });

        srv.Post(R"(/tables/([^/]+)/([^/]+))", [=, this](const httplib::Request& req,
                                                         httplib::Response& res) {
            guard([&] {
                PhotoRecord r = recordFromJson(json::parse(req.body));
                backend->update(req.matches[1], req.matches[2], r);
                res.set_content(json{{"ok", true}}.dump(), "application/json");
            }, res);
        });

        srv.Delete(R"(/tables/([^/]+)/([^/]+))", [=, this](const httplib::Request& req,
                                                           httplib::Response& res) {
            guard([&] {
                backend->remove(req.matches[1], req.matches[2]);
                res.set_content(json{{"ok", true}}.dump(), "application/json");
            }, res);
        });
    }
};

FixtureServer::FixtureServer(std::shared_ptr<CrudBackend> backend, int port,
                             const std::string& host)
    : impl_(std::make_unique<Impl>()), port_(port) {
    impl_->backend = std::move(backend);
    impl_->host = host;
    impl_->route();
}

FixtureServer::~FixtureServer() { stop(); }

void FixtureServer::start() {
    if (!impl_->srv.bind_to_port(impl_->host, port_))
        throw CrudError(400, "cannot bind port " + std::to_string(port_));
    impl_->thread = std::thread([this] { impl_->srv.listen_after_bind(); });
    impl_->srv.wait_until_ready();
}

void FixtureServer::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->srv.stop();
        impl_->thread.join();
    }
}

namespace {

class HttpBackend : public CrudBackend {
  public:
    HttpBackend(std::string host, int port) : host_(std::move(host)), port_(port) {}

    void create(const std::string& table, const PhotoRecord& rec) override {
        httplib::Client cli(host_, port_);
        auto res = cli.Put("/tables/" + table + "/" + rec.id,
                           recordToJson(rec).dump(), "application/json");
        check(res, 201);
    }

    std::vector<PhotoRecord> read(const std::string& table, const CrudQuery& q) override {
        httplib::Client cli(host_, port_);
        httplib::Params params;
        for (const auto& [k, v] : q.equals) params.emplace(k, v);
        if (q.fromDate) params.emplace("from", *q.fromDate);
        if (q.toDate) params.emplace("to", *q.toDate);
        auto res = cli.Get(("/tables/" + table).c_str(), params, httplib::Headers{});
        check(res, 200);
        std::vector<PhotoRecord> out;
        for (const json& j : json::parse(res->body)) out.push_back(recordFromJson(j));
        return out;
    }

    void update(const std::string& table, const std::string& id,
                const PhotoRecord& rec) override {
        httplib::Client cli(host_, port_);
        auto res = cli.Post("/tables/" + table + "/" + id,
                            recordToJson(rec).dump(), "application/json");
        check(res, 200);
    }

    void remove(const std::string& table, const std::string& id) override {
        httplib::Client cli(host_, port_);
        auto res = cli.Delete("/tables/" + table + "/" + id);
        check(res, 200);
    }

  private:
    static void check(const httplib::Result& res, int expected) {
        if (!res) throw CrudError(400, "http transport failure");
        if (res->status != expected) {
            std::string msg = res->body;
            try {
                msg = json::parse(res->body).value("error", msg);
            } catch (...) {}
            throw CrudError(res->status, msg);
        }
    }

    std::string host_;
    int port_;
};

}  // namespace

std::unique_ptr<CrudBackend> httpBackend(const std::string& host, int port) {
    return std::make_unique<HttpBackend>(host, port);
}

}  // namespace creole
