#ifndef CREOLE_CRUD_HPP
#define CREOLE_CRUD_HPP

#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace creole {

struct PhotoRecord {
    std::string id;         // "null" is reserved for the stream sentinel
    std::string dateTaken;  // DD/MM/YYYY
    std::map<std::string, std::string> attrs;

    bool operator==(const PhotoRecord& o) const = default;
};

// Equality filters on id / dateTaken / attrs plus an optional inclusive
// date range on dateTaken. This covers every read the connectors issue.
struct CrudQuery {
    std::map<std::string, std::string> equals;
    std::optional<std::string> fromDate;
    std::optional<std::string> toDate;
};

struct CrudError : std::runtime_error {
    int code;  // mirrors the HTTP status (400/404/409)
    CrudError(int c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

class CrudBackend {
  public:
    virtual ~CrudBackend() = default;
    virtual void create(const std::string& table, const PhotoRecord& rec) = 0;
    // Results are sorted ascending by id.
    virtual std::vector<PhotoRecord> read(const std::string& table, const CrudQuery& q) = 0;
    virtual void update(const std::string& table, const std::string& id,
                        const PhotoRecord& rec) = 0;
    virtual void remove(const std::string& table, const std::string& id) = 0;
};

class MemoryBackend : public CrudBackend {
  public:
    void create(const std::string& table, const PhotoRecord& rec) override;
    std::vector<PhotoRecord> read(const std::string& table, const CrudQuery& q) override;
    void update(const std::string& table, const std::string& id,
                const PhotoRecord& rec) override;
    void remove(const std::string& table, const std::string& id) override;

  private:
    std::map<std::string, std::map<std::string, PhotoRecord>> tables_;
};

// Fixture schema: {"photos": [{"id": "...", "dateTaken": "DD/MM/YYYY",
// "attrs": {"k": "v", ...}}, ...]}; see docs/fixtures.md.
std::shared_ptr<MemoryBackend> loadFixture(const std::string& path);
std::shared_ptr<MemoryBackend> loadFixtureText(const std::string& jsonText);

// HTTP layer. Verb mapping is fixed: create PUT, read GET, update POST,
// delete DELETE, on /tables/{t} and /tables/{t}/{id}.
class FixtureServer {
  public:
    FixtureServer(std::shared_ptr<CrudBackend> backend, int port,
                  const std::string& host = "127.0.0.1");
    ~FixtureServer();
    void start();  // returns once the server is accepting connections
    void stop();
    int port() const { return port_; }

  private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    int port_;
};

std::unique_ptr<CrudBackend> httpBackend(const std::string& host, int port);

}  // namespace creole

#endif
