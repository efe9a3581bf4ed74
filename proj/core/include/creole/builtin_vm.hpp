#ifndef CREOLE_BUILTIN_VM_HPP
#define CREOLE_BUILTIN_VM_HPP

#include "creole/crud.hpp"
#include "creole/dist.hpp"

namespace creole {

// Photo-store connector VM. Two flavours with deliberately different
// attribute schemas:
//   flickr: attrs [title, tags];  relations CountsIn/1/3, PhotoSearch/0/3,
//           SearchResult/1/1, FPhotoCloning/1/1
//   picasa: attrs [title, album]; relation PPhotoCloning/1/1
// Cloning/search replies stream one record per request as
// K(sessionKey, id, date, attrs...) in ascending id order, then a single
// idempotent sentinel K(sessionKey, "null", "", ...).
class PhotoServiceVm : public NativeHandler {
  public:
    PhotoServiceVm(std::string vmId, bool flickr, std::shared_ptr<CrudBackend> backend);

    std::vector<PredicateDecl> decls() const override;
    std::vector<Atom> handle(const Atom& request) override;
    std::unique_ptr<NativeHandler> clone() const override;
    std::string stateKey() const override;

    const std::vector<std::string>& attrOrder() const { return attrs_; }
    int replyValArity() const { return 3 + static_cast<int>(attrs_.size()); }
    CrudBackend& backend() { return *backend_; }

  private:
    struct Cursor {
        std::vector<PhotoRecord> snapshot;
        size_t pos = 0;
    };

    Atom reply(const PredicateRef& k, std::vector<Value> vals) const;
    Atom streamNext(const PredicateRef& k, const Value& sessionKey, Cursor& c) const;
    void emitWarn(const std::string& msg) const;

    std::string vmId_;
    bool flickr_;
    std::shared_ptr<CrudBackend> backend_;
    std::vector<std::string> attrs_;
    std::map<std::string, Cursor> cloneCursors_;   // keyed by canonical session value
    std::map<std::string, Cursor> searchCursors_;
};

// Factories for the `builtin NAME flickr|picasa "source"` process form.
// The source is a fixture JSON path, or "http://host:port" to run the
// connector against a CRUD HTTP service.
std::map<std::string, NativeFactory> defaultNativeFactories();

std::shared_ptr<CrudBackend> backendForSource(const std::string& source);

}  // namespace creole

#endif
