#ifndef CREOLE_WIRE_HPP
#define CREOLE_WIRE_HPP

#include <json.hpp>

#include "creole/ast.hpp"

namespace creole {

// Ground-atom wire encoding, one JSON object per atom:
//   {"to": vmId, "pred": name,
//    "predArgs": [{"vm":..., "pred":...}, ...],
//    "valArgs":  [{"t":"int","v":N} | {"t":"str","v":S}
//                 | {"t":"name","v":"vm:seq"} | {"t":"pref","vm":...,"pred":...}, ...]}
// Frames are UTF-8, newline-delimited.

nlohmann::json encodeAtom(const Atom& a);  // includes "to" = head vm
Atom decodeAtom(const nlohmann::json& j);

nlohmann::json encodeValue(const Value& v);
Value decodeValue(const nlohmann::json& j);

}  // namespace creole

#endif
