#pragma once

#include <json.hpp>

#include "tunnel/bytes.hpp"
#include "tunnel/message.hpp"

namespace tunnel::detail {

using Json = nlohmann::json;

inline Json parse_json(ByteView body) {
    auto j = Json::parse(body.begin(), body.end(), nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw TunnelError(ErrorCode::BadRequest, "body is not a JSON object");
    return j;
}

inline Json parse_json(std::string_view text) {
    return parse_json(ByteView(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

inline Bytes dump_json(const Json& j) { return to_bytes(j.dump()); }

inline std::string string_field(const Json& j, const char* name) {
    auto it = j.find(name);
    if (it == j.end() || !it->is_string()) {
        throw TunnelError(ErrorCode::BadRequest, std::string("missing string field '") + name + "'");
    }
    return it->get<std::string>();
}

inline Bytes base64_field(const Json& j, const char* name) { return base64_decode(string_field(j, name)); }

inline HeaderList json_content_type() { return {{"Content-Type", "application/json"}}; }

}  // namespace tunnel::detail
