#include "tunnel/wire.hpp"

#include "json_util.hpp"

namespace tunnel {

using detail::Json;

std::string server_param_to_json(const crypto::SignedServerParam& param) {
    Json j;
    j["q"] = base64_encode(param.q_point);
    j["signature"] = base64_encode(param.signature);
    j["signing_key"] = base64_encode(param.signing_public_key);
    return j.dump();
}

crypto::SignedServerParam server_param_from_json(std::string_view json) {
    auto j = detail::parse_json(json);
    crypto::SignedServerParam p;
    p.q_point = to_fixed<crypto::kPointSize>(detail::base64_field(j, "q"));
    p.signature = detail::base64_field(j, "signature");
    p.signing_public_key = detail::base64_field(j, "signing_key");
    p.signer_fingerprint = crypto::fingerprint_of(p.signing_public_key);
    return p;
}

}  // namespace tunnel
