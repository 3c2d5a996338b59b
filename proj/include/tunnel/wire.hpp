#pragma once

#include <string>
#include <string_view>

#include "tunnel/crypto.hpp"

namespace tunnel {

/// GET /tunnel/key body: {"q", "signature", "signing_key"}, base64 fields.
std::string server_param_to_json(const crypto::SignedServerParam& param);
/// The fingerprint is recomputed from the signing key. Throws BadRequest.
crypto::SignedServerParam server_param_from_json(std::string_view json);

}  // namespace tunnel
