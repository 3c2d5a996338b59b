#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "tunnel/bytes.hpp"

namespace tunnel {

using Header = std::pair<std::string, std::string>;
using HeaderList = std::vector<Header>;

bool iequals(std::string_view a, std::string_view b);

/// First value for `name` (case-insensitive).
std::optional<std::string> find_header(const HeaderList& headers, std::string_view name);
std::vector<std::string> find_all_headers(const HeaderList& headers, std::string_view name);
void remove_headers(HeaderList& headers, std::string_view name);

/// Plaintext HTTP/1.1-style message carried inside a tunnel packet.
struct InnerMessage {
    std::string start_line;
    HeaderList headers;
    Bytes body;

    std::optional<std::string> header(std::string_view name) const { return find_header(headers, name); }

    static InnerMessage request(std::string_view method, std::string_view target, HeaderList headers = {},
                                Bytes body = {});
    static InnerMessage response(int status, HeaderList headers = {}, Bytes body = {});

    bool is_response() const;
    /// Status code of a response start line; throws MalformedFraming otherwise.
    int status() const;

    friend bool operator==(const InnerMessage&, const InnerMessage&) = default;
};

std::string_view reason_phrase(int status);

/// start_line CRLF (name ": " value CRLF)* CRLF body.
/// Throws IllegalHeaderCharacter on CR, LF or NUL in any line, or a malformed header name.
Bytes encode_inner(const InnerMessage& msg);

/// Splits on the first CRLF CRLF only; the body is the raw suffix.
/// Throws MalformedFraming or MalformedHeader.
InnerMessage decode_inner(ByteView raw);

/// Union of both lists; a name present in `sealed` (case-insensitive)
/// replaces every value of that name in `outer`.
HeaderList merge_headers(const HeaderList& outer, const HeaderList& sealed);

}  // namespace tunnel
