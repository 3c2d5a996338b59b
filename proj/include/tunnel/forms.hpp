#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tunnel/bytes.hpp"
#include "tunnel/message.hpp"

namespace tunnel {

// --- cookies (RFC 6265) ------------------------------------------------------

struct Cookie {
    std::string name;
    std::string value;
    HeaderList attributes;  // Set-Cookie attributes in order, e.g. ("Path", "/"), ("HttpOnly", "")

    friend bool operator==(const Cookie&, const Cookie&) = default;
};

class CookieJar {
public:
    CookieJar() = default;
    explicit CookieJar(std::vector<Cookie> entries) : entries_(std::move(entries)) {}

    const std::vector<Cookie>& entries() const noexcept { return entries_; }
    bool empty() const noexcept { return entries_.empty(); }
    std::size_t size() const noexcept { return entries_.size(); }

    /// First entry with this name, matching the order the user agent sent them.
    std::optional<std::string> find(std::string_view name) const;
    void add(std::string name, std::string value);
    void append(const CookieJar& other);

    /// Cookie header serialization: "a=1; b=2".
    std::string serialize() const;
    HeaderList pairs() const;

    friend bool operator==(const CookieJar&, const CookieJar&) = default;

private:
    std::vector<Cookie> entries_;
};

/// Parses a Cookie request header. Pairs without '=' or with an empty name are dropped.
CookieJar parse_cookie_header(std::string_view value);
/// Parses one Set-Cookie header value. Returns nullopt when the RFC says to ignore it.
std::optional<Cookie> parse_set_cookie(std::string_view value);

// --- forms (RFC 2388 multipart/form-data, urlencoded) ------------------------

struct FormPart {
    std::string name;
    std::optional<std::string> filename;
    std::optional<std::string> content_type;
    Bytes body;

    friend bool operator==(const FormPart&, const FormPart&) = default;
};

struct MultipartForm {
    std::string boundary;  // empty for urlencoded bodies
    std::vector<FormPart> parts;

    const FormPart* find(std::string_view name) const;
};

/// Content-Type parameter lookup, e.g. content_type_param("multipart/form-data; boundary=x", "boundary").
std::optional<std::string> content_type_param(std::string_view content_type, std::string_view param);
/// Media type without parameters, lower-cased.
std::string media_type(std::string_view content_type);

/// Dispatches on the media type: multipart/form-data or application/x-www-form-urlencoded.
/// Throws MissingBoundary or UnterminatedPart; other media types yield an empty form.
MultipartForm parse_form(ByteView body, std::string_view content_type);
MultipartForm parse_multipart(ByteView body, std::string_view boundary);
std::vector<std::pair<std::string, std::string>> parse_urlencoded(std::string_view text);

std::string percent_decode(std::string_view text, bool plus_as_space);
std::string percent_encode(std::string_view text);

Bytes serialize_multipart(const MultipartForm& form);
std::string serialize_urlencoded(const std::vector<std::pair<std::string, std::string>>& fields);

}  // namespace tunnel
