#include "tunnel/message.hpp"

#include <algorithm>
#include <charconv>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

constexpr std::string_view kCrlf = "\r\n";
constexpr std::string_view kSeparator = "\r\n\r\n";

char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

bool is_tchar(char c) {
    if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z')) return true;
    return std::string_view("!#$%&'*+-.^_`|~").find(c) != std::string_view::npos;
}

bool has_line_break(std::string_view s) {
    return s.find_first_of(std::string_view("\r\n\0", 3)) != std::string_view::npos;
}

std::string_view trim_ows(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

}  // namespace

bool iequals(std::string_view a, std::string_view b) {
    return a.size() == b.size() &&
           std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) { return lower(x) == lower(y); });
}

std::optional<std::string> find_header(const HeaderList& headers, std::string_view name) {
    for (const auto& [n, v] : headers) {
        if (iequals(n, name)) return v;
    }
    return std::nullopt;
}

std::vector<std::string> find_all_headers(const HeaderList& headers, std::string_view name) {
    std::vector<std::string> out;
    for (const auto& [n, v] : headers) {
        if (iequals(n, name)) out.push_back(v);
    }
    return out;
}

void remove_headers(HeaderList& headers, std::string_view name) {
    std::erase_if(headers, [&](const Header& h) { return iequals(h.first, name); });
}

InnerMessage InnerMessage::request(std::string_view method, std::string_view target, HeaderList headers,
                                   Bytes body) {
    InnerMessage m;
    m.start_line = std::string(method) + " " + std::string(target) + " HTTP/1.1";
    m.headers = std::move(headers);
    m.body = std::move(body);
    return m;
}

InnerMessage InnerMessage::response(int status, HeaderList headers, Bytes body) {
    InnerMessage m;
    m.start_line = "HTTP/1.1 " + std::to_string(status) + " " + std::string(reason_phrase(status));
    m.headers = std::move(headers);
    m.body = std::move(body);
    return m;
}

bool InnerMessage::is_response() const { return start_line.starts_with("HTTP/"); }

int InnerMessage::status() const {
    if (!is_response()) throw TunnelError(ErrorCode::MalformedFraming, "not a response");
    auto sp = start_line.find(' ');
    if (sp == std::string::npos) throw TunnelError(ErrorCode::MalformedFraming, "missing status");
    int code = 0;
    auto first = start_line.data() + sp + 1;
    auto last = start_line.data() + start_line.size();
    auto [ptr, ec] = std::from_chars(first, last, code);
    if (ec != std::errc{} || ptr == first) throw TunnelError(ErrorCode::MalformedFraming, "bad status");
    return code;
}

std::string_view reason_phrase(int status) {
    switch (status) {
        case 200: return "OK";
        case 201: return "Created";
        case 204: return "No Content";
        case 400: return "Bad Request";
        case 401: return "Unauthorized";
        case 403: return "Forbidden";
        case 404: return "Not Found";
        case 405: return "Method Not Allowed";
        case 409: return "Conflict";
        case 500: return "Internal Server Error";
        case 502: return "Bad Gateway";
        default: return "Unknown";
    }
}

Bytes encode_inner(const InnerMessage& msg) {
    if (msg.start_line.empty() || has_line_break(msg.start_line)) {
        throw TunnelError(ErrorCode::IllegalHeaderCharacter, "start line");
    }
    std::string head = msg.start_line;
    head += kCrlf;
    for (const auto& [name, value] : msg.headers) {
        if (name.empty() || !std::all_of(name.begin(), name.end(), is_tchar)) {
            throw TunnelError(ErrorCode::IllegalHeaderCharacter, "header name '" + name + "'");
        }
        if (has_line_break(value)) {
            throw TunnelError(ErrorCode::IllegalHeaderCharacter, "value of header '" + name + "'");
        }
        head += name;
        head += ": ";
        head += value;
        head += kCrlf;
    }
    head += kCrlf;
    Bytes out(head.begin(), head.end());
    out.insert(out.end(), msg.body.begin(), msg.body.end());
    return out;
}

InnerMessage decode_inner(ByteView raw) {
    std::string_view text(reinterpret_cast<const char*>(raw.data()), raw.size());
    auto split = text.find(kSeparator);
    std::size_t head_len = split;
    std::size_t body_at = split + kSeparator.size();
    if (split == std::string_view::npos) {
        throw TunnelError(ErrorCode::MalformedFraming, "no CRLF CRLF separator");
    }
    auto head = text.substr(0, head_len);

    InnerMessage msg;
    std::size_t pos = 0;
    bool first = true;
    while (pos <= head.size()) {
        auto eol = head.find(kCrlf, pos);
        auto line = head.substr(pos, eol == std::string_view::npos ? std::string_view::npos : eol - pos);
        if (first) {
            if (line.empty() || has_line_break(line)) {
                throw TunnelError(ErrorCode::MalformedFraming, "bad start line");
            }
            msg.start_line = std::string(line);
            first = false;
        } else {
            auto colon = line.find(':');
            if (colon == std::string_view::npos) throw TunnelError(ErrorCode::MalformedHeader, "line without colon");
            auto name = line.substr(0, colon);
            if (name.empty() || !std::all_of(name.begin(), name.end(), is_tchar)) {
                throw TunnelError(ErrorCode::MalformedHeader, "invalid header name");
            }
            auto value = trim_ows(line.substr(colon + 1));
            if (has_line_break(value)) throw TunnelError(ErrorCode::MalformedHeader, "bare line break");
            msg.headers.emplace_back(std::string(name), std::string(value));
        }
        if (eol == std::string_view::npos) break;
        pos = eol + kCrlf.size();
    }
    msg.body.assign(raw.begin() + static_cast<std::ptrdiff_t>(body_at), raw.end());
    return msg;
}

HeaderList merge_headers(const HeaderList& outer, const HeaderList& sealed) {
    HeaderList out;
    out.reserve(outer.size() + sealed.size());
    for (const auto& h : outer) {
        bool overridden = std::any_of(sealed.begin(), sealed.end(),
                                      [&](const Header& s) { return iequals(s.first, h.first); });
        if (!overridden) out.push_back(h);
    }
    out.insert(out.end(), sealed.begin(), sealed.end());
    return out;
}

}  // namespace tunnel
