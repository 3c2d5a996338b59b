#include "tunnel/forms.hpp"

#include <algorithm>

#include "tunnel/errors.hpp"

namespace tunnel {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; });
    return out;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto at = s.find(sep, start);
        out.push_back(s.substr(start, at == std::string_view::npos ? std::string_view::npos : at - start));
        if (at == std::string_view::npos) break;
        start = at + 1;
    }
    return out;
}

// Splits on ';' outside of double quotes.
std::vector<std::string_view> split_params(std::string_view s) {
    std::vector<std::string_view> out;
    bool quoted = false;
    std::size_t start = 0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        if (quoted && c == '\\') {
            ++i;
        } else if (c == '"') {
            quoted = !quoted;
        } else if (c == ';' && !quoted) {
            out.push_back(s.substr(start, i - start));
            start = i + 1;
        }
    }
    out.push_back(s.substr(std::min(start, s.size())));
    return out;
}

std::string unquote(std::string_view v) {
    v = trim(v);
    if (v.size() < 2 || v.front() != '"' || v.back() != '"') return std::string(v);
    std::string out;
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        if (v[i] == '\\' && i + 2 < v.size()) ++i;
        out.push_back(v[i]);
    }
    return out;
}

std::string quote(std::string_view v) {
    std::string out = "\"";
    for (char c : v) {
        if (c == '"' || c == '\\') out.push_back('\\');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

}  // namespace

// --- cookies -----------------------------------------------------------------

std::optional<std::string> CookieJar::find(std::string_view name) const {
    for (const auto& c : entries_) {
        if (c.name == name) return c.value;
    }
    return std::nullopt;
}

void CookieJar::add(std::string name, std::string value) {
    entries_.push_back(Cookie{std::move(name), std::move(value), {}});
}

void CookieJar::append(const CookieJar& other) {
    entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::string CookieJar::serialize() const {
    std::string out;
    for (const auto& c : entries_) {
        if (!out.empty()) out += "; ";
        out += c.name;
        out += '=';
        out += c.value;
    }
    return out;
}

HeaderList CookieJar::pairs() const {
    HeaderList out;
    for (const auto& c : entries_) out.emplace_back(c.name, c.value);
    return out;
}

CookieJar parse_cookie_header(std::string_view value) {
    CookieJar jar;
    for (auto piece : split(value, ';')) {
        auto eq = piece.find('=');
        if (eq == std::string_view::npos) continue;
        auto name = trim(piece.substr(0, eq));
        if (name.empty()) continue;
        jar.add(std::string(name), std::string(trim(piece.substr(eq + 1))));
    }
    return jar;
}

std::optional<Cookie> parse_set_cookie(std::string_view value) {
    auto semi = value.find(';');
    auto pair = value.substr(0, semi);
    auto eq = pair.find('=');
    if (eq == std::string_view::npos) return std::nullopt;
    Cookie c;
    c.name = std::string(trim(pair.substr(0, eq)));
    c.value = std::string(trim(pair.substr(eq + 1)));
    if (c.name.empty()) return std::nullopt;
    if (semi == std::string_view::npos) return c;
    for (auto av : split(value.substr(semi + 1), ';')) {
        auto aeq = av.find('=');
        auto aname = trim(av.substr(0, aeq));
        auto avalue = aeq == std::string_view::npos ? std::string_view{} : trim(av.substr(aeq + 1));
        if (aname.empty()) continue;
        c.attributes.emplace_back(std::string(aname), std::string(avalue));
    }
    return c;
}

// --- forms -------------------------------------------------------------------

const FormPart* MultipartForm::find(std::string_view name) const {
    for (const auto& p : parts) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

std::optional<std::string> content_type_param(std::string_view content_type, std::string_view param) {
    auto params = split_params(content_type);
    for (std::size_t i = 1; i < params.size(); ++i) {
        auto eq = params[i].find('=');
        if (eq == std::string_view::npos) continue;
        if (iequals(trim(params[i].substr(0, eq)), param)) return unquote(params[i].substr(eq + 1));
    }
    return std::nullopt;
}

std::string media_type(std::string_view content_type) {
    return to_lower(trim(content_type.substr(0, content_type.find(';'))));
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (c == '%' && i + 2 < text.size()) {
            int hi = hex_digit(text[i + 1]);
            int lo = hex_digit(text[i + 2]);
            if (hi >= 0 && lo >= 0) {
                out.push_back(static_cast<char>((hi << 4) | lo));
                i += 2;
                continue;
            }
        }
        out.push_back(plus_as_space && c == '+' ? ' ' : c);
    }
    return out;
}

std::string percent_encode(std::string_view text) {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : text) {
        if ((c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '-' || c == '.' ||
            c == '_' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kDigits[c >> 4]);
            out.push_back(kDigits[c & 0x0f]);
        }
    }
    return out;
}

std::vector<std::pair<std::string, std::string>> parse_urlencoded(std::string_view text) {
    std::vector<std::pair<std::string, std::string>> out;
    for (auto piece : split(text, '&')) {
        if (piece.empty()) continue;
        auto eq = piece.find('=');
        auto name = piece.substr(0, eq);
        auto value = eq == std::string_view::npos ? std::string_view{} : piece.substr(eq + 1);
        out.emplace_back(percent_decode(name, true), percent_decode(value, true));
    }
    return out;
}

std::string serialize_urlencoded(const std::vector<std::pair<std::string, std::string>>& fields) {
    std::string out;
    for (const auto& [name, value] : fields) {
        if (!out.empty()) out += '&';
        out += percent_encode(name);
        out += '=';
        out += percent_encode(value);
    }
    return out;
}

namespace {

void apply_part_header(FormPart& part, std::string_view line) {
    auto colon = line.find(':');
    if (colon == std::string_view::npos) return;
    auto name = trim(line.substr(0, colon));
    auto value = trim(line.substr(colon + 1));
    if (iequals(name, "Content-Disposition")) {
        if (auto n = content_type_param(value, "name")) part.name = *n;
        if (auto f = content_type_param(value, "filename")) part.filename = *f;
    } else if (iequals(name, "Content-Type")) {
        part.content_type = std::string(value);
    }
}

}  // namespace

MultipartForm parse_multipart(ByteView body, std::string_view boundary) {
    if (boundary.empty()) throw TunnelError(ErrorCode::MissingBoundary);
    std::string_view text(reinterpret_cast<const char*>(body.data()), body.size());
    const std::string delimiter = "--" + std::string(boundary);
    const std::string inner_delimiter = "\r\n" + delimiter;

    MultipartForm form;
    form.boundary = std::string(boundary);

    // The first delimiter may open the body or follow a preamble.
    std::size_t pos;
    if (text.starts_with(delimiter)) {
        pos = delimiter.size();
    } else {
        auto at = text.find(inner_delimiter);
        if (at == std::string_view::npos) throw TunnelError(ErrorCode::UnterminatedPart, "no opening boundary");
        pos = at + inner_delimiter.size();
    }

    for (;;) {
        if (text.substr(pos, 2) == "--") return form;
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
        if (text.substr(pos, 2) != "\r\n") throw TunnelError(ErrorCode::UnterminatedPart, "boundary line");
        pos += 2;

        FormPart part;
        if (text.substr(pos, 2) == "\r\n") {
            pos += 2;
        } else {
            auto end = text.find("\r\n\r\n", pos);
            if (end == std::string_view::npos) throw TunnelError(ErrorCode::UnterminatedPart, "part headers");
            for (auto line : split(text.substr(pos, end - pos), '\n')) {
                if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
                apply_part_header(part, line);
            }
            pos = end + 4;
        }

        auto next = text.find(inner_delimiter, pos);
        if (next == std::string_view::npos) throw TunnelError(ErrorCode::UnterminatedPart, "missing boundary");
        part.body.assign(body.begin() + static_cast<std::ptrdiff_t>(pos),
                         body.begin() + static_cast<std::ptrdiff_t>(next));
        form.parts.push_back(std::move(part));
        pos = next + inner_delimiter.size();
    }
}

MultipartForm parse_form(ByteView body, std::string_view content_type) {
    auto type = media_type(content_type);
    if (type == "multipart/form-data") {
        auto boundary = content_type_param(content_type, "boundary");
        if (!boundary || boundary->empty()) throw TunnelError(ErrorCode::MissingBoundary);
        return parse_multipart(body, *boundary);
    }
    MultipartForm form;
    if (type == "application/x-www-form-urlencoded") {
        std::string_view text(reinterpret_cast<const char*>(body.data()), body.size());
        for (auto& [name, value] : parse_urlencoded(text)) {
            form.parts.push_back(FormPart{std::move(name), std::nullopt, std::nullopt, to_bytes(value)});
        }
    }
    return form;
}

Bytes serialize_multipart(const MultipartForm& form) {
    std::string out;
    for (const auto& part : form.parts) {
        out += "--" + form.boundary + "\r\n";
        out += "Content-Disposition: form-data; name=" + quote(part.name);
        if (part.filename) out += "; filename=" + quote(*part.filename);
        out += "\r\n";
        if (part.content_type) out += "Content-Type: " + *part.content_type + "\r\n";
        out += "\r\n";
        out.append(part.body.begin(), part.body.end());
        out += "\r\n";
    }
    out += "--" + form.boundary + "--\r\n";
    return to_bytes(out);
}

}  // namespace tunnel
