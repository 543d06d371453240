#include "xtc/text.hpp"

#include <cctype>

namespace xtc {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> tokenize(std::string_view s) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : s) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isalnum(uc) || uc >= 0x80) {
      cur.push_back(static_cast<char>(std::tolower(uc)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

std::set<std::string> token_set(std::string_view s) {
  auto t = tokenize(s);
  return {t.begin(), t.end()};
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::optional<nlohmann::json> extract_trailing_json(std::string_view text) {
  std::string body = trim(text);
  // strip a closing markdown fence, if any
  while (body.size() >= 3 && body.compare(body.size() - 3, 3, "```") == 0) {
    body = trim(std::string_view(body).substr(0, body.size() - 3));
  }
  if (body.empty()) return std::nullopt;
  const char close = body.back();
  if (close != '}' && close != ']') return std::nullopt;
  const char open = close == '}' ? '{' : '[';
  // the earliest opener whose suffix parses is the outermost value
  for (std::size_t pos = body.find(open); pos != std::string::npos; pos = body.find(open, pos + 1)) {
    auto parsed = nlohmann::json::parse(body.begin() + static_cast<std::ptrdiff_t>(pos), body.end(),
                                        nullptr, /*allow_exceptions=*/false);
    if (!parsed.is_discarded()) return parsed;
  }
  return std::nullopt;
}

}  // namespace xtc
