#include "critex/text.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>

namespace critex::text {

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string_view trim(std::string_view s) {
  const auto ws = [](char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v'; };
  while (!s.empty() && ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && ws(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      out.emplace_back(s.substr(start));
      return out;
    }
    out.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::size_t utf8_length(std::string_view s, std::size_t pos) {
  const auto c = static_cast<unsigned char>(s[pos]);
  std::size_t len = 1;
  if (c >= 0xF0 && c < 0xF8) len = 4;
  else if (c >= 0xE0) len = 3;
  else if (c >= 0xC0) len = 2;
  if (len == 1 || pos + len > s.size()) return 1;
  for (std::size_t k = 1; k < len; ++k)
    if ((static_cast<unsigned char>(s[pos + k]) & 0xC0) != 0x80) return 1;
  return len;
}

std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const auto c = static_cast<unsigned char>(s[i]);
    const auto len = utf8_length(s, i);
    if (len == 1) {
      out.push_back(c < 0x80 ? c : 0xFFFD);
    } else {
      char32_t cp = len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
      for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
      out.push_back(cp);
    }
    i += len;
  }
  return out;
}

bool is_punctuation(char32_t cp) {
  if (cp < 0x80) {
    const auto c = static_cast<char>(cp);
    return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
  }
  switch (cp) {
    case U'±':
    case U'°':
    case U'·':
    case U'×':
    case U'–':
    case U'—':
    case U'‘':
    case U'’':
    case U'“':
    case U'”':
    case U'•':
    case U'…':
    case U'≤':
    case U'≥':
    case U'≠':
      return true;
    default:
      return false;
  }
}

namespace {

bool is_space(char32_t cp) { return cp == ' ' || cp == '\t' || cp == '\n' || cp == '\r' || cp == '\f' || cp == '\v' || cp == 0xA0; }

}  // namespace

std::string normalize_name(std::string_view s) {
  const auto lowered = to_lower(s);
  std::string_view view(lowered);

  // Collect UTF-8 units, tracking which are space or punctuation.
  struct Unit {
    std::string_view bytes;
    bool space;
    bool punct;
  };
  std::vector<Unit> units;
  for (std::size_t i = 0; i < view.size();) {
    const auto len = utf8_length(view, i);
    const auto cps = decode_utf8(view.substr(i, len));
    const char32_t cp = cps.empty() ? 0 : cps.front();
    units.push_back({view.substr(i, len), is_space(cp), is_punctuation(cp)});
    i += len;
  }
  std::size_t first = 0, last = units.size();
  while (first < last && (units[first].space || units[first].punct)) ++first;
  while (last > first && (units[last - 1].space || units[last - 1].punct)) --last;

  std::string out;
  bool pending_space = false;
  for (std::size_t i = first; i < last; ++i) {
    if (units[i].space) {
      pending_space = true;
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += units[i].bytes;
  }
  return out;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ec == std::errc{} ? ptr : buf);
}

double snap(double v) {
  if (v == 0 || !std::isfinite(v)) return v;
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace critex::text
