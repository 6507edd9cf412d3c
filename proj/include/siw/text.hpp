#pragma once

#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace siw {

namespace detail {

struct LineTokens {
  std::vector<std::string> tokens;
  std::vector<std::size_t> columns;
};

inline LineTokens split_tokens(std::string_view line) {
  LineTokens t;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    t.tokens.emplace_back(line.substr(start, i - start));
    t.columns.push_back(start + 1);
  }
  return t;
}

inline std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

}  // namespace detail

}  // namespace siw
