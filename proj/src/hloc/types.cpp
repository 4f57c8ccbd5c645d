#include "hloc/types.hpp"

#include <algorithm>
#include <cctype>

#include "hloc/error.hpp"

namespace hloc {
namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Language language) {
  return language == Language::Python ? "python" : "java";
}

std::string_view to_string(Task task) { return task == Task::CG ? "CG" : "APR"; }

std::string_view to_string(TokenType type) {
  switch (type) {
    case TokenType::Keyword: return "Keyword";
    case TokenType::Delimiter: return "Delimiter";
    case TokenType::Operator: return "Operator";
    case TokenType::Constant: return "Constant";
    case TokenType::Identifier: return "Identifier";
    case TokenType::TypeIdentifier: return "TypeIdentifier";
    case TokenType::Space: return "Space";
    case TokenType::Eos: return "EOS";
  }
  return "?";
}

Language parse_language(std::string_view name) {
  const std::string n = lower(name);
  if (n == "python") return Language::Python;
  if (n == "java") return Language::Java;
  throw Error(ErrorKind::Schema, "unknown language '" + std::string(name) + "'");
}

Task parse_task(std::string_view name) {
  const std::string n = lower(name);
  if (n == "cg") return Task::CG;
  if (n == "apr") return Task::APR;
  throw Error(ErrorKind::Schema, "unknown task '" + std::string(name) + "'");
}

TokenType parse_token_type(std::string_view name) {
  const std::string n = lower(name);
  for (TokenType t : kAllTokenTypes) {
    if (lower(to_string(t)) == n) return t;
  }
  throw Error(ErrorKind::Schema, "unknown token type '" + std::string(name) + "'");
}

}  // namespace hloc
