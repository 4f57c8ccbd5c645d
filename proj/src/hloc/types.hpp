#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

namespace hloc {

enum class Language { Python, Java };
enum class Task { CG, APR };

/// Half-open byte range [begin, end).
struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  bool contains(std::size_t offset) const { return offset >= begin && offset < end; }
  bool contains(const ByteSpan& other) const {
    return other.begin >= begin && other.end <= end;
  }
  friend bool operator==(const ByteSpan&, const ByteSpan&) = default;
};

/// Token categories. The enumerator order is the one-hot feature order.
enum class TokenType : std::uint8_t {
  Keyword,
  Delimiter,
  Operator,
  Constant,
  Identifier,
  TypeIdentifier,
  Space,
  Eos,
};

inline constexpr std::size_t kTokenTypeCount = 8;

inline constexpr std::array<TokenType, kTokenTypeCount> kAllTokenTypes = {
    TokenType::Keyword,    TokenType::Delimiter,      TokenType::Operator,
    TokenType::Constant,   TokenType::Identifier,     TokenType::TypeIdentifier,
    TokenType::Space,      TokenType::Eos,
};

std::string_view to_string(Language language);
std::string_view to_string(Task task);
std::string_view to_string(TokenType type);

// Case-insensitive; throw Error(Schema) on unknown names.
Language parse_language(std::string_view name);
Task parse_task(std::string_view name);
TokenType parse_token_type(std::string_view name);

}  // namespace hloc
