#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace flakysieve {

enum class TokenKind {
  kKeyword,
  kIdentifier,
  kNumberLiteral,
  kStringLiteral,  // "..." strings, """ text blocks """ and 'c' char literals
  kPunctuation,
  kWhitespace,
  kComment,
};

std::string_view to_string(TokenKind kind);

struct CodeToken {
  TokenKind kind;
  std::string text;
  std::size_t offset;  // byte offset into the lexed source

  friend bool operator==(const CodeToken&, const CodeToken&) = default;
};

// Lossless Java-style lexer: concatenating the token texts reproduces the
// input byte for byte. Throws LexError for empty input and for unterminated
// strings, character literals or block comments.
std::vector<CodeToken> lex(std::string_view source);

bool is_java_keyword(std::string_view word);

std::string concat(const std::vector<CodeToken>& tokens);

}  // namespace flakysieve
