#include "flakysieve/lexer.hpp"

#include <algorithm>
#include <array>

#include "flakysieve/error.hpp"

namespace flakysieve {
namespace {

// Java reserved words, including primitive type names and the literal words.
constexpr std::array<std::string_view, 53> kKeywords = {
    "abstract", "assert",     "boolean",  "break",     "byte",      "case",
    "catch",    "char",       "class",    "const",     "continue",  "default",
    "do",       "double",     "else",     "enum",      "extends",   "false",
    "final",    "finally",    "float",    "for",       "goto",      "if",
    "implements", "import",   "instanceof", "int",     "interface", "long",
    "native",   "new",        "null",     "package",   "private",   "protected",
    "public",   "return",     "short",    "static",    "strictfp",  "super",
    "switch",   "synchronized", "this",   "throw",     "throws",    "transient",
    "true",     "try",        "void",     "volatile",  "while",
};

// Longest first, so maximal munch is a first-match scan.
constexpr std::array<std::string_view, 37> kOperators = {
    ">>>=", "<<=", ">>=", ">>>", "...", "->", "::", "++", "--", "&&",
    "||",   "==",  "!=",  "<=",  ">=",  "+=", "-=", "*=", "/=", "&=",
    "|=",   "^=",  "%=",  "<<",  ">>",  "(",  ")",  "{",  "}",  "[",
    "]",    ";",   ",",   ".",   "=",   "<",  ">",
};

bool is_ident_start(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_' || c == '$' || c >= 0x80;
}
bool is_ident_part(unsigned char c) { return is_ident_start(c) || (c >= '0' && c <= '9'); }
bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }
bool is_hex_digit(unsigned char c) {
  return is_digit(c) || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}
bool is_space(unsigned char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<CodeToken> run() {
    std::vector<CodeToken> out;
    while (pos_ < src_.size()) {
      const std::size_t start = pos_;
      const TokenKind kind = next_kind();
      out.push_back({kind, std::string(src_.substr(start, pos_ - start)), start});
    }
    return out;
  }

 private:
  unsigned char at(std::size_t i) const {
    return i < src_.size() ? static_cast<unsigned char>(src_[i]) : '\0';
  }

  TokenKind next_kind() {
    const unsigned char c = at(pos_);
    if (is_space(c)) {
      while (pos_ < src_.size() && is_space(at(pos_))) ++pos_;
      return TokenKind::kWhitespace;
    }
    if (c == '/' && at(pos_ + 1) == '/') {
      while (pos_ < src_.size() && at(pos_) != '\n') ++pos_;
      return TokenKind::kComment;
    }
    if (c == '/' && at(pos_ + 1) == '*') {
      const auto close = src_.find("*/", pos_ + 2);
      if (close == std::string_view::npos) {
        throw LexError("unterminated block comment at offset " + std::to_string(pos_));
      }
      pos_ = close + 2;
      return TokenKind::kComment;
    }
    if (c == '"') {
      scan_string();
      return TokenKind::kStringLiteral;
    }
    if (c == '\'') {
      scan_quoted('\'', "character literal");
      return TokenKind::kStringLiteral;
    }
    if (is_digit(c) || (c == '.' && is_digit(at(pos_ + 1)))) {
      scan_number();
      return TokenKind::kNumberLiteral;
    }
    if (is_ident_start(c)) {
      const std::size_t start = pos_;
      while (pos_ < src_.size() && is_ident_part(at(pos_))) ++pos_;
      return is_java_keyword(src_.substr(start, pos_ - start)) ? TokenKind::kKeyword
                                                               : TokenKind::kIdentifier;
    }
    for (auto op : kOperators) {
      if (src_.substr(pos_, op.size()) == op) {
        pos_ += op.size();
        return TokenKind::kPunctuation;
      }
    }
    ++pos_;
    return TokenKind::kPunctuation;
  }

  void scan_string() {
    if (src_.substr(pos_, 3) == "\"\"\"") {
      const std::size_t start = pos_;
      pos_ += 3;
      while (pos_ < src_.size()) {
        if (at(pos_) == '\\') {
          pos_ += 2;
        } else if (src_.substr(pos_, 3) == "\"\"\"") {
          pos_ += 3;
          return;
        } else {
          ++pos_;
        }
      }
      throw LexError("unterminated text block at offset " + std::to_string(start));
    }
    scan_quoted('"', "string literal");
  }

  void scan_quoted(char quote, const char* what) {
    const std::size_t start = pos_;
    ++pos_;
    while (pos_ < src_.size()) {
      const unsigned char c = at(pos_);
      if (c == '\\') {
        pos_ += 2;
      } else if (c == static_cast<unsigned char>(quote)) {
        ++pos_;
        return;
      } else if (c == '\n') {
        break;
      } else {
        ++pos_;
      }
    }
    throw LexError(std::string("unterminated ") + what + " at offset " + std::to_string(start));
  }

  void scan_number() {
    auto digits = [&](auto pred) {
      while (pos_ < src_.size() && (pred(at(pos_)) || at(pos_) == '_')) ++pos_;
    };
    if (at(pos_) == '0' && (at(pos_ + 1) == 'x' || at(pos_ + 1) == 'X') &&
        is_hex_digit(at(pos_ + 2))) {
      pos_ += 2;
      digits(is_hex_digit);
      if (at(pos_) == 'l' || at(pos_) == 'L') ++pos_;
      return;
    }
    if (at(pos_) == '0' && (at(pos_ + 1) == 'b' || at(pos_ + 1) == 'B') &&
        (at(pos_ + 2) == '0' || at(pos_ + 2) == '1')) {
      pos_ += 2;
      digits([](unsigned char c) { return c == '0' || c == '1'; });
      if (at(pos_) == 'l' || at(pos_) == 'L') ++pos_;
      return;
    }
    digits(is_digit);
    bool floating = false;
    if (at(pos_) == '.' && (is_digit(at(pos_ + 1)) ||
                            (!is_ident_start(at(pos_ + 1)) && at(pos_ + 1) != '.'))) {
      floating = true;
      ++pos_;
      digits(is_digit);
    }
    if ((at(pos_) == 'e' || at(pos_) == 'E') &&
        (is_digit(at(pos_ + 1)) ||
         ((at(pos_ + 1) == '+' || at(pos_ + 1) == '-') && is_digit(at(pos_ + 2))))) {
      floating = true;
      pos_ += 2;
      digits(is_digit);
    }
    const unsigned char s = at(pos_);
    if (s == 'f' || s == 'F' || s == 'd' || s == 'D' || (!floating && (s == 'l' || s == 'L'))) {
      ++pos_;
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string_view to_string(TokenKind kind) {
  switch (kind) {
    case TokenKind::kKeyword: return "keyword";
    case TokenKind::kIdentifier: return "identifier";
    case TokenKind::kNumberLiteral: return "number_literal";
    case TokenKind::kStringLiteral: return "string_literal";
    case TokenKind::kPunctuation: return "punctuation";
    case TokenKind::kWhitespace: return "whitespace";
    case TokenKind::kComment: return "comment";
  }
  return "unknown";
}

bool is_java_keyword(std::string_view word) {
  return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

std::vector<CodeToken> lex(std::string_view source) {
  if (source.empty()) throw LexError("empty");
  return Lexer(source).run();
}

std::string concat(const std::vector<CodeToken>& tokens) {
  std::string out;
  for (const auto& t : tokens) out += t.text;
  return out;
}

}  // namespace flakysieve
