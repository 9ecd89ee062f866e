#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace exbt::java {

enum class TokenKind {
    Identifier,
    Keyword,
    IntLiteral,
    FloatLiteral,
    CharLiteral,
    StringLiteral,
    TextBlock,
    Operator,
    End,
};

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;
    int line = 1;
    int column = 1;
    std::size_t begin = 0;  // byte offset into the source
    std::size_t end = 0;    // one past the last byte

    bool is(TokenKind k, std::string_view t) const { return kind == k && text == t; }
    bool is_op(std::string_view t) const { return kind == TokenKind::Operator && text == t; }
    bool is_keyword(std::string_view t) const { return kind == TokenKind::Keyword && text == t; }
    bool is_ident() const { return kind == TokenKind::Identifier; }
    bool is_ident(std::string_view t) const { return kind == TokenKind::Identifier && text == t; }
    bool is_literal() const
    {
        return kind == TokenKind::IntLiteral || kind == TokenKind::FloatLiteral ||
               kind == TokenKind::CharLiteral || kind == TokenKind::StringLiteral ||
               kind == TokenKind::TextBlock;
    }
};

struct Comment {
    std::size_t begin = 0;
    std::size_t end = 0;
    int line = 1;
};

class LexError : public std::runtime_error {
public:
    LexError(const std::string& what, int line, int column)
        : std::runtime_error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct LexResult {
    std::vector<Token> tokens;  // always terminated by an End token
    std::vector<Comment> comments;
};

/// Tokenizes Java source. `>` is always emitted as a single-character token so
/// that nested generic closers lex correctly; the parser re-joins shift and
/// comparison operators from adjacent `>` tokens.
LexResult lex(std::string_view source);

bool is_java_keyword(std::string_view word);

/// Reserved words plus the literal words true/false/null.
const std::vector<std::string>& java_keywords();

}  // namespace exbt::java
