#include "exbt/java/lexer.hpp"

#include <algorithm>
#include <array>
#include <cctype>

namespace exbt::java {

namespace {

const std::vector<std::string> kKeywords = {
    "abstract", "assert",     "boolean",   "break",     "byte",      "case",
    "catch",    "char",       "class",     "const",     "continue",  "default",
    "do",       "double",     "else",      "enum",      "extends",   "final",
    "finally",  "float",      "for",       "goto",      "if",        "implements",
    "import",   "instanceof", "int",       "interface", "long",      "native",
    "new",      "package",    "private",   "protected", "public",    "return",
    "short",    "static",     "strictfp",  "super",     "switch",    "synchronized",
    "this",     "throw",      "throws",    "transient", "try",       "void",
    "volatile", "while",      "true",      "false",     "null",
};

// Longest first. `>`-prefixed operators are deliberately absent.
constexpr std::array<std::string_view, 38> kOperators = {
    "<<=", "...", "->", "::", "++", "--", "&&", "||", "==", "!=", "<=", "+=", "-=",
    "*=",  "/=",  "&=", "|=", "^=", "%=", "<<", "(",  ")",  "{",  "}",  "[",  "]",
    ";",   ",",   ".",  "@",  "=",  "<",  "!",  "~",  "?",  ":",  "+",  "-",
};
constexpr std::string_view kSingleOps = "*/&|^%>";

bool ident_start(unsigned char c) { return std::isalpha(c) || c == '_' || c == '$' || c >= 0x80; }
bool ident_part(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

class Lexer {
public:
    explicit Lexer(std::string_view src) : src_(src) {}

    LexResult run()
    {
        LexResult out;
        while (true) {
            skip_trivia(out.comments);
            if (pos_ >= src_.size()) break;
            out.tokens.push_back(next());
        }
        Token end;
        end.kind = TokenKind::End;
        end.line = line_;
        end.column = col();
        end.begin = end.end = src_.size();
        out.tokens.push_back(end);
        return out;
    }

private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_start_ = 0;

    int col() const { return static_cast<int>(pos_ - line_start_) + 1; }
    char peek(std::size_t ahead = 0) const
    {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    void advance()
    {
        if (src_[pos_] == '\n') {
            ++line_;
            line_start_ = pos_ + 1;
        }
        ++pos_;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        throw LexError(msg + " at line " + std::to_string(line_), line_, col());
    }

    void skip_trivia(std::vector<Comment>& comments)
    {
        while (pos_ < src_.size()) {
            char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f') {
                advance();
            } else if (c == '/' && peek(1) == '/') {
                Comment cm{pos_, 0, line_};
                while (pos_ < src_.size() && peek() != '\n') advance();
                cm.end = pos_;
                comments.push_back(cm);
            } else if (c == '/' && peek(1) == '*') {
                Comment cm{pos_, 0, line_};
                advance();
                advance();
                while (pos_ < src_.size() && !(peek() == '*' && peek(1) == '/')) advance();
                if (pos_ >= src_.size()) fail("unterminated block comment");
                advance();
                advance();
                cm.end = pos_;
                comments.push_back(cm);
            } else {
                break;
            }
        }
    }

    Token make(TokenKind kind, std::size_t begin, int line, int column) const
    {
        Token t;
        t.kind = kind;
        t.begin = begin;
        t.end = pos_;
        t.line = line;
        t.column = column;
        t.text = std::string(src_.substr(begin, pos_ - begin));
        return t;
    }

    Token next()
    {
        std::size_t begin = pos_;
        int line = line_;
        int column = col();
        auto c = static_cast<unsigned char>(peek());

        if (ident_start(c)) {
            while (pos_ < src_.size() && ident_part(static_cast<unsigned char>(peek()))) advance();
            Token t = make(TokenKind::Identifier, begin, line, column);
            if (is_java_keyword(t.text)) t.kind = TokenKind::Keyword;
            return t;
        }
        if (std::isdigit(c) || (c == '.' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
            return number(begin, line, column);
        }
        if (c == '"') {
            if (peek(1) == '"' && peek(2) == '"') return text_block(begin, line, column);
            advance();
            while (true) {
                if (pos_ >= src_.size() || peek() == '\n') fail("unterminated string literal");
                if (peek() == '\\') {
                    advance();
                    if (pos_ < src_.size()) advance();
                    continue;
                }
                if (peek() == '"') {
                    advance();
                    break;
                }
                advance();
            }
            return make(TokenKind::StringLiteral, begin, line, column);
        }
        if (c == '\'') {
            advance();
            while (true) {
                if (pos_ >= src_.size() || peek() == '\n') fail("unterminated char literal");
                if (peek() == '\\') {
                    advance();
                    if (pos_ < src_.size()) advance();
                    continue;
                }
                if (peek() == '\'') {
                    advance();
                    break;
                }
                advance();
            }
            return make(TokenKind::CharLiteral, begin, line, column);
        }
        for (auto op : kOperators) {
            if (src_.substr(pos_, op.size()) == op) {
                for (std::size_t i = 0; i < op.size(); ++i) advance();
                return make(TokenKind::Operator, begin, line, column);
            }
        }
        if (kSingleOps.find(static_cast<char>(c)) != std::string_view::npos) {
            advance();
            return make(TokenKind::Operator, begin, line, column);
        }
        fail(std::string("unexpected character '") + static_cast<char>(c) + "'");
    }

    Token number(std::size_t begin, int line, int column)
    {
        bool is_float = false;
        if (peek() == '0' && (peek(1) == 'x' || peek(1) == 'X' || peek(1) == 'b' || peek(1) == 'B')) {
            advance();
            advance();
            while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            if (peek() == '.' || peek() == 'p' || peek() == 'P') {
                // hex floating point
                is_float = true;
                if (peek() == '.') advance();
                while (std::isxdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
                if (peek() == 'p' || peek() == 'P') {
                    advance();
                    if (peek() == '+' || peek() == '-') advance();
                    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
                }
            }
        } else {
            while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
                is_float = true;
                advance();
                while (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '_') advance();
            } else if (peek() == '.' && !ident_start(static_cast<unsigned char>(peek(1))) &&
                       peek(1) != '.') {
                // `1.` is a valid double literal
                is_float = true;
                advance();
            }
            if (peek() == 'e' || peek() == 'E') {
                is_float = true;
                advance();
                if (peek() == '+' || peek() == '-') advance();
                while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
            }
        }
        char s = peek();
        if (s == 'f' || s == 'F' || s == 'd' || s == 'D') {
            is_float = true;
            advance();
        } else if (s == 'l' || s == 'L') {
            advance();
        }
        return make(is_float ? TokenKind::FloatLiteral : TokenKind::IntLiteral, begin, line, column);
    }

    Token text_block(std::size_t begin, int line, int column)
    {
        advance();
        advance();
        advance();
        while (true) {
            if (pos_ >= src_.size()) fail("unterminated text block");
            if (peek() == '\\') {
                advance();
                if (pos_ < src_.size()) advance();
                continue;
            }
            if (peek() == '"' && peek(1) == '"' && peek(2) == '"') {
                advance();
                advance();
                advance();
                break;
            }
            advance();
        }
        return make(TokenKind::TextBlock, begin, line, column);
    }
};

}  // namespace

bool is_java_keyword(std::string_view word)
{
    return std::find(kKeywords.begin(), kKeywords.end(), word) != kKeywords.end();
}

const std::vector<std::string>& java_keywords() { return kKeywords; }

LexResult lex(std::string_view source) { return Lexer(source).run(); }

}  // namespace exbt::java
