#pragma once

#include "exbt/java/ast.hpp"

#include <stdexcept>
#include <string>
#include <string_view>

namespace exbt::java {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, int line, int column)
        : std::runtime_error(what), line_(line), column_(column) {}
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

/// Parses a complete .java file. Throws ParseError (or LexError) on input
/// the grammar does not accept.
CompilationUnit parse_compilation_unit(std::string path, std::string source);

/// Parses a bare sequence of class-body members (e.g. one test method) into a
/// unit holding a single synthetic class named `__members__`. Ranges and line
/// numbers refer to `source` unchanged.
CompilationUnit parse_members(std::string source);

/// Parses a single expression; trailing tokens are an error. With
/// `keep_parens`, parenthesized subexpressions become Paren nodes.
ExprPtr parse_expression(std::string_view source, bool keep_parens = false);

}  // namespace exbt::java
