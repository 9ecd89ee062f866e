#include "exbt/java/parser.hpp"

#include "exbt/java/lexer.hpp"

#include <algorithm>
#include <functional>
#include <utility>

namespace exbt::java {

namespace {

const std::vector<std::string_view> kPrimitives = {"boolean", "byte",  "char",   "short", "int",
                                                   "long",    "float", "double", "void"};

const std::vector<std::string_view> kModifiers = {
    "public", "protected", "private", "static",   "final",    "abstract",
    "native", "synchronized", "transient", "volatile", "strictfp", "default"};

const std::vector<std::string_view> kAssignOps = {"=",  "+=", "-=", "*=",  "/=",  "%=",
                                                  "&=", "|=", "^=", "<<=", ">>=", ">>>="};

bool is_primitive(const Token& t)
{
    return t.kind == TokenKind::Keyword &&
           std::find(kPrimitives.begin(), kPrimitives.end(), t.text) != kPrimitives.end();
}

int binary_precedence(std::string_view op)
{
    if (op == "||") return 3;
    if (op == "&&") return 4;
    if (op == "|") return 5;
    if (op == "^") return 6;
    if (op == "&") return 7;
    if (op == "==" || op == "!=") return 8;
    if (op == "<" || op == ">" || op == "<=" || op == ">=" || op == "instanceof") return 9;
    if (op == "<<" || op == ">>" || op == ">>>") return 10;
    if (op == "+" || op == "-") return 11;
    if (op == "*" || op == "/" || op == "%") return 12;
    return -1;
}

std::string collapse_ws(std::string_view s)
{
    std::string out;
    bool space = false;
    for (char c : s) {
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            space = !out.empty();
        } else {
            if (space) out.push_back(' ');
            space = false;
            out.push_back(c);
        }
    }
    return out;
}

void link_stmt(Stmt& s, Stmt* parent);

void link_type(TypeDecl& t, Stmt* parent);

void link_expr(const Expr& e, Stmt* enclosing)
{
    if (e.target) link_expr(*e.target, enclosing);
    for (const auto& op : e.operands)
        if (op) link_expr(*op, enclosing);
    if (e.body) link_stmt(*e.body, enclosing);
    if (e.anon) link_type(*e.anon, enclosing);
}

void link_type(TypeDecl& t, Stmt* parent)
{
    for (auto& m : t.methods) {
        if (m->body) link_stmt(*m->body, parent);
        if (m->field_init) link_expr(*m->field_init, parent);
    }
    for (auto& f : t.fields)
        if (f.init) link_expr(*f.init, parent);
    for (auto& n : t.nested) link_type(*n, parent);
}

void link_stmt(Stmt& s, Stmt* parent)
{
    s.parent = parent;
    if (s.expr) link_expr(*s.expr, &s);
    for (auto& v : s.vars)
        if (v.init) link_expr(*v.init, &s);
    for (auto& e : s.init)
        if (e) link_expr(*e, &s);
    for (auto& e : s.update)
        if (e) link_expr(*e, &s);
    for (auto& e : s.labels)
        if (e) link_expr(*e, &s);
    if (s.local_type) link_type(*s.local_type, &s);
    for (auto& c : s.children) link_stmt(*c, &s);
    if (s.then_branch) link_stmt(*s.then_branch, &s);
    if (s.else_branch) link_stmt(*s.else_branch, &s);
}

class Parser {
public:
    Parser(std::string_view source, std::vector<Token> tokens)
        : src_(source), toks_(std::move(tokens)) {}

    bool keep_parens_ = false;

    void parse_unit(CompilationUnit& unit)
    {
        // A package declaration may carry annotations (package-info.java).
        std::size_t save = pos_;
        std::vector<Annotation> ignored;
        while (at_op("@") && !peek(1).is_keyword("interface")) ignored.push_back(parse_annotation());
        if (accept_kw("package")) {
            unit.package_name = parse_qualified_name();
            expect_op(";");
        } else {
            pos_ = save;
        }
        package_ = unit.package_name;
        while (true) {
            if (accept_op(";")) continue;
            if (peek().is_keyword("import")) {
                advance();
                std::string imp;
                if (accept_kw("static")) imp = "static ";
                imp += parse_qualified_name();
                if (accept_op(".")) {
                    expect_op("*");
                    imp += ".*";
                }
                expect_op(";");
                unit.imports.push_back(imp);
                continue;
            }
            break;
        }
        if (peek().is_ident("module") || (peek().is_ident("open") && peek(1).is_ident("module"))) {
            // module-info.java declares no types
            pos_ = toks_.size() - 1;
            return;
        }
        while (!at_end()) {
            if (accept_op(";")) continue;
            auto td = parse_type_decl(nullptr);
            unit.types.push_back(std::move(td));
        }
    }

    void parse_member_list(CompilationUnit& unit)
    {
        auto td = std::make_unique<TypeDecl>();
        td->kind = TypeKind::Class;
        td->name = "__members__";
        td->qualified = td->name;
        td->binary_name = td->name;
        while (!at_end()) parse_member(*td);
        if (!toks_.empty()) {
            td->range.begin = 0;
            td->range.end = src_.size();
            td->range.begin_line = 1;
            td->range.end_line = toks_.back().line;
        }
        finish_type(*td);
        unit.types.push_back(std::move(td));
    }

    ExprPtr parse_single_expression()
    {
        auto e = parse_expr();
        if (!at_end()) fail("unexpected trailing tokens");
        return e;
    }

private:
    std::string_view src_;
    std::vector<Token> toks_;
    std::size_t pos_ = 0;
    std::string package_;

    // ---- token helpers ---------------------------------------------------

    const Token& peek(std::size_t k = 0) const
    {
        std::size_t i = std::min(pos_ + k, toks_.size() - 1);
        return toks_[i];
    }
    const Token& advance()
    {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool at_end() const { return toks_[pos_].kind == TokenKind::End; }
    bool at_op(std::string_view op) const { return peek().is_op(op); }
    bool accept_op(std::string_view op)
    {
        if (at_op(op)) {
            advance();
            return true;
        }
        return false;
    }
    void expect_op(std::string_view op)
    {
        if (!accept_op(op)) fail("expected '" + std::string(op) + "'");
    }
    bool accept_kw(std::string_view kw)
    {
        if (peek().is_keyword(kw)) {
            advance();
            return true;
        }
        return false;
    }
    void expect_kw(std::string_view kw)
    {
        if (!accept_kw(kw)) fail("expected '" + std::string(kw) + "'");
    }
    std::string expect_ident()
    {
        if (!peek().is_ident()) fail("expected identifier");
        return advance().text;
    }

    [[noreturn]] void fail(const std::string& msg) const
    {
        const Token& t = peek();
        std::string got = t.kind == TokenKind::End ? "end of input" : "'" + t.text + "'";
        throw ParseError(msg + ", got " + got + " at line " + std::to_string(t.line), t.line,
                         t.column);
    }

    bool adjacent(std::size_t i) const
    {
        return pos_ + i + 1 < toks_.size() && toks_[pos_ + i].end == toks_[pos_ + i + 1].begin;
    }

    SourceRange range_from(std::size_t start_tok) const
    {
        SourceRange r;
        const Token& b = toks_[start_tok];
        std::size_t last = pos_ > start_tok ? pos_ - 1 : start_tok;
        const Token& e = toks_[last];
        r.begin = b.begin;
        r.end = e.end;
        r.begin_line = b.line;
        r.end_line = e.line;
        // the end line is the line of the last byte
        for (std::size_t i = e.begin; i < e.end; ++i)
            if (src_[i] == '\n') ++r.end_line;
        return r;
    }

    std::string text_of(const SourceRange& r) const
    {
        return std::string(src_.substr(r.begin, r.end - r.begin));
    }

    template <typename F>
    bool attempt(F&& f)
    {
        std::size_t save = pos_;
        try {
            f();
            return true;
        } catch (const ParseError&) {
            pos_ = save;
            return false;
        }
    }

    /// Combined operator at the cursor, re-joining adjacent `>` tokens.
    std::pair<std::string, std::size_t> peek_operator() const
    {
        const Token& t = peek();
        if (t.kind == TokenKind::Keyword && t.text == "instanceof") return {"instanceof", 1};
        if (t.kind != TokenKind::Operator) return {"", 0};
        if (t.text != ">") return {t.text, 1};
        if (adjacent(0) && peek(1).is_op(">")) {
            if (adjacent(1) && peek(2).is_op(">")) {
                if (adjacent(2) && peek(3).is_op("=")) return {">>>=", 4};
                return {">>>", 3};
            }
            if (adjacent(1) && peek(2).is_op("=")) return {">>=", 3};
            return {">>", 2};
        }
        if (adjacent(0) && peek(1).is_op("=")) return {">=", 2};
        return {">", 1};
    }

    // ---- names and types -------------------------------------------------

    std::string parse_qualified_name()
    {
        std::string name = expect_ident();
        while (at_op(".") && peek(1).is_ident()) {
            advance();
            name += "." + advance().text;
        }
        return name;
    }

    void skip_type_args()
    {
        expect_op("<");
        if (accept_op(">")) return;
        while (true) {
            while (at_op("@")) parse_annotation();
            if (accept_op("?")) {
                if (accept_kw("extends") || accept_kw("super")) parse_type();
            } else {
                parse_type();
            }
            if (accept_op(",")) continue;
            expect_op(">");
            return;
        }
    }

    void skip_type_params()
    {
        expect_op("<");
        while (true) {
            while (at_op("@")) parse_annotation();
            expect_ident();
            if (accept_kw("extends")) {
                parse_type();
                while (accept_op("&")) parse_type();
            }
            if (accept_op(",")) continue;
            expect_op(">");
            return;
        }
    }

    void skip_dims()
    {
        while (true) {
            std::size_t save = pos_;
            while (at_op("@")) parse_annotation();
            if (at_op("[") && peek(1).is_op("]")) {
                advance();
                advance();
                continue;
            }
            pos_ = save;
            return;
        }
    }

    std::string parse_class_type_no_dims()
    {
        std::size_t start = pos_;
        while (at_op("@")) parse_annotation();
        std::size_t type_start = pos_;
        if (is_primitive(peek())) {
            advance();
        } else {
            expect_ident();
            if (at_op("<")) skip_type_args();
            while (at_op(".") && (peek(1).is_ident() || peek(1).is_op("@"))) {
                advance();
                while (at_op("@")) parse_annotation();
                expect_ident();
                if (at_op("<")) skip_type_args();
            }
        }
        (void)start;
        return collapse_ws(text_of(range_from(type_start)));
    }

    std::string parse_type()
    {
        while (at_op("@")) parse_annotation();
        std::size_t start = pos_;
        parse_class_type_no_dims();
        skip_dims();
        return collapse_ws(text_of(range_from(start)));
    }

    // ---- annotations and modifiers ---------------------------------------

    Annotation parse_annotation()
    {
        std::size_t start = pos_;
        expect_op("@");
        Annotation a;
        a.name = parse_qualified_name();
        if (accept_op("(")) {
            if (!at_op(")")) {
                if (peek().is_ident() && peek(1).is_op("=")) {
                    while (true) {
                        AnnotationElement el;
                        el.name = expect_ident();
                        expect_op("=");
                        el.value = parse_element_value();
                        a.elements.push_back(std::move(el));
                        if (!accept_op(",")) break;
                    }
                } else {
                    a.elements.push_back({"value", parse_element_value()});
                }
            }
            expect_op(")");
        }
        a.range = range_from(start);
        return a;
    }

    ExprPtr parse_element_value()
    {
        std::size_t start = pos_;
        if (at_op("@")) {
            parse_annotation();
            return raw_expr(start);
        }
        if (at_op("{")) return parse_array_init();
        return parse_ternary();
    }

    void parse_modifiers(std::vector<std::string>& mods, std::vector<Annotation>& annots)
    {
        while (true) {
            const Token& t = peek();
            if (t.is_op("@") && !peek(1).is_keyword("interface")) {
                annots.push_back(parse_annotation());
            } else if (t.kind == TokenKind::Keyword &&
                       std::find(kModifiers.begin(), kModifiers.end(), t.text) != kModifiers.end()) {
                // `default` starts a switch label, never a modifier, when followed by : or ->
                if (t.text == "default" && (peek(1).is_op(":") || peek(1).is_op("->"))) return;
                mods.push_back(advance().text);
            } else if (t.is_ident("sealed") && (peek(1).kind == TokenKind::Keyword || peek(1).is_ident())) {
                mods.push_back(advance().text);
            } else if (t.is_ident("non") && peek(1).is_op("-") && peek(2).is_ident("sealed")) {
                advance();
                advance();
                advance();
                mods.push_back("non-sealed");
            } else {
                return;
            }
        }
    }

    bool at_type_decl_start() const
    {
        const Token& t = peek();
        if (t.is_keyword("class") || t.is_keyword("interface") || t.is_keyword("enum")) return true;
        if (t.is_op("@") && peek(1).is_keyword("interface")) return true;
        if (t.is_ident("record") && peek(1).is_ident() && (peek(2).is_op("(") || peek(2).is_op("<")))
            return true;
        return false;
    }

    // ---- type declarations -----------------------------------------------

    std::unique_ptr<TypeDecl> parse_type_decl(const TypeDecl* outer)
    {
        std::size_t start = pos_;
        auto td = std::make_unique<TypeDecl>();
        parse_modifiers(td->modifiers, td->annotations);
        parse_type_decl_rest(*td, outer, start);
        return td;
    }

    void parse_type_decl_rest(TypeDecl& td, const TypeDecl* outer, std::size_t start)
    {
        if (accept_kw("class")) {
            td.kind = TypeKind::Class;
        } else if (accept_kw("interface")) {
            td.kind = TypeKind::Interface;
        } else if (accept_kw("enum")) {
            td.kind = TypeKind::Enum;
        } else if (at_op("@") && peek(1).is_keyword("interface")) {
            advance();
            advance();
            td.kind = TypeKind::Annotation;
        } else if (peek().is_ident("record")) {
            advance();
            td.kind = TypeKind::Record;
        } else {
            fail("expected type declaration");
        }
        td.name = expect_ident();
        td.outer = outer;
        if (outer) {
            td.qualified = outer->qualified + "." + td.name;
            td.binary_name = outer->binary_name + "$" + td.name;
        } else {
            td.qualified = package_.empty() ? td.name : package_ + "." + td.name;
            td.binary_name = td.qualified;
        }
        if (at_op("<")) skip_type_params();
        if (td.kind == TypeKind::Record) {
            expect_op("(");
            if (!at_op(")")) {
                while (true) {
                    std::vector<std::string> mods;
                    std::vector<Annotation> ann;
                    parse_modifiers(mods, ann);
                    Param p;
                    p.type = parse_type();
                    if (accept_op("...")) p.varargs = true;
                    p.name = expect_ident();
                    td.record_components.push_back(p);
                    if (!accept_op(",")) break;
                }
            }
            expect_op(")");
        }
        if (accept_kw("extends")) {
            td.supertypes.push_back(parse_type());
            while (accept_op(",")) td.supertypes.push_back(parse_type());
        }
        if (accept_kw("implements")) {
            td.supertypes.push_back(parse_type());
            while (accept_op(",")) td.supertypes.push_back(parse_type());
        }
        if (peek().is_ident("permits")) {
            advance();
            parse_type();
            while (accept_op(",")) parse_type();
        }
        parse_class_body(td);
        td.range = range_from(start);
        finish_type(td);
    }

    void parse_class_body(TypeDecl& td)
    {
        expect_op("{");
        if (td.kind == TypeKind::Enum) parse_enum_constants(td);
        while (!at_op("}")) {
            if (at_end()) fail("unterminated class body");
            parse_member(td);
        }
        expect_op("}");
    }

    void parse_enum_constants(TypeDecl& td)
    {
        while (!at_op(";") && !at_op("}")) {
            std::size_t start = pos_;
            std::vector<std::string> mods;
            std::vector<Annotation> ann;
            parse_modifiers(mods, ann);
            FieldDecl f;
            f.line = peek().line;
            f.name = expect_ident();
            f.type = td.name;
            f.modifiers = {"public", "static", "final"};
            if (at_op("(")) {
                std::size_t args_start = pos_;
                auto args = parse_arguments();
                auto call = std::make_shared<Expr>();
                call->kind = ExprKind::New;
                call->type = td.name;
                call->operands = std::move(args);
                call->range = range_from(args_start);
                call->source = text_of(call->range);
                f.init = call;
            }
            if (at_op("{")) {
                // constant-specific body: its methods belong to the enum for attribution
                TypeDecl body;
                body.kind = TypeKind::Anonymous;
                body.name = td.name;
                body.qualified = td.qualified;
                body.binary_name = td.binary_name;
                body.outer = &td;
                parse_class_body(body);
                for (auto& m : body.methods) td.methods.push_back(std::move(m));
                for (auto& n : body.nested) td.nested.push_back(std::move(n));
            }
            if (f.init) add_field_init(td, f, range_from(start), true);
            td.fields.push_back(std::move(f));
            if (!accept_op(",")) break;
        }
        accept_op(";");
    }

    void add_field_init(TypeDecl& td, const FieldDecl& f, const SourceRange& range, bool is_static)
    {
        auto m = std::make_unique<MethodDecl>();
        m->kind = MethodKind::FieldInit;
        m->name = is_static ? "<clinit>" : "<init>";
        m->field_init = f.init;
        m->modifiers = f.modifiers;
        m->range = range;
        m->name_line = f.line;
        td.methods.push_back(std::move(m));
    }

    void parse_member(TypeDecl& td)
    {
        if (accept_op(";")) return;
        std::size_t start = pos_;
        if (at_op("{") || (peek().is_keyword("static") && peek(1).is_op("{"))) {
            bool is_static = accept_kw("static");
            auto m = std::make_unique<MethodDecl>();
            m->kind = is_static ? MethodKind::StaticInit : MethodKind::InstanceInit;
            m->name = is_static ? "<clinit>" : "<init>";
            m->name_line = peek().line;
            m->body_open = peek().begin;
            m->body = parse_block();
            m->range = range_from(start);
            if (is_static) m->modifiers.push_back("static");
            td.methods.push_back(std::move(m));
            return;
        }
        std::vector<std::string> mods;
        std::vector<Annotation> annots;
        parse_modifiers(mods, annots);
        if (at_type_decl_start()) {
            auto nested = std::make_unique<TypeDecl>();
            nested->modifiers = std::move(mods);
            nested->annotations = std::move(annots);
            parse_type_decl_rest(*nested, &td, start);
            td.nested.push_back(std::move(nested));
            return;
        }
        if (at_op("<")) skip_type_params();

        auto m = std::make_unique<MethodDecl>();
        m->modifiers = std::move(mods);
        m->annotations = std::move(annots);

        if (peek().is_ident() && peek().text == td.name && peek(1).is_op("(")) {
            m->kind = MethodKind::Constructor;
            m->name = "<init>";
            m->name_line = peek().line;
            advance();
            parse_params(*m);
            parse_method_rest(*m);
            m->range = range_from(start);
            td.methods.push_back(std::move(m));
            return;
        }
        if (td.kind == TypeKind::Record && peek().is_ident() && peek().text == td.name &&
            peek(1).is_op("{")) {
            m->kind = MethodKind::Constructor;
            m->name = "<init>";
            m->name_line = peek().line;
            advance();
            m->params = td.record_components;
            m->body_open = peek().begin;
            m->body = parse_block();
            m->range = range_from(start);
            td.methods.push_back(std::move(m));
            return;
        }

        std::string type = parse_type();
        int name_line = peek().line;
        std::string name = expect_ident();
        if (at_op("(")) {
            m->kind = MethodKind::Method;
            m->name = name;
            m->name_line = name_line;
            m->return_type = type;
            parse_params(*m);
            skip_dims();
            parse_method_rest(*m);
            m->range = range_from(start);
            td.methods.push_back(std::move(m));
            return;
        }

        // field declarators
        bool is_static = std::find(m->modifiers.begin(), m->modifiers.end(), "static") !=
                             m->modifiers.end() ||
                         td.kind == TypeKind::Interface;
        while (true) {
            FieldDecl f;
            f.type = type;
            f.name = name;
            f.line = name_line;
            f.modifiers = m->modifiers;
            skip_dims();
            if (accept_op("=")) f.init = parse_var_init();
            if (f.init) add_field_init(td, f, range_from(start), is_static);
            td.fields.push_back(std::move(f));
            if (!accept_op(",")) break;
            name_line = peek().line;
            name = expect_ident();
        }
        expect_op(";");
    }

    void parse_params(MethodDecl& m)
    {
        expect_op("(");
        if (!at_op(")")) {
            while (true) {
                std::vector<std::string> mods;
                std::vector<Annotation> ann;
                parse_modifiers(mods, ann);
                Param p;
                p.type = parse_type();
                while (at_op("@")) parse_annotation();
                if (accept_op("...")) p.varargs = true;
                if (peek().is_keyword("this")) {
                    // receiver parameter
                    advance();
                    if (!accept_op(",")) break;
                    continue;
                }
                p.name = expect_ident();
                skip_dims();
                m.params.push_back(p);
                if (!accept_op(",")) break;
            }
        }
        expect_op(")");
    }

    void parse_method_rest(MethodDecl& m)
    {
        if (accept_kw("throws")) {
            m.throws_types.push_back(parse_type());
            while (accept_op(",")) m.throws_types.push_back(parse_type());
        }
        if (at_op("{")) {
            m.body_open = peek().begin;
            m.body = parse_block();
            return;
        }
        if (accept_kw("default")) parse_element_value();
        expect_op(";");
    }

    void finish_type(TypeDecl& td)
    {
        for (auto& m : td.methods) {
            m->owner = &td;
            if (m->body) link_stmt(*m->body, nullptr);
            if (m->field_init) link_expr(*m->field_init, nullptr);
        }
    }

    // ---- statements ------------------------------------------------------

    std::unique_ptr<Stmt> make_stmt(StmtKind k)
    {
        auto s = std::make_unique<Stmt>();
        s->kind = k;
        return s;
    }

    std::unique_ptr<Stmt> parse_block()
    {
        std::size_t start = pos_;
        auto b = make_stmt(StmtKind::Block);
        expect_op("{");
        while (!at_op("}")) {
            if (at_end()) fail("unterminated block");
            b->children.push_back(parse_block_statement());
        }
        expect_op("}");
        b->range = range_from(start);
        return b;
    }

    bool looks_like_yield() const
    {
        if (!peek().is_ident("yield")) return false;
        const Token& n = peek(1);
        if (n.kind == TokenKind::Operator) {
            static const std::vector<std::string_view> not_yield = {
                "=", ".", "[", "++", "--", "->", "::", "+=", "-=", "*=", "/=", ";", ")", ",", "?", ":"};
            if (n.text == "-" || n.text == "+" || n.text == "!" || n.text == "~" || n.text == "(")
                return true;
            return std::find(not_yield.begin(), not_yield.end(), n.text) == not_yield.end() &&
                   n.text != ">" && n.text != "<";
        }
        return true;
    }

    /// Attempts `[mods] Type name` followed by one of the declarator terminators.
    bool try_local_var_header(std::string& type, bool allow_colon)
    {
        return attempt([&] {
            std::vector<std::string> mods;
            std::vector<Annotation> ann;
            parse_modifiers(mods, ann);
            type = parse_type();
            if (!peek().is_ident()) fail("expected variable name");
            const Token& after = peek(1);
            if (!(after.is_op("=") || after.is_op(";") || after.is_op(",") || after.is_op("[") ||
                  (allow_colon && after.is_op(":"))))
                fail("not a declaration");
        });
    }

    void parse_declarators(Stmt& s, const std::string& type)
    {
        while (true) {
            VarDecl v;
            v.type = type;
            v.line = peek().line;
            v.name = expect_ident();
            skip_dims();
            if (accept_op("=")) v.init = parse_var_init();
            s.vars.push_back(std::move(v));
            if (!accept_op(",")) break;
        }
    }

    std::unique_ptr<Stmt> parse_block_statement()
    {
        std::size_t start = pos_;
        // local class / record / interface / enum
        {
            std::size_t save = pos_;
            std::vector<std::string> mods;
            std::vector<Annotation> ann;
            parse_modifiers(mods, ann);
            if (at_type_decl_start()) {
                auto s = make_stmt(StmtKind::LocalClass);
                s->local_type = std::make_shared<TypeDecl>();
                s->local_type->modifiers = mods;
                s->local_type->annotations = ann;
                parse_type_decl_rest(*s->local_type, nullptr, save);
                s->range = range_from(start);
                return s;
            }
            pos_ = save;
        }
        if (!looks_like_yield() && !peek().is_keyword("this") && !peek().is_keyword("super")) {
            std::string type;
            if (try_local_var_header(type, false)) {
                auto s = make_stmt(StmtKind::LocalVar);
                parse_declarators(*s, type);
                expect_op(";");
                s->range = range_from(start);
                return s;
            }
        }
        return parse_statement();
    }

    std::unique_ptr<Stmt> parse_statement()
    {
        std::size_t start = pos_;
        const Token& t = peek();
        std::unique_ptr<Stmt> s;

        if (t.is_op("{")) return parse_block();
        if (t.is_op(";")) {
            advance();
            s = make_stmt(StmtKind::Empty);
        } else if (t.is_keyword("if")) {
            advance();
            s = make_stmt(StmtKind::If);
            expect_op("(");
            s->expr = parse_expr();
            expect_op(")");
            s->then_branch = parse_statement();
            if (accept_kw("else")) s->else_branch = parse_statement();
        } else if (t.is_keyword("while")) {
            advance();
            s = make_stmt(StmtKind::While);
            expect_op("(");
            s->expr = parse_expr();
            expect_op(")");
            s->then_branch = parse_statement();
        } else if (t.is_keyword("do")) {
            advance();
            s = make_stmt(StmtKind::DoWhile);
            s->then_branch = parse_statement();
            expect_kw("while");
            expect_op("(");
            s->expr = parse_expr();
            expect_op(")");
            expect_op(";");
        } else if (t.is_keyword("for")) {
            s = parse_for();
        } else if (t.is_keyword("switch")) {
            s = parse_switch();
        } else if (t.is_keyword("try")) {
            s = parse_try();
        } else if (t.is_keyword("throw")) {
            advance();
            s = make_stmt(StmtKind::Throw);
            s->expr = parse_expr();
            expect_op(";");
        } else if (t.is_keyword("return")) {
            advance();
            s = make_stmt(StmtKind::Return);
            if (!at_op(";")) s->expr = parse_expr();
            expect_op(";");
        } else if (t.is_keyword("break") || t.is_keyword("continue")) {
            s = make_stmt(t.text == "break" ? StmtKind::Break : StmtKind::Continue);
            advance();
            if (peek().is_ident()) s->label = advance().text;
            expect_op(";");
        } else if (t.is_keyword("synchronized") && peek(1).is_op("(")) {
            advance();
            s = make_stmt(StmtKind::Synchronized);
            expect_op("(");
            s->expr = parse_expr();
            expect_op(")");
            s->then_branch = parse_block();
        } else if (t.is_keyword("assert")) {
            advance();
            s = make_stmt(StmtKind::Assert);
            s->expr = parse_expr();
            if (accept_op(":")) s->init.push_back(parse_expr());
            expect_op(";");
        } else if (looks_like_yield()) {
            advance();
            s = make_stmt(StmtKind::Yield);
            s->expr = parse_expr();
            expect_op(";");
        } else if (t.is_ident() && peek(1).is_op(":")) {
            s = make_stmt(StmtKind::Labeled);
            s->label = advance().text;
            advance();
            s->then_branch = parse_statement();
        } else {
            s = make_stmt(StmtKind::ExprStmt);
            s->expr = parse_expr();
            expect_op(";");
        }
        s->range = range_from(start);
        return s;
    }

    std::unique_ptr<Stmt> parse_for()
    {
        expect_kw("for");
        expect_op("(");
        std::string type;
        std::size_t save = pos_;
        if (try_local_var_header(type, true) && peek(1).is_op(":")) {
            auto s = make_stmt(StmtKind::ForEach);
            VarDecl v;
            v.type = type;
            v.line = peek().line;
            v.name = expect_ident();
            expect_op(":");
            s->vars.push_back(v);
            s->expr = parse_expr();
            expect_op(")");
            s->then_branch = parse_statement();
            return s;
        }
        pos_ = save;
        auto s = make_stmt(StmtKind::For);
        if (!at_op(";")) {
            if (try_local_var_header(type, false)) {
                parse_declarators(*s, type);
            } else {
                s->init.push_back(parse_expr());
                while (accept_op(",")) s->init.push_back(parse_expr());
            }
        }
        expect_op(";");
        if (!at_op(";")) s->expr = parse_expr();
        expect_op(";");
        if (!at_op(")")) {
            s->update.push_back(parse_expr());
            while (accept_op(",")) s->update.push_back(parse_expr());
        }
        expect_op(")");
        s->then_branch = parse_statement();
        return s;
    }

    std::unique_ptr<Stmt> parse_switch()
    {
        std::size_t start = pos_;
        expect_kw("switch");
        auto s = make_stmt(StmtKind::Switch);
        expect_op("(");
        s->expr = parse_expr();
        expect_op(")");
        expect_op("{");
        while (!at_op("}")) {
            if (at_end()) fail("unterminated switch");
            s->children.push_back(parse_case());
        }
        expect_op("}");
        s->range = range_from(start);
        return s;
    }

    ExprPtr parse_case_label()
    {
        std::size_t start = pos_;
        ExprPtr e;
        bool ok = attempt([&] {
            e = parse_ternary();
            if (!(at_op(",") || at_op(":") || at_op("->"))) fail("not a constant label");
        });
        if (ok) return e;
        // type/record patterns and guarded labels are kept verbatim
        pos_ = start;
        int depth = 0;
        while (!at_end()) {
            if (depth == 0 && (at_op(":") || at_op("->"))) break;
            if (at_op("(") || at_op("[") || at_op("{")) ++depth;
            if (at_op(")") || at_op("]") || at_op("}")) --depth;
            advance();
        }
        return raw_expr(start);
    }

    std::unique_ptr<Stmt> parse_case()
    {
        std::size_t start = pos_;
        auto c = make_stmt(StmtKind::Case);
        if (accept_kw("default")) {
            c->is_default = true;
        } else {
            expect_kw("case");
            while (true) {
                if (accept_kw("default")) {
                    c->is_default = true;
                } else {
                    c->labels.push_back(parse_case_label());
                }
                if (!accept_op(",")) break;
            }
        }
        if (accept_op("->")) {
            c->arrow = true;
            if (at_op("{")) {
                c->children.push_back(parse_block());
            } else if (peek().is_keyword("throw")) {
                c->children.push_back(parse_statement());
            } else {
                std::size_t es = pos_;
                auto st = make_stmt(StmtKind::ExprStmt);
                st->expr = parse_expr();
                expect_op(";");
                st->range = range_from(es);
                c->children.push_back(std::move(st));
            }
        } else {
            expect_op(":");
            while (!at_op("}") && !peek().is_keyword("case") &&
                   !(peek().is_keyword("default") && (peek(1).is_op(":") || peek(1).is_op("->")))) {
                if (at_end()) fail("unterminated switch case");
                c->children.push_back(parse_block_statement());
            }
        }
        c->range = range_from(start);
        return c;
    }

    std::unique_ptr<Stmt> parse_try()
    {
        expect_kw("try");
        auto s = make_stmt(StmtKind::Try);
        if (accept_op("(")) {
            while (!at_op(")")) {
                std::string type;
                if (try_local_var_header(type, false)) {
                    VarDecl v;
                    v.type = type;
                    v.line = peek().line;
                    v.name = expect_ident();
                    expect_op("=");
                    v.init = parse_expr();
                    s->vars.push_back(std::move(v));
                } else {
                    VarDecl v;
                    v.line = peek().line;
                    v.init = parse_expr();
                    s->vars.push_back(std::move(v));
                }
                if (!accept_op(";")) break;
            }
            expect_op(")");
        }
        s->then_branch = parse_block();
        while (peek().is_keyword("catch")) {
            std::size_t cs = pos_;
            advance();
            auto c = make_stmt(StmtKind::Catch);
            expect_op("(");
            std::vector<std::string> mods;
            std::vector<Annotation> ann;
            parse_modifiers(mods, ann);
            std::string type = parse_type();
            while (accept_op("|")) type += " | " + parse_type();
            c->catch_type = type;
            VarDecl v;
            v.type = type;
            v.line = peek().line;
            v.name = expect_ident();
            c->vars.push_back(v);
            expect_op(")");
            c->then_branch = parse_block();
            c->range = range_from(cs);
            s->children.push_back(std::move(c));
        }
        if (accept_kw("finally")) s->else_branch = parse_block();
        if (s->children.empty() && !s->else_branch && s->vars.empty())
            fail("try without catch or finally");
        return s;
    }

    // ---- expressions -----------------------------------------------------

    std::shared_ptr<Expr> new_expr(ExprKind k)
    {
        auto e = std::make_shared<Expr>();
        e->kind = k;
        return e;
    }

    ExprPtr finish(std::shared_ptr<Expr> e, std::size_t start)
    {
        e->range = range_from(start);
        e->source = text_of(e->range);
        return e;
    }

    ExprPtr raw_expr(std::size_t start)
    {
        auto e = new_expr(ExprKind::Raw);
        e->range = range_from(start);
        e->source = text_of(e->range);
        e->text = collapse_ws(e->source);
        return e;
    }

    ExprPtr parse_var_init()
    {
        if (at_op("{")) return parse_array_init();
        return parse_expr();
    }

    ExprPtr parse_array_init()
    {
        std::size_t start = pos_;
        auto e = new_expr(ExprKind::ArrayInit);
        expect_op("{");
        while (!at_op("}")) {
            e->operands.push_back(at_op("{") ? parse_array_init() : parse_element_or_expr());
            if (!accept_op(",")) break;
        }
        expect_op("}");
        return finish(e, start);
    }

    ExprPtr parse_element_or_expr()
    {
        if (at_op("@")) {
            std::size_t start = pos_;
            parse_annotation();
            return raw_expr(start);
        }
        return parse_expr();
    }

    bool lambda_ahead() const
    {
        if (peek().is_ident() && peek(1).is_op("->")) return true;
        if (!at_op("(")) return false;
        int depth = 0;
        for (std::size_t i = pos_; i < toks_.size(); ++i) {
            if (toks_[i].is_op("(")) ++depth;
            if (toks_[i].is_op(")")) {
                --depth;
                if (depth == 0) return i + 1 < toks_.size() && toks_[i + 1].is_op("->");
            }
            if (toks_[i].kind == TokenKind::End) return false;
        }
        return false;
    }

    ExprPtr parse_lambda()
    {
        std::size_t start = pos_;
        auto e = new_expr(ExprKind::Lambda);
        if (peek().is_ident()) {
            e->params.push_back(advance().text);
        } else {
            expect_op("(");
            std::string last_ident;
            int depth = 0;
            while (!(depth == 0 && at_op(")"))) {
                if (at_end()) fail("unterminated lambda parameters");
                if (at_op("<") || at_op("(")) ++depth;
                if (at_op(">") || at_op(")")) --depth;
                if (depth == 0 && at_op(",")) {
                    if (!last_ident.empty()) e->params.push_back(last_ident);
                    last_ident.clear();
                } else if (peek().is_ident()) {
                    last_ident = peek().text;
                }
                advance();
            }
            if (!last_ident.empty()) e->params.push_back(last_ident);
            expect_op(")");
        }
        expect_op("->");
        if (at_op("{")) {
            e->body = std::shared_ptr<Stmt>(parse_block().release());
        } else {
            e->operands.push_back(parse_expr());
        }
        return finish(e, start);
    }

    ExprPtr parse_expr()
    {
        if (lambda_ahead()) return parse_lambda();
        std::size_t start = pos_;
        ExprPtr lhs = parse_ternary();
        auto [op, n] = peek_operator();
        if (n > 0 && std::find(kAssignOps.begin(), kAssignOps.end(), op) != kAssignOps.end()) {
            for (std::size_t i = 0; i < n; ++i) advance();
            auto e = new_expr(ExprKind::Assign);
            e->text = op;
            e->operands = {lhs, parse_expr()};
            return finish(e, start);
        }
        return lhs;
    }

    ExprPtr parse_ternary()
    {
        std::size_t start = pos_;
        ExprPtr cond = parse_binary(3);
        if (accept_op("?")) {
            ExprPtr a = lambda_ahead() ? parse_lambda() : parse_ternary_branch();
            expect_op(":");
            ExprPtr b = lambda_ahead() ? parse_lambda() : parse_ternary();
            auto e = new_expr(ExprKind::Conditional);
            e->operands = {cond, a, b};
            return finish(e, start);
        }
        return cond;
    }

    ExprPtr parse_ternary_branch() { return parse_ternary(); }

    ExprPtr parse_binary(int min_prec)
    {
        std::size_t start = pos_;
        ExprPtr lhs = parse_unary();
        while (true) {
            auto [op, n] = peek_operator();
            int prec = n > 0 ? binary_precedence(op) : -1;
            if (prec < min_prec) break;
            for (std::size_t i = 0; i < n; ++i) advance();
            if (op == "instanceof") {
                auto e = new_expr(ExprKind::InstanceOf);
                accept_kw("final");
                std::size_t ts = pos_;
                e->type = parse_type();
                if (at_op("(")) {
                    // record pattern: keep verbatim
                    int depth = 0;
                    do {
                        if (at_op("(")) ++depth;
                        if (at_op(")")) --depth;
                        advance();
                    } while (depth > 0 && !at_end());
                    e->type = collapse_ws(text_of(range_from(ts)));
                }
                if (peek().is_ident()) e->text = advance().text;  // pattern binding
                e->operands = {lhs};
                lhs = finish(e, start);
                continue;
            }
            ExprPtr rhs = parse_binary(prec + 1);
            auto e = new_expr(ExprKind::Binary);
            e->text = op;
            e->operands = {lhs, rhs};
            lhs = finish(e, start);
        }
        return lhs;
    }

    bool cast_operand_start() const
    {
        const Token& t = peek();
        if (t.is_ident() || t.is_literal()) return true;
        if (t.kind == TokenKind::Keyword) {
            return t.text == "this" || t.text == "super" || t.text == "new" || t.text == "true" ||
                   t.text == "false" || t.text == "null" || t.text == "switch" || is_primitive(t);
        }
        return t.is_op("(") || t.is_op("!") || t.is_op("~");
    }

    ExprPtr parse_unary()
    {
        std::size_t start = pos_;
        const Token& t = peek();
        if (t.is_op("+") || t.is_op("-") || t.is_op("!") || t.is_op("~") || t.is_op("++") ||
            t.is_op("--")) {
            auto e = new_expr(ExprKind::Unary);
            e->text = advance().text;
            e->operands = {parse_unary()};
            return finish(e, start);
        }
        if (t.is_op("(") && !lambda_ahead()) {
            std::string type;
            bool primitive = is_primitive(peek(1));
            bool is_cast = attempt([&] {
                advance();
                type = parse_type();
                while (accept_op("&")) type += " & " + parse_type();
                expect_op(")");
                if (!primitive && !cast_operand_start()) fail("not a cast");
                if (primitive && !(cast_operand_start() || at_op("+") || at_op("-")))
                    fail("not a cast");
            });
            if (is_cast) {
                auto e = new_expr(ExprKind::Cast);
                e->type = type;
                e->operands = {lambda_ahead() ? parse_lambda() : parse_unary()};
                return finish(e, start);
            }
        }
        return parse_postfix(parse_primary(), start);
    }

    std::vector<ExprPtr> parse_arguments()
    {
        std::vector<ExprPtr> args;
        expect_op("(");
        if (!at_op(")")) {
            while (true) {
                args.push_back(parse_expr());
                if (!accept_op(",")) break;
            }
        }
        expect_op(")");
        return args;
    }

    ExprPtr parse_primary()
    {
        std::size_t start = pos_;
        const Token& t = peek();
        if (t.is_literal() || t.is_keyword("true") || t.is_keyword("false") || t.is_keyword("null")) {
            auto e = new_expr(ExprKind::Literal);
            e->text = advance().text;
            return finish(e, start);
        }
        if (t.is_keyword("this") || t.is_keyword("super")) {
            bool is_this = t.text == "this";
            advance();
            if (at_op("(")) {
                auto e = new_expr(ExprKind::Call);
                e->text = is_this ? "this" : "super";
                e->operands = parse_arguments();
                return finish(e, start);
            }
            return finish(new_expr(is_this ? ExprKind::This : ExprKind::Super), start);
        }
        if (t.is_keyword("new")) return parse_creator(nullptr, start);
        if (t.is_op("(")) {
            advance();
            ExprPtr inner = parse_expr();
            expect_op(")");
            if (!keep_parens_) return inner;
            auto e = new_expr(ExprKind::Paren);
            e->operands.push_back(inner);
            return finish(e, start);
        }
        if (t.is_keyword("switch")) {
            auto e = new_expr(ExprKind::SwitchExpr);
            e->body = std::shared_ptr<Stmt>(parse_switch().release());
            return finish(e, start);
        }
        if (is_primitive(t)) {
            std::string type = parse_type();
            if (accept_op("::")) {
                auto e = new_expr(ExprKind::MethodRef);
                e->type = type;
                e->text = accept_kw("new") ? "new" : expect_ident();
                return finish(e, start);
            }
            expect_op(".");
            expect_kw("class");
            auto e = new_expr(ExprKind::ClassLit);
            e->type = type;
            return finish(e, start);
        }
        if (t.is_op("<")) {
            // explicit generic invocation: <T>foo()
            skip_type_args();
            auto e = new_expr(ExprKind::Call);
            e->text = expect_ident();
            e->operands = parse_arguments();
            return finish(e, start);
        }
        if (t.is_ident()) {
            std::string name = advance().text;
            if (at_op("(")) {
                auto e = new_expr(ExprKind::Call);
                e->text = name;
                e->operands = parse_arguments();
                return finish(e, start);
            }
            // generic type before a method reference: List<String>::new
            if (at_op("<")) {
                std::size_t save = pos_;
                bool ok = attempt([&] {
                    skip_type_args();
                    if (!at_op("::")) fail("not a method reference");
                });
                if (ok) {
                    advance();
                    auto e = new_expr(ExprKind::MethodRef);
                    e->type = collapse_ws(text_of(range_from(start)));
                    e->type = e->type.substr(0, e->type.size() - 2);
                    e->text = accept_kw("new") ? "new" : expect_ident();
                    return finish(e, start);
                }
                pos_ = save;
            }
            auto e = new_expr(ExprKind::Name);
            e->text = name;
            return finish(e, start);
        }
        if (t.is_op("@")) {
            // annotated expression context (rare): keep verbatim
            parse_annotation();
            return parse_primary();
        }
        fail("expected expression");
    }

    ExprPtr parse_creator(ExprPtr outer, std::size_t start)
    {
        expect_kw("new");
        if (at_op("<")) skip_type_args();
        std::string type = parse_class_type_no_dims();
        if (at_op("[") || at_op("@")) {
            auto e = new_expr(ExprKind::NewArray);
            e->type = type;
            while (true) {
                while (at_op("@")) parse_annotation();
                if (!at_op("[")) break;
                advance();
                if (accept_op("]")) {
                    e->type += "[]";
                    continue;
                }
                e->operands.push_back(parse_expr());
                expect_op("]");
                e->type += "[]";
            }
            if (at_op("{")) e->operands.push_back(parse_array_init());
            return finish(e, start);
        }
        auto e = new_expr(ExprKind::New);
        e->type = type;
        e->target = std::move(outer);
        e->operands = parse_arguments();
        if (at_op("{")) {
            auto anon = std::make_shared<TypeDecl>();
            anon->kind = TypeKind::Anonymous;
            anon->name = type;
            anon->qualified = type;
            anon->binary_name = type;
            std::size_t bs = pos_;
            parse_class_body(*anon);
            anon->range = range_from(bs);
            for (auto& m : anon->methods) m->owner = anon.get();
            e->anon = std::move(anon);
        }
        return finish(e, start);
    }

    ExprPtr parse_postfix(ExprPtr cur, std::size_t start)
    {
        while (true) {
            if (at_op(".")) {
                const Token& n = peek(1);
                if (n.is_ident()) {
                    advance();
                    std::string name = advance().text;
                    if (at_op("(")) {
                        auto e = new_expr(ExprKind::Call);
                        e->text = name;
                        e->target = cur;
                        e->operands = parse_arguments();
                        cur = finish(e, start);
                    } else {
                        auto e = new_expr(ExprKind::FieldAccess);
                        e->text = name;
                        e->target = cur;
                        cur = finish(e, start);
                    }
                    continue;
                }
                if (n.is_op("<")) {
                    advance();
                    skip_type_args();
                    auto e = new_expr(ExprKind::Call);
                    e->text = expect_ident();
                    e->target = cur;
                    e->operands = parse_arguments();
                    cur = finish(e, start);
                    continue;
                }
                if (n.is_keyword("new")) {
                    advance();
                    cur = parse_creator(cur, start);
                    continue;
                }
                if (n.is_keyword("class")) {
                    advance();
                    advance();
                    auto e = new_expr(ExprKind::ClassLit);
                    e->type = collapse_ws(cur->source);
                    cur = finish(e, start);
                    continue;
                }
                if (n.is_keyword("this") || n.is_keyword("super")) {
                    advance();
                    std::string kw = advance().text;
                    if (kw == "super" && at_op("(")) {
                        auto e = new_expr(ExprKind::Call);
                        e->text = "super";
                        e->target = cur;
                        e->operands = parse_arguments();
                        cur = finish(e, start);
                        continue;
                    }
                    auto e = new_expr(ExprKind::FieldAccess);
                    e->text = kw;
                    e->target = cur;
                    cur = finish(e, start);
                    continue;
                }
                fail("expected member name");
            }
            if (at_op("[")) {
                if (peek(1).is_op("]")) {
                    // array type: T[].class or T[]::new
                    std::string type = collapse_ws(cur->source);
                    while (at_op("[") && peek(1).is_op("]")) {
                        advance();
                        advance();
                        type += "[]";
                    }
                    if (accept_op("::")) {
                        auto e = new_expr(ExprKind::MethodRef);
                        e->type = type;
                        e->text = accept_kw("new") ? "new" : expect_ident();
                        cur = finish(e, start);
                        continue;
                    }
                    expect_op(".");
                    expect_kw("class");
                    auto e = new_expr(ExprKind::ClassLit);
                    e->type = type;
                    cur = finish(e, start);
                    continue;
                }
                advance();
                auto e = new_expr(ExprKind::ArrayAccess);
                e->target = cur;
                e->operands = {parse_expr()};
                expect_op("]");
                cur = finish(e, start);
                continue;
            }
            if (at_op("::")) {
                advance();
                auto e = new_expr(ExprKind::MethodRef);
                e->target = cur;
                e->type = collapse_ws(cur->source);
                e->text = accept_kw("new") ? "new" : expect_ident();
                cur = finish(e, start);
                continue;
            }
            if (at_op("++") || at_op("--")) {
                auto e = new_expr(ExprKind::Postfix);
                e->text = advance().text;
                e->operands = {cur};
                cur = finish(e, start);
                continue;
            }
            return cur;
        }
    }
};

}  // namespace

CompilationUnit parse_compilation_unit(std::string path, std::string source)
{
    CompilationUnit unit;
    unit.path = std::move(path);
    unit.source = std::move(source);
    auto lexed = lex(unit.source);
    Parser p(unit.source, std::move(lexed.tokens));
    p.parse_unit(unit);
    return unit;
}

CompilationUnit parse_members(std::string source)
{
    CompilationUnit unit;
    unit.source = std::move(source);
    auto lexed = lex(unit.source);
    Parser p(unit.source, std::move(lexed.tokens));
    p.parse_member_list(unit);
    return unit;
}

ExprPtr parse_expression(std::string_view source, bool keep_parens)
{
    auto lexed = lex(source);
    Parser p(source, std::move(lexed.tokens));
    p.keep_parens_ = keep_parens;
    return p.parse_single_expression();
}

}  // namespace exbt::java
