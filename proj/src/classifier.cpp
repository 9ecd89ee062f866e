#include "exbt/classifier.hpp"

#include "exbt/error.hpp"
#include "exbt/java/parser.hpp"
#include "exbt/util.hpp"

#include <algorithm>

namespace exbt {

using namespace java;

std::string_view test_kind_name(TestKind k)
{
    return k == TestKind::EBT ? "EBT" : "NonEBT";
}

std::string_view pattern_name(EbtPattern p)
{
    switch (p) {
    case EbtPattern::AnnotationExpected: return "AnnotationExpected";
    case EbtPattern::AssertThrows: return "AssertThrows";
    case EbtPattern::ExpectedExceptionRule: return "ExpectedExceptionRule";
    case EbtPattern::TryFailCatch: return "TryFailCatch";
    case EbtPattern::None: return "None";
    }
    return "None";
}

namespace {

// assertion holders we accept as qualifiers of assertThrows / fail
bool is_assert_holder(const ExprPtr& target)
{
    if (!target) return true;
    if (target->kind != ExprKind::Name && target->kind != ExprKind::FieldAccess) return false;
    std::string last = simple_type_name(target->source);
    return last == "Assertions" || last == "Assert" || last == "TestCase";
}

std::optional<std::string> class_literal(const ExprPtr& e)
{
    if (e && e->kind == ExprKind::ClassLit) return e->type;
    return std::nullopt;
}

std::optional<std::string> annotation_expected(const MethodDecl& m)
{
    const Annotation* a = m.annotation("Test");
    if (!a) return std::nullopt;
    for (const auto& el : a->elements)
        if (el.name == "expected") return class_literal(el.value);
    return std::nullopt;
}

std::optional<std::string> first_call_match(const MethodDecl& m,
                                            const std::function<std::optional<std::string>(const Expr&)>& fn)
{
    std::optional<std::string> found;
    visit_method(
        m,
        [&](const Expr& e) {
            if (!found && e.kind == ExprKind::Call) found = fn(e);
        },
        [](const Stmt&) {});
    return found;
}

std::optional<std::string> assert_throws(const MethodDecl& m)
{
    return first_call_match(m, [](const Expr& e) -> std::optional<std::string> {
        if (e.text != "assertThrows" && e.text != "assertThrowsExactly") return std::nullopt;
        if (!is_assert_holder(e.target) || e.operands.empty()) return std::nullopt;
        return class_literal(e.operands[0]);
    });
}

std::optional<std::string> expected_rule(const MethodDecl& m)
{
    return first_call_match(m, [](const Expr& e) -> std::optional<std::string> {
        if (e.text != "expect" || !e.target || e.operands.size() != 1) return std::nullopt;
        return class_literal(e.operands[0]);
    });
}

bool contains_fail_call(const Stmt& s)
{
    bool found = false;
    visit_stmt(
        s,
        [&](const Expr& e) {
            if (e.kind == ExprKind::Call && e.text == "fail" && is_assert_holder(e.target)) found = true;
        },
        [](const Stmt&) {});
    return found;
}

std::optional<std::string> try_fail_catch(const MethodDecl& m)
{
    std::optional<std::string> found;
    visit_method(
        m, [](const Expr&) {},
        [&](const Stmt& s) {
            if (found || s.kind != StmtKind::Try || s.children.empty() || !s.then_branch) return;
            if (!contains_fail_call(*s.then_branch)) return;
            std::string type = s.children[0]->catch_type;
            if (auto bar = type.find('|'); bar != std::string::npos) type = trim(type.substr(0, bar));
            found = type;
        });
    return found;
}

}  // namespace

bool is_test_method(const MethodDecl& m)
{
    return m.annotation("Test") || m.annotation("ParameterizedTest") || m.annotation("RepeatedTest");
}

TestMethod classify_decl(const MethodDecl& m, std::string_view method_source)
{
    if (!is_test_method(m)) throw Error(ErrorCode::NotATest, "method " + m.name + " has no test annotation");
    TestMethod t;
    t.id.name = m.name;
    t.id.param_arity = static_cast<int>(m.params.size());
    t.id.decl_line = m.name_line;
    t.body_text = std::string(method_source);

    struct Probe {
        EbtPattern pattern;
        std::optional<std::string> (*fn)(const MethodDecl&);
    };
    static const Probe probes[] = {
        {EbtPattern::AnnotationExpected, annotation_expected},
        {EbtPattern::AssertThrows, assert_throws},
        {EbtPattern::ExpectedExceptionRule, expected_rule},
        {EbtPattern::TryFailCatch, try_fail_catch},
    };
    for (const auto& p : probes) {
        if (auto ex = p.fn(m)) {
            t.kind = TestKind::EBT;
            t.pattern = p.pattern;
            t.expected_exception = *ex;
            return t;
        }
    }
    return t;
}

TestMethod classify_test(std::string_view method_source)
{
    CompilationUnit u = parse_members(std::string(method_source));
    const TypeDecl& holder = *u.types.at(0);
    if (holder.methods.empty()) throw Error(ErrorCode::NotATest, "no method in input");
    const MethodDecl& m = *holder.methods[0];
    TestMethod t = classify_decl(m, u.text(m.range));
    t.id.fqn = "<snippet>";
    return t;
}

SuiteSplit split_test_suite(const RepoContext& ctx)
{
    SuiteSplit out;
    for (const auto& mi : ctx.methods()) {
        if (!mi.in_test || mi.decl->kind != MethodKind::Method || !is_test_method(*mi.decl)) continue;
        TestMethod t = classify_decl(*mi.decl, ctx.unit_of(mi).text(mi.decl->range));
        t.id = mi.id;
        (t.kind == TestKind::EBT ? out.ebts : out.nonebts).push_back(std::move(t));
    }
    auto by_pos = [](const TestMethod& a, const TestMethod& b) { return a.id < b.id; };
    std::stable_sort(out.ebts.begin(), out.ebts.end(), by_pos);
    std::stable_sort(out.nonebts.begin(), out.nonebts.end(), by_pos);
    return out;
}

std::string extract_expected_exception(const TestMethod& t)
{
    if (t.kind != TestKind::EBT || !t.expected_exception)
        throw Error(ErrorCode::NotEBT, "test " + t.id.name + " is not an exceptional behavior test");
    return *t.expected_exception;
}

}  // namespace exbt
