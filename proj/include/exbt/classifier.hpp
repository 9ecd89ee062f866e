#pragma once

#include "exbt/java/ast.hpp"
#include "exbt/jmodel.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace exbt {

enum class TestKind { EBT, NonEBT };

enum class EbtPattern { AnnotationExpected, AssertThrows, ExpectedExceptionRule, TryFailCatch, None };

std::string_view test_kind_name(TestKind k);
std::string_view pattern_name(EbtPattern p);

struct TestMethod {
    MethodId id;
    std::string body_text;  // verbatim method source, annotations included
    TestKind kind = TestKind::NonEBT;
    EbtPattern pattern = EbtPattern::None;
    std::optional<std::string> expected_exception;

    bool operator==(const TestMethod&) const = default;
};

/// True when the method carries @Test, @ParameterizedTest or @RepeatedTest.
bool is_test_method(const java::MethodDecl& m);

/// Pattern detection on an already parsed method. Order: AnnotationExpected,
/// AssertThrows, ExpectedExceptionRule, TryFailCatch. Throws Error(NotATest).
TestMethod classify_decl(const java::MethodDecl& m, std::string_view method_source);

/// Parses and classifies a single method's source text.
TestMethod classify_test(std::string_view method_source);

struct SuiteSplit {
    std::vector<TestMethod> ebts;
    std::vector<TestMethod> nonebts;
};

/// Classifies every test method in the repo's test files, in (file, line) order.
SuiteSplit split_test_suite(const RepoContext& ctx);

/// Throws Error(NotEBT) for non-exceptional tests.
std::string extract_expected_exception(const TestMethod& t);

}  // namespace exbt
