#pragma once

#include "exbt/corpus.hpp"
#include "exbt/guardexpr.hpp"
#include "exbt/jmodel.hpp"
#include "exbt/metrics.hpp"
#include "exbt/prompting.hpp"
#include "exbt/stacktrace.hpp"

#include <json.hpp>

#include <string>
#include <string_view>
#include <vector>

namespace exbt {

using nlohmann::json;

json to_json(const MethodId& m);
MethodId method_id_from_json(const json& j);

json to_json(const ThrowSite& s);
ThrowSite throw_site_from_json(const json& j);

json to_json(const Frame& f);
Frame frame_from_json(const json& j);

json to_json(const StackTrace& t);
StackTrace trace_from_json(const json& j);

json to_json(const GuardExpression& g);
GuardExpression guard_from_json(const json& j);

json to_json(const TracePoolEntry& e);
json to_json(const TracePool& p);
TracePool pool_from_json(const json& j);

json to_json(const PromptBundle& b);
PromptBundle bundle_from_json(const json& j);

json to_json(const NoMatch& n);

json to_json(const CorpusExample& e);
CorpusExample corpus_example_from_json(const json& j);

/// Absent optional fields are written as null.
json to_json(const CandidateReport& r);
CandidateReport candidate_report_from_json(const json& j);
json to_json(const AggregateReport& a);

/// One compact JSON document per line.
std::string write_jsonl(const std::vector<json>& rows);
std::vector<json> read_jsonl(std::string_view text);

std::string write_corpus(const std::vector<CorpusExample>& c);
std::vector<CorpusExample> read_corpus(std::string_view text);

}  // namespace exbt
