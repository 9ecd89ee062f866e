#pragma once

#include <map>
#include <string>
#include <string_view>

namespace exbt {

// Process-wide counters recording which pipeline stages ran. The sweep copies
// them into its manifest.
void count_stage(std::string_view stage, long n = 1);
std::map<std::string, long> stage_counts();
void reset_stage_counts();

}  // namespace exbt
