#include "exbt/stages.hpp"

#include <mutex>

namespace exbt {

namespace {

std::mutex& counts_mutex()
{
    static std::mutex m;
    return m;
}

std::map<std::string, long>& counts()
{
    static std::map<std::string, long> c;
    return c;
}

}  // namespace

void count_stage(std::string_view stage, long n)
{
    std::lock_guard lock(counts_mutex());
    counts()[std::string(stage)] += n;
}

std::map<std::string, long> stage_counts()
{
    std::lock_guard lock(counts_mutex());
    return counts();
}

void reset_stage_counts()
{
    std::lock_guard lock(counts_mutex());
    counts().clear();
}

}  // namespace exbt
