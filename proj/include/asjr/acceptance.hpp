#pragma once

#include <cstdint>
#include <vector>

namespace asjr {

/* Executes the numbered acceptance gates (1..9; all when `gates` is empty)
 * on the virtual clock with compressed protocol durations, printing one
 * PASS/FAIL line per gate to stdout and progress to stderr. Tolerances are
 * pinned in the implementation. Returns the number of failed gates. */
int run_acceptance(const std::vector<int>& gates, std::uint64_t seed);

}  // namespace asjr
