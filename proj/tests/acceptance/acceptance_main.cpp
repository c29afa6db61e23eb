#include <cstdint>
#include <cstdlib>

#include "asjr/acceptance.hpp"

int main() {
  std::uint64_t seed = 1;
  if (const char* env = std::getenv("ABFT_SEED"))
    seed = std::strtoull(env, nullptr, 10);
  return asjr::run_acceptance({}, seed) == 0 ? 0 : 1;
}
