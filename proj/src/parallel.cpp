#include "mobility/parallel.hpp"

#include <charconv>
#include <cstdlib>
#include <string_view>

#include "mobility/errors.hpp"

namespace mobility {

int resolve_jobs(int requested) {
  if (requested > 0) return requested;
  if (requested < 0) throw ParameterError("jobs must be >= 1");
  if (const char* env = std::getenv("MOBILITYLAB_JOBS"); env && *env) {
    std::string_view text(env);
    int value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || value < 1)
      throw ParameterError("MOBILITYLAB_JOBS must be a positive integer");
    return value;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace mobility
