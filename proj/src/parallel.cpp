#include "eaglass/parallel.hpp"

#include <cstdlib>
#include <string>

#include "eaglass/error.hpp"

namespace eaglass {

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EAGLASS_WORKERS"); env != nullptr && *env != '\0') {
    try {
      const int n = std::stoi(env);
      if (n > 0) return n;
    } catch (const std::exception&) {
    }
    throw ConfigError("EAGLASS_WORKERS must be a positive integer, got '" + std::string(env) + "'");
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

}  // namespace eaglass
