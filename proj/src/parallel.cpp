#include "npf/parallel.hpp"

#include <cstdlib>
#include <string>

namespace npf {

std::size_t default_worker_count() {
  const char* env = std::getenv("NPF_WORKERS");
  if (env == nullptr) return 1;
  try {
    const long v = std::stol(env);
    return v >= 1 ? static_cast<std::size_t>(v) : 1;
  } catch (const std::exception&) {
    return 1;
  }
}

}  // namespace npf
