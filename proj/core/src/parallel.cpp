#include "gossipfield/parallel.hpp"

#include <cstdlib>
#include <string>

namespace gossipfield {

std::size_t worker_threads() {
  if (const char* env = std::getenv("GOSSIPFIELD_THREADS")) {
    try {
      const long value = std::stol(env);
      if (value > 0) return static_cast<std::size_t>(value);
    } catch (const std::exception&) {
      // Unparseable values fall back to the hardware count.
    }
  }
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

}  // namespace gossipfield
