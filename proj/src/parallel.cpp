#include "attrloss/parallel.hpp"

#include <atomic>
#include <cstdlib>

namespace attrloss {

namespace {

int read_env_workers() {
  const char* env = std::getenv("ATTRLOSS_THREADS");
  if (env == nullptr) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

std::atomic<int>& worker_slot() {
  static std::atomic<int> workers{read_env_workers()};
  return workers;
}

}  // namespace

int worker_count() { return worker_slot().load(std::memory_order_relaxed); }

void set_worker_count(int n) { worker_slot().store(n >= 1 ? n : 1, std::memory_order_relaxed); }

}  // namespace attrloss
