#include "afop/parallel.hpp"

namespace afop {

namespace {
std::atomic<int> g_max_threads{1};  // conservative default keeps runs single-core
}

void set_max_threads(int n) {
  if (n <= 0) n = static_cast<int>(std::thread::hardware_concurrency());
  g_max_threads.store(n < 1 ? 1 : n);
}

int max_threads() { return g_max_threads.load(); }

}  // namespace afop
