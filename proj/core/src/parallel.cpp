#include "modeconnect/parallel.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>
#include <vector>

namespace mc {

int thread_count() {
  static const int n = [] {
    if (const char* env = std::getenv("MODECONNECT_THREADS")) {
      const int v = std::atoi(env);
      if (v >= 1) return v;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
  }();
  return n;
}

void parallel_for_rows(int rows, std::size_t work_per_row, const std::function<void(int, int)>& body) {
  const int threads = thread_count();
  // Threading only pays for itself on chunks of a few hundred kiloflops.
  const std::size_t total_work = work_per_row * static_cast<std::size_t>(rows);
  if (threads <= 1 || rows < 2 || total_work < 4u << 20) {
    body(0, rows);
    return;
  }
  const int chunks = std::min(threads, rows);
  std::vector<std::thread> workers;
  workers.reserve(chunks - 1);
  const int per = rows / chunks, extra = rows % chunks;
  int begin = 0;
  for (int c = 0; c < chunks; ++c) {
    const int len = per + (c < extra ? 1 : 0);
    const int b = begin, e = begin + len;
    begin = e;
    if (c == chunks - 1)
      body(b, e);
    else
      workers.emplace_back([&body, b, e] { body(b, e); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace mc
