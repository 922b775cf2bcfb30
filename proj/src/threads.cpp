#include "gcmm/threads.hpp"

#include <atomic>
#include <cstdlib>
#include <thread>
#include <vector>

namespace gcmm {

namespace {

int default_threads() {
  if (const char* env = std::getenv("GCMM_THREADS")) {
    int n = std::atoi(env);
    if (n > 0) return n;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

int g_threads = 0;  // 0 means "not set, use default"

}  // namespace

void set_num_threads(int n) { g_threads = n > 0 ? n : 0; }

int num_threads() { return g_threads > 0 ? g_threads : default_threads(); }

void parallel_blocks(std::size_t n, std::size_t block_size,
                     const std::function<void(std::size_t, std::size_t, std::size_t)>& fn) {
  if (n == 0) return;
  if (block_size == 0) block_size = 1;
  const std::size_t blocks = (n + block_size - 1) / block_size;
  const int workers = num_threads();

  auto run_block = [&](std::size_t b) {
    std::size_t begin = b * block_size;
    std::size_t end = begin + block_size < n ? begin + block_size : n;
    fn(b, begin, end);
  };

  if (workers <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) run_block(b);
    return;
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t b = next.fetch_add(1);
      if (b >= blocks) return;
      run_block(b);
    }
  };

  std::size_t spawn = static_cast<std::size_t>(workers) - 1;
  if (spawn > blocks - 1) spawn = blocks - 1;
  std::vector<std::thread> pool;
  pool.reserve(spawn);
  for (std::size_t i = 0; i < spawn; ++i) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
}

}  // namespace gcmm
