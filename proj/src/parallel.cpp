#include "se3opt/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

#include <tbb/parallel_for.h>
#include <tbb/task_arena.h>

namespace se3opt {

Executor::Executor(int jobs) : jobs_(jobs > 0 ? jobs : available_cores()) {}

int Executor::available_cores() {
  const int n = tbb::this_task_arena::max_concurrency();
  return n > 0 ? n : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

void Executor::for_each(std::size_t n, const std::function<void(std::size_t)>& task) const {
  std::vector<std::exception_ptr> errors(n);
  auto guarded = [&](std::size_t i) {
    try {
      task(i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };
  if (jobs_ == 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    tbb::task_arena arena(std::min(jobs_, available_cores()));
    arena.execute([&] {
      tbb::parallel_for(std::size_t{0}, n, [&](std::size_t i) { guarded(i); });
    });
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace se3opt
