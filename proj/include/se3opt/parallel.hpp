#pragma once

#include <cstddef>
#include <functional>

namespace se3opt {

/// Runs independent index-addressed tasks on a bounded worker pool. Results must
/// be written to per-index slots by the task; exceptions are collected and the
/// one with the lowest index is rethrown after all tasks finish, so failures
/// are reported identically regardless of scheduling.
class Executor {
 public:
  /// jobs <= 0 selects the number of available cores.
  explicit Executor(int jobs = 0);

  int jobs() const { return jobs_; }
  void for_each(std::size_t n, const std::function<void(std::size_t)>& task) const;

  static int available_cores();

 private:
  int jobs_;
};

}  // namespace se3opt
