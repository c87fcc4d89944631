#pragma once

#include <string>
#include <vector>

namespace se3opt {

/// perm[i] is the slot assigned to body i (0-based). Printed 1-based as in
/// {(1,1),(2,5),...}.
struct Assignment {
  std::vector<int> perm;

  static Assignment identity(int n);

  /// Parses "1 5 2 3 4" or "{(1,1),(2,5),(3,2),(4,3),(5,4)}" (1-based).
  static Assignment parse(const std::string& text);

  int size() const { return static_cast<int>(perm.size()); }
  int operator[](int i) const { return perm[static_cast<std::size_t>(i)]; }
  bool is_valid() const;
  /// Throws ConfigError unless perm is a bijection on 0..n-1.
  void validate() const;
  std::string to_string() const;

  bool operator==(const Assignment& o) const = default;
  auto operator<=>(const Assignment& o) const = default;
};

/// All permutations of n slots in lexicographic order; with `pin_first`, body 0
/// stays on slot 0.
std::vector<Assignment> all_assignments(int n, bool pin_first = false);

}  // namespace se3opt
