#include "se3opt/assignment.hpp"

#include <algorithm>
#include <numeric>
#include <regex>
#include <sstream>

#include "se3opt/error.hpp"

namespace se3opt {

Assignment Assignment::identity(int n) {
  Assignment a;
  a.perm.resize(static_cast<std::size_t>(n));
  std::iota(a.perm.begin(), a.perm.end(), 0);
  return a;
}

Assignment Assignment::parse(const std::string& text) {
  Assignment a;
  if (text.find('(') != std::string::npos) {
    const std::regex pair(R"(\(\s*(\d+)\s*,\s*(\d+)\s*\))");
    std::vector<std::pair<int, int>> pairs;
    for (auto it = std::sregex_iterator(text.begin(), text.end(), pair); it != std::sregex_iterator(); ++it) {
      pairs.emplace_back(std::stoi((*it)[1]), std::stoi((*it)[2]));
    }
    a.perm.assign(pairs.size(), -1);
    for (const auto& [i, j] : pairs) {
      if (i < 1 || i > static_cast<int>(pairs.size())) throw ConfigError("assignment body index out of range: " + text);
      a.perm[static_cast<std::size_t>(i - 1)] = j - 1;
    }
  } else {
    std::istringstream is(text);
    std::string tok;
    while (is >> tok) {
      tok.erase(std::remove(tok.begin(), tok.end(), ','), tok.end());
      if (tok.empty()) continue;
      try {
        a.perm.push_back(std::stoi(tok) - 1);
      } catch (const std::exception&) {
        throw ConfigError("assignment entry is not an integer: '" + tok + "'");
      }
    }
  }
  a.validate();
  return a;
}

bool Assignment::is_valid() const {
  std::vector<bool> seen(perm.size(), false);
  for (int j : perm) {
    if (j < 0 || j >= size() || seen[static_cast<std::size_t>(j)]) return false;
    seen[static_cast<std::size_t>(j)] = true;
  }
  return true;
}

void Assignment::validate() const {
  if (perm.empty()) throw ConfigError("assignment is empty");
  if (!is_valid()) throw ConfigError("assignment is not a permutation: " + to_string());
}

std::string Assignment::to_string() const {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < perm.size(); ++i) {
    if (i) os << ',';
    os << '(' << i + 1 << ',' << perm[i] + 1 << ')';
  }
  os << '}';
  return os.str();
}

std::vector<Assignment> all_assignments(int n, bool pin_first) {
  std::vector<Assignment> out;
  Assignment a = Assignment::identity(n);
  const auto first = a.perm.begin() + (pin_first && n > 0 ? 1 : 0);
  do {
    out.push_back(a);
  } while (std::next_permutation(first, a.perm.end()));
  return out;
}

}  // namespace se3opt
