#include "ne3/errors.hpp"
#include "ne3/planners.hpp"

namespace ne3::planners {

SearchResult exhaustive_search(std::span<const double> values) {
  if (values.empty()) throw ConfigError("exhaustive search over an empty class");
  SearchResult best{0, values[0]};
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (values[i] > best.value) best = {i, values[i]};
  }
  return best;
}

SearchResult exhaustive_search(std::span<const Policy> policies, const std::function<double(const Policy&)>& objective) {
  std::vector<double> values;
  values.reserve(policies.size());
  for (const auto& p : policies) values.push_back(objective(p));
  return exhaustive_search(values);
}

}  // namespace ne3::planners
