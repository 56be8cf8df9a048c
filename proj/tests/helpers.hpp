#pragma once

#include <string>
#include <vector>

#include "nonprob/data.hpp"

namespace test_helpers {

inline nonprob::CovariateSchema gender_employment_schema() {
  return nonprob::CovariateSchema({
      {"gender", {"male", "female"}},
      {"employment", {"employed", "unemployed", "retired"}},
  });
}

inline nonprob::CovariateSchema two_by_two_schema() {
  return nonprob::CovariateSchema({
      {"a", {"a0", "a1"}},
      {"b", {"b0", "b1"}},
  });
}

inline nonprob::CovariateSchema single_var_schema(int levels) {
  std::vector<std::string> names;
  for (int i = 0; i < levels; ++i) names.push_back("l" + std::to_string(i));
  return nonprob::CovariateSchema({{"v", names}});
}

}  // namespace test_helpers
