#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "qnk/core.hpp"

namespace qnk {

struct VerifyParams {
  Index n = 20;
  double kappa = 100;
  unsigned seed = 0;
  int memory = 5;
};

struct VerifyCheck {
  std::string name;
  bool pass = false;
  double measured = 0;  // deviation that was compared against tol (0 for boolean checks)
  double tol = 0;
};

struct VerifyReport {
  std::string suite;
  VerifyParams params;
  std::vector<VerifyCheck> checks;

  bool pass() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }

  nlohmann::json to_json() const;
};

std::vector<std::string> suite_names();

/// Parameters each suite runs with when the caller does not override them;
/// chosen to match the instance sizes the properties are stated at.
VerifyParams default_params(const std::string& suite);

VerifyReport run_suite(const std::string& suite, const VerifyParams& params);

/// Module-invariant identifiers each suite certifies. The union over all
/// suites must cover every identifier in all_invariant_ids().
const std::map<std::string, std::vector<std::string>>& suite_coverage();
std::vector<std::string> all_invariant_ids();

}  // namespace qnk
