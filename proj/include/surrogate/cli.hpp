#pragma once

#include <json.hpp>
#include <ostream>
#include <string>
#include <vector>

#include "surrogate/criteria.hpp"
#include "surrogate/gaussian.hpp"

namespace surrogate::cli {

/// Exit codes of `run`.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailed = 1;  // criterion not satisfied or identification error
inline constexpr int kExitUsage = 2;   // bad flags, unreadable or malformed input

/// Runs one command line (`args[0]` is the program name). Structured results
/// go to `out`; diagnostics and error objects go to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

nlohmann::json to_json(const criteria::CriterionCertificate& cert);
nlohmann::json to_json(const gaussian::IdentificationResult& res);
nlohmann::json to_json(const criteria::RoleAssignment& r);
nlohmann::json to_json(const criteria::DoubleRoleAssignment& r);

/// The fixture self-test; writes its scratch files under `dir`.
int selftest(const std::string& dir, std::uint64_t seed, std::ostream& out);

}  // namespace surrogate::cli
