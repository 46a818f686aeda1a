// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "specbridge/diagnostics.hpp"
#include "specbridge/nbe.hpp"
#include "specbridge/network.hpp"
#include "specbridge/typecheck.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace specbridge::cli {

/// Raw `name=value` bindings as given on the command line.
struct Bindings {
  std::vector<std::string> networks;
  std::vector<std::string> datasets;
  std::vector<std::string> parameters;
};

struct ResourceEnv {
  std::map<std::string, Network> networks;
  /// Parameter and dataset values by declaration name.
  std::map<std::string, GroundValue> values;
  std::map<std::string, std::filesystem::path> networkPaths;
  std::map<std::string, std::filesystem::path> datasetPaths;
  std::map<std::string, std::string> parameterText;
};

/// Validates every binding against the program's declarations. Throws
/// ResourceError with ids invalid-binding, extra-resource, unbound-resource
/// (only when `requireAll`), missing-resource, resource-shape-mismatch and
/// ill-typed-resource.
ResourceEnv bindResources(const Bindings& bindings, const TypedProgram& tp, bool requireAll = true);

/// Throws ResourceError("unbound-resource") naming the first declared
/// network, dataset or parameter without a binding.
void requireAllBound(const ResourceEnv& env, const TypedProgram& tp);

/// Value of JSON `j` at a synonym-free declared type. Numbers may be JSON
/// integers, decimal JSON numbers or rational strings ("1/3", "0.1").
GroundValue valueAtType(const nlohmann::json& j, const TypePtr& type, const std::string& name);

/// {"error": id, "message": ..., "line"/"column" when known, "expected"/"actual" for type errors}.
nlohmann::json errorJson(const Error& e);

/// Runs the command line `args` (without the program name). Results go to
/// `out` as JSON, diagnostics to `err`. Returns the process exit code:
/// 0 success, 1 falsified property, stale cache or off-road run, 2 usage
/// or compile error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace specbridge::cli
