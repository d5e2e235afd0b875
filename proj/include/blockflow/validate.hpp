#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "blockflow/catalog.hpp"
#include "blockflow/model.hpp"

namespace blockflow {

enum class Severity { Error, Warning };

// Check codes (stable contract):
//   E001 unknown block type
//   E002 unknown port on a known block
//   E003 domain mismatch across a connection
//   E004 missing required parameter
//   E005 parameter out of range
//   E006 physical network without a Solver Configuration block
//   E007 connection endpoint references a block absent from the model
//   E009 signal input port with fan-in > 1
//   W001 required port left unconnected
//   W002 unknown parameter name
struct Diagnostic {
  std::string code;
  Severity severity = Severity::Error;
  std::string subject;
  std::string message;
  std::string suggestion;
};

Severity severity_for_code(std::string_view code);

// Full static sweep; diagnostics sorted by (severity, code, subject).
// An empty list means the model passes. Problems are data, not failures.
std::vector<Diagnostic> validate(const SystemModel& model, const Catalog& catalog);

// True iff validate() yields no Error-severity diagnostics.
bool is_executable(const SystemModel& model, const Catalog& catalog);

// Candidate with minimum edit distance if within max(2, ceil(|needle|/4)).
std::optional<std::string> nearest_name(std::string_view needle,
                                        std::span<const std::string> candidates);

}  // namespace blockflow
