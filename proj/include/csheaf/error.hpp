#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace csheaf {

enum class ErrorKind {
  structural,         // dangling or duplicate identifiers
  validation,         // a law violation, carries a report
  no_terminal,
  not_terminal,
  sieve_explosion,
  subcanonicity_violation,
  size_bound,
  shape_mismatch,
  not_mono,
  not_epi,
  not_strong_mono,
  unknown_id,
  internal_soundness, // a certified output failed its certificate
  parse,
  schema,
  usage,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::structural: return "StructuralError";
    case ErrorKind::validation: return "ValidationError";
    case ErrorKind::no_terminal: return "NoTerminal";
    case ErrorKind::not_terminal: return "NotTerminal";
    case ErrorKind::sieve_explosion: return "SieveExplosion";
    case ErrorKind::subcanonicity_violation: return "SubcanonicityViolation";
    case ErrorKind::size_bound: return "SizeBoundExceeded";
    case ErrorKind::shape_mismatch: return "ShapeMismatch";
    case ErrorKind::not_mono: return "NotMono";
    case ErrorKind::not_epi: return "NotEpi";
    case ErrorKind::not_strong_mono: return "NotStrongMono";
    case ErrorKind::unknown_id: return "UnknownId";
    case ErrorKind::internal_soundness: return "InternalSoundnessError";
    case ErrorKind::parse: return "ParseError";
    case ErrorKind::schema: return "SchemaError";
    case ErrorKind::usage: return "UsageError";
  }
  return "Error";
}

/// One failed check. `structural` separates malformed references from law
/// violations; `witness` is the smallest offending tuple of identifiers.
struct Violation {
  std::string kind;
  std::vector<std::string> witness;
  std::string message;
  bool structural = false;

  friend bool operator==(const Violation&, const Violation&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  bool has_structural() const {
    for (const auto& v : violations)
      if (v.structural) return true;
    return false;
  }

  std::size_t count(const std::string& kind) const {
    std::size_t n = 0;
    for (const auto& v : violations)
      if (v.kind == kind) ++n;
    return n;
  }

  void add(std::string kind, std::vector<std::string> witness, std::string message = {},
           bool structural = false) {
    violations.push_back({std::move(kind), std::move(witness), std::move(message), structural});
  }

  void structural(std::string kind, std::vector<std::string> witness, std::string message = {}) {
    add(std::move(kind), std::move(witness), std::move(message), true);
  }

  void merge(const ValidationReport& other) {
    violations.insert(violations.end(), other.violations.begin(), other.violations.end());
  }
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  Error(ErrorKind kind, const std::string& what, ValidationReport report)
      : std::runtime_error(what), kind_(kind), report_(std::move(report)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::optional<ValidationReport>& report() const noexcept { return report_; }

 private:
  ErrorKind kind_;
  std::optional<ValidationReport> report_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void soundness_check(bool cond, const std::string& what) {
  if (!cond) throw Error(ErrorKind::internal_soundness, what);
}

/// Guardrails on exhaustive enumeration.
struct Limits {
  std::size_t max_objects = 64;
  std::size_t max_morphisms = 4096;
  std::size_t max_sieves = std::size_t{1} << 16;
  int max_fsite_n = 4;
};

}  // namespace csheaf
