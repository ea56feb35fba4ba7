#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace udseq {

// Base class for all library failures.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// An index, horizon or checkpoint outside its valid range.
class RangeError : public Error {
public:
  using Error::Error;
};

// A function, kernel or map is undefined at a required point.
class DomainError : public Error {
public:
  using Error::Error;
};

// Two objects that must share a metric space do not.
class SpaceMismatchError : public Error {
public:
  using Error::Error;
};

// A weight or total mass violates its contract (negative weight,
// non-probability input, mismatched piece mass).
class MassError : public Error {
public:
  using Error::Error;
};

// Input exceeds a configured solver size cap.
class CapacityError : public Error {
public:
  using Error::Error;
};

// Mismatched list lengths or malformed structure.
class ShapeError : public Error {
public:
  using Error::Error;
};

// A construction collapsed (zero normalizer, empty anchor set).
class DegenerateError : public Error {
public:
  using Error::Error;
};

// Malformed files, schema violations, invalid metric axioms on input.
class InputError : public Error {
public:
  using Error::Error;
};

struct SchemaViolation {
  std::string path;     // JSON-path style location, e.g. "atoms[0][1]"
  std::string message;
};

class SchemaError : public InputError {
public:
  SchemaError(const std::string& file, std::vector<SchemaViolation> violations);
  const std::vector<SchemaViolation>& violations() const { return violations_; }

private:
  std::vector<SchemaViolation> violations_;
};

// The materialized horizon is too short to realize a requested bound.
// `achieved` reports the best value reachable within the horizon.
class HorizonError : public Error {
public:
  HorizonError(const std::string& what, double achieved)
      : Error(what), achieved_(achieved) {}
  double achieved() const { return achieved_; }

private:
  double achieved_;
};

// No tightness certificate exists at the requested level; `best_bound`
// is the smallest escape bound achievable with the materialized sets.
class NoCertificateError : public Error {
public:
  NoCertificateError(const std::string& what, double best_bound)
      : Error(what), best_bound_(best_bound) {}
  double best_bound() const { return best_bound_; }

private:
  double best_bound_;
};

// A partition does not cover a support point it must cover.
class CoverageError : public Error {
public:
  using Error::Error;
};

}  // namespace udseq
