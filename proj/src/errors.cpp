#include "udseq/errors.hpp"

#include <sstream>

namespace udseq {

namespace {
std::string format_schema(const std::string& file,
                          const std::vector<SchemaViolation>& violations) {
  std::ostringstream os;
  os << file << ": " << violations.size() << " schema violation(s)";
  for (const auto& v : violations) os << "\n  " << v.path << ": " << v.message;
  return os.str();
}
}  // namespace

SchemaError::SchemaError(const std::string& file,
                         std::vector<SchemaViolation> violations)
    : InputError(format_schema(file, violations)), violations_(std::move(violations)) {}

}  // namespace udseq
