#pragma once

#include <sstream>
#include <stdexcept>
#include <string>

namespace calico {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CALICO_ERROR_KIND(NAME)          \
  class NAME : public Error {            \
   public:                               \
    using Error::Error;                  \
  };

CALICO_ERROR_KIND(DimensionError)    // shape/extent contract violations
CALICO_ERROR_KIND(NumericError)      // NaN/Inf at an op boundary
CALICO_ERROR_KIND(ConfigError)       // invalid model/projection configuration
CALICO_ERROR_KIND(PromptError)       // placeholder/identifier mismatches
CALICO_ERROR_KIND(AssemblyError)     // token/slot bookkeeping mismatches
CALICO_ERROR_KIND(ParseError)        // malformed files or token grammar
CALICO_ERROR_KIND(CodecError)        // RLE/image payload decode failures
CALICO_ERROR_KIND(BindingError)      // span/mask count mismatches
CALICO_ERROR_KIND(InputError)        // bad op inputs (non-binary targets, ...)
CALICO_ERROR_KIND(TrainingError)     // loss/step/divergence failures
CALICO_ERROR_KIND(MetricError)       // metric preconditions (empty records, ...)
CALICO_ERROR_KIND(MappingError)      // cyclic category mappings
CALICO_ERROR_KIND(CurationError)     // allowlist rows outside candidates
CALICO_ERROR_KIND(CheckpointError)   // checkpoint serialization failures
CALICO_ERROR_KIND(EvalError)         // non-finite objective during grad check
CALICO_ERROR_KIND(IoError)           // file system failures

#undef CALICO_ERROR_KIND

namespace detail {
inline void cat_into(std::ostringstream&) {}
template <typename T, typename... Rest>
void cat_into(std::ostringstream& os, const T& v, const Rest&... rest) {
  os << v;
  cat_into(os, rest...);
}
}  // namespace detail

// msg("a=", a, " b=", b) -> std::string
template <typename... Parts>
std::string msg(const Parts&... parts) {
  std::ostringstream os;
  detail::cat_into(os, parts...);
  return os.str();
}

}  // namespace calico
