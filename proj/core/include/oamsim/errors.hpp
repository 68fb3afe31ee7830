#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace oamsim {

// Base class for all recoverable library errors. The CLI maps config_error to
// exit code 2 and everything else derived from error to exit code 1.
class error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define OAMSIM_DEFINE_ERROR(name)          \
  class name : public error {              \
   public:                                 \
    using error::error;                    \
  };

OAMSIM_DEFINE_ERROR(config_error)
OAMSIM_DEFINE_ERROR(grid_mismatch_error)
OAMSIM_DEFINE_ERROR(window_too_small_error)
OAMSIM_DEFINE_ERROR(unresolved_slit_error)
OAMSIM_DEFINE_ERROR(normalization_error)
OAMSIM_DEFINE_ERROR(empty_support_error)
OAMSIM_DEFINE_ERROR(empty_scan_error)
OAMSIM_DEFINE_ERROR(missing_subspace_error)
OAMSIM_DEFINE_ERROR(fit_error)
OAMSIM_DEFINE_ERROR(zero_counts_error)

#undef OAMSIM_DEFINE_ERROR

// Non-fatal diagnostics: band-limit truncation, out-of-annulus loss,
// estimator bias conditions. Callers pass a sink when they care.
struct Warning {
  std::string code;
  std::string message;
};
using Warnings = std::vector<Warning>;

inline void warn(Warnings* sink, std::string code, std::string message) {
  if (sink) sink->push_back({std::move(code), std::move(message)});
}

inline bool has_warning(const Warnings& w, const std::string& code) {
  for (const auto& x : w)
    if (x.code == code) return true;
  return false;
}

}  // namespace oamsim
