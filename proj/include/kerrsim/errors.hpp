#pragma once

#include <stdexcept>
#include <string>

namespace kerrsim {

// Every error class maps to a distinct process exit code so that scripted
// callers can react to failure modes without parsing messages.
enum class ExitCode : int {
  ok = 0,
  generic_failure = 1,
  parse_error = 2,
  validation_error = 3,
  orthogonal_postselection = 4,
  degenerate_postselection = 5,
  zero_variance = 6,
  nonpositive_information = 7,
  empty_distribution = 8,
  resource_limit = 9,
  unreachable_variance = 10,
  no_postselected_trials = 11,
  singular_fit = 12,
  non_convergence = 13,
  io_error = 14,
};

class SimError : public std::runtime_error {
 public:
  SimError(ExitCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}
  ExitCode code() const noexcept { return code_; }

 private:
  ExitCode code_;
};

#define KERRSIM_DEFINE_ERROR(NAME, CODE)                      \
  class NAME : public SimError {                              \
   public:                                                    \
    explicit NAME(const std::string& what)                    \
        : SimError(ExitCode::CODE, what) {}                   \
  }

KERRSIM_DEFINE_ERROR(ParseError, parse_error);
KERRSIM_DEFINE_ERROR(ValidationError, validation_error);
KERRSIM_DEFINE_ERROR(OrthogonalPostselection, orthogonal_postselection);
KERRSIM_DEFINE_ERROR(DegeneratePostselection, degenerate_postselection);
KERRSIM_DEFINE_ERROR(ZeroVariance, zero_variance);
KERRSIM_DEFINE_ERROR(NonpositiveInformation, nonpositive_information);
KERRSIM_DEFINE_ERROR(EmptyDistribution, empty_distribution);
KERRSIM_DEFINE_ERROR(ResourceLimit, resource_limit);
KERRSIM_DEFINE_ERROR(UnreachableVariance, unreachable_variance);
KERRSIM_DEFINE_ERROR(NoPostselectedTrials, no_postselected_trials);
KERRSIM_DEFINE_ERROR(SingularFit, singular_fit);
KERRSIM_DEFINE_ERROR(NonConvergence, non_convergence);
KERRSIM_DEFINE_ERROR(IoError, io_error);

#undef KERRSIM_DEFINE_ERROR

}  // namespace kerrsim
