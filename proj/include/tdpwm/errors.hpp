#ifndef TDPWM_ERRORS_HPP
#define TDPWM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace tdpwm {

/// Non-positive physical input or an otherwise meaningless numeric argument.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Pulse count or instant list that cannot describe a pattern.
class PatternError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Requested fundamental amplitude or modulation index outside what the
/// inverter can produce.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Free parameters whose expansion is not strictly increasing.
class InfeasibleError : public std::runtime_error {
 public:
  InfeasibleError(const std::string& what, int gap_index)
      : std::runtime_error(what), gap_index_(gap_index) {}

  /// Index j of the first gap beta_{j+1} - beta_j that failed (beta_0 = 0).
  int gap_index() const noexcept { return gap_index_; }

 private:
  int gap_index_;
};

/// Optimizer seed that violates the monotonicity constraints.
class SeedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Spectrum with zero fundamental.
class UndefinedThdError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

}  // namespace tdpwm

#endif  // TDPWM_ERRORS_HPP
