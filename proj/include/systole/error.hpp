#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace systole {

enum class ErrorKind {
  invalid_argument,
  unbounded_chart,
  degenerate_circle,
  degenerate_mobius,
  point_on_circle,
  non_integrable,
  singular_hit,
  not_isometry,
  singular_point,
  through_poles,
  deck_invariant,
  no_generic_sample,
  not_monic,
  odd_degree,
  real_root_found,
  repeated_root,
  odd_genus,
  too_close_to_root,
  point_on_loop,
  non_transverse_intersection,
  same_point,
  no_mixed_pair,
  coverage_violated,
  even_set,
  not_antipodal,
  certificate_invalid,
  config_invalid,
};

inline constexpr std::string_view kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid-argument";
    case ErrorKind::unbounded_chart: return "unbounded-chart";
    case ErrorKind::degenerate_circle: return "degenerate-circle";
    case ErrorKind::degenerate_mobius: return "degenerate-mobius";
    case ErrorKind::point_on_circle: return "point-on-circle";
    case ErrorKind::non_integrable: return "non-integrable";
    case ErrorKind::singular_hit: return "singular-hit";
    case ErrorKind::not_isometry: return "not-isometry";
    case ErrorKind::singular_point: return "singular-point";
    case ErrorKind::through_poles: return "through-poles";
    case ErrorKind::deck_invariant: return "deck-invariant";
    case ErrorKind::no_generic_sample: return "no-generic-sample";
    case ErrorKind::not_monic: return "not-monic";
    case ErrorKind::odd_degree: return "odd-degree";
    case ErrorKind::real_root_found: return "real-root-found";
    case ErrorKind::repeated_root: return "repeated-root";
    case ErrorKind::odd_genus: return "odd-genus";
    case ErrorKind::too_close_to_root: return "too-close-to-root";
    case ErrorKind::point_on_loop: return "point-on-loop";
    case ErrorKind::non_transverse_intersection: return "non-transverse-intersection";
    case ErrorKind::same_point: return "same-point";
    case ErrorKind::no_mixed_pair: return "no-mixed-pair";
    case ErrorKind::coverage_violated: return "coverage-violated";
    case ErrorKind::even_set: return "even-S";
    case ErrorKind::not_antipodal: return "not-antipodal";
    case ErrorKind::certificate_invalid: return "certificate-invalid";
    case ErrorKind::config_invalid: return "config-invalid";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable kind.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& detail)
      : std::runtime_error(std::string(kind_name(kind)) + ": " + detail), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& detail) { throw Error(kind, detail); }

}  // namespace systole
