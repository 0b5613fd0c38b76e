#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace qrc {

enum class Errc {
  not_hermitian,
  dimension_too_small,
  dimension_mismatch,
  non_real_expectation,
  site_out_of_range,
  duplicate_site,
  input_out_of_range,
  vmax_violated,
  empty_potential,
  non_finite_potential,
  parse_error,
  shape_mismatch,
  wrong_arity,
  non_finite_input,
  kind_mismatch,
  degenerate_targets,
  empty_dataset,
  fingerprint_mismatch,
  io_error,
  invalid_config,
};

constexpr std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::not_hermitian: return "NotHermitian";
    case Errc::dimension_too_small: return "DimensionTooSmall";
    case Errc::dimension_mismatch: return "DimensionMismatch";
    case Errc::non_real_expectation: return "NonRealExpectation";
    case Errc::site_out_of_range: return "SiteOutOfRange";
    case Errc::duplicate_site: return "DuplicateSite";
    case Errc::input_out_of_range: return "InputOutOfRange";
    case Errc::vmax_violated: return "VMaxViolated";
    case Errc::empty_potential: return "EmptyPotential";
    case Errc::non_finite_potential: return "NonFinitePotential";
    case Errc::parse_error: return "ParseError";
    case Errc::shape_mismatch: return "ShapeMismatch";
    case Errc::wrong_arity: return "WrongArity";
    case Errc::non_finite_input: return "NonFiniteInput";
    case Errc::kind_mismatch: return "KindMismatch";
    case Errc::degenerate_targets: return "DegenerateTargets";
    case Errc::empty_dataset: return "EmptyDataset";
    case Errc::fingerprint_mismatch: return "FingerprintMismatch";
    case Errc::io_error: return "IoError";
    case Errc::invalid_config: return "InvalidConfig";
  }
  return "Unknown";
}

/// Process exit code for an error: 1 usage, 2 data error, 3 numerical failure.
constexpr int exit_code(Errc code) {
  switch (code) {
    case Errc::invalid_config:
      return 1;
    case Errc::not_hermitian:
    case Errc::non_real_expectation:
    case Errc::non_finite_input:
    case Errc::degenerate_targets:
      return 3;
    default:
      return 2;
  }
}

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace qrc
