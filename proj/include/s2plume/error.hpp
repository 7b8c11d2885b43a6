#pragma once

#include <stdexcept>
#include <string>

namespace s2plume {

enum class Errc {
  io,
  invariant,
  shape_mismatch,
  degenerate_fit,
  rank_deficient,
  too_few_pixels,
  missing_band,
  malformed_header,
  length_mismatch,
  unknown_dtype,
  invalid_argument,
  label_collision,
  missing_prediction,
  empty_input,
};

const char* to_string(Errc code);

// Every data or invariant failure raised by the library. The CLI maps these
// to exit code 2.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

inline const char* to_string(Errc code) {
  switch (code) {
    case Errc::io: return "io error";
    case Errc::invariant: return "invariant violation";
    case Errc::shape_mismatch: return "shape mismatch";
    case Errc::degenerate_fit: return "degenerate fit";
    case Errc::rank_deficient: return "rank-deficient design matrix";
    case Errc::too_few_pixels: return "too few pixels";
    case Errc::missing_band: return "missing band";
    case Errc::malformed_header: return "malformed header";
    case Errc::length_mismatch: return "payload length mismatch";
    case Errc::unknown_dtype: return "unknown dtype";
    case Errc::invalid_argument: return "invalid argument";
    case Errc::label_collision: return "label collision";
    case Errc::missing_prediction: return "missing prediction";
    case Errc::empty_input: return "empty input";
  }
  return "error";
}

}  // namespace s2plume
