#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cfb {

// Malformed or unreadable input (files, CLI arguments, index ranges).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public InputError {
 public:
  using InputError::InputError;
};

// Shape mismatch between declared sizes and supplied arrays.
class StructuralError : public InputError {
 public:
  using InputError::InputError;
};

// The observed trajectory has zero probability under the model.
class ImpossibleTrajectory : public std::runtime_error {
 public:
  ImpossibleTrajectory(std::size_t t, const std::string& what)
      : std::runtime_error(what), step(t) {}
  std::size_t step;  // 1-based period at which all messages vanished
};

// A posterior sample uses a factual parent with zero probability.
class SampleInconsistent : public std::runtime_error {
 public:
  SampleInconsistent(std::size_t b, std::size_t t, const std::string& what)
      : std::runtime_error(what), sample(b), step(t) {}
  std::size_t sample;
  std::size_t step;
};

// No coupling satisfies the margins together with the imposed zeros.
class InfeasibleCoupling : public std::runtime_error {
 public:
  InfeasibleCoupling(std::ptrdiff_t block, const std::string& what)
      : std::runtime_error(what), block(block) {}
  std::ptrdiff_t block;
};

}  // namespace cfb
