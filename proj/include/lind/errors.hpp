#pragma once

#include <stdexcept>
#include <string>

namespace lind {

// Base of every library failure; the CLI maps these to exit code 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : Error {
  using Error::Error;
};

// Composition whose result rank exceeds the truncation bound.
struct RankOverflow : Error {
  using Error::Error;
};

// A composite that is not present in a materialized element table.
struct NotClosed : Error {
  using Error::Error;
};

struct BudgetExceeded : Error {
  using Error::Error;
};

struct NotACongruence : Error {
  using Error::Error;
};

struct DeterminismViolation : Error {
  using Error::Error;
};

}  // namespace lind
