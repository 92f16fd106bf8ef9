#pragma once

#include <stdexcept>
#include <string>

namespace permlab {

// Error taxonomy. Everything user-facing funnels through these so the CLI can
// map them onto exit codes: usage/contract problems -> 1, search failures -> 2.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input text: permutation strings, rational literals, JSON shapes.
struct ParseError : Error {
  using Error::Error;
};

// A documented precondition was violated by the caller.
struct ContractError : Error {
  using Error::Error;
};

// Enumeration or size cap exceeded.
struct CapError : Error {
  using Error::Error;
};

// A randomized search exhausted its budget without meeting its target.
struct SearchError : Error {
  using Error::Error;
};

}  // namespace permlab
