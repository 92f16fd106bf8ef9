#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <string>

#include "permlab/common.hpp"

namespace permlab {

// All densities are exact rationals; floats appear only in Monte Carlo
// estimates and numeric searches.
using BigInt = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

BigInt factorial(unsigned n);
BigInt binomial(unsigned n, unsigned k);

// Accepts "a/b", plain integers, and decimal literals like "0.25" or "-1.5e-2".
Rat parse_rational(const std::string& text);

// "a/b" for non-integers, plain "a" otherwise. parse_rational round-trips it.
std::string rat_str(const Rat& r);

double rat_double(const Rat& r);

// Exact embedding of a finite double (doubles are dyadic rationals).
Rat rat_from_double(double x);

}  // namespace permlab
