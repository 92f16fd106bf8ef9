#include "permlab/rational.hpp"

#include <cmath>
#include <cstdint>

namespace permlab {

BigInt factorial(unsigned n) {
  BigInt r = 1;
  for (unsigned i = 2; i <= n; ++i) r *= i;
  return r;
}

BigInt binomial(unsigned n, unsigned k) {
  if (k > n) return 0;
  if (k > n - k) k = n - k;
  BigInt r = 1;
  for (unsigned i = 1; i <= k; ++i) {
    r *= n - k + i;
    r /= i;
  }
  return r;
}

Rat parse_rational(const std::string& text) {
  auto fail = [&]() -> Rat {
    throw ParseError("bad rational literal \"" + text + "\"");
  };
  std::string t;
  for (char c : text)
    if (c != ' ' && c != '\t') t += c;
  if (t.empty()) return fail();

  auto slash = t.find('/');
  if (slash != std::string::npos) {
    std::string num = t.substr(0, slash), den = t.substr(slash + 1);
    if (num.empty() || den.empty() || den.find('/') != std::string::npos) return fail();
    try {
      BigInt n(num), d(den);
      if (d == 0) throw ParseError("zero denominator in \"" + text + "\"");
      return Rat(n, d);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception&) {
      return fail();
    }
  }

  // Integer or decimal, with optional exponent.
  std::string mant = t;
  long expo = 0;
  auto epos = t.find_first_of("eE");
  if (epos != std::string::npos) {
    mant = t.substr(0, epos);
    std::string es = t.substr(epos + 1);
    if (es.empty()) return fail();
    try {
      size_t used = 0;
      expo = std::stol(es, &used);
      if (used != es.size()) return fail();
    } catch (const std::exception&) {
      return fail();
    }
  }
  bool neg = false;
  if (!mant.empty() && (mant[0] == '+' || mant[0] == '-')) {
    neg = mant[0] == '-';
    mant = mant.substr(1);
  }
  auto dot = mant.find('.');
  std::string digits = mant;
  long frac_digits = 0;
  if (dot != std::string::npos) {
    digits = mant.substr(0, dot) + mant.substr(dot + 1);
    frac_digits = static_cast<long>(mant.size() - dot - 1);
  }
  if (digits.empty() || digits.find_first_not_of("0123456789") != std::string::npos)
    return fail();
  BigInt n(digits);
  if (neg) n = -n;
  Rat r(n, 1);
  long net = expo - frac_digits;
  BigInt p10 = 1;
  for (long i = 0; i < std::labs(net); ++i) p10 *= 10;
  if (net >= 0)
    r *= Rat(p10, 1);
  else
    r /= Rat(p10, 1);
  return r;
}

std::string rat_str(const Rat& r) {
  const BigInt num = boost::multiprecision::numerator(r);
  const BigInt den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double rat_double(const Rat& r) { return static_cast<double>(r); }

Rat rat_from_double(double x) {
  if (!std::isfinite(x)) throw ContractError("rat_from_double: non-finite value");
  if (x == 0.0) return Rat(0);
  int e = 0;
  double m = std::frexp(x, &e);  // x = m * 2^e, |m| in [0.5, 1)
  // 53 doublings make the mantissa integral.
  auto mi = static_cast<std::int64_t>(std::ldexp(m, 53));
  e -= 53;
  Rat r(mi, 1);
  BigInt p2 = BigInt(1) << std::abs(e);
  if (e >= 0)
    r *= Rat(p2, 1);
  else
    r /= Rat(p2, 1);
  return r;
}

}  // namespace permlab
