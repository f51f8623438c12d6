#pragma once

#include <string>

#include <boost/multiprecision/cpp_int.hpp>

#include "gxstpir/error.hpp"

namespace gxstpir {

/// Exact canonical rational with arbitrary-precision numerator/denominator.
using Rational = boost::multiprecision::cpp_rational;

/// Always "p/q", including integers ("2/1") and zero ("0/1").
inline std::string to_string(const Rational& r) {
  return boost::multiprecision::numerator(r).str() + "/" +
         boost::multiprecision::denominator(r).str();
}

/// Accepts "p/q" or a bare integer.
inline Rational parse_rational(const std::string& s) {
  try {
    auto slash = s.find('/');
    if (slash == std::string::npos)
      return Rational(boost::multiprecision::cpp_int(s));
    boost::multiprecision::cpp_int num(s.substr(0, slash));
    boost::multiprecision::cpp_int den(s.substr(slash + 1));
    enforce(den != 0, ErrorCode::Parse, "zero denominator in '" + s + "'");
    return Rational(num, den);
  } catch (const std::runtime_error& e) {
    if (dynamic_cast<const Error*>(&e)) throw;
    throw Error(ErrorCode::Parse, "bad rational '" + s + "'");
  }
}

}  // namespace gxstpir
