// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace hig {

#ifdef HIG_SINGLE_PRECISION
using Real = float;
#else
using Real = double;
#endif

inline constexpr bool kSinglePrecision = sizeof(Real) == 4;

// Base error type for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace hig
