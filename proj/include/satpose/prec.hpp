#pragma once

// The numeric engine is built in two flavors: 32-bit floats for training and
// inference, 64-bit for the finite-difference gradient suites. Each flavor
// lives in its own inline namespace so both libraries can be linked into one
// binary (the acceptance runner does exactly that).
#ifdef SATPOSE_REAL64
#define SATPOSE_NS_BEGIN \
  namespace satpose {    \
  inline namespace r64 {
#else
#define SATPOSE_NS_BEGIN \
  namespace satpose {    \
  inline namespace r32 {
#endif

#define SATPOSE_NS_END \
  }                    \
  }

SATPOSE_NS_BEGIN
#ifdef SATPOSE_REAL64
using real = double;
#else
using real = float;
#endif
SATPOSE_NS_END
