#pragma once

#include <stdexcept>
#include <string>

namespace homokin {

// Base of the toolkit's error taxonomy. Every throw carries a human-readable
// message with the offending values baked in.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// det(I + tA) vanished (or nearly so) at a queried time.
struct SingularDeformation : Error {
  using Error::Error;
};

// Two interacting particles came closer than the overlap guard allows.
struct ParticleOverlap : Error {
  using Error::Error;
};

// A measure operation got input outside its contract (unequal sizes,
// non-uniform weights where uniform are required, size cap exceeded, ...).
struct UnsupportedMeasure : Error {
  using Error::Error;
};

// Internal guard: a candidate pair's relative speed exceeded the collision
// majorant even after adaptation. Indicates a bookkeeping bug, not bad input.
struct MajorantOverflow : Error {
  using Error::Error;
};

// Temperature did not grow enough to identify a self-similar tail.
struct InsufficientGrowth : Error {
  using Error::Error;
};

// Calibration input is too far from local equilibrium to fit a transport law.
struct NotNearEquilibrium : Error {
  using Error::Error;
};

// Calibration input carries no usable signal (e.g. zero shear rate).
struct InsufficientSignal : Error {
  using Error::Error;
};

// Malformed or inconsistent experiment configuration.
struct ConfigError : Error {
  using Error::Error;
};

// Two series to be compared share too little of their time grids.
struct GridMismatch : Error {
  using Error::Error;
};

}  // namespace homokin
