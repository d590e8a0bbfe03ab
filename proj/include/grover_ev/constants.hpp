#pragma once

#include <cstddef>
#include <numbers>

namespace grover_ev {

/// Largest register the dense statevector accepts (2^24 amplitudes, 256 MiB).
inline constexpr std::size_t kMaxQubits = 24;

/// Norm drift allowed after any sequence of unitaries.
inline constexpr double kNormTolerance = 1e-9;
/// Closed-form vs iterated statevector agreement.
inline constexpr double kEquivalenceTolerance = 1e-10;
/// Cases that are exact in real arithmetic (involutions, basis states).
inline constexpr double kExactTolerance = 1e-12;

/// Sign-decision threshold used for an exact (infinite) ensemble.
inline constexpr double kExactEnsembleThreshold = 1e-9;
/// Default finite-ensemble threshold is kSigmaMultiple / sqrt(shots).
inline constexpr double kSigmaMultiple = 5.0;

inline constexpr double kPi = std::numbers::pi;

}  // namespace grover_ev
