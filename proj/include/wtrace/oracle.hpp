#pragma once

// Closed-form detection probabilities for the three-path interferometer
// with faint path markers.
//
// Geometry, in brief: a source beam is split 1:2 at the entrance, the
// stronger part runs through an inner two-arm loop (checkpoints A and B,
// phases alpha and beta), the weaker part bypasses the loop through
// checkpoint C (phase gamma). Loop output and bypass recombine at a final
// splitter of reflectivity R whose reflected port is exit III. Each
// checkpoint carries a weak marker of strength eps in [0, 1/3]; eps = 1/3
// makes the three path records fully distinguishable.
//
// These formulas are obtained by summing the three path amplitudes into
// exit III by hand. They are transcribed here independently of the staged
// propagation engine and deliberately share no code with it: the two
// routes cross-check each other in the test suite.

namespace wtrace::oracle {

// Fringe structure of p_exit3_shared_phase as a function of alpha - beta:
//   p = offset + cos_coefficient * cos(alpha - beta)
struct FringeAnalysis {
    double offset;           // eps + (1 - 3 eps)(1 - sqrt(2 R T)) / 3
    double cos_coefficient;  // (1 - 3 eps)(sqrt(2 R T) - T) / 3
    double R;                // final-splitter reflectivity
    double T;                // 1 - R
    double eps;              // marker strength
};

// Exit-III probability when the final splitter reflects 1/3, so the three
// paths arrive with equal weight:
//   p = eps + (1 - 3 eps) |e^{i gamma} + e^{i beta} - e^{i alpha}|^2 / 9
double p_exit3_equal_split(double alpha, double beta, double gamma, double eps);

// Exit-III probability for a free final-splitter reflectivity R, T = 1 - R:
//   p = eps + (1 - 3 eps) |sqrt(R) e^{i gamma} + sqrt(T/2)(e^{i beta} - e^{i alpha})|^2 / 3
// Reduces to p_exit3_equal_split at R = 1/3.
double p_exit3(double alpha, double beta, double gamma, double eps, double R);

// Exit-III probability with the inner loop balanced (alpha == beta). The
// loop output toward the final splitter vanishes, so the bypass phase
// gamma drops out entirely for every R:
//   p = eps + (1 - 3 eps) R / 3
double p_exit3_balanced_inner(double eps, double R);

// Exit-III probability when the bypass shares its phase with checkpoint A
// (gamma == alpha). Interference survives as a pure cosine fringe in
// alpha - beta:
//   p = eps + (1 - 3 eps)[1 - sqrt(2 R T) + (sqrt(2 R T) - T) cos(alpha - beta)] / 3
// The cosine coefficient vanishes exactly at R = 1/3 and R = 1.
double p_exit3_shared_phase(double alpha, double beta, double eps, double R);

// Offset and cosine coefficient of the fringe above, as explicit values.
FringeAnalysis fringe(double R, double eps);

} // namespace wtrace::oracle
