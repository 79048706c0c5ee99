#pragma once

// Propagation engine over staged networks: forward and backward particle
// states, weak values from the two-state pair, joint particle-marker runs,
// and conditional path attribution at an exit.
//
// Marker model. Each checkpoint carries a two-level marker prepared in
// |no>. When the particle crosses the checkpoint rail, the marker turns by
// the rotation [[c, -s], [s, c]] with
//
//     c = sqrt(1 - 3 eps),   s = sqrt(3 eps),   eps in [0, 1/3]
//
// so a single passage leaves c|no> + s|yes> on that marker and identity on
// all others. Two records of different single passages then overlap by
// c^2 = 1 - 3 eps; at eps = 1/3 the records are orthogonal and the marker
// readout identifies the path with certainty.

#include "wtrace/network.hpp"

#include <complex>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace wtrace::engine {

// Particle state after stages [0, stage); unit norm.
StateVector forward_state(const Network& net, int stage);

// Retrodictive state for a unit detection at exit_port, pulled back through
// the adjoints of stages [stage, end); unit norm. The overlap
// <backward(s)|forward(s)> is independent of s and equals the source-to-exit
// transition amplitude.
StateVector backward_state(const Network& net, std::string_view exit_port, int stage);

Complex overlap(const StateVector& backward, const StateVector& forward);

// Weak value of the projector onto the checkpoint rail, evaluated at the
// checkpoint stage between forward and backward states. Throws
// OrthogonalSelection when |<backward|forward>| <= 1e-14.
Complex weak_value(const Network& net, std::string_view exit_port,
                   std::string_view checkpoint_label);

struct WeakValueReport {
    // checkpoint label -> weak value, in stage order
    std::vector<std::pair<std::string, Complex>> values;
    Complex selection_overlap; // <backward|forward>, stage-invariant
};

WeakValueReport weak_value_report(const Network& net, std::string_view exit_port);

// Coupling amplitudes and record geometry for a given marker strength.
struct MarkerModel {
    double eps = 0.0;
    std::vector<std::string> checkpoint_labels; // stage order

    double no_amplitude() const;  // sqrt(1 - 3 eps)
    double yes_amplitude() const; // sqrt(3 eps)

    // Marker register (dimension 2^k) left by a single passage through
    // checkpoint `which`, as real amplitudes over yes/no configurations.
    std::vector<double> record(std::size_t which) const;

    // <record(j) | record(k)>; equals 1 - 3 eps for j != k.
    double record_overlap(std::size_t j, std::size_t k) const;
};

MarkerModel marker_model(const Network& net, double eps);

// Joint outcome table of a full run: probability of each (exit port,
// marker configuration) pair. Configurations are bitmasks over
// checkpoint_labels; bit i set means marker i reads "yes". Over networks
// whose detectors cover every live rail the table sums to one.
struct JointOutcome {
    std::vector<std::string> exit_ports;        // declared order
    std::vector<std::string> checkpoint_labels; // stage order
    std::vector<std::vector<double>> probabilities; // [exit][mask]

    double exit_probability(std::string_view port) const;
    double probability(std::string_view port, unsigned mask) const;
    double total() const;
    // "none" for mask 0, otherwise "+"-joined checkpoint labels
    std::string config_name(unsigned mask) const;
};

JointOutcome run_with_markers(const Network& net, double eps);

// P(exit_port) marginalized over marker configurations.
double detection_probability(const Network& net, double eps, std::string_view exit_port);

// Split of one exit's probability by marker readout: conclusive[k] is the
// mass with marker k reading "yes", inconclusive is the all-"no" mass.
// In single-passage geometries these sum to the exit probability. Throws
// ConditioningOnNull when the exit carries no probability at all.
struct ConditionalDecomposition {
    std::vector<std::pair<std::string, double>> conclusive; // stage order
    double inconclusive = 0.0;
    double exit_probability = 0.0;
};

ConditionalDecomposition conditional_decomposition(const Network& net, double eps,
                                                   std::string_view exit_port);

// Sweeps an added phase on the checkpoint rail (inserted right after the
// checkpoint stage) over n_samples points of [0, 2 pi) and records the
// variation of P(exit_port). "Incoherent" means the detection probability
// is flat under that phase within tolerance. Requires n_samples >= 8.
struct IncoherenceResult {
    bool incoherent = false;
    double max_variation = 0.0;
};

IncoherenceResult incoherence_test(const Network& net, double eps,
                                   std::string_view exit_port,
                                   std::string_view checkpoint_label,
                                   int n_samples = 32, double tolerance = 1e-9);

enum class PosteriorMethod { bayes_full, accounting };

// Posterior over checkpoints for a particle found at an exit.
//
// bayes_full treats the path as a classical variable with the forward
// Born weights as prior: conclusive mass goes to its checkpoint, the
// inconclusive mass is spread over checkpoints by those weights.
//
// accounting books the inconclusive mass entirely onto one checkpoint.
// That is only meaningful where the detection probability is flat under
// the checkpoint's phase, so candidates are tried in reverse stage order
// (the bypass checkpoint first in the preset) and the first one passing
// incoherence_test (32 samples, tolerance 1e-9) takes the mass; if none
// passes, AccountingNotJustified is thrown.
struct PathPosterior {
    PosteriorMethod method = PosteriorMethod::bayes_full;
    std::vector<std::pair<std::string, double>> probabilities; // stage order, sums to 1
    std::string attribution_checkpoint; // accounting only: who took the inconclusive mass
};

PathPosterior path_posterior(const Network& net, double eps, std::string_view exit_port,
                             PosteriorMethod method);

} // namespace wtrace::engine
