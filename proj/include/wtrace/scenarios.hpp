#pragma once

// Prepackaged studies on the three-path preset: the link-weight picture of
// forward and backward states, the last-moment splitter-choice comparison,
// and generic parameter sweeps with fitted fringe metrics.

#include "wtrace/dsl.hpp"
#include "wtrace/engine.hpp"
#include "wtrace/network.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace wtrace::scenarios {

// Squared amplitude carried by one diagram link, in both time directions:
// forward from the source, backward from a unit detection at exit III.
struct LinkWeight {
    std::string link;
    double forward = 0.0;
    double backward = 0.0;
};

struct LinkWeights {
    double R4 = 0.0;
    PhaseConfig phases;
    // fixed order: S-BS1, BS1-C, BS1-BS2, BS2-A, BS2-B, A-BS3, B-BS3,
    // C-BS4, BS3-BS4, BS3-I, BS4-III, BS4-II
    std::vector<LinkWeight> links;
};

LinkWeights figure_weights(double R4, const PhaseConfig& phases);

// One row of the last-moment-choice table: the balanced preset read out at
// exit III for a given final-splitter reflectivity. Weak values do not
// depend on the marker strength; the posterior is the accounting
// attribution at the given eps.
struct RetrocausationRow {
    double R4 = 0.0;
    Complex W_A;
    Complex W_B;
    Complex W_C;
    double p_exit3 = 0.0;
    engine::PathPosterior posterior;
};

struct RetrocausationTable {
    double eps = 0.0;
    std::vector<RetrocausationRow> rows; // R4 = 1/3 and R4 = 1
};

// Pure function of eps: repeated calls yield identical tables.
// DomainError unless eps in [0, 1/3).
RetrocausationTable retrocausation_compare(double eps);

// Least-squares fit of p(delta) = offset + cos_coefficient cos(delta)
//                                + sin_coefficient sin(delta).
struct FringeFit {
    double offset = 0.0;
    double cos_coefficient = 0.0;
    double sin_coefficient = 0.0;
};

FringeFit fit_fringe(const std::vector<double>& delta, const std::vector<double>& p);

// Sweep one parameter of a network family over a grid and record a metric.
//
// Family: the three-path preset (R4, phases) unless doc is set, then the
// document lowered with bindings. parameter is one of "alpha", "beta",
// "gamma", "R4", "eps" for the preset, or "eps" or a phase parameter name
// for a document. Metrics:
//
//   "P(<exit>)"                          detection probability at an exit
//   "fringe_coeff"                       cosine coefficient of the fitted
//                                        exit-III fringe in alpha - beta
//                                        (preset only; 64-point internal fit)
//   "incoherence_variation(<checkpoint>[,<exit>])"
//                                        P(exit) variation under a swept
//                                        checkpoint phase (exit III default)
struct SweepRequest {
    std::optional<dsl::CircuitDoc> doc;
    std::map<std::string, double> bindings;
    double R4 = 1.0 / 3.0;
    PhaseConfig phases;
    double eps = 0.0;
    std::string parameter;
    std::vector<double> grid;
    std::string metric;
};

struct SweepResult {
    std::string parameter;
    std::string metric;
    std::vector<double> grid;
    std::vector<double> values; // one per grid point
    double eps = 0.0;           // fixed configuration echoed back
    double R4 = 0.0;
    PhaseConfig phases;
    bool preset = true;
};

SweepResult sweep(const SweepRequest& request);

} // namespace wtrace::scenarios
