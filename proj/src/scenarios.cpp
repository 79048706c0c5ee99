#include "wtrace/scenarios.hpp"

#include "wtrace/errors.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <variant>

namespace wtrace::scenarios {

namespace {

struct PresetCuts {
    // stage cuts bracketing the preset's splitters
    int after_bs1 = 0;
    int before_bs3 = 0;
    int before_bs4 = 0;
    int end = 0;
};

PresetCuts locate_cuts(const Network& net) {
    PresetCuts cuts;
    int seen = 0;
    for (std::size_t i = 0; i < net.stages.size(); ++i) {
        if (std::holds_alternative<BeamSplitter>(net.stages[i])) {
            ++seen;
            if (seen == 1) {
                cuts.after_bs1 = static_cast<int>(i) + 1;
            } else if (seen == 3) {
                cuts.before_bs3 = static_cast<int>(i);
            } else if (seen == 4) {
                cuts.before_bs4 = static_cast<int>(i);
            }
        }
    }
    if (seen != 4) {
        throw StructuralError("expected the four-splitter preset layout");
    }
    cuts.end = static_cast<int>(net.stages.size());
    return cuts;
}

int checkpoint_mode(const Network& net, std::string_view label) {
    for (const Element& el : net.stages) {
        if (const auto* cp = std::get_if<Checkpoint>(&el)) {
            if (cp->label == label) {
                return cp->mode;
            }
        }
    }
    throw StructuralError("unknown checkpoint '" + std::string(label) + "'");
}

} // namespace

LinkWeights figure_weights(double R4, const PhaseConfig& phases) {
    const Network net = build_three_path(R4, phases);
    const PresetCuts cuts = locate_cuts(net);

    const int rail_bypass = checkpoint_mode(net, "C");
    const int rail_a = checkpoint_mode(net, "A");
    const int rail_b = checkpoint_mode(net, "B");
    const int rail_i = port_mode(net, "I");
    const int rail_ii = port_mode(net, "II");
    const int rail_iii = port_mode(net, "III");

    const std::array<std::tuple<const char*, int, int>, 12> layout = {{
        {"S-BS1", 0, net.source_mode},
        {"BS1-C", cuts.after_bs1, rail_bypass},
        {"BS1-BS2", cuts.after_bs1, rail_a},
        {"BS2-A", cuts.after_bs1 + 1, rail_a},
        {"BS2-B", cuts.after_bs1 + 1, rail_b},
        {"A-BS3", cuts.before_bs3, rail_a},
        {"B-BS3", cuts.before_bs3, rail_b},
        {"C-BS4", cuts.before_bs4, rail_bypass},
        {"BS3-BS4", cuts.before_bs4, rail_ii},
        {"BS3-I", cuts.before_bs4, rail_i},
        {"BS4-III", cuts.end, rail_iii},
        {"BS4-II", cuts.end, rail_ii},
    }};

    LinkWeights out;
    out.R4 = R4;
    out.phases = phases;
    for (const auto& [name, cut, rail] : layout) {
        const StateVector f = engine::forward_state(net, cut);
        const StateVector b = engine::backward_state(net, "III", cut);
        LinkWeight w;
        w.link = name;
        w.forward = std::norm(f.amplitudes[static_cast<std::size_t>(rail)]);
        w.backward = std::norm(b.amplitudes[static_cast<std::size_t>(rail)]);
        out.links.push_back(std::move(w));
    }
    return out;
}

RetrocausationTable retrocausation_compare(double eps) {
    if (!(eps >= 0.0 && eps < 1.0 / 3.0)) {
        throw DomainError("last-moment comparison needs eps in [0, 1/3)");
    }
    RetrocausationTable table;
    table.eps = eps;
    for (const double R4 : {1.0 / 3.0, 1.0}) {
        const Network net = build_three_path(R4, PhaseConfig{});
        RetrocausationRow row;
        row.R4 = R4;
        row.W_A = engine::weak_value(net, "III", "A");
        row.W_B = engine::weak_value(net, "III", "B");
        row.W_C = engine::weak_value(net, "III", "C");
        row.p_exit3 = engine::detection_probability(net, eps, "III");
        row.posterior = engine::path_posterior(net, eps, "III",
                                               engine::PosteriorMethod::accounting);
        table.rows.push_back(std::move(row));
    }
    return table;
}

FringeFit fit_fringe(const std::vector<double>& delta, const std::vector<double>& p) {
    if (delta.size() != p.size() || delta.size() < 3) {
        throw DomainError("fringe fit needs at least 3 matched samples");
    }
    // normal equations for the basis {1, cos, sin}
    double m[3][3] = {{0, 0, 0}, {0, 0, 0}, {0, 0, 0}};
    double rhs[3] = {0, 0, 0};
    for (std::size_t i = 0; i < delta.size(); ++i) {
        const double base[3] = {1.0, std::cos(delta[i]), std::sin(delta[i])};
        for (int r = 0; r < 3; ++r) {
            for (int c = 0; c < 3; ++c) {
                m[r][c] += base[r] * base[c];
            }
            rhs[r] += base[r] * p[i];
        }
    }
    // Gaussian elimination with partial pivoting on the 3x3 system
    double scale = 0.0;
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) {
            scale = std::max(scale, std::abs(m[r][c]));
        }
    }
    int perm[3] = {0, 1, 2};
    for (int col = 0; col < 3; ++col) {
        int pivot = col;
        for (int r = col + 1; r < 3; ++r) {
            if (std::abs(m[perm[r]][col]) > std::abs(m[perm[pivot]][col])) {
                pivot = r;
            }
        }
        std::swap(perm[col], perm[pivot]);
        const double lead = m[perm[col]][col];
        if (std::abs(lead) <= 1e-12 * scale) {
            throw DomainError("fringe fit is degenerate on this grid");
        }
        for (int r = col + 1; r < 3; ++r) {
            const double f = m[perm[r]][col] / lead;
            for (int c = col; c < 3; ++c) {
                m[perm[r]][c] -= f * m[perm[col]][c];
            }
            rhs[perm[r]] -= f * rhs[perm[col]];
        }
    }
    double x[3] = {0, 0, 0};
    for (int col = 2; col >= 0; --col) {
        double acc = rhs[perm[col]];
        for (int c = col + 1; c < 3; ++c) {
            acc -= m[perm[col]][c] * x[c];
        }
        x[col] = acc / m[perm[col]][col];
    }
    return FringeFit{x[0], x[1], x[2]};
}

namespace {

constexpr int kFringeFitSamples = 64;

// Cosine coefficient of the exit-III fringe in alpha - beta at fixed R4 and
// eps, from an internal sweep with gamma = alpha = 0, beta = delta.
double fitted_fringe_coefficient(double R4, double eps) {
    std::vector<double> delta(kFringeFitSamples);
    std::vector<double> p(kFringeFitSamples);
    for (int i = 0; i < kFringeFitSamples; ++i) {
        delta[i] = 2.0 * std::numbers::pi * static_cast<double>(i) /
                   static_cast<double>(kFringeFitSamples);
        PhaseConfig phases;
        phases.beta = delta[static_cast<std::size_t>(i)];
        const Network net = build_three_path(R4, phases);
        p[static_cast<std::size_t>(i)] = engine::detection_probability(net, eps, "III");
    }
    const FringeFit fit = fit_fringe(delta, p);
    if (std::abs(fit.sin_coefficient) > 1e-9) {
        throw DomainError("fringe fit sanity check failed: sine component " +
                          std::to_string(fit.sin_coefficient));
    }
    // p(delta) = offset + coefficient cos(alpha - beta) and alpha = 0 here,
    // so the fitted cosine term is the coefficient directly
    return fit.cos_coefficient;
}

struct MetricSpec {
    enum class Kind { exit_probability, fringe_coeff, incoherence_variation };
    Kind kind = Kind::exit_probability;
    std::string exit_port;
    std::string checkpoint;
};

MetricSpec parse_metric(const std::string& metric) {
    const auto unknown = [&metric]() {
        return UnknownMetric("unknown metric '" + metric +
                             "'; expected P(<exit>), fringe_coeff, or "
                             "incoherence_variation(<checkpoint>[,<exit>])");
    };
    MetricSpec spec;
    if (metric == "fringe_coeff") {
        spec.kind = MetricSpec::Kind::fringe_coeff;
        return spec;
    }
    if (metric.size() > 3 && metric.substr(0, 2) == "P(" && metric.back() == ')') {
        spec.kind = MetricSpec::Kind::exit_probability;
        spec.exit_port = metric.substr(2, metric.size() - 3);
        return spec;
    }
    const std::string inc = "incoherence_variation(";
    if (metric.size() > inc.size() + 1 && metric.substr(0, inc.size()) == inc &&
        metric.back() == ')') {
        const std::string args = metric.substr(inc.size(), metric.size() - inc.size() - 1);
        const std::size_t comma = args.find(',');
        spec.kind = MetricSpec::Kind::incoherence_variation;
        if (comma == std::string::npos) {
            spec.checkpoint = args;
            spec.exit_port = "III";
        } else {
            spec.checkpoint = args.substr(0, comma);
            spec.exit_port = args.substr(comma + 1);
        }
        if (spec.checkpoint.empty() || spec.exit_port.empty()) {
            throw unknown();
        }
        return spec;
    }
    throw unknown();
}

} // namespace

SweepResult sweep(const SweepRequest& request) {
    if (request.grid.empty()) {
        throw DomainError("sweep grid must not be empty");
    }
    const MetricSpec metric = parse_metric(request.metric);

    const bool preset = !request.doc.has_value();
    if (preset) {
        static constexpr std::string_view kParams[] = {"alpha", "beta", "gamma", "R4", "eps"};
        bool known = false;
        for (const std::string_view p : kParams) {
            known = known || p == request.parameter;
        }
        if (!known) {
            throw DomainError("unknown sweep parameter '" + request.parameter +
                              "' for the preset; expected alpha, beta, gamma, R4 or eps");
        }
    } else if (request.parameter != "eps") {
        bool found = false;
        for (const dsl::Declaration& d : request.doc->decls) {
            if (const auto* ph = std::get_if<dsl::PhaseStmt>(&d.stmt)) {
                found = found || (ph->value.kind == dsl::PhaseValue::Kind::parameter &&
                                  ph->value.parameter == request.parameter);
            }
        }
        if (!found) {
            throw DomainError("document has no phase parameter '" + request.parameter + "'");
        }
    }
    if (metric.kind == MetricSpec::Kind::fringe_coeff && !preset) {
        throw DomainError("fringe_coeff is defined for the three-path preset only");
    }

    SweepResult result;
    result.parameter = request.parameter;
    result.metric = request.metric;
    result.grid = request.grid;
    result.eps = request.eps;
    result.R4 = request.R4;
    result.phases = request.phases;
    result.preset = preset;

    for (const double x : request.grid) {
        double eps = request.eps;
        Network net;
        double R4 = request.R4;
        if (preset) {
            PhaseConfig phases = request.phases;
            if (request.parameter == "alpha") {
                phases.alpha = x;
            } else if (request.parameter == "beta") {
                phases.beta = x;
            } else if (request.parameter == "gamma") {
                phases.gamma = x;
            } else if (request.parameter == "R4") {
                R4 = x;
            } else {
                eps = x;
            }
            net = build_three_path(R4, phases);
        } else {
            std::map<std::string, double> bindings = request.bindings;
            if (request.parameter == "eps") {
                eps = x;
            } else {
                bindings[request.parameter] = x;
            }
            net = dsl::lower(*request.doc, bindings);
        }

        double value = 0.0;
        switch (metric.kind) {
            case MetricSpec::Kind::exit_probability:
                value = engine::detection_probability(net, eps, metric.exit_port);
                break;
            case MetricSpec::Kind::fringe_coeff:
                value = fitted_fringe_coefficient(R4, eps);
                break;
            case MetricSpec::Kind::incoherence_variation:
                value = engine::incoherence_test(net, eps, metric.exit_port,
                                                 metric.checkpoint)
                            .max_variation;
                break;
        }
        result.values.push_back(value);
    }
    return result;
}

} // namespace wtrace::scenarios
