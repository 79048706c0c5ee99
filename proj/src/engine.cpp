#include "wtrace/engine.hpp"

#include "wtrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <utility>

namespace wtrace::engine {

namespace {

void check_eps(double eps) {
    if (!(eps >= 0.0 && eps <= 1.0 / 3.0)) {
        throw DomainError("marker strength eps must lie in [0, 1/3]");
    }
}

int checkpoint_stage(const Network& net, std::string_view label) {
    for (std::size_t i = 0; i < net.stages.size(); ++i) {
        if (const auto* cp = std::get_if<Checkpoint>(&net.stages[i])) {
            if (cp->label == label) {
                return static_cast<int>(i);
            }
        }
    }
    throw StructuralError("unknown checkpoint '" + std::string(label) + "'");
}

std::vector<Checkpoint> checkpoints_in_order(const Network& net) {
    std::vector<Checkpoint> out;
    for (const Element& el : net.stages) {
        if (const auto* cp = std::get_if<Checkpoint>(&el)) {
            out.push_back(*cp);
        }
    }
    return out;
}

void check_stage(const Network& net, int stage) {
    if (stage < 0 || stage > static_cast<int>(net.stages.size())) {
        throw StructuralError("stage index " + std::to_string(stage) +
                              " out of range for " + std::to_string(net.stages.size()) +
                              " stages");
    }
}

} // namespace

StateVector forward_state(const Network& net, int stage) {
    validate(net);
    check_stage(net, stage);
    StateVector s = initial_state(net);
    for (int i = 0; i < stage; ++i) {
        s = apply_element(std::move(s), net.stages[static_cast<std::size_t>(i)]);
    }
    return s;
}

StateVector backward_state(const Network& net, std::string_view exit_port, int stage) {
    validate(net);
    check_stage(net, stage);
    const int exit_mode = port_mode(net, exit_port);
    StateVector s;
    s.amplitudes.assign(static_cast<std::size_t>(net.mode_count), Complex(0.0, 0.0));
    s.amplitudes[static_cast<std::size_t>(exit_mode)] = Complex(1.0, 0.0);
    s.stage_index = static_cast<int>(net.stages.size());
    for (int i = static_cast<int>(net.stages.size()) - 1; i >= stage; --i) {
        s = apply_element_adjoint(std::move(s), net.stages[static_cast<std::size_t>(i)]);
    }
    return s;
}

Complex overlap(const StateVector& backward, const StateVector& forward) {
    if (backward.amplitudes.size() != forward.amplitudes.size()) {
        throw StructuralError("overlap of states with different rail counts");
    }
    Complex dot(0.0, 0.0);
    for (std::size_t i = 0; i < forward.amplitudes.size(); ++i) {
        dot += std::conj(backward.amplitudes[i]) * forward.amplitudes[i];
    }
    return dot;
}

namespace {

constexpr double kOrthogonalThreshold = 1e-14;

Complex weak_value_at(const Network& net, std::string_view exit_port, int stage, int mode) {
    const StateVector f = forward_state(net, stage);
    const StateVector b = backward_state(net, exit_port, stage);
    const Complex d = overlap(b, f);
    if (std::abs(d) <= kOrthogonalThreshold) {
        throw OrthogonalSelection("pre- and post-selection are orthogonal at exit '" +
                                  std::string(exit_port) + "'");
    }
    const std::size_t m = static_cast<std::size_t>(mode);
    return std::conj(b.amplitudes[m]) * f.amplitudes[m] / d;
}

} // namespace

Complex weak_value(const Network& net, std::string_view exit_port,
                   std::string_view checkpoint_label) {
    validate(net);
    const int stage = checkpoint_stage(net, checkpoint_label);
    const auto& cp = std::get<Checkpoint>(net.stages[static_cast<std::size_t>(stage)]);
    return weak_value_at(net, exit_port, stage, cp.mode);
}

WeakValueReport weak_value_report(const Network& net, std::string_view exit_port) {
    validate(net);
    WeakValueReport report;
    const int end = static_cast<int>(net.stages.size());
    report.selection_overlap =
        overlap(backward_state(net, exit_port, end), forward_state(net, end));
    for (const Checkpoint& cp : checkpoints_in_order(net)) {
        report.values.emplace_back(cp.label, weak_value(net, exit_port, cp.label));
    }
    return report;
}

double MarkerModel::no_amplitude() const { return std::sqrt(1.0 - 3.0 * eps); }

double MarkerModel::yes_amplitude() const { return std::sqrt(3.0 * eps); }

std::vector<double> MarkerModel::record(std::size_t which) const {
    if (which >= checkpoint_labels.size()) {
        throw StructuralError("marker record index out of range");
    }
    const std::size_t dim = std::size_t{1} << checkpoint_labels.size();
    std::vector<double> rec(dim, 0.0);
    rec[0] = no_amplitude();
    rec[std::size_t{1} << which] = yes_amplitude();
    return rec;
}

double MarkerModel::record_overlap(std::size_t j, std::size_t k) const {
    const std::vector<double> a = record(j);
    const std::vector<double> b = record(k);
    double dot = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
    }
    return dot;
}

MarkerModel marker_model(const Network& net, double eps) {
    validate(net);
    check_eps(eps);
    MarkerModel m;
    m.eps = eps;
    for (const Checkpoint& cp : checkpoints_in_order(net)) {
        m.checkpoint_labels.push_back(cp.label);
    }
    return m;
}

double JointOutcome::exit_probability(std::string_view port) const {
    for (std::size_t e = 0; e < exit_ports.size(); ++e) {
        if (exit_ports[e] == port) {
            double sum = 0.0;
            for (double p : probabilities[e]) {
                sum += p;
            }
            return sum;
        }
    }
    throw StructuralError("unknown detector port '" + std::string(port) + "'");
}

double JointOutcome::probability(std::string_view port, unsigned mask) const {
    for (std::size_t e = 0; e < exit_ports.size(); ++e) {
        if (exit_ports[e] == port) {
            if (mask >= probabilities[e].size()) {
                throw StructuralError("marker configuration out of range");
            }
            return probabilities[e][mask];
        }
    }
    throw StructuralError("unknown detector port '" + std::string(port) + "'");
}

double JointOutcome::total() const {
    double sum = 0.0;
    for (const auto& row : probabilities) {
        for (double p : row) {
            sum += p;
        }
    }
    return sum;
}

std::string JointOutcome::config_name(unsigned mask) const {
    if (mask == 0) {
        return "none";
    }
    std::string name;
    for (std::size_t i = 0; i < checkpoint_labels.size(); ++i) {
        if (mask & (1u << i)) {
            if (!name.empty()) {
                name += '+';
            }
            name += checkpoint_labels[i];
        }
    }
    return name;
}

JointOutcome run_with_markers(const Network& net, double eps) {
    validate(net);
    check_eps(eps);

    const std::vector<Checkpoint> cps = checkpoints_in_order(net);
    const std::size_t k = cps.size();
    const std::size_t n_masks = std::size_t{1} << k;
    const std::size_t n_modes = static_cast<std::size_t>(net.mode_count);

    // joint amplitudes, layout [mode][mask]
    std::vector<Complex> amp(n_modes * n_masks, Complex(0.0, 0.0));
    amp[static_cast<std::size_t>(net.source_mode) * n_masks] = Complex(1.0, 0.0);

    const double c = std::sqrt(1.0 - 3.0 * eps);
    const double s = std::sqrt(3.0 * eps);

    std::size_t next_marker = 0;
    for (const Element& el : net.stages) {
        if (const auto* bs = std::get_if<BeamSplitter>(&el)) {
            const double r = std::sqrt(bs->reflectivity);
            const double t = std::sqrt(1.0 - bs->reflectivity);
            Complex* row_a = amp.data() + static_cast<std::size_t>(bs->mode_a) * n_masks;
            Complex* row_b = amp.data() + static_cast<std::size_t>(bs->mode_b) * n_masks;
            for (std::size_t m = 0; m < n_masks; ++m) {
                const Complex a0 = row_a[m];
                const Complex b0 = row_b[m];
                row_a[m] = r * a0 + t * b0;
                row_b[m] = t * a0 - r * b0;
            }
        } else if (const auto* ps = std::get_if<PhaseShift>(&el)) {
            const Complex f = std::polar(1.0, ps->phi);
            Complex* row = amp.data() + static_cast<std::size_t>(ps->mode) * n_masks;
            for (std::size_t m = 0; m < n_masks; ++m) {
                row[m] *= f;
            }
        } else {
            // marker rotation [[c, -s], [s, c]] on this checkpoint's bit,
            // applied only where the particle rides the checkpoint rail
            const auto& cp = std::get<Checkpoint>(el);
            const std::size_t bit = std::size_t{1} << next_marker;
            ++next_marker;
            Complex* row = amp.data() + static_cast<std::size_t>(cp.mode) * n_masks;
            for (std::size_t m = 0; m < n_masks; ++m) {
                if (m & bit) {
                    continue;
                }
                const Complex no = row[m];
                const Complex yes = row[m | bit];
                row[m] = c * no - s * yes;
                row[m | bit] = s * no + c * yes;
            }
        }
    }

    JointOutcome out;
    for (const Checkpoint& cp : cps) {
        out.checkpoint_labels.push_back(cp.label);
    }
    for (const auto& [label, mode] : net.detector_ports) {
        out.exit_ports.push_back(label);
        std::vector<double> row(n_masks, 0.0);
        const Complex* src = amp.data() + static_cast<std::size_t>(mode) * n_masks;
        for (std::size_t m = 0; m < n_masks; ++m) {
            row[m] = std::norm(src[m]);
        }
        out.probabilities.push_back(std::move(row));
    }
    return out;
}

double detection_probability(const Network& net, double eps, std::string_view exit_port) {
    return run_with_markers(net, eps).exit_probability(exit_port);
}

ConditionalDecomposition conditional_decomposition(const Network& net, double eps,
                                                   std::string_view exit_port) {
    const JointOutcome joint = run_with_markers(net, eps);
    const double p = joint.exit_probability(exit_port);
    if (p == 0.0) {
        throw ConditioningOnNull("exit '" + std::string(exit_port) +
                                 "' carries no probability");
    }
    ConditionalDecomposition out;
    out.exit_probability = p;
    out.inconclusive = joint.probability(exit_port, 0);
    for (std::size_t i = 0; i < joint.checkpoint_labels.size(); ++i) {
        const unsigned bit = 1u << i;
        double mass = 0.0;
        const std::size_t n_masks = std::size_t{1} << joint.checkpoint_labels.size();
        for (unsigned m = 0; m < n_masks; ++m) {
            if (m & bit) {
                mass += joint.probability(exit_port, m);
            }
        }
        out.conclusive.emplace_back(joint.checkpoint_labels[i], mass);
    }
    return out;
}

IncoherenceResult incoherence_test(const Network& net, double eps,
                                   std::string_view exit_port,
                                   std::string_view checkpoint_label, int n_samples,
                                   double tolerance) {
    validate(net);
    check_eps(eps);
    if (n_samples < 8) {
        throw DomainError("incoherence test needs at least 8 sweep samples");
    }
    const int stage = checkpoint_stage(net, checkpoint_label);
    const auto& cp = std::get<Checkpoint>(net.stages[static_cast<std::size_t>(stage)]);

    Network probed = net;
    probed.stages.insert(probed.stages.begin() + stage + 1, Element(PhaseShift{cp.mode, 0.0}));

    double lo = 0.0;
    double hi = 0.0;
    for (int i = 0; i < n_samples; ++i) {
        const double phi =
            2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n_samples);
        std::get<PhaseShift>(probed.stages[static_cast<std::size_t>(stage) + 1]).phi = phi;
        const double p = detection_probability(probed, eps, exit_port);
        if (i == 0) {
            lo = hi = p;
        } else {
            lo = std::min(lo, p);
            hi = std::max(hi, p);
        }
    }
    IncoherenceResult res;
    res.max_variation = hi - lo;
    res.incoherent = res.max_variation <= tolerance;
    return res;
}

namespace {

// Forward Born weights of the paths into an exit, read off the fully
// distinguishing run (eps = 1/3), where each conclusive mass is exactly
// the squared path amplitude.
std::vector<double> born_path_weights(const Network& net, std::string_view exit_port) {
    const ConditionalDecomposition ref = conditional_decomposition(net, 1.0 / 3.0, exit_port);
    std::vector<double> w;
    double sum = 0.0;
    for (const auto& [label, mass] : ref.conclusive) {
        w.push_back(mass);
        sum += mass;
    }
    if (sum <= 0.0) {
        throw ConditioningOnNull("exit '" + std::string(exit_port) +
                                 "' is reachable without crossing any checkpoint");
    }
    for (double& x : w) {
        x /= sum;
    }
    return w;
}

} // namespace

PathPosterior path_posterior(const Network& net, double eps, std::string_view exit_port,
                             PosteriorMethod method) {
    const ConditionalDecomposition dec = conditional_decomposition(net, eps, exit_port);
    const double p = dec.exit_probability;

    // single-passage check: every conclusive record must name exactly one
    // checkpoint, otherwise "the" path of a conclusive outcome is undefined
    double booked = dec.inconclusive;
    for (const auto& [label, mass] : dec.conclusive) {
        booked += mass;
    }
    if (std::abs(booked - p) > 1e-12) {
        throw DomainError("markers recorded more than one passage; path posterior undefined");
    }

    PathPosterior post;
    post.method = method;

    if (method == PosteriorMethod::bayes_full) {
        const std::vector<double> w = born_path_weights(net, exit_port);
        for (std::size_t i = 0; i < dec.conclusive.size(); ++i) {
            const auto& [label, mass] = dec.conclusive[i];
            post.probabilities.emplace_back(label, (mass + dec.inconclusive * w[i]) / p);
        }
        return post;
    }

    // accounting: try checkpoints in reverse stage order; the first one
    // whose phase leaves P(exit) flat takes the inconclusive mass
    std::string target;
    for (auto it = dec.conclusive.rbegin(); it != dec.conclusive.rend(); ++it) {
        if (incoherence_test(net, eps, exit_port, it->first).incoherent) {
            target = it->first;
            break;
        }
    }
    if (target.empty()) {
        throw AccountingNotJustified(
            "no checkpoint phase leaves P(" + std::string(exit_port) +
            ") flat; booking the inconclusive mass on a single path is not justified");
    }
    post.attribution_checkpoint = target;
    for (const auto& [label, mass] : dec.conclusive) {
        const double extra = (label == target) ? dec.inconclusive : 0.0;
        post.probabilities.emplace_back(label, (mass + extra) / p);
    }
    return post;
}

} // namespace wtrace::engine
