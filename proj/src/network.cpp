#include "wtrace/network.hpp"

#include "wtrace/errors.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <utility>

namespace wtrace {

namespace {

void check_mode(int mode, int mode_count, const char* what) {
    if (mode < 0 || mode >= mode_count) {
        throw StructuralError(std::string(what) + " rail " + std::to_string(mode) +
                              " out of range for " + std::to_string(mode_count) + " rails");
    }
}

} // namespace

void validate(const Network& net) {
    if (net.mode_count < 1) {
        throw StructuralError("network needs at least one rail");
    }
    std::set<std::string> checkpoint_labels;
    for (const Element& el : net.stages) {
        if (const auto* bs = std::get_if<BeamSplitter>(&el)) {
            check_mode(bs->mode_a, net.mode_count, "splitter");
            check_mode(bs->mode_b, net.mode_count, "splitter");
            if (bs->mode_a == bs->mode_b) {
                throw StructuralError("splitter rails must be distinct");
            }
            if (!(bs->reflectivity >= 0.0 && bs->reflectivity <= 1.0)) {
                throw DomainError("splitter reflectivity must lie in [0, 1]");
            }
        } else if (const auto* ps = std::get_if<PhaseShift>(&el)) {
            check_mode(ps->mode, net.mode_count, "phase");
            if (!std::isfinite(ps->phi)) {
                throw DomainError("phase must be finite");
            }
        } else {
            const auto& cp = std::get<Checkpoint>(el);
            check_mode(cp.mode, net.mode_count, "checkpoint");
            if (cp.label.empty()) {
                throw StructuralError("checkpoint label must be nonempty");
            }
            if (!checkpoint_labels.insert(cp.label).second) {
                throw StructuralError("duplicate checkpoint label '" + cp.label + "'");
            }
        }
    }
    if (checkpoint_labels.size() > 16) {
        throw StructuralError("at most 16 checkpoints are supported");
    }
    check_mode(net.source_mode, net.mode_count, "source");
    if (net.detector_ports.empty()) {
        throw StructuralError("network needs at least one detector port");
    }
    std::set<std::string> labels;
    std::set<int> rails;
    for (const auto& [label, mode] : net.detector_ports) {
        check_mode(mode, net.mode_count, "detector");
        if (label.empty() || !labels.insert(label).second) {
            throw StructuralError("detector labels must be nonempty and unique");
        }
        if (!rails.insert(mode).second) {
            throw StructuralError("detector rails must be unique");
        }
    }
}

int port_mode(const Network& net, std::string_view port) {
    for (const auto& [label, mode] : net.detector_ports) {
        if (label == port) {
            return mode;
        }
    }
    throw StructuralError("unknown detector port '" + std::string(port) + "'");
}

StateVector initial_state(const Network& net) {
    check_mode(net.source_mode, net.mode_count, "source");
    StateVector s;
    s.amplitudes.assign(static_cast<std::size_t>(net.mode_count), Complex(0.0, 0.0));
    s.amplitudes[static_cast<std::size_t>(net.source_mode)] = Complex(1.0, 0.0);
    s.stage_index = 0;
    return s;
}

StateVector apply_element(StateVector state, const Element& element) {
    const int n = static_cast<int>(state.amplitudes.size());
    if (const auto* bs = std::get_if<BeamSplitter>(&element)) {
        check_mode(bs->mode_a, n, "splitter");
        check_mode(bs->mode_b, n, "splitter");
        if (bs->mode_a == bs->mode_b) {
            throw StructuralError("splitter rails must be distinct");
        }
        if (!(bs->reflectivity >= 0.0 && bs->reflectivity <= 1.0)) {
            throw DomainError("splitter reflectivity must lie in [0, 1]");
        }
        const double r = std::sqrt(bs->reflectivity);
        const double t = std::sqrt(1.0 - bs->reflectivity);
        Complex& a = state.amplitudes[static_cast<std::size_t>(bs->mode_a)];
        Complex& b = state.amplitudes[static_cast<std::size_t>(bs->mode_b)];
        const Complex a0 = a;
        const Complex b0 = b;
        a = r * a0 + t * b0;
        b = t * a0 - r * b0;
    } else if (const auto* ps = std::get_if<PhaseShift>(&element)) {
        check_mode(ps->mode, n, "phase");
        state.amplitudes[static_cast<std::size_t>(ps->mode)] *= std::polar(1.0, ps->phi);
    } else {
        const auto& cp = std::get<Checkpoint>(element);
        check_mode(cp.mode, n, "checkpoint");
        // identity on the particle; markers couple here in the engine
    }
    ++state.stage_index;
    return state;
}

StateVector apply_element_adjoint(StateVector state, const Element& element) {
    if (const auto* ps = std::get_if<PhaseShift>(&element)) {
        PhaseShift inv{ps->mode, -ps->phi};
        state = apply_element(std::move(state), Element(inv));
    } else {
        // splitter matrices are real symmetric, checkpoints are identity:
        // both are their own adjoints
        state = apply_element(std::move(state), element);
    }
    state.stage_index -= 2; // undo the forward bump; adjoints walk backward
    return state;
}

Unitary total_unitary(const Network& net) {
    validate(net);
    const std::size_t n = static_cast<std::size_t>(net.mode_count);
    Unitary u(n, std::vector<Complex>(n, Complex(0.0, 0.0)));
    for (std::size_t i = 0; i < n; ++i) {
        u[i][i] = Complex(1.0, 0.0);
    }
    for (const Element& el : net.stages) {
        if (const auto* bs = std::get_if<BeamSplitter>(&el)) {
            const double r = std::sqrt(bs->reflectivity);
            const double t = std::sqrt(1.0 - bs->reflectivity);
            auto& row_a = u[static_cast<std::size_t>(bs->mode_a)];
            auto& row_b = u[static_cast<std::size_t>(bs->mode_b)];
            for (std::size_t j = 0; j < n; ++j) {
                const Complex a0 = row_a[j];
                const Complex b0 = row_b[j];
                row_a[j] = r * a0 + t * b0;
                row_b[j] = t * a0 - r * b0;
            }
        } else if (const auto* ps = std::get_if<PhaseShift>(&el)) {
            const Complex f = std::polar(1.0, ps->phi);
            for (Complex& c : u[static_cast<std::size_t>(ps->mode)]) {
                c *= f;
            }
        }
        // checkpoints: identity
    }
    return u;
}

double unitarity_defect(const Unitary& u) {
    const std::size_t n = u.size();
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            Complex dot(0.0, 0.0);
            for (std::size_t k = 0; k < n; ++k) {
                dot += std::conj(u[k][i]) * u[k][j];
            }
            if (i == j) {
                dot -= Complex(1.0, 0.0);
            }
            worst = std::max(worst, std::abs(dot));
        }
    }
    return worst;
}

Network build_three_path(double R4, const PhaseConfig& phases) {
    if (!(R4 >= 0.0 && R4 <= 1.0)) {
        throw DomainError("final-splitter reflectivity R4 must lie in [0, 1]");
    }
    Network net;
    net.mode_count = 4;
    net.source_mode = 0;
    net.stages = {
        BeamSplitter{0, 1, 1.0 / 3.0}, // BS1: 1/3 stays on the bypass rail
        BeamSplitter{1, 2, 0.5},       // BS2: opens the inner loop
        PhaseShift{1, phases.alpha},
        Checkpoint{1, "A"},
        PhaseShift{2, phases.beta},
        Checkpoint{2, "B"},
        PhaseShift{0, phases.gamma},
        Checkpoint{0, "C"},
        BeamSplitter{2, 1, 0.5},       // BS3, oriented so rail 1 carries e^{i beta} - e^{i alpha}
        BeamSplitter{0, 1, R4},        // BS4: exit III on rail 0
    };
    net.detector_ports = {{"I", 2}, {"II", 1}, {"III", 0}};
    return net;
}

} // namespace wtrace
