// wtrace command line tool.
//
// Subcommands: simulate, weak-values, sweep, scenario, parse. Networks come
// from the built-in three-path preset or a circuit document (--file), output
// is CSV or JSON composed in full before anything is written, so a failing
// run leaves stdout empty. Exit codes: 0 success, 1 document parse or
// binding errors, 2 domain and usage errors, 3 self-check failure.

#include "wtrace/dsl.hpp"
#include "wtrace/engine.hpp"
#include "wtrace/errors.hpp"
#include "wtrace/network.hpp"
#include "wtrace/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace {

using wtrace::DomainError;

// Document-level failure with a source position; maps to exit code 1.
struct DocError {
    std::string message;
    int line = 0;
    int column = 0;
};

struct SelfCheckFailure {
    std::string message;
};

double parse_decimal(std::string_view s, const std::string& whole) {
    double v = 0.0;
    const char* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end || !std::isfinite(v)) {
        throw DomainError("bad number '" + whole + "'");
    }
    return v;
}

// Numeric value syntax shared by phases, eps, R4, bindings and grids:
// decimal ("0.25"), fraction ("1/3"), or pi forms ("pi", "-pi/4", "2pi/3",
// "1.5pi").
double parse_value(const std::string& text) {
    const std::string_view s = text;
    if (s.empty()) {
        throw DomainError("empty numeric value");
    }
    const std::size_t pi_pos = s.find("pi");
    if (pi_pos != std::string_view::npos) {
        const std::string_view coef = s.substr(0, pi_pos);
        const std::string_view rest = s.substr(pi_pos + 2);
        double c = 1.0;
        if (coef == "-") {
            c = -1.0;
        } else if (!coef.empty() && coef != "+") {
            c = parse_decimal(coef, text);
        }
        double d = 1.0;
        if (!rest.empty()) {
            if (rest[0] != '/' || rest.size() < 2) {
                throw DomainError("bad number '" + text + "'");
            }
            d = parse_decimal(rest.substr(1), text);
        }
        if (d == 0.0) {
            throw DomainError("division by zero in '" + text + "'");
        }
        return c * std::numbers::pi / d;
    }
    const std::size_t slash = s.find('/');
    if (slash != std::string_view::npos) {
        const double num = parse_decimal(s.substr(0, slash), text);
        const double den = parse_decimal(s.substr(slash + 1), text);
        if (den == 0.0) {
            throw DomainError("division by zero in '" + text + "'");
        }
        return num / den;
    }
    return parse_decimal(s, text);
}

// ---------------------------------------------------------------- output

using Cell = std::variant<double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
};

using Meta = std::vector<std::pair<std::string, Cell>>;

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) {
        return s;
    }
    std::string out = "\"";
    for (const char c : s) {
        if (c == '"') {
            out += "\"\"";
        } else {
            out += c;
        }
    }
    out += '"';
    return out;
}

std::string cell_text(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        return fmt_double(*d);
    }
    return std::get<std::string>(c);
}

std::string render_csv(const Table& t) {
    std::string out;
    for (std::size_t i = 0; i < t.columns.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += csv_field(t.columns[i]);
    }
    out += '\n';
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) {
                out += ',';
            }
            out += csv_field(cell_text(row[i]));
        }
        out += '\n';
    }
    return out;
}

std::string json_scalar(const Cell& c) {
    if (const auto* d = std::get_if<double>(&c)) {
        if (std::isfinite(*d)) {
            return fmt_double(*d);
        }
        return nlohmann::json(fmt_double(*d)).dump();
    }
    return nlohmann::json(std::get<std::string>(c)).dump();
}

std::string render_json(const Table& t, const Meta& meta) {
    std::string out = "{\"meta\":{";
    for (std::size_t i = 0; i < meta.size(); ++i) {
        if (i) {
            out += ',';
        }
        out += nlohmann::json(meta[i].first).dump();
        out += ':';
        out += json_scalar(meta[i].second);
    }
    out += "},\"rows\":[";
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (r) {
            out += ',';
        }
        out += '{';
        for (std::size_t i = 0; i < t.rows[r].size(); ++i) {
            if (i) {
                out += ',';
            }
            out += nlohmann::json(t.columns[i]).dump();
            out += ':';
            out += json_scalar(t.rows[r][i]);
        }
        out += '}';
    }
    out += "]}\n";
    return out;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::fwrite(text.data(), 1, text.size(), stdout);
        return;
    }
    std::ofstream f(out_path, std::ios::binary);
    f << text;
    if (!f) {
        throw DomainError("cannot write '" + out_path + "'");
    }
}

// ---------------------------------------------------------------- setup

struct CommonOpts {
    std::string preset = "three-path";
    std::string file;
    std::string eps = "0";
    std::string R4 = "1/3";
    std::string alpha = "0";
    std::string beta = "0";
    std::string gamma = "0";
    std::vector<std::string> binds;
    std::string exit_port = "III";
    std::string format = "csv";
    std::string out;
};

struct NetworkSetup {
    wtrace::Network net;
    bool preset = true;
    std::string file;
    double eps = 0.0;
    double R4 = 1.0 / 3.0;
    wtrace::PhaseConfig phases;
    std::optional<wtrace::dsl::CircuitDoc> doc;
    std::map<std::string, double> bindings;
};

void add_source_opts(CLI::App* cmd, CommonOpts& o) {
    auto* preset = cmd->add_option("--preset", o.preset, "built-in network")
                       ->check(CLI::IsMember({"three-path"}));
    auto* file = cmd->add_option("--file", o.file, "circuit document to load");
    preset->excludes(file);
    file->excludes(preset);
    cmd->add_option("--bind", o.binds, "NAME=VALUE phase binding for --file")
        ->type_size(1);
}

void add_config_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--eps", o.eps, "marker strength in [0, 1/3]");
    cmd->add_option("--R4", o.R4, "final-splitter reflectivity (preset)");
    cmd->add_option("--alpha", o.alpha, "loop phase alpha (preset)");
    cmd->add_option("--beta", o.beta, "loop phase beta (preset)");
    cmd->add_option("--gamma", o.gamma, "bypass phase gamma (preset)");
}

void add_output_opts(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("--format", o.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--out", o.out, "write to file instead of stdout");
}

std::string read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) {
        throw DomainError("cannot read '" + path + "'");
    }
    std::ostringstream buf;
    buf << f.rdbuf();
    return buf.str();
}

wtrace::dsl::CircuitDoc parse_document(const std::string& path) {
    const std::string text = read_file(path);
    auto parsed = wtrace::dsl::parse(text);
    if (const auto* err = std::get_if<wtrace::dsl::ParseError>(&parsed)) {
        throw DocError{err->message, err->line, err->column};
    }
    return std::get<wtrace::dsl::CircuitDoc>(std::move(parsed));
}

std::map<std::string, double> parse_bindings(const std::vector<std::string>& binds) {
    std::map<std::string, double> out;
    for (const std::string& b : binds) {
        const std::size_t eq = b.find('=');
        if (eq == std::string::npos || eq == 0) {
            throw DomainError("--bind expects NAME=VALUE, got '" + b + "'");
        }
        out[b.substr(0, eq)] = parse_value(b.substr(eq + 1));
    }
    return out;
}

NetworkSetup make_setup(const CommonOpts& o) {
    NetworkSetup s;
    s.eps = parse_value(o.eps);
    s.R4 = parse_value(o.R4);
    s.phases.alpha = parse_value(o.alpha);
    s.phases.beta = parse_value(o.beta);
    s.phases.gamma = parse_value(o.gamma);
    s.bindings = parse_bindings(o.binds);
    if (o.file.empty()) {
        s.preset = true;
        s.net = wtrace::build_three_path(s.R4, s.phases);
    } else {
        s.preset = false;
        s.file = o.file;
        s.doc = parse_document(o.file);
        s.net = wtrace::dsl::lower(*s.doc, s.bindings);
    }
    return s;
}

Meta base_meta(const char* subcommand, const NetworkSetup& s) {
    Meta meta;
    meta.emplace_back("subcommand", std::string(subcommand));
    if (s.preset) {
        meta.emplace_back("preset", std::string("three-path"));
        meta.emplace_back("R4", s.R4);
        meta.emplace_back("alpha", s.phases.alpha);
        meta.emplace_back("beta", s.phases.beta);
        meta.emplace_back("gamma", s.phases.gamma);
    } else {
        meta.emplace_back("file", s.file);
    }
    meta.emplace_back("eps", s.eps);
    return meta;
}

// ---------------------------------------------------------------- handlers

std::optional<std::string> self_check(const NetworkSetup& s, double tol) {
    using namespace wtrace;
    const double defect = unitarity_defect(total_unitary(s.net));
    if (defect > tol) {
        return "unitarity defect " + fmt_double(defect) + " exceeds " + fmt_double(tol);
    }
    const auto run = engine::run_with_markers(s.net, s.eps);
    const double leak = std::abs(run.total() - 1.0);
    if (leak > tol) {
        return "joint outcome total deviates from 1 by " + fmt_double(leak);
    }
    const auto mm = engine::marker_model(s.net, s.eps);
    const double expected = 1.0 - 3.0 * s.eps;
    for (std::size_t j = 0; j < mm.checkpoint_labels.size(); ++j) {
        for (std::size_t k = j + 1; k < mm.checkpoint_labels.size(); ++k) {
            const double dev = std::abs(mm.record_overlap(j, k) - expected);
            if (dev > tol) {
                return "record overlap " + mm.checkpoint_labels[j] + "/" +
                       mm.checkpoint_labels[k] + " deviates by " + fmt_double(dev);
            }
        }
    }
    const int n_stages = static_cast<int>(s.net.stages.size());
    for (const auto& [port, mode] : s.net.detector_ports) {
        (void)mode;
        const auto base = engine::overlap(engine::backward_state(s.net, port, 0),
                                          engine::forward_state(s.net, 0));
        for (int cut = 1; cut <= n_stages; ++cut) {
            const auto ov = engine::overlap(engine::backward_state(s.net, port, cut),
                                            engine::forward_state(s.net, cut));
            if (std::abs(ov - base) > tol) {
                return "transition amplitude to " + port + " drifts across cuts by " +
                       fmt_double(std::abs(ov - base));
            }
        }
    }
    return std::nullopt;
}

Table simulate_table(const NetworkSetup& s) {
    const auto run = wtrace::engine::run_with_markers(s.net, s.eps);
    Table t;
    t.columns = {"exit", "probability"};
    for (const std::string& label : run.checkpoint_labels) {
        t.columns.push_back("conclusive_" + label);
    }
    t.columns.emplace_back("inconclusive");
    for (std::size_t i = 0; i < run.exit_ports.size(); ++i) {
        std::vector<Cell> row;
        row.emplace_back(run.exit_ports[i]);
        row.emplace_back(run.exit_probability(run.exit_ports[i]));
        const auto& masses = run.probabilities[i];
        for (std::size_t k = 0; k < run.checkpoint_labels.size(); ++k) {
            double conclusive = 0.0;
            for (std::size_t mask = 0; mask < masses.size(); ++mask) {
                if ((mask >> k) & 1U) {
                    conclusive += masses[mask];
                }
            }
            row.emplace_back(conclusive);
        }
        row.emplace_back(masses.empty() ? 0.0 : masses[0]);
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table weak_values_table(const NetworkSetup& s, const std::string& exit_port) {
    const auto rep = wtrace::engine::weak_value_report(s.net, exit_port);
    Table t;
    t.columns = {"checkpoint", "re", "im"};
    for (const auto& [label, w] : rep.values) {
        t.rows.push_back({Cell{label}, Cell{w.real()}, Cell{w.imag()}});
    }
    t.rows.push_back({Cell{std::string("overlap")},
                      Cell{rep.selection_overlap.real()},
                      Cell{rep.selection_overlap.imag()}});
    return t;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    const std::size_t c1 = spec.find(':');
    if (c1 != std::string::npos) {
        const std::size_t c2 = spec.find(':', c1 + 1);
        if (c2 == std::string::npos || spec.find(':', c2 + 1) != std::string::npos) {
            throw DomainError("--grid expects VALUES,... or START:STOP:COUNT");
        }
        const double start = parse_value(spec.substr(0, c1));
        const double stop = parse_value(spec.substr(c1 + 1, c2 - c1 - 1));
        const std::string count_text = spec.substr(c2 + 1);
        int count = 0;
        const char* end = count_text.data() + count_text.size();
        const auto [ptr, ec] = std::from_chars(count_text.data(), end, count);
        if (ec != std::errc() || ptr != end || count < 1) {
            throw DomainError("grid count must be a positive integer");
        }
        // half-open range, endpoint excluded
        for (int i = 0; i < count; ++i) {
            grid.push_back(start + (stop - start) * static_cast<double>(i) /
                                       static_cast<double>(count));
        }
        return grid;
    }
    std::size_t pos = 0;
    while (pos <= spec.size()) {
        const std::size_t comma = spec.find(',', pos);
        const std::string item =
            spec.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        grid.push_back(parse_value(item));
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    return grid;
}

Table sweep_table(const NetworkSetup& s, const std::string& param,
                  const std::string& grid_spec, const std::string& metric) {
    wtrace::scenarios::SweepRequest req;
    req.doc = s.doc;
    req.bindings = s.bindings;
    req.R4 = s.R4;
    req.phases = s.phases;
    req.eps = s.eps;
    req.parameter = param;
    req.grid = parse_grid(grid_spec);
    req.metric = metric;
    const auto result = wtrace::scenarios::sweep(req);

    Table t;
    t.columns = {param, metric};
    std::vector<std::pair<std::string, double>> fixed;
    if (param != "eps") {
        fixed.emplace_back("eps", result.eps);
    }
    if (result.preset) {
        if (param != "R4") {
            fixed.emplace_back("R4", result.R4);
        }
        if (param != "alpha") {
            fixed.emplace_back("alpha", result.phases.alpha);
        }
        if (param != "beta") {
            fixed.emplace_back("beta", result.phases.beta);
        }
        if (param != "gamma") {
            fixed.emplace_back("gamma", result.phases.gamma);
        }
    }
    for (const auto& [name, value] : fixed) {
        (void)value;
        t.columns.push_back(name);
    }
    for (std::size_t i = 0; i < result.grid.size(); ++i) {
        std::vector<Cell> row;
        row.emplace_back(result.grid[i]);
        row.emplace_back(result.values[i]);
        for (const auto& [name, value] : fixed) {
            (void)name;
            row.emplace_back(value);
        }
        t.rows.push_back(std::move(row));
    }
    return t;
}

Table retrocausation_table(double eps) {
    const auto table = wtrace::scenarios::retrocausation_compare(eps);
    Table t;
    t.columns = {"R4",          "W_A_re",      "W_A_im",      "W_B_re",
                 "W_B_im",      "W_C_re",      "W_C_im",      "P_III",
                 "posterior_A", "posterior_B", "posterior_C", "attribution"};
    for (const auto& row : table.rows) {
        double pa = 0.0, pb = 0.0, pc = 0.0;
        for (const auto& [label, p] : row.posterior.probabilities) {
            if (label == "A") {
                pa = p;
            } else if (label == "B") {
                pb = p;
            } else if (label == "C") {
                pc = p;
            }
        }
        t.rows.push_back({Cell{row.R4}, Cell{row.W_A.real()}, Cell{row.W_A.imag()},
                          Cell{row.W_B.real()}, Cell{row.W_B.imag()},
                          Cell{row.W_C.real()}, Cell{row.W_C.imag()},
                          Cell{row.p_exit3}, Cell{pa}, Cell{pb}, Cell{pc},
                          Cell{row.posterior.attribution_checkpoint}});
    }
    return t;
}

Table figure_weights_table(const NetworkSetup& s) {
    const auto weights = wtrace::scenarios::figure_weights(s.R4, s.phases);
    Table t;
    t.columns = {"link", "forward", "backward"};
    for (const auto& w : weights.links) {
        t.rows.push_back({Cell{w.link}, Cell{w.forward}, Cell{w.backward}});
    }
    return t;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"staged-interferometer simulator and analysis toolkit"};
    app.require_subcommand(1);

    CommonOpts sim_o;
    bool sim_self_check = false;
    auto* sim = app.add_subcommand(
        "simulate", "joint exit and marker-readout probabilities");
    add_source_opts(sim, sim_o);
    add_config_opts(sim, sim_o);
    add_output_opts(sim, sim_o);
    sim->add_flag("--self-check", sim_self_check,
                  "run internal consistency checks first (tolerance from "
                  "WTRACE_TOLERANCE, default 1e-12; failure exits 3)");

    CommonOpts wv_o;
    auto* wv = app.add_subcommand(
        "weak-values", "checkpoint weak values for one exit");
    add_source_opts(wv, wv_o);
    add_config_opts(wv, wv_o);
    add_output_opts(wv, wv_o);
    wv->add_option("--exit", wv_o.exit_port, "exit port label");

    CommonOpts sweep_o;
    std::string sweep_param, sweep_grid, sweep_metric;
    auto* sw = app.add_subcommand("sweep", "metric over a parameter grid");
    add_source_opts(sw, sweep_o);
    add_config_opts(sw, sweep_o);
    add_output_opts(sw, sweep_o);
    sw->add_option("--param", sweep_param, "parameter to sweep")->required();
    sw->add_option("--grid", sweep_grid, "VALUES,... or START:STOP:COUNT (endpoint excluded)")
        ->required();
    sw->add_option("--metric", sweep_metric,
                   "P(<exit>), fringe_coeff, or "
                   "incoherence_variation(<checkpoint>[,<exit>])")
        ->required();

    CommonOpts scen_o;
    std::string scenario_name;
    auto* scen = app.add_subcommand("scenario", "prepackaged studies");
    scen->add_option("name", scenario_name, "retrocausation or figure-weights")
        ->required()
        ->check(CLI::IsMember({"retrocausation", "figure-weights"}));
    add_config_opts(scen, scen_o);
    add_output_opts(scen, scen_o);

    std::string parse_file, parse_out;
    auto* par = app.add_subcommand(
        "parse", "parse a circuit document and print its canonical form");
    par->add_option("--file", parse_file, "circuit document to check")->required();
    par->add_option("--out", parse_out, "write to file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        std::string text;
        std::string out_path;
        if (app.got_subcommand(sim)) {
            const NetworkSetup s = make_setup(sim_o);
            if (sim_self_check) {
                double tol = 1e-12;
                if (const char* env = std::getenv("WTRACE_TOLERANCE")) {
                    tol = parse_value(env);
                }
                if (const auto failure = self_check(s, tol)) {
                    throw SelfCheckFailure{*failure};
                }
            }
            const Table t = simulate_table(s);
            text = sim_o.format == "json" ? render_json(t, base_meta("simulate", s))
                                          : render_csv(t);
            out_path = sim_o.out;
        } else if (app.got_subcommand(wv)) {
            const NetworkSetup s = make_setup(wv_o);
            const Table t = weak_values_table(s, wv_o.exit_port);
            Meta meta = base_meta("weak-values", s);
            meta.emplace_back("exit", wv_o.exit_port);
            text = wv_o.format == "json" ? render_json(t, meta) : render_csv(t);
            out_path = wv_o.out;
        } else if (app.got_subcommand(sw)) {
            const NetworkSetup s = make_setup(sweep_o);
            const Table t = sweep_table(s, sweep_param, sweep_grid, sweep_metric);
            Meta meta = base_meta("sweep", s);
            meta.emplace_back("parameter", sweep_param);
            meta.emplace_back("metric", sweep_metric);
            text = sweep_o.format == "json" ? render_json(t, meta) : render_csv(t);
            out_path = sweep_o.out;
        } else if (app.got_subcommand(scen)) {
            const NetworkSetup s = make_setup(scen_o);
            Table t;
            if (scenario_name == "retrocausation") {
                t = retrocausation_table(s.eps);
            } else {
                t = figure_weights_table(s);
            }
            Meta meta = base_meta("scenario", s);
            meta.emplace_back("scenario", scenario_name);
            text = scen_o.format == "json" ? render_json(t, meta) : render_csv(t);
            out_path = scen_o.out;
        } else {
            const wtrace::dsl::CircuitDoc doc = parse_document(parse_file);
            text = wtrace::dsl::serialize(doc);
            out_path = parse_out;
        }
        emit(text, out_path);
        return 0;
    } catch (const DocError& e) {
        std::fprintf(stderr, "line %d, column %d: %s\n", e.line, e.column,
                     e.message.c_str());
        return 1;
    } catch (const wtrace::dsl::UnboundParameter& e) {
        std::fprintf(stderr, "line %d, column %d: %s\n", e.span.line, e.span.column,
                     e.what());
        return 1;
    } catch (const SelfCheckFailure& e) {
        std::fprintf(stderr, "self-check failed: %s\n", e.message.c_str());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
