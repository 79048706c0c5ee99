#include "wtrace/dsl.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <utility>

namespace wtrace::dsl {

double NumberLit::value() const {
    if (kind == Kind::fraction) {
        return static_cast<double>(num) / static_cast<double>(den);
    }
    return decimal_value;
}

UnboundParameter::UnboundParameter(std::string parameter, SourceSpan where)
    : DomainError("unbound parameter '" + parameter + "' (line " + std::to_string(where.line) +
                  ", column " + std::to_string(where.column) + ")"),
      name(std::move(parameter)),
      span(where) {}

namespace {

struct Token {
    std::string_view text;
    int column = 0; // 1-based
};

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    for (std::string_view& line : lines) {
        if (!line.empty() && line.back() == '\r') {
            line.remove_suffix(1);
        }
    }
    return lines;
}

std::vector<Token> tokenize(std::string_view line) {
    std::vector<Token> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        if (line[i] == ' ' || line[i] == '\t') {
            ++i;
            continue;
        }
        std::size_t start = i;
        while (i < line.size() && line[i] != ' ' && line[i] != '\t') {
            ++i;
        }
        tokens.push_back(Token{line.substr(start, i - start), static_cast<int>(start) + 1});
    }
    return tokens;
}

struct LineParser {
    const std::vector<Token>& tokens;
    int line_no;
    int line_length;
    std::size_t next = 0;
    ParseError* error; // set on failure

    bool fail(const std::string& message, const Token& tok) {
        *error = ParseError{message, line_no, tok.column, std::string(tok.text)};
        return false;
    }

    bool fail_eol(const std::string& message) {
        *error = ParseError{message, line_no, line_length + 1, ""};
        return false;
    }

    bool take(Token& out, const std::string& expected) {
        if (next >= tokens.size()) {
            return fail_eol("expected " + expected);
        }
        out = tokens[next++];
        return true;
    }

    bool finish() {
        if (next < tokens.size()) {
            return fail("unexpected trailing token", tokens[next]);
        }
        return true;
    }
};

bool is_ident(std::string_view s) {
    if (s.empty()) {
        return false;
    }
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) {
        return false;
    }
    for (char ch : s) {
        if (!(std::isalnum(static_cast<unsigned char>(ch)) || ch == '_')) {
            return false;
        }
    }
    return true;
}

bool parse_int(std::string_view s, int& out) {
    if (s.empty()) {
        return false;
    }
    for (char ch : s) {
        if (!std::isdigit(static_cast<unsigned char>(ch))) {
            return false;
        }
    }
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

bool parse_longlong(std::string_view s, long long& out) {
    if (s.empty()) {
        return false;
    }
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(begin, end, out);
    return ec == std::errc{} && ptr == end;
}

// NUMBER: decimal or symbolic fraction "p/q"
bool parse_number(LineParser& p, std::string_view s, const Token& tok, NumberLit& out) {
    const std::size_t slash = s.find('/');
    if (slash != std::string_view::npos) {
        long long num = 0;
        long long den = 0;
        if (!parse_longlong(s.substr(0, slash), num) ||
            !parse_longlong(s.substr(slash + 1), den)) {
            return p.fail("malformed fraction", tok);
        }
        if (den == 0) {
            return p.fail("fraction denominator is zero", tok);
        }
        out.kind = NumberLit::Kind::fraction;
        out.num = num;
        out.den = den;
        return true;
    }
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
        return p.fail("malformed number", tok);
    }
    out.kind = NumberLit::Kind::decimal;
    out.decimal_value = v;
    return true;
}

bool parse_mode(LineParser& p, const std::string& what, int& out) {
    Token tok;
    if (!p.take(tok, what)) {
        return false;
    }
    if (!parse_int(tok.text, out)) {
        return p.fail("expected " + what, tok);
    }
    return true;
}

bool parse_prefixed_value(LineParser& p, std::string_view prefix, const std::string& expected,
                          Token& tok, std::string_view& rest) {
    if (!p.take(tok, expected)) {
        return false;
    }
    if (tok.text.substr(0, prefix.size()) != prefix) {
        return p.fail("expected " + expected, tok);
    }
    rest = tok.text.substr(prefix.size());
    if (rest.empty()) {
        return p.fail("expected " + expected, tok);
    }
    return true;
}

struct SemanticChecker {
    const CircuitDoc& doc;
    ParseError* error;

    bool fail(const std::string& message, const SourceSpan& span) {
        *error = ParseError{message, span.line, span.column, ""};
        return false;
    }

    bool check_mode(int mode, const SourceSpan& span) {
        if (mode < 0 || mode >= doc.modes) {
            return fail("rail " + std::to_string(mode) + " out of range for " +
                            std::to_string(doc.modes) + " rails",
                        span);
        }
        return true;
    }

    bool run(const SourceSpan& header_span) {
        std::set<std::string> checkpoint_labels;
        std::set<std::string> detector_labels;
        std::set<int> detector_modes;
        int sources = 0;
        int detectors = 0;
        int checkpoints = 0;
        for (const Declaration& d : doc.decls) {
            if (const auto* bs = std::get_if<BsStmt>(&d.stmt)) {
                if (!check_mode(bs->mode_a, d.span) || !check_mode(bs->mode_b, d.span)) {
                    return false;
                }
                if (bs->mode_a == bs->mode_b) {
                    return fail("splitter rails must be distinct", d.span);
                }
                const double r = bs->reflectivity.value();
                if (!(r >= 0.0 && r <= 1.0)) {
                    return fail("reflectivity must lie in [0, 1]", d.span);
                }
            } else if (const auto* ph = std::get_if<PhaseStmt>(&d.stmt)) {
                if (!check_mode(ph->mode, d.span)) {
                    return false;
                }
            } else if (const auto* cp = std::get_if<CheckpointStmt>(&d.stmt)) {
                if (!check_mode(cp->mode, d.span)) {
                    return false;
                }
                if (!checkpoint_labels.insert(cp->label).second) {
                    return fail("duplicate checkpoint label '" + cp->label + "'", d.span);
                }
                if (++checkpoints > 16) {
                    return fail("at most 16 checkpoints are supported", d.span);
                }
            } else if (const auto* src = std::get_if<SourceStmt>(&d.stmt)) {
                if (!check_mode(src->mode, d.span)) {
                    return false;
                }
                if (++sources > 1) {
                    return fail("duplicate source declaration", d.span);
                }
            } else if (const auto* det = std::get_if<DetectorStmt>(&d.stmt)) {
                if (!check_mode(det->mode, d.span)) {
                    return false;
                }
                if (!detector_labels.insert(det->label).second) {
                    return fail("duplicate detector label '" + det->label + "'", d.span);
                }
                if (!detector_modes.insert(det->mode).second) {
                    return fail("detector rails must be unique", d.span);
                }
                ++detectors;
            }
        }
        if (sources == 0) {
            return fail("document needs exactly one source", header_span);
        }
        if (detectors == 0) {
            return fail("document needs at least one detector", header_span);
        }
        return true;
    }
};

} // namespace

std::variant<CircuitDoc, ParseError> parse(std::string_view text) {
    CircuitDoc doc;
    ParseError error;
    bool have_header = false;
    SourceSpan header_span{1, 1};

    const std::vector<std::string_view> lines = split_lines(text);
    for (std::size_t li = 0; li < lines.size(); ++li) {
        const std::vector<Token> tokens = tokenize(lines[li]);
        if (tokens.empty() || tokens[0].text.front() == '#') {
            continue;
        }
        LineParser p{tokens, static_cast<int>(li) + 1, static_cast<int>(lines[li].size()), 0,
                     &error};
        Token kw;
        p.take(kw, "statement");
        const SourceSpan span{p.line_no, kw.column};

        if (!have_header) {
            if (kw.text != "modes") {
                return ParseError{"expected 'modes' header", span.line, span.column,
                                  std::string(kw.text)};
            }
            int count = 0;
            if (!parse_mode(p, "rail count", count) || !p.finish()) {
                return error;
            }
            if (count < 1 || count > 64) {
                return ParseError{"rail count must lie in 1..64", span.line, span.column,
                                  std::string(kw.text)};
            }
            doc.modes = count;
            have_header = true;
            header_span = span;
            continue;
        }

        if (kw.text == "modes") {
            return ParseError{"duplicate 'modes' header", span.line, span.column,
                              std::string(kw.text)};
        }
        if (kw.text == "bs") {
            BsStmt s;
            Token tok;
            std::string_view rest;
            if (!parse_mode(p, "rail index", s.mode_a) ||
                !parse_mode(p, "rail index", s.mode_b) ||
                !parse_prefixed_value(p, "R=", "R=<value>", tok, rest) ||
                !parse_number(p, rest, tok, s.reflectivity) || !p.finish()) {
                return error;
            }
            doc.decls.push_back(Declaration{Stmt(s), span});
        } else if (kw.text == "phase") {
            PhaseStmt s;
            Token tok;
            if (!parse_mode(p, "rail index", s.mode) || !p.take(tok, "phase value")) {
                return error;
            }
            if (is_ident(tok.text)) {
                s.value.kind = PhaseValue::Kind::parameter;
                s.value.parameter = std::string(tok.text);
            } else {
                s.value.kind = PhaseValue::Kind::number;
                if (!parse_number(p, tok.text, tok, s.value.number)) {
                    return error;
                }
            }
            if (!p.finish()) {
                return error;
            }
            doc.decls.push_back(Declaration{Stmt(s), span});
        } else if (kw.text == "checkpoint") {
            CheckpointStmt s;
            Token tok;
            std::string_view rest;
            if (!p.take(tok, "checkpoint label")) {
                return error;
            }
            if (!is_ident(tok.text)) {
                p.fail("expected checkpoint label", tok);
                return error;
            }
            s.label = std::string(tok.text);
            if (!parse_prefixed_value(p, "mode=", "mode=<rail>", tok, rest)) {
                return error;
            }
            int mode = 0;
            if (!parse_int(rest, mode)) {
                p.fail("expected mode=<rail>", tok);
                return error;
            }
            s.mode = mode;
            if (!p.finish()) {
                return error;
            }
            doc.decls.push_back(Declaration{Stmt(s), span});
        } else if (kw.text == "source") {
            SourceStmt s;
            if (!parse_mode(p, "rail index", s.mode) || !p.finish()) {
                return error;
            }
            doc.decls.push_back(Declaration{Stmt(s), span});
        } else if (kw.text == "detector") {
            DetectorStmt s;
            Token tok;
            if (!p.take(tok, "detector label")) {
                return error;
            }
            if (!is_ident(tok.text)) {
                p.fail("expected detector label", tok);
                return error;
            }
            s.label = std::string(tok.text);
            if (!parse_mode(p, "rail index", s.mode) || !p.finish()) {
                return error;
            }
            doc.decls.push_back(Declaration{Stmt(s), span});
        } else {
            return ParseError{"unknown statement keyword", span.line, span.column,
                              std::string(kw.text)};
        }
    }

    if (!have_header) {
        return ParseError{"expected 'modes' header", 1, 1, ""};
    }

    SemanticChecker checker{doc, &error};
    if (!checker.run(header_span)) {
        return error;
    }
    return doc;
}

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string format_number(const NumberLit& n) {
    if (n.kind == NumberLit::Kind::fraction) {
        return std::to_string(n.num) + "/" + std::to_string(n.den);
    }
    return format_double(n.decimal_value);
}

} // namespace

std::string serialize(const CircuitDoc& doc) {
    std::string out = "modes " + std::to_string(doc.modes) + "\n";
    for (const Declaration& d : doc.decls) {
        if (const auto* bs = std::get_if<BsStmt>(&d.stmt)) {
            out += "bs " + std::to_string(bs->mode_a) + " " + std::to_string(bs->mode_b) +
                   " R=" + format_number(bs->reflectivity);
        } else if (const auto* ph = std::get_if<PhaseStmt>(&d.stmt)) {
            out += "phase " + std::to_string(ph->mode) + " ";
            if (ph->value.kind == PhaseValue::Kind::parameter) {
                out += ph->value.parameter;
            } else {
                out += format_number(ph->value.number);
            }
        } else if (const auto* cp = std::get_if<CheckpointStmt>(&d.stmt)) {
            out += "checkpoint " + cp->label + " mode=" + std::to_string(cp->mode);
        } else if (const auto* src = std::get_if<SourceStmt>(&d.stmt)) {
            out += "source " + std::to_string(src->mode);
        } else {
            const auto& det = std::get<DetectorStmt>(d.stmt);
            out += "detector " + det.label + " " + std::to_string(det.mode);
        }
        out += "\n";
    }
    return out;
}

Network lower(const CircuitDoc& doc, const std::map<std::string, double>& bindings) {
    Network net;
    net.mode_count = doc.modes;
    for (const Declaration& d : doc.decls) {
        if (const auto* bs = std::get_if<BsStmt>(&d.stmt)) {
            net.stages.push_back(
                BeamSplitter{bs->mode_a, bs->mode_b, bs->reflectivity.value()});
        } else if (const auto* ph = std::get_if<PhaseStmt>(&d.stmt)) {
            double phi = 0.0;
            if (ph->value.kind == PhaseValue::Kind::parameter) {
                const auto it = bindings.find(ph->value.parameter);
                if (it == bindings.end()) {
                    throw UnboundParameter(ph->value.parameter, d.span);
                }
                phi = it->second;
            } else {
                phi = ph->value.number.value();
            }
            net.stages.push_back(PhaseShift{ph->mode, phi});
        } else if (const auto* cp = std::get_if<CheckpointStmt>(&d.stmt)) {
            net.stages.push_back(Checkpoint{cp->mode, cp->label});
        } else if (const auto* src = std::get_if<SourceStmt>(&d.stmt)) {
            net.source_mode = src->mode;
        } else {
            const auto& det = std::get<DetectorStmt>(d.stmt);
            net.detector_ports.emplace_back(det.label, det.mode);
        }
    }
    return net;
}

} // namespace wtrace::dsl
