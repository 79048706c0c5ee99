#pragma once

// Text format for mode networks, one declaration per line:
//
//     file       := header stmt*
//     header     := "modes" INT
//     stmt       := bs | phase | checkpoint | source | detector | comment
//     bs         := "bs" INT INT "R=" NUMBER
//     phase      := "phase" INT (NUMBER | IDENT)
//     checkpoint := "checkpoint" IDENT "mode=" INT
//     source     := "source" INT
//     detector   := "detector" IDENT INT
//     comment    := "#" ... end-of-line
//
// NUMBER is a decimal literal or a fraction "p/q"; fractions are kept
// symbolic ("1/3" stays "1/3" through a round-trip) and divided out only
// when the document is lowered to a Network. An IDENT in phase position
// names a parameter bound at lowering time. Comments and blank lines are
// skipped and not part of the document.
//
// Element declaration order is stage order. parse(serialize(doc)) equals
// doc structurally; spans are carried for error reporting and do not take
// part in equality.

#include "wtrace/errors.hpp"
#include "wtrace/network.hpp"

#include <map>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace wtrace::dsl {

struct SourceSpan {
    int line = 0;   // 1-based
    int column = 0; // 1-based
};

struct NumberLit {
    enum class Kind { decimal, fraction };
    Kind kind = Kind::decimal;
    double decimal_value = 0.0; // kind == decimal
    long long num = 0;          // kind == fraction
    long long den = 1;

    double value() const;
    bool operator==(const NumberLit&) const = default;
};

struct PhaseValue {
    enum class Kind { number, parameter };
    Kind kind = Kind::number;
    NumberLit number;      // kind == number
    std::string parameter; // kind == parameter
    bool operator==(const PhaseValue&) const = default;
};

struct BsStmt {
    int mode_a = 0;
    int mode_b = 0;
    NumberLit reflectivity;
    bool operator==(const BsStmt&) const = default;
};

struct PhaseStmt {
    int mode = 0;
    PhaseValue value;
    bool operator==(const PhaseStmt&) const = default;
};

struct CheckpointStmt {
    std::string label;
    int mode = 0;
    bool operator==(const CheckpointStmt&) const = default;
};

struct SourceStmt {
    int mode = 0;
    bool operator==(const SourceStmt&) const = default;
};

struct DetectorStmt {
    std::string label;
    int mode = 0;
    bool operator==(const DetectorStmt&) const = default;
};

using Stmt = std::variant<BsStmt, PhaseStmt, CheckpointStmt, SourceStmt, DetectorStmt>;

struct Declaration {
    Stmt stmt;
    SourceSpan span; // not part of equality
    bool operator==(const Declaration& other) const { return stmt == other.stmt; }
};

struct CircuitDoc {
    int modes = 0;
    std::vector<Declaration> decls; // statement order == declaration order

    bool operator==(const CircuitDoc& other) const {
        return modes == other.modes && decls == other.decls;
    }
};

struct ParseError {
    std::string message;
    int line = 0;
    int column = 0;
    std::string offending; // offending token, possibly empty at end-of-line
};

// Total over arbitrary bytes: returns a document or the first error
// (syntax errors during the scan, semantic errors from a validation pass
// over the parsed statements), never throws.
std::variant<CircuitDoc, ParseError> parse(std::string_view text);

// Canonical text: one statement per line, single spaces, no comments,
// fractions symbolic, decimals in shortest round-trip form.
std::string serialize(const CircuitDoc& doc);

// Thrown by lower() for a phase parameter with no binding.
struct UnboundParameter : DomainError {
    std::string name;
    SourceSpan span;
    UnboundParameter(std::string parameter, SourceSpan where);
};

// Build the Network: element declarations become stages in order, source
// and detectors transfer as declared. Unknown names in bindings are
// ignored; a parameter without a binding throws UnboundParameter.
Network lower(const CircuitDoc& doc, const std::map<std::string, double>& bindings = {});

} // namespace wtrace::dsl
