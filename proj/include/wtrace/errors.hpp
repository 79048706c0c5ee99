#pragma once

#include <stdexcept>
#include <string>

namespace wtrace {

// A request outside the physical or numerical domain of an operation
// (reflectivity outside [0,1], marker strength outside [0,1/3], ...).
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A malformed network or an out-of-range reference into one
// (bad mode index, unknown detector port, unknown checkpoint label).
struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Pre/post-selection overlap too small for a conditional quantity to be
// meaningful. Raised instead of dividing by a near-zero amplitude.
struct OrthogonalSelection : DomainError {
    using DomainError::DomainError;
};

// Conditioning requested on an exit that carries no probability at all.
struct ConditioningOnNull : DomainError {
    using DomainError::DomainError;
};

// The accounting attribution of inconclusive marker mass requires an
// incoherent checkpoint phase; raised when no checkpoint qualifies.
struct AccountingNotJustified : DomainError {
    using DomainError::DomainError;
};

// A sweep or report was asked for a metric this build does not define.
struct UnknownMetric : DomainError {
    using DomainError::DomainError;
};

} // namespace wtrace
