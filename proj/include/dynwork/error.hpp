#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dynwork {

// Every failure raised by the library derives from Error so callers (the CLI in
// particular) can map them onto exit codes without knowing each type.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define DYNWORK_DEFINE_ERROR(Name)                                   \
    class Name : public Error {                                      \
    public:                                                          \
        explicit Name(const std::string& what) : Error(#Name ": " + what) {} \
    }

DYNWORK_DEFINE_ERROR(PreconditionViolated);
DYNWORK_DEFINE_ERROR(DimensionMismatch);
DYNWORK_DEFINE_ERROR(IntervalSeparationFailure);
DYNWORK_DEFINE_ERROR(NotEigenpair);
DYNWORK_DEFINE_ERROR(ZeroVector);
DYNWORK_DEFINE_ERROR(ContradictionDetected);
DYNWORK_DEFINE_ERROR(DegreeZero);
DYNWORK_DEFINE_ERROR(NotEquivariant);
DYNWORK_DEFINE_ERROR(NotAnEigenclass);
DYNWORK_DEFINE_ERROR(DivergenceDetected);
DYNWORK_DEFINE_ERROR(CombinatorialBudget);
DYNWORK_DEFINE_ERROR(OracleUnavailable);
DYNWORK_DEFINE_ERROR(SchemaError);

#undef DYNWORK_DEFINE_ERROR

class NotAMorphism : public Error {
public:
    NotAMorphism(std::size_t factor, const std::string& what)
        : Error("NotAMorphism: factor " + std::to_string(factor) + ": " + what), factor_(factor) {}
    std::size_t factor() const noexcept { return factor_; }

private:
    std::size_t factor_;
};

}  // namespace dynwork
