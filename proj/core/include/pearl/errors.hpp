#pragma once

#include <stdexcept>
#include <string>

namespace pearl {

/// Base class for every error raised by the engine.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

#define PEARL_DEFINE_ERROR(Name)                          \
    class Name : public Error {                           \
    public:                                               \
        explicit Name(const std::string &what) : Error(what) {} \
    }

PEARL_DEFINE_ERROR(EmptyBucket);
PEARL_DEFINE_ERROR(InsufficientHistory);
PEARL_DEFINE_ERROR(DegenerateBaseline);
PEARL_DEFINE_ERROR(InsufficientData);
PEARL_DEFINE_ERROR(TooFewSamples);
PEARL_DEFINE_ERROR(ZeroPropensity);
PEARL_DEFINE_ERROR(ConfigInvalid);
PEARL_DEFINE_ERROR(DegenerateDesign);
PEARL_DEFINE_ERROR(Singular);
PEARL_DEFINE_ERROR(NoConvergence);
PEARL_DEFINE_ERROR(SchemaError);
PEARL_DEFINE_ERROR(IoError);

#undef PEARL_DEFINE_ERROR

} // namespace pearl
