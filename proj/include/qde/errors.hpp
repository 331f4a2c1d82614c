#pragma once

#include <stdexcept>
#include <string>

namespace qde {

// Operand windows fail a required inclusion (e.g. embed target too small).
class containment_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Operands live on incompatible site spaces.
class incompatibility_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Input fails a structural validation (non-PSD state, bad probabilities, ...).
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Requested computation exceeds a configured size cap.
class resource_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A numerical result violated its contract beyond tolerance; the message
// carries the offending residuals.
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace qde
