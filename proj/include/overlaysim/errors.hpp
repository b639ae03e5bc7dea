#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace overlaysim {

// Invalid argument or configuration value.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Referenced node/entity does not exist (or is no longer alive).
class NotFoundError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Attempt to introduce an identifier that is already present.
class CollisionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Random construction failed within its retry budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Operation requested under a policy that does not enable it.
class PolicyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// A structural invariant of the overlay graph does not hold.
class AuditError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Virtual-node replacement has no bootstrap source left.
class ReplacementImpossibleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Experiment config rejected; carries one entry per violated field.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(std::vector<std::string> violations)
        : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

    const std::vector<std::string>& violations() const { return violations_; }

private:
    static std::string join(const std::vector<std::string>& v) {
        std::string out = "invalid config:";
        for (const auto& s : v) {
            out += "\n  - ";
            out += s;
        }
        return out;
    }

    std::vector<std::string> violations_;
};

}  // namespace overlaysim
