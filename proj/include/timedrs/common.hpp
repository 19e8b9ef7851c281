#pragma once
// Shared primitives: points, cohort enums, error taxonomy.

#include <cmath>
#include <stdexcept>
#include <string>

namespace timedrs {

inline constexpr const char* kVersion = "0.1.0";

struct Point2 {
    double x = 0.0;
    double y = 0.0;
};

inline bool is_finite(const Point2& p) {
    return std::isfinite(p.x) && std::isfinite(p.y);
}

// Errors are split by CLI exit-code class: problems with the inputs (exit 1)
// versus failures of the computation itself (exit 2).
class Error : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
    using Error::Error;
};

class ParseError : public InputError {
public:
    using InputError::InputError;
    ParseError(const std::string& file, long line, const std::string& what)
        : InputError(file + ":" + std::to_string(line) + ": " + what) {}
};

class ValidationError : public InputError {
    using InputError::InputError;
};

class ConflictError : public InputError {
    using InputError::InputError;
};

class ComputeError : public Error {
    using Error::Error;
};

class InsufficientDataError : public ComputeError {
    using ComputeError::ComputeError;
};

class RegistrationFailedError : public ComputeError {
    using ComputeError::ComputeError;
};

class UndefinedStatisticError : public ComputeError {
    using ComputeError::ComputeError;
};

class ProtocolError : public ComputeError {
    using ComputeError::ComputeError;
};

enum class Panel { P1, P2 };
enum class Arm { Arm1, Arm3 };
enum class Endpoint { Pfs, Os };

inline const char* panel_name(Panel p) { return p == Panel::P1 ? "P1" : "P2"; }
inline const char* arm_name(Arm a) { return a == Arm::Arm1 ? "ARM1" : "ARM3"; }
inline const char* endpoint_name(Endpoint e) { return e == Endpoint::Pfs ? "PFS" : "OS"; }

inline Panel parse_panel(const std::string& s) {
    if (s == "P1") return Panel::P1;
    if (s == "P2") return Panel::P2;
    throw ParseError("unknown panel '" + s + "' (expected P1 or P2)");
}

inline Arm parse_arm(const std::string& s) {
    if (s == "ARM1") return Arm::Arm1;
    if (s == "ARM3") return Arm::Arm3;
    throw ParseError("unknown arm '" + s + "' (expected ARM1 or ARM3)");
}

inline Endpoint parse_endpoint(const std::string& s) {
    if (s == "PFS") return Endpoint::Pfs;
    if (s == "OS") return Endpoint::Os;
    throw ParseError("unknown endpoint '" + s + "' (expected PFS or OS)");
}

inline Arm other_arm(Arm a) { return a == Arm::Arm1 ? Arm::Arm3 : Arm::Arm1; }

} // namespace timedrs
