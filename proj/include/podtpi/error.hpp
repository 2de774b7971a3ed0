#pragma once

#include <stdexcept>
#include <string>

namespace podtpi {

/// Failure classes. The conduct service maps each class to one HTTP status.
enum class ErrorKind {
    kInvalidArgument,  // malformed or out-of-range input
    kOutOfOrder,       // event timestamp earlier than the trial clock
    kConflict,         // valid input that the current trial state refuses
    kNotFound,
    kNumerical,
};

class PodError : public std::runtime_error {
public:
    PodError(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
    throw PodError(kind, what);
}

inline void require(bool cond, const std::string& what) {
    if (!cond) fail(ErrorKind::kInvalidArgument, what);
}

}  // namespace podtpi
