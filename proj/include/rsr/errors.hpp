#pragma once

#include <stdexcept>
#include <string>

namespace rsr {

// Bad shapes, out-of-range parameters, violated preconditions.
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Missing files, malformed dumps, geometry that cannot be evaluated.
class RuntimeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class PointBehindCameraError : public ArgumentError {
public:
    using ArgumentError::ArgumentError;
};

// Wraps an error raised inside a pipeline stage with the stage name.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what, bool argument_error)
        : std::runtime_error(stage + ": " + what),
          stage_(std::move(stage)),
          argument_error_(argument_error) {}

    const std::string& stage() const noexcept { return stage_; }
    bool is_argument_error() const noexcept { return argument_error_; }

private:
    std::string stage_;
    bool argument_error_;
};

// Runs `fn`, re-throwing any rsr error as a StageError tagged with `stage`.
template <typename Fn>
decltype(auto) run_stage(const char* stage, Fn&& fn) {
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const ArgumentError& e) {
        throw StageError(stage, e.what(), true);
    } catch (const std::exception& e) {
        throw StageError(stage, e.what(), false);
    }
}

}  // namespace rsr
