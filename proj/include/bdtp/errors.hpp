#pragma once

#include <stdexcept>
#include <string>

namespace bdtp {

// A configuration that cannot be satisfied (capacity exceeds the tree,
// node counts beyond the guard, ...).  CLI maps this to exit code 3.
class InfeasibleError : public std::runtime_error {
public:
    explicit InfeasibleError(const std::string& what) : std::runtime_error(what) {}
};

// An iterative routine failed to converge (projection rounds exhausted,
// bisection stuck, ...).  CLI maps this to exit code 4.
class ConvergenceError : public std::runtime_error {
public:
    explicit ConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bdtp
