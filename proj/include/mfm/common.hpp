#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfm {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Thrown when an input violates a documented precondition (bad weights,
// dimension mismatch, malformed file, ...). The CLI maps it to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

// Thrown when an iterative solver fails to reach its tolerance. Carries the
// last residual so callers can report it. The CLI maps it to exit code 3.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& msg, double residual)
        : std::runtime_error(msg), last_residual(residual) {}
    double last_residual;
};

// Worker count for parallel sections. MFM_THREADS caps it; unset or invalid
// values fall back to hardware concurrency.
int worker_count();

// Runs fn(i) for i in [0, n). Results must be written to preallocated slots
// indexed by i so the output is independent of the thread schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

inline double clamp_unit(double x) { return x < -1.0 ? -1.0 : (x > 1.0 ? 1.0 : x); }

}  // namespace mfm
