#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

namespace lipcert {

// y = A x for a matrix-free operator. The output vector is resized by the callee.
using LinearMap = std::function<void(const std::vector<double>& x, std::vector<double>& y)>;

struct PowerOptions {
    double tol = 1e-12;          // relative change of successive Rayleigh quotients
    int max_iterations = 10000;  // per attempt
    std::uint64_t seed = 0x9d2c5680u;
};

struct PowerResult {
    double sigma_squared = 0.0;  // largest eigenvalue of A^T A
    double sigma = 0.0;
    std::vector<double> direction;  // unit right singular vector
    int iterations = 0;
    int restarts = 0;
    double residual = 0.0;  // ||A^T A v - s v|| / s at the returned iterate
    double tol = 0.0;
};

// Largest singular value of A via power iteration on A^T A, each step refined by a
// Rayleigh-Ritz solve over {x, residual, previous step}. Starts from a seeded random unit
// vector and stops when successive Rayleigh quotients differ by less than tol times the
// current one. One restart with a fresh seed if the cap is hit, then ConvergenceError.
// A zero operator returns 0 with the start vector as direction.
PowerResult power_iteration(const LinearMap& forward, const LinearMap& adjoint, std::size_t input_dim,
                            const PowerOptions& options = {});

}  // namespace lipcert
