#include "lipcert/power_iteration.hpp"

#include "lipcert/error.hpp"
#include "lipcert/rng.hpp"
#include "lipcert/signal.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace lipcert {

namespace {

struct Attempt {
    bool converged = false;
    PowerResult result;
};

double norm_of(const std::vector<double>& v) { return std::sqrt(squared_norm(v)); }

// Subtracts the components along the orthonormal vectors in `basis`; returns the norm left.
double orthogonalize(std::vector<double>& v, const std::vector<std::vector<double>>& basis)
{
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& q : basis) {
            const double c = dot(q, v);
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= c * q[i];
        }
    return norm_of(v);
}

// Power iteration on B = A^T A. Each step also solves the Rayleigh-Ritz problem on
// span{x, Bx - lambda x, previous step}, which keeps the monotone Rayleigh quotients of the
// plain iteration but converges with the square root of the eigenvalue gap.
Attempt run_attempt(const LinearMap& forward, const LinearMap& adjoint, std::size_t n, const PowerOptions& opt,
                    std::uint64_t seed)
{
    Rng rng(seed, 0);
    std::vector<double> x = rng.unit_vector(n);
    std::vector<double> p;  // previous step direction, empty on the first iteration
    std::vector<double> w, u;
    auto apply_b = [&](const std::vector<double>& v) {
        std::vector<double> a, b;
        forward(v, a);
        adjoint(a, b);
        return b;
    };
    double lambda_prev = -1.0;
    Attempt a;
    a.result.tol = opt.tol;
    for (int it = 1; it <= opt.max_iterations; ++it) {
        forward(x, w);
        const double lambda = squared_norm(w);
        adjoint(w, u);
        a.result.iterations = it;
        if (lambda == 0.0 || norm_of(u) == 0.0) {
            a.converged = true;
            a.result.sigma_squared = 0.0;
            a.result.sigma = 0.0;
            a.result.direction = x;
            a.result.residual = 0.0;
            return a;
        }
        std::vector<double> r(n);
        for (std::size_t i = 0; i < n; ++i) r[i] = u[i] - lambda * x[i];
        a.result.residual = norm_of(r) / lambda;
        a.result.sigma_squared = lambda;
        a.result.sigma = std::sqrt(lambda);
        a.result.direction = x;
        if (lambda_prev >= 0.0 && std::abs(lambda - lambda_prev) < opt.tol * lambda) {
            a.converged = true;
            return a;
        }
        lambda_prev = lambda;

        std::vector<std::vector<double>> q{x};
        std::vector<std::vector<double>> bq{u};
        const double drop = 1e-13;
        for (std::vector<double>* cand : {&r, &p}) {
            if (cand->empty()) continue;
            std::vector<double> v = *cand;
            const double before = norm_of(v);
            if (before == 0.0) continue;
            const double after = orthogonalize(v, q);
            if (after <= drop * before || after == 0.0) continue;
            for (double& e : v) e /= after;
            bq.push_back(apply_b(v));
            q.push_back(std::move(v));
        }
        const auto k = static_cast<Eigen::Index>(q.size());
        Eigen::MatrixXd G(k, k);
        for (Eigen::Index i = 0; i < k; ++i)
            for (Eigen::Index j = 0; j < k; ++j) G(i, j) = dot(q[static_cast<std::size_t>(i)], bq[static_cast<std::size_t>(j)]);
        G = 0.5 * (G + G.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(G);
        Eigen::VectorXd c = eig.eigenvectors().col(k - 1);
        if (c(0) < 0.0) c = -c;
        std::vector<double> xn(n, 0.0), pn(n, 0.0);
        for (Eigen::Index j = 0; j < k; ++j)
            for (std::size_t i = 0; i < n; ++i) {
                const double t = c(j) * q[static_cast<std::size_t>(j)][i];
                xn[i] += t;
                if (j > 0) pn[i] += t;
            }
        const double xnorm = norm_of(xn);
        if (xnorm == 0.0) break;
        for (double& e : xn) e /= xnorm;
        x = std::move(xn);
        p = std::move(pn);
    }
    return a;
}

}  // namespace

PowerResult power_iteration(const LinearMap& forward, const LinearMap& adjoint, std::size_t input_dim,
                            const PowerOptions& options)
{
    if (input_dim == 0) return PowerResult{};
    Attempt first = run_attempt(forward, adjoint, input_dim, options, options.seed);
    if (first.converged) return first.result;
    Attempt second = run_attempt(forward, adjoint, input_dim, options, splitmix64(options.seed + 1));
    second.result.restarts = 1;
    second.result.iterations += first.result.iterations;
    if (second.converged) return second.result;
    throw ConvergenceError("power iteration did not converge within " + std::to_string(options.max_iterations) +
                               " iterations (after one restart)",
                           second.result.sigma_squared, second.result.residual, second.result.direction);
}

}  // namespace lipcert
