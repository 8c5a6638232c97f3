#include "lipcert/bounds.hpp"

#include "lipcert/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipcert {

SimplexResult simplex_maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                               const std::vector<double>& c, double pivot_tol, double optimality_tol)
{
    const Eigen::Index rows = static_cast<Eigen::Index>(A.size());
    const Eigen::Index n = static_cast<Eigen::Index>(c.size());
    for (double v : b)
        if (v < 0.0) throw ValidationError("simplex_maximize requires b >= 0");
    if (b.size() != A.size()) throw ShapeError("right-hand side length does not match constraint count");

    // Full matrix [A I]; columns >= n are slacks.
    Eigen::MatrixXd F = Eigen::MatrixXd::Zero(rows, n + rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (A[static_cast<std::size_t>(i)].size() != c.size()) throw ShapeError("constraint row length does not match objective");
        for (Eigen::Index j = 0; j < n; ++j) F(i, j) = A[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
        F(i, n + i) = 1.0;
    }
    Eigen::VectorXd bb(rows), cf = Eigen::VectorXd::Zero(n + rows);
    for (Eigen::Index i = 0; i < rows; ++i) bb(i) = b[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < n; ++j) cf(j) = c[static_cast<std::size_t>(j)];

    std::vector<Eigen::Index> basis(static_cast<std::size_t>(rows));
    for (Eigen::Index i = 0; i < rows; ++i) basis[static_cast<std::size_t>(i)] = n + i;

    // Revised simplex: the basis is refactorized from the original data at every step, so
    // round-off does not accumulate across degenerate pivots.
    SimplexResult res;
    const int max_pivots = 50000;
    Eigen::MatrixXd B(rows, rows);
    Eigen::VectorXd xB(rows), cB(rows), pi(rows);
    Eigen::PartialPivLU<Eigen::MatrixXd> lu;
    auto factor = [&] {
        for (Eigen::Index i = 0; i < rows; ++i) {
            B.col(i) = F.col(basis[static_cast<std::size_t>(i)]);
            cB(i) = cf(basis[static_cast<std::size_t>(i)]);
        }
        lu.compute(B);
        xB = lu.solve(bb);
        pi = lu.transpose().solve(cB);
    };
    while (true) {
        factor();
        // Bland: lowest-index improving column.
        Eigen::Index enter = -1;
        for (Eigen::Index j = 0; j < n + rows; ++j) {
            if (std::find(basis.begin(), basis.end(), j) != basis.end()) continue;
            if (cf(j) - pi.dot(F.col(j)) > optimality_tol) {
                enter = j;
                break;
            }
        }
        if (enter < 0) break;
        if (res.pivots >= max_pivots) throw Error("simplex exceeded its pivot limit");
        const Eigen::VectorXd d = lu.solve(F.col(enter));
        // Two-pass (Harris) ratio test: the step may overshoot any row by at most 1e-12, and
        // among the rows blocking within that band the largest pivot leaves, lowest basic index
        // on ties.
        const double tiny = pivot_tol * std::max(1.0, d.cwiseAbs().maxCoeff());
        const double band = 1e-12;
        double theta = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < rows; ++i)
            if (d(i) > tiny) theta = std::min(theta, (std::max(0.0, xB(i)) + band) / d(i));
        Eigen::Index leave = -1;
        for (Eigen::Index i = 0; i < rows; ++i) {
            if (d(i) <= tiny || std::max(0.0, xB(i)) / d(i) > theta) continue;
            if (leave < 0 || d(i) > d(leave) * (1.0 + 1e-12) ||
                (d(i) >= d(leave) * (1.0 - 1e-12) &&
                 basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)]))
                leave = i;
        }
        if (leave < 0) {
            res.unbounded = true;
            return res;
        }
        basis[static_cast<std::size_t>(leave)] = enter;
        ++res.pivots;
    }

    res.x.assign(static_cast<std::size_t>(n), 0.0);
    for (Eigen::Index i = 0; i < rows; ++i)
        if (basis[static_cast<std::size_t>(i)] < n)
            res.x[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = std::max(0.0, xB(i));
    res.value = 0.0;
    for (std::size_t j = 0; j < c.size(); ++j) res.value += c[j] * res.x[j];
    res.dual.assign(static_cast<std::size_t>(rows), 0.0);
    for (Eigen::Index i = 0; i < rows; ++i) res.dual[static_cast<std::size_t>(i)] = std::max(0.0, pi(i));
    return res;
}

namespace {

void check_triples(const std::vector<BesselTriple>& triples)
{
    if (triples.empty()) throw ValidationError("at least one layer is required");
    for (std::size_t m = 0; m < triples.size(); ++m) {
        const auto& t = triples[m];
        for (double v : {t.b1, t.b2, t.b3})
            if (!std::isfinite(v) || v < 0.0)
                throw ValidationError("Bessel bounds of layer " + std::to_string(m + 1) + " must be finite and nonnegative");
    }
}

}  // namespace

LipschitzReport solve_lipschitz_lp(const std::vector<BesselTriple>& triples)
{
    check_triples(triples);
    const std::size_t M = triples.size();
    // Columns: y_1..y_{M-1} at [0, M-1), z_1..z_M at [M-1, 2M-1).
    const std::size_t ny = M - 1;
    const std::size_t nvar = ny + M;
    auto ycol = [&](std::size_t m) { return m - 1; };       // m in 1..M-1
    auto zcol = [&](std::size_t m) { return ny + m - 1; };  // m in 1..M

    // Products of bounds span many decades over deep nets, so the simplex runs on scaled
    // variables y_m = s_m y'_m, z_m = t_m z'_m where s_m, t_m are the a-priori envelopes
    // s_m = min(B1_m, B2_m) s_{m-1}, t_m = min(B1_m, B3_m) s_{m-1}, and each row is divided
    // by its right-hand-side coefficient B s_{m-1}. Every entry is then a ratio of bounds
    // of one layer. Variables with a zero envelope are fixed at zero and left out.
    std::vector<double> s(M, 1.0), t(M + 1, 0.0);  // s[0] = 1 is y_0
    for (std::size_t m = 1; m <= M; ++m) {
        const auto& b = triples[m - 1];
        t[m] = (m < M ? std::min(b.b1, b.b3) : b.b3) * s[m - 1];
        if (m < M) s[m] = std::min(b.b1, b.b2) * s[m - 1];
    }
    std::vector<double> scale(nvar);
    for (std::size_t m = 1; m < M; ++m) scale[ycol(m)] = s[m];
    for (std::size_t m = 1; m <= M; ++m) scale[zcol(m)] = t[m];
    std::vector<std::size_t> active;  // original column of each LP column
    std::vector<std::size_t> lp_col(nvar, nvar);
    for (std::size_t j = 0; j < nvar; ++j)
        if (scale[j] > 0.0) {
            lp_col[j] = active.size();
            active.push_back(j);
        }
    const std::size_t nact = active.size();

    std::vector<std::vector<double>> As;
    std::vector<double> bs;
    // Each constraint  lhs <= B * y_{m-1}; with m = 1 the right side is the constant B.
    auto add = [&](std::size_t m, std::vector<std::size_t> lhs, double B) {
        std::vector<double> row(nact, 0.0);
        const double rho = B * s[m - 1];
        bool any = false;
        for (std::size_t j : lhs)
            if (lp_col[j] < nact) {
                row[lp_col[j]] += scale[j] / rho;
                any = true;
            }
        if (!any) return;
        double rhs = 0.0;
        if (m == 1) rhs = 1.0;
        else row[lp_col[ycol(m - 1)]] -= 1.0;
        As.push_back(std::move(row));
        bs.push_back(rhs);
    };
    for (std::size_t m = 1; m <= M; ++m) {
        const auto& tr = triples[m - 1];
        if (m <= M - 1) {
            add(m, {ycol(m), zcol(m)}, tr.b1);
            add(m, {ycol(m)}, tr.b2);
        }
        add(m, {zcol(m)}, tr.b3);
    }
    double cmax = 0.0;
    for (std::size_t m = 1; m <= M; ++m) cmax = std::max(cmax, t[m]);
    std::vector<double> c(nact, 0.0);
    for (std::size_t m = 1; m <= M; ++m)
        if (lp_col[zcol(m)] < nact) c[lp_col[zcol(m)]] = t[m] / cmax;

    LipschitzReport r;
    r.diagnostics.feasibility_tol = 1e-10;
    r.diagnostics.optimality_tol = 1e-9;
    SimplexResult sr;
    sr.x.assign(nact, 0.0);
    if (nact > 0) {
        sr = simplex_maximize(As, bs, c, 1e-14, 1e-12);
        if (sr.unbounded) throw Error("Lipschitz LP reported unbounded; Bessel bounds are inconsistent");
    }

    std::vector<double> x(nvar, 0.0);
    for (std::size_t k = 0; k < nact; ++k) x[active[k]] = sr.x[k] * scale[active[k]];
    r.lp_bound = 0.0;
    for (std::size_t m = 1; m <= M; ++m) r.lp_bound += x[zcol(m)];
    r.lipschitz_constant = std::sqrt(std::max(0.0, r.lp_bound));
    r.optimal_y.assign(M, 0.0);
    r.optimal_y[0] = 1.0;
    for (std::size_t m = 1; m < M; ++m) r.optimal_y[m] = x[ycol(m)];
    r.optimal_z.assign(M, 0.0);
    for (std::size_t m = 1; m <= M; ++m) r.optimal_z[m - 1] = x[zcol(m)];

    // Violations are measured on the normalized rows, where entries are ratios of bounds.
    double viol = 0.0;
    for (std::size_t i = 0; i < As.size(); ++i) {
        double lhs = 0.0;
        for (std::size_t k = 0; k < nact; ++k) lhs += As[i][k] * sr.x[k];
        viol = std::max(viol, lhs - bs[i]);
    }
    double dual_value = 0.0;
    for (std::size_t i = 0; i < bs.size(); ++i) dual_value += bs[i] * sr.dual[i];
    dual_value *= cmax;
    if (nact == 0) dual_value = 0.0;
    r.diagnostics.pivots = sr.pivots;
    r.diagnostics.max_violation = std::max(0.0, viol);
    r.diagnostics.feasible = r.diagnostics.max_violation <= r.diagnostics.feasibility_tol;
    r.diagnostics.dual_value = dual_value;
    r.diagnostics.duality_gap = std::abs(dual_value - r.lp_bound);
    r.corollary_product = corollary_product(triples);
    r.corollary_sumprod = corollary_sumprod(triples);
    r.lp_solved = true;
    return r;
}

double corollary_product(const std::vector<BesselTriple>& triples)
{
    check_triples(triples);
    double p = 1.0;
    for (const auto& t : triples) p *= std::max(1.0, t.b1);
    return p;
}

double corollary_sumprod(const std::vector<BesselTriple>& triples)
{
    check_triples(triples);
    double sum = 0.0;
    double prod = 1.0;
    for (const auto& t : triples) {
        sum += t.b3 * prod;
        prod *= t.b2;
    }
    return sum;
}

double network_lipschitz_bound(const NetworkSpec& net, const SpectralOptions& options)
{
    return solve_lipschitz_lp(triples_of(bessel_network(net, options))).lp_bound;
}

LipschitzReport lipschitz_report(const std::vector<BesselTriple>& triples, bool corollaries_only)
{
    if (!corollaries_only) return solve_lipschitz_lp(triples);
    LipschitzReport r;
    r.corollary_product = corollary_product(triples);
    r.corollary_sumprod = corollary_sumprod(triples);
    return r;
}

}  // namespace lipcert
