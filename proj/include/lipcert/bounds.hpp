#pragma once

#include "lipcert/spectral.hpp"

#include <cstddef>
#include <vector>

namespace lipcert {

// Dense revised simplex for  max c^T x  s.t.  A x <= b, x >= 0  with b >= 0, so the origin is a
// feasible starting vertex. Bland's rule prevents cycling. The ratio test is
// Harris's two-pass rule; direction entries below pivot_tol times the largest are ignored.
struct SimplexResult {
    double value = 0.0;
    std::vector<double> x;
    std::vector<double> dual;  // multipliers of the rows of A at the final basis
    int pivots = 0;
    bool unbounded = false;
};

SimplexResult simplex_maximize(const std::vector<std::vector<double>>& A, const std::vector<double>& b,
                               const std::vector<double>& c, double pivot_tol = 1e-14, double optimality_tol = 1e-9);

struct LpDiagnostics {
    int pivots = 0;
    double feasibility_tol = 1e-10;
    double optimality_tol = 1e-9;
    double max_violation = 0.0;  // largest constraint violation of the returned point
    double dual_value = 0.0;     // b^T u of the dual certificate
    double duality_gap = 0.0;    // |dual_value - lp_bound|
    bool feasible = true;
};

struct LipschitzReport {
    double lp_bound = 0.0;            // L
    double lipschitz_constant = 0.0;  // sqrt(L)
    double corollary_product = 0.0;
    double corollary_sumprod = 0.0;
    std::vector<double> optimal_y;  // y_0 .. y_{M-1}, y_0 = 1
    std::vector<double> optimal_z;  // z_1 .. z_M
    LpDiagnostics diagnostics;
    bool lp_solved = false;
};

// Optimal value of the layered LP over y_1..y_{M-1}, z_1..z_M:
//   y_m + z_m <= B1_m y_{m-1},  y_m <= B2_m y_{m-1}  (m <= M-1),   z_m <= B3_m y_{m-1}  (m <= M).
LipschitzReport solve_lipschitz_lp(const std::vector<BesselTriple>& triples);

// prod_m max(1, B1_m)
double corollary_product(const std::vector<BesselTriple>& triples);
// B3_1 + sum_{m>=2} B3_m prod_{m'<m} B2_{m'}
double corollary_sumprod(const std::vector<BesselTriple>& triples);

// Bessel bounds of every layer followed by the LP: the certified bound L of the network.
double network_lipschitz_bound(const NetworkSpec& net, const SpectralOptions& options = {});

// LP plus both corollaries; with `corollaries_only` the LP fields stay zero.
LipschitzReport lipschitz_report(const std::vector<BesselTriple>& triples, bool corollaries_only = false);

}  // namespace lipcert
