#pragma once

#include "lipcert/filter.hpp"
#include "lipcert/netspec.hpp"
#include "lipcert/signal.hpp"

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace lipcert {

// Circularly stationary Gaussian process on a periodic grid, given by its power spectral
// density over the DFT bins (row-major, same layout as the grid).
struct ProcessConfig {
    Shape shape;
    std::vector<double> spectrum;
    std::uint64_t seed = 1;

    static ProcessConfig flat(const Shape& shape, double variance, std::uint64_t seed);
    // Per-sample-point variance: the mean of the (symmetrized) spectrum.
    double point_variance() const;
};

void validate(const ProcessConfig& cfg);

// n realizations by spectral synthesis X = IDFT(sqrt(S) DFT(w)) of white noise w. The
// spectrum is symmetrized S(k) <- (S(k) + S(-k)) / 2 so realizations are real. Realization i
// depends only on (seed, i).
SignalBatch sample_sss(const ProcessConfig& cfg, std::size_t n);

struct MonteCarloResult {
    double estimate = 0.0;        // E |||Phi(X) - Phi(Y)|||^2
    double standard_error = 0.0;  // of estimate - bound_value (paired)
    std::size_t sample_count = 0;
    double bound_value = 0.0;     // L * E ||X - Y||^2
    double lipschitz_bound = 0.0;
    double input_second_moment = 0.0;  // E ||X - Y||^2
    bool satisfied = false;            // estimate <= bound_value + 3 standard_error
};

bool has_dilation(const NetworkSpec& net);

// Throws ValidationError when the network contains a dilation. `lipschitz_bound` < 0 means
// "compute it from the network's Bessel bounds".
MonteCarloResult verify_theorem2(const NetworkSpec& net, const ProcessConfig& x, const ProcessConfig& y, std::size_t n,
                                 double lipschitz_bound = -1.0);

struct ShiftTest {
    std::size_t feature = 0;  // index into the feature bundle, or the signal itself
    long shift = 0;
    double mean_z = 0.0;    // |mean difference| / standard error, positions 0 and shift
    double second_z = 0.0;  // same for second moments
    bool flagged = false;   // either z above the threshold
};

struct StationarityReport {
    std::vector<ShiftTest> tests;
    double threshold = 4.0;
    bool any_flagged = false;
};

// Moment comparison between grid position 0 and position `shift` (applied along every axis)
// across a batch of same-shape signals.
StationarityReport moment_shift_test(const SignalBatch& batch, const std::vector<long>& shifts, double threshold = 4.0);

StationarityReport test_stationarity(const NetworkSpec& net, const ProcessConfig& cfg, std::size_t n,
                                     const std::vector<long>& shifts, double threshold = 4.0);

struct VarianceEstimate {
    double value = 0.0;
    double standard_error = 0.0;
};

struct CounterexampleReport {
    VarianceEstimate var_y0;       // Var Y(0), Y(t) = X(t) + X(3t)
    VarianceEstimate var_y_half_pi;
    std::vector<double> t_grid;
    std::vector<double> var_x;     // Var X(t) on t_grid
    std::vector<double> var_y;     // Var Y(t) on t_grid
    std::size_t n = 0;
};

// X(t) = cos(t + theta), theta uniform on [0, 2 pi).
CounterexampleReport dilation_counterexample(std::size_t n, std::uint64_t seed, std::size_t grid_points = 64);

struct SpectrumTransferReport {
    std::vector<double> periodogram;  // averaged |DFT(W)|^2 / N
    std::vector<double> expected;     // S(k) |g^(k)|^2
    double max_relative_deviation = 0.0;  // over bins with expected > 0
    double max_absolute_zero_bins = 0.0;  // largest periodogram value where expected == 0
    std::size_t n = 0;
};

SpectrumTransferReport spectrum_transfer_check(const Filter& filter, const ProcessConfig& cfg, std::size_t n);

struct ConcentrationRow {
    double t = 0.0;
    double fraction = 0.0;
    double fraction_se = 0.0;
    double bound = 0.0;
    bool satisfied = false;  // fraction <= bound + 3 fraction_se
};

struct ConcentrationReport {
    double median = 0.0;
    double median_se = 0.0;  // bootstrap
    double sigma_squared = 0.0;  // E ||X||^2
    double lipschitz_bound = 0.0;
    std::vector<ConcentrationRow> rows;
    bool all_satisfied = true;
};

// Throws ValidationError for n < 100. `lipschitz_bound` < 0 means "compute from the network".
ConcentrationReport concentration_profile(const NetworkSpec& net, const ProcessConfig& cfg, std::size_t n,
                                          const std::vector<double>& t_grid, double lipschitz_bound = -1.0);

}  // namespace lipcert
