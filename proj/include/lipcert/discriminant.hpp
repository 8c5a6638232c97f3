#pragma once

#include "lipcert/filter.hpp"
#include "lipcert/forward.hpp"
#include "lipcert/netspec.hpp"
#include "lipcert/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace lipcert {

// Gaussian class mu + W * nu with nu white, W a stride-1 circular coloring filter.
struct ClassModel {
    Signal mean;
    Filter coloring;
    std::string label;
};

void validate(const ClassModel& c);
SignalBatch sample_class(const ClassModel& c, std::size_t n, std::uint64_t seed);

// Network with W prepended as a first layer (identity nonlinearity, no dilation, no pooling).
NetworkSpec prepend_coloring(const NetworkSpec& net, const Filter& coloring);

struct DiscriminantReport {
    double s = 0.0;      // |||mean1 - mean2|||^2 / (||C1||_* + ||C2||_*)
    double s_lip = 0.0;  // |||mean1 - mean2|||^2 / (L1 + L2)
    double numerator = 0.0;
    double nuclear1 = 0.0;
    double nuclear2 = 0.0;
    double lipschitz1 = 0.0;
    double lipschitz2 = 0.0;
    std::vector<double> feature_mean1;
    std::vector<double> feature_mean2;
    std::size_t feature_dim = 0;
    std::size_t samples_per_class = 0;
    bool shrinkage = false;  // n < feature_dim: diagonal loading 1e-6 trace / D applied
};

// Sample covariance (unbiased) of row vectors and its nuclear norm via SVD.
std::vector<std::vector<double>> sample_covariance(const std::vector<std::vector<double>>& rows);
double nuclear_norm(const std::vector<std::vector<double>>& matrix);

// Each class draws its noise from a stream keyed by (seed, label). Throws Error when both
// denominators vanish (degenerate classes).
DiscriminantReport discriminant(const NetworkSpec& net, const ClassModel& class1, const ClassModel& class2,
                                std::size_t n, std::uint64_t seed, const SpectralOptions& options = {});

struct DiscriminantRow {
    std::size_t net = 0;
    double s = 0.0;
    double s_lip = 0.0;
    double error = 0.0;
    bool excluded = false;
    std::string reason;
};

struct DiscriminantTable {
    std::vector<DiscriminantRow> rows;
    double spearman_s = 0.0;
    double spearman_s_lip = 0.0;
    std::vector<std::string> warnings;
};

// Per net: S and S~ from n_train samples per class, and the test error of the nearest-class-mean
// rule (fitted on the training features) over n_test fresh samples per class. Degenerate nets
// are excluded with a warning. Requires at least two nets.
DiscriminantTable error_vs_discriminant(const std::vector<NetworkSpec>& nets, const ClassModel& class1,
                                        const ClassModel& class2, std::size_t n_train, std::size_t n_test,
                                        std::uint64_t seed, const SpectralOptions& options = {});

// Spearman rank correlation with average ranks for ties; nullopt when either side is constant.
std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace lipcert
