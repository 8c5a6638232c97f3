#pragma once

#include <cstddef>
#include <vector>

namespace lipcert {

// Affine scores W x + b over flattened features; the label is the first index of the
// largest score.
struct LinearClassifier {
    std::vector<std::vector<double>> weights;
    std::vector<double> bias;

    std::size_t classes() const noexcept { return weights.size(); }
    std::vector<double> scores(const std::vector<double>& x) const;
    std::size_t predict(const std::vector<double>& x) const;

    // Nearest class mean as a linear rule: w_c = mu_c, b_c = -||mu_c||^2 / 2.
    static LinearClassifier nearest_mean(const std::vector<std::vector<double>>& means);
};

}  // namespace lipcert
