#pragma once

#include "lipcert/netspec.hpp"
#include "lipcert/power_iteration.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace lipcert {

struct BesselTriple {
    double b1 = 0.0;  // combined hidden + feature outputs
    double b2 = 0.0;  // hidden outputs only
    double b3 = 0.0;  // feature outputs only

    bool operator==(const BesselTriple&) const = default;
};

struct SpectralOptions {
    std::size_t dense_samples = std::size_t{1} << 14;  // continuous profiles, per axis
    double refine_tol = 1e-12;                         // golden-section bracket width
    PowerOptions power;                                // strided discrete stages
};

enum class BesselMethod { frequency, operator_norm };
std::string to_string(BesselMethod m);

struct LayerBessel {
    BesselTriple triple;
    std::vector<BesselTriple> nodes;  // per input node (merge layers); empty for linear layers
    BesselMethod method = BesselMethod::frequency;
    std::string grid;        // human-readable description of the evaluation grid
    double tolerance = 0.0;  // refinement or power-iteration tolerance behind the numbers
};

// Contraction multiplier of a merge group of size K: K for sum and product merges,
// K^max(0, 2/p - 1) for p-norm merges. Throws ValidationError for p < 1 or K = 0.
double multiplier(MergeKind kind, double p, std::size_t K);

// Bounds of one input node of merge layer m. Skip connections must already be normalized.
BesselTriple bessel_merge_node(const NetworkSpec& net, std::size_t m, std::size_t node,
                               const SpectralOptions& options = {});
// Bounds of a layer without merge groups (a linear operator array followed by nonlinearities).
LayerBessel bessel_no_merge_layer(const NetworkSpec& net, std::size_t m, const SpectralOptions& options = {});
// Dispatches to the merge-node or operator-array formulas.
LayerBessel bessel_layer(const NetworkSpec& net, std::size_t m, const SpectralOptions& options = {});
// All layers; normalizes skip connections first.
std::vector<LayerBessel> bessel_network(const NetworkSpec& net, const SpectralOptions& options = {});
std::vector<BesselTriple> triples_of(const std::vector<LayerBessel>& layers);

// Squared operator norm of the hidden-output stage of discrete layer m (all dilations and
// merge multipliers included), computed matrix-free by power iteration.
PowerResult bessel_discrete_operator(const NetworkSpec& net, std::size_t m, const PowerOptions& options = {});

// Supremum of f over [lo, hi]: max over `samples` uniform points refined by golden-section
// search around the best sample. `argmax` receives the maximizer.
double dense_supremum(const std::function<double(double)>& f, double lo, double hi, std::size_t samples,
                      double refine_tol, double* argmax = nullptr);

}  // namespace lipcert
