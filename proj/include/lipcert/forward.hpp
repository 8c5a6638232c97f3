#pragma once

#include "lipcert/netspec.hpp"
#include "lipcert/signal.hpp"

#include <cstddef>
#include <vector>

namespace lipcert {

struct FeatureKey {
    std::size_t layer = 0;  // 0-based
    std::size_t node = 0;
    bool operator==(const FeatureKey&) const = default;
};

// Feature outputs Phi(f), ordered layer-major, node-minor.
struct FeatureBundle {
    std::vector<FeatureKey> keys;
    std::vector<Signal> signals;

    std::size_t total_size() const;
    double squared_norm() const;  // |||Phi(f)|||^2
    double norm() const;
    std::vector<double> flatten() const;
};

double squared_distance(const FeatureBundle& a, const FeatureBundle& b);

// Intermediate values of one layer, kept for linearization.
struct LayerTrace {
    std::vector<Signal> inputs;   // h_{m,n}
    std::vector<Signal> preacts;  // merge layers: per filter, after conv and downsampling; linear layers: per target
    std::vector<Signal> outputs;  // h'_{m,n'}
};

struct ForwardTrace {
    std::vector<LayerTrace> layers;
    FeatureBundle features;
};

Signal merge_apply(const MergeSpec& merge, const std::vector<Signal>& inputs);

// Discrete forward pass. Throws ShapeError when f does not match the input shape and Error
// when a product-merge member leaves [-1, 1] at run time.
FeatureBundle forward(const NetworkSpec& net, const Signal& f);
ForwardTrace forward_trace(const NetworkSpec& net, const Signal& f);
std::vector<FeatureBundle> forward_batch(const NetworkSpec& net, const SignalBatch& batch);

// |||Phi(f) - Phi(g)||| / ||f - g||. Throws ValidationError when f == g.
double empirical_ratio(const NetworkSpec& net, const Signal& f, const Signal& g);

}  // namespace lipcert
