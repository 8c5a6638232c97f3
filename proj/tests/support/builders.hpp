#pragma once

#include "lipcert/netspec.hpp"

#include <optional>
#include <vector>

namespace lipcert::testing {

inline FilterAttachment attach(const Filter& f, std::size_t source = 0, std::size_t stride = 1,
                               const Nonlinearity& s = Nonlinearity::relu())
{
    FilterAttachment fa;
    fa.filter = f;
    fa.source = source;
    fa.dilation = Dilation::uniform(1, stride);
    fa.sigma = s;
    return fa;
}

// Tap-only final layer reading `count` nodes through delta pooling.
inline LayerSpec tap_layer(std::size_t count)
{
    LayerSpec last;
    last.input_count = count;
    last.pooling.assign(count, Filter::delta(1));
    last.feature_taps.assign(count, true);
    return last;
}

// One merge layer on a single 1-D node followed by a tap-only layer.
inline NetworkSpec merge_net(std::size_t N, std::vector<FilterAttachment> filters, std::vector<MergeSpec> merges,
                             std::optional<Filter> pooling = std::nullopt)
{
    NetworkSpec net;
    net.input_shape = {N};
    LayerSpec l;
    l.input_count = 1;
    l.pooling = {pooling};
    l.feature_taps = {pooling.has_value()};
    l.filters = std::move(filters);
    l.merges = std::move(merges);
    net.layers = {l, tap_layer(l.merges.size())};
    validate(net);
    return net;
}

// One linear layer (targets instead of merges) followed by a tap-only layer.
inline NetworkSpec linear_net(std::size_t N, std::vector<FilterAttachment> filters,
                              std::optional<Filter> pooling = std::nullopt)
{
    NetworkSpec net;
    net.input_shape = {N};
    LayerSpec l;
    l.input_count = 1;
    l.pooling = {pooling};
    l.feature_taps = {pooling.has_value()};
    l.filters = std::move(filters);
    net.layers = {l, tap_layer(l.output_count())};
    validate(net);
    return net;
}

// Single-node net whose only feature output is the input itself.
inline NetworkSpec identity_net(const Shape& shape)
{
    NetworkSpec net;
    net.input_shape = shape;
    LayerSpec l;
    l.input_count = 1;
    l.pooling = {Filter::delta(shape.size())};
    l.feature_taps = {true};
    net.layers = {l};
    validate(net);
    return net;
}

}  // namespace lipcert::testing
