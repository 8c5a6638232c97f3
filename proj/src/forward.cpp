#include "lipcert/forward.hpp"

#include "lipcert/error.hpp"
#include "lipcert/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace lipcert {

std::size_t FeatureBundle::total_size() const
{
    std::size_t n = 0;
    for (const auto& s : signals) n += s.size();
    return n;
}

double FeatureBundle::squared_norm() const
{
    double s = 0.0;
    for (const auto& sig : signals) s += lipcert::squared_norm(sig.values);
    return s;
}

double FeatureBundle::norm() const { return std::sqrt(squared_norm()); }

std::vector<double> FeatureBundle::flatten() const
{
    std::vector<double> out;
    out.reserve(total_size());
    for (const auto& s : signals) out.insert(out.end(), s.values.begin(), s.values.end());
    return out;
}

double squared_distance(const FeatureBundle& a, const FeatureBundle& b)
{
    if (a.signals.size() != b.signals.size()) throw ShapeError("feature bundles have different layouts");
    double s = 0.0;
    for (std::size_t i = 0; i < a.signals.size(); ++i) s += squared_distance(a.signals[i].values, b.signals[i].values);
    return s;
}

Signal merge_apply(const MergeSpec& merge, const std::vector<Signal>& inputs)
{
    if (inputs.empty()) throw ValidationError("merge of an empty input list");
    const Shape& shape = inputs[0].shape;
    for (const auto& s : inputs)
        if (s.shape != shape) throw ShapeError("merge inputs have different shapes");
    const std::size_t n = inputs[0].size();
    Signal out(shape);
    switch (merge.kind) {
    case MergeKind::sum:
        out = inputs[0];
        for (std::size_t k = 1; k < inputs.size(); ++k)
            for (std::size_t i = 0; i < n; ++i) out.values[i] += inputs[k].values[i];
        break;
    case MergeKind::product:
        out = inputs[0];
        for (std::size_t k = 1; k < inputs.size(); ++k)
            for (std::size_t i = 0; i < n; ++i) out.values[i] *= inputs[k].values[i];
        break;
    case MergeKind::pnorm: {
        const double p = merge.p;
        if (!(p >= 1.0)) throw ValidationError("p-norm merge requires p >= 1");
        for (std::size_t i = 0; i < n; ++i) {
            if (std::isinf(p)) {
                double m = 0.0;
                for (const auto& s : inputs) m = std::max(m, std::abs(s.values[i]));
                out.values[i] = m;
            } else if (p == 1.0) {
                double a = 0.0;
                for (const auto& s : inputs) a += std::abs(s.values[i]);
                out.values[i] = a;
            } else if (p == 2.0) {
                double a = 0.0;
                for (const auto& s : inputs) a += s.values[i] * s.values[i];
                out.values[i] = std::sqrt(a);
            } else {
                double a = 0.0;
                for (const auto& s : inputs) a += std::pow(std::abs(s.values[i]), p);
                out.values[i] = std::pow(a, 1.0 / p);
            }
        }
        break;
    }
    }
    return out;
}

namespace {

Signal apply_sigma(const Nonlinearity& s, Signal x)
{
    if (s.is_identity()) return x;
    for (double& v : x.values) v = s(v);
    return x;
}

const Signal& source_signal(const std::vector<LayerTrace>& layers, std::size_t m, const FilterAttachment& fa)
{
    return layers[fa.source_layer.value_or(m)].inputs.at(fa.source);
}

Signal conv(const Signal& x, const Filter& f) { return circular_convolve(x, f.taps().taps, f.taps().origin); }

}  // namespace

ForwardTrace forward_trace(const NetworkSpec& net, const Signal& f)
{
    if (net.domain != SignalDomain::discrete_periodic)
        throw ValidationError("forward evaluation needs a discrete network");
    if (f.shape != net.input_shape)
        throw ShapeError("input signal has shape " + shape_to_string(f.shape) + ", network expects " +
                         shape_to_string(net.input_shape));
    ForwardTrace tr;
    tr.layers.resize(net.layers.size());
    tr.layers[0].inputs = {f};
    for (std::size_t m = 0; m < net.layers.size(); ++m) {
        const LayerSpec& layer = net.layers[m];
        LayerTrace& lt = tr.layers[m];
        if (lt.inputs.size() != layer.input_count) throw ShapeError("layer input count mismatch during forward pass");
        for (std::size_t n = 0; n < layer.input_count; ++n) {
            if (!layer.has_tap(n)) continue;
            tr.features.keys.push_back(FeatureKey{m, n});
            tr.features.signals.push_back(conv(lt.inputs[n], *layer.pooling[n]));
        }
        if (layer.filters.empty()) continue;
        if (layer.is_linear()) {
            const std::size_t n_out = layer.output_count();
            std::vector<Signal> acc(n_out);
            std::vector<const FilterAttachment*> rep(n_out, nullptr);
            for (const auto& fa : layer.filters) {
                Signal y = conv(source_signal(tr.layers, m, fa), fa.filter);
                Signal& a = acc[*fa.target];
                if (!rep[*fa.target]) {
                    a = std::move(y);
                    rep[*fa.target] = &fa;
                } else {
                    if (a.shape != y.shape) throw ShapeError("linear layer sums signals of different shapes");
                    for (std::size_t i = 0; i < a.size(); ++i) a.values[i] += y.values[i];
                }
            }
            for (std::size_t t = 0; t < n_out; ++t) {
                Signal pre = downsample(acc[t], rep[t]->dilation.stride);
                lt.outputs.push_back(apply_sigma(rep[t]->sigma, pre));
                lt.preacts.push_back(std::move(pre));
            }
        } else {
            lt.preacts.resize(layer.filters.size());
            for (std::size_t k = 0; k < layer.filters.size(); ++k) {
                const auto& fa = layer.filters[k];
                lt.preacts[k] = downsample(conv(source_signal(tr.layers, m, fa), fa.filter), fa.dilation.stride);
            }
            for (std::size_t g = 0; g < layer.merges.size(); ++g) {
                const MergeSpec& mg = layer.merges[g];
                std::vector<Signal> members;
                members.reserve(mg.members.size());
                for (std::size_t k : mg.members) {
                    Signal y = apply_sigma(layer.filters[k].sigma, lt.preacts[k]);
                    if (mg.kind == MergeKind::product)
                        for (double v : y.values)
                            if (std::abs(v) > 1.0)
                                throw Error("layer " + std::to_string(m + 1) + " output node " + std::to_string(g) +
                                            ": product merge member " + std::to_string(k) + " left [-1, 1]");
                    members.push_back(std::move(y));
                }
                lt.outputs.push_back(merge_apply(mg, members));
            }
        }
        if (m + 1 < net.layers.size()) tr.layers[m + 1].inputs = lt.outputs;
    }
    return tr;
}

FeatureBundle forward(const NetworkSpec& net, const Signal& f) { return forward_trace(net, f).features; }

std::vector<FeatureBundle> forward_batch(const NetworkSpec& net, const SignalBatch& batch)
{
    std::vector<FeatureBundle> out(batch.size());
    parallel_for(batch.size(), [&](std::size_t i) { out[i] = forward(net, batch[i]); });
    return out;
}

double empirical_ratio(const NetworkSpec& net, const Signal& f, const Signal& g)
{
    const double d = squared_distance(f.values, g.values);
    if (d == 0.0) throw ValidationError("empirical_ratio needs two distinct inputs");
    return std::sqrt(squared_distance(forward(net, f), forward(net, g)) / d);
}

}  // namespace lipcert
