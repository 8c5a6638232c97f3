#include "lipcert/local.hpp"

#include "lipcert/error.hpp"
#include "lipcert/parallel.hpp"
#include "lipcert/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace lipcert {

namespace {

constexpr double kTieTol = 1e-12;

bool single_winner_merge(const MergeSpec& g)
{
    return g.kind == MergeKind::pnorm && (std::isinf(g.p) || g.members.size() == 1);
}

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

Signal conv(const Signal& x, const Filter& f) { return circular_convolve(x, f.taps().taps, f.taps().origin); }
Signal corr(const Signal& y, const Filter& f) { return circular_correlate(y, f.taps().taps, f.taps().origin); }

void add_into(Signal& acc, const Signal& x)
{
    if (acc.values.empty()) {
        acc = x;
        return;
    }
    for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i] += x.values[i];
}

Signal zeros_like(const Signal& s) { return Signal(s.shape); }

}  // namespace

LinearizedOperator linearize(const NetworkSpec& net, const Signal& f)
{
    if (net.domain != SignalDomain::discrete_periodic) throw ValidationError("linearization needs a discrete network");
    for (std::size_t m = 0; m < net.layers.size(); ++m)
        for (std::size_t g = 0; g < net.layers[m].merges.size(); ++g) {
            const auto& mg = net.layers[m].merges[g];
            if (mg.kind == MergeKind::product)
                throw ValidationError("layer " + std::to_string(m + 1) + " merge group " + std::to_string(g) +
                                      ": product merges are not piecewise linear and cannot be linearized");
            if (mg.kind == MergeKind::pnorm && !single_winner_merge(mg))
                throw ValidationError("layer " + std::to_string(m + 1) + " merge group " + std::to_string(g) +
                                      ": p-norm merges with finite p are not piecewise linear and cannot be linearized");
        }

    LinearizedOperator op;
    op.net_ = net;
    op.trace_ = forward_trace(net, f);
    op.input_dim_ = f.size();
    op.output_dim_ = op.trace_.features.total_size();
    op.masks_.resize(net.layers.size());

    auto warn = [&op](std::string msg) {
        ++op.warnings_;
        if (op.messages_.size() < 16) op.messages_.push_back(std::move(msg));
    };
    auto slopes = [&](const Nonlinearity& s, const Signal& pre, std::size_t m, const std::string& what) {
        LinearizedOperator::FilterMask fm;
        fm.slope.resize(pre.size());
        const auto kinks = s.kinks();
        for (std::size_t i = 0; i < pre.size(); ++i) {
            fm.slope[i] = s.derivative(pre.values[i]);
            for (double c : kinks)
                if (std::abs(pre.values[i] - c) <= kTieTol)
                    warn("layer " + std::to_string(m + 1) + " " + what + " sample " + std::to_string(i) +
                         ": preactivation at a kink of " + s.name());
        }
        return fm;
    };

    for (std::size_t m = 0; m < net.layers.size(); ++m) {
        const LayerSpec& layer = net.layers[m];
        const LayerTrace& lt = op.trace_.layers[m];
        auto& mask = op.masks_[m];
        if (layer.filters.empty()) continue;
        if (layer.is_linear()) {
            std::vector<const FilterAttachment*> rep(layer.output_count(), nullptr);
            for (const auto& fa : layer.filters)
                if (!rep[*fa.target]) rep[*fa.target] = &fa;
            for (std::size_t t = 0; t < rep.size(); ++t)
                mask.filters.push_back(slopes(rep[t]->sigma, lt.preacts[t], m, "output " + std::to_string(t)));
            continue;
        }
        for (std::size_t k = 0; k < layer.filters.size(); ++k)
            mask.filters.push_back(slopes(layer.filters[k].sigma, lt.preacts[k], m, "filter " + std::to_string(k)));
        mask.groups.resize(layer.merges.size());
        for (std::size_t g = 0; g < layer.merges.size(); ++g) {
            const auto& mg = layer.merges[g];
            if (!single_winner_merge(mg)) continue;
            const std::size_t n = lt.outputs[g].size();
            auto& gm = mask.groups[g];
            gm.winner.assign(n, 0);
            gm.sign.assign(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                std::size_t w = 0;
                double best = -1.0;
                std::vector<double> vals(mg.members.size());
                for (std::size_t j = 0; j < mg.members.size(); ++j) {
                    const std::size_t k = mg.members[j];
                    vals[j] = layer.filters[k].sigma(lt.preacts[k].values[i]);
                    if (std::abs(vals[j]) > best) {
                        best = std::abs(vals[j]);
                        w = j;
                    }
                }
                gm.winner[i] = w;
                gm.sign[i] = sign_of(vals[w]);
                const bool w_live = mask.filters[mg.members[w]].slope[i] != 0.0;
                for (std::size_t j = 0; j < vals.size(); ++j) {
                    if (j == w) continue;
                    const bool j_live = mask.filters[mg.members[j]].slope[i] != 0.0;
                    if ((w_live || j_live) && best - std::abs(vals[j]) <= kTieTol)
                        warn("layer " + std::to_string(m + 1) + " merge group " + std::to_string(g) + " sample " +
                             std::to_string(i) + ": argmax tie, first member kept");
                }
                if (w_live && best <= kTieTol)
                    warn("layer " + std::to_string(m + 1) + " merge group " + std::to_string(g) + " sample " +
                         std::to_string(i) + ": winner at zero");
            }
        }
    }
    return op;
}

std::vector<std::vector<double>> LinearizedOperator::tangent_preacts(const std::vector<double>& dx) const
{
    // Per layer, the preactivation tangents concatenated in trace order, followed by the
    // tangent of the feature outputs in the last slot.
    const std::size_t M = net_.layers.size();
    std::vector<std::vector<Signal>> dh(M);
    dh[0] = {Signal(net_.input_shape, dx)};
    std::vector<std::vector<double>> out(M + 1);
    auto& feats = out[M];
    for (std::size_t m = 0; m < M; ++m) {
        const LayerSpec& layer = net_.layers[m];
        const LayerMask& mask = masks_[m];
        for (std::size_t n = 0; n < layer.input_count; ++n) {
            if (!layer.has_tap(n)) continue;
            const Signal t = conv(dh[m][n], *layer.pooling[n]);
            feats.insert(feats.end(), t.values.begin(), t.values.end());
        }
        if (layer.filters.empty()) continue;
        auto src = [&](const FilterAttachment& fa) -> const Signal& { return dh[fa.source_layer.value_or(m)].at(fa.source); };
        std::vector<Signal> outputs;
        if (layer.is_linear()) {
            const std::size_t n_out = layer.output_count();
            std::vector<Signal> acc(n_out);
            std::vector<const FilterAttachment*> rep(n_out, nullptr);
            for (const auto& fa : layer.filters) {
                add_into(acc[*fa.target], conv(src(fa), fa.filter));
                if (!rep[*fa.target]) rep[*fa.target] = &fa;
            }
            for (std::size_t t = 0; t < n_out; ++t) {
                Signal dpre = downsample(acc[t], rep[t]->dilation.stride);
                out[m].insert(out[m].end(), dpre.values.begin(), dpre.values.end());
                for (std::size_t i = 0; i < dpre.size(); ++i) dpre.values[i] *= mask.filters[t].slope[i];
                outputs.push_back(std::move(dpre));
            }
        } else {
            std::vector<Signal> dy(layer.filters.size());
            for (std::size_t k = 0; k < layer.filters.size(); ++k) {
                const auto& fa = layer.filters[k];
                dy[k] = downsample(conv(src(fa), fa.filter), fa.dilation.stride);
                out[m].insert(out[m].end(), dy[k].values.begin(), dy[k].values.end());
                for (std::size_t i = 0; i < dy[k].size(); ++i) dy[k].values[i] *= mask.filters[k].slope[i];
            }
            for (std::size_t g = 0; g < layer.merges.size(); ++g) {
                const auto& mg = layer.merges[g];
                Signal o = zeros_like(dy[mg.members[0]]);
                if (mg.kind == MergeKind::sum) {
                    for (std::size_t k : mg.members)
                        for (std::size_t i = 0; i < o.size(); ++i) o.values[i] += dy[k].values[i];
                } else {
                    const auto& gm = mask.groups[g];
                    for (std::size_t i = 0; i < o.size(); ++i)
                        o.values[i] = gm.sign[i] * dy[mg.members[gm.winner[i]]].values[i];
                }
                outputs.push_back(std::move(o));
            }
        }
        if (m + 1 < M) dh[m + 1] = std::move(outputs);
    }
    return out;
}

std::vector<double> LinearizedOperator::apply(const std::vector<double>& dx) const
{
    if (dx.size() != input_dim_) throw ShapeError("perturbation has the wrong length");
    return std::move(tangent_preacts(dx).back());
}

std::vector<double> LinearizedOperator::adjoint(const std::vector<double>& dy_flat) const
{
    if (dy_flat.size() != output_dim_) throw ShapeError("feature adjoint has the wrong length");
    const std::size_t M = net_.layers.size();
    std::vector<std::vector<Signal>> ah(M);
    for (std::size_t m = 0; m < M; ++m)
        for (const auto& s : trace_.layers[m].inputs) ah[m].push_back(zeros_like(s));

    // Offsets of each tap block in the flat feature vector.
    std::vector<std::vector<std::size_t>> tap_off(M);
    std::size_t pos = 0;
    for (std::size_t m = 0; m < M; ++m) {
        tap_off[m].assign(net_.layers[m].input_count, 0);
        for (std::size_t n = 0; n < net_.layers[m].input_count; ++n) {
            if (!net_.layers[m].has_tap(n)) continue;
            tap_off[m][n] = pos;
            pos += trace_.layers[m].inputs[n].size();
        }
    }

    for (std::size_t m = M; m-- > 0;) {
        const LayerSpec& layer = net_.layers[m];
        const LayerMask& mask = masks_[m];
        const LayerTrace& lt = trace_.layers[m];
        for (std::size_t n = 0; n < layer.input_count; ++n) {
            if (!layer.has_tap(n)) continue;
            Signal a(lt.inputs[n].shape,
                     std::vector<double>(dy_flat.begin() + tap_off[m][n],
                                         dy_flat.begin() + tap_off[m][n] + lt.inputs[n].size()));
            add_into(ah[m][n], corr(a, *layer.pooling[n]));
        }
        if (layer.filters.empty() || m + 1 >= M) continue;
        const std::vector<Signal>& aout = ah[m + 1];
        auto push_back_to_source = [&](const FilterAttachment& fa, const Signal& adpre) {
            const std::size_t sl = fa.source_layer.value_or(m);
            Signal& dst = ah[sl][fa.source];
            const Signal up = upsample(adpre, fa.dilation.stride, dst.shape);
            add_into(dst, corr(up, fa.filter));
        };
        if (layer.is_linear()) {
            for (std::size_t t = 0; t < layer.output_count(); ++t) {
                Signal adpre = aout[t];
                for (std::size_t i = 0; i < adpre.size(); ++i) adpre.values[i] *= mask.filters[t].slope[i];
                for (const auto& fa : layer.filters)
                    if (*fa.target == t) push_back_to_source(fa, adpre);
            }
        } else {
            for (std::size_t g = 0; g < layer.merges.size(); ++g) {
                const auto& mg = layer.merges[g];
                for (std::size_t j = 0; j < mg.members.size(); ++j) {
                    const std::size_t k = mg.members[j];
                    Signal adpre = zeros_like(lt.preacts[k]);
                    for (std::size_t i = 0; i < adpre.size(); ++i) {
                        double a = aout[g].values[i];
                        if (mg.kind != MergeKind::sum) {
                            const auto& gm = mask.groups[g];
                            a = gm.winner[i] == j ? gm.sign[i] * a : 0.0;
                        }
                        adpre.values[i] = a * mask.filters[k].slope[i];
                    }
                    push_back_to_source(layer.filters[k], adpre);
                }
            }
        }
    }
    return ah[0][0].values;
}

double LinearizedOperator::region_radius(const std::vector<double>& v) const
{
    const auto tangents = tangent_preacts(v);
    double radius = std::numeric_limits<double>::infinity();
    auto crossing = [&radius](double dist, double rate) {
        // Quantity currently `dist` >= 0 away from its boundary, changing at `rate`.
        if (rate < 0.0) radius = std::min(radius, std::max(0.0, dist) / -rate);
    };
    for (std::size_t m = 0; m < net_.layers.size(); ++m) {
        const LayerSpec& layer = net_.layers[m];
        if (layer.filters.empty()) continue;
        const LayerTrace& lt = trace_.layers[m];
        const auto& dp = tangents[m];
        std::vector<std::size_t> off{0};
        for (const auto& p : lt.preacts) off.push_back(off.back() + p.size());
        auto sigma_of = [&](std::size_t idx) -> const Nonlinearity& {
            if (!layer.is_linear()) return layer.filters[idx].sigma;
            for (const auto& fa : layer.filters)
                if (*fa.target == idx) return fa.sigma;
            return layer.filters[0].sigma;
        };
        for (std::size_t k = 0; k < lt.preacts.size(); ++k) {
            const auto kinks = sigma_of(k).kinks();
            if (kinks.empty()) continue;
            for (std::size_t i = 0; i < lt.preacts[k].size(); ++i) {
                const double p = lt.preacts[k].values[i];
                const double d = dp[off[k] + i];
                if (d == 0.0) continue;
                for (double c : kinks) {
                    if (d > 0.0 && c >= p) crossing(c - p, -d);
                    if (d < 0.0 && c <= p) crossing(p - c, d);
                }
            }
        }
        if (layer.is_linear()) continue;
        for (std::size_t g = 0; g < layer.merges.size(); ++g) {
            const auto& mg = layer.merges[g];
            if (mg.kind == MergeKind::sum) continue;
            const auto& gm = masks_[m].groups[g];
            for (std::size_t i = 0; i < gm.winner.size(); ++i) {
                std::vector<double> y(mg.members.size()), dy(mg.members.size());
                for (std::size_t j = 0; j < mg.members.size(); ++j) {
                    const std::size_t k = mg.members[j];
                    y[j] = layer.filters[k].sigma(lt.preacts[k].values[i]);
                    dy[j] = masks_[m].filters[k].slope[i] * dp[off[k] + i];
                    // Sign change of member j switches the branch of |y_j|.
                    if (y[j] > 0.0) crossing(y[j], dy[j]);
                    else if (y[j] < 0.0) crossing(-y[j], -dy[j]);
                    else if (dy[j] != 0.0) crossing(0.0, -std::abs(dy[j]));
                }
                const std::size_t w = gm.winner[i];
                const double sw = sign_of(y[w]);
                for (std::size_t j = 0; j < y.size(); ++j) {
                    if (j == w) continue;
                    const double sj = sign_of(y[j]);
                    const double margin = std::abs(y[w]) - std::abs(y[j]);
                    // Ties keep the first index, so a later member only takes over once it is strictly larger.
                    double rate = sw * dy[w] - sj * dy[j];
                    if (sj == 0.0) rate = sw * dy[w] - std::abs(dy[j]);
                    if (margin == 0.0 && j < w && rate == 0.0) continue;
                    crossing(margin, rate);
                }
            }
        }
    }
    return radius;
}

LocalReport sigma_max(const LinearizedOperator& op, const PowerOptions& options)
{
    const PowerResult r = power_iteration([&op](const std::vector<double>& x, std::vector<double>& y) { y = op.apply(x); },
                                          [&op](const std::vector<double>& y, std::vector<double>& x) { x = op.adjoint(y); },
                                          op.input_dim(), options);
    LocalReport rep;
    rep.sigma_max = r.sigma;
    rep.direction = r.direction;
    rep.iterations = r.iterations;
    rep.residual = r.residual;
    rep.tolerance = r.tol;
    rep.warnings = op.warnings();
    return rep;
}

GlobalFromLocal global_from_local(const NetworkSpec& net, const SignalBatch& samples, const PowerOptions& options)
{
    GlobalFromLocal out;
    out.samples.resize(samples.size());
    parallel_for(samples.size(), [&](std::size_t i) { out.samples[i] = sigma_max(linearize(net, samples[i]), options); });
    for (const auto& s : out.samples) out.estimate = std::max(out.estimate, s.sigma_max);
    return out;
}

namespace {

Signal shifted(const Signal& f, const std::vector<double>& v, double h)
{
    Signal g = f;
    for (std::size_t i = 0; i < g.size(); ++i) g.values[i] += h * v[i];
    return g;
}

}  // namespace

std::vector<QuotientPoint> quotient_curve(const NetworkSpec& net, const Signal& f, const std::vector<double>& v,
                                          const std::vector<double>& h_grid)
{
    if (v.size() != f.size()) throw ShapeError("direction has the wrong length");
    if (std::abs(std::sqrt(squared_norm(v)) - 1.0) > 1e-9) throw ValidationError("direction must have unit norm");
    for (double h : h_grid)
        if (!(h > 0.0)) throw ValidationError("quotient_curve step sizes must be positive");
    const FeatureBundle base = forward(net, f);
    std::vector<QuotientPoint> out(h_grid.size());
    parallel_for(h_grid.size(), [&](std::size_t i) {
        const double h = h_grid[i];
        out[i] = QuotientPoint{h, std::sqrt(squared_distance(forward(net, shifted(f, v, h)), base)) / h};
    });
    return out;
}

FoolingResult adversarial_search(const NetworkSpec& net, const FeatureClassifier& classifier, const Signal& f,
                                 const std::vector<double>& v, double h_max)
{
    if (!(h_max > 0.0)) throw ValidationError("h_max must be positive");
    if (v.size() != f.size()) throw ShapeError("direction has the wrong length");
    FoolingResult res;
    auto label = [&](double h) {
        ++res.evaluations;
        return classifier(forward(net, h == 0.0 ? f : shifted(f, v, h)));
    };
    const std::size_t base = label(0.0);
    double lo = 0.0;
    double hi = h_max / 1024.0;
    bool fooled = false;
    while (true) {
        if (label(hi) != base) {
            fooled = true;
            break;
        }
        if (hi >= h_max) break;
        lo = hi;
        hi = std::min(2.0 * hi, h_max);
    }
    if (!fooled) return res;
    const double tol = 1e-3 * h_max;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (label(mid) != base) hi = mid;
        else lo = mid;
    }
    res.h = hi;
    return res;
}

namespace {

double both_orientations(const NetworkSpec& net, const FeatureClassifier& classifier, const Signal& f,
                         std::vector<double> v, double h_max)
{
    double best = std::numeric_limits<double>::infinity();
    for (int s = 0; s < 2; ++s) {
        const auto r = adversarial_search(net, classifier, f, v, h_max);
        if (r.h) best = std::min(best, *r.h);
        for (double& x : v) x = -x;
    }
    return best;
}

}  // namespace

AdversarialComparison adversarial_comparison(const NetworkSpec& net, const FeatureClassifier& classifier,
                                             const Signal& f, double h_max, std::size_t random_directions,
                                             std::uint64_t seed, const PowerOptions& options)
{
    AdversarialComparison out;
    const LinearizedOperator op = linearize(net, f);
    const LocalReport rep = sigma_max(op, options);
    out.sigma_max = rep.sigma_max;
    out.principal_h = both_orientations(net, classifier, f, rep.direction, h_max);
    out.random_h.resize(random_directions);
    const Rng root(seed);
    parallel_for(random_directions, [&](std::size_t i) {
        Rng rng = root.split(i);
        out.random_h[i] = both_orientations(net, classifier, f, rng.unit_vector(f.size()), h_max);
    });
    std::vector<double> sorted = out.random_h;
    std::sort(sorted.begin(), sorted.end());
    if (!sorted.empty()) {
        const std::size_t n = sorted.size();
        out.random_median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    }
    out.principal_not_worse = std::isfinite(out.principal_h) && out.principal_h <= out.random_median;
    return out;
}

FeatureClassifier classifier_head(const LinearClassifier& head)
{
    return [head](const FeatureBundle& b) { return head.predict(b.flatten()); };
}

}  // namespace lipcert
