#include "lipcert/stochastic.hpp"

#include "lipcert/bounds.hpp"
#include "lipcert/error.hpp"
#include "lipcert/fft.hpp"
#include "lipcert/forward.hpp"
#include "lipcert/parallel.hpp"
#include "lipcert/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace lipcert {

ProcessConfig ProcessConfig::flat(const Shape& shape, double variance, std::uint64_t seed)
{
    return ProcessConfig{shape, std::vector<double>(element_count(shape), variance), seed};
}

double ProcessConfig::point_variance() const
{
    if (spectrum.empty()) return 0.0;
    double s = 0.0;
    for (double v : spectrum) s += v;
    return s / static_cast<double>(spectrum.size());
}

void validate(const ProcessConfig& cfg)
{
    if (cfg.shape.empty() || element_count(cfg.shape) == 0) throw ValidationError("process grid must be non-empty");
    if (cfg.spectrum.size() != element_count(cfg.shape))
        throw ShapeError("spectrum has " + std::to_string(cfg.spectrum.size()) + " bins for a grid of " +
                         std::to_string(element_count(cfg.shape)) + " samples");
    for (double v : cfg.spectrum)
        if (!std::isfinite(v) || v < 0.0) throw ValidationError("spectrum must be finite and nonnegative");
}

namespace {

std::vector<double> symmetrized(const ProcessConfig& cfg)
{
    std::vector<double> s(cfg.spectrum.size());
    for (std::size_t k = 0; k < s.size(); ++k) s[k] = 0.5 * (cfg.spectrum[k] + cfg.spectrum[mirrored_bin(k, cfg.shape)]);
    return s;
}

struct Moments {
    double mean = 0.0;
    double se = 0.0;
};

Moments mean_and_se(const std::vector<double>& d)
{
    Moments m;
    const double n = static_cast<double>(d.size());
    if (d.empty()) return m;
    for (double v : d) m.mean += v;
    m.mean /= n;
    if (d.size() < 2) return m;
    double ss = 0.0;
    for (double v : d) ss += (v - m.mean) * (v - m.mean);
    m.se = std::sqrt(ss / (n - 1.0) / n);
    return m;
}

VarianceEstimate variance_estimate(const std::vector<double>& y)
{
    VarianceEstimate r;
    const double n = static_cast<double>(y.size());
    if (y.size() < 2) return r;
    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (double v : y) {
        const double c = (v - mean) * (v - mean);
        m2 += c;
        m4 += c * c;
    }
    r.value = m2 / (n - 1.0);
    m2 /= n;
    m4 /= n;
    r.standard_error = std::sqrt(std::max(0.0, m4 - m2 * m2) / n);
    return r;
}

double resolve_bound(const NetworkSpec& net, double given) { return given >= 0.0 ? given : network_lipschitz_bound(net); }

}  // namespace

SignalBatch sample_sss(const ProcessConfig& cfg, std::size_t n)
{
    validate(cfg);
    const std::vector<double> s = symmetrized(cfg);
    std::vector<double> amp(s.size());
    for (std::size_t k = 0; k < s.size(); ++k) amp[k] = std::sqrt(s[k]);
    const Rng root(cfg.seed);
    SignalBatch out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng = root.split(i);
        ComplexField w(amp.size());
        for (auto& v : w) v = rng.normal();
        ComplexField spec = fft_forward(w, cfg.shape);
        for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= amp[k];
        const ComplexField x = fft_inverse(spec, cfg.shape);
        Signal sig(cfg.shape);
        for (std::size_t t = 0; t < x.size(); ++t) sig.values[t] = x[t].real();
        out[i] = std::move(sig);
    });
    return out;
}

bool has_dilation(const NetworkSpec& net)
{
    for (const auto& layer : net.layers)
        for (const auto& fa : layer.filters)
            if (!fa.dilation.is_identity()) return true;
    return false;
}

MonteCarloResult verify_theorem2(const NetworkSpec& net, const ProcessConfig& x, const ProcessConfig& y, std::size_t n,
                                 double lipschitz_bound)
{
    if (has_dilation(net))
        throw ValidationError("network contains dilations; feature outputs of dilated layers are no longer stationary");
    if (x.shape != net.input_shape || y.shape != net.input_shape)
        throw ShapeError("process grid does not match the network input shape");
    if (n < 2) throw ValidationError("at least two samples are required");
    const double L = resolve_bound(net, lipschitz_bound);
    const SignalBatch xs = sample_sss(x, n);
    const SignalBatch ys = sample_sss(y, n);
    std::vector<double> lhs(n), rhs(n);
    parallel_for(n, [&](std::size_t i) {
        lhs[i] = squared_distance(forward(net, xs[i]), forward(net, ys[i]));
        rhs[i] = squared_distance(xs[i].values, ys[i].values);
    });
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = lhs[i] - L * rhs[i];
    MonteCarloResult r;
    r.sample_count = n;
    r.lipschitz_bound = L;
    r.estimate = mean_and_se(lhs).mean;
    r.input_second_moment = mean_and_se(rhs).mean;
    r.bound_value = L * r.input_second_moment;
    r.standard_error = mean_and_se(diff).se;
    r.satisfied = r.estimate <= r.bound_value + 3.0 * r.standard_error;
    return r;
}

StationarityReport moment_shift_test(const SignalBatch& batch, const std::vector<long>& shifts, double threshold)
{
    StationarityReport rep;
    rep.threshold = threshold;
    if (batch.size() < 2) throw ValidationError("stationarity test needs at least two samples");
    const Shape& shape = batch[0].shape;
    for (const auto& s : batch)
        if (s.shape != shape) throw ShapeError("stationarity test needs same-shape signals");
    for (long sh : shifts) {
        std::size_t pos = 0;
        for (std::size_t a = 0; a < shape.size(); ++a) {
            const long e = static_cast<long>(shape[a]);
            pos = pos * shape[a] + static_cast<std::size_t>(((sh % e) + e) % e);
        }
        std::vector<double> d1(batch.size()), d2(batch.size());
        double scale = 0.0;
        for (std::size_t i = 0; i < batch.size(); ++i) {
            const double a = batch[i].values[0];
            const double b = batch[i].values[pos];
            d1[i] = a - b;
            d2[i] = a * a - b * b;
            scale += a * a + b * b;
        }
        scale /= static_cast<double>(batch.size());
        ShiftTest t;
        t.shift = sh;
        const Moments m1 = mean_and_se(d1);
        const Moments m2 = mean_and_se(d2);
        // Differences at round-off level of the signal energy count as zero.
        auto z = [](const Moments& m, double floor) {
            if (std::abs(m.mean) <= floor) return 0.0;
            if (m.se > 0.0) return std::abs(m.mean) / m.se;
            return std::numeric_limits<double>::infinity();
        };
        t.mean_z = z(m1, 1e-12 * std::sqrt(scale));
        t.second_z = z(m2, 1e-12 * scale);
        t.flagged = t.mean_z > threshold || t.second_z > threshold;
        rep.any_flagged = rep.any_flagged || t.flagged;
        rep.tests.push_back(t);
    }
    return rep;
}

StationarityReport test_stationarity(const NetworkSpec& net, const ProcessConfig& cfg, std::size_t n,
                                     const std::vector<long>& shifts, double threshold)
{
    if (has_dilation(net))
        throw ValidationError("network contains dilations; feature outputs of dilated layers are no longer stationary");
    const SignalBatch xs = sample_sss(cfg, n);
    const auto feats = forward_batch(net, xs);
    StationarityReport rep;
    rep.threshold = threshold;
    const std::size_t nf = feats.empty() ? 0 : feats[0].signals.size();
    for (std::size_t f = 0; f < nf; ++f) {
        SignalBatch b(n);
        for (std::size_t i = 0; i < n; ++i) b[i] = feats[i].signals[f];
        StationarityReport r = moment_shift_test(b, shifts, threshold);
        for (auto& t : r.tests) {
            t.feature = f;
            rep.tests.push_back(t);
        }
        rep.any_flagged = rep.any_flagged || r.any_flagged;
    }
    return rep;
}

CounterexampleReport dilation_counterexample(std::size_t n, std::uint64_t seed, std::size_t grid_points)
{
    if (n < 2) throw ValidationError("at least two samples are required");
    CounterexampleReport rep;
    rep.n = n;
    Rng rng(seed);
    std::vector<double> theta(n);
    for (double& t : theta) t = 2.0 * std::numbers::pi * rng.uniform();
    auto y_at = [&](double t) {
        std::vector<double> y(n);
        for (std::size_t i = 0; i < n; ++i) y[i] = std::cos(t + theta[i]) + std::cos(3.0 * t + theta[i]);
        return y;
    };
    rep.var_y0 = variance_estimate(y_at(0.0));
    rep.var_y_half_pi = variance_estimate(y_at(std::numbers::pi / 2.0));
    for (std::size_t k = 0; k < grid_points; ++k) {
        const double t = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(grid_points);
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = std::cos(t + theta[i]);
        rep.t_grid.push_back(t);
        rep.var_x.push_back(variance_estimate(x).value);
        rep.var_y.push_back(variance_estimate(y_at(t)).value);
    }
    return rep;
}

SpectrumTransferReport spectrum_transfer_check(const Filter& filter, const ProcessConfig& cfg, std::size_t n)
{
    if (!filter.is_taps()) throw ValidationError("spectrum transfer needs a tap filter");
    if (n == 0) throw ValidationError("at least one sample is required");
    const SignalBatch zs = sample_sss(cfg, n);
    const std::size_t N = element_count(cfg.shape);
    std::vector<std::vector<double>> per(n);
    parallel_for(n, [&](std::size_t i) {
        const Signal w = circular_convolve(zs[i], filter.taps().taps, filter.taps().origin);
        const ComplexField W = fft_forward(w);
        per[i].resize(N);
        for (std::size_t k = 0; k < N; ++k) per[i][k] = std::norm(W[k]) / static_cast<double>(N);
    });
    SpectrumTransferReport rep;
    rep.n = n;
    rep.periodogram.assign(N, 0.0);
    for (const auto& p : per)
        for (std::size_t k = 0; k < N; ++k) rep.periodogram[k] += p[k];
    for (double& v : rep.periodogram) v /= static_cast<double>(n);
    const auto s = symmetrized(cfg);
    const auto g = frequency_response(filter.taps(), cfg.shape);
    rep.expected.resize(N);
    for (std::size_t k = 0; k < N; ++k) {
        rep.expected[k] = s[k] * std::norm(g[k]);
        if (rep.expected[k] > 1e-14 * (1.0 + std::abs(s[k])))
            rep.max_relative_deviation =
                std::max(rep.max_relative_deviation, std::abs(rep.periodogram[k] - rep.expected[k]) / rep.expected[k]);
        else
            rep.max_absolute_zero_bins = std::max(rep.max_absolute_zero_bins, rep.periodogram[k]);
    }
    return rep;
}

ConcentrationReport concentration_profile(const NetworkSpec& net, const ProcessConfig& cfg, std::size_t n,
                                          const std::vector<double>& t_grid, double lipschitz_bound)
{
    if (n < 100) throw ValidationError("concentration profile needs n >= 100 samples for a stable median");
    if (cfg.shape != net.input_shape) throw ShapeError("process grid does not match the network input shape");
    ConcentrationReport rep;
    rep.lipschitz_bound = resolve_bound(net, lipschitz_bound);
    rep.sigma_squared = cfg.point_variance() * static_cast<double>(element_count(cfg.shape));
    const SignalBatch xs = sample_sss(cfg, n);
    const auto feats = forward_batch(net, xs);
    std::vector<std::vector<double>> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = feats[i].flatten();
    const std::size_t D = y.empty() ? 0 : y[0].size();
    std::vector<double> mean(D, 0.0);
    for (const auto& v : y)
        for (std::size_t j = 0; j < D; ++j) mean[j] += v[j];
    for (double& v : mean) v /= static_cast<double>(n);
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = std::sqrt(squared_distance(y[i], mean));

    auto median_of = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        const std::size_t m = v.size();
        return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
    };
    rep.median = median_of(r);
    Rng boot(cfg.seed ^ 0x6a09e667f3bcc909ull);
    const int resamples = 200;
    std::vector<double> meds(resamples);
    for (int b = 0; b < resamples; ++b) {
        std::vector<double> s(n);
        for (std::size_t i = 0; i < n; ++i) s[i] = r[boot.below(n)];
        meds[b] = median_of(std::move(s));
    }
    rep.median_se = std::sqrt(variance_estimate(meds).value);

    const double denom = 2.0 * rep.sigma_squared * rep.lipschitz_bound;
    for (double t : t_grid) {
        ConcentrationRow row;
        row.t = t;
        std::size_t count = 0;
        for (double v : r)
            if (std::abs(v - rep.median) > t) ++count;
        row.fraction = static_cast<double>(count) / static_cast<double>(n);
        row.fraction_se = std::sqrt(row.fraction * (1.0 - row.fraction) / static_cast<double>(n));
        row.bound = denom > 0.0 ? std::exp(-t * t / denom) : (t > 0.0 ? 0.0 : 1.0);
        row.satisfied = row.fraction <= row.bound + 3.0 * row.fraction_se;
        rep.all_satisfied = rep.all_satisfied && row.satisfied;
        rep.rows.push_back(row);
    }
    return rep;
}

}  // namespace lipcert
