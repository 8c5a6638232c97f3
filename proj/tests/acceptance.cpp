// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 when any criterion fails.

#include "lipcert/bounds.hpp"
#include "lipcert/classifier.hpp"
#include "lipcert/discriminant.hpp"
#include "lipcert/error.hpp"
#include "lipcert/forward.hpp"
#include "lipcert/local.hpp"
#include "lipcert/parallel.hpp"
#include "lipcert/stochastic.hpp"
#include "lipcert/toy.hpp"

#include "builders.hpp"
#include "oracles.hpp"
#include "random_net.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <string>

using namespace lipcert;
using namespace lipcert::testing;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Keeps the worst value seen across threads.
struct AtomicMax {
    std::mutex mu;
    double value = 0.0;
    void update(double v)
    {
        std::lock_guard<std::mutex> lock(mu);
        if (!(v <= value)) value = v;
    }
};

RandomNetOptions piecewise_options()
{
    RandomNetOptions opt;
    opt.piecewise_linear = true;
    opt.allow_product = false;
    opt.allow_finite_p = false;
    return opt;
}

// A second input near f or far from it, so both small and large differences are probed.
Signal partner(Rng& rng, const Signal& f)
{
    Signal g = random_signal(rng, f.shape, rng.uniform() < 0.5 ? 1.0 : 1e-3);
    if (rng.uniform() < 0.5)
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += f[i];
    return g;
}

ProcessConfig random_process(Rng& rng, const Shape& shape, std::uint64_t seed)
{
    ProcessConfig cfg = ProcessConfig::flat(shape, 1.0, seed);
    const double level = rng.uniform(0.2, 2.0);
    for (double& s : cfg.spectrum) s = rng.uniform() < 0.2 ? 0.0 : level * rng.uniform(0.0, 2.0);
    return cfg;
}

Verdict toy_triples()
{
    const auto t0 = Clock::now();
    const ToyExample toy = run_toy_example();
    const double elapsed = seconds_since(t0);
    const double e = 2.0 * std::exp(-1.0 / 3.0);
    const BesselTriple expected[] = {{e, 1, 1}, {e, 1, 1}, {2, 2, 1}, {1, 0, 1}};
    double worst = toy.layers.size() == 4 ? 0.0 : kInfinity;
    for (std::size_t m = 0; m < std::min<std::size_t>(4, toy.layers.size()); ++m) {
        const BesselTriple& b = toy.layers[m].triple;
        worst = std::max({worst, std::abs(b.b1 - expected[m].b1), std::abs(b.b2 - expected[m].b2),
                          std::abs(b.b3 - expected[m].b3)});
    }
    return {worst <= 1e-2 && elapsed < 10.0, fmt("max abs error %.2e, %.2f s", worst, elapsed)};
}

Verdict toy_lp()
{
    const double e = 2.0 * std::exp(-1.0 / 3.0);
    const LipschitzReport r = solve_lipschitz_lp({{e, 1, 1}, {e, 1, 1}, {2, 2, 1}, {1, 0, 1}});
    return {std::abs(r.lp_bound - 2.866) <= 5e-3, fmt("L = %.6f", r.lp_bound)};
}

Verdict toy_corollaries()
{
    const double e = 2.0 * std::exp(-1.0 / 3.0);
    const std::vector<BesselTriple> t{{e, 1, 1}, {e, 1, 1}, {2, 2, 1}, {1, 0, 1}};
    const double sp = corollary_sumprod(t);
    const double pr = corollary_product(t);
    const double expected = 8.0 * std::exp(-2.0 / 3.0);
    return {sp == 5.0 && std::abs(pr - expected) <= 1e-3,
            fmt("sumprod = %.17g, product = %.6f (8e^{-2/3} = %.6f)", sp, pr, expected)};
}

Verdict scattering()
{
    double worst = 0.0;
    for (std::size_t M = 1; M <= 10; ++M)
        worst = std::max(worst, std::abs(solve_lipschitz_lp(std::vector<BesselTriple>(M, {1, 1, 1})).lp_bound - 1.0));
    return {worst <= 1e-9, fmt("max |L - 1| = %.2e over M = 1..10", worst)};
}

Verdict max_pool()
{
    const NetworkSpec net = fragment_network(max_pool_as_merge(2, 2, {8}), {8});
    const FeatureBundle out = forward(net, Signal(Shape{8}, {1, 3, 4, 2, 1, 5, 6, 7}));
    const bool ok = out.signals.size() == 1 && out.signals[0].values == std::vector<double>{3, 4, 5, 7};
    std::ostringstream os;
    os << "output";
    for (const auto& s : out.signals)
        for (double v : s.values) os << " " << v;
    return {ok, os.str()};
}

Verdict soundness()
{
    const auto t0 = Clock::now();
    const std::size_t nets = 1000;
    const std::size_t pairs = 100;
    std::atomic<std::size_t> violations{0};
    AtomicMax worst;
    const Rng root(6001);
    parallel_for(nets, [&](std::size_t k) {
        Rng rng = root.split(k);
        const NetworkSpec net = random_network(rng);
        const double bound = std::sqrt(network_lipschitz_bound(net));
        for (std::size_t i = 0; i < pairs; ++i) {
            const Signal f = random_signal(rng, net.input_shape, rng.uniform(0.1, 3.0));
            const double r = empirical_ratio(net, f, partner(rng, f));
            worst.update(r - bound);
            if (r > bound + 1e-7) ++violations;
        }
    });
    const double elapsed = seconds_since(t0);
    return {violations == 0 && elapsed < 300.0,
            fmt("%zu violations in %zu pairs, max ratio - bound %.3e, %.1f s", violations.load(), nets * pairs,
                worst.value, elapsed)};
}

Verdict dominance()
{
    const auto t0 = Clock::now();
    const std::size_t cases = 100000;
    std::atomic<std::size_t> dominance_fail{0}, oracle_fail{0}, oracle_cases{0};
    AtomicMax worst_dom, worst_oracle;
    const Rng root(7001);
    parallel_for(cases, [&](std::size_t k) {
        Rng rng = root.split(k);
        const std::size_t M = 1 + rng.below(10);
        const auto t = random_triples(rng, M);
        const double L = solve_lipschitz_lp(t).lp_bound;
        const double excess = L - std::min(corollary_product(t), corollary_sumprod(t));
        worst_dom.update(excess);
        if (excess > 1e-9) ++dominance_fail;
        if (M <= 4) {
            ++oracle_cases;
            const double gap = std::abs(L - lp_vertex_enumeration(t));
            worst_oracle.update(gap);
            if (gap > 1e-8) ++oracle_fail;
        }
    });
    return {dominance_fail == 0 && oracle_fail == 0,
            fmt("%zu triples: %zu dominance failures (max excess %.2e); %zu vertex checks, %zu mismatches (max %.2e); "
                "%.1f s",
                cases, dominance_fail.load(), worst_dom.value, oracle_cases.load(), oracle_fail.load(),
                worst_oracle.value, seconds_since(t0))};
}

Verdict local_analysis()
{
    const std::size_t operators = 100;
    std::vector<double> svd_gap(operators), quot_gap(operators, 0.0), excess(operators);
    std::vector<char> quot_checked(operators, 0);
    std::vector<std::size_t> dims(operators);
    const Rng root(8001);
    parallel_for(operators, [&](std::size_t k) {
        Rng rng = root.split(k);
        for (;;) {
            const NetworkSpec net = random_network(rng, piecewise_options());
            const Signal f = random_signal(rng, net.input_shape);
            const LinearizedOperator op = linearize(net, f);
            if (op.input_dim() > 400 || op.output_dim() > 400) continue;
            dims[k] = std::max(op.input_dim(), op.output_dim());
            const LocalReport r = sigma_max(op);
            const Eigen::MatrixXd A =
                dense_matrix([&](const std::vector<double>& x) { return op.apply(x); }, op.input_dim());
            svd_gap[k] = std::abs(r.sigma_max - top_singular_value(A));
            excess[k] = r.sigma_max - std::sqrt(network_lipschitz_bound(net));
            const double radius = op.region_radius(r.direction);
            if (r.sigma_max > 0.0 && radius > 1e-9) {
                const double h = std::min(0.5 * radius, 1.0);
                const auto q = quotient_curve(net, f, r.direction, {h, 0.1 * h});
                quot_checked[k] = 1;
                quot_gap[k] = std::max(std::abs(q[0].ratio - r.sigma_max), std::abs(q[1].ratio - r.sigma_max)) /
                              std::max(1.0, r.sigma_max);
            }
            return;
        }
    });
    const double svd = *std::max_element(svd_gap.begin(), svd_gap.end());
    const double quot = *std::max_element(quot_gap.begin(), quot_gap.end());
    const double ex = *std::max_element(excess.begin(), excess.end());
    const long checked = std::count(quot_checked.begin(), quot_checked.end(), 1);
    return {svd <= 1e-6 && quot <= 1e-9 && ex <= 1e-7,
            fmt("%zu operators up to %zux%zu: max SVD gap %.2e; %ld quotient checks, max gap %.2e; "
                "max sigma - sqrt(L) %.2e",
                operators, *std::max_element(dims.begin(), dims.end()), *std::max_element(dims.begin(), dims.end()),
                svd, checked, quot, ex)};
}

Verdict theorem2()
{
    const std::size_t runs = 100;
    std::vector<char> ok(runs, 0);
    const Rng root(9001);
    parallel_for(runs, [&](std::size_t k) {
        Rng rng = root.split(k);
        RandomNetOptions opt;
        opt.allow_strides = false;
        const NetworkSpec net = random_network(rng, opt);
        const ProcessConfig x = random_process(rng, net.input_shape, 2 * k + 1);
        const ProcessConfig y = random_process(rng, net.input_shape, 2 * k + 2);
        ok[k] = verify_theorem2(net, x, y, 2000).satisfied ? 1 : 0;
    });
    const long satisfied = std::count(ok.begin(), ok.end(), 1);
    const CounterexampleReport c = dilation_counterexample(20000, 9002);
    const bool y0 = std::abs(c.var_y0.value - 2.0) <= 3.0 * c.var_y0.standard_error;
    const bool yh = std::abs(c.var_y_half_pi.value) <= 3.0 * c.var_y_half_pi.standard_error + 1e-12;
    return {satisfied == static_cast<long>(runs) && y0 && yh,
            fmt("%ld/%zu runs satisfied; Var Y(0) = %.4f +- %.4f, Var Y(pi/2) = %.2e +- %.2e", satisfied, runs,
                c.var_y0.value, c.var_y0.standard_error, c.var_y_half_pi.value, c.var_y_half_pi.standard_error)};
}

Verdict concentration()
{
    const std::size_t nets = 20;
    std::vector<char> ok(nets, 0);
    std::vector<std::size_t> rows(nets, 0);
    const Rng root(10001);
    parallel_for(nets, [&](std::size_t k) {
        Rng rng = root.split(k);
        const NetworkSpec net = random_network(rng);
        const ProcessConfig cfg = random_process(rng, net.input_shape, 100 + k);
        const double L = network_lipschitz_bound(net);
        const double median = concentration_profile(net, cfg, 2000, {0.0}, L).median;
        std::vector<double> grid;
        for (int j = 0; j <= 20; ++j) grid.push_back(0.1 * j * std::max(median, 1e-12));
        const ConcentrationReport r = concentration_profile(net, cfg, 2000, grid, L);
        rows[k] = r.rows.size();
        ok[k] = r.all_satisfied ? 1 : 0;
    });
    const long satisfied = std::count(ok.begin(), ok.end(), 1);
    std::size_t total = 0;
    for (std::size_t r : rows) total += r;
    return {satisfied == static_cast<long>(nets),
            fmt("%ld/%zu nets within the tail bound at all %zu grid points", satisfied, nets, total)};
}

// Layer with `count` filters on node 0, relu, p-norm or sum merges, then a tap layer.
NetworkSpec discriminant_net(Rng& rng, std::size_t N)
{
    auto unit_filter = [&](std::size_t taps) {
        Filter f = random_taps(rng, {N}, taps, 1.0);
        double peak = 0.0;
        for (const auto& c : frequency_response(f.taps(), {N})) peak = std::max(peak, std::abs(c));
        return f.scaled(1.0 / std::max(peak, 1e-12));
    };
    NetworkSpec net;
    net.input_shape = {N};
    LayerSpec l1;
    l1.input_count = 1;
    l1.pooling = {std::nullopt};
    l1.feature_taps = {false};
    const std::size_t g1 = 1 + rng.below(2);
    for (std::size_t g = 0; g < g1; ++g) {
        MergeSpec m;
        m.kind = rng.uniform() < 0.5 ? MergeKind::sum : MergeKind::pnorm;
        m.p = m.kind == MergeKind::pnorm ? kInfinity : 2.0;
        const std::size_t K = 1 + rng.below(2);
        for (std::size_t j = 0; j < K; ++j) {
            m.members.push_back(l1.filters.size());
            l1.filters.push_back(attach(unit_filter(1 + rng.below(6)), 0, 1,
                                        rng.uniform() < 0.7 ? Nonlinearity::relu() : Nonlinearity::abs()));
        }
        l1.merges.push_back(m);
    }
    LayerSpec l2;
    l2.input_count = g1;
    l2.pooling.assign(g1, std::nullopt);
    l2.feature_taps.assign(g1, false);
    for (std::size_t n = 0; n < g1; ++n) {
        if (rng.uniform() < 0.5) {
            l2.pooling[n] = unit_filter(1 + rng.below(6));
            l2.feature_taps[n] = true;
        }
        l2.filters.push_back(attach(unit_filter(1 + rng.below(6)), n, 1, Nonlinearity::relu()));
        l2.merges.push_back(MergeSpec{MergeKind::sum, 2.0, {n}});
    }
    LayerSpec l3 = tap_layer(g1);
    for (auto& p : l3.pooling) p = unit_filter(1 + rng.below(6));
    net.layers = {l1, l2, l3};
    validate(net);
    return net;
}

Verdict discriminant_trend()
{
    const auto t0 = Clock::now();
    const std::size_t N = 32;
    Signal mu1(Shape{N}), mu2(Shape{N});
    for (std::size_t t = 0; t < N; ++t) {
        const double w = 2.0 * M_PI * static_cast<double>(t) / static_cast<double>(N);
        mu1[t] = 0.3 * std::cos(w);
        mu2[t] = -mu1[t];
    }
    const ClassModel a{mu1, Filter::delta(1), "class-a"};
    const ClassModel b{mu2, Filter::delta(1), "class-b"};
    Rng rng(11001);
    std::vector<NetworkSpec> nets;
    // Nets whose features are constant (every relu output dead) have no discriminant; draw
    // until 50 usable nets remain.
    while (nets.size() < 50) {
        NetworkSpec net = discriminant_net(rng, N);
        try {
            discriminant(net, a, b, 50, 11003);
        } catch (const Error&) {
            continue;
        }
        nets.push_back(std::move(net));
    }
    const DiscriminantTable t = error_vs_discriminant(nets, a, b, 500, 1000, 11002);
    std::size_t used = 0;
    double emin = 1.0, emax = 0.0;
    for (const auto& r : t.rows)
        if (!r.excluded) {
            ++used;
            emin = std::min(emin, r.error);
            emax = std::max(emax, r.error);
        }
    const double elapsed = seconds_since(t0);
    return {t.spearman_s < 0.0 && t.spearman_s_lip < 0.0 && elapsed < 120.0,
            fmt("%zu nets, test error %.3f..%.3f; spearman(S, error) = %.3f, spearman(S~, error) = %.3f; %.1f s",
                used, emin, emax, t.spearman_s, t.spearman_s_lip, elapsed)};
}

Verdict adversarial_trend()
{
    const std::size_t nets = 40;
    const std::size_t classes = 10;
    std::vector<char> not_worse(nets, 0);
    std::vector<double> fooled_fraction(nets, 0.0);
    const Rng root(12001);
    parallel_for(nets, [&](std::size_t k) {
        Rng rng = root.split(k);
        const NetworkSpec net = random_network(rng, piecewise_options());
        // Nearest-class-mean head fitted to the features of random class centres; the test
        // input is a perturbed copy of the first centre.
        std::vector<Signal> centres;
        std::vector<std::vector<double>> means;
        for (std::size_t c = 0; c < classes; ++c) {
            centres.push_back(random_signal(rng, net.input_shape));
            means.push_back(forward(net, centres.back()).flatten());
        }
        const LinearClassifier head = LinearClassifier::nearest_mean(means);
        Signal f = centres[0];
        for (double& v : f.values) v += 0.3 * rng.normal();
        const std::size_t dim = means[0].size();
        // The search window scales with the distance the linearization needs to flip the
        // label along the most sensitive direction, widened by the input dimension so random
        // directions are fooled as well.
        const LinearizedOperator op = linearize(net, f);
        const std::vector<double> x = forward(net, f).flatten();
        const std::vector<double> s = head.scores(x);
        const std::size_t top = head.predict(x);
        double h0 = kInfinity;
        for (std::size_t c = 0; c < classes; ++c) {
            if (c == top) continue;
            std::vector<double> diff(dim);
            for (std::size_t j = 0; j < dim; ++j) diff[j] = head.weights[top][j] - head.weights[c][j];
            const double gain = std::sqrt(squared_norm(op.adjoint(diff)));
            if (gain > 0.0) h0 = std::min(h0, (s[top] - s[c]) / gain);
        }
        if (!std::isfinite(h0)) h0 = 1.0;
        const double h_max = 8.0 * std::sqrt(static_cast<double>(f.size())) * std::max(h0, 1e-9);
        const AdversarialComparison cmp = adversarial_comparison(net, classifier_head(head), f, h_max, 200, 12002 + k);
        not_worse[k] = cmp.principal_not_worse ? 1 : 0;
        fooled_fraction[k] = static_cast<double>(std::count_if(cmp.random_h.begin(), cmp.random_h.end(),
                                                               [](double h) { return std::isfinite(h); })) /
                             static_cast<double>(cmp.random_h.size());
    });
    const long count = std::count(not_worse.begin(), not_worse.end(), 1);
    double mean_fooled = 0.0;
    for (double v : fooled_fraction) mean_fooled += v / static_cast<double>(nets);
    const double share = static_cast<double>(count) / static_cast<double>(nets);
    return {share >= 0.7, fmt("principal <= random median in %ld/%zu nets (%.0f%%); %.0f%% of random directions fooled",
                              count, nets, 100.0 * share, 100.0 * mean_fooled)};
}

}  // namespace

int main()
{
    const std::pair<const char*, std::function<Verdict()>> criteria[] = {
        {"toy Bessel triples", toy_triples},
        {"toy LP bound", toy_lp},
        {"toy corollaries", toy_corollaries},
        {"scattering triples", scattering},
        {"max-pool realization", max_pool},
        {"soundness fuzz", soundness},
        {"corollary dominance and vertex oracle", dominance},
        {"local analysis", local_analysis},
        {"expectation inequality and dilation counterexample", theorem2},
        {"concentration tails", concentration},
        {"discriminant trend", discriminant_trend},
        {"adversarial trend", adversarial_trend},
    };
    int failures = 0;
    int index = 0;
    for (const auto& [name, check] : criteria) {
        ++index;
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        if (!v.pass) ++failures;
        std::printf("%s %2d %s: %s\n", v.pass ? "PASS" : "FAIL", index, name, v.detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
