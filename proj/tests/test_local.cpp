#include "lipcert/bounds.hpp"
#include "lipcert/error.hpp"
#include "lipcert/local.hpp"
#include "lipcert/toy.hpp"

#include "builders.hpp"
#include "oracles.hpp"
#include "random_net.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>

using namespace lipcert;
using namespace lipcert::testing;

namespace {

RandomNetOptions piecewise_options()
{
    RandomNetOptions opt;
    opt.piecewise_linear = true;
    opt.allow_product = false;
    opt.allow_finite_p = false;
    return opt;
}

Eigen::MatrixXd operator_matrix(const LinearizedOperator& op)
{
    return dense_matrix([&](const std::vector<double>& x) { return op.apply(x); }, op.input_dim());
}

Signal shifted(const Signal& f, const std::vector<double>& v, double h)
{
    Signal g = f;
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += h * v[i];
    return g;
}

double norm(const std::vector<double>& v) { return std::sqrt(squared_norm(v)); }

}  // namespace

TEST_CASE("adjoint consistency and directional derivatives")
{
    Rng rng(51);
    for (int n = 0; n < 60; ++n) {
        const NetworkSpec net = random_network(rng, piecewise_options());
        const Signal f = random_signal(rng, net.input_shape);
        const LinearizedOperator op = linearize(net, f);
        CHECK(op.input_dim() == f.size());
        CHECK(op.output_dim() == forward(net, f).total_size());
        for (int k = 0; k < 5; ++k) {
            const std::vector<double> u = rng.normal_vector(op.input_dim());
            const std::vector<double> w = rng.normal_vector(op.output_dim());
            const std::vector<double> Tu = op.apply(u);
            const std::vector<double> Tw = op.adjoint(w);
            const double lhs = dot(Tu, w);
            const double rhs = dot(u, Tw);
            CHECK(std::abs(lhs - rhs) <= 1e-10 * (1.0 + norm(Tu) * norm(w)));
        }
        // Inside the activation region the network is exactly affine along v.
        const std::vector<double> v = rng.unit_vector(f.size());
        const double radius = op.region_radius(v);
        const double h = std::min(0.5 * radius, 1.0);
        if (h > 1e-8) {
            const std::vector<double> Tv = op.apply(v);
            const std::vector<double> a = forward(net, f).flatten();
            const std::vector<double> b = forward(net, shifted(f, v, h)).flatten();
            for (std::size_t i = 0; i < a.size(); ++i)
                CHECK(std::abs((b[i] - a[i]) - h * Tv[i]) <= 1e-9 * (1.0 + std::abs(b[i])));
        }
    }
}

TEST_CASE("linear nets linearize to their own matrix")
{
    Rng rng(52);
    RandomNetOptions opt = piecewise_options();
    opt.allow_pnorm = false;
    for (int n = 0; n < 20; ++n) {
        NetworkSpec net = random_network(rng, opt);
        for (auto& layer : net.layers)
            for (auto& fa : layer.filters) fa.sigma = Nonlinearity::identity();
        const std::size_t dim = element_count(net.input_shape);
        const Eigen::MatrixXd A = dense_matrix(
            [&](const std::vector<double>& x) { return forward(net, Signal(net.input_shape, x)).flatten(); }, dim);
        const Eigen::MatrixXd T1 = operator_matrix(linearize(net, random_signal(rng, net.input_shape)));
        const Eigen::MatrixXd T2 = operator_matrix(linearize(net, random_signal(rng, net.input_shape, 5.0)));
        CHECK((A - T1).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + A.cwiseAbs().maxCoeff()));
        CHECK((T1 - T2).cwiseAbs().maxCoeff() == 0.0);

        // The quotient of a linear net is constant in h and equals ||T v||.
        const std::vector<double> v = rng.unit_vector(dim);
        Eigen::VectorXd ve(static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) ve(static_cast<Eigen::Index>(i)) = v[i];
        const double expected = (A * ve).norm();
        for (const auto& q : quotient_curve(net, random_signal(rng, net.input_shape), v, {1e-4, 1e-2, 1.0, 100.0}))
            CHECK(q.ratio == doctest::Approx(expected).epsilon(1e-7));

        // And the sample-based estimate is its largest singular value whatever the samples.
        SignalBatch samples{random_signal(rng, net.input_shape), random_signal(rng, net.input_shape)};
        CHECK(global_from_local(net, samples).estimate == doctest::Approx(top_singular_value(A)).epsilon(1e-8));
    }
}

TEST_CASE("one relu layer: all active and all inactive")
{
    const std::size_t N = 16;
    const std::vector<double> taps{0.7, 0.2, 0.4};
    const NetworkSpec net = merge_net(N, {attach(Filter::taps_1d(taps, 1))}, {MergeSpec{MergeKind::sum, 2.0, {0}}});
    double peak = 0.0;
    for (const auto& c : direct_dft_1d(taps, 1, N)) peak = std::max(peak, std::abs(c));

    Signal pos(Shape{N});
    for (std::size_t i = 0; i < N; ++i) pos[i] = 1.0 + 0.1 * static_cast<double>(i % 3);
    const LinearizedOperator op = linearize(net, pos);
    const Eigen::MatrixXd C = circulant_1d(taps, 1, N);
    CHECK((operator_matrix(op) - C).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(sigma_max(op).sigma_max == doctest::Approx(peak).epsilon(1e-10));
    CHECK(op.warnings() == 0);

    Signal neg = pos;
    for (double& x : neg.values) x = -x;
    const LinearizedOperator zero = linearize(net, neg);
    CHECK(operator_matrix(zero).cwiseAbs().maxCoeff() == 0.0);
    CHECK(sigma_max(zero).sigma_max == 0.0);
    CHECK(global_from_local(net, {neg, neg}).estimate == 0.0);
    // Adding the all-active sample can only raise the estimate, here to the full peak.
    CHECK(global_from_local(net, {neg, pos}).estimate == doctest::Approx(peak).epsilon(1e-10));

    // A zero input sits on every relu kink: tie-break applied and reported.
    const LinearizedOperator tied = linearize(net, Signal(Shape{N}));
    CHECK(tied.warnings() > 0);
    CHECK_FALSE(tied.warning_messages().empty());
}

TEST_CASE("power iteration on a diagonal operator")
{
    const std::vector<double> d{3.0, 1.0, 2.0};
    const LinearMap diag = [&](const std::vector<double>& x, std::vector<double>& y) {
        y.resize(3);
        for (std::size_t i = 0; i < 3; ++i) y[i] = d[i] * x[i];
    };
    const PowerResult r = power_iteration(diag, diag, 3);
    CHECK(r.sigma == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(std::abs(std::abs(r.direction[0]) - 1.0) <= 1e-9);
    CHECK(std::abs(r.direction[1]) <= 1e-6);
    CHECK(std::abs(r.direction[2]) <= 1e-6);
}

TEST_CASE("sigma_max against dense SVD")
{
    Rng rng(53);
    for (int n = 0; n < 40; ++n) {
        const NetworkSpec net = random_network(rng, piecewise_options());
        const LinearizedOperator op = linearize(net, random_signal(rng, net.input_shape));
        const LocalReport r = sigma_max(op);
        CHECK(std::abs(r.sigma_max - top_singular_value(operator_matrix(op))) <= 1e-6);
        CHECK(std::abs(norm(r.direction) - 1.0) <= 1e-12);
        CHECK(r.tolerance > 0.0);
    }
}

TEST_CASE("quotient along the principal direction")
{
    Rng rng(54);
    int checked = 0;
    for (int n = 0; n < 60; ++n) {
        const NetworkSpec net = random_network(rng, piecewise_options());
        const Signal f = random_signal(rng, net.input_shape);
        const LinearizedOperator op = linearize(net, f);
        const LocalReport r = sigma_max(op);
        const double bound = std::sqrt(network_lipschitz_bound(net));
        CHECK(r.sigma_max <= bound + 1e-7);
        const double radius = op.region_radius(r.direction);
        if (r.sigma_max == 0.0 || radius < 1e-9) continue;
        ++checked;
        const double h = std::min(0.5 * radius, 1.0);
        const auto q = quotient_curve(net, f, r.direction, {h, 0.1 * h});
        CHECK(std::abs(q[0].ratio - r.sigma_max) <= 1e-9 * (1.0 + r.sigma_max));
        CHECK(std::abs(q[1].ratio - r.sigma_max) <= 1e-9 * (1.0 + r.sigma_max));

        // Over six decades the quotient tends to sigma_max as h shrinks, and small steps in
        // any direction never exceed it.
        std::vector<double> grid;
        for (int k = 0; k <= 6; ++k) grid.push_back(std::pow(10.0, -k));
        const auto sweep = quotient_curve(net, f, r.direction, grid);
        CHECK(std::abs(sweep.back().ratio - r.sigma_max) <= 1e-6 * (1.0 + r.sigma_max));
        const std::vector<double> v = rng.unit_vector(f.size());
        const double hv = std::min(0.5 * op.region_radius(v), 1e-3);
        if (hv > 0.0) CHECK(quotient_curve(net, f, v, {hv})[0].ratio <= r.sigma_max + 1e-7);
    }
    CHECK(checked > 20);
}

TEST_CASE("global estimate is monotone in the sample set")
{
    Rng rng(55);
    for (int n = 0; n < 15; ++n) {
        const NetworkSpec net = random_network(rng, piecewise_options());
        SignalBatch samples;
        double last = 0.0;
        for (int k = 0; k < 6; ++k) {
            samples.push_back(random_signal(rng, net.input_shape));
            const GlobalFromLocal g = global_from_local(net, samples);
            CHECK(g.samples.size() == samples.size());
            CHECK(g.estimate >= last);
            last = g.estimate;
        }
    }
}

TEST_CASE("adversarial search on an identity net")
{
    const std::size_t N = 8;
    const NetworkSpec net = identity_net({N});
    std::vector<double> normal(N, 0.0);
    normal[2] = 0.6;
    normal[5] = 0.8;
    std::vector<double> neg = normal;
    for (double& x : neg) x = -x;
    LinearClassifier head;
    head.weights = {normal, neg};
    head.bias = {0.0, 0.0};
    const FeatureClassifier cls = classifier_head(head);

    // f at distance delta on the positive side of the plane n.x = 0.
    const double delta = 0.37;
    Signal f(Shape{N});
    for (std::size_t i = 0; i < N; ++i) f[i] = delta * normal[i];
    f[0] = 1.5;
    const double h_max = 2.0;
    const FoolingResult r = adversarial_search(net, cls, f, neg, h_max);
    REQUIRE(r.h.has_value());
    CHECK(*r.h >= delta);
    CHECK(*r.h - delta <= 1e-3 * h_max);
    CHECK(r.evaluations > 0);

    std::vector<double> ortho(N, 0.0);
    ortho[0] = 1.0;
    CHECK_FALSE(adversarial_search(net, cls, f, ortho, 0.1).h.has_value());
    CHECK_THROWS_AS(adversarial_search(net, cls, f, ortho, 0.0), ValidationError);

    const AdversarialComparison cmp = adversarial_comparison(net, cls, f, h_max, 25, 7);
    CHECK(cmp.random_h.size() == 25);
    CHECK(cmp.sigma_max == doctest::Approx(1.0));
    for (double h : cmp.random_h) CHECK(h >= delta);
}

TEST_CASE("linearization rejects non piecewise-linear nets")
{
    Rng rng(56);
    const NetworkSpec product =
        merge_net(8, {attach(Filter::delta(1), 0, 1, Nonlinearity::clipped_sigmoid()),
                      attach(Filter::taps_1d({0.5, 0.5}), 0, 1, Nonlinearity::clipped_sigmoid())},
                  {MergeSpec{MergeKind::product, 2.0, {0, 1}}});
    CHECK_THROWS_AS(linearize(product, random_signal(rng, {8})), ValidationError);
    const NetworkSpec finite_p = merge_net(8, {attach(Filter::delta(1)), attach(Filter::taps_1d({0.5, 0.5}))},
                                           {MergeSpec{MergeKind::pnorm, 2.0, {0, 1}}});
    CHECK_THROWS_AS(linearize(finite_p, random_signal(rng, {8})), ValidationError);
    CHECK_THROWS_AS(linearize(toy_network(), Signal(Shape{1})), ValidationError);

    const NetworkSpec id = identity_net({4});
    const Signal f = random_signal(rng, {4});
    CHECK_THROWS_AS(quotient_curve(id, f, {1, 0, 0, 0}, {0.0}), ValidationError);
    CHECK_THROWS_AS(quotient_curve(id, f, {1, 1, 0, 0}, {1.0}), ValidationError);
}
