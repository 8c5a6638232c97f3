#include "lipcert/bounds.hpp"
#include "lipcert/discriminant.hpp"
#include "lipcert/error.hpp"

#include "builders.hpp"
#include "oracles.hpp"
#include "random_net.hpp"

#include <doctest.h>

#include <cmath>

using namespace lipcert;
using namespace lipcert::testing;

namespace {

ClassModel white_class(const Signal& mean, const std::string& label, const Filter& coloring = Filter::delta(1))
{
    return ClassModel{mean, coloring, label};
}

Signal constant(std::size_t N, double v) { return Signal(Shape{N}, std::vector<double>(N, v)); }

// Every feature passes through the same two filters, so scaling all filters by c scales
// the whole feature vector by c^2.
NetworkSpec linear_conv_net(Rng& rng, std::size_t N)
{
    return merge_net(N,
                     {attach(random_taps(rng, {N}, 4, 0.6), 0, 1, Nonlinearity::identity()),
                      attach(random_taps(rng, {N}, 4, 0.6), 0, 1, Nonlinearity::identity())},
                     {MergeSpec{MergeKind::sum, 2.0, {0}}, MergeSpec{MergeKind::sum, 2.0, {1}}});
}

}  // namespace

TEST_CASE("identity net with white classes")
{
    const std::size_t N = 16;
    const std::size_t n = 4000;
    Rng rng(71);
    const Signal mu1 = random_signal(rng, {N});
    const Signal mu2 = random_signal(rng, {N});
    const double gap = squared_distance(mu1.values, mu2.values);
    const DiscriminantReport r = discriminant(identity_net({N}), white_class(mu1, "a"), white_class(mu2, "b"), n, 5);
    const double Nd = static_cast<double>(N);
    // E numerator = gap + 2N/n; each nuclear norm is a trace with relative spread sqrt(2/(nN)).
    CHECK(std::abs(r.numerator - gap - 2.0 * Nd / n) <= 5.0 * std::sqrt(8.0 * gap / n + 8.0 * Nd / (n * double(n))));
    CHECK(std::abs(r.nuclear1 - Nd) <= 5.0 * Nd * std::sqrt(2.0 / (n * Nd)));
    CHECK(std::abs(r.nuclear2 - Nd) <= 5.0 * Nd * std::sqrt(2.0 / (n * Nd)));
    CHECK(r.s == doctest::Approx(gap / (2.0 * Nd)).epsilon(0.05));
    CHECK(r.lipschitz1 == doctest::Approx(1.0));
    CHECK(r.lipschitz2 == doctest::Approx(1.0));
    CHECK(r.s_lip == doctest::Approx(r.numerator / 2.0));
    CHECK(r.feature_dim == N);
    CHECK_FALSE(r.shrinkage);
}

TEST_CASE("nuclear norm of colored noise is the squared Frobenius norm")
{
    CHECK(nuclear_norm({{1, 0, 0}, {0, -2, 0}, {0, 0, 3}}) == doctest::Approx(6.0));
    const auto C = sample_covariance({{1, 2}, {3, 2}, {5, 8}});
    CHECK(C[0][0] == doctest::Approx(4.0));
    CHECK(C[0][1] == doctest::Approx(6.0));
    CHECK(C[1][1] == doctest::Approx(12.0));

    const std::size_t N = 16;
    const std::size_t n = 4000;
    Rng rng(72);
    for (int k = 0; k < 5; ++k) {
        const Filter w = random_taps(rng, {N}, 4, 1.0);
        const Eigen::MatrixXd A = circulant_1d(w.taps().taps.values, w.taps().origin[0], N);
        const DiscriminantReport r =
            discriminant(identity_net({N}), white_class(constant(N, 0), "a", w), white_class(constant(N, 1), "b"), n, 9);
        CHECK(std::abs(r.nuclear1 / A.squaredNorm() - 1.0) <= 3.0 / std::sqrt(static_cast<double>(n)));
    }
}

TEST_CASE("identical classes and class permutation")
{
    Rng rng(73);
    const NetworkSpec net = random_network(rng, RandomNetOptions{.max_layers = 3, .max_extent = 12, .rank2_probability = 0.0});
    const Signal mu = random_signal(rng, net.input_shape);
    const Filter w = random_taps(rng, net.input_shape, 3, 0.8);
    const DiscriminantReport same = discriminant(net, white_class(mu, "c", w), white_class(mu, "c", w), 300, 1);
    CHECK(same.numerator == 0.0);
    CHECK(same.s == 0.0);
    CHECK(same.s_lip == 0.0);

    const ClassModel a = white_class(mu, "a", w);
    const ClassModel b = white_class(random_signal(rng, net.input_shape), "b");
    const DiscriminantReport ab = discriminant(net, a, b, 300, 2);
    const DiscriminantReport ba = discriminant(net, b, a, 300, 2);
    CHECK(ab.s == doctest::Approx(ba.s).epsilon(1e-12));
    CHECK(ab.s_lip == doctest::Approx(ba.s_lip).epsilon(1e-12));
    CHECK(ab.nuclear1 == ba.nuclear2);
}

TEST_CASE("global scaling of a linear net leaves S and the error unchanged")
{
    const std::size_t N = 16;
    Rng rng(74);
    for (int k = 0; k < 5; ++k) {
        const NetworkSpec net = linear_conv_net(rng, N);
        const ClassModel a = white_class(random_signal(rng, {N}), "a", random_taps(rng, {N}, 3, 1.0));
        const ClassModel b = white_class(random_signal(rng, {N}), "b");
        const NetworkSpec scaled = scaled_network(net, 2.5);
        const DiscriminantReport r1 = discriminant(net, a, b, 200, 3);
        const DiscriminantReport r2 = discriminant(scaled, a, b, 200, 3);
        CHECK(r2.s == doctest::Approx(r1.s).epsilon(1e-9));
        const DiscriminantTable t = error_vs_discriminant({net, scaled}, a, b, 200, 300, 4);
        REQUIRE(t.rows.size() == 2);
        CHECK_FALSE(t.rows[0].excluded);
        CHECK(t.rows[0].error == t.rows[1].error);
    }
}

TEST_CASE("prepended coloring moves the bound with the coloring gain")
{
    Rng rng(75);
    for (int k = 0; k < 30; ++k) {
        const NetworkSpec net = random_network(rng, RandomNetOptions{.max_layers = 3, .rank2_probability = 0.0});
        const std::size_t M = net.input_shape[0];
        const double bare = network_lipschitz_bound(net);
        Filter w = random_taps(rng, {M}, 3, 1.0);
        double peak = 0.0;
        for (const auto& c : frequency_response(w.taps(), {M})) peak = std::max(peak, std::abs(c));
        // Normalize the coloring to a gain above or below one.
        const double gain = rng.uniform() < 0.5 ? rng.uniform(1.0, 2.0) : rng.uniform(0.2, 1.0);
        w = w.scaled(gain / peak);
        const double colored = network_lipschitz_bound(prepend_coloring(net, w));
        if (gain >= 1.0) CHECK(colored >= bare * (1.0 - 1e-9));
        else CHECK(colored <= bare * (1.0 + 1e-9));
    }
}

TEST_CASE("degenerate nets are excluded")
{
    const std::size_t N = 8;
    const NetworkSpec zero = merge_net(N, {attach(Filter::taps_1d({0.0}), 0, 1, Nonlinearity::identity())},
                                       {MergeSpec{MergeKind::sum, 2.0, {0}}});
    Rng rng(76);
    const ClassModel a = white_class(random_signal(rng, {N}), "a");
    const ClassModel b = white_class(random_signal(rng, {N}), "b");
    CHECK_THROWS_AS(discriminant(zero, a, b, 50, 1), Error);
    const DiscriminantTable t = error_vs_discriminant({identity_net({N}), zero, identity_net({N})}, a, b, 50, 50, 2);
    CHECK_FALSE(t.rows[0].excluded);
    CHECK(t.rows[1].excluded);
    CHECK_FALSE(t.rows[1].reason.empty());
    CHECK(t.warnings.size() == 1);
    CHECK_THROWS_AS(error_vs_discriminant({identity_net({N})}, a, b, 50, 50, 2), ValidationError);

    const DiscriminantReport small = discriminant(identity_net({N}), a, b, 5, 3);
    CHECK(small.shrinkage);
}

TEST_CASE("spearman rank correlation")
{
    CHECK(*spearman({1, 2, 3, 4}, {10, 20, 30, 40}) == doctest::Approx(1.0));
    CHECK(*spearman({1, 2, 3, 4}, {4, 3, 2, 1}) == doctest::Approx(-1.0));
    // Ranks (1,2,3,4,5) against (1,2,3.5,5,3.5): covariance 8, variances 10 and 9.5.
    CHECK(*spearman({1, 2, 3, 4, 5}, {5, 6, 7, 8, 7}) == doctest::Approx(8.0 / std::sqrt(95.0)));
    CHECK_FALSE(spearman({1, 2, 3}, {2, 2, 2}).has_value());
    CHECK_FALSE(spearman({1}, {2}).has_value());
    CHECK_THROWS_AS(spearman({1, 2}, {1}), ShapeError);
}
