#include "lipcert/classifier.hpp"

#include "lipcert/error.hpp"
#include "lipcert/signal.hpp"

namespace lipcert {

std::vector<double> LinearClassifier::scores(const std::vector<double>& x) const
{
    std::vector<double> s(weights.size());
    for (std::size_t c = 0; c < weights.size(); ++c) {
        if (weights[c].size() != x.size())
            throw ShapeError("classifier expects " + std::to_string(weights[c].size()) + " features, got " +
                             std::to_string(x.size()));
        s[c] = dot(weights[c], x) + (c < bias.size() ? bias[c] : 0.0);
    }
    return s;
}

std::size_t LinearClassifier::predict(const std::vector<double>& x) const
{
    if (weights.empty()) throw ValidationError("classifier has no classes");
    const auto s = scores(x);
    std::size_t best = 0;
    for (std::size_t c = 1; c < s.size(); ++c)
        if (s[c] > s[best]) best = c;
    return best;
}

LinearClassifier LinearClassifier::nearest_mean(const std::vector<std::vector<double>>& means)
{
    LinearClassifier c;
    c.weights = means;
    for (const auto& m : means) c.bias.push_back(-0.5 * squared_norm(m));
    return c;
}

}  // namespace lipcert
