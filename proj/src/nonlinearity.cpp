#include "lipcert/nonlinearity.hpp"

#include "lipcert/error.hpp"

#include <algorithm>
#include <cmath>

namespace lipcert {

Nonlinearity Nonlinearity::table(std::vector<std::pair<double, double>> knots)
{
    if (knots.empty()) throw ValidationError("custom_table nonlinearity needs at least one knot");
    for (const auto& [x, y] : knots)
        if (!std::isfinite(x) || !std::isfinite(y)) throw ValidationError("custom_table knot is not finite");
    for (std::size_t i = 1; i < knots.size(); ++i) {
        const double dx = knots[i].first - knots[i - 1].first;
        if (dx <= 0.0) throw ValidationError("custom_table knots must be strictly increasing in x");
        const double slope = std::abs(knots[i].second - knots[i - 1].second) / dx;
        if (slope > 1.0 + 1e-12)
            throw ValidationError("custom_table segment " + std::to_string(i) + " has slope " + std::to_string(slope) +
                                  " > 1; nonlinearities must be 1-Lipschitz");
    }
    Nonlinearity n(NonlinearityKind::custom_table);
    n.knots_ = std::move(knots);
    return n;
}

Nonlinearity Nonlinearity::from_name(const std::string& name)
{
    if (name == "relu") return relu();
    if (name == "identity" || name == "id" || name == "linear") return identity();
    if (name == "abs") return abs();
    if (name == "clipped_sigmoid") return clipped_sigmoid();
    throw ValidationError("unknown nonlinearity '" + name + "'");
}

std::string Nonlinearity::name() const
{
    switch (kind_) {
    case NonlinearityKind::relu: return "relu";
    case NonlinearityKind::identity: return "identity";
    case NonlinearityKind::abs: return "abs";
    case NonlinearityKind::clipped_sigmoid: return "clipped_sigmoid";
    case NonlinearityKind::custom_table: return "custom_table";
    }
    return "identity";
}

double Nonlinearity::operator()(double x) const
{
    switch (kind_) {
    case NonlinearityKind::relu: return x > 0.0 ? x : 0.0;
    case NonlinearityKind::identity: return x;
    case NonlinearityKind::abs: return std::abs(x);
    case NonlinearityKind::clipped_sigmoid: return std::clamp(x, 0.0, 1.0);
    case NonlinearityKind::custom_table: {
        if (x <= knots_.front().first) return knots_.front().second;
        if (x >= knots_.back().first) return knots_.back().second;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const auto& k) { return v < k.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return y0 + (y1 - y0) * (x - x0) / (x1 - x0);
    }
    }
    return x;
}

double Nonlinearity::derivative(double x) const
{
    switch (kind_) {
    case NonlinearityKind::relu: return x > 0.0 ? 1.0 : 0.0;
    case NonlinearityKind::identity: return 1.0;
    case NonlinearityKind::abs: return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0);
    case NonlinearityKind::clipped_sigmoid: return (x > 0.0 && x < 1.0) ? 1.0 : 0.0;
    case NonlinearityKind::custom_table: {
        if (x < knots_.front().first || x >= knots_.back().first || knots_.size() < 2) return 0.0;
        auto it = std::upper_bound(knots_.begin(), knots_.end(), x,
                                   [](double v, const auto& k) { return v < k.first; });
        const auto& [x1, y1] = *it;
        const auto& [x0, y0] = *(it - 1);
        return (y1 - y0) / (x1 - x0);
    }
    }
    return 1.0;
}

std::vector<double> Nonlinearity::kinks() const
{
    switch (kind_) {
    case NonlinearityKind::relu:
    case NonlinearityKind::abs: return {0.0};
    case NonlinearityKind::clipped_sigmoid: return {0.0, 1.0};
    case NonlinearityKind::custom_table: {
        std::vector<double> k;
        for (const auto& kn : knots_) k.push_back(kn.first);
        return k;
    }
    case NonlinearityKind::identity: break;
    }
    return {};
}

std::optional<double> Nonlinearity::sup_norm() const
{
    switch (kind_) {
    case NonlinearityKind::clipped_sigmoid: return 1.0;
    case NonlinearityKind::custom_table: {
        double m = 0.0;
        for (const auto& kn : knots_) m = std::max(m, std::abs(kn.second));
        return m;
    }
    default: return std::nullopt;
    }
}

double sampled_lipschitz(const Nonlinearity& s, double lo, double hi, int samples)
{
    std::vector<double> xs(samples), ys(samples);
    for (int i = 0; i < samples; ++i) {
        xs[i] = lo + (hi - lo) * i / (samples - 1);
        ys[i] = s(xs[i]);
    }
    double worst = 0.0;
    for (int i = 1; i < samples; ++i) worst = std::max(worst, std::abs(ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]));
    const int step = std::max(1, samples / 64);
    for (int i = 0; i < samples; i += step)
        for (int j = i + step; j < samples; j += step)
            worst = std::max(worst, std::abs(ys[j] - ys[i]) / (xs[j] - xs[i]));
    return worst;
}

}  // namespace lipcert
