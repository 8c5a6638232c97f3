#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace lipcert {

enum class NonlinearityKind { relu, identity, abs, clipped_sigmoid, custom_table };

// Pointwise 1-Lipschitz map from a closed catalog. `custom_table` is a piecewise-linear
// interpolant through sorted knots, constant beyond the end knots.
class Nonlinearity {
public:
    Nonlinearity() = default;
    static Nonlinearity relu() { return Nonlinearity(NonlinearityKind::relu); }
    static Nonlinearity identity() { return Nonlinearity(NonlinearityKind::identity); }
    static Nonlinearity abs() { return Nonlinearity(NonlinearityKind::abs); }
    static Nonlinearity clipped_sigmoid() { return Nonlinearity(NonlinearityKind::clipped_sigmoid); }
    // Throws ValidationError when knots are unsorted or any segment slope exceeds 1.
    static Nonlinearity table(std::vector<std::pair<double, double>> knots);
    // Accepts the catalog names used in spec files.
    static Nonlinearity from_name(const std::string& name);

    NonlinearityKind kind() const noexcept { return kind_; }
    const std::vector<std::pair<double, double>>& knots() const noexcept { return knots_; }
    std::string name() const;

    double operator()(double x) const;
    // Right-hand slope; at a kink the value used is the one selected by `derivative_at_kink`.
    double derivative(double x) const;
    // Locations where the map is not differentiable.
    std::vector<double> kinks() const;
    // sup |sigma(x)| over the real line; nullopt when unbounded.
    std::optional<double> sup_norm() const;
    bool is_identity() const noexcept { return kind_ == NonlinearityKind::identity; }

    bool operator==(const Nonlinearity&) const = default;

private:
    explicit Nonlinearity(NonlinearityKind k) : kind_(k) {}
    NonlinearityKind kind_ = NonlinearityKind::identity;
    std::vector<std::pair<double, double>> knots_;
};

// Largest observed |s(a)-s(b)|/|a-b| over a uniform sample grid on [lo, hi], adjacent pairs and
// a strided set of far pairs.
double sampled_lipschitz(const Nonlinearity& s, double lo, double hi, int samples);

}  // namespace lipcert
