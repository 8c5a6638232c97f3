#pragma once

#include "lipcert/classifier.hpp"
#include "lipcert/forward.hpp"
#include "lipcert/netspec.hpp"
#include "lipcert/power_iteration.hpp"

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace lipcert {

// Active-set linearization T'[f] of a piecewise-linear network at an input f. Maps an input
// perturbation to the flattened feature perturbation (layout of FeatureBundle::flatten).
class LinearizedOperator {
public:
    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept { return output_dim_; }

    std::vector<double> apply(const std::vector<double>& dx) const;
    std::vector<double> adjoint(const std::vector<double>& dy) const;

    // Largest h such that f + t v stays in the current activation region for t in [0, h)
    // (infinity when no switching quantity moves towards its boundary).
    double region_radius(const std::vector<double>& v) const;

    // Preactivations or argmax margins within 1e-12 of a switching boundary; the
    // deterministic tie-break (inactive relu, first argmax) was applied.
    std::size_t warnings() const noexcept { return warnings_; }
    const std::vector<std::string>& warning_messages() const noexcept { return messages_; }

    friend LinearizedOperator linearize(const NetworkSpec& net, const Signal& f);

private:
    struct FilterMask {
        std::vector<double> slope;  // sigma'(preactivation)
    };
    struct GroupMask {
        std::vector<std::size_t> winner;  // member position of the argmax (p = inf merges)
        std::vector<double> sign;         // sign of the winning value
    };
    struct LayerMask {
        std::vector<FilterMask> filters;  // merge layers: per filter; linear layers: per target
        std::vector<GroupMask> groups;    // merge layers only
    };

    // Values needed by region_radius.
    struct Switch {
        enum Kind { preact, margin, sign } kind;
        std::size_t layer, index, position, other;
        double value;  // distance to the boundary, >= 0 on the current side
        double kink;   // preact: location of the kink that bounds the region
        double orient; // preact: +1 if the region lies above the kink, -1 below
    };

    std::vector<std::vector<double>> tangent_preacts(const std::vector<double>& dx) const;

    NetworkSpec net_;
    ForwardTrace trace_;
    std::vector<LayerMask> masks_;
    std::size_t input_dim_ = 0;
    std::size_t output_dim_ = 0;
    std::size_t warnings_ = 0;
    std::vector<std::string> messages_;
};

// Throws ValidationError for product merges and p-norm merges with finite p and more than
// one member (not piecewise linear), and for continuous networks.
LinearizedOperator linearize(const NetworkSpec& net, const Signal& f);

struct LocalReport {
    double sigma_max = 0.0;
    std::vector<double> direction;  // unit principal right singular vector
    int iterations = 0;
    double residual = 0.0;
    double tolerance = 0.0;
    std::size_t warnings = 0;
};

LocalReport sigma_max(const LinearizedOperator& op, const PowerOptions& options = {});

struct GlobalFromLocal {
    double estimate = 0.0;  // max over samples
    std::vector<LocalReport> samples;
};

GlobalFromLocal global_from_local(const NetworkSpec& net, const SignalBatch& samples, const PowerOptions& options = {});

struct QuotientPoint {
    double h = 0.0;
    double ratio = 0.0;
};

// |||Phi(f + h v) - Phi(f)||| / h for each h. Rejects h <= 0 and non-unit v.
std::vector<QuotientPoint> quotient_curve(const NetworkSpec& net, const Signal& f, const std::vector<double>& v,
                                          const std::vector<double>& h_grid);

using FeatureClassifier = std::function<std::size_t(const FeatureBundle&)>;

struct FoolingResult {
    std::optional<double> h;  // nullopt: not fooled within h_max
    int evaluations = 0;
};

// Smallest h in (0, h_max] with label(f + h v) != label(f): doubling scan from h_max / 1024,
// then bisection down to 1e-3 h_max.
FoolingResult adversarial_search(const NetworkSpec& net, const FeatureClassifier& classifier, const Signal& f,
                                 const std::vector<double>& v, double h_max);

struct AdversarialComparison {
    double principal_h = 0.0;           // +inf when not fooled
    std::vector<double> random_h;       // +inf entries when not fooled
    double random_median = 0.0;
    bool principal_not_worse = false;   // principal_h <= random_median
    double sigma_max = 0.0;
};

// Principal direction of T'[f] against `random_directions` seeded unit directions. Both
// orientations +v and -v are tried for every direction and the smaller magnitude kept.
AdversarialComparison adversarial_comparison(const NetworkSpec& net, const FeatureClassifier& classifier,
                                             const Signal& f, double h_max, std::size_t random_directions,
                                             std::uint64_t seed, const PowerOptions& options = {});

FeatureClassifier classifier_head(const LinearClassifier& head);

}  // namespace lipcert
