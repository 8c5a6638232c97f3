#pragma once

#include "lipcert/filter.hpp"
#include "lipcert/nonlinearity.hpp"
#include "lipcert/signal.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lipcert {

enum class SignalDomain { discrete_periodic, continuous_closed_form };

// Change of scale applied after a convolution. Discrete nets keep every stride[a]-th
// sample along axis a; continuous nets carry an invertible d x d matrix D.
struct Dilation {
    std::vector<std::size_t> stride;
    std::vector<std::vector<double>> matrix;

    static Dilation none(std::size_t rank);
    static Dilation uniform(std::size_t rank, std::size_t s);

    bool is_identity() const;
    // (det D)^{-1}; for discrete strides s^{-d} in the sense of prod_a 1/stride[a].
    double energy_factor() const;

    bool operator==(const Dilation&) const = default;
};

enum class MergeKind { sum, pnorm, product };

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

// One output node of a merge layer: the filters in `members` are aggregated by `kind`.
struct MergeSpec {
    MergeKind kind = MergeKind::sum;
    double p = 2.0;  // pnorm only, in [1, inf]
    std::vector<std::size_t> members;

    bool operator==(const MergeSpec&) const = default;
};

struct FilterAttachment {
    Filter filter;
    // Input node read by the filter. With `source_layer` set to j < own layer index, the
    // filter reads input node `source` of layer j instead (a skip connection).
    std::size_t source = 0;
    std::optional<std::size_t> source_layer;
    Dilation dilation;
    Nonlinearity sigma;
    // Output row of a linear (no-merge) layer; unused in merge layers.
    std::optional<std::size_t> target;

    bool operator==(const FilterAttachment&) const = default;
};

struct LayerSpec {
    std::size_t input_count = 1;
    std::vector<std::optional<Filter>> pooling;  // one slot per input node
    std::vector<FilterAttachment> filters;
    std::vector<MergeSpec> merges;
    std::vector<bool> feature_taps;  // one flag per input node

    // A layer with filters but no merge groups is a linear operator array T^(m).
    bool is_linear() const noexcept { return merges.empty() && !filters.empty(); }
    std::size_t output_count() const;
    bool has_tap(std::size_t node) const { return node < feature_taps.size() && feature_taps[node]; }

    bool operator==(const LayerSpec&) const = default;
};

struct NetworkSpec {
    Shape input_shape;
    SignalDomain domain = SignalDomain::discrete_periodic;
    std::vector<LayerSpec> layers;

    std::size_t rank() const noexcept { return input_shape.size(); }
    bool operator==(const NetworkSpec&) const = default;
};

// Parses the JSON spec document. Sidecar tap files are resolved relative to `base_dir`.
// Throws ParseError on malformed JSON or schema, ValidationError on graph invariants.
NetworkSpec parse_spec(std::string_view text, const std::filesystem::path& base_dir = {});
NetworkSpec load_spec(const std::filesystem::path& path);
// Inline-tap JSON document that parse_spec reads back to an equal NetworkSpec.
std::string serialize_spec(const NetworkSpec& net);

void validate(const NetworkSpec& net);

// A single filter object in the spec-file syntax ({"taps": ...} | {"profile": ...} | {"file": ...}).
Filter parse_filter_json(std::string_view text, std::size_t rank, const std::filesystem::path& base_dir = {});
// A signal written as a nested numeric array; rank follows the nesting depth.
Signal parse_signal_json(std::string_view text);

// Copy with every convolution and pooling filter multiplied by c.
NetworkSpec scaled_network(const NetworkSpec& net, double c);

// Shapes of the input nodes of every layer (discrete nets); continuous nets report the
// input shape everywhere.
std::vector<std::vector<Shape>> node_shapes(const NetworkSpec& net);

bool has_skip_connections(const NetworkSpec& net);
// Rewrites every skip connection as a chain of identity pass-through filters, one per
// skipped layer, so each filter reads an input node of its own layer.
NetworkSpec normalize_skip_connections(const NetworkSpec& net);

// Filters plus merge realizing window max pooling on one input node.
struct PoolFragment {
    std::vector<FilterAttachment> filters;
    MergeSpec merge;
};

// size^d shifted-delta filters with dilation `stride`, merged by a p = inf pnorm.
// Matches direct max pooling for nonnegative inputs. Throws ShapeError when stride does
// not divide an extent of `extent`.
PoolFragment max_pool_as_merge(std::size_t size, std::size_t stride, const Shape& extent, std::size_t source = 0);

// Two-layer net whose only feature output is the fragment applied to the input signal.
NetworkSpec fragment_network(const PoolFragment& fragment, const Shape& input_shape);

std::string to_string(MergeKind k);

}  // namespace lipcert
