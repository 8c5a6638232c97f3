#include "lipcert/netspec.hpp"

#include "lipcert/error.hpp"
#include "lipcert/sidecar.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace lipcert {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Dilation / layer helpers
// ---------------------------------------------------------------------------

Dilation Dilation::none(std::size_t rank) { return Dilation{std::vector<std::size_t>(rank, 1), {}}; }

Dilation Dilation::uniform(std::size_t rank, std::size_t s) { return Dilation{std::vector<std::size_t>(rank, s), {}}; }

bool Dilation::is_identity() const
{
    for (std::size_t s : stride)
        if (s != 1) return false;
    for (std::size_t i = 0; i < matrix.size(); ++i)
        for (std::size_t j = 0; j < matrix[i].size(); ++j)
            if (matrix[i][j] != (i == j ? 1.0 : 0.0)) return false;
    return true;
}

namespace {

double determinant(std::vector<std::vector<double>> a)
{
    const std::size_t n = a.size();
    double det = 1.0;
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
        if (a[piv][c] == 0.0) return 0.0;
        if (piv != c) {
            std::swap(a[piv], a[c]);
            det = -det;
        }
        det *= a[c][c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r][c] / a[c][c];
            for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
        }
    }
    return det;
}

}  // namespace

double Dilation::energy_factor() const
{
    if (!matrix.empty()) return 1.0 / std::abs(determinant(matrix));
    double f = 1.0;
    for (std::size_t s : stride) f /= static_cast<double>(s);
    return f;
}

std::size_t LayerSpec::output_count() const
{
    if (!is_linear()) return merges.size();
    std::size_t n = 0;
    for (const auto& f : filters)
        if (f.target) n = std::max(n, *f.target + 1);
    return n;
}

std::string to_string(MergeKind k)
{
    switch (k) {
    case MergeKind::sum: return "sum";
    case MergeKind::pnorm: return "pnorm";
    case MergeKind::product: return "product";
    }
    return "sum";
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what)
{
    throw ParseError(where + ": " + what, 0);
}

std::size_t as_index(const json& j, const std::string& where)
{
    if (!j.is_number_integer() || j.get<long long>() < 0) schema_error(where, "expected a nonnegative integer");
    return j.get<std::size_t>();
}

void collect_taps(const json& j, std::size_t depth, Shape& shape, std::vector<double>& values, const std::string& where)
{
    if (!j.is_array()) {
        if (!j.is_number()) schema_error(where, "tap entries must be numbers");
        values.push_back(j.get<double>());
        return;
    }
    if (j.empty()) schema_error(where, "empty tap array");
    if (depth == shape.size()) shape.push_back(j.size());
    else if (shape[depth] != j.size()) schema_error(where, "ragged tap array");
    for (const auto& e : j) {
        if (e.is_array() != j.front().is_array()) schema_error(where, "ragged tap array");
        collect_taps(e, depth + 1, shape, values, where);
    }
}

Filter parse_filter(const json& j, std::size_t rank, const std::filesystem::path& base, const std::string& where)
{
    if (!j.is_object()) schema_error(where, "filter must be an object");
    const int kinds = int(j.contains("taps")) + int(j.contains("profile")) + int(j.contains("file"));
    if (kinds != 1) schema_error(where, "filter needs exactly one of 'taps', 'profile', 'file'");
    if (j.contains("profile")) {
        const auto& p = j.at("profile");
        if (!p.is_object() || !p.contains("name") || !p.at("name").is_string())
            schema_error(where, "profile needs a 'name'");
        ProfileFilter pf{p.at("name").get<std::string>(), {}};
        if (p.contains("params")) {
            if (!p.at("params").is_array()) schema_error(where, "profile params must be an array");
            for (const auto& v : p.at("params")) {
                if (!v.is_number()) schema_error(where, "profile params must be numbers");
                pf.params.push_back(v.get<double>());
            }
        }
        return pf;
    }
    TapFilter tf;
    if (j.contains("taps")) {
        Shape shape;
        std::vector<double> values;
        collect_taps(j.at("taps"), 0, shape, values, where);
        if (shape.empty()) {
            shape = Shape(rank, 1);
        }
        tf.taps = Signal(shape, values);
    } else {
        if (!j.at("file").is_string()) schema_error(where, "'file' must be a path string");
        tf.taps = read_sidecar(base / j.at("file").get<std::string>());
    }
    tf.origin.assign(tf.taps.shape.size(), 0);
    if (j.contains("origin")) {
        const auto& o = j.at("origin");
        if (o.is_number_integer()) {
            tf.origin.assign(tf.taps.shape.size(), o.get<long>());
        } else if (o.is_array() && o.size() == tf.taps.shape.size()) {
            for (std::size_t a = 0; a < o.size(); ++a) {
                if (!o[a].is_number_integer()) schema_error(where, "origin entries must be integers");
                tf.origin[a] = o[a].get<long>();
            }
        } else {
            schema_error(where, "origin must be an integer or an array with one entry per tap axis");
        }
    }
    return tf;
}

Nonlinearity parse_sigma(const json& j, const std::string& where)
{
    if (j.is_string()) {
        try {
            return Nonlinearity::from_name(j.get<std::string>());
        } catch (const ValidationError& e) {
            schema_error(where, e.what());
        }
    }
    if (j.is_object() && j.contains("table") && j.at("table").is_array()) {
        std::vector<std::pair<double, double>> knots;
        for (const auto& k : j.at("table")) {
            if (!k.is_array() || k.size() != 2 || !k[0].is_number() || !k[1].is_number())
                schema_error(where, "table knots must be [x, y] number pairs");
            knots.emplace_back(k[0].get<double>(), k[1].get<double>());
        }
        return Nonlinearity::table(std::move(knots));
    }
    schema_error(where, "sigma must be a catalog name or {\"table\": [[x, y], ...]}");
}

Dilation parse_dilation(const json& j, std::size_t rank, SignalDomain domain, const std::string& where)
{
    if (j.is_null()) return Dilation::none(rank);
    if (j.is_number_integer()) {
        if (j.get<long long>() < 1) schema_error(where, "dilation must be a positive integer");
        return Dilation::uniform(rank, j.get<std::size_t>());
    }
    if (!j.is_array() || j.empty()) schema_error(where, "dilation must be an int array or a matrix");
    if (j.front().is_array()) {
        if (domain != SignalDomain::continuous_closed_form)
            schema_error(where, "matrix dilations are only valid for continuous networks");
        Dilation d;
        d.stride.assign(rank, 1);
        for (const auto& row : j) {
            if (!row.is_array()) schema_error(where, "ragged dilation matrix");
            std::vector<double> r;
            for (const auto& v : row) {
                if (!v.is_number()) schema_error(where, "dilation matrix entries must be numbers");
                r.push_back(v.get<double>());
            }
            d.matrix.push_back(std::move(r));
        }
        return d;
    }
    Dilation d;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<long long>() < 1)
            schema_error(where, "dilation factors must be positive integers");
        d.stride.push_back(v.get<std::size_t>());
    }
    if (domain == SignalDomain::continuous_closed_form) {
        // Integer factors on a continuous net mean the diagonal matrix diag(factors).
        d.matrix.assign(d.stride.size(), std::vector<double>(d.stride.size(), 0.0));
        for (std::size_t a = 0; a < d.stride.size(); ++a) d.matrix[a][a] = static_cast<double>(d.stride[a]);
        d.stride.assign(d.stride.size(), 1);
        if (d.is_identity()) d.matrix.clear();
    }
    return d;
}

MergeSpec parse_merge(const json& j, const std::string& where)
{
    if (!j.is_object() || !j.contains("members") || !j.at("members").is_array())
        schema_error(where, "merge needs a 'members' array");
    MergeSpec m;
    for (const auto& v : j.at("members")) m.members.push_back(as_index(v, where + ".members"));
    const std::string kind = j.value("kind", std::string("sum"));
    if (kind == "sum") m.kind = MergeKind::sum;
    else if (kind == "pnorm") m.kind = MergeKind::pnorm;
    else if (kind == "product") m.kind = MergeKind::product;
    else schema_error(where, "unknown merge kind '" + kind + "'");
    if (j.contains("p")) {
        const auto& p = j.at("p");
        if (p.is_string() && (p.get<std::string>() == "inf" || p.get<std::string>() == "infinity")) m.p = kInfinity;
        else if (p.is_number()) m.p = p.get<double>();
        else schema_error(where, "p must be a number or \"inf\"");
    }
    return m;
}

LayerSpec parse_layer(const json& j, std::size_t index, std::size_t inputs, std::size_t rank, SignalDomain domain,
                      const std::filesystem::path& base)
{
    const std::string where = "layers[" + std::to_string(index) + "]";
    if (!j.is_object()) schema_error(where, "layer must be an object");
    LayerSpec layer;
    layer.input_count = inputs;
    if (j.contains("inputs")) {
        const std::size_t declared = as_index(j.at("inputs"), where + ".inputs");
        if (declared != inputs)
            throw ValidationError(where + ": declares " + std::to_string(declared) + " input nodes but the previous layer has " +
                                  std::to_string(inputs) + " output nodes");
    }
    layer.pooling.assign(inputs, std::nullopt);
    if (j.contains("pooling") && !j.at("pooling").is_null()) {
        const auto& p = j.at("pooling");
        if (!p.is_array()) schema_error(where, "pooling must be an array or null");
        if (p.size() != inputs)
            throw ValidationError(where + ": pooling has " + std::to_string(p.size()) + " entries for " +
                                  std::to_string(inputs) + " input nodes");
        for (std::size_t n = 0; n < inputs; ++n)
            if (!p[n].is_null())
                layer.pooling[n] = parse_filter(p[n], rank, base, where + ".pooling[" + std::to_string(n) + "]");
    }
    if (j.contains("filters")) {
        if (!j.at("filters").is_array()) schema_error(where, "filters must be an array");
        std::size_t k = 0;
        for (const auto& fj : j.at("filters")) {
            const std::string fw = where + ".filters[" + std::to_string(k++) + "]";
            FilterAttachment fa;
            fa.filter = parse_filter(fj, rank, base, fw);
            if (fj.contains("source")) {
                const auto& s = fj.at("source");
                if (s.is_object()) {
                    fa.source = as_index(s.value("node", json(0)), fw + ".source.node");
                    const std::size_t sl = as_index(s.value("layer", json(index)), fw + ".source.layer");
                    if (sl != index) fa.source_layer = sl;
                } else {
                    fa.source = as_index(s, fw + ".source");
                }
            }
            fa.dilation = parse_dilation(fj.value("dilation", json()), rank, domain, fw + ".dilation");
            fa.sigma = fj.contains("sigma") ? parse_sigma(fj.at("sigma"), fw + ".sigma") : Nonlinearity::identity();
            if (fj.contains("target")) fa.target = as_index(fj.at("target"), fw + ".target");
            layer.filters.push_back(std::move(fa));
        }
    }
    if (j.contains("merges")) {
        if (!j.at("merges").is_array()) schema_error(where, "merges must be an array");
        std::size_t g = 0;
        for (const auto& mj : j.at("merges")) layer.merges.push_back(parse_merge(mj, where + ".merges[" + std::to_string(g++) + "]"));
    }
    if (j.contains("feature_taps")) {
        const auto& t = j.at("feature_taps");
        if (!t.is_array()) schema_error(where, "feature_taps must be a bool array");
        if (t.size() != inputs)
            throw ValidationError(where + ": feature_taps has " + std::to_string(t.size()) + " entries for " +
                                  std::to_string(inputs) + " input nodes");
        for (const auto& b : t) {
            if (!b.is_boolean()) schema_error(where, "feature_taps entries must be booleans");
            layer.feature_taps.push_back(b.get<bool>());
        }
    } else {
        for (const auto& p : layer.pooling) layer.feature_taps.push_back(p.has_value());
    }
    return layer;
}

}  // namespace

NetworkSpec parse_spec(std::string_view text, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object()) schema_error("document", "top level must be an object");
    NetworkSpec net;
    if (!doc.contains("input_shape") || !doc.at("input_shape").is_array() || doc.at("input_shape").empty())
        schema_error("input_shape", "required non-empty int array");
    for (const auto& e : doc.at("input_shape")) {
        const std::size_t v = as_index(e, "input_shape");
        if (v == 0) throw ValidationError("input_shape: extents must be positive");
        net.input_shape.push_back(v);
    }
    const std::string domain = doc.value("domain", std::string("discrete"));
    if (domain == "discrete") net.domain = SignalDomain::discrete_periodic;
    else if (domain == "continuous") net.domain = SignalDomain::continuous_closed_form;
    else schema_error("domain", "must be \"discrete\" or \"continuous\"");
    if (!doc.contains("layers") || !doc.at("layers").is_array() || doc.at("layers").empty())
        schema_error("layers", "required non-empty array");

    std::size_t inputs = 1;
    std::size_t i = 0;
    for (const auto& lj : doc.at("layers")) {
        LayerSpec layer = parse_layer(lj, i++, inputs, net.rank(), net.domain, base_dir);
        inputs = layer.output_count();
        net.layers.push_back(std::move(layer));
    }
    validate(net);
    return net;
}

Filter parse_filter_json(std::string_view text, std::size_t rank, const std::filesystem::path& base_dir)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    return parse_filter(doc, rank, base_dir, "filter");
}

Signal parse_signal_json(std::string_view text)
{
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed JSON: ") + e.what(), e.byte);
    }
    Shape shape;
    std::vector<double> values;
    if (!doc.is_array()) schema_error("signal", "expected a nested numeric array");
    collect_taps(doc, 0, shape, values, "signal");
    return Signal(shape, values);
}

NetworkSpec scaled_network(const NetworkSpec& net, double c)
{
    NetworkSpec out = net;
    for (auto& layer : out.layers) {
        for (auto& p : layer.pooling)
            if (p) p = p->scaled(c);
        for (auto& fa : layer.filters) fa.filter = fa.filter.scaled(c);
    }
    return out;
}

NetworkSpec load_spec(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open spec file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_spec(ss.str(), path.parent_path());
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

namespace {

json taps_to_json(const Signal& s, std::size_t axis, std::size_t offset, std::size_t stride_after)
{
    json arr = json::array();
    const std::size_t inner = stride_after / s.shape[axis];
    for (std::size_t i = 0; i < s.shape[axis]; ++i) {
        if (axis + 1 == s.shape.size()) arr.push_back(s.values[offset + i]);
        else arr.push_back(taps_to_json(s, axis + 1, offset + i * inner, inner));
    }
    return arr;
}

json filter_to_json(const Filter& f)
{
    json j;
    if (f.is_profile()) {
        j["profile"] = {{"name", f.profile().name}, {"params", f.profile().params}};
        return j;
    }
    const auto& t = f.taps();
    j["taps"] = taps_to_json(t.taps, 0, 0, t.taps.size());
    if (std::any_of(t.origin.begin(), t.origin.end(), [](long o) { return o != 0; })) j["origin"] = t.origin;
    return j;
}

json sigma_to_json(const Nonlinearity& s)
{
    if (s.kind() != NonlinearityKind::custom_table) return s.name();
    json knots = json::array();
    for (const auto& [x, y] : s.knots()) knots.push_back({x, y});
    return {{"table", knots}};
}

json dilation_to_json(const Dilation& d)
{
    if (!d.matrix.empty()) return d.matrix;
    return d.stride;
}

}  // namespace

std::string serialize_spec(const NetworkSpec& net)
{
    json doc;
    doc["input_shape"] = net.input_shape;
    doc["domain"] = net.domain == SignalDomain::discrete_periodic ? "discrete" : "continuous";
    doc["layers"] = json::array();
    for (std::size_t m = 0; m < net.layers.size(); ++m) {
        const auto& layer = net.layers[m];
        json lj;
        lj["inputs"] = layer.input_count;
        json pooling = json::array();
        for (const auto& p : layer.pooling) pooling.push_back(p ? filter_to_json(*p) : json());
        lj["pooling"] = pooling;
        json filters = json::array();
        for (const auto& fa : layer.filters) {
            json fj = filter_to_json(fa.filter);
            if (fa.source_layer) fj["source"] = {{"layer", *fa.source_layer}, {"node", fa.source}};
            else fj["source"] = fa.source;
            fj["dilation"] = dilation_to_json(fa.dilation);
            fj["sigma"] = sigma_to_json(fa.sigma);
            if (fa.target) fj["target"] = *fa.target;
            filters.push_back(std::move(fj));
        }
        lj["filters"] = filters;
        json merges = json::array();
        for (const auto& g : layer.merges) {
            json gj{{"members", g.members}, {"kind", to_string(g.kind)}};
            if (g.kind == MergeKind::pnorm) gj["p"] = std::isinf(g.p) ? json("inf") : json(g.p);
            merges.push_back(std::move(gj));
        }
        lj["merges"] = merges;
        json taps = json::array();
        for (bool b : layer.feature_taps) taps.push_back(b);
        lj["feature_taps"] = taps;
        doc["layers"].push_back(std::move(lj));
    }
    return doc.dump(2);
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

namespace {

std::string at_layer(std::size_t m) { return "layer " + std::to_string(m + 1); }

void validate_filter(const Filter& f, const NetworkSpec& net, const std::string& where)
{
    if (net.domain == SignalDomain::continuous_closed_form) {
        if (!f.is_profile()) throw ValidationError(where + ": continuous networks need closed-form profile filters");
        validate_profile(f.profile());
        return;
    }
    if (!f.is_taps()) throw ValidationError(where + ": discrete networks need tap filters");
    const auto& t = f.taps();
    if (t.taps.shape.size() != net.rank())
        throw ValidationError(where + ": tap array rank " + std::to_string(t.taps.shape.size()) +
                              " does not match input rank " + std::to_string(net.rank()));
    if (t.origin.size() != net.rank()) throw ValidationError(where + ": origin rank mismatch");
    for (double v : t.taps.values)
        if (!std::isfinite(v)) throw ValidationError(where + ": taps must be finite");
}

void validate_sigma(const Nonlinearity& s, const std::string& where)
{
    const double lip = sampled_lipschitz(s, -8.0, 8.0, 4097);
    if (lip > 1.0 + 1e-9)
        throw ValidationError(where + ": nonlinearity '" + s.name() + "' is not 1-Lipschitz on the sample grid");
}

}  // namespace

std::vector<std::vector<Shape>> node_shapes(const NetworkSpec& net)
{
    std::vector<std::vector<Shape>> shapes(net.layers.size());
    if (net.layers.empty()) return shapes;
    shapes[0].assign(net.layers[0].input_count, net.input_shape);
    const bool discrete = net.domain == SignalDomain::discrete_periodic;
    for (std::size_t m = 0; m < net.layers.size(); ++m) {
        const auto& layer = net.layers[m];
        if (shapes[m].size() != layer.input_count)
            throw ValidationError(at_layer(m) + ": has " + std::to_string(layer.input_count) +
                                  " input nodes but the previous layer produces " + std::to_string(shapes[m].size()));
        auto source_shape = [&](const FilterAttachment& fa) -> const Shape& {
            const std::size_t sl = fa.source_layer.value_or(m);
            if (sl > m || fa.source >= shapes[sl].size())
                throw ValidationError(at_layer(m) + ": filter source node " + std::to_string(fa.source) + " out of range");
            return shapes[sl][fa.source];
        };
        auto filter_output = [&](const FilterAttachment& fa) {
            const Shape& s = source_shape(fa);
            if (!discrete) return s;
            try {
                return downsampled_shape(s, fa.dilation.stride);
            } catch (const ShapeError& e) {
                throw ValidationError(at_layer(m) + ": " + e.what());
            }
        };
        std::vector<Shape> out;
        if (layer.is_linear()) {
            out.resize(layer.output_count());
            std::vector<bool> seen(out.size(), false);
            for (const auto& fa : layer.filters) {
                const Shape s = filter_output(fa);
                const std::size_t t = *fa.target;
                if (seen[t] && out[t] != s)
                    throw ValidationError(at_layer(m) + ": filters summed into output " + std::to_string(t) +
                                          " produce different shapes");
                out[t] = s;
                seen[t] = true;
            }
        } else {
            for (std::size_t g = 0; g < layer.merges.size(); ++g) {
                Shape s;
                for (std::size_t k : layer.merges[g].members) {
                    const Shape sk = filter_output(layer.filters.at(k));
                    if (!s.empty() && s != sk)
                        throw ValidationError(at_layer(m) + ": merge group " + std::to_string(g) +
                                              " combines signals of shapes " + shape_to_string(s) + " and " +
                                              shape_to_string(sk));
                    s = sk;
                }
                out.push_back(s);
            }
        }
        if (m + 1 < net.layers.size()) shapes[m + 1] = std::move(out);
    }
    return shapes;
}

void validate(const NetworkSpec& net)
{
    if (net.input_shape.empty()) throw ValidationError("input_shape must have at least one axis");
    for (std::size_t e : net.input_shape)
        if (e == 0) throw ValidationError("input_shape extents must be positive");
    if (net.layers.empty()) throw ValidationError("network has no layers");
    if (net.domain == SignalDomain::continuous_closed_form && net.rank() != 1)
        throw ValidationError("continuous networks support one-dimensional profiles only");
    if (net.layers[0].input_count != 1) throw ValidationError("layer 1 must have exactly one input node");

    const std::size_t M = net.layers.size();
    std::vector<std::vector<bool>> used(M);
    for (std::size_t m = 0; m < M; ++m) used[m].assign(net.layers[m].input_count, false);

    for (std::size_t m = 0; m < M; ++m) {
        const auto& layer = net.layers[m];
        const std::string where = at_layer(m);
        if (layer.input_count == 0) throw ValidationError(where + ": has no input nodes");
        if (m + 1 < M && layer.output_count() != net.layers[m + 1].input_count)
            throw ValidationError(where + ": produces " + std::to_string(layer.output_count()) +
                                  " output nodes but " + at_layer(m + 1) + " expects " +
                                  std::to_string(net.layers[m + 1].input_count) + " (n'_m must equal n_{m+1})");
        if (m + 1 == M && !layer.filters.empty())
            throw ValidationError(where + ": the last layer has no hidden output nodes, so it cannot have convolution filters");
        if (layer.pooling.size() != layer.input_count || layer.feature_taps.size() != layer.input_count)
            throw ValidationError(where + ": pooling/feature_taps must have one entry per input node");
        for (std::size_t n = 0; n < layer.input_count; ++n) {
            if (layer.pooling[n]) validate_filter(*layer.pooling[n], net, where + " pooling[" + std::to_string(n) + "]");
            if (layer.feature_taps[n]) {
                if (!layer.pooling[n])
                    throw ValidationError(where + ": feature tap on node " + std::to_string(n) + " has no pooling filter");
                used[m][n] = true;
            }
        }

        for (std::size_t k = 0; k < layer.filters.size(); ++k) {
            const auto& fa = layer.filters[k];
            const std::string fw = where + " filter " + std::to_string(k);
            validate_filter(fa.filter, net, fw);
            validate_sigma(fa.sigma, fw);
            const std::size_t sl = fa.source_layer.value_or(m);
            if (sl > m) throw ValidationError(fw + ": source layer must not come after the filter's own layer");
            if (fa.source >= net.layers[sl].input_count)
                throw ValidationError(fw + ": source node " + std::to_string(fa.source) + " out of range");
            used[sl][fa.source] = true;
            if (net.domain == SignalDomain::discrete_periodic) {
                if (fa.dilation.stride.size() != net.rank() || !fa.dilation.matrix.empty())
                    throw ValidationError(fw + ": discrete dilation needs one positive factor per axis");
                for (std::size_t s : fa.dilation.stride)
                    if (s == 0) throw ValidationError(fw + ": dilation factors must be positive");
            } else if (!fa.dilation.matrix.empty()) {
                if (fa.dilation.matrix.size() != net.rank())
                    throw ValidationError(fw + ": dilation matrix must be d x d");
                for (const auto& row : fa.dilation.matrix)
                    if (row.size() != net.rank()) throw ValidationError(fw + ": dilation matrix must be d x d");
                const double f = fa.dilation.energy_factor();
                if (!std::isfinite(f)) throw ValidationError(fw + ": dilation matrix must be invertible");
            }
        }

        if (layer.is_linear()) {
            std::map<std::size_t, const FilterAttachment*> first;
            for (std::size_t k = 0; k < layer.filters.size(); ++k) {
                const auto& fa = layer.filters[k];
                if (!fa.target)
                    throw ValidationError(where + ": filter " + std::to_string(k) +
                                          " needs a 'target' (layers without merges are linear operator arrays)");
                auto [it, inserted] = first.emplace(*fa.target, &fa);
                if (!inserted && (!(it->second->dilation == fa.dilation) || !(it->second->sigma == fa.sigma)))
                    throw ValidationError(where + ": filters feeding output " + std::to_string(*fa.target) +
                                          " must share dilation and nonlinearity");
            }
            for (std::size_t t = 0; t < layer.output_count(); ++t)
                if (!first.count(t)) throw ValidationError(where + ": output " + std::to_string(t) + " has no filters");
        } else {
            std::vector<int> owner(layer.filters.size(), -1);
            for (std::size_t g = 0; g < layer.merges.size(); ++g) {
                const auto& mg = layer.merges[g];
                if (mg.members.empty()) throw ValidationError(where + ": merge group " + std::to_string(g) + " is empty");
                if (mg.kind == MergeKind::pnorm && !(mg.p >= 1.0))
                    throw ValidationError(where + ": merge group " + std::to_string(g) + " has p < 1");
                for (std::size_t k : mg.members) {
                    if (k >= layer.filters.size())
                        throw ValidationError(where + ": merge group " + std::to_string(g) + " references missing filter " +
                                              std::to_string(k));
                    if (owner[k] != -1)
                        throw ValidationError(where + ": filter " + std::to_string(k) +
                                              " belongs to more than one merge group");
                    owner[k] = static_cast<int>(g);
                    if (mg.kind == MergeKind::product) {
                        const auto sup = layer.filters[k].sigma.sup_norm();
                        if (!sup || *sup > 1.0)
                            throw ValidationError(where + ": product merge group " + std::to_string(g) + " member " +
                                                  std::to_string(k) + " uses nonlinearity '" +
                                                  layer.filters[k].sigma.name() + "' with sup-norm > 1");
                    }
                }
            }
            for (std::size_t k = 0; k < owner.size(); ++k)
                if (owner[k] == -1)
                    throw ValidationError(where + ": filter " + std::to_string(k) + " is not assigned to a merge group");
        }
    }
    for (std::size_t m = 0; m < M; ++m)
        for (std::size_t n = 0; n < used[m].size(); ++n)
            if (!used[m][n])
                throw ValidationError(at_layer(m) + ": input node " + std::to_string(n) +
                                      " has no filters and no feature tap");

    const auto shapes = node_shapes(net);
    if (net.domain == SignalDomain::discrete_periodic) {
        for (std::size_t m = 0; m < M; ++m) {
            const auto& layer = net.layers[m];
            auto check_fit = [&](const Filter& f, const Shape& s, const std::string& what) {
                for (std::size_t a = 0; a < s.size(); ++a)
                    if (f.taps().taps.shape[a] > s[a])
                        throw ValidationError(at_layer(m) + ": " + what + " has support " +
                                              shape_to_string(f.taps().taps.shape) + " larger than its grid " +
                                              shape_to_string(s));
            };
            for (std::size_t n = 0; n < layer.input_count; ++n)
                if (layer.pooling[n]) check_fit(*layer.pooling[n], shapes[m][n], "pooling filter " + std::to_string(n));
            for (std::size_t k = 0; k < layer.filters.size(); ++k) {
                const auto& fa = layer.filters[k];
                check_fit(fa.filter, shapes[fa.source_layer.value_or(m)][fa.source], "filter " + std::to_string(k));
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Skip-connection normalization
// ---------------------------------------------------------------------------

bool has_skip_connections(const NetworkSpec& net)
{
    for (std::size_t m = 0; m < net.layers.size(); ++m)
        for (const auto& fa : net.layers[m].filters)
            if (fa.source_layer && *fa.source_layer != m) return true;
    return false;
}

namespace {

// Appends an identity pass-through of input node `node` to layer `m`; returns the index of
// the new output node (= new input node of layer m + 1).
std::size_t add_pass_through(NetworkSpec& net, std::size_t m, std::size_t node)
{
    LayerSpec& layer = net.layers[m];
    const std::size_t out = layer.output_count();
    FilterAttachment fa;
    fa.filter = Filter::delta(net.rank());
    fa.source = node;
    fa.dilation = Dilation::none(net.rank());
    fa.sigma = Nonlinearity::identity();
    if (layer.is_linear()) {
        fa.target = out;
        layer.filters.push_back(std::move(fa));
    } else {
        layer.filters.push_back(std::move(fa));
        layer.merges.push_back(MergeSpec{MergeKind::sum, 2.0, {layer.filters.size() - 1}});
    }
    LayerSpec& next = net.layers[m + 1];
    next.input_count += 1;
    next.pooling.emplace_back(std::nullopt);
    next.feature_taps.push_back(false);
    return out;
}

}  // namespace

NetworkSpec normalize_skip_connections(const NetworkSpec& net)
{
    if (!has_skip_connections(net)) return net;
    NetworkSpec out = net;
    // carried[{origin layer, origin node}][layer] = input node of `layer` holding that signal.
    std::map<std::pair<std::size_t, std::size_t>, std::map<std::size_t, std::size_t>> carried;
    for (std::size_t m = 0; m < out.layers.size(); ++m) {
        for (std::size_t k = 0; k < out.layers[m].filters.size(); ++k) {
            auto& fa = out.layers[m].filters[k];
            if (!fa.source_layer) continue;
            const std::size_t j = *fa.source_layer;
            if (j == m) {
                fa.source_layer.reset();
                continue;
            }
            auto& chain = carried[{j, fa.source}];
            chain[j] = fa.source;
            for (std::size_t l = j; l < m; ++l) {
                if (!chain.count(l + 1)) chain[l + 1] = add_pass_through(out, l, chain[l]);
            }
            auto& fixed = out.layers[m].filters[k];  // add_pass_through may have reallocated only other layers
            fixed.source = chain[m];
            fixed.source_layer.reset();
        }
    }
    validate(out);
    return out;
}

// ---------------------------------------------------------------------------
// Max pooling as a merge
// ---------------------------------------------------------------------------

PoolFragment max_pool_as_merge(std::size_t size, std::size_t stride, const Shape& extent, std::size_t source)
{
    if (size == 0 || stride == 0) throw ValidationError("pool size and stride must be positive");
    for (std::size_t e : extent)
        if (e % stride != 0)
            throw ShapeError("pool stride " + std::to_string(stride) + " does not divide periodic extent " +
                             std::to_string(e));
    const std::size_t d = extent.size();
    PoolFragment frag;
    frag.merge.kind = MergeKind::pnorm;
    frag.merge.p = kInfinity;
    std::vector<long> offset(d, 0);
    while (true) {
        FilterAttachment fa;
        // Reads x(t + offset): a delta placed at spatial position -offset.
        std::vector<long> pos(d);
        for (std::size_t a = 0; a < d; ++a) pos[a] = -offset[a];
        fa.filter = Filter::shifted_delta(pos);
        fa.source = source;
        fa.dilation = Dilation::uniform(d, stride);
        fa.sigma = Nonlinearity::identity();
        frag.merge.members.push_back(frag.filters.size());
        frag.filters.push_back(std::move(fa));
        std::size_t a = d;
        while (a-- > 0) {
            if (++offset[a] < static_cast<long>(size)) break;
            offset[a] = 0;
        }
        if (a == static_cast<std::size_t>(-1)) break;
    }
    return frag;
}

NetworkSpec fragment_network(const PoolFragment& fragment, const Shape& input_shape)
{
    NetworkSpec net;
    net.input_shape = input_shape;
    LayerSpec first;
    first.input_count = 1;
    first.pooling = {std::nullopt};
    first.feature_taps = {false};
    first.filters = fragment.filters;
    first.merges = {fragment.merge};
    LayerSpec last;
    last.input_count = 1;
    last.pooling = {Filter::delta(input_shape.size())};
    last.feature_taps = {true};
    net.layers = {std::move(first), std::move(last)};
    validate(net);
    return net;
}

}  // namespace lipcert
