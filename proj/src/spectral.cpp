#include "lipcert/spectral.hpp"

#include "lipcert/error.hpp"
#include "lipcert/parallel.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

namespace lipcert {

std::string to_string(BesselMethod m) { return m == BesselMethod::frequency ? "frequency" : "operator"; }

double multiplier(MergeKind kind, double p, std::size_t K)
{
    if (K == 0) throw ValidationError("merge group must contain at least one filter");
    if (kind != MergeKind::pnorm) return static_cast<double>(K);
    if (!(p >= 1.0)) throw ValidationError("p-norm merge requires p >= 1");
    const double e = std::max(0.0, 2.0 / p - 1.0);
    return std::pow(static_cast<double>(K), e);
}

double dense_supremum(const std::function<double(double)>& f, double lo, double hi, std::size_t samples,
                      double refine_tol, double* argmax)
{
    if (samples < 2) samples = 2;
    const double step = (hi - lo) / static_cast<double>(samples - 1);
    double best = -std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < samples; ++i) {
        const double v = f(lo + step * static_cast<double>(i));
        if (v > best) {
            best = v;
            best_i = i;
        }
    }
    double a = lo + step * static_cast<double>(best_i == 0 ? 0 : best_i - 1);
    double b = lo + step * static_cast<double>(std::min(best_i + 1, samples - 1));
    double best_x = lo + step * static_cast<double>(best_i);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = f(c), fd = f(d);
    for (int it = 0; it < 200 && (b - a) > refine_tol; ++it) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = f(d);
        }
    }
    for (double x : {c, d, 0.5 * (a + b)}) {
        const double v = f(x);
        if (v > best) {
            best = v;
            best_x = x;
        }
    }
    if (argmax) *argmax = best_x;
    return best;
}

namespace {

bool strided(const Dilation& d)
{
    for (std::size_t s : d.stride)
        if (s != 1) return true;
    return false;
}

bool layer_strided(const LayerSpec& layer)
{
    for (const auto& fa : layer.filters)
        if (strided(fa.dilation)) return true;
    return false;
}

// Multiplier of every conv filter of a merge layer, indexed like layer.filters.
std::vector<double> filter_multipliers(const LayerSpec& layer)
{
    std::vector<double> l(layer.filters.size(), 1.0);
    for (const auto& g : layer.merges) {
        const double v = multiplier(g.kind, g.p, g.members.size());
        for (std::size_t k : g.members) l[k] = v;
    }
    return l;
}

void require_normalized(const NetworkSpec& net)
{
    if (has_skip_connections(net))
        throw ValidationError("Bessel bounds need a strictly layered network; normalize skip connections first");
}

// ---------------------------------------------------------------------------
// Discrete matrix-free stage: a sum of weighted branches in -> conv -> downsample -> out.
// ---------------------------------------------------------------------------

struct Branch {
    std::size_t src;
    std::size_t dst;
    const TapFilter* filter;
    std::vector<std::size_t> stride;
    double weight;
};

struct BranchStage {
    std::vector<Shape> in_shapes;
    std::vector<Shape> out_shapes;
    std::vector<Branch> branches;

    std::vector<std::size_t> offsets(const std::vector<Shape>& shapes) const
    {
        std::vector<std::size_t> off{0};
        for (const auto& s : shapes) off.push_back(off.back() + element_count(s));
        return off;
    }

    std::size_t input_dim() const { return offsets(in_shapes).back(); }

    void forward(const std::vector<double>& x, std::vector<double>& y) const
    {
        const auto in_off = offsets(in_shapes);
        const auto out_off = offsets(out_shapes);
        y.assign(out_off.back(), 0.0);
        for (const auto& b : branches) {
            Signal xs(in_shapes[b.src], std::vector<double>(x.begin() + in_off[b.src], x.begin() + in_off[b.src + 1]));
            const Signal r = downsample(circular_convolve(xs, b.filter->taps, b.filter->origin), b.stride);
            for (std::size_t i = 0; i < r.size(); ++i) y[out_off[b.dst] + i] += b.weight * r.values[i];
        }
    }

    void adjoint(const std::vector<double>& y, std::vector<double>& x) const
    {
        const auto in_off = offsets(in_shapes);
        const auto out_off = offsets(out_shapes);
        x.assign(in_off.back(), 0.0);
        for (const auto& b : branches) {
            Signal ys(out_shapes[b.dst],
                      std::vector<double>(y.begin() + out_off[b.dst], y.begin() + out_off[b.dst + 1]));
            const Signal up = upsample(ys, b.stride, in_shapes[b.src]);
            const Signal r = circular_correlate(up, b.filter->taps, b.filter->origin);
            for (std::size_t i = 0; i < r.size(); ++i) x[in_off[b.src] + i] += b.weight * r.values[i];
        }
    }

    PowerResult norm(const PowerOptions& opt) const
    {
        if (branches.empty()) {
            PowerResult r;
            r.tol = opt.tol;
            return r;
        }
        return power_iteration([this](const std::vector<double>& a, std::vector<double>& b) { forward(a, b); },
                               [this](const std::vector<double>& a, std::vector<double>& b) { adjoint(a, b); },
                               input_dim(), opt);
    }
};

double max_power_dft(const TapFilter& f, const Shape& grid)
{
    double best = 0.0;
    for (const auto& v : frequency_response(f, grid)) best = std::max(best, std::norm(v));
    return best;
}

std::string dft_grid_text(const Shape& s) { return "dft " + shape_to_string(s); }

// Hidden and pooling stages of one node of a merge layer.
void node_stages(const LayerSpec& layer, std::size_t node, const Shape& shape, BranchStage& hidden,
                 BranchStage& stacked)
{
    const auto l = filter_multipliers(layer);
    hidden.in_shapes = {shape};
    for (std::size_t k = 0; k < layer.filters.size(); ++k) {
        const auto& fa = layer.filters[k];
        if (fa.source != node) continue;
        hidden.out_shapes.push_back(downsampled_shape(shape, fa.dilation.stride));
        hidden.branches.push_back(
            Branch{0, hidden.out_shapes.size() - 1, &fa.filter.taps(), fa.dilation.stride, std::sqrt(l[k])});
    }
    stacked = hidden;
    if (layer.pooling[node]) {
        stacked.out_shapes.push_back(shape);
        stacked.branches.push_back(Branch{0, stacked.out_shapes.size() - 1, &layer.pooling[node]->taps(),
                                          std::vector<std::size_t>(shape.size(), 1), 1.0});
    }
}

BesselTriple discrete_merge_node(const LayerSpec& layer, std::size_t node, const Shape& shape, bool use_operator,
                                 const SpectralOptions& opt)
{
    BesselTriple t;
    if (layer.pooling[node]) t.b3 = max_power_dft(layer.pooling[node]->taps(), shape);
    if (!use_operator) {
        const auto l = filter_multipliers(layer);
        const std::size_t n = element_count(shape);
        std::vector<double> hidden(n, 0.0), pool(n, 0.0);
        for (std::size_t k = 0; k < layer.filters.size(); ++k) {
            const auto& fa = layer.filters[k];
            if (fa.source != node) continue;
            const auto r = frequency_response(fa.filter.taps(), shape);
            for (std::size_t i = 0; i < n; ++i) hidden[i] += l[k] * std::norm(r[i]);
        }
        if (layer.pooling[node]) {
            const auto r = frequency_response(layer.pooling[node]->taps(), shape);
            for (std::size_t i = 0; i < n; ++i) pool[i] = std::norm(r[i]);
        }
        for (std::size_t i = 0; i < n; ++i) {
            t.b2 = std::max(t.b2, hidden[i]);
            t.b1 = std::max(t.b1, hidden[i] + pool[i]);
        }
        return t;
    }
    BranchStage hidden, stacked;
    node_stages(layer, node, shape, hidden, stacked);
    t.b2 = hidden.norm(opt.power).sigma_squared;
    t.b1 = stacked.norm(opt.power).sigma_squared;
    // Power iteration converges from below; keep the exact pooling value as a floor.
    t.b1 = std::max({t.b1, t.b2, t.b3});
    return t;
}

// ---------------------------------------------------------------------------
// Continuous profiles
// ---------------------------------------------------------------------------

double band_radius(const LayerSpec& layer)
{
    double r = 0.0;
    for (const auto& p : layer.pooling)
        if (p) r = std::max(r, profile_support_radius(p->profile()));
    for (const auto& fa : layer.filters) r = std::max(r, profile_support_radius(fa.filter.profile()));
    return r > 0.0 ? r : 1.0;
}

std::string dense_grid_text(std::size_t samples, double r)
{
    std::ostringstream os;
    os << "dense " << samples << " on [" << -r << ", " << r << "]";
    return os.str();
}

BesselTriple continuous_merge_node(const LayerSpec& layer, std::size_t node, const SpectralOptions& opt)
{
    const auto l = filter_multipliers(layer);
    std::vector<std::pair<double, const ProfileFilter*>> terms;
    for (std::size_t k = 0; k < layer.filters.size(); ++k) {
        const auto& fa = layer.filters[k];
        if (fa.source == node) terms.emplace_back(l[k] * fa.dilation.energy_factor(), &fa.filter.profile());
    }
    const ProfileFilter* pool = layer.pooling[node] ? &layer.pooling[node]->profile() : nullptr;
    auto hidden = [&](double w) {
        double s = 0.0;
        for (const auto& [c, p] : terms) s += c * power_response(*p, w);
        return s;
    };
    auto pooling = [&](double w) { return pool ? power_response(*pool, w) : 0.0; };
    const double r = band_radius(layer);
    BesselTriple t;
    t.b2 = terms.empty() ? 0.0 : dense_supremum(hidden, -r, r, opt.dense_samples, opt.refine_tol);
    t.b3 = pool ? dense_supremum(pooling, -r, r, opt.dense_samples, opt.refine_tol) : 0.0;
    t.b1 = dense_supremum([&](double w) { return hidden(w) + pooling(w); }, -r, r, opt.dense_samples, opt.refine_tol);
    return t;
}

void check_node_nonempty(const LayerSpec& layer, std::size_t node, std::size_t m)
{
    const bool has_filter = std::any_of(layer.filters.begin(), layer.filters.end(),
                                        [&](const FilterAttachment& fa) { return fa.source == node; });
    if (!has_filter && !layer.pooling[node])
        throw ValidationError("layer " + std::to_string(m + 1) + " node " + std::to_string(node) +
                              " has neither filters nor a pooling filter");
}

// Squared spectral norm of a small complex matrix.
double spectral_norm_sq(const Eigen::MatrixXcd& a)
{
    if (a.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(a);
    const double s = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    return s * s;
}

}  // namespace

BesselTriple bessel_merge_node(const NetworkSpec& net, std::size_t m, std::size_t node, const SpectralOptions& options)
{
    require_normalized(net);
    const LayerSpec& layer = net.layers.at(m);
    if (layer.is_linear()) throw ValidationError("layer " + std::to_string(m + 1) + " has no merge groups");
    if (node >= layer.input_count) throw ValidationError("node index out of range");
    check_node_nonempty(layer, node, m);
    if (net.domain == SignalDomain::continuous_closed_form) return continuous_merge_node(layer, node, options);
    const auto shapes = node_shapes(net);
    return discrete_merge_node(layer, node, shapes[m][node], layer_strided(layer), options);
}

LayerBessel bessel_no_merge_layer(const NetworkSpec& net, std::size_t m, const SpectralOptions& options)
{
    require_normalized(net);
    const LayerSpec& layer = net.layers.at(m);
    if (!layer.is_linear()) throw ValidationError("layer " + std::to_string(m + 1) + " has merge groups");
    const std::size_t n_in = layer.input_count;
    const std::size_t n_out = layer.output_count();
    LayerBessel out;

    // Row scaling (det D)^(-1/2) per output; validation guarantees one dilation per target.
    std::vector<double> delta(n_out, 1.0);
    for (const auto& fa : layer.filters) {
        if (*fa.target >= n_out || fa.source >= n_in)
            throw ShapeError("filter array does not match the layer's node counts");
        delta[*fa.target] = std::sqrt(fa.dilation.energy_factor());
    }

    if (net.domain == SignalDomain::continuous_closed_form) {
        const double r = band_radius(layer);
        // Profiles carry power only; amplitudes are taken as the nonnegative square roots.
        auto matrices = [&](double w, Eigen::MatrixXcd& top, Eigen::MatrixXcd& bottom) {
            top = Eigen::MatrixXcd::Zero(n_out, n_in);
            bottom = Eigen::MatrixXcd::Zero(n_in, n_in);
            for (const auto& fa : layer.filters)
                top(*fa.target, fa.source) += delta[*fa.target] * std::sqrt(power_response(fa.filter.profile(), w));
            for (std::size_t n = 0; n < n_in; ++n)
                if (layer.pooling[n]) bottom(n, n) = std::sqrt(power_response(layer.pooling[n]->profile(), w));
        };
        auto b2f = [&](double w) {
            Eigen::MatrixXcd t, b;
            matrices(w, t, b);
            return spectral_norm_sq(t);
        };
        auto b3f = [&](double w) {
            Eigen::MatrixXcd t, b;
            matrices(w, t, b);
            return spectral_norm_sq(b);
        };
        auto b1f = [&](double w) {
            Eigen::MatrixXcd t, b;
            matrices(w, t, b);
            Eigen::MatrixXcd s(n_out + n_in, n_in);
            s << t, b;
            return spectral_norm_sq(s);
        };
        out.triple.b2 = dense_supremum(b2f, -r, r, options.dense_samples, options.refine_tol);
        out.triple.b3 = dense_supremum(b3f, -r, r, options.dense_samples, options.refine_tol);
        out.triple.b1 = dense_supremum(b1f, -r, r, options.dense_samples, options.refine_tol);
        out.method = BesselMethod::frequency;
        out.grid = dense_grid_text(options.dense_samples, r);
        out.tolerance = options.refine_tol;
        return out;
    }

    const auto shapes = node_shapes(net)[m];
    bool same_shape = true;
    for (const auto& s : shapes) same_shape = same_shape && s == shapes[0];
    for (std::size_t n = 0; n < n_in; ++n)
        if (layer.pooling[n]) out.triple.b3 = std::max(out.triple.b3, max_power_dft(layer.pooling[n]->taps(), shapes[n]));

    if (!layer_strided(layer) && same_shape) {
        const Shape& grid = shapes[0];
        const std::size_t bins = element_count(grid);
        std::vector<std::vector<std::complex<double>>> resp(layer.filters.size());
        std::vector<std::vector<std::complex<double>>> pool(n_in);
        for (std::size_t k = 0; k < layer.filters.size(); ++k) resp[k] = frequency_response(layer.filters[k].filter.taps(), grid);
        for (std::size_t n = 0; n < n_in; ++n)
            if (layer.pooling[n]) pool[n] = frequency_response(layer.pooling[n]->taps(), grid);
        std::vector<double> b1(bins), b2(bins);
        parallel_for(bins, [&](std::size_t i) {
            Eigen::MatrixXcd t = Eigen::MatrixXcd::Zero(n_out, n_in);
            Eigen::MatrixXcd s = Eigen::MatrixXcd::Zero(n_out + n_in, n_in);
            for (std::size_t k = 0; k < layer.filters.size(); ++k) {
                const auto& fa = layer.filters[k];
                t(*fa.target, fa.source) += delta[*fa.target] * resp[k][i];
            }
            s.topRows(n_out) = t;
            for (std::size_t n = 0; n < n_in; ++n)
                if (!pool[n].empty()) s(n_out + n, n) = pool[n][i];
            b2[i] = spectral_norm_sq(t);
            b1[i] = spectral_norm_sq(s);
        });
        out.triple.b2 = *std::max_element(b2.begin(), b2.end());
        out.triple.b1 = *std::max_element(b1.begin(), b1.end());
        out.method = BesselMethod::frequency;
        out.grid = dft_grid_text(grid);
        out.tolerance = 0.0;
        return out;
    }

    BranchStage hidden;
    hidden.in_shapes = shapes;
    hidden.out_shapes.resize(n_out);
    for (const auto& fa : layer.filters) {
        hidden.out_shapes[*fa.target] = downsampled_shape(shapes[fa.source], fa.dilation.stride);
        hidden.branches.push_back(Branch{fa.source, *fa.target, &fa.filter.taps(), fa.dilation.stride, 1.0});
    }
    BranchStage stacked = hidden;
    for (std::size_t n = 0; n < n_in; ++n) {
        if (!layer.pooling[n]) continue;
        stacked.out_shapes.push_back(shapes[n]);
        stacked.branches.push_back(Branch{n, stacked.out_shapes.size() - 1, &layer.pooling[n]->taps(),
                                          std::vector<std::size_t>(net.rank(), 1), 1.0});
    }
    out.triple.b2 = hidden.norm(options.power).sigma_squared;
    out.triple.b1 = std::max({stacked.norm(options.power).sigma_squared, out.triple.b2, out.triple.b3});
    out.method = BesselMethod::operator_norm;
    out.grid = "operator on " + std::to_string(hidden.input_dim()) + " samples";
    out.tolerance = options.power.tol;
    return out;
}

LayerBessel bessel_layer(const NetworkSpec& net, std::size_t m, const SpectralOptions& options)
{
    require_normalized(net);
    const LayerSpec& layer = net.layers.at(m);
    if (layer.is_linear()) return bessel_no_merge_layer(net, m, options);
    LayerBessel out;
    out.nodes.resize(layer.input_count);
    const bool continuous = net.domain == SignalDomain::continuous_closed_form;
    const bool use_operator = !continuous && layer_strided(layer);
    std::vector<Shape> shapes;
    if (!continuous) shapes = node_shapes(net)[m];
    for (std::size_t n = 0; n < layer.input_count; ++n) check_node_nonempty(layer, n, m);
    parallel_for(layer.input_count, [&](std::size_t n) {
        out.nodes[n] = continuous ? continuous_merge_node(layer, n, options)
                                  : discrete_merge_node(layer, n, shapes[n], use_operator, options);
    });
    for (const auto& t : out.nodes) {
        out.triple.b1 = std::max(out.triple.b1, t.b1);
        out.triple.b2 = std::max(out.triple.b2, t.b2);
        out.triple.b3 = std::max(out.triple.b3, t.b3);
    }
    if (continuous) {
        out.method = BesselMethod::frequency;
        out.grid = dense_grid_text(options.dense_samples, band_radius(layer));
        out.tolerance = options.refine_tol;
    } else if (use_operator) {
        out.method = BesselMethod::operator_norm;
        out.grid = "operator per node";
        out.tolerance = options.power.tol;
    } else {
        out.method = BesselMethod::frequency;
        std::string g;
        for (const auto& s : shapes) {
            const std::string t = dft_grid_text(s);
            if (g.find(t) == std::string::npos) g += (g.empty() ? "" : ", ") + t;
        }
        out.grid = g;
        out.tolerance = 0.0;
    }
    return out;
}

std::vector<LayerBessel> bessel_network(const NetworkSpec& net, const SpectralOptions& options)
{
    const NetworkSpec normalized = normalize_skip_connections(net);
    std::vector<LayerBessel> out;
    out.reserve(normalized.layers.size());
    for (std::size_t m = 0; m < normalized.layers.size(); ++m) out.push_back(bessel_layer(normalized, m, options));
    return out;
}

std::vector<BesselTriple> triples_of(const std::vector<LayerBessel>& layers)
{
    std::vector<BesselTriple> t;
    for (const auto& l : layers) t.push_back(l.triple);
    return t;
}

PowerResult bessel_discrete_operator(const NetworkSpec& net, std::size_t m, const PowerOptions& options)
{
    require_normalized(net);
    if (net.domain != SignalDomain::discrete_periodic) throw ValidationError("operator norms need a discrete network");
    const LayerSpec& layer = net.layers.at(m);
    const auto shapes = node_shapes(net)[m];
    BranchStage stage;
    stage.in_shapes = shapes;
    if (layer.is_linear()) {
        stage.out_shapes.resize(layer.output_count());
        for (const auto& fa : layer.filters) {
            stage.out_shapes[*fa.target] = downsampled_shape(shapes[fa.source], fa.dilation.stride);
            stage.branches.push_back(Branch{fa.source, *fa.target, &fa.filter.taps(), fa.dilation.stride, 1.0});
        }
    } else {
        const auto l = filter_multipliers(layer);
        for (std::size_t k = 0; k < layer.filters.size(); ++k) {
            const auto& fa = layer.filters[k];
            stage.out_shapes.push_back(downsampled_shape(shapes[fa.source], fa.dilation.stride));
            stage.branches.push_back(
                Branch{fa.source, stage.out_shapes.size() - 1, &fa.filter.taps(), fa.dilation.stride, std::sqrt(l[k])});
        }
    }
    return stage.norm(options);
}

}  // namespace lipcert
