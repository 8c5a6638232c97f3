#include "lipcert/discriminant.hpp"

#include "lipcert/bounds.hpp"
#include "lipcert/classifier.hpp"
#include "lipcert/error.hpp"
#include "lipcert/parallel.hpp"
#include "lipcert/rng.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lipcert {

void validate(const ClassModel& c)
{
    if (c.mean.shape.empty()) throw ValidationError("class mean has no shape");
    if (!c.coloring.is_taps()) throw ValidationError("coloring filter must be a tap filter");
    if (c.coloring.taps().taps.shape.size() != c.mean.shape.size())
        throw ShapeError("coloring filter rank does not match the class mean");
    for (double v : c.coloring.taps().taps.values)
        if (!std::isfinite(v)) throw ValidationError("coloring filter taps must be finite");
}

SignalBatch sample_class(const ClassModel& c, std::size_t n, std::uint64_t seed)
{
    validate(c);
    const Rng root(seed);
    SignalBatch out(n);
    parallel_for(n, [&](std::size_t i) {
        Rng rng = root.split(i);
        Signal nu(c.mean.shape, rng.normal_vector(c.mean.size()));
        Signal x = circular_convolve(nu, c.coloring.taps().taps, c.coloring.taps().origin);
        for (std::size_t t = 0; t < x.size(); ++t) x.values[t] += c.mean.values[t];
        out[i] = std::move(x);
    });
    return out;
}

NetworkSpec prepend_coloring(const NetworkSpec& net, const Filter& coloring)
{
    NetworkSpec out = net;
    LayerSpec first;
    first.input_count = 1;
    first.pooling = {std::nullopt};
    first.feature_taps = {false};
    FilterAttachment fa;
    fa.filter = coloring;
    fa.source = 0;
    fa.dilation = Dilation::none(net.rank());
    fa.sigma = Nonlinearity::identity();
    first.filters = {fa};
    first.merges = {MergeSpec{MergeKind::sum, 2.0, {0}}};
    out.layers.insert(out.layers.begin(), std::move(first));
    for (std::size_t m = 1; m < out.layers.size(); ++m)
        for (auto& f : out.layers[m].filters)
            if (f.source_layer) *f.source_layer += 1;
    validate(out);
    return out;
}

std::vector<std::vector<double>> sample_covariance(const std::vector<std::vector<double>>& rows)
{
    if (rows.size() < 2) throw ValidationError("covariance needs at least two samples");
    const std::size_t D = rows[0].size();
    const double n = static_cast<double>(rows.size());
    Eigen::MatrixXd X(rows.size(), D);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != D) throw ShapeError("covariance rows have different lengths");
        for (std::size_t j = 0; j < D; ++j) X(i, j) = rows[i][j];
    }
    const Eigen::RowVectorXd mu = X.colwise().mean();
    X.rowwise() -= mu;
    const Eigen::MatrixXd C = (X.transpose() * X) / (n - 1.0);
    std::vector<std::vector<double>> out(D, std::vector<double>(D));
    for (std::size_t i = 0; i < D; ++i)
        for (std::size_t j = 0; j < D; ++j) out[i][j] = C(i, j);
    return out;
}

double nuclear_norm(const std::vector<std::vector<double>>& matrix)
{
    if (matrix.empty()) return 0.0;
    Eigen::MatrixXd A(matrix.size(), matrix[0].size());
    for (std::size_t i = 0; i < matrix.size(); ++i)
        for (std::size_t j = 0; j < matrix[i].size(); ++j) A(i, j) = matrix[i][j];
    Eigen::BDCSVD<Eigen::MatrixXd> svd(A);
    if (svd.info() != Eigen::Success) throw Error("covariance SVD failed");
    return svd.singularValues().sum();
}

namespace {

struct ClassFeatures {
    std::vector<std::vector<double>> rows;
    std::vector<double> mean;
};

ClassFeatures features_of(const NetworkSpec& net, const ClassModel& c, std::size_t n, std::uint64_t seed)
{
    const auto feats = forward_batch(net, sample_class(c, n, seed));
    ClassFeatures out;
    out.rows.resize(n);
    for (std::size_t i = 0; i < n; ++i) out.rows[i] = feats[i].flatten();
    const std::size_t D = out.rows.empty() ? 0 : out.rows[0].size();
    out.mean.assign(D, 0.0);
    for (const auto& r : out.rows)
        for (std::size_t j = 0; j < D; ++j) out.mean[j] += r[j];
    for (double& v : out.mean) v /= static_cast<double>(n);
    return out;
}

double nuclear_with_shrinkage(const std::vector<std::vector<double>>& rows, bool& shrunk)
{
    auto C = sample_covariance(rows);
    const std::size_t D = C.size();
    if (rows.size() < D) {
        double tr = 0.0;
        for (std::size_t i = 0; i < D; ++i) tr += C[i][i];
        const double lambda = 1e-6 * tr / static_cast<double>(D);
        for (std::size_t i = 0; i < D; ++i) C[i][i] += lambda;
        shrunk = true;
    }
    return nuclear_norm(C);
}

// Noise streams are keyed by the class label, so swapping the two classes swaps their
// samples and classes with equal labels draw identical noise.
std::uint64_t label_hash(const std::string& label)
{
    std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

std::uint64_t class_seed(std::uint64_t seed, const ClassModel& c) { return splitmix64(seed ^ label_hash(c.label)); }

}  // namespace

DiscriminantReport discriminant(const NetworkSpec& net, const ClassModel& class1, const ClassModel& class2,
                                std::size_t n, std::uint64_t seed, const SpectralOptions& options)
{
    if (n < 2) throw ValidationError("discriminant needs at least two samples per class");
    if (class1.mean.shape != net.input_shape || class2.mean.shape != net.input_shape)
        throw ShapeError("class means do not match the network input shape");
    const ClassFeatures f1 = features_of(net, class1, n, class_seed(seed, class1));
    const ClassFeatures f2 = features_of(net, class2, n, class_seed(seed, class2));
    DiscriminantReport rep;
    rep.feature_dim = f1.mean.size();
    rep.samples_per_class = n;
    rep.feature_mean1 = f1.mean;
    rep.feature_mean2 = f2.mean;
    rep.numerator = squared_distance(f1.mean, f2.mean);
    rep.nuclear1 = nuclear_with_shrinkage(f1.rows, rep.shrinkage);
    rep.nuclear2 = nuclear_with_shrinkage(f2.rows, rep.shrinkage);
    const double den = rep.nuclear1 + rep.nuclear2;
    if (!(den > 0.0)) throw Error("degenerate classes: feature covariances vanish (zero denominator)");
    rep.s = rep.numerator / den;
    rep.lipschitz1 = network_lipschitz_bound(prepend_coloring(net, class1.coloring), options);
    rep.lipschitz2 = network_lipschitz_bound(prepend_coloring(net, class2.coloring), options);
    const double lden = rep.lipschitz1 + rep.lipschitz2;
    if (!(lden > 0.0)) throw Error("degenerate classes: both class Lipschitz bounds vanish");
    rep.s_lip = rep.numerator / lden;
    return rep;
}

std::optional<double> spearman(const std::vector<double>& a, const std::vector<double>& b)
{
    if (a.size() != b.size()) throw ShapeError("spearman needs equal-length samples");
    if (a.size() < 2) return std::nullopt;
    auto ranks = [](const std::vector<double>& v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), 0);
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
        std::vector<double> r(v.size());
        for (std::size_t i = 0; i < idx.size();) {
            std::size_t j = i;
            while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
            const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
            i = j + 1;
        }
        return r;
    };
    const auto ra = ranks(a), rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < ra.size(); ++i) {
        sab += (ra[i] - ma) * (rb[i] - mb);
        saa += (ra[i] - ma) * (ra[i] - ma);
        sbb += (rb[i] - mb) * (rb[i] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

DiscriminantTable error_vs_discriminant(const std::vector<NetworkSpec>& nets, const ClassModel& class1,
                                        const ClassModel& class2, std::size_t n_train, std::size_t n_test,
                                        std::uint64_t seed, const SpectralOptions& options)
{
    if (nets.size() < 2) throw ValidationError("error_vs_discriminant needs at least two networks");
    if (n_test == 0) throw ValidationError("n_test must be positive");
    DiscriminantTable table;
    table.rows.resize(nets.size());
    // Test inputs are shared by every net so the errors are comparable.
    const std::uint64_t test_seed = splitmix64(seed + 0x7e57);
    const SignalBatch t1 = sample_class(class1, n_test, class_seed(test_seed, class1));
    const SignalBatch t2 = sample_class(class2, n_test, class_seed(test_seed, class2));
    for (std::size_t i = 0; i < nets.size(); ++i) {
        DiscriminantRow& row = table.rows[i];
        row.net = i;
        try {
            const DiscriminantReport rep = discriminant(nets[i], class1, class2, n_train, seed, options);
            row.s = rep.s;
            row.s_lip = rep.s_lip;
            const LinearClassifier head = LinearClassifier::nearest_mean({rep.feature_mean1, rep.feature_mean2});
            std::vector<int> wrong(2 * n_test, 0);
            parallel_for(2 * n_test, [&](std::size_t j) {
                const bool first = j < n_test;
                const Signal& x = first ? t1[j] : t2[j - n_test];
                wrong[j] = head.predict(forward(nets[i], x).flatten()) != (first ? 0u : 1u);
            });
            row.error = static_cast<double>(std::accumulate(wrong.begin(), wrong.end(), 0)) /
                        static_cast<double>(2 * n_test);
        } catch (const Error& e) {
            row.excluded = true;
            row.reason = e.what();
            table.warnings.push_back("net " + std::to_string(i) + " excluded: " + e.what());
        }
    }
    std::vector<double> s, sl, err;
    for (const auto& r : table.rows)
        if (!r.excluded) {
            s.push_back(r.s);
            sl.push_back(r.s_lip);
            err.push_back(r.error);
        }
    table.spearman_s = spearman(s, err).value_or(std::numeric_limits<double>::quiet_NaN());
    table.spearman_s_lip = spearman(sl, err).value_or(std::numeric_limits<double>::quiet_NaN());
    return table;
}

}  // namespace lipcert
