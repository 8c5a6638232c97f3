#include "lipcert/cli.hpp"

#include "lipcert/bounds.hpp"
#include "lipcert/classifier.hpp"
#include "lipcert/discriminant.hpp"
#include "lipcert/error.hpp"
#include "lipcert/forward.hpp"
#include "lipcert/local.hpp"
#include "lipcert/netspec.hpp"
#include "lipcert/parallel.hpp"
#include "lipcert/rng.hpp"
#include "lipcert/sidecar.hpp"
#include "lipcert/spectral.hpp"
#include "lipcert/stochastic.hpp"
#include "lipcert/toy.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

namespace lipcert {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct RunConfig {
    std::string command;
    std::string spec;
    std::uint64_t seed = kDefaultSeed;
    double power_tol = 1e-12;
    int max_iterations = 10000;
    std::size_t grid_samples = std::size_t{1} << 14;
    std::string output;

    // command-specific
    bool corollaries_only = false;
    std::string signal;
    std::string out_dir;
    std::string samples_dir;
    std::string histogram;
    std::size_t bins = 20;
    std::string classifier;
    double h_max = 10.0;
    std::size_t directions = 200;
    std::string csv;
    std::string spectrum;
    std::size_t n = 1000;
    std::size_t n_test = 0;
    std::vector<long> shifts{1, 2, 3};
    std::string class1;
    std::string class2;
    std::string nets_dir;

    SpectralOptions spectral() const
    {
        SpectralOptions o;
        o.dense_samples = grid_samples;
        o.power = power();
        return o;
    }
    PowerOptions power() const
    {
        PowerOptions p;
        p.tol = power_tol;
        p.max_iterations = max_iterations;
        p.seed = seed;
        return p;
    }
};

json config_json(const RunConfig& c)
{
    json j{{"command", c.command},
           {"seed", c.seed},
           {"tolerances", {{"power_iteration", c.power_tol}, {"max_iterations", c.max_iterations},
                           {"lp_feasibility", 1e-10}, {"lp_optimality", 1e-9}}},
           {"dense_grid_samples", c.grid_samples},
           {"threads", worker_count()}};
    if (!c.spec.empty()) j["spec"] = c.spec;
    if (!c.output.empty()) j["output"] = c.output;
    if (c.command == "bound") j["corollaries_only"] = c.corollaries_only;
    if (c.command == "forward") {
        j["signal"] = c.signal;
        if (!c.out_dir.empty()) j["out_dir"] = c.out_dir;
    }
    if (c.command == "local" || c.command == "adversarial") j["samples"] = c.samples_dir;
    if (c.command == "local") {
        j["bins"] = c.bins;
        if (!c.histogram.empty()) j["histogram"] = c.histogram;
    }
    if (c.command == "adversarial") {
        j["classifier"] = c.classifier;
        j["h_max"] = c.h_max;
        j["directions"] = c.directions;
    }
    if (c.command == "stationary") {
        j["spectrum"] = c.spectrum;
        j["n"] = c.n;
        j["shifts"] = c.shifts;
    }
    if (c.command == "discriminant") {
        j["class1"] = c.class1;
        j["class2"] = c.class2;
        j["n"] = c.n;
        j["n_test"] = c.n_test;
        if (!c.nets_dir.empty()) j["nets"] = c.nets_dir;
    }
    if (!c.csv.empty()) j["csv"] = c.csv;
    return j;
}

std::string timestamp()
{
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

json envelope(const RunConfig& c)
{
    return json{{"schema_version", kSchemaVersion}, {"config", config_json(c)}, {"timestamp", timestamp()}};
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(); }

json triple_json(const BesselTriple& t) { return json{{"b1", t.b1}, {"b2", t.b2}, {"b3", t.b3}}; }

json layers_json(const std::vector<LayerBessel>& layers, bool with_nodes)
{
    json arr = json::array();
    for (std::size_t m = 0; m < layers.size(); ++m) {
        const auto& l = layers[m];
        json j{{"layer", m + 1},         {"b1", l.triple.b1},   {"b2", l.triple.b2},        {"b3", l.triple.b3},
               {"method", to_string(l.method)}, {"grid", l.grid}, {"tolerance", l.tolerance}};
        if (with_nodes && !l.nodes.empty()) {
            j["nodes"] = json::array();
            for (const auto& t : l.nodes) j["nodes"].push_back(triple_json(t));
        }
        arr.push_back(std::move(j));
    }
    return arr;
}

json lipschitz_json(const LipschitzReport& r)
{
    json j{{"corollary_product", r.corollary_product}, {"corollary_sumprod", r.corollary_sumprod}};
    if (r.lp_solved) {
        j["lp_bound"] = r.lp_bound;
        j["lipschitz_constant"] = r.lipschitz_constant;
        j["optimal_y"] = r.optimal_y;
        j["optimal_z"] = r.optimal_z;
        j["diagnostics"] = {{"solver", "revised simplex, Bland's rule, Harris ratio test"},
                            {"pivots", r.diagnostics.pivots},
                            {"feasibility_tol", r.diagnostics.feasibility_tol},
                            {"optimality_tol", r.diagnostics.optimality_tol},
                            {"max_violation", r.diagnostics.max_violation},
                            {"dual_value", r.diagnostics.dual_value},
                            {"duality_gap", r.diagnostics.duality_gap},
                            {"feasible", r.diagnostics.feasible}};
    }
    return j;
}

void emit(const json& report, const RunConfig& c, std::ostream& out)
{
    const std::string text = report.dump(2) + "\n";
    if (c.output.empty()) {
        out << text;
        return;
    }
    std::ofstream f(c.output);
    if (!f) throw Error("cannot write report to " + c.output);
    f << text;
}

std::ofstream open_csv(const std::string& path)
{
    std::ofstream f(path);
    if (!f) throw Error("cannot write CSV to " + path);
    f << std::setprecision(17);
    return f;
}

std::string read_text(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw Error("cannot open " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<fs::path> sorted_files(const std::string& dir, const std::string& extension = "")
{
    if (!fs::is_directory(dir)) throw Error("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && (extension.empty() || e.path().extension() == extension)) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    return files;
}

SignalBatch read_samples(const std::string& dir, const Shape& shape)
{
    SignalBatch batch;
    for (const auto& p : sorted_files(dir)) {
        Signal s = read_sidecar(p);
        if (s.shape != shape)
            throw ShapeError("sample " + p.filename().string() + " has shape " + shape_to_string(s.shape) +
                             ", network expects " + shape_to_string(shape));
        batch.push_back(std::move(s));
    }
    if (batch.empty()) throw Error("no samples found in " + dir);
    return batch;
}

LinearClassifier read_classifier(const std::string& path)
{
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed classifier JSON: ") + e.what(), e.byte);
    }
    LinearClassifier c;
    if (!doc.contains("weights") || !doc.at("weights").is_array())
        throw ParseError("classifier needs a 'weights' matrix", 0);
    try {
        c.weights = doc.at("weights").get<std::vector<std::vector<double>>>();
        if (doc.contains("bias")) c.bias = doc.at("bias").get<std::vector<double>>();
    } catch (const json::exception& e) {
        throw ParseError(std::string("classifier: ") + e.what(), 0);
    }
    return c;
}

ClassModel read_class_model(const std::string& path, std::size_t rank)
{
    const fs::path base = fs::path(path).parent_path();
    json doc;
    try {
        doc = json::parse(read_text(path));
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed class model JSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || !doc.contains("mean") || !doc.contains("coloring"))
        throw ParseError("class model needs 'mean' and 'coloring'", 0);
    ClassModel c;
    c.label = doc.value("label", fs::path(path).stem().string());
    const json& mean = doc.at("mean");
    if (mean.is_object() && mean.contains("file")) c.mean = read_sidecar(base / mean.at("file").get<std::string>());
    else c.mean = parse_signal_json(mean.dump());
    c.coloring = parse_filter_json(doc.at("coloring").dump(), rank, base);
    validate(c);
    return c;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

void cmd_bound(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const auto layers = bessel_network(net, c.spectral());
    json r = envelope(c);
    r["layers"] = layers_json(layers, false);
    r.update(lipschitz_json(lipschitz_report(triples_of(layers), c.corollaries_only)));
    emit(r, c, out);
}

void cmd_bessel(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    json r = envelope(c);
    r["skip_connections_normalized"] = has_skip_connections(net);
    r["layers"] = layers_json(bessel_network(net, c.spectral()), true);
    emit(r, c, out);
}

void cmd_forward(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const Signal f = read_sidecar(c.signal);
    const FeatureBundle b = forward(net, f);
    json r = envelope(c);
    r["input_norm"] = std::sqrt(squared_norm(f.values));
    r["feature_norm"] = b.norm();
    r["features"] = json::array();
    if (!c.out_dir.empty()) fs::create_directories(c.out_dir);
    for (std::size_t i = 0; i < b.keys.size(); ++i) {
        json j{{"layer", b.keys[i].layer + 1},
               {"node", b.keys[i].node},
               {"shape", b.signals[i].shape},
               {"norm", std::sqrt(squared_norm(b.signals[i].values))}};
        if (!c.out_dir.empty()) {
            const std::string name =
                "feature_" + std::to_string(b.keys[i].layer + 1) + "_" + std::to_string(b.keys[i].node) + ".lipc";
            write_sidecar(fs::path(c.out_dir) / name, b.signals[i]);
            j["file"] = name;
        } else {
            j["values"] = b.signals[i].values;
        }
        r["features"].push_back(std::move(j));
    }
    emit(r, c, out);
}

void cmd_local(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const auto files = sorted_files(c.samples_dir);
    const SignalBatch batch = read_samples(c.samples_dir, net.input_shape);
    const GlobalFromLocal g = global_from_local(net, batch, c.power());
    const double L = network_lipschitz_bound(net, c.spectral());
    json r = envelope(c);
    r["max_sigma"] = g.estimate;
    r["certified_lipschitz_constant"] = std::sqrt(L);
    r["samples"] = json::array();
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
        const auto& s = g.samples[i];
        r["samples"].push_back({{"file", files[i].filename().string()},
                                {"sigma_max", s.sigma_max},
                                {"iterations", s.iterations},
                                {"residual", s.residual},
                                {"tolerance", s.tolerance},
                                {"warnings", s.warnings}});
    }
    if (!c.histogram.empty()) {
        auto f = open_csv(c.histogram);
        f << "bin_low,bin_high,count\n";
        double lo = g.samples.front().sigma_max, hi = lo;
        for (const auto& s : g.samples) {
            lo = std::min(lo, s.sigma_max);
            hi = std::max(hi, s.sigma_max);
        }
        const std::size_t bins = std::max<std::size_t>(1, c.bins);
        const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
        std::vector<std::size_t> counts(bins, 0);
        for (const auto& s : g.samples)
            counts[std::min(bins - 1, static_cast<std::size_t>((s.sigma_max - lo) / width))]++;
        for (std::size_t b = 0; b < bins; ++b)
            f << lo + width * static_cast<double>(b) << "," << lo + width * static_cast<double>(b + 1) << "," << counts[b]
              << "\n";
    }
    emit(r, c, out);
}

void cmd_adversarial(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const auto files = sorted_files(c.samples_dir);
    const SignalBatch batch = read_samples(c.samples_dir, net.input_shape);
    const FeatureClassifier head = classifier_head(read_classifier(c.classifier));
    json r = envelope(c);
    r["samples"] = json::array();
    std::size_t wins = 0;
    std::vector<AdversarialComparison> comps;
    for (std::size_t i = 0; i < batch.size(); ++i) {
        comps.push_back(adversarial_comparison(net, head, batch[i], c.h_max, c.directions, splitmix64(c.seed + i), c.power()));
        const auto& a = comps.back();
        wins += a.principal_not_worse;
        r["samples"].push_back({{"file", files[i].filename().string()},
                                {"sigma_max", a.sigma_max},
                                {"principal_h", finite_or_null(a.principal_h)},
                                {"random_median_h", finite_or_null(a.random_median)},
                                {"principal_not_worse", a.principal_not_worse}});
    }
    r["principal_not_worse_fraction"] = static_cast<double>(wins) / static_cast<double>(batch.size());
    r["search_tolerance"] = 1e-3 * c.h_max;
    if (!c.csv.empty()) {
        auto f = open_csv(c.csv);
        f << "sample,direction,h\n";
        for (std::size_t i = 0; i < comps.size(); ++i) {
            auto h = [](double v) { return std::isfinite(v) ? std::to_string(v) : std::string("inf"); };
            f << files[i].filename().string() << ",principal," << h(comps[i].principal_h) << "\n";
            for (std::size_t k = 0; k < comps[i].random_h.size(); ++k)
                f << files[i].filename().string() << ",random_" << k << "," << h(comps[i].random_h[k]) << "\n";
        }
    }
    emit(r, c, out);
}

void cmd_stationary(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const Signal spec = read_sidecar(c.spectrum);
    if (spec.shape != net.input_shape)
        throw ShapeError("spectrum shape " + shape_to_string(spec.shape) + " does not match the input shape " +
                         shape_to_string(net.input_shape));
    const ProcessConfig x{spec.shape, spec.values, c.seed};
    const ProcessConfig y{spec.shape, spec.values, splitmix64(c.seed + 1)};
    const double L = network_lipschitz_bound(net, c.spectral());
    const MonteCarloResult mc = verify_theorem2(net, x, y, c.n, L);
    const StationarityReport st = test_stationarity(net, x, c.n, c.shifts);

    std::vector<double> t_grid;
    ConcentrationReport conc;
    const bool run_conc = c.n >= 100;
    if (run_conc) {
        // Shell tails are reported on a grid scaled by the empirical median radius.
        const ConcentrationReport probe = concentration_profile(net, x, c.n, {0.0}, L);
        for (int k = 0; k <= 20; ++k) t_grid.push_back(0.1 * k * probe.median);
        conc = concentration_profile(net, x, c.n, t_grid, L);
    }

    json r = envelope(c);
    r["theorem2"] = {{"estimate", mc.estimate},
                     {"bound_value", mc.bound_value},
                     {"standard_error", mc.standard_error},
                     {"lipschitz_bound", mc.lipschitz_bound},
                     {"input_second_moment", mc.input_second_moment},
                     {"sample_count", mc.sample_count},
                     {"satisfied", mc.satisfied}};
    json tests = json::array();
    for (const auto& t : st.tests)
        tests.push_back({{"feature", t.feature}, {"shift", t.shift}, {"mean_z", finite_or_null(t.mean_z)},
                         {"second_moment_z", finite_or_null(t.second_z)}, {"flagged", t.flagged}});
    r["stationarity"] = {{"threshold_sigma", st.threshold}, {"any_flagged", st.any_flagged}, {"tests", tests}};
    if (run_conc) {
        json rows = json::array();
        for (const auto& row : conc.rows)
            rows.push_back({{"t", row.t}, {"fraction", row.fraction}, {"fraction_se", row.fraction_se},
                            {"bound", row.bound}, {"satisfied", row.satisfied}});
        r["concentration"] = {{"median", conc.median},         {"median_se", conc.median_se},
                              {"sigma_squared", conc.sigma_squared}, {"lipschitz_bound", conc.lipschitz_bound},
                              {"all_satisfied", conc.all_satisfied}, {"rows", rows}};
        if (!c.csv.empty()) {
            auto f = open_csv(c.csv);
            f << "t,fraction,fraction_se,bound\n";
            for (const auto& row : conc.rows)
                f << row.t << "," << row.fraction << "," << row.fraction_se << "," << row.bound << "\n";
        }
    } else {
        r["concentration"] = {{"skipped", "n < 100"}};
    }
    emit(r, c, out);
}

void cmd_discriminant(const RunConfig& c, std::ostream& out)
{
    const NetworkSpec net = load_spec(c.spec);
    const ClassModel a = read_class_model(c.class1, net.rank());
    const ClassModel b = read_class_model(c.class2, net.rank());
    json r = envelope(c);
    if (c.nets_dir.empty()) {
        const DiscriminantReport d = discriminant(net, a, b, c.n, c.seed, c.spectral());
        r["s"] = d.s;
        r["s_lip"] = d.s_lip;
        r["numerator"] = d.numerator;
        r["nuclear_norms"] = {d.nuclear1, d.nuclear2};
        r["class_lipschitz_bounds"] = {d.lipschitz1, d.lipschitz2};
        r["feature_dim"] = d.feature_dim;
        r["samples_per_class"] = d.samples_per_class;
        r["shrinkage"] = d.shrinkage;
        r["labels"] = {a.label, b.label};
        emit(r, c, out);
        return;
    }
    std::vector<NetworkSpec> nets;
    std::vector<std::string> names;
    for (const auto& p : sorted_files(c.nets_dir, ".json")) {
        nets.push_back(load_spec(p));
        names.push_back(p.filename().string());
    }
    const std::size_t n_test = c.n_test ? c.n_test : c.n;
    const DiscriminantTable t = error_vs_discriminant(nets, a, b, c.n, n_test, c.seed, c.spectral());
    json rows = json::array();
    for (const auto& row : t.rows)
        rows.push_back({{"net", names[row.net]}, {"s", row.s}, {"s_lip", row.s_lip}, {"error", row.error},
                        {"excluded", row.excluded}, {"reason", row.reason}});
    r["rows"] = rows;
    r["spearman_s_error"] = finite_or_null(t.spearman_s);
    r["spearman_s_lip_error"] = finite_or_null(t.spearman_s_lip);
    r["warnings"] = t.warnings;
    if (!c.csv.empty()) {
        auto f = open_csv(c.csv);
        f << "net,s,s_lip,error\n";
        for (const auto& row : t.rows)
            if (!row.excluded) f << names[row.net] << "," << row.s << "," << row.s_lip << "," << row.error << "\n";
    }
    emit(r, c, out);
}

void cmd_toy(const RunConfig& c, std::ostream& out)
{
    const ToyExample ex = run_toy_example(c.spectral());
    json r = envelope(c);
    r["layers"] = layers_json(ex.layers, true);
    r.update(lipschitz_json(ex.report));
    r["published"] = {{"lp_bound", ex.published_lp},
                      {"corollary_product", ex.published_product},
                      {"corollary_sumprod", ex.published_sumprod}};
    r["notes"] = ex.notes;
    emit(r, c, out);
}

void add_common(CLI::App* sub, RunConfig& c)
{
    sub->add_option("--seed", c.seed, "Random seed")->capture_default_str();
    sub->add_option("--power-tol", c.power_tol, "Relative tolerance of power iteration")->capture_default_str();
    sub->add_option("--max-iterations", c.max_iterations, "Power iteration cap per attempt")->capture_default_str();
    sub->add_option("--grid-samples", c.grid_samples, "Dense grid size for closed-form profiles")->capture_default_str();
    sub->add_option("-o,--output", c.output, "Write the JSON report to this file instead of stdout");
}

void write_error(std::ostream& err, const std::string& type, const std::string& message)
{
    json j{{"error", {{"type", type}, {"message", message}}}};
    err << j.dump() << "\n";
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    RunConfig c;
    CLI::App app{"Lipschitz certificates for feed-forward convolutional networks", "lipcert"};
    app.require_subcommand(1);

    auto* bound = app.add_subcommand("bound", "Bessel bounds per layer, the LP bound and both corollary bounds");
    bound->add_option("spec", c.spec, "Network spec file")->required();
    bound->add_flag("--corollaries-only", c.corollaries_only, "Skip the LP");
    add_common(bound, c);

    auto* bessel = app.add_subcommand("bessel", "Per-layer and per-node Bessel bounds");
    bessel->add_option("spec", c.spec, "Network spec file")->required();
    add_common(bessel, c);

    auto* fwd = app.add_subcommand("forward", "Evaluate the feature map on a signal");
    fwd->add_option("spec", c.spec, "Network spec file")->required();
    fwd->add_option("signal", c.signal, "Input signal (binary array file)")->required();
    fwd->add_option("--out-dir", c.out_dir, "Write each feature output as a binary array file here");
    add_common(fwd, c);

    auto* local = app.add_subcommand("local", "Local Lipschitz constants of sample inputs");
    local->add_option("spec", c.spec, "Network spec file")->required();
    local->add_option("--samples", c.samples_dir, "Directory of input signals")->required();
    local->add_option("--histogram", c.histogram, "Write a histogram of sigma_max as CSV");
    local->add_option("--bins", c.bins, "Histogram bins")->capture_default_str();
    add_common(local, c);

    auto* adv = app.add_subcommand("adversarial", "Fooling magnitudes along principal and random directions");
    adv->add_option("spec", c.spec, "Network spec file")->required();
    adv->add_option("--classifier", c.classifier, "Linear classifier weights (JSON)")->required();
    adv->add_option("--samples", c.samples_dir, "Directory of input signals")->required();
    adv->add_option("--h-max", c.h_max, "Largest perturbation magnitude searched")->capture_default_str();
    adv->add_option("--directions", c.directions, "Number of random directions")->capture_default_str();
    adv->add_option("--csv", c.csv, "Write all fooling magnitudes as CSV");
    add_common(adv, c);

    auto* stat = app.add_subcommand("stationary", "Monte-Carlo checks with stationary Gaussian inputs");
    stat->add_option("spec", c.spec, "Network spec file")->required();
    stat->add_option("--spectrum", c.spectrum, "Power spectrum over the DFT bins (binary array file)")->required();
    stat->add_option("--n", c.n, "Number of samples")->capture_default_str();
    stat->add_option("--shifts", c.shifts, "Shifts used by the stationarity test")->capture_default_str();
    stat->add_option("--csv", c.csv, "Write the concentration table as CSV");
    add_common(stat, c);

    auto* disc = app.add_subcommand("discriminant", "Discriminant and Lipschitz discriminant of two classes");
    disc->add_option("spec", c.spec, "Network spec file")->required();
    disc->add_option("--class1", c.class1, "First class model (JSON)")->required();
    disc->add_option("--class2", c.class2, "Second class model (JSON)")->required();
    disc->add_option("--n", c.n, "Training samples per class")->capture_default_str();
    disc->add_option("--n-test", c.n_test, "Test samples per class in batch mode (default: --n)");
    disc->add_option("--nets", c.nets_dir, "Directory of spec files: error versus discriminant table");
    disc->add_option("--csv", c.csv, "Write the batch table as CSV");
    add_common(disc, c);

    auto* toy = app.add_subcommand("toy-example", "Bounds of the built-in four-layer example network");
    add_common(toy, c);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? 0 : 2;
    }

    try {
        if (bound->parsed()) c.command = "bound", cmd_bound(c, out);
        else if (bessel->parsed()) c.command = "bessel", cmd_bessel(c, out);
        else if (fwd->parsed()) c.command = "forward", cmd_forward(c, out);
        else if (local->parsed()) c.command = "local", cmd_local(c, out);
        else if (adv->parsed()) c.command = "adversarial", cmd_adversarial(c, out);
        else if (stat->parsed()) c.command = "stationary", cmd_stationary(c, out);
        else if (disc->parsed()) c.command = "discriminant", cmd_discriminant(c, out);
        else if (toy->parsed()) c.command = "toy-example", cmd_toy(c, out);
    } catch (const ParseError& e) {
        write_error(err, "parse_error", e.what());
        return 1;
    } catch (const ValidationError& e) {
        write_error(err, "validation_error", e.what());
        return 1;
    } catch (const ShapeError& e) {
        write_error(err, "shape_error", e.what());
        return 1;
    } catch (const ConvergenceError& e) {
        write_error(err, "convergence_error", e.what());
        return 1;
    } catch (const std::exception& e) {
        write_error(err, "error", e.what());
        return 1;
    }
    return 0;
}

int run(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace lipcert
