#include "lipcert/cli.hpp"
#include "lipcert/sidecar.hpp"

#include "random_net.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using json = nlohmann::json;
namespace fs = std::filesystem;
using namespace lipcert;

namespace {

const fs::path data_dir = LIPCERT_TEST_DATA;

struct Outcome {
    int code = 0;
    std::string out;
    std::string err;
};

Outcome cli(std::vector<std::string> args)
{
    args.insert(args.begin(), "lipcert");
    std::ostringstream out, err;
    Outcome o;
    o.code = run(args, out, err);
    o.out = out.str();
    o.err = err.str();
    return o;
}

json report(const std::vector<std::string>& args)
{
    const Outcome o = cli(args);
    REQUIRE(o.code == 0);
    return json::parse(o.out);
}

// Scratch directory unique to this test binary.
fs::path scratch(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("lipcert_cli_test_" + std::to_string(::getpid())) / name;
    fs::create_directories(p);
    return p;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("toy-example prints the closed-form bounds")
{
    const json r = report({"toy-example"});
    CHECK(r["schema_version"] == kSchemaVersion);
    CHECK(r["config"]["seed"] == kDefaultSeed);
    CHECK(r["config"]["command"] == "toy-example");
    CHECK(r.contains("timestamp"));
    REQUIRE(r["layers"].size() == 4);
    const double e13 = 2.0 * std::exp(-1.0 / 3.0);
    const double b1[] = {e13, e13, 2.0, 1.0};
    const double b2[] = {1.0, 1.0, 2.0, 0.0};
    for (std::size_t m = 0; m < 4; ++m) {
        CHECK(std::abs(r["layers"][m]["b1"].get<double>() - b1[m]) <= 1e-2);
        CHECK(std::abs(r["layers"][m]["b2"].get<double>() - b2[m]) <= 1e-2);
        CHECK(std::abs(r["layers"][m]["b3"].get<double>() - 1.0) <= 1e-2);
        CHECK(r["layers"][m].contains("grid"));
        CHECK(r["layers"][m].contains("tolerance"));
    }
    CHECK(std::abs(r["lp_bound"].get<double>() - 2.866) <= 5e-3);
    CHECK(r["corollary_sumprod"].get<double>() == 5.0);
    CHECK(std::abs(r["corollary_product"].get<double>() - 8.0 * std::exp(-2.0 / 3.0)) <= 1e-3);
    CHECK(r["diagnostics"]["feasible"] == true);
}

TEST_CASE("bound on spec files")
{
    const json s = report({"bound", (data_dir / "scattering.json").string()});
    CHECK(std::abs(s["lp_bound"].get<double>() - 1.0) <= 1e-9);
    CHECK(s["layers"].size() == 3);
    const json id = report({"bound", (data_dir / "identity.json").string()});
    CHECK(std::abs(id["lp_bound"].get<double>() - 1.0) <= 1e-9);
    const json cor = report({"bound", "--corollaries-only", (data_dir / "scattering.json").string()});
    CHECK_FALSE(cor.contains("lp_bound"));
    // Three unit layers: the sum-of-products corollary counts one per layer.
    CHECK(cor["corollary_sumprod"].get<double>() == doctest::Approx(3.0));

    const json b = report({"bessel", (data_dir / "scattering.json").string()});
    CHECK(b["layers"][0].contains("nodes"));
}

TEST_CASE("usage and error exit codes")
{
    const Outcome help = cli({"bound", "--help"});
    CHECK(help.code == 0);
    CHECK(help.out.find("spec") != std::string::npos);
    CHECK(cli({"bound", "--no-such-flag", (data_dir / "identity.json").string()}).code == 2);
    CHECK(cli({}).code == 2);
    CHECK(cli({"frobnicate"}).code == 2);

    const Outcome bad = cli({"bound", (data_dir / "product_relu.json").string()});
    CHECK(bad.code == 1);
    const json e = json::parse(bad.err);
    CHECK(e["error"]["type"] == "validation_error");
    CHECK_FALSE(e["error"]["message"].get<std::string>().empty());

    const Outcome missing = cli({"bound", (data_dir / "does_not_exist.json").string()});
    CHECK(missing.code == 1);
    CHECK(json::parse(missing.err).contains("error"));
}

TEST_CASE("reports are deterministic apart from the timestamp")
{
    const fs::path dir = scratch("determinism");
    write_text(dir / "white.json", "{}");
    Signal spectrum(Shape{8}, std::vector<double>(8, 1.0));
    write_sidecar(dir / "spectrum.lipc", spectrum);
    for (const auto& args : std::vector<std::vector<std::string>>{
             {"bound", (data_dir / "scattering.json").string()},
             {"stationary", (data_dir / "identity.json").string(), "--spectrum", (dir / "spectrum.lipc").string(),
              "--n", "200", "--seed", "5"}}) {
        json a = report(args);
        json b = report(args);
        a.erase("timestamp");
        b.erase("timestamp");
        CHECK(a.dump() == b.dump());
    }
}

TEST_CASE("forward, local, adversarial, stationary and discriminant subcommands")
{
    const fs::path dir = scratch("pipeline");
    const std::string spec = (data_dir / "scattering.json").string();
    Rng rng(91);
    fs::create_directories(dir / "samples");
    for (int i = 0; i < 3; ++i)
        write_sidecar(dir / "samples" / ("s" + std::to_string(i) + ".lipc"), testing::random_signal(rng, {16}));

    const json f = report({"forward", spec, (dir / "samples" / "s0.lipc").string()});
    CHECK(f["feature_norm"].get<double>() > 0.0);
    CHECK(f["features"].size() > 0);
    const json fo = report({"forward", spec, (dir / "samples" / "s0.lipc").string(), "--out-dir", (dir / "feat").string()});
    CHECK(fs::exists(dir / "feat" / fo["features"][0]["file"].get<std::string>()));

    const json l = report({"local", spec, "--samples", (dir / "samples").string(), "--histogram",
                           (dir / "hist.csv").string()});
    CHECK(l["samples"].size() == 3);
    CHECK(l["max_sigma"].get<double>() <= l["certified_lipschitz_constant"].get<double>() + 1e-7);
    CHECK(fs::exists(dir / "hist.csv"));

    json weights = json::array();
    std::size_t dim = 0;
    for (const auto& feat : f["features"]) dim += feat["values"].size();
    for (int c = 0; c < 2; ++c) {
        json row = json::array();
        for (std::size_t j = 0; j < dim; ++j) row.push_back(rng.normal());
        weights.push_back(row);
    }
    write_text(dir / "head.json", json{{"weights", weights}, {"bias", {0.0, 0.0}}}.dump());
    const json a = report({"adversarial", spec, "--classifier", (dir / "head.json").string(), "--samples",
                           (dir / "samples").string(), "--directions", "10", "--h-max", "50", "--csv",
                           (dir / "adv.csv").string()});
    CHECK(a["samples"].size() == 3);
    CHECK(fs::exists(dir / "adv.csv"));

    write_sidecar(dir / "spectrum.lipc", Signal(Shape{16}, std::vector<double>(16, 1.0)));
    const json st = report({"stationary", spec, "--spectrum", (dir / "spectrum.lipc").string(), "--n", "300", "--csv",
                            (dir / "conc.csv").string()});
    CHECK(st["theorem2"]["satisfied"] == true);
    CHECK(st["concentration"]["all_satisfied"] == true);
    CHECK(fs::exists(dir / "conc.csv"));

    json mean1 = json::array(), mean2 = json::array();
    for (int i = 0; i < 16; ++i) {
        mean1.push_back(i < 8 ? 1.0 : -1.0);
        mean2.push_back(0.0);
    }
    write_text(dir / "c1.json", json{{"label", "up"}, {"mean", mean1}, {"coloring", {{"taps", {1.0}}}}}.dump());
    write_text(dir / "c2.json", json{{"label", "flat"}, {"mean", mean2}, {"coloring", {{"taps", {0.5, 0.5}}}}}.dump());
    const json d = report({"discriminant", spec, "--class1", (dir / "c1.json").string(), "--class2",
                           (dir / "c2.json").string(), "--n", "200"});
    CHECK(d["s"].get<double>() > 0.0);
    CHECK(d["s_lip"].get<double>() > 0.0);
    CHECK(d["labels"][0] == "up");

    fs::create_directories(dir / "nets");
    fs::copy_file(data_dir / "scattering.json", dir / "nets" / "a.json", fs::copy_options::overwrite_existing);
    fs::copy_file(data_dir / "identity.json", dir / "nets" / "b.json", fs::copy_options::overwrite_existing);
    // identity.json has 8 samples; use a 16-sample copy so both nets share the class grid.
    std::ifstream in(data_dir / "identity.json");
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    text.replace(text.find("[8]"), 3, "[16]");
    write_text(dir / "nets" / "b.json", text);
    const json t = report({"discriminant", spec, "--class1", (dir / "c1.json").string(), "--class2",
                           (dir / "c2.json").string(), "--n", "100", "--nets", (dir / "nets").string(), "--csv",
                           (dir / "table.csv").string()});
    CHECK(t["rows"].size() == 2);
    CHECK(fs::exists(dir / "table.csv"));

    const fs::path out = dir / "report.json";
    CHECK(cli({"bound", spec, "-o", out.string()}).code == 0);
    std::ifstream rep(out);
    CHECK(json::parse(rep)["config"]["output"] == out.string());
}

TEST_CASE("installed executable exit codes")
{
    const std::string exe = LIPCERT_CLI_PATH;
    auto status = [&](const std::string& args) {
        const int s = std::system((exe + " " + args + " > /dev/null 2>&1").c_str());
        return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
    };
    CHECK(status("bound --help") == 0);
    CHECK(status("bound --bogus") == 2);
    CHECK(status("bound " + (data_dir / "product_relu.json").string()) == 1);
    CHECK(status("bound " + (data_dir / "scattering.json").string()) == 0);
}
