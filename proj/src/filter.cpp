#include "lipcert/filter.hpp"

#include "lipcert/error.hpp"

#include <cmath>
#include <numbers>

namespace lipcert {

Filter Filter::delta(std::size_t rank)
{
    return TapFilter{Signal(Shape(rank, 1), {1.0}), std::vector<long>(rank, 0)};
}

Filter Filter::shifted_delta(const std::vector<long>& offset)
{
    // A single tap at spatial offset s: index 0 with origin -s.
    std::vector<long> origin(offset.size());
    for (std::size_t a = 0; a < offset.size(); ++a) origin[a] = -offset[a];
    return TapFilter{Signal(Shape(offset.size(), 1), {1.0}), origin};
}

Filter Filter::taps_1d(std::vector<double> taps, long origin)
{
    const std::size_t n = taps.size();
    return TapFilter{Signal(Shape{n}, std::move(taps)), {origin}};
}

Filter Filter::scaled(double c) const
{
    if (is_taps()) {
        TapFilter t = taps();
        for (double& v : t.taps.values) v *= c;
        return t;
    }
    ProfileFilter p = profile();
    if (p.name.rfind("scaled:", 0) == 0) {
        p.params.back() *= c * c;
    } else {
        p.name = "scaled:" + p.name;
        p.params.push_back(c * c);
    }
    return p;
}

std::vector<std::complex<double>> frequency_response(const TapFilter& f, const Shape& grid)
{
    const std::size_t d = grid.size();
    if (f.taps.shape.size() != d) throw ShapeError("filter rank does not match frequency grid");
    const std::size_t n = element_count(grid);
    std::vector<std::complex<double>> out(n, 0.0);

    // Per-axis phase tables: phase[a][k][s_index].
    std::vector<std::vector<std::vector<std::complex<double>>>> phase(d);
    for (std::size_t a = 0; a < d; ++a) {
        phase[a].assign(grid[a], std::vector<std::complex<double>>(f.taps.shape[a]));
        for (std::size_t k = 0; k < grid[a]; ++k)
            for (std::size_t i = 0; i < f.taps.shape[a]; ++i) {
                const double s = static_cast<double>(static_cast<long>(i) - f.origin[a]);
                const double ang = -2.0 * std::numbers::pi * static_cast<double>(k) * s / static_cast<double>(grid[a]);
                phase[a][k][i] = std::polar(1.0, ang);
            }
    }

    std::vector<std::size_t> kidx(d, 0);
    for (std::size_t kf = 0; kf < n; ++kf) {
        std::complex<double> acc = 0.0;
        std::vector<std::size_t> tidx(d, 0);
        for (std::size_t tf = 0; tf < f.taps.size(); ++tf) {
            const double g = f.taps.values[tf];
            if (g != 0.0) {
                std::complex<double> ph = 1.0;
                for (std::size_t a = 0; a < d; ++a) ph *= phase[a][kidx[a]][tidx[a]];
                acc += g * ph;
            }
            for (std::size_t a = d; a-- > 0;) {
                if (++tidx[a] < f.taps.shape[a]) break;
                tidx[a] = 0;
            }
        }
        out[kf] = acc;
        for (std::size_t a = d; a-- > 0;) {
            if (++kidx[a] < grid[a]) break;
            kidx[a] = 0;
        }
    }
    return out;
}

double smooth_gate(double w)
{
    const double a = std::abs(w);
    if (a <= 0.5) return 1.0;
    if (a >= 1.0) return 0.0;
    // exp((2a-1)^2 / (4a(a-1))): equals 1 at a = 1/2, tends to 0 as a -> 1.
    const double num = (2.0 * a - 1.0) * (2.0 * a - 1.0);
    const double den = 4.0 * a * (a - 1.0);
    return std::exp(num / den);
}

namespace {

// Gate with flat top on [-a, a] and the same transition profile as F on (a, a + 1/2).
double wide_gate(double w, double a)
{
    const double x = std::abs(w);
    if (x <= a) return 1.0;
    return smooth_gate(x - a + 0.5);
}

std::size_t expected_params(const std::string& base)
{
    if (base == "gate" || base == "gate_pair" || base == "wide_gate" || base == "constant") return 1;
    throw ValidationError("unknown frequency profile '" + base + "'");
}

}  // namespace

void validate_profile(const ProfileFilter& p)
{
    std::string base = p.name;
    std::size_t extra = 0;
    if (base.rfind("scaled:", 0) == 0) {
        base = base.substr(7);
        extra = 1;
    }
    const std::size_t need = expected_params(base) + extra;
    if (p.params.size() != need)
        throw ValidationError("profile '" + p.name + "' expects " + std::to_string(need) + " parameter(s)");
    for (double v : p.params)
        if (!std::isfinite(v)) throw ValidationError("profile '" + p.name + "' has a non-finite parameter");
    if (base == "wide_gate" && p.params[0] < 0.0) throw ValidationError("wide_gate half-width must be >= 0");
    if (base == "constant" && p.params[0] < 0.0) throw ValidationError("constant power profile must be >= 0");
}

double power_response(const ProfileFilter& p, double w)
{
    if (p.name.rfind("scaled:", 0) == 0) {
        ProfileFilter inner{p.name.substr(7), {p.params.begin(), p.params.end() - 1}};
        return p.params.back() * power_response(inner, w);
    }
    const double c = p.params.at(0);
    if (p.name == "gate") return smooth_gate(w - c);
    if (p.name == "gate_pair") return smooth_gate(w + c) + smooth_gate(w - c);
    if (p.name == "wide_gate") return wide_gate(w, c);
    if (p.name == "constant") return c;
    throw ValidationError("unknown frequency profile '" + p.name + "'");
}

double profile_support_radius(const ProfileFilter& p)
{
    if (p.name.rfind("scaled:", 0) == 0)
        return profile_support_radius(ProfileFilter{p.name.substr(7), {p.params.begin(), p.params.end() - 1}});
    const double c = p.params.at(0);
    if (p.name == "gate" || p.name == "gate_pair") return std::abs(c) + 1.0;
    if (p.name == "wide_gate") return c + 0.5;
    return 0.0;
}

}  // namespace lipcert
