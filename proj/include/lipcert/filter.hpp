#pragma once

#include "lipcert/signal.hpp"

#include <complex>
#include <string>
#include <variant>
#include <vector>

namespace lipcert {

// Finite tap array on a periodic grid. Tap index i sits at spatial offset i - origin.
struct TapFilter {
    Signal taps;
    std::vector<long> origin;

    bool operator==(const TapFilter&) const = default;
};

// Named closed-form frequency profile, used by continuous-domain networks. The profile
// value is the power response |g^(w)|^2 of the filter (1-D frequency variable).
struct ProfileFilter {
    std::string name;
    std::vector<double> params;

    bool operator==(const ProfileFilter&) const = default;
};

class Filter {
public:
    Filter() = default;
    Filter(TapFilter t) : rep_(std::move(t)) {}
    Filter(ProfileFilter p) : rep_(std::move(p)) {}

    static Filter delta(std::size_t rank);
    static Filter shifted_delta(const std::vector<long>& offset);
    static Filter taps_1d(std::vector<double> taps, long origin = 0);

    bool is_taps() const noexcept { return std::holds_alternative<TapFilter>(rep_); }
    bool is_profile() const noexcept { return std::holds_alternative<ProfileFilter>(rep_); }
    const TapFilter& taps() const { return std::get<TapFilter>(rep_); }
    const ProfileFilter& profile() const { return std::get<ProfileFilter>(rep_); }

    // Copy with every tap (or the profile's power) scaled; profiles scale by c^2 in power.
    Filter scaled(double c) const;

    bool operator==(const Filter&) const = default;

private:
    std::variant<TapFilter, ProfileFilter> rep_{TapFilter{Signal(Shape{1}, {1.0}), {0}}};
};

// Unnormalized DFT of the taps on `grid`: g^(k) = sum_s g(s) exp(-2 pi i k.s / N).
std::vector<std::complex<double>> frequency_response(const TapFilter& f, const Shape& grid);

// The gate function F of the toy network: 1 on [-1/2, 1/2], smooth decay to 0 at |w| = 1.
double smooth_gate(double w);
// Power response |g^(w)|^2 of a closed-form profile. Throws ValidationError for unknown names.
double power_response(const ProfileFilter& p, double w);
// Radius outside which the profile vanishes; 0 for profiles with unbounded support.
double profile_support_radius(const ProfileFilter& p);
// Checks the name and parameter count.
void validate_profile(const ProfileFilter& p);

}  // namespace lipcert
