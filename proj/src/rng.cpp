#include "lipcert/rng.hpp"

#include <cmath>
#include <numbers>

namespace lipcert {

std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

std::uint64_t Rng::next_u64() noexcept
{
    const std::uint64_t key = splitmix64(seed_ ^ splitmix64(stream_ + 0x632be59bd9b4e019ull));
    return splitmix64(key + 0x9e3779b97f4a7c15ull * (++counter_));
}

double Rng::uniform() noexcept { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() noexcept
{
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

std::size_t Rng::below(std::size_t n) noexcept
{
    if (n <= 1) return 0;
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

std::vector<double> Rng::normal_vector(std::size_t n)
{
    std::vector<double> v(n);
    for (double& x : v) x = normal();
    return v;
}

std::vector<double> Rng::unit_vector(std::size_t n)
{
    std::vector<double> v;
    double s = 0.0;
    do {
        v = normal_vector(n);
        s = 0.0;
        for (double x : v) s += x * x;
    } while (s == 0.0 && n > 0);
    const double inv = 1.0 / std::sqrt(s);
    for (double& x : v) x *= inv;
    return v;
}

Rng Rng::split(std::uint64_t id) const noexcept
{
    return Rng(splitmix64(seed_ + 0x2545f4914f6cdd1dull * (stream_ + 1)), id);
}

}  // namespace lipcert
