#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace lipcert {

// Extents of a d-dimensional periodic grid, row-major (last axis fastest).
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape);
std::string shape_to_string(const Shape& shape);

// Real signal on a periodic grid.
struct Signal {
    Shape shape;
    std::vector<double> values;

    Signal() = default;
    explicit Signal(Shape s);
    Signal(Shape s, std::vector<double> v);

    std::size_t size() const noexcept { return values.size(); }
    double& operator[](std::size_t i) { return values[i]; }
    double operator[](std::size_t i) const { return values[i]; }

    bool operator==(const Signal&) const = default;
};

using SignalBatch = std::vector<Signal>;

double squared_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);
double squared_distance(std::span<const double> a, std::span<const double> b);

// Circular convolution out(t) = sum_s g(s) x(t - s), taps placed at s = index - origin.
Signal circular_convolve(const Signal& x, const Signal& taps, const std::vector<long>& origin);
// Adjoint of circular_convolve with respect to x (circular correlation).
Signal circular_correlate(const Signal& y, const Signal& taps, const std::vector<long>& origin);

// Keeps every stride[a]-th sample along axis a, phase 0.
Signal downsample(const Signal& x, const std::vector<std::size_t>& stride);
// Adjoint of downsample: zero-filled upsampling onto `full`.
Signal upsample(const Signal& y, const std::vector<std::size_t>& stride, const Shape& full);

Shape downsampled_shape(const Shape& shape, const std::vector<std::size_t>& stride);

}  // namespace lipcert
