#include "lipcert/signal.hpp"

#include "lipcert/error.hpp"

#include <functional>
#include <numeric>
#include <sstream>

namespace lipcert {

std::size_t element_count(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape)
{
    std::ostringstream os;
    os << '(';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << 'x';
        os << shape[i];
    }
    os << ')';
    return os.str();
}

Signal::Signal(Shape s) : shape(std::move(s)), values(element_count(shape), 0.0) {}

Signal::Signal(Shape s, std::vector<double> v) : shape(std::move(s)), values(std::move(v))
{
    if (values.size() != element_count(shape))
        throw ShapeError("signal has " + std::to_string(values.size()) + " values but shape " +
                         shape_to_string(shape));
}

double squared_norm(std::span<const double> v)
{
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b)
{
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

namespace {

std::size_t wrap(long v, std::size_t n)
{
    const long m = static_cast<long>(n);
    long r = v % m;
    return static_cast<std::size_t>(r < 0 ? r + m : r);
}

// Calls fn(tap_flat_index, shift_per_axis) for every tap.
template <class Fn>
void for_each_tap(const Signal& taps, const std::vector<long>& origin, Fn&& fn)
{
    const std::size_t d = taps.shape.size();
    std::vector<std::size_t> idx(d, 0);
    std::vector<long> shift(d);
    for (std::size_t flat = 0; flat < taps.size(); ++flat) {
        for (std::size_t a = 0; a < d; ++a) shift[a] = static_cast<long>(idx[a]) - origin[a];
        fn(flat, shift);
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < taps.shape[a]) break;
            idx[a] = 0;
        }
    }
}

// out[t] += w * in[(t - sign*shift) mod N] over the whole grid.
void accumulate_shifted(std::vector<double>& out, const std::vector<double>& in, const Shape& shape,
                        const std::vector<long>& shift, long sign, double w)
{
    const std::size_t d = shape.size();
    std::vector<std::vector<std::size_t>> src(d);
    for (std::size_t a = 0; a < d; ++a) {
        src[a].resize(shape[a]);
        for (std::size_t t = 0; t < shape[a]; ++t)
            src[a][t] = wrap(static_cast<long>(t) - sign * shift[a], shape[a]);
    }
    if (d == 1) {
        for (std::size_t t = 0; t < shape[0]; ++t) out[t] += w * in[src[0][t]];
        return;
    }
    std::vector<std::size_t> strides(d, 1);
    for (std::size_t a = d - 1; a-- > 0;) strides[a] = strides[a + 1] * shape[a + 1];
    std::vector<std::size_t> idx(d, 0);
    for (std::size_t flat = 0; flat < out.size(); ++flat) {
        std::size_t s = 0;
        for (std::size_t a = 0; a < d; ++a) s += src[a][idx[a]] * strides[a];
        out[flat] += w * in[s];
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < shape[a]) break;
            idx[a] = 0;
        }
    }
}

void check_taps(const Signal& x, const Signal& taps, const std::vector<long>& origin)
{
    if (taps.shape.size() != x.shape.size() || origin.size() != x.shape.size())
        throw ShapeError("filter rank " + std::to_string(taps.shape.size()) + " does not match signal shape " +
                         shape_to_string(x.shape));
}

}  // namespace

Signal circular_convolve(const Signal& x, const Signal& taps, const std::vector<long>& origin)
{
    check_taps(x, taps, origin);
    Signal out(x.shape);
    for_each_tap(taps, origin, [&](std::size_t k, const std::vector<long>& shift) {
        if (taps.values[k] != 0.0) accumulate_shifted(out.values, x.values, x.shape, shift, +1, taps.values[k]);
    });
    return out;
}

Signal circular_correlate(const Signal& y, const Signal& taps, const std::vector<long>& origin)
{
    check_taps(y, taps, origin);
    Signal out(y.shape);
    for_each_tap(taps, origin, [&](std::size_t k, const std::vector<long>& shift) {
        if (taps.values[k] != 0.0) accumulate_shifted(out.values, y.values, y.shape, shift, -1, taps.values[k]);
    });
    return out;
}

Shape downsampled_shape(const Shape& shape, const std::vector<std::size_t>& stride)
{
    if (stride.size() != shape.size())
        throw ShapeError("stride rank does not match shape " + shape_to_string(shape));
    Shape out(shape.size());
    for (std::size_t a = 0; a < shape.size(); ++a) {
        if (stride[a] == 0 || shape[a] % stride[a] != 0)
            throw ShapeError("stride " + std::to_string(stride[a]) + " does not divide extent " +
                             std::to_string(shape[a]));
        out[a] = shape[a] / stride[a];
    }
    return out;
}

namespace {

template <class Fn>
void for_each_coarse(const Shape& coarse, const Shape& full, const std::vector<std::size_t>& stride, Fn&& fn)
{
    const std::size_t d = coarse.size();
    std::vector<std::size_t> full_strides(d, 1);
    for (std::size_t a = d; a-- > 1;) full_strides[a - 1] = full_strides[a] * full[a];
    std::vector<std::size_t> idx(d, 0);
    const std::size_t n = element_count(coarse);
    for (std::size_t flat = 0; flat < n; ++flat) {
        std::size_t f = 0;
        for (std::size_t a = 0; a < d; ++a) f += idx[a] * stride[a] * full_strides[a];
        fn(flat, f);
        for (std::size_t a = d; a-- > 0;) {
            if (++idx[a] < coarse[a]) break;
            idx[a] = 0;
        }
    }
}

}  // namespace

Signal downsample(const Signal& x, const std::vector<std::size_t>& stride)
{
    Signal out(downsampled_shape(x.shape, stride));
    for_each_coarse(out.shape, x.shape, stride, [&](std::size_t c, std::size_t f) { out.values[c] = x.values[f]; });
    return out;
}

Signal upsample(const Signal& y, const std::vector<std::size_t>& stride, const Shape& full)
{
    if (downsampled_shape(full, stride) != y.shape)
        throw ShapeError("upsample target " + shape_to_string(full) + " inconsistent with " + shape_to_string(y.shape));
    Signal out(full);
    for_each_coarse(y.shape, full, stride, [&](std::size_t c, std::size_t f) { out.values[f] = y.values[c]; });
    return out;
}

}  // namespace lipcert
