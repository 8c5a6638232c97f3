#include "lipcert/fft.hpp"

#include "lipcert/error.hpp"

#include <unsupported/Eigen/FFT>

namespace lipcert {

namespace {

ComplexField transform(ComplexField data, const Shape& shape, bool inverse)
{
    if (data.size() != element_count(shape)) throw ShapeError("FFT input does not match its shape");
    Eigen::FFT<double> fft;
    std::size_t inner = data.size();
    for (std::size_t a = 0; a < shape.size(); ++a) {
        const std::size_t n = shape[a];
        inner /= n;
        const std::size_t outer = data.size() / (n * inner);
        std::vector<std::complex<double>> line(n), out(n);
        for (std::size_t o = 0; o < outer; ++o)
            for (std::size_t i = 0; i < inner; ++i) {
                const std::size_t base = o * n * inner + i;
                for (std::size_t k = 0; k < n; ++k) line[k] = data[base + k * inner];
                if (inverse) fft.inv(out, line);
                else fft.fwd(out, line);
                for (std::size_t k = 0; k < n; ++k) data[base + k * inner] = out[k];
            }
    }
    return data;
}

}  // namespace

ComplexField fft_forward(const ComplexField& data, const Shape& shape) { return transform(data, shape, false); }

ComplexField fft_inverse(const ComplexField& data, const Shape& shape) { return transform(data, shape, true); }

ComplexField fft_forward(const Signal& s)
{
    return fft_forward(ComplexField(s.values.begin(), s.values.end()), s.shape);
}

std::size_t mirrored_bin(std::size_t k, const Shape& shape)
{
    std::size_t out = 0;
    std::size_t stride = 1;
    for (std::size_t a = shape.size(); a-- > 0;) {
        const std::size_t n = shape[a];
        const std::size_t idx = (k / stride) % n;
        out += ((n - idx) % n) * stride;
        stride *= n;
    }
    return out;
}

}  // namespace lipcert
