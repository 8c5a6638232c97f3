#include "lipcert/sidecar.hpp"

#include "lipcert/error.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace lipcert {

namespace {

static_assert(std::endian::native == std::endian::little, "sidecar I/O assumes a little-endian host");

void put_u32(std::string& out, std::uint32_t v)
{
    char b[4];
    std::memcpy(b, &v, 4);
    out.append(b, 4);
}

std::uint32_t get_u32(const std::string& in, std::size_t& pos)
{
    if (pos + 4 > in.size()) throw ParseError("truncated sidecar header", pos);
    std::uint32_t v;
    std::memcpy(&v, in.data() + pos, 4);
    pos += 4;
    return v;
}

}  // namespace

std::string encode_sidecar(const Signal& s)
{
    std::string out(kSidecarMagic, 8);
    put_u32(out, static_cast<std::uint32_t>(s.shape.size()));
    for (std::size_t e : s.shape) put_u32(out, static_cast<std::uint32_t>(e));
    const std::size_t off = out.size();
    out.resize(off + 8 * s.values.size());
    std::memcpy(out.data() + off, s.values.data(), 8 * s.values.size());
    return out;
}

Signal decode_sidecar(const std::string& bytes)
{
    if (bytes.size() < 8 || std::memcmp(bytes.data(), kSidecarMagic, 8) != 0)
        throw ParseError("sidecar file lacks LIPCFLT1 magic", 0);
    std::size_t pos = 8;
    const std::uint32_t rank = get_u32(bytes, pos);
    if (rank == 0 || rank > 16) throw ParseError("sidecar rank out of range", pos - 4);
    Shape shape(rank);
    for (auto& e : shape) {
        e = get_u32(bytes, pos);
        if (e == 0) throw ParseError("sidecar extent must be positive", pos - 4);
    }
    const std::size_t n = element_count(shape);
    if (bytes.size() != pos + 8 * n)
        throw ParseError("sidecar payload has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                             std::to_string(8 * n),
                         pos);
    std::vector<double> values(n);
    std::memcpy(values.data(), bytes.data() + pos, 8 * n);
    return Signal(std::move(shape), std::move(values));
}

Signal read_sidecar(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open sidecar file " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_sidecar(bytes);
}

void write_sidecar(const std::filesystem::path& path, const Signal& s)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write sidecar file " + path.string());
    const std::string bytes = encode_sidecar(s);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace lipcert
