#pragma once

#include "lipcert/signal.hpp"

#include <filesystem>
#include <string>

namespace lipcert {

// Binary array container shared by filter taps and signals:
//   8 bytes  magic "LIPCFLT1"
//   u32 LE   rank
//   u32 LE   extent, repeated rank times
//   f64 LE   values, row-major
inline constexpr char kSidecarMagic[8] = {'L', 'I', 'P', 'C', 'F', 'L', 'T', '1'};

std::string encode_sidecar(const Signal& s);
Signal decode_sidecar(const std::string& bytes);

Signal read_sidecar(const std::filesystem::path& path);
void write_sidecar(const std::filesystem::path& path, const Signal& s);

}  // namespace lipcert
