#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace lipcert {

inline constexpr int kSchemaVersion = 1;
inline constexpr unsigned long long kDefaultSeed = 24301;

// Runs the command line `args` (args[0] is the program name). Reports go to `out`,
// usage text and structured errors to `err`. Returns 0 on success, 1 on a computational
// error, 2 on a usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv);

}  // namespace lipcert
