#pragma once

#include "lipcert/bounds.hpp"
#include "lipcert/netspec.hpp"
#include "lipcert/spectral.hpp"

#include <string>
#include <vector>

namespace lipcert {

// Four-layer continuous network built from smooth gate profiles, with filter counts
// (5, 7, 4, 1) per layer and all three merge types. Its Bessel bounds are
//   (2e^{-1/3}, 1, 1), (2e^{-1/3}, 1, 1), (2, 2, 1), (1, 0, 1).
NetworkSpec toy_network();

// The closed-form bounds listed above.
std::vector<BesselTriple> toy_reference_triples();

struct ToyExample {
    NetworkSpec net;
    std::vector<LayerBessel> layers;
    LipschitzReport report;
    double published_lp = 2.866;
    double published_product = 4.102;
    double published_sumprod = 5.0;
    std::vector<std::string> notes;
};

ToyExample run_toy_example(const SpectralOptions& options = {});

}  // namespace lipcert
