#pragma once

#include <vector>

#include "cif/rng.hpp"
#include "cif/tensor.hpp"

namespace test_helpers {

inline cif::Tensor random_tensor(cif::Shape shape, std::uint64_t seed, double scale = 1.0,
                                 bool requires_grad = false) {
    cif::Rng rng(seed);
    std::vector<double> values(cif::numel(shape));
    for (auto& v : values) v = scale * rng.normal();
    return cif::Tensor(std::move(shape), std::move(values), requires_grad);
}

inline std::vector<double> random_values(std::size_t count, std::uint64_t seed, double scale = 1.0) {
    cif::Rng rng(seed);
    std::vector<double> values(count);
    for (auto& v : values) v = scale * rng.normal();
    return values;
}

}  // namespace test_helpers
