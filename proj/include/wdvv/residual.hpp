#pragma once

#include "poly.hpp"
#include "tensor.hpp"

#include <algorithm>
#include <cstddef>

namespace wdvv {

using PolyTensor = Tensor<Poly>;

inline PolyTensor zero_poly_tensor(std::vector<std::size_t> shape, std::size_t n_vars) {
    return PolyTensor(std::move(shape), Poly(n_vars));
}

inline std::size_t count_nonzero(const PolyTensor& t) {
    return static_cast<std::size_t>(std::count_if(t.begin(), t.end(), [](const Poly& p) { return !p.is_zero(); }));
}

inline bool all_zero(const PolyTensor& t) { return count_nonzero(t) == 0; }

/// Largest total degree among nonzero entries; -1 when all vanish.
inline int max_total_degree(const PolyTensor& t) {
    int d = -1;
    for (const auto& p : t) d = std::max(d, p.degree());
    return d;
}

inline std::size_t total_terms(const PolyTensor& t) {
    std::size_t k = 0;
    for (const auto& p : t) k += p.term_count();
    return k;
}

}  // namespace wdvv
