#pragma once

#include <functional>
#include <random>

#include "kgr/tape.hpp"

namespace kgr {

// Central-difference check of reverse-mode gradients. `loss_fn` re-evaluates
// the loss for the current parameter values (building a fresh tape each
// call); `analytic` holds the reverse-mode gradients at the unperturbed
// point. Samples up to `coords_per_param` coordinates of every parameter and
// returns the maximum relative error. 64-bit only.
// `abs_floor` bounds the denominator of the relative error: coordinates whose
// analytic and numeric gradients are both below it compare as equal (the
// central-difference noise floor for an O(1) loss sits near 1e-11).
inline double grad_check(ParamStore<double>& params,
                         const std::function<double()>& loss_fn,
                         const GradStore<double>& analytic, double eps = 1e-5,
                         int coords_per_param = 4, uint64_t seed = 0,
                         double abs_floor = 1e-6) {
    std::mt19937_64 rng(seed);
    double max_rel = 0;
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& m = params[pi];
        const int n = static_cast<int>(m.size());
        const int n_coords = std::min(coords_per_param, n);
        for (int k = 0; k < n_coords; ++k) {
            const int idx = static_cast<int>(rng() % static_cast<uint64_t>(n));
            double* cell = m.data() + idx;
            const double saved = *cell;
            *cell = saved + eps;
            const double up = loss_fn();
            *cell = saved - eps;
            const double down = loss_fn();
            *cell = saved;
            if (!std::isfinite(up) || !std::isfinite(down))
                throw std::runtime_error("grad_check: non-finite loss");
            const double fd = (up - down) / (2 * eps);
            const double an = analytic[pi].data()[idx];
            const double rel =
                std::abs(fd - an) / std::max({std::abs(fd), std::abs(an), abs_floor});
            max_rel = std::max(max_rel, rel);
        }
    }
    return max_rel;
}

}  // namespace kgr
