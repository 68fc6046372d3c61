#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "floodcast/tensor.hpp"

namespace floodcast::testing {

inline bool close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

inline std::vector<double> random_values(std::mt19937_64& rng, std::size_t n, double lo = -1.0,
                                         double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> out(n);
    for (auto& v : out) v = dist(rng);
    return out;
}

inline Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    auto n = numel(shape);
    return Tensor::from_data(std::move(shape), random_values(rng, static_cast<std::size_t>(n), lo, hi));
}

/// Central finite differences for d loss / d param, matched coordinate-wise
/// against the tape gradient. `make_loss` must rebuild the forward pass from
/// scratch using the supplied parameter values (define-by-run contract).
/// Returns the worst relative disagreement over the checked coordinates.
inline double finite_difference_worst(
    const std::function<double(const std::vector<std::vector<double>>&)>& loss_value,
    const std::vector<std::vector<double>>& params,
    const std::vector<std::vector<double>>& tape_grads,
    const std::vector<std::size_t>& coords_per_param,  // empty = all coordinates
    double step = 1e-5) {
    double worst = 0.0;
    for (std::size_t p = 0; p < params.size(); ++p) {
        std::vector<std::size_t> coords;
        if (p < coords_per_param.size() && coords_per_param[p] != static_cast<std::size_t>(-1)) {
            // caller picked a stride; sample every k-th coordinate
            const std::size_t k = std::max<std::size_t>(1, coords_per_param[p]);
            for (std::size_t i = 0; i < params[p].size(); i += k) coords.push_back(i);
        } else {
            for (std::size_t i = 0; i < params[p].size(); ++i) coords.push_back(i);
        }
        for (auto i : coords) {
            auto perturbed = params;
            perturbed[p][i] += step;
            const double up = loss_value(perturbed);
            perturbed[p][i] -= 2.0 * step;
            const double down = loss_value(perturbed);
            const double fd = (up - down) / (2.0 * step);
            const double tape = tape_grads[p][i];
            const double denom = std::max({1.0, std::abs(fd), std::abs(tape)});
            worst = std::max(worst, std::abs(fd - tape) / denom);
        }
    }
    return worst;
}

}  // namespace floodcast::testing
