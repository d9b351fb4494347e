// SPDX-License-Identifier: Apache-2.0
//
// bdris - reflection design for beyond-diagonal IRS aided uplink ISAC
// Copyright (C) 2026 The bdris Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "bdris/types.hpp"

#include <cmath>
#include <type_traits>

namespace bdris {

struct GaussLegendreRule {
    rvec nodes;   // on [-1, 1]
    rvec weights;
};

GaussLegendreRule gauss_legendre(Index n);

namespace detail {
inline double magnitude(double v) { return std::abs(v); }
template <typename Derived> double magnitude(const Eigen::MatrixBase<Derived> &m) { return m.norm(); }
} // namespace detail

struct QuadratureOptions {
    Index nodes_per_panel = 64;
    double rel_tol = 1e-9;
    int max_doublings = 10;
};

/// Composite Gauss-Legendre over [a, b]. The panel count starts at one and
/// doubles until the relative change of the estimate drops below rel_tol.
/// Throws NumericalError when max_doublings is exhausted.
template <typename F>
auto integrate(F &&f, double a, double b, const QuadratureOptions &opt = {}) {
    using T = std::decay_t<decltype(f(a))>;
    const GaussLegendreRule rule = gauss_legendre(opt.nodes_per_panel);
    auto composite = [&](Index panels) {
        const double h = (b - a) / static_cast<double>(panels);
        T acc{};
        bool first = true;
        for (Index p = 0; p < panels; ++p) {
            const double mid = a + (static_cast<double>(p) + 0.5) * h;
            for (Index i = 0; i < rule.nodes.size(); ++i) {
                T term = f(mid + 0.5 * h * rule.nodes(i)) * (0.5 * h * rule.weights(i));
                if (first) {
                    acc = term;
                    first = false;
                } else {
                    acc += term;
                }
            }
        }
        return acc;
    };
    Index panels = 1;
    T prev = composite(panels);
    for (int level = 0; level < opt.max_doublings; ++level) {
        panels *= 2;
        T cur = composite(panels);
        const double change = detail::magnitude(cur - prev);
        if (change <= opt.rel_tol * detail::magnitude(cur) || change < 1e-300)
            return cur;
        prev = std::move(cur);
    }
    throw NumericalError("quadrature did not converge");
}

} // namespace bdris
