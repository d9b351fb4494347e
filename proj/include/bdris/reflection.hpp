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

#include <iosfwd>
#include <vector>

namespace bdris {

/// Block-diagonal reflection matrix whose blocks are symmetric unitary
/// (lossless and reciprocal) within `feas_tol`.
class ReflectionMatrix {
public:
    /// Validates every block against `feas_tol`; throws NumericalError otherwise.
    ReflectionMatrix(std::vector<Index> group_sizes, std::vector<cmat> blocks, double feas_tol = 1e-10);

    static ReflectionMatrix identity(const std::vector<Index> &group_sizes);
    static ReflectionMatrix random(const std::vector<Index> &group_sizes, Rng &rng);
    /// Extracts the diagonal blocks of `dense`, symmetrizes them and projects
    /// each onto the unitary group. Off-block entries are discarded.
    static ReflectionMatrix nearest_feasible(const cmat &dense, const std::vector<Index> &group_sizes,
                                             double feas_tol = 1e-10);

    const std::vector<Index> &group_sizes() const noexcept { return group_sizes_; }
    const std::vector<cmat> &blocks() const noexcept { return blocks_; }
    double feas_tol() const noexcept { return feas_tol_; }
    Index size() const noexcept { return size_; }

    cmat dense() const;
    std::vector<cvec> halves() const;

    double unitarity_error() const;
    double symmetry_error() const;

    void write_text(std::ostream &os) const;
    static ReflectionMatrix read_text(std::istream &is, double feas_tol = 1e-9);

private:
    std::vector<Index> group_sizes_;
    std::vector<cmat> blocks_;
    double feas_tol_;
    Index size_ = 0;
};

std::vector<Index> uniform_groups(Index total, Index group_count);

} // namespace bdris
