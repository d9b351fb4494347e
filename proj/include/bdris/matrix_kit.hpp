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

#include <utility>
#include <vector>

namespace bdris {

// Column-major vectorization throughout. vech keeps the lower triangle,
// column by column.
cvec vec(const cmat &m);
cmat unvec(const cvec &v, Index rows, Index cols);
cvec vech(const cmat &m);

cmat kron(const cmat &a, const cmat &b);

/// Sparse 0/1 matrix stored as a list of (row, col) positions. Every row
/// holds at most one nonzero, so products are pure gathers and scatters.
class SelectionMatrix {
public:
    SelectionMatrix(Index rows, Index cols, std::vector<std::pair<Index, Index>> ones);

    Index rows() const noexcept { return rows_; }
    Index cols() const noexcept { return cols_; }
    const std::vector<std::pair<Index, Index>> &ones() const noexcept { return ones_; }

    /// y = S x
    cvec apply(const cvec &x) const;
    /// x = S^T y (S is real, so this is also S^H y)
    cvec apply_transpose(const cvec &y) const;
    rmat to_dense() const;

private:
    Index rows_;
    Index cols_;
    std::vector<std::pair<Index, Index>> ones_;
};

/// D with D vech(S) = vec(S) for symmetric S of size m_g.
SelectionMatrix duplication_matrix(Index m_g);

/// Q_g scattering vec(Phi_g) into vec(blkdiag(Phi_1, ..., Phi_G)).
/// `g` is zero-based.
SelectionMatrix indexing_matrix(const std::vector<Index> &group_sizes, Index g);

/// Phi = unvec(sum_g Q_g D_g phi_g), symmetric blocks by construction.
cmat assemble_reflection(const std::vector<cvec> &phi_halves, const std::vector<Index> &group_sizes);

/// Phi = U U^T with Haar distributed U. Symmetric and unitary.
cmat random_symmetric_unitary(Index n, Rng &rng);

cmat random_haar_unitary(Index n, Rng &rng);

struct HermitianEvd {
    rvec values;  // descending
    cmat vectors; // columns match `values`
    Index rank = 0;
};

/// Throws DimensionError if `a` is not Hermitian within 1e-10 (relative).
HermitianEvd hermitian_evd(const cmat &a, double rank_tol = 1e-9);

struct Svd {
    cmat u;
    rvec s;
    cmat v;
};

Svd svd(const cmat &a);

/// Frobenius-nearest unitary matrix, U V^H from the SVD of `a`.
cmat project_unitary(const cmat &a);

/// Real form of z^H A z - 2 Re{q^H z} + c over x = [Re z; Im z].
struct RealQuadratic {
    rmat p;
    rvec b;
    double c = 0.0;

    double operator()(const rvec &x) const { return x.dot(p * x) + b.dot(x) + c; }
};

RealQuadratic lift_to_real(const cmat &quadratic, const cvec &linear, double constant);

rvec stack_real(const cvec &z);
cvec unstack_real(const rvec &x);

bool is_hermitian(const cmat &a, double tol);

} // namespace bdris
