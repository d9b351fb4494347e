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

#include "bdris/matrix_kit.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace bdris {

cvec vec(const cmat &m) {
    return Eigen::Map<const cvec>(m.data(), m.size());
}

cmat unvec(const cvec &v, Index rows, Index cols) {
    if (rows < 0 || cols < 0 || v.size() != rows * cols)
        throw DimensionError("unvec: length does not match rows*cols");
    return Eigen::Map<const cmat>(v.data(), rows, cols);
}

cvec vech(const cmat &m) {
    if (m.rows() != m.cols())
        throw DimensionError("vech: matrix must be square");
    const Index n = m.rows();
    cvec out(n * (n + 1) / 2);
    Index k = 0;
    for (Index col = 0; col < n; ++col)
        for (Index row = col; row < n; ++row)
            out(k++) = m(row, col);
    return out;
}

cmat kron(const cmat &a, const cmat &b) {
    cmat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

SelectionMatrix::SelectionMatrix(Index rows, Index cols, std::vector<std::pair<Index, Index>> ones)
    : rows_(rows), cols_(cols), ones_(std::move(ones)) {
    std::vector<bool> used(static_cast<std::size_t>(rows), false);
    for (const auto &[r, c] : ones_) {
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_)
            throw DimensionError("SelectionMatrix: position out of range");
        if (used[static_cast<std::size_t>(r)])
            throw DimensionError("SelectionMatrix: more than one nonzero in a row");
        used[static_cast<std::size_t>(r)] = true;
    }
}

cvec SelectionMatrix::apply(const cvec &x) const {
    if (x.size() != cols_)
        throw DimensionError("SelectionMatrix::apply: size mismatch");
    cvec y = cvec::Zero(rows_);
    for (const auto &[r, c] : ones_)
        y(r) = x(c);
    return y;
}

cvec SelectionMatrix::apply_transpose(const cvec &y) const {
    if (y.size() != rows_)
        throw DimensionError("SelectionMatrix::apply_transpose: size mismatch");
    cvec x = cvec::Zero(cols_);
    for (const auto &[r, c] : ones_)
        x(c) += y(r);
    return x;
}

rmat SelectionMatrix::to_dense() const {
    rmat d = rmat::Zero(rows_, cols_);
    for (const auto &[r, c] : ones_)
        d(r, c) = 1.0;
    return d;
}

SelectionMatrix duplication_matrix(Index m_g) {
    if (m_g < 1)
        throw DimensionError("duplication_matrix: size must be positive");
    // Column of vech entry (m, n), m >= n, one-based: (n-1) m_g + m - n(n-1)/2.
    std::vector<std::pair<Index, Index>> ones;
    for (Index n = 1; n <= m_g; ++n) {
        for (Index m = n; m <= m_g; ++m) {
            const Index col = (n - 1) * m_g + m - n * (n - 1) / 2 - 1;
            ones.emplace_back((n - 1) * m_g + m - 1, col);
            if (m != n)
                ones.emplace_back((m - 1) * m_g + n - 1, col);
        }
    }
    return {m_g * m_g, m_g * (m_g + 1) / 2, std::move(ones)};
}

SelectionMatrix indexing_matrix(const std::vector<Index> &group_sizes, Index g) {
    if (g < 0 || g >= static_cast<Index>(group_sizes.size()))
        throw DimensionError("indexing_matrix: group index out of range");
    Index total = 0;
    Index offset = 0;
    for (std::size_t i = 0; i < group_sizes.size(); ++i) {
        if (group_sizes[i] < 1)
            throw DimensionError("indexing_matrix: group sizes must be positive");
        if (static_cast<Index>(i) < g)
            offset += group_sizes[i];
        total += group_sizes[i];
    }
    const Index mg = group_sizes[static_cast<std::size_t>(g)];
    std::vector<std::pair<Index, Index>> ones;
    for (Index n = 1; n <= mg; ++n)
        for (Index m = 1; m <= mg; ++m)
            ones.emplace_back((offset + n - 1) * total + offset + m - 1, (n - 1) * mg + m - 1);
    return {total * total, mg * mg, std::move(ones)};
}

cmat assemble_reflection(const std::vector<cvec> &phi_halves, const std::vector<Index> &group_sizes) {
    if (phi_halves.size() != group_sizes.size())
        throw DimensionError("assemble_reflection: one half-vector per group required");
    Index total = 0;
    for (Index s : group_sizes)
        total += s;
    cvec acc = cvec::Zero(total * total);
    for (std::size_t g = 0; g < group_sizes.size(); ++g) {
        const Index mg = group_sizes[g];
        if (phi_halves[g].size() != mg * (mg + 1) / 2)
            throw DimensionError("assemble_reflection: half-vector length mismatch");
        const auto d = duplication_matrix(mg);
        const auto q = indexing_matrix(group_sizes, static_cast<Index>(g));
        acc += q.apply(d.apply(phi_halves[g]));
    }
    return unvec(acc, total, total);
}

cmat random_haar_unitary(Index n, Rng &rng) {
    cmat z(n, n);
    for (Index j = 0; j < n; ++j)
        for (Index i = 0; i < n; ++i)
            z(i, j) = complex_normal(rng);
    Eigen::HouseholderQR<cmat> qr(z);
    cmat q = qr.householderQ() * cmat::Identity(n, n);
    const cmat r = qr.matrixQR().triangularView<Eigen::Upper>();
    for (Index i = 0; i < n; ++i) {
        const double mag = std::abs(r(i, i));
        const cd ph = mag > 0.0 ? r(i, i) / mag : cd(1.0, 0.0);
        q.col(i) *= ph;
    }
    return q;
}

cmat random_symmetric_unitary(Index n, Rng &rng) {
    if (n < 1)
        throw DimensionError("random_symmetric_unitary: size must be positive");
    const cmat u = random_haar_unitary(n, rng);
    cmat phi = u * u.transpose();
    // Remove rounding asymmetry; U U^T is symmetric in exact arithmetic.
    return 0.5 * (phi + phi.transpose()).eval();
}

bool is_hermitian(const cmat &a, double tol) {
    if (a.rows() != a.cols())
        return false;
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol * scale;
}

HermitianEvd hermitian_evd(const cmat &a, double rank_tol) {
    if (!is_hermitian(a, 1e-10))
        throw DimensionError("hermitian_evd: input is not Hermitian");
    const cmat sym = 0.5 * (a + a.adjoint());
    Eigen::SelfAdjointEigenSolver<cmat> es(sym);
    if (es.info() != Eigen::Success)
        throw NumericalError("hermitian_evd: eigen solver failed");
    const Index n = a.rows();
    HermitianEvd out;
    out.values = es.eigenvalues().reverse();
    out.vectors = es.eigenvectors().rowwise().reverse();
    const double top = n > 0 ? out.values(0) : 0.0;
    for (Index i = 0; i < n; ++i)
        if (top > 0.0 && out.values(i) > rank_tol * top)
            ++out.rank;
    return out;
}

Svd svd(const cmat &a) {
    Eigen::JacobiSVD<cmat> s(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    return {s.matrixU(), s.singularValues(), s.matrixV()};
}

cmat project_unitary(const cmat &a) {
    if (a.rows() != a.cols())
        throw DimensionError("project_unitary: matrix must be square");
    const Svd s = svd(a);
    return s.u * s.v.adjoint();
}

RealQuadratic lift_to_real(const cmat &quadratic, const cvec &linear, double constant) {
    const Index n = quadratic.rows();
    if (quadratic.cols() != n || linear.size() != n)
        throw DimensionError("lift_to_real: size mismatch");
    if (!is_hermitian(quadratic, 1e-10))
        throw DimensionError("lift_to_real: quadratic part is not Hermitian");
    RealQuadratic out;
    out.p.resize(2 * n, 2 * n);
    const rmat re = quadratic.real();
    const rmat im = quadratic.imag();
    out.p << re, -im, im, re;
    out.p = 0.5 * (out.p + out.p.transpose()).eval();
    out.b.resize(2 * n);
    out.b << -2.0 * linear.real(), -2.0 * linear.imag();
    out.c = constant;
    return out;
}

rvec stack_real(const cvec &z) {
    rvec x(2 * z.size());
    x << z.real(), z.imag();
    return x;
}

cvec unstack_real(const rvec &x) {
    const Index n = x.size() / 2;
    cvec z(n);
    for (Index i = 0; i < n; ++i)
        z(i) = cd(x(i), x(n + i));
    return z;
}

} // namespace bdris
