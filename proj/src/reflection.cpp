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

#include "bdris/reflection.hpp"

#include "bdris/matrix_kit.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace bdris {

namespace {

double block_unitarity_error(const cmat &b) {
    return (b.adjoint() * b - cmat::Identity(b.rows(), b.cols())).norm();
}

double block_symmetry_error(const cmat &b) { return (b - b.transpose()).norm(); }

} // namespace

ReflectionMatrix::ReflectionMatrix(std::vector<Index> group_sizes, std::vector<cmat> blocks, double feas_tol)
    : group_sizes_(std::move(group_sizes)), blocks_(std::move(blocks)), feas_tol_(feas_tol) {
    if (group_sizes_.empty() || group_sizes_.size() != blocks_.size())
        throw DimensionError("ReflectionMatrix: one block per group required");
    for (std::size_t g = 0; g < blocks_.size(); ++g) {
        const Index mg = group_sizes_[g];
        if (mg < 1 || blocks_[g].rows() != mg || blocks_[g].cols() != mg)
            throw DimensionError("ReflectionMatrix: block size mismatch");
        if (!blocks_[g].allFinite())
            throw NumericalError("ReflectionMatrix: non-finite entry");
        if (block_unitarity_error(blocks_[g]) > feas_tol_ || block_symmetry_error(blocks_[g]) > feas_tol_)
            throw NumericalError("ReflectionMatrix: block is not symmetric unitary");
        size_ += mg;
    }
}

ReflectionMatrix ReflectionMatrix::identity(const std::vector<Index> &group_sizes) {
    std::vector<cmat> blocks;
    for (Index mg : group_sizes)
        blocks.push_back(cmat::Identity(mg, mg));
    return {group_sizes, std::move(blocks)};
}

ReflectionMatrix ReflectionMatrix::random(const std::vector<Index> &group_sizes, Rng &rng) {
    std::vector<cmat> blocks;
    for (Index mg : group_sizes)
        blocks.push_back(random_symmetric_unitary(mg, rng));
    return {group_sizes, std::move(blocks)};
}

ReflectionMatrix ReflectionMatrix::nearest_feasible(const cmat &dense, const std::vector<Index> &group_sizes,
                                                    double feas_tol) {
    std::vector<cmat> blocks;
    Index off = 0;
    for (Index mg : group_sizes) {
        if (off + mg > dense.rows() || off + mg > dense.cols())
            throw DimensionError("nearest_feasible: group sizes exceed matrix size");
        const cmat b = dense.block(off, off, mg, mg);
        cmat p = project_unitary(0.5 * (b + b.transpose()));
        // The polar factor of a nonsingular complex symmetric matrix is
        // symmetric; average away the rounding.
        p = 0.5 * (p + p.transpose()).eval();
        blocks.push_back(std::move(p));
        off += mg;
    }
    return {group_sizes, std::move(blocks), feas_tol};
}

cmat ReflectionMatrix::dense() const {
    cmat out = cmat::Zero(size_, size_);
    Index off = 0;
    for (std::size_t g = 0; g < blocks_.size(); ++g) {
        out.block(off, off, group_sizes_[g], group_sizes_[g]) = blocks_[g];
        off += group_sizes_[g];
    }
    return out;
}

std::vector<cvec> ReflectionMatrix::halves() const {
    std::vector<cvec> out;
    for (const auto &b : blocks_)
        out.push_back(vech(b));
    return out;
}

double ReflectionMatrix::unitarity_error() const {
    double e = 0.0;
    for (const auto &b : blocks_)
        e = std::max(e, block_unitarity_error(b));
    return e;
}

double ReflectionMatrix::symmetry_error() const {
    double e = 0.0;
    for (const auto &b : blocks_)
        e = std::max(e, block_symmetry_error(b));
    return e;
}

void ReflectionMatrix::write_text(std::ostream &os) const {
    os << "M " << size_ << "\n";
    os << "group_sizes";
    for (Index s : group_sizes_)
        os << ' ' << s;
    os << "\n";
    const cmat d = dense();
    char buf[96];
    for (Index i = 0; i < size_; ++i) {
        for (Index j = 0; j < size_; ++j) {
            std::snprintf(buf, sizeof(buf), "%.17g,%.17g", d(i, j).real(), d(i, j).imag());
            os << (j ? " " : "") << buf;
        }
        os << "\n";
    }
}

ReflectionMatrix ReflectionMatrix::read_text(std::istream &is, double feas_tol) {
    std::string key;
    Index m = 0;
    if (!(is >> key >> m) || key != "M" || m < 1)
        throw std::runtime_error("reflection file: expected 'M <size>' header");
    std::string line;
    std::getline(is, line);
    std::getline(is, line);
    std::istringstream gs(line);
    if (!(gs >> key) || key != "group_sizes")
        throw std::runtime_error("reflection file: expected 'group_sizes' line");
    std::vector<Index> groups;
    for (Index s; gs >> s;)
        groups.push_back(s);
    cmat d(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            std::string tok;
            if (!(is >> tok))
                throw std::runtime_error("reflection file: truncated matrix");
            const auto comma = tok.find(',');
            if (comma == std::string::npos)
                throw std::runtime_error("reflection file: expected re,im pair");
            d(i, j) = cd(std::stod(tok.substr(0, comma)), std::stod(tok.substr(comma + 1)));
        }
    }
    std::vector<cmat> blocks;
    Index off = 0;
    for (Index mg : groups) {
        if (off + mg > m)
            throw std::runtime_error("reflection file: group sizes exceed M");
        blocks.push_back(d.block(off, off, mg, mg));
        off += mg;
    }
    if (off != m)
        throw std::runtime_error("reflection file: group sizes do not sum to M");
    return {groups, std::move(blocks), feas_tol};
}

std::vector<Index> uniform_groups(Index total, Index group_count) {
    if (group_count < 1 || total % group_count != 0)
        throw DimensionError("uniform_groups: group count must divide the element count");
    return std::vector<Index>(static_cast<std::size_t>(group_count), total / group_count);
}

} // namespace bdris
