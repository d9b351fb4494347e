// Independent reference solver for small convex QCQPs: projected gradient
// with exact ellipsoid projections (Dykstra for intersections).
#pragma once

#include "bdris/qcqp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using bdris::rmat;
using bdris::rvec;

struct Ellipsoid {
    rmat p;
    rvec b;
    double c = 0.0;
    Eigen::SelfAdjointEigenSolver<rmat> eig;

    Ellipsoid(rmat p_, rvec b_, double c_) : p(std::move(p_)), b(std::move(b_)), c(c_), eig(p) {}
    double value(const rvec &x) const { return x.dot(p * x) + b.dot(x) + c; }

    rvec at(const rvec &y, double mu) const {
        const rmat &v = eig.eigenvectors();
        const rvec lam = eig.eigenvalues().cwiseMax(0.0);
        rvec z = v.transpose() * (y - mu * b);
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) /= 1.0 + 2.0 * mu * lam(i);
        return v * z;
    }

    rvec project(const rvec &y) const {
        if (value(y) <= 0.0)
            return y;
        double lo = 0.0, hi = 1.0;
        while (value(at(y, hi)) > 0.0 && hi < 1e30)
            hi *= 2.0;
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (value(at(y, mid)) > 0.0 ? lo : hi) = mid;
        }
        return at(y, hi);
    }
};

inline rvec project_all(const std::vector<Ellipsoid> &sets, const rvec &y) {
    if (sets.size() == 1)
        return sets[0].project(y);
    // Dykstra's alternating projections
    rvec x = y;
    std::vector<rvec> inc(sets.size(), rvec::Zero(y.size()));
    for (int sweep = 0; sweep < 20000; ++sweep) {
        const rvec prev = x;
        for (std::size_t i = 0; i < sets.size(); ++i) {
            const rvec z = x + inc[i];
            x = sets[i].project(z);
            inc[i] = z - x;
        }
        if ((x - prev).norm() < 1e-15)
            break;
    }
    return x;
}

/// minimize x^T P0 x + b0^T x over the intersection; P0 must be positive definite.
inline rvec projected_gradient(const rmat &p0, const rvec &b0, const std::vector<Ellipsoid> &sets) {
    Eigen::SelfAdjointEigenSolver<rmat> es(p0);
    const double lip = 2.0 * es.eigenvalues().maxCoeff();
    rvec x = project_all(sets, rvec::Zero(b0.size()));
    for (int it = 0; it < 200000; ++it) {
        const rvec g = 2.0 * p0 * x + b0;
        const rvec nx = project_all(sets, x - g / lip);
        const double step = (nx - x).norm();
        x = nx;
        if (step < 1e-14)
            break;
    }
    return x;
}

// Random convex instances in every supported matrix representation.
inline rmat random_matrix(bdris::Index r, bdris::Index c, bdris::Rng &rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    rmat m(r, c);
    for (bdris::Index j = 0; j < c; ++j)
        for (bdris::Index i = 0; i < r; ++i)
            m(i, j) = n(rng);
    return m;
}

struct Instance {
    bdris::ConvexQcqp problem;
    rmat p0;
    rvec b0;
    std::vector<Ellipsoid> sets;
};

// Stores each PSD matrix in one of the three supported representations.
inline bdris::Quadratic encode(const rmat &factor_rows, const rvec &b, double c, int form) {
    const bdris::Index n = b.size();
    bdris::Quadratic q = bdris::Quadratic::zero(n);
    q.b = b;
    q.c = c;
    if (form == 0) {
        q.factors = factor_rows;
    } else if (form == 1) {
        q.dense = factor_rows.transpose() * factor_rows;
    } else {
        q.diag = rvec::Constant(n, 0.05);
        q.factors = factor_rows;
    }
    return q;
}

inline Instance random_instance(bdris::Rng &rng, int idx) {
    std::uniform_int_distribution<int> dim(3, 8);
    const bdris::Index n = dim(rng);
    Instance in;
    in.problem.n = n;
    const rmat a = random_matrix(n, n, rng);
    in.p0 = a.transpose() * a / static_cast<double>(n) + 0.5 * rmat::Identity(n, n);
    in.b0 = 4.0 * random_matrix(n, 1, rng);
    in.problem.objective = bdris::Quadratic::zero(n);
    in.problem.objective.dense = in.p0;
    in.problem.objective.b = in.b0;

    const int count = idx % 5 == 0 ? 2 : 1;
    for (int k = 0; k < count; ++k) {
        const bdris::Index rank = 1 + (idx + k) % n;
        const rmat f = random_matrix(rank, n, rng);
        const rvec b = 0.3 * random_matrix(n, 1, rng);
        const double c = -1.0 - std::abs(random_matrix(1, 1, rng)(0, 0));
        const int form = (idx + k) % 3;
        in.problem.constraints.push_back(encode(f, b, c, form));
        rmat p = f.transpose() * f;
        if (form == 2)
            p.diagonal().array() += 0.05;
        in.sets.emplace_back(p, b, c);
    }
    return in;
}

} // namespace oracle
