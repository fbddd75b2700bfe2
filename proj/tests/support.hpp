#pragma once
// Synthetic instances and brute-force references shared by the unit and
// acceptance tests. Nothing here calls into the library's numeric code.

#include "dynspace/cooccurrence.hpp"
#include "dynspace/dynembed.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <vector>

namespace testsupport {

using dynspace::EmbeddingTensor;
using dynspace::SparseMatrix;

// Symmetric nonnegative sparse targets built from a drifting latent factor,
// roughly the shape of a PPMI matrix.
inline std::vector<SparseMatrix> random_targets(std::size_t T, std::size_t n, std::uint64_t seed,
                                                std::size_t rank = 6, double keep = 0.3, double drift = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto N = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd x(N, static_cast<Eigen::Index>(rank));
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng) / std::sqrt(static_cast<double>(rank));

    std::vector<SparseMatrix> out;
    for (std::size_t t = 0; t < T; ++t) {
        if (t > 0) {
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += drift * normal(rng) / std::sqrt(double(rank));
        }
        const Eigen::MatrixXd m = x * x.transpose();
        std::vector<Eigen::Triplet<double>> trips;
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index j = i + 1; j < N; ++j) {
                const double v = m(i, j) + 0.1 * normal(rng);
                if (v > 0.0 && unit(rng) < keep) {
                    trips.emplace_back(i, j, v);
                    trips.emplace_back(j, i, v);
                }
            }
        }
        SparseMatrix y(N, N);
        y.setFromTriplets(trips.begin(), trips.end());
        out.push_back(std::move(y));
    }
    return out;
}

// Objective evaluated entry by entry on dense matrices.
inline double dense_objective(const EmbeddingTensor& u, std::span<const SparseMatrix> targets, double lambda,
                              double tau) {
    double f = 0.0;
    for (std::size_t t = 0; t < u.T(); ++t) {
        const Eigen::MatrixXd y(targets[t]);
        const auto& a = u.slice(t);
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            for (Eigen::Index j = 0; j < a.rows(); ++j) {
                double dot = 0.0;
                for (Eigen::Index c = 0; c < a.cols(); ++c) dot += a(i, c) * a(j, c);
                const double r = y(i, j) - dot;
                f += 0.5 * r * r;
            }
            for (Eigen::Index c = 0; c < a.cols(); ++c) f += 0.5 * lambda * a(i, c) * a(i, c);
        }
        if (t > 0) {
            const auto& b = u.slice(t - 1);
            for (Eigen::Index i = 0; i < a.size(); ++i) {
                const double d = a.data()[i] - b.data()[i];
                f += 0.5 * tau * d * d;
            }
        }
    }
    return f;
}

// Single-slice ridge-linearized optimizer on dense matrices with step halving.
inline Eigen::MatrixXd dense_single_slice(Eigen::MatrixXd u, const Eigen::MatrixXd& y, double lambda,
                                          std::size_t sweeps) {
    auto f = [&](const Eigen::MatrixXd& a) {
        return 0.5 * (y - a * a.transpose()).squaredNorm() + 0.5 * lambda * a.squaredNorm();
    };
    for (std::size_t s = 0; s < sweeps; ++s) {
        Eigen::MatrixXd lhs = 2.0 * u.transpose() * u;
        lhs.diagonal().array() += lambda;
        const Eigen::MatrixXd rhs = 2.0 * y * u;
        Eigen::MatrixXd next = lhs.llt().solve(rhs.transpose()).transpose();
        const double f0 = f(u);
        double f1 = f(next);
        const Eigen::MatrixXd step = next - u;
        double alpha = 1.0;
        int halvings = 0;
        while (!(f1 <= f0) && halvings < 20) {
            alpha *= 0.5;
            ++halvings;
            next = u + alpha * step;
            f1 = f(next);
        }
        if (f1 <= f0) u = next;
    }
    return u;
}

inline double mean_drift(const EmbeddingTensor& u) {
    double s = 0.0;
    for (std::size_t t = 1; t < u.T(); ++t) s += (u.slice(t) - u.slice(t - 1)).norm();
    return s / static_cast<double>(u.T() - 1);
}

// Adjusted Rand index from the contingency table.
inline double adjusted_rand_index(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::map<std::pair<std::size_t, std::size_t>, double> joint;
    std::map<std::size_t, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    auto c2 = [](double x) { return x * (x - 1) / 2; };
    double sj = 0, sa = 0, sb = 0;
    for (const auto& [k, v] : joint) sj += c2(v);
    for (const auto& [k, v] : ra) sa += c2(v);
    for (const auto& [k, v] : rb) sb += c2(v);
    const double total = c2(static_cast<double>(a.size()));
    const double expected = sa * sb / total;
    const double maxv = 0.5 * (sa + sb);
    if (maxv == expected) return 1.0;
    return (sj - expected) / (maxv - expected);
}

inline Eigen::MatrixXd random_rotation(Eigen::Index k, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::MatrixXd g(k, k);
    for (Eigen::Index i = 0; i < g.size(); ++i) g.data()[i] = normal(rng);
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
    Eigen::MatrixXd q = qr.householderQ();
    if (q.determinant() < 0) q.col(0) *= -1.0;
    return q;
}

inline Eigen::Vector3d unit_sphere(std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::Vector3d v(normal(rng), normal(rng), normal(rng));
    return v.normalized();
}

// Words on the unit sphere (optionally in clumps) contract toward an attractor
// between the two slices; project documents concentrate around the same attractor.
struct PlantedFlow {
    Eigen::MatrixXd from, to, docs, focals;
};

inline PlantedFlow planted_flow(std::size_t m, std::uint64_t seed, double pull = 0.7, double doc_spread = 1.5,
                                std::size_t n_clumps = 320, std::size_t clump_size = 1, std::size_t n_docs = 800) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Eigen::Vector3d attractor = Eigen::Vector3d(1.0, 1.0, 1.0).normalized();
    PlantedFlow p;
    const auto n = static_cast<Eigen::Index>(n_clumps * clump_size);
    p.from.resize(n, 3);
    p.to.resize(n, 3);
    Eigen::Index w = 0;
    for (std::size_t c = 0; c < n_clumps; ++c) {
        const Eigen::Vector3d centre = unit_sphere(rng);
        for (std::size_t j = 0; j < clump_size; ++j, ++w) {
            Eigen::Vector3d v = centre + 0.05 * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
            v.normalize();
            p.from.row(w) = v.transpose();
            p.to.row(w) = (v + pull * attractor).normalized().transpose();
        }
    }
    p.docs.resize(static_cast<Eigen::Index>(n_docs), 3);
    for (Eigen::Index d = 0; d < p.docs.rows(); ++d) {
        const Eigen::Vector3d v = attractor + doc_spread * Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
        p.docs.row(d) = v.normalized().transpose();
    }
    p.focals.resize(static_cast<Eigen::Index>(m), 3);
    for (Eigen::Index f = 0; f < p.focals.rows(); ++f) p.focals.row(f) = unit_sphere(rng).transpose();
    return p;
}

}  // namespace testsupport
