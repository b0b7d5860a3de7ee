#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"

namespace meshmove {

/// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Sym2 {
    double xx = 0.0;
    double xy = 0.0;
    double yy = 0.0;

    double frobenius() const { return std::sqrt(xx * xx + 2.0 * xy * xy + yy * yy); }
};

namespace detail {

/// Nodes within `rings` edge hops of `node`, the node itself first, the rest ascending.
inline std::vector<int> node_rings(const Mesh& mesh, int node, int rings) {
    std::vector<int> frontier{node};
    std::vector<int> seen{node};
    for (int r = 0; r < rings; ++r) {
        std::vector<int> next;
        for (int u : frontier) {
            for (int e : mesh.incident_elements(u)) {
                for (int v : mesh.element(e)) {
                    if (std::find(seen.begin(), seen.end(), v) == seen.end()) {
                        seen.push_back(v);
                        next.push_back(v);
                    }
                }
            }
        }
        frontier = std::move(next);
    }
    std::sort(seen.begin() + 1, seen.end());
    return seen;
}

inline double local_scale(const Mesh& mesh, int node, std::span<const int> stencil) {
    double s = 0.0;
    for (int v : stencil) s = std::max(s, norm(mesh.node(v) - mesh.node(node)));
    return s > 0.0 ? s : 1.0;
}

} // namespace detail

/*
 * Least-squares affine fit u ~ c + g.(x - x_i) over the node and its
 * first-order neighbors, evaluated at the node. Exact for affine fields.
 */
inline std::vector<Vec2> recover_gradient(const Mesh& mesh, std::span<const double> u) {
    if (u.size() != mesh.num_nodes()) throw ValidationError("recover_gradient: field size mismatch");
    std::vector<Vec2> out(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const int node = static_cast<int>(i);
        const auto stencil = detail::node_rings(mesh, node, 1);
        const double s = detail::local_scale(mesh, node, stencil);
        Eigen::MatrixXd A(stencil.size(), 3);
        Eigen::VectorXd b(stencil.size());
        for (std::size_t r = 0; r < stencil.size(); ++r) {
            const Vec2 d = (mesh.node(stencil[r]) - mesh.node(node)) * (1.0 / s);
            A.row(static_cast<Eigen::Index>(r)) << 1.0, d.x, d.y;
            b(static_cast<Eigen::Index>(r)) = u[static_cast<std::size_t>(stencil[r])];
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
        qr.setThreshold(1e-10);
        if (qr.rank() < 3) {
            throw RankDeficiencyError("gradient fit needs neighbors in at least 2 directions", node);
        }
        const Eigen::VectorXd c = qr.solve(b);
        out[i] = {c(1) / s, c(2) / s};
    }
    return out;
}

inline std::vector<Vec2> recover_gradient(const Mesh& mesh, const std::string& field) {
    return recover_gradient(mesh, mesh.field(field));
}

/*
 * Hessian of a local least-squares quadratic fit (unit weights). The stencil
 * starts at the first ring and grows one ring at a time, up to three, until
 * the six-coefficient fit is well posed. Exact for quadratic fields.
 */
inline std::vector<Sym2> recover_hessian(const Mesh& mesh, std::span<const double> u) {
    if (u.size() != mesh.num_nodes()) throw ValidationError("recover_hessian: field size mismatch");
    constexpr int max_rings = 3;
    std::vector<Sym2> out(mesh.num_nodes());
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        const int node = static_cast<int>(i);
        bool done = false;
        for (int rings = 1; rings <= max_rings && !done; ++rings) {
            const auto stencil = detail::node_rings(mesh, node, rings);
            if (stencil.size() < 6) continue;
            const double s = detail::local_scale(mesh, node, stencil);
            Eigen::MatrixXd A(stencil.size(), 6);
            Eigen::VectorXd b(stencil.size());
            for (std::size_t r = 0; r < stencil.size(); ++r) {
                const Vec2 d = (mesh.node(stencil[r]) - mesh.node(node)) * (1.0 / s);
                A.row(static_cast<Eigen::Index>(r)) << 1.0, d.x, d.y, 0.5 * d.x * d.x, d.x * d.y, 0.5 * d.y * d.y;
                b(static_cast<Eigen::Index>(r)) = u[static_cast<std::size_t>(stencil[r])];
            }
            Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
            qr.setThreshold(1e-8);
            if (qr.rank() < 6) continue;
            const Eigen::VectorXd c = qr.solve(b);
            const double inv_s2 = 1.0 / (s * s);
            out[i] = {c(3) * inv_s2, c(4) * inv_s2, c(5) * inv_s2};
            done = true;
        }
        if (!done) {
            throw RankDeficiencyError("quadratic fit is rank deficient within " + std::to_string(max_rings) +
                                          " rings",
                                      node);
        }
    }
    return out;
}

inline std::vector<Sym2> recover_hessian(const Mesh& mesh, const std::string& field) {
    return recover_hessian(mesh, mesh.field(field));
}

} // namespace meshmove
