#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"

namespace meshmove {

enum class PdeKind { poisson, helmholtz };

inline const char* to_string(PdeKind k) { return k == PdeKind::poisson ? "poisson" : "helmholtz"; }

/*
 * Manufactured problem on [0,1]^2 with Dirichlet data from the exact
 * solution. Poisson: -lap(u) = f. Helmholtz: -lap(u) + u = f. The forcing is
 * derived from the closed-form Laplacian, so it is consistent by construction.
 */
struct PDEProblem {
    std::string key; // "<pde>:<solution>"
    std::string solution;
    PdeKind kind = PdeKind::poisson;
    std::function<double(double, double)> exact;
    std::function<double(double, double)> laplacian;

    double u(const Vec2& p) const { return exact(p.x, p.y); }
    double forcing(const Vec2& p) const {
        const double lap = laplacian(p.x, p.y);
        return kind == PdeKind::poisson ? -lap : -lap + exact(p.x, p.y);
    }
};

namespace detail {

inline PDEProblem make_problem(PdeKind kind, std::string solution, std::function<double(double, double)> u,
                               std::function<double(double, double)> lap) {
    PDEProblem p;
    p.key = std::string(to_string(kind)) + ":" + solution;
    p.solution = std::move(solution);
    p.kind = kind;
    p.exact = std::move(u);
    p.laplacian = std::move(lap);
    return p;
}

} // namespace detail

/// Poisson and Helmholtz manufactured solutions, including the steady benchmark set.
inline const std::vector<PDEProblem>& problem_registry() {
    static const std::vector<PDEProblem> registry = [] {
        using std::cos;
        using std::exp;
        using std::sin;
        constexpr double pi = std::numbers::pi;
        constexpr double pi2 = pi * pi;
        std::vector<PDEProblem> r;
        const auto P = PdeKind::poisson;
        const auto H = PdeKind::helmholtz;
        auto rsq = [](double x, double y) { return (x - 0.5) * (x - 0.5) + (y - 0.5) * (y - 0.5); };

        r.push_back(detail::make_problem(
            P, "1+8pi^2*cos(2pi*x)*cos(2pi*y)",
            [=](double x, double y) { return 1.0 + 8.0 * pi2 * cos(2 * pi * x) * cos(2 * pi * y); },
            [=](double x, double y) { return -64.0 * pi2 * pi2 * cos(2 * pi * x) * cos(2 * pi * y); }));

        // Both centre lists are [0.25, 0.25], so the double sum is four copies of one bump.
        static constexpr double centers[2] = {0.25, 0.25};
        constexpr double s2 = 0.25 * 0.25;
        r.push_back(detail::make_problem(
            P, "sum_ij exp(-((x-xi)/0.25)^2-((y-yj)/0.25)^2)",
            [=](double x, double y) {
                double sum = 0.0;
                for (double cx : centers)
                    for (double cy : centers) sum += exp(-(x - cx) * (x - cx) / s2 - (y - cy) * (y - cy) / s2);
                return sum;
            },
            [=](double x, double y) {
                double sum = 0.0;
                for (double cx : centers) {
                    for (double cy : centers) {
                        const double dx = x - cx, dy = y - cy;
                        const double g = exp(-dx * dx / s2 - dy * dy / s2);
                        sum += g * (4.0 * (dx * dx + dy * dy) / (s2 * s2) - 4.0 / s2);
                    }
                }
                return sum;
            }));

        r.push_back(detail::make_problem(
            P, "sin(4pi*x)*sin(4pi*y)", [=](double x, double y) { return sin(4 * pi * x) * sin(4 * pi * y); },
            [=](double x, double y) { return -32.0 * pi2 * sin(4 * pi * x) * sin(4 * pi * y); }));

        r.push_back(detail::make_problem(
            P, "1/exp((x-0.5)^2+(y-0.5)^2)", [=](double x, double y) { return exp(-rsq(x, y)); },
            [=](double x, double y) {
                const double q = rsq(x, y);
                return (4.0 * q - 4.0) * exp(-q);
            }));

        r.push_back(detail::make_problem(
            P, "sin(2pi*x+2pi*y)", [=](double x, double y) { return sin(2 * pi * x + 2 * pi * y); },
            [=](double x, double y) { return -8.0 * pi2 * sin(2 * pi * x + 2 * pi * y); }));

        r.push_back(detail::make_problem(
            P, "cos(pi*x)*exp(-((x-0.5)^2+(y-0.5)^2))",
            [=](double x, double y) { return cos(pi * x) * exp(-rsq(x, y)); },
            [=](double x, double y) {
                const double q = rsq(x, y);
                return exp(-q) * (-pi2 * cos(pi * x) + (4.0 * q - 4.0) * cos(pi * x) +
                                  4.0 * pi * (x - 0.5) * sin(pi * x));
            }));

        r.push_back(detail::make_problem(
            P, "cos(r)*exp(-r^2)", // r = |(x, y) - (0.5, 0.5)|
            [=](double x, double y) {
                const double q = rsq(x, y);
                return cos(std::sqrt(q)) * exp(-q);
            },
            [=](double x, double y) {
                const double q = rsq(x, y);
                const double rr = std::sqrt(q);
                const double sinc = rr > 1e-8 ? sin(rr) / rr : 1.0 - q / 6.0;
                return exp(-q) * (4.0 * rr * sin(rr) + (4.0 * q - 5.0) * cos(rr) - sinc);
            }));

        r.push_back(detail::make_problem(
            P, "sin(pi*x)*sin(pi*y)", [=](double x, double y) { return sin(pi * x) * sin(pi * y); },
            [=](double x, double y) { return -2.0 * pi2 * sin(pi * x) * sin(pi * y); }));

        r.push_back(detail::make_problem(
            H, "cos(2pi*y)", [=](double, double y) { return cos(2 * pi * y); },
            [=](double, double y) { return -4.0 * pi2 * cos(2 * pi * y); }));
        r.push_back(detail::make_problem(
            H, "cos(2pi*x)", [=](double x, double) { return cos(2 * pi * x); },
            [=](double x, double) { return -4.0 * pi2 * cos(2 * pi * x); }));
        r.push_back(detail::make_problem(
            H, "cos(2pi*y)*cos(2pi*x)", [=](double x, double y) { return cos(2 * pi * y) * cos(2 * pi * x); },
            [=](double x, double y) { return -8.0 * pi2 * cos(2 * pi * y) * cos(2 * pi * x); }));
        r.push_back(detail::make_problem(
            H, "cos(2pi*y)*cos(4pi*x)", [=](double x, double y) { return cos(2 * pi * y) * cos(4 * pi * x); },
            [=](double x, double y) { return -20.0 * pi2 * cos(2 * pi * y) * cos(4 * pi * x); }));
        r.push_back(detail::make_problem(
            H, "cos(4pi*y)*cos(2pi*x)", [=](double x, double y) { return cos(4 * pi * y) * cos(2 * pi * x); },
            [=](double x, double y) { return -20.0 * pi2 * cos(4 * pi * y) * cos(2 * pi * x); }));
        return r;
    }();
    return registry;
}

/// Steady benchmark suites: the seven Poisson and five Helmholtz solutions.
inline std::vector<const PDEProblem*> problem_suite(const std::string& suite) {
    std::vector<const PDEProblem*> out;
    for (const auto& p : problem_registry()) {
        if (p.solution == "sin(pi*x)*sin(pi*y)") continue;
        if (suite == "all" || suite == to_string(p.kind)) out.push_back(&p);
    }
    if (out.empty()) throw ValidationError("unknown suite '" + suite + "' (expected poisson, helmholtz or all)");
    return out;
}

inline const PDEProblem& find_problem(const std::string& key) {
    for (const auto& p : problem_registry()) {
        if (p.key == key) return p;
    }
    std::string known;
    for (const auto& p : problem_registry()) known += "\n  " + p.key;
    throw ValidationError("unknown problem '" + key + "'; known problems:" + known);
}

struct FemSystem {
    Eigen::SparseMatrix<double> matrix; // stiffness (+ mass for Helmholtz), before boundary elimination
    Eigen::VectorXd load;
};

/// Global P1 operator and load vector. The load uses the edge-midpoint rule.
inline FemSystem assemble(const PDEProblem& problem, const Mesh& mesh) {
    const auto n = static_cast<Eigen::Index>(mesh.num_nodes());
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(mesh.num_elements() * 9);
    FemSystem sys;
    sys.load = Eigen::VectorXd::Zero(n);
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.elements()[e];
        const Vec2 p[3] = {mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2])};
        const double area = signed_area(p[0], p[1], p[2]);
        Vec2 grad[3];
        for (int i = 0; i < 3; ++i) {
            const Vec2& a = p[(i + 1) % 3];
            const Vec2& b = p[(i + 2) % 3];
            grad[i] = Vec2{a.y - b.y, b.x - a.x} * (1.0 / (2.0 * area));
        }
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                double v = area * dot(grad[i], grad[j]);
                if (problem.kind == PdeKind::helmholtz) v += area / 12.0 * (i == j ? 2.0 : 1.0);
                trips.emplace_back(t[i], t[j], v);
            }
        }
        double fmid[3]; // fmid[k]: midpoint of the edge opposite vertex k
        for (int k = 0; k < 3; ++k) fmid[k] = problem.forcing((p[(k + 1) % 3] + p[(k + 2) % 3]) * 0.5);
        for (int i = 0; i < 3; ++i) {
            sys.load(t[i]) += area / 6.0 * (fmid[(i + 1) % 3] + fmid[(i + 2) % 3]);
        }
    }
    sys.matrix.resize(n, n);
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    return sys;
}

/*
 * P1 Galerkin solve with Dirichlet rows eliminated. The reduced SPD system is
 * factorized with a sparse LDL^T; the relative residual must come out below
 * 1e-10.
 */
inline std::vector<double> solve(const PDEProblem& problem, const Mesh& mesh) {
    if (tangling_ratio(mesh) > 0.0) throw ValidationError("solve: mesh has inverted or degenerate elements");
    const FemSystem sys = assemble(problem, mesh);
    const std::size_t n = mesh.num_nodes();
    std::vector<double> u(n, 0.0);
    std::vector<Eigen::Index> free_index(n, -1);
    Eigen::Index n_free = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (mesh.is_boundary(static_cast<int>(i))) {
            u[i] = problem.u(mesh.nodes()[i]);
        } else {
            free_index[i] = n_free++;
        }
    }
    if (n_free == 0) return u;

    std::vector<Eigen::Triplet<double>> trips;
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n_free);
    for (std::size_t i = 0; i < n; ++i) {
        if (free_index[i] >= 0) rhs(free_index[i]) = sys.load(static_cast<Eigen::Index>(i));
    }
    for (int col = 0; col < sys.matrix.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(sys.matrix, col); it; ++it) {
            const auto r = free_index[static_cast<std::size_t>(it.row())];
            if (r < 0) continue;
            const auto c = free_index[static_cast<std::size_t>(it.col())];
            if (c >= 0) {
                trips.emplace_back(r, c, it.value());
            } else {
                rhs(r) -= it.value() * u[static_cast<std::size_t>(it.col())];
            }
        }
    }
    Eigen::SparseMatrix<double> A(n_free, n_free);
    A.setFromTriplets(trips.begin(), trips.end());

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(A);
    if (ldlt.info() != Eigen::Success) throw SolverError("solve: factorization failed (singular system)");
    const Eigen::VectorXd x = ldlt.solve(rhs);
    if (ldlt.info() != Eigen::Success || !x.allFinite()) throw SolverError("solve: back substitution failed");
    const double bnorm = rhs.norm();
    const double res = (A * x - rhs).norm();
    if (bnorm > 0.0 ? res > 1e-10 * bnorm : res > 1e-300) {
        throw SolverError("solve: relative residual " + std::to_string(bnorm > 0.0 ? res / bnorm : res) +
                          " exceeds 1e-10");
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (free_index[i] >= 0) u[i] = x(free_index[i]);
    }
    return u;
}

/// sqrt of the integral of (u_h - u)^2, edge-midpoint rule per element.
inline double l2_error(const Mesh& mesh, std::span<const double> numeric,
                       const std::function<double(double, double)>& exact) {
    if (numeric.size() != mesh.num_nodes()) throw ValidationError("l2_error: field size mismatch");
    double sum = 0.0;
    for (const auto& t : mesh.elements()) {
        const Vec2 p[3] = {mesh.node(t[0]), mesh.node(t[1]), mesh.node(t[2])};
        const double area = std::abs(signed_area(p[0], p[1], p[2]));
        double acc = 0.0;
        for (int k = 0; k < 3; ++k) {
            const int a = (k + 1) % 3, b = (k + 2) % 3;
            const Vec2 mid = (p[a] + p[b]) * 0.5;
            const double uh = 0.5 * (numeric[t[a]] + numeric[t[b]]);
            const double d = uh - exact(mid.x, mid.y);
            acc += d * d;
        }
        sum += area / 3.0 * acc;
    }
    return std::sqrt(sum);
}

inline double solution_error(const PDEProblem& problem, const Mesh& mesh) {
    return l2_error(mesh, solve(problem, mesh), problem.exact);
}

/// Percent reduction of the L2 error: (E_coarse - E_adapted) / E_coarse * 100.
inline double error_reduction_percent(double e_coarse, double e_adapted) {
    if (!(e_coarse > 0.0)) throw NumericalError("error reduction undefined: coarse error is zero");
    return (e_coarse - e_adapted) / e_coarse * 100.0;
}

inline double error_reduction(const PDEProblem& problem, const Mesh& coarse, const Mesh& adapted) {
    return error_reduction_percent(solution_error(problem, coarse), solution_error(problem, adapted));
}

} // namespace meshmove
