#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "meshmove/errors.hpp"
#include "meshmove/geometry.hpp"

namespace meshmove {

using Triangle = std::array<int, 3>;
using FieldMap = std::map<std::string, std::vector<double>>;

/*
 * Connectivity that never changes while nodes move: elements, the boundary
 * mask and node-to-element incidence (CSR). Shared between meshes that differ
 * only in node positions.
 */
struct MeshTopology {
    std::vector<Triangle> elements;
    std::vector<bool> boundary;
    std::vector<int> incidence_offsets; // size N + 1
    std::vector<int> incidence;         // element indices, ascending per node
};

namespace detail {

inline std::shared_ptr<const MeshTopology> build_topology(std::size_t n_nodes,
                                                          std::vector<Triangle> elements) {
    const int n = static_cast<int>(n_nodes);
    for (std::size_t e = 0; e < elements.size(); ++e) {
        const auto& t = elements[e];
        for (int v : t) {
            if (v < 0 || v >= n) {
                throw ValidationError("element " + std::to_string(e) + " references node " +
                                      std::to_string(v) + " outside [0, " + std::to_string(n) + ")");
            }
        }
        if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2]) {
            throw ValidationError("element " + std::to_string(e) + " has repeated vertices");
        }
    }

    auto topo = std::make_shared<MeshTopology>();
    topo->elements = std::move(elements);
    const auto& elems = topo->elements;

    std::map<std::pair<int, int>, int> edge_count;
    for (const auto& t : elems) {
        for (int k = 0; k < 3; ++k) {
            const int a = t[k];
            const int b = t[(k + 1) % 3];
            ++edge_count[{std::min(a, b), std::max(a, b)}];
        }
    }
    topo->boundary.assign(n_nodes, false);
    for (const auto& [edge, count] : edge_count) {
        if (count > 2) {
            throw TopologyError("edge (" + std::to_string(edge.first) + ", " +
                                  std::to_string(edge.second) + ") is shared by " +
                                  std::to_string(count) + " elements");
        }
        if (count == 1) {
            topo->boundary[edge.first] = true;
            topo->boundary[edge.second] = true;
        }
    }

    topo->incidence_offsets.assign(n_nodes + 1, 0);
    for (const auto& t : elems) {
        for (int v : t) ++topo->incidence_offsets[v + 1];
    }
    for (std::size_t i = 0; i < n_nodes; ++i) {
        topo->incidence_offsets[i + 1] += topo->incidence_offsets[i];
    }
    topo->incidence.resize(topo->incidence_offsets.back());
    std::vector<int> fill(topo->incidence_offsets.begin(), topo->incidence_offsets.end() - 1);
    for (std::size_t e = 0; e < elems.size(); ++e) {
        for (int v : elems[e]) topo->incidence[fill[v]++] = static_cast<int>(e);
    }
    return topo;
}

} // namespace detail

/*
 * Unstructured triangular mesh in the plane.
 *
 * Invariants enforced at construction: element indices in range with three
 * distinct vertices, every edge shared by at most two elements, every named
 * field has one value per node. A node is on the boundary iff it touches an
 * edge referenced by exactly one element.
 *
 * Orientation is not touched by the constructor; use orient_ccw() once when a
 * mesh enters the program (loaders and generators do this). After that, a
 * non-positive signed area means the element is tangled.
 */
class Mesh {
public:
    Mesh() : topo_(detail::build_topology(0, {})) {}

    Mesh(std::vector<Vec2> nodes, std::vector<Triangle> elements, FieldMap fields = {})
        : nodes_(std::move(nodes)),
          topo_(detail::build_topology(nodes_.size(), std::move(elements))) {
        for (auto& [name, values] : fields) set_field(name, std::move(values));
    }

    /// Reorders each element's vertices so its signed area is non-negative.
    void orient_ccw() {
        auto topo = std::make_shared<MeshTopology>(*topo_);
        for (auto& t : topo->elements) {
            if (signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]) < 0.0) std::swap(t[1], t[2]);
        }
        topo_ = std::move(topo);
    }

    std::size_t num_nodes() const noexcept { return nodes_.size(); }
    std::size_t num_elements() const noexcept { return topo_->elements.size(); }

    const std::vector<Vec2>& nodes() const noexcept { return nodes_; }
    const Vec2& node(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
    const std::vector<Triangle>& elements() const noexcept { return topo_->elements; }
    const Triangle& element(int e) const { return topo_->elements[static_cast<std::size_t>(e)]; }
    const std::vector<bool>& boundary_mask() const noexcept { return topo_->boundary; }
    bool is_boundary(int i) const { return topo_->boundary[static_cast<std::size_t>(i)]; }

    /// Elements containing node i, ascending.
    std::span<const int> incident_elements(int i) const {
        const auto b = static_cast<std::size_t>(topo_->incidence_offsets[i]);
        const auto e = static_cast<std::size_t>(topo_->incidence_offsets[i + 1]);
        return {topo_->incidence.data() + b, e - b};
    }

    double element_area(int e) const {
        const auto& t = element(e);
        return signed_area(nodes_[t[0]], nodes_[t[1]], nodes_[t[2]]);
    }

    std::vector<int> interior_nodes() const {
        std::vector<int> out;
        for (std::size_t i = 0; i < nodes_.size(); ++i) {
            if (!topo_->boundary[i]) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    const FieldMap& fields() const noexcept { return fields_; }
    bool has_field(const std::string& name) const { return fields_.count(name) != 0; }

    const std::vector<double>& field(const std::string& name) const {
        auto it = fields_.find(name);
        if (it == fields_.end()) throw ValidationError("mesh has no field named '" + name + "'");
        return it->second;
    }

    void set_field(const std::string& name, std::vector<double> values) {
        if (values.size() != nodes_.size()) {
            throw ValidationError("field '" + name + "' has " + std::to_string(values.size()) +
                                  " entries, mesh has " + std::to_string(nodes_.size()) + " nodes");
        }
        fields_[name] = std::move(values);
    }

    void remove_field(const std::string& name) { fields_.erase(name); }

    /// Same connectivity, new node positions. Fields are carried over as-is.
    Mesh with_nodes(std::vector<Vec2> nodes) const {
        if (nodes.size() != nodes_.size()) {
            throw ValidationError("with_nodes: node count mismatch");
        }
        Mesh out;
        out.nodes_ = std::move(nodes);
        out.topo_ = topo_;
        out.fields_ = fields_;
        return out;
    }

    bool same_topology(const Mesh& other) const noexcept { return topo_ == other.topo_; }

    friend bool operator==(const Mesh& a, const Mesh& b) {
        return a.nodes_ == b.nodes_ && a.topo_->elements == b.topo_->elements &&
               a.topo_->boundary == b.topo_->boundary && a.fields_ == b.fields_;
    }

private:
    std::vector<Vec2> nodes_;
    std::shared_ptr<const MeshTopology> topo_;
    FieldMap fields_;
};

/// Fraction of elements whose signed area is <= 0.
inline double tangling_ratio(const Mesh& mesh) {
    if (mesh.num_elements() == 0) return 0.0;
    std::size_t bad = 0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.element_area(static_cast<int>(e)) <= 0.0) ++bad;
    }
    return static_cast<double>(bad) / static_cast<double>(mesh.num_elements());
}

inline bool is_valid(const Mesh& mesh) {
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        if (mesh.element_area(static_cast<int>(e)) <= 0.0) return false;
    }
    return true;
}

inline double total_area(const Mesh& mesh) {
    double sum = 0.0;
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) sum += mesh.element_area(static_cast<int>(e));
    return sum;
}

/// Shortest edge among the elements incident to node i.
inline double shortest_incident_edge(const Mesh& mesh, int i) {
    double best = std::numeric_limits<double>::infinity();
    for (int e : mesh.incident_elements(i)) {
        const auto& t = mesh.element(e);
        for (int v : t) {
            if (v != i) best = std::min(best, norm(mesh.node(v) - mesh.node(i)));
        }
    }
    return best;
}

} // namespace meshmove
