#pragma once

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "meshmove/errors.hpp"
#include "meshmove/mesh.hpp"

namespace meshmove {

enum class MeshFormat { json, msh2 };

namespace detail {

inline std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << text;
    if (!out) throw Error("write failed for '" + path.string() + "'");
}

inline std::size_t line_of_offset(std::string_view text, std::size_t offset) {
    offset = std::min(offset, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

/// Shortest representation that parses back to the same double.
inline void append_double(std::string& out, double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

} // namespace detail

/// Builds a mesh from the JSON mesh schema already parsed into a document.
inline Mesh mesh_from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("nodes") || !doc.contains("elements")) {
        throw FormatError("mesh JSON needs an object with \"nodes\" and \"elements\"", 1);
    }
    std::vector<Vec2> nodes;
    std::vector<Triangle> elements;
    FieldMap fields;
    try {
        for (const auto& p : doc.at("nodes")) {
            if (!p.is_array() || p.size() != 2) throw ValidationError("node entries must be [x, y]");
            nodes.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        for (const auto& t : doc.at("elements")) {
            if (!t.is_array() || t.size() != 3) throw ValidationError("element entries must be [i, j, k]");
            elements.push_back({t[0].get<int>(), t[1].get<int>(), t[2].get<int>()});
        }
        if (doc.contains("fields")) {
            for (const auto& [name, values] : doc.at("fields").items()) {
                fields[name] = values.get<std::vector<double>>();
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("mesh JSON: ") + e.what());
    }
    Mesh mesh(std::move(nodes), std::move(elements), std::move(fields));
    mesh.orient_ccw();
    return mesh;
}

inline Mesh parse_mesh_json(std::string_view text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        // byte is 1-based and points just past the offending character.
        const std::size_t at = e.byte == 0 ? 0 : e.byte - 1;
        throw FormatError(e.what(), detail::line_of_offset(text, at));
    }
    return mesh_from_json(doc);
}

inline nlohmann::json mesh_to_json(const Mesh& mesh) {
    nlohmann::json doc = nlohmann::json::object();
    auto& nodes = doc["nodes"] = nlohmann::json::array();
    for (const auto& p : mesh.nodes()) nodes.push_back({p.x, p.y});
    auto& elems = doc["elements"] = nlohmann::json::array();
    for (const auto& t : mesh.elements()) elems.push_back({t[0], t[1], t[2]});
    if (!mesh.fields().empty()) {
        auto& fields = doc["fields"] = nlohmann::json::object();
        for (const auto& [name, values] : mesh.fields()) fields[name] = values;
    }
    return doc;
}

/// One node / element per line, shortest round-trip doubles. Byte-stable.
inline std::string format_mesh_json(const Mesh& mesh) {
    std::string out = "{\n  \"nodes\": [";
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        out += i ? ",\n    [" : "\n    [";
        detail::append_double(out, mesh.nodes()[i].x);
        out += ", ";
        detail::append_double(out, mesh.nodes()[i].y);
        out += "]";
    }
    out += "\n  ],\n  \"elements\": [";
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.elements()[e];
        out += e ? ",\n    [" : "\n    [";
        out += std::to_string(t[0]) + ", " + std::to_string(t[1]) + ", " + std::to_string(t[2]) + "]";
    }
    out += "\n  ]";
    if (!mesh.fields().empty()) {
        out += ",\n  \"fields\": {";
        bool first = true;
        for (const auto& [name, values] : mesh.fields()) {
            out += first ? "\n    " : ",\n    ";
            first = false;
            out += nlohmann::json(name).dump() + ": [";
            for (std::size_t i = 0; i < values.size(); ++i) {
                if (i) out += ", ";
                detail::append_double(out, values[i]);
            }
            out += "]";
        }
        out += "\n  }";
    }
    out += "\n}\n";
    return out;
}

/*
 * Gmsh MSH 2.2 ASCII subset: $Nodes and $Elements. Only type-2 (3-node
 * triangle) elements are kept; every other element type is skipped and
 * reported through `warnings`. Unknown sections are ignored. Node tags may
 * be arbitrary positive integers; they are renumbered 0..N-1 in file order.
 */
inline Mesh parse_mesh_msh2(std::string_view text, std::vector<std::string>* warnings = nullptr) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;

    auto next_line = [&](const char* expecting) -> std::string {
        if (!std::getline(in, line)) {
            throw FormatError(std::string("unexpected end of file, expecting ") + expecting, line_no + 1);
        }
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
    };

    std::vector<Vec2> nodes;
    std::unordered_map<long, int> tag_to_index;
    std::vector<Triangle> elements;
    std::map<int, std::size_t> skipped;
    bool saw_nodes = false;
    bool saw_elements = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == "$MeshFormat") {
            std::istringstream ls(next_line("mesh format header"));
            double version = 0.0;
            int file_type = -1;
            if (!(ls >> version >> file_type)) throw FormatError("malformed $MeshFormat header", line_no);
            if (version < 2.0 || version >= 3.0) {
                throw FormatError("unsupported MSH version " + std::to_string(version) + " (need 2.x)", line_no);
            }
            if (file_type != 0) throw FormatError("binary MSH files are not supported", line_no);
            if (next_line("$EndMeshFormat") != "$EndMeshFormat") throw FormatError("expected $EndMeshFormat", line_no);
        } else if (line == "$Nodes") {
            saw_nodes = true;
            long count = -1;
            {
                std::istringstream ls(next_line("node count"));
                if (!(ls >> count) || count < 0) throw FormatError("malformed node count", line_no);
            }
            for (long k = 0; k < count; ++k) {
                std::istringstream ls(next_line("node record"));
                long tag = 0;
                double x = 0, y = 0, z = 0;
                if (!(ls >> tag >> x >> y >> z)) throw FormatError("malformed node record", line_no);
                if (!tag_to_index.emplace(tag, static_cast<int>(nodes.size())).second) {
                    throw FormatError("duplicate node tag " + std::to_string(tag), line_no);
                }
                nodes.push_back({x, y});
            }
            if (next_line("$EndNodes") != "$EndNodes") throw FormatError("expected $EndNodes", line_no);
        } else if (line == "$Elements") {
            saw_elements = true;
            long count = -1;
            {
                std::istringstream ls(next_line("element count"));
                if (!(ls >> count) || count < 0) throw FormatError("malformed element count", line_no);
            }
            for (long k = 0; k < count; ++k) {
                std::istringstream ls(next_line("element record"));
                long tag = 0;
                int type = 0, ntags = 0;
                if (!(ls >> tag >> type >> ntags) || ntags < 0) throw FormatError("malformed element record", line_no);
                for (int t = 0; t < ntags; ++t) {
                    long dummy;
                    if (!(ls >> dummy)) throw FormatError("malformed element tags", line_no);
                }
                if (type != 2) {
                    ++skipped[type];
                    continue;
                }
                Triangle tri{};
                for (int v = 0; v < 3; ++v) {
                    long node_tag;
                    if (!(ls >> node_tag)) throw FormatError("triangle needs 3 node tags", line_no);
                    auto it = tag_to_index.find(node_tag);
                    if (it == tag_to_index.end()) {
                        throw ValidationError("element " + std::to_string(tag) + " (line " +
                                              std::to_string(line_no) + ") references unknown node tag " +
                                              std::to_string(node_tag));
                    }
                    tri[static_cast<std::size_t>(v)] = it->second;
                }
                elements.push_back(tri);
            }
            if (next_line("$EndElements") != "$EndElements") throw FormatError("expected $EndElements", line_no);
        } else if (line[0] == '$' && line.rfind("$End", 0) != 0) {
            const std::string end = "$End" + line.substr(1);
            do {
                next_line(end.c_str());
            } while (line != end);
        } else {
            throw FormatError("unexpected content '" + line + "'", line_no);
        }
    }
    if (!saw_nodes || !saw_elements) throw FormatError("missing $Nodes or $Elements section", line_no);
    if (warnings) {
        for (const auto& [type, n] : skipped) {
            warnings->push_back("skipped " + std::to_string(n) + " element(s) of type " + std::to_string(type));
        }
    }
    Mesh mesh(std::move(nodes), std::move(elements));
    mesh.orient_ccw();
    return mesh;
}

inline std::string format_mesh_msh2(const Mesh& mesh) {
    std::string out = "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$Nodes\n";
    out += std::to_string(mesh.num_nodes()) + "\n";
    for (std::size_t i = 0; i < mesh.num_nodes(); ++i) {
        out += std::to_string(i + 1) + " ";
        detail::append_double(out, mesh.nodes()[i].x);
        out += " ";
        detail::append_double(out, mesh.nodes()[i].y);
        out += " 0\n";
    }
    out += "$EndNodes\n$Elements\n" + std::to_string(mesh.num_elements()) + "\n";
    for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
        const auto& t = mesh.elements()[e];
        out += std::to_string(e + 1) + " 2 2 0 1 " + std::to_string(t[0] + 1) + " " +
               std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
    }
    out += "$EndElements\n";
    return out;
}

inline MeshFormat guess_mesh_format(const std::filesystem::path& path) {
    return path.extension() == ".msh" ? MeshFormat::msh2 : MeshFormat::json;
}

inline Mesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                      std::vector<std::string>* warnings = nullptr) {
    const std::string text = detail::read_text_file(path);
    return format == MeshFormat::json ? parse_mesh_json(text) : parse_mesh_msh2(text, warnings);
}

inline Mesh load_mesh(const std::filesystem::path& path, std::vector<std::string>* warnings = nullptr) {
    return load_mesh(path, guess_mesh_format(path), warnings);
}

inline void save_mesh(const Mesh& mesh, const std::filesystem::path& path,
                      MeshFormat format = MeshFormat::json) {
    detail::write_text_file(path, format == MeshFormat::json ? format_mesh_json(mesh) : format_mesh_msh2(mesh));
}

} // namespace meshmove
