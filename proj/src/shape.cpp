#include "pathkeep/shape.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <unordered_map>

namespace pathkeep {

namespace {

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(line.substr(i, j - i));
        i = j;
    }
    return out;
}

double to_double(std::string_view tok, std::size_t line_no) {
    // std::from_chars for double is not available on every toolchain we target.
    std::string s(tok);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0' || !std::isfinite(v)) {
        throw ShapeError(ShapeErrorKind::Malformed,
                         "line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

long to_long(std::string_view tok, std::size_t line_no) {
    long v = 0;
    const auto* first = tok.data();
    const auto* last = tok.data() + tok.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        throw ShapeError(ShapeErrorKind::Malformed,
                         "line " + std::to_string(line_no) + ": bad index '" + std::string(tok) + "'");
    }
    return v;
}

std::vector<std::pair<std::size_t, std::string_view>> content_lines(std::string_view text) {
    std::vector<std::pair<std::size_t, std::string_view>> out;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        ++line_no;
        std::string_view line = text.substr(pos, nl - pos);
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        if (!split_ws(line).empty()) out.emplace_back(line_no, line);
        pos = nl + 1;
    }
    return out;
}

void check_indices(const std::vector<Vec3>& vertices, const std::vector<Face>& faces) {
    const auto n = static_cast<std::int64_t>(vertices.size());
    for (std::size_t f = 0; f < faces.size(); ++f) {
        for (auto idx : faces[f]) {
            if (idx < 0 || idx >= n) {
                throw ShapeError(ShapeErrorKind::IndexOutOfRange,
                                 "face " + std::to_string(f) + " references vertex " +
                                     std::to_string(idx) + " of " + std::to_string(n));
            }
        }
    }
}

PolyhedronShape parse_obj(std::string_view text, double scale) {
    std::vector<Vec3> vertices;
    std::vector<Face> faces;
    for (auto [line_no, line] : content_lines(text)) {
        auto tok = split_ws(line);
        if (tok[0] == "v") {
            if (tok.size() < 4) {
                throw ShapeError(ShapeErrorKind::Malformed,
                                 "line " + std::to_string(line_no) + ": vertex needs 3 coordinates");
            }
            vertices.emplace_back(scale * to_double(tok[1], line_no), scale * to_double(tok[2], line_no),
                                  scale * to_double(tok[3], line_no));
        } else if (tok[0] == "f") {
            if (tok.size() != 4) {
                throw ShapeError(ShapeErrorKind::NonTriangular,
                                 "line " + std::to_string(line_no) + ": face has " +
                                     std::to_string(tok.size() - 1) + " vertices");
            }
            Face face{};
            for (int k = 0; k < 3; ++k) {
                std::string_view t = tok[k + 1];
                t = t.substr(0, t.find('/'));
                long idx = to_long(t, line_no);
                // OBJ indices are 1-based; negative values count back from the end.
                idx = idx < 0 ? static_cast<long>(vertices.size()) + idx : idx - 1;
                face[k] = static_cast<std::int32_t>(idx);
            }
            faces.push_back(face);
        }
    }
    check_indices(vertices, faces);
    return PolyhedronShape(std::move(vertices), std::move(faces));
}

PolyhedronShape parse_pds(std::string_view text, double scale) {
    const auto lines = content_lines(text);
    std::size_t cursor = 0;
    auto next = [&]() -> std::pair<std::size_t, std::vector<std::string_view>> {
        if (cursor >= lines.size()) {
            throw ShapeError(ShapeErrorKind::Malformed, "unexpected end of PDS table");
        }
        const auto& [no, line] = lines[cursor++];
        return {no, split_ws(line)};
    };

    auto [hdr_no, hdr] = next();
    const long nv = to_long(hdr[0], hdr_no);
    long nf = hdr.size() >= 2 ? to_long(hdr[1], hdr_no) : -1;
    if (nv <= 0) throw ShapeError(ShapeErrorKind::Malformed, "vertex count must be positive");

    std::vector<Vec3> vertices;
    vertices.reserve(static_cast<std::size_t>(nv));
    for (long i = 0; i < nv; ++i) {
        auto [no, tok] = next();
        // Rows are either "x y z" or "index x y z".
        const std::size_t off = tok.size() >= 4 ? 1 : 0;
        if (tok.size() < 3) {
            throw ShapeError(ShapeErrorKind::Malformed,
                             "line " + std::to_string(no) + ": vertex needs 3 coordinates");
        }
        vertices.emplace_back(scale * to_double(tok[off], no), scale * to_double(tok[off + 1], no),
                              scale * to_double(tok[off + 2], no));
    }
    if (nf < 0) {
        auto [no, tok] = next();
        nf = to_long(tok[0], no);
    }
    std::vector<Face> faces;
    faces.reserve(static_cast<std::size_t>(std::max(0L, nf)));
    for (long i = 0; i < nf; ++i) {
        auto [no, tok] = next();
        if (tok.size() != 3 && tok.size() != 4) {
            throw ShapeError(ShapeErrorKind::NonTriangular,
                             "line " + std::to_string(no) + ": facet row has " + std::to_string(tok.size()) +
                                 " fields");
        }
        const std::size_t off = tok.size() == 4 ? 1 : 0;
        Face face{};
        for (int k = 0; k < 3; ++k) face[k] = static_cast<std::int32_t>(to_long(tok[off + k], no) - 1);
        faces.push_back(face);
    }
    check_indices(vertices, faces);
    return PolyhedronShape(std::move(vertices), std::move(faces));
}

// Covariance-type second moments integral(x x^T dV) about the origin, plus
// the first moment and volume, via tetrahedra from the origin.
struct RawMoments {
    double volume = 0.0;
    Vec3 first = Vec3::Zero();
    Mat3 second = Mat3::Zero();
};

RawMoments raw_moments(const PolyhedronShape& shape) {
    RawMoments m;
    const auto& v = shape.vertices();
    for (const auto& f : shape.faces()) {
        const Vec3& a = v[f[0]];
        const Vec3& b = v[f[1]];
        const Vec3& c = v[f[2]];
        const double det = a.dot(b.cross(c));
        const Vec3 sum = a + b + c;
        m.volume += det / 6.0;
        m.first += det / 24.0 * sum;
        m.second += det / 120.0 * (a * a.transpose() + b * b.transpose() + c * c.transpose() + sum * sum.transpose());
    }
    return m;
}

}  // namespace

ShapeFormat parse_shape_format(std::string_view tag) {
    const std::string t = lower(tag);
    if (t == "obj") return ShapeFormat::Obj;
    if (t == "pds") return ShapeFormat::Pds;
    throw Error("unknown shape format '" + std::string(tag) + "' (expected obj or pds)");
}

std::string to_string(ShapeFormat format) { return format == ShapeFormat::Obj ? "obj" : "pds"; }

std::string to_string(ShapeErrorKind kind) {
    switch (kind) {
        case ShapeErrorKind::Malformed: return "malformed shape file";
        case ShapeErrorKind::NonTriangular: return "non-triangular face";
        case ShapeErrorKind::IndexOutOfRange: return "vertex index out of range";
        case ShapeErrorKind::NonWatertight: return "mesh is not watertight";
        case ShapeErrorKind::InconsistentWinding: return "inconsistent face winding";
        case ShapeErrorKind::InvertedOrientation: return "face normals point inward";
        case ShapeErrorKind::Degenerate: return "degenerate (zero-volume) shape";
    }
    return "shape error";
}

PolyhedronShape::PolyhedronShape(std::vector<Vec3> vertices, std::vector<Face> faces)
    : vertices_(std::move(vertices)), faces_(std::move(faces)) {
    if (vertices_.size() < 4 || faces_.size() < 4) {
        throw ShapeError(ShapeErrorKind::Degenerate, "a closed polyhedron needs at least 4 vertices and 4 faces");
    }
    check_indices(vertices_, faces_);

    std::unordered_map<std::uint64_t, std::size_t> lookup;
    lookup.reserve(faces_.size() * 2);
    edges_.reserve(faces_.size() * 3 / 2);
    for (std::size_t f = 0; f < faces_.size(); ++f) {
        const Face& face = faces_[f];
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw ShapeError(ShapeErrorKind::Degenerate, "face " + std::to_string(f) + " repeats a vertex");
        }
        for (int k = 0; k < 3; ++k) {
            const std::int32_t a = face[k];
            const std::int32_t b = face[(k + 1) % 3];
            const auto lo = static_cast<std::uint64_t>(std::min(a, b));
            const auto hi = static_cast<std::uint64_t>(std::max(a, b));
            const std::uint64_t key = (lo << 32) | hi;
            auto it = lookup.find(key);
            if (it == lookup.end()) {
                lookup.emplace(key, edges_.size());
                edges_.push_back(Edge{a, b, static_cast<std::int32_t>(f), -1});
                continue;
            }
            Edge& e = edges_[it->second];
            if (e.face_b >= 0) {
                throw ShapeError(ShapeErrorKind::NonWatertight,
                                 "edge (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                     ") shared by more than two faces");
            }
            if (e.v0 == a) {
                throw ShapeError(ShapeErrorKind::InconsistentWinding,
                                 "edge (" + std::to_string(lo) + ", " + std::to_string(hi) +
                                     ") traversed twice in the same direction");
            }
            e.face_b = static_cast<std::int32_t>(f);
        }
    }
    for (const Edge& e : edges_) {
        if (e.face_b < 0) {
            throw ShapeError(ShapeErrorKind::NonWatertight,
                             "edge (" + std::to_string(e.v0) + ", " + std::to_string(e.v1) + ") has only one face");
        }
    }
    const double vol = signed_volume(*this);
    const double scale = circumscribing_radius();
    if (!(std::abs(vol) > 1e-12 * scale * scale * scale)) {
        throw ShapeError(ShapeErrorKind::Degenerate, "enclosed volume is zero");
    }
    if (vol < 0.0) {
        throw ShapeError(ShapeErrorKind::InvertedOrientation, "signed volume is negative");
    }
}

long PolyhedronShape::euler_characteristic() const noexcept {
    return static_cast<long>(vertices_.size()) - static_cast<long>(edges_.size()) +
           static_cast<long>(faces_.size());
}

double PolyhedronShape::circumscribing_radius() const noexcept {
    double r = 0.0;
    for (const auto& v : vertices_) r = std::max(r, v.norm());
    return r;
}

Vec3 PolyhedronShape::face_normal(std::size_t f) const {
    const Face& face = faces_.at(f);
    const Vec3& a = vertices_[face[0]];
    const Vec3& b = vertices_[face[1]];
    const Vec3& c = vertices_[face[2]];
    return (b - a).cross(c - a).normalized();
}

PolyhedronShape PolyhedronShape::transformed(const Mat3& rotation, const Vec3& offset) const {
    std::vector<Vec3> out;
    out.reserve(vertices_.size());
    for (const auto& v : vertices_) out.push_back(rotation * (v - offset));
    return PolyhedronShape(std::move(out), faces_);
}

PolyhedronShape parse_shape(std::string_view text, ShapeFormat format, double scale) {
    if (!(scale > 0.0)) throw Error("shape scale must be positive");
    return format == ShapeFormat::Obj ? parse_obj(text, scale) : parse_pds(text, scale);
}

PolyhedronShape load_shape_file(const std::string& path, ShapeFormat format, double scale) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open shape file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_shape(buf.str(), format, scale);
}

std::string write_obj(const PolyhedronShape& shape) {
    std::ostringstream out;
    out << std::setprecision(17);
    for (const auto& v : shape.vertices()) out << "v " << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    for (const auto& f : shape.faces()) out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    return out.str();
}

std::string write_pds(const PolyhedronShape& shape) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << shape.vertex_count() << '\n';
    std::size_t i = 1;
    for (const auto& v : shape.vertices()) out << i++ << ' ' << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
    out << shape.face_count() << '\n';
    i = 1;
    for (const auto& f : shape.faces()) out << i++ << ' ' << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    return out.str();
}

double signed_volume(const PolyhedronShape& shape) {
    // (1/3) sum over faces of (face centroid . n_f) * area_f, with the area
    // vector taken from the cross product directly.
    double vol = 0.0;
    const auto& v = shape.vertices();
    for (const auto& f : shape.faces()) {
        const Vec3& a = v[f[0]];
        const Vec3& b = v[f[1]];
        const Vec3& c = v[f[2]];
        const Vec3 area_vec = 0.5 * (b - a).cross(c - a);
        vol += ((a + b + c) / 3.0).dot(area_vec) / 3.0;
    }
    return vol;
}

MassProperties mass_properties(const PolyhedronShape& shape, double density) {
    if (!(density > 0.0)) throw Error("density must be positive");
    const RawMoments raw = raw_moments(shape);
    if (!(raw.volume > 0.0)) throw ShapeError(ShapeErrorKind::Degenerate, "enclosed volume is zero");

    MassProperties mp;
    mp.volume = raw.volume;
    mp.mass = density * raw.volume;
    mp.centroid = raw.first / raw.volume;
    const Mat3 central = raw.second - raw.volume * mp.centroid * mp.centroid.transpose();
    mp.inertia = density * (central.trace() * Mat3::Identity() - central);
    mp.inertia = 0.5 * (mp.inertia + mp.inertia.transpose()).eval();

    const double scale = mp.inertia.diagonal().cwiseAbs().maxCoeff();
    const double off = std::max({std::abs(mp.inertia(0, 1)), std::abs(mp.inertia(0, 2)), std::abs(mp.inertia(1, 2))});
    Mat3 axes;
    Vec3 moments;
    if (off <= 1e-12 * scale) {
        // Already diagonal: a stable sort of the axes keeps degenerate
        // (e.g. cubic) bodies in their input orientation.
        std::array<int, 3> order{0, 1, 2};
        std::stable_sort(order.begin(), order.end(),
                         [&](int i, int j) { return mp.inertia(i, i) < mp.inertia(j, j); });
        axes.setZero();
        for (int k = 0; k < 3; ++k) {
            axes(order[k], k) = 1.0;
            moments[k] = mp.inertia(order[k], order[k]);
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Mat3> solver(mp.inertia);
        axes = solver.eigenvectors();
        moments = solver.eigenvalues();
    }
    for (int k = 0; k < 2; ++k) {
        if (axes(k, k) < 0.0) axes.col(k) *= -1.0;
    }
    axes.col(2) = axes.col(0).cross(axes.col(1));
    mp.principal_axes = axes;
    mp.principal_moments = moments;
    return mp;
}

PolyhedronShape normalize_to_body_frame(const PolyhedronShape& shape, double density) {
    const MassProperties mp = mass_properties(shape, density);
    return shape.transformed(mp.principal_axes.transpose(), mp.centroid);
}

PolyhedronShape make_box(double lx, double ly, double lz) {
    const double x = 0.5 * lx, y = 0.5 * ly, z = 0.5 * lz;
    std::vector<Vec3> v = {
        {-x, -y, -z}, {x, -y, -z}, {x, y, -z}, {-x, y, -z},
        {-x, -y, z},  {x, -y, z},  {x, y, z},  {-x, y, z},
    };
    std::vector<Face> f = {
        {0, 2, 1}, {0, 3, 2},  // bottom (-z)
        {4, 5, 6}, {4, 6, 7},  // top (+z)
        {0, 1, 5}, {0, 5, 4},  // -y
        {2, 3, 7}, {2, 7, 6},  // +y
        {1, 2, 6}, {1, 6, 5},  // +x
        {0, 4, 7}, {0, 7, 3},  // -x
    };
    return PolyhedronShape(std::move(v), std::move(f));
}

PolyhedronShape make_icosphere(int subdivisions, double radius) {
    if (subdivisions < 0 || subdivisions > 7) throw Error("icosphere subdivisions must be in [0, 7]");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<Vec3> v = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0},
        {0, -1, t}, {0, 1, t}, {0, -1, -t}, {0, 1, -t},
        {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& p : v) p.normalize();
    std::vector<Face> f = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };
    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            if (auto it = midpoint.find(key); it != midpoint.end()) return it->second;
            v.push_back((v[a] + v[b]).normalized());
            const int idx = static_cast<int>(v.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<Face> refined;
        refined.reserve(f.size() * 4);
        for (const auto& tri : f) {
            const int ab = mid(tri[0], tri[1]);
            const int bc = mid(tri[1], tri[2]);
            const int ca = mid(tri[2], tri[0]);
            refined.push_back({tri[0], ab, ca});
            refined.push_back({tri[1], bc, ab});
            refined.push_back({tri[2], ca, bc});
            refined.push_back({ab, bc, ca});
        }
        f = std::move(refined);
    }
    for (auto& p : v) p *= radius;
    return PolyhedronShape(std::move(v), std::move(f));
}

PolyhedronShape make_ellipsoid(double a, double b, double c, int subdivisions) {
    const PolyhedronShape unit = make_icosphere(subdivisions, 1.0);
    std::vector<Vec3> v;
    v.reserve(unit.vertex_count());
    for (const auto& p : unit.vertices()) v.emplace_back(a * p.x(), b * p.y(), c * p.z());
    return PolyhedronShape(std::move(v), unit.faces());
}

}  // namespace pathkeep
