#pragma once

#include "pathkeep/types.hpp"

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pathkeep {

enum class ShapeFormat { Obj, Pds };

/// Parse "obj" / "pds" (case-insensitive).
ShapeFormat parse_shape_format(std::string_view tag);
std::string to_string(ShapeFormat format);

enum class ShapeErrorKind {
    Malformed,           // unreadable token, missing block
    NonTriangular,       // a face with != 3 vertices
    IndexOutOfRange,     // face references a missing vertex
    NonWatertight,       // an edge not shared by exactly two faces
    InconsistentWinding, // an edge traversed twice in the same direction
    InvertedOrientation, // signed volume negative (normals point inward)
    Degenerate,          // zero volume
};

std::string to_string(ShapeErrorKind kind);

class ShapeError : public Error {
public:
    ShapeError(ShapeErrorKind kind, const std::string& what)
        : Error(to_string(kind) + ": " + what), kind_(kind) {}
    ShapeErrorKind kind() const noexcept { return kind_; }

private:
    ShapeErrorKind kind_;
};

using Face = std::array<std::int32_t, 3>;

/// An undirected edge with the two faces that share it. `face_a` traverses
/// the edge as v0 -> v1, `face_b` as v1 -> v0.
struct Edge {
    std::int32_t v0 = 0;
    std::int32_t v1 = 0;
    std::int32_t face_a = -1;
    std::int32_t face_b = -1;
};

/// Closed, outward-oriented triangulated surface (meters, body-fixed).
/// Construction validates the mesh and builds the edge table; instances are
/// immutable afterwards.
class PolyhedronShape {
public:
    PolyhedronShape(std::vector<Vec3> vertices, std::vector<Face> faces);

    const std::vector<Vec3>& vertices() const noexcept { return vertices_; }
    const std::vector<Face>& faces() const noexcept { return faces_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    std::size_t vertex_count() const noexcept { return vertices_.size(); }
    std::size_t face_count() const noexcept { return faces_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    /// V - E + F.
    long euler_characteristic() const noexcept;

    /// Largest vertex distance from the origin.
    double circumscribing_radius() const noexcept;

    /// Unit outward normal of face `f`.
    Vec3 face_normal(std::size_t f) const;

    /// Returns a copy with every vertex transformed as R * (v - offset).
    PolyhedronShape transformed(const Mat3& rotation, const Vec3& offset) const;

private:
    std::vector<Vec3> vertices_;
    std::vector<Face> faces_;
    std::vector<Edge> edges_;
};

/// Parse an ASCII shape model. `scale` multiplies every coordinate, so
/// km-denominated files are loaded with scale = 1000.
PolyhedronShape parse_shape(std::string_view text, ShapeFormat format, double scale = 1.0);
PolyhedronShape load_shape_file(const std::string& path, ShapeFormat format, double scale = 1.0);

std::string write_obj(const PolyhedronShape& shape);
std::string write_pds(const PolyhedronShape& shape);

/// Uniform-density mass properties.
struct MassProperties {
    double volume = 0.0;     // m^3
    double mass = 0.0;       // kg
    Vec3 centroid = Vec3::Zero();
    Mat3 inertia = Mat3::Zero();           // kg m^2, about the centroid
    Vec3 principal_moments = Vec3::Zero(); // ascending
    /// Columns are the principal axes expressed in the input frame; maps
    /// principal-frame coordinates to input-frame coordinates. det = +1.
    Mat3 principal_axes = Mat3::Identity();
};

/// Signed enclosed volume via the divergence theorem.
double signed_volume(const PolyhedronShape& shape);

MassProperties mass_properties(const PolyhedronShape& shape, double density);

/// Recenter on the center of mass and rotate onto the principal axes, with
/// moments ascending along x, y, z.
PolyhedronShape normalize_to_body_frame(const PolyhedronShape& shape, double density);

// Procedural meshes, used for test shapes and body stand-ins.
PolyhedronShape make_box(double lx, double ly, double lz);
/// Icosahedron refined `subdivisions` times and projected to a sphere;
/// 20 * 4^n faces.
PolyhedronShape make_icosphere(int subdivisions, double radius);
PolyhedronShape make_ellipsoid(double a, double b, double c, int subdivisions);

}  // namespace pathkeep
