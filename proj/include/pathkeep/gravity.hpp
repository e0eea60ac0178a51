#pragma once

#include "pathkeep/shape.hpp"
#include "pathkeep/types.hpp"

#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace pathkeep {

/// Field point lies on a face, edge or vertex of a polyhedron, where the
/// closed-form potential terms are singular.
class SingularFieldPointError : public Error {
public:
    using Error::Error;
};

/// -mu r / |r|^3. Throws DegenerateStateError for r = 0.
Vec3 point_mass_accel(double mu, const Vec3& r);
double point_mass_potential(double mu, const Vec3& r);

struct GravitySample {
    Vec3 accel = Vec3::Zero();
    double potential = 0.0;
    bool interior = false;
};

/// Constant-density polyhedron field using the edge/face dyad formulation.
/// Edge and face dyads are precomputed; evaluation is const and reentrant.
class PolyhedronGravity {
public:
    PolyhedronGravity(std::shared_ptr<const PolyhedronShape> shape, double density, double G = kDefaultG);

    /// Acceleration and potential at `r` (body-fixed). Interior points are
    /// evaluated and flagged; points on the surface throw.
    GravitySample evaluate(const Vec3& r) const;
    Vec3 accel(const Vec3& r) const { return evaluate(r).accel; }
    double potential(const Vec3& r) const { return evaluate(r).potential; }

    /// Laplacian of the potential divided by G*density: minus the sum of
    /// signed face solid angles. 0 outside, -4 pi inside.
    double laplacian(const Vec3& r) const;

    double mu() const noexcept { return mu_; }
    double density() const noexcept { return density_; }
    const PolyhedronShape& shape() const noexcept { return *shape_; }
    std::shared_ptr<const PolyhedronShape> shape_ptr() const noexcept { return shape_; }

private:
    struct EdgeTerm {
        std::int32_t v0, v1;
        Mat3 dyad;
    };
    struct FaceTerm {
        std::int32_t v0, v1, v2;
        Mat3 dyad;
    };

    double face_solid_angle(const FaceTerm& f, const Vec3& r) const;

    std::shared_ptr<const PolyhedronShape> shape_;
    double density_;
    double G_;
    double mu_;
    double length_scale_;
    std::vector<EdgeTerm> edges_;
    std::vector<FaceTerm> faces_;
};

/// Total solid angle form used by tests and the CLI oracle; see
/// PolyhedronGravity::laplacian.
double polyhedron_laplacian(const PolyhedronShape& shape, const Vec3& r);

inline constexpr int kMaxHarmonicDegree = 16;

/// Unnormalized spherical-harmonic gravity model. Legendre functions carry
/// no Condon-Shortley phase, so P11(sin phi) = cos phi.
struct HarmonicsModel {
    double mu = 0.0;
    double ref_radius = 1.0;
    int degree = 0;
    /// Row-major triangular storage, index(n, m) = n(n+1)/2 + m.
    std::vector<double> C;
    std::vector<double> S;

    static HarmonicsModel zero(double mu, double ref_radius, int degree);
    static std::size_t index(int n, int m) { return static_cast<std::size_t>(n * (n + 1) / 2 + m); }

    double c(int n, int m) const { return C[index(n, m)]; }
    double s(int n, int m) const { return S[index(n, m)]; }
    double& c(int n, int m) { return C[index(n, m)]; }
    double& s(int n, int m) { return S[index(n, m)]; }

    /// Copy truncated to a lower degree.
    HarmonicsModel truncated(int max_degree) const;
};

/// Factor N_nm with Cbar_nm = C_nm / N_nm for fully normalized coefficients.
double harmonic_normalization(int n, int m);

/// Coefficients of the exterior field of a constant-density polyhedron,
/// obtained by exact integration of solid harmonics over the tetrahedra
/// spanned by the origin and each face. The shape should already be in
/// its body frame (origin at the center of mass).
HarmonicsModel harmonics_from_polyhedron(const PolyhedronShape& shape, double density, int degree,
                                         double ref_radius, double G = kDefaultG);

Vec3 harmonics_accel(const HarmonicsModel& model, const Vec3& r);
double harmonics_potential(const HarmonicsModel& model, const Vec3& r);

/// "n m C S" lines. '#' lines are comments; "# mu <v>" and
/// "# ref_radius <v>" headers are honoured when present. When `normalized`
/// is true the file values are converted to unnormalized form.
HarmonicsModel parse_harmonics(std::string_view text, double mu, double ref_radius, bool normalized = false);
HarmonicsModel load_harmonics_file(const std::string& path, double mu, double ref_radius, bool normalized = false);
std::string write_harmonics(const HarmonicsModel& model);

struct PointMassField {
    double mu;
};

struct PolyhedronField {
    std::shared_ptr<const PolyhedronGravity> model;
};

struct HarmonicsField {
    std::shared_ptr<const HarmonicsModel> model;
};

/// Body-fixed gravity field: exactly one of the three models.
class GravityField {
public:
    using Variant = std::variant<PointMassField, PolyhedronField, HarmonicsField>;

    explicit GravityField(Variant v) : field_(std::move(v)) {}

    static GravityField point_mass(double mu) { return GravityField(PointMassField{mu}); }
    static GravityField polyhedron(std::shared_ptr<const PolyhedronShape> shape, double density,
                                   double G = kDefaultG);
    static GravityField harmonics(HarmonicsModel model);

    GravitySample evaluate(const Vec3& r_body) const;
    Vec3 accel(const Vec3& r_body) const;
    double potential(const Vec3& r_body) const { return evaluate(r_body).potential; }
    double mu() const noexcept;

    bool is_point_mass() const noexcept { return std::holds_alternative<PointMassField>(field_); }
    const Variant& variant() const noexcept { return field_; }
    std::string kind() const;

private:
    Variant field_;
};

}  // namespace pathkeep
