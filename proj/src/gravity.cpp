#include "pathkeep/gravity.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace pathkeep {

Vec3 point_mass_accel(double mu, const Vec3& r) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw DegenerateStateError("point-mass acceleration at zero radius");
    return -mu / (rn * rn * rn) * r;
}

double point_mass_potential(double mu, const Vec3& r) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw DegenerateStateError("point-mass potential at zero radius");
    return mu / rn;
}

// ---------------------------------------------------------------------------
// Polyhedron

PolyhedronGravity::PolyhedronGravity(std::shared_ptr<const PolyhedronShape> shape, double density, double G)
    : shape_(std::move(shape)), density_(density), G_(G) {
    if (!shape_) throw Error("polyhedron gravity needs a shape");
    if (!(density_ > 0.0)) throw Error("density must be positive");
    mu_ = G_ * density_ * signed_volume(*shape_);
    length_scale_ = shape_->circumscribing_radius();

    const auto& v = shape_->vertices();
    std::vector<Vec3> normals(shape_->face_count());
    faces_.reserve(shape_->face_count());
    for (std::size_t f = 0; f < shape_->face_count(); ++f) {
        normals[f] = shape_->face_normal(f);
        const auto& face = shape_->faces()[f];
        faces_.push_back(FaceTerm{face[0], face[1], face[2], normals[f] * normals[f].transpose()});
    }
    edges_.reserve(shape_->edge_count());
    for (const Edge& e : shape_->edges()) {
        const Vec3 dir = v[e.v1] - v[e.v0];
        // Edge normals lie in the face plane and point away from the face.
        const Vec3& na = normals[e.face_a];
        const Vec3& nb = normals[e.face_b];
        const Vec3 ea = dir.cross(na).normalized();
        const Vec3 eb = (-dir).cross(nb).normalized();
        edges_.push_back(EdgeTerm{e.v0, e.v1, na * ea.transpose() + nb * eb.transpose()});
    }
}

double PolyhedronGravity::face_solid_angle(const FaceTerm& f, const Vec3& r) const {
    const auto& v = shape_->vertices();
    const Vec3 r1 = v[f.v0] - r;
    const Vec3 r2 = v[f.v1] - r;
    const Vec3 r3 = v[f.v2] - r;
    const double l1 = r1.norm(), l2 = r2.norm(), l3 = r3.norm();
    const double num = r1.dot(r2.cross(r3));
    const double den = l1 * l2 * l3 + l1 * r2.dot(r3) + l2 * r3.dot(r1) + l3 * r1.dot(r2);
    if (std::abs(num) <= 1e-13 * l1 * l2 * l3 && den <= 0.0) {
        throw SingularFieldPointError("field point lies on a face of the polyhedron");
    }
    return 2.0 * std::atan2(num, den);
}

GravitySample PolyhedronGravity::evaluate(const Vec3& r) const {
    const auto& v = shape_->vertices();
    Vec3 edge_sum = Vec3::Zero();
    double edge_pot = 0.0;
    for (const EdgeTerm& e : edges_) {
        const Vec3 ra = v[e.v0] - r;
        const Vec3 rb = v[e.v1] - r;
        const double a = ra.norm();
        const double b = rb.norm();
        const double len = (v[e.v1] - v[e.v0]).norm();
        const double gap = a + b - len;
        if (gap <= 1e-12 * len) throw SingularFieldPointError("field point lies on a polyhedron edge");
        const double L = std::log((a + b + len) / gap);
        const Vec3 Er = e.dyad * ra;
        edge_sum += L * Er;
        edge_pot += L * ra.dot(Er);
    }
    Vec3 face_sum = Vec3::Zero();
    double face_pot = 0.0;
    double omega_total = 0.0;
    for (const FaceTerm& f : faces_) {
        const double omega = face_solid_angle(f, r);
        const Vec3 rf = v[f.v0] - r;
        const Vec3 Fr = f.dyad * rf;
        face_sum += omega * Fr;
        face_pot += omega * rf.dot(Fr);
        omega_total += omega;
    }
    const double gr = G_ * density_;
    GravitySample out;
    out.accel = gr * (face_sum - edge_sum);
    out.potential = 0.5 * gr * (edge_pot - face_pot);
    out.interior = omega_total > kTwoPi;
    return out;
}

double PolyhedronGravity::laplacian(const Vec3& r) const {
    double total = 0.0;
    for (const FaceTerm& f : faces_) total += face_solid_angle(f, r);
    return -total;
}

double polyhedron_laplacian(const PolyhedronShape& shape, const Vec3& r) {
    const auto& v = shape.vertices();
    double total = 0.0;
    for (const auto& f : shape.faces()) {
        const Vec3 r1 = v[f[0]] - r;
        const Vec3 r2 = v[f[1]] - r;
        const Vec3 r3 = v[f[2]] - r;
        const double l1 = r1.norm(), l2 = r2.norm(), l3 = r3.norm();
        const double num = r1.dot(r2.cross(r3));
        const double den = l1 * l2 * l3 + l1 * r2.dot(r3) + l2 * r3.dot(r1) + l3 * r1.dot(r2);
        if ((std::abs(num) <= 1e-13 * l1 * l2 * l3 && den <= 0.0) || l1 == 0.0 || l2 == 0.0 || l3 == 0.0) {
            throw SingularFieldPointError("field point lies on the polyhedron surface");
        }
        total += 2.0 * std::atan2(num, den);
    }
    return -total;
}

// ---------------------------------------------------------------------------
// Spherical harmonics

HarmonicsModel HarmonicsModel::zero(double mu, double ref_radius, int degree) {
    if (degree < 0 || degree > kMaxHarmonicDegree) {
        throw Error("harmonic degree " + std::to_string(degree) + " outside [0, " +
                    std::to_string(kMaxHarmonicDegree) + "]");
    }
    if (!(ref_radius > 0.0)) throw Error("reference radius must be positive");
    HarmonicsModel m;
    m.mu = mu;
    m.ref_radius = ref_radius;
    m.degree = degree;
    const std::size_t n = index(degree, degree) + 1;
    m.C.assign(n, 0.0);
    m.S.assign(n, 0.0);
    m.C[0] = 1.0;
    return m;
}

HarmonicsModel HarmonicsModel::truncated(int max_degree) const {
    HarmonicsModel out = zero(mu, ref_radius, std::min(max_degree, degree));
    for (int n = 0; n <= out.degree; ++n) {
        for (int m = 0; m <= n; ++m) {
            out.c(n, m) = c(n, m);
            out.s(n, m) = s(n, m);
        }
    }
    return out;
}

double harmonic_normalization(int n, int m) {
    // sqrt((2 - delta_m0)(2n + 1)(n - m)! / (n + m)!)
    double ratio = 1.0;
    for (int k = n - m + 1; k <= n + m; ++k) ratio /= k;
    return std::sqrt((m == 0 ? 1.0 : 2.0) * (2 * n + 1) * ratio);
}

namespace {

struct GaussRule {
    std::vector<double> nodes;    // on [0, 1]
    std::vector<double> weights;  // sum to 1
};

GaussRule gauss_legendre_unit(int k) {
    GaussRule rule;
    rule.nodes.resize(k);
    rule.weights.resize(k);
    for (int i = 0; i < k; ++i) {
        double x = std::cos(kPi * (i + 0.75) / (k + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int j = 2; j <= k; ++j) {
                const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
                p0 = p1;
                p1 = p2;
            }
            dp = k * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        rule.nodes[i] = 0.5 * (1.0 - x);
        rule.weights[i] = 1.0 / ((1.0 - x * x) * dp * dp);  // 2/((1-x^2)P'^2) mapped to [0,1]
    }
    return rule;
}

// r^n P_nm(sin phi) {cos, sin}(m lambda) for n <= N at a nonzero point.
void solid_harmonics(const Vec3& p, int N, std::vector<double>& re, std::vector<double>& im) {
    const double r = p.norm();
    const double rxy = std::hypot(p.x(), p.y());
    const double sphi = p.z() / r;
    const double cphi = rxy / r;
    const double lon = std::atan2(p.y(), p.x());
    std::vector<double> P(HarmonicsModel::index(N, N) + 1, 0.0);
    auto at = [&](int n, int m) -> double& { return P[HarmonicsModel::index(n, m)]; };
    at(0, 0) = 1.0;
    for (int m = 0; m <= N; ++m) {
        if (m > 0) at(m, m) = (2 * m - 1) * cphi * at(m - 1, m - 1);
        if (m + 1 <= N) at(m + 1, m) = (2 * m + 1) * sphi * at(m, m);
        for (int n = m + 2; n <= N; ++n) {
            at(n, m) = ((2 * n - 1) * sphi * at(n - 1, m) - (n + m - 1) * at(n - 2, m)) / (n - m);
        }
    }
    double rn = 1.0;
    for (int n = 0; n <= N; ++n) {
        for (int m = 0; m <= n; ++m) {
            const std::size_t k = HarmonicsModel::index(n, m);
            re[k] = rn * P[k] * std::cos(m * lon);
            im[k] = rn * P[k] * std::sin(m * lon);
        }
        rn *= r;
    }
}

}  // namespace

HarmonicsModel harmonics_from_polyhedron(const PolyhedronShape& shape, double density, int degree,
                                         double ref_radius, double G) {
    HarmonicsModel model = HarmonicsModel::zero(0.0, ref_radius, degree);
    if (!(density > 0.0)) throw Error("density must be positive");
    const double volume = signed_volume(shape);
    const double mass = density * volume;
    model.mu = G * mass;

    // Each origin-apex tetrahedron is swept as t * p(a, b), t in [0, 1], over
    // its base triangle. For a degree-n homogeneous integrand the t integral
    // is 1/(n + 3); the base is integrated exactly with a collapsed
    // Gauss-Legendre product rule.
    const int k = degree / 2 + 2;
    const GaussRule g = gauss_legendre_unit(k);
    const std::size_t ncoef = HarmonicsModel::index(degree, degree) + 1;
    std::vector<double> int_re(ncoef, 0.0), int_im(ncoef, 0.0);
    std::vector<double> re(ncoef), im(ncoef);
    const auto& v = shape.vertices();
    for (const auto& f : shape.faces()) {
        const Vec3& p1 = v[f[0]];
        const Vec3& p2 = v[f[1]];
        const Vec3& p3 = v[f[2]];
        const double det = p1.dot(p2.cross(p3));
        std::vector<double> face_re(ncoef, 0.0), face_im(ncoef, 0.0);
        for (int i = 0; i < k; ++i) {
            const double u = g.nodes[i];
            for (int j = 0; j < k; ++j) {
                const double w = g.nodes[j];
                const double a = u;
                const double b = (1.0 - u) * w;
                const double wt = g.weights[i] * g.weights[j] * (1.0 - u);
                const Vec3 p = p1 + a * (p2 - p1) + b * (p3 - p1);
                solid_harmonics(p, degree, re, im);
                for (std::size_t c = 0; c < ncoef; ++c) {
                    face_re[c] += wt * re[c];
                    face_im[c] += wt * im[c];
                }
            }
        }
        for (int n = 0; n <= degree; ++n) {
            for (int m = 0; m <= n; ++m) {
                const std::size_t c = HarmonicsModel::index(n, m);
                int_re[c] += det / (n + 3) * face_re[c];
                int_im[c] += det / (n + 3) * face_im[c];
            }
        }
    }
    for (int n = 0; n <= degree; ++n) {
        const double rn = std::pow(ref_radius, n);
        for (int m = 0; m <= n; ++m) {
            double ratio = 1.0;  // (n - m)! / (n + m)!
            for (int q = n - m + 1; q <= n + m; ++q) ratio /= q;
            const double factor = (m == 0 ? 1.0 : 2.0) * ratio / (volume * rn);
            const std::size_t c = HarmonicsModel::index(n, m);
            model.C[c] = factor * int_re[c];
            model.S[c] = m == 0 ? 0.0 : factor * int_im[c];
        }
    }
    return model;
}

namespace {

// V_nm = (R/r)^{n+1} P_nm(sin phi) cos(m lambda), W_nm likewise with sin,
// for n, m <= nmax.
struct VW {
    static constexpr int kDim = kMaxHarmonicDegree + 2;
    std::array<double, kDim * kDim> V{};
    std::array<double, kDim * kDim> W{};
    double& v(int n, int m) { return V[n * kDim + m]; }
    double& w(int n, int m) { return W[n * kDim + m]; }
};

VW vw_recursion(const HarmonicsModel& model, const Vec3& r, int nmax) {
    const double r2 = r.squaredNorm();
    if (!(r2 > 0.0)) throw DegenerateStateError("harmonic field evaluated at zero radius");
    const double R = model.ref_radius;
    const double x0 = R * r.x() / r2;
    const double y0 = R * r.y() / r2;
    const double z0 = R * r.z() / r2;
    const double rho = R * R / r2;
    VW t;
    t.v(0, 0) = R / std::sqrt(r2);
    t.w(0, 0) = 0.0;
    for (int m = 0; m <= nmax; ++m) {
        if (m > 0) {
            t.v(m, m) = (2 * m - 1) * (x0 * t.v(m - 1, m - 1) - y0 * t.w(m - 1, m - 1));
            t.w(m, m) = (2 * m - 1) * (x0 * t.w(m - 1, m - 1) + y0 * t.v(m - 1, m - 1));
        }
        if (m + 1 <= nmax) {
            t.v(m + 1, m) = (2 * m + 1) * z0 * t.v(m, m);
            t.w(m + 1, m) = (2 * m + 1) * z0 * t.w(m, m);
        }
        for (int n = m + 2; n <= nmax; ++n) {
            t.v(n, m) = ((2 * n - 1) * z0 * t.v(n - 1, m) - (n + m - 1) * rho * t.v(n - 2, m)) / (n - m);
            t.w(n, m) = ((2 * n - 1) * z0 * t.w(n - 1, m) - (n + m - 1) * rho * t.w(n - 2, m)) / (n - m);
        }
    }
    return t;
}

}  // namespace

Vec3 harmonics_accel(const HarmonicsModel& model, const Vec3& r) {
    const int N = model.degree;
    VW t = vw_recursion(model, r, N + 1);
    double ax = 0.0, ay = 0.0, az = 0.0;
    for (int n = 0; n <= N; ++n) {
        // m = 0 terms
        {
            const double C = model.c(n, 0);
            const double S = model.s(n, 0);
            ax -= C * t.v(n + 1, 1);
            ay -= C * t.w(n + 1, 1);
            az += (n + 1) * (-C * t.v(n + 1, 0) - S * t.w(n + 1, 0));
        }
        for (int m = 1; m <= n; ++m) {
            const double C = model.c(n, m);
            const double S = model.s(n, m);
            const double fac = 0.5 * (n - m + 1) * (n - m + 2);
            ax += 0.5 * (-C * t.v(n + 1, m + 1) - S * t.w(n + 1, m + 1)) +
                  fac * (C * t.v(n + 1, m - 1) + S * t.w(n + 1, m - 1));
            ay += 0.5 * (-C * t.w(n + 1, m + 1) + S * t.v(n + 1, m + 1)) +
                  fac * (-C * t.w(n + 1, m - 1) + S * t.v(n + 1, m - 1));
            az += (n - m + 1) * (-C * t.v(n + 1, m) - S * t.w(n + 1, m));
        }
    }
    const double scale = model.mu / (model.ref_radius * model.ref_radius);
    return scale * Vec3(ax, ay, az);
}

double harmonics_potential(const HarmonicsModel& model, const Vec3& r) {
    const int N = model.degree;
    VW t = vw_recursion(model, r, N);
    double sum = 0.0;
    for (int n = 0; n <= N; ++n) {
        for (int m = 0; m <= n; ++m) sum += model.c(n, m) * t.v(n, m) + model.s(n, m) * t.w(n, m);
    }
    return model.mu / model.ref_radius * sum;
}

HarmonicsModel parse_harmonics(std::string_view text, double mu, double ref_radius, bool normalized) {
    struct Row {
        int n, m;
        double c, s;
    };
    std::vector<Row> rows;
    int max_n = 0;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string first;
        if (!(ls >> first)) continue;
        if (first[0] == '#') {
            std::string key;
            double value = 0.0;
            if (ls >> key >> value) {
                if (key == "mu") mu = value;
                else if (key == "ref_radius") ref_radius = value;
            }
            continue;
        }
        Row row{};
        std::istringstream rs(line);
        if (!(rs >> row.n >> row.m >> row.c >> row.s)) {
            throw Error("harmonics line " + std::to_string(line_no) + ": expected 'n m C S'");
        }
        if (row.n < 0 || row.m < 0 || row.m > row.n) {
            throw Error("harmonics line " + std::to_string(line_no) + ": invalid degree/order");
        }
        if (row.n > kMaxHarmonicDegree) {
            throw Error("harmonics line " + std::to_string(line_no) + ": degree exceeds " +
                        std::to_string(kMaxHarmonicDegree));
        }
        max_n = std::max(max_n, row.n);
        rows.push_back(row);
    }
    HarmonicsModel model = HarmonicsModel::zero(mu, ref_radius, max_n);
    for (const Row& row : rows) {
        const double f = normalized ? harmonic_normalization(row.n, row.m) : 1.0;
        model.c(row.n, row.m) = f * row.c;
        model.s(row.n, row.m) = row.m == 0 ? 0.0 : f * row.s;
    }
    return model;
}

HarmonicsModel load_harmonics_file(const std::string& path, double mu, double ref_radius, bool normalized) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open harmonics file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_harmonics(buf.str(), mu, ref_radius, normalized);
}

std::string write_harmonics(const HarmonicsModel& model) {
    std::ostringstream out;
    out << std::setprecision(17);
    out << "# mu " << model.mu << '\n';
    out << "# ref_radius " << model.ref_radius << '\n';
    for (int n = 0; n <= model.degree; ++n) {
        for (int m = 0; m <= n; ++m) out << n << ' ' << m << ' ' << model.c(n, m) << ' ' << model.s(n, m) << '\n';
    }
    return out.str();
}

// ---------------------------------------------------------------------------

GravityField GravityField::polyhedron(std::shared_ptr<const PolyhedronShape> shape, double density, double G) {
    return GravityField(PolyhedronField{std::make_shared<const PolyhedronGravity>(std::move(shape), density, G)});
}

GravityField GravityField::harmonics(HarmonicsModel model) {
    return GravityField(HarmonicsField{std::make_shared<const HarmonicsModel>(std::move(model))});
}

GravitySample GravityField::evaluate(const Vec3& r_body) const {
    struct Visitor {
        const Vec3& r;
        GravitySample operator()(const PointMassField& f) const {
            return {point_mass_accel(f.mu, r), point_mass_potential(f.mu, r), false};
        }
        GravitySample operator()(const PolyhedronField& f) const { return f.model->evaluate(r); }
        GravitySample operator()(const HarmonicsField& f) const {
            return {harmonics_accel(*f.model, r), harmonics_potential(*f.model, r), false};
        }
    };
    return std::visit(Visitor{r_body}, field_);
}

Vec3 GravityField::accel(const Vec3& r_body) const {
    struct Visitor {
        const Vec3& r;
        Vec3 operator()(const PointMassField& f) const { return point_mass_accel(f.mu, r); }
        Vec3 operator()(const PolyhedronField& f) const { return f.model->evaluate(r).accel; }
        Vec3 operator()(const HarmonicsField& f) const { return harmonics_accel(*f.model, r); }
    };
    return std::visit(Visitor{r_body}, field_);
}

double GravityField::mu() const noexcept {
    struct Visitor {
        double operator()(const PointMassField& f) const { return f.mu; }
        double operator()(const PolyhedronField& f) const { return f.model->mu(); }
        double operator()(const HarmonicsField& f) const { return f.model->mu; }
    };
    return std::visit(Visitor{}, field_);
}

std::string GravityField::kind() const {
    struct Visitor {
        std::string operator()(const PointMassField&) const { return "point-mass"; }
        std::string operator()(const PolyhedronField&) const { return "polyhedron"; }
        std::string operator()(const HarmonicsField&) const { return "harmonics"; }
    };
    return std::visit(Visitor{}, field_);
}

}  // namespace pathkeep
