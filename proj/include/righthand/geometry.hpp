#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "righthand/errors.hpp"

namespace righthand {

inline constexpr double pi = std::numbers::pi;

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

namespace detail {

// Squared distance between the segments [a0,a1] and [b0,b1]; any ambient
// dimension.  Closed-form critical point, clamped to the parameter square,
// then one coordinate-descent pass to settle boundary cases.
template <class V>
double segment_distance_sq(const V& a0, const V& a1, const V& b0, const V& b1) {
    const V u = a1 - a0, v = b1 - b0, w = a0 - b0;
    const double uu = u.squaredNorm(), vv = v.squaredNorm();
    const double uv = u.dot(v), uw = u.dot(w), vw = v.dot(w);
    double s = 0.0, r = 0.0;
    const double det = uu * vv - uv * uv;
    if (det > 1e-300) {
        s = std::clamp((uv * vw - vv * uw) / det, 0.0, 1.0);
        r = std::clamp((uu * vw - uv * uw) / det, 0.0, 1.0);
    } else if (vv > 1e-300) {
        r = std::clamp(vw / vv, 0.0, 1.0);
    }
    if (uu > 1e-300) s = std::clamp((r * uv - uw) / uu, 0.0, 1.0);
    if (vv > 1e-300) r = std::clamp((s * uv + vw) / vv, 0.0, 1.0);
    return (w + s * u - r * v).squaredNorm();
}

}  // namespace detail

// Point on the unit three-sphere, stored in ambient R^4 coordinates and
// renormalized on construction so downstream code can rely on |x| = 1.
struct PointS3 {
    Vec4 x;

    explicit PointS3(const Vec4& v) {
        const double n = v.norm();
        if (!(n > 1e-14))
            throw OutOfRangeParameter("cannot normalize near-zero vector onto S^3");
        x = v / n;
    }

    PointS3(double x1, double x2, double x3, double x4)
        : PointS3(Vec4(x1, x2, x3, x4)) {}
};

struct PointR3 {
    Vec3 x;

    explicit PointR3(const Vec3& v) : x(v) {}
    PointR3(double x1, double x2, double x3) : x(x1, x2, x3) {}
};

enum class Ambient { R3, S3 };

// Oriented polyline in R^3 or on S^3.  Closed curves do not repeat the first
// vertex; the closing edge is implicit.
class Polyline {
public:
    static Polyline open_r3(std::vector<Vec3> vs) {
        return Polyline(Ambient::R3, false, std::move(vs), {});
    }
    static Polyline closed_r3(std::vector<Vec3> vs) {
        return Polyline(Ambient::R3, true, std::move(vs), {});
    }
    static Polyline open_s3(std::vector<Vec4> vs) {
        return Polyline(Ambient::S3, false, {}, std::move(vs));
    }
    static Polyline closed_s3(std::vector<Vec4> vs) {
        return Polyline(Ambient::S3, true, {}, std::move(vs));
    }

    // Zero-length arc produced by joining a point to itself.  The one place a
    // single-vertex polyline is meaningful, so the factory is separate.
    static Polyline degenerate_s3(const Vec4& p) {
        Polyline c;
        c.ambient_ = Ambient::S3;
        c.closed_ = false;
        c.v4_.push_back(p.normalized());
        return c;
    }

    Ambient ambient() const { return ambient_; }
    bool closed() const { return closed_; }

    std::size_t size() const {
        return ambient_ == Ambient::R3 ? v3_.size() : v4_.size();
    }

    const Vec3& r3(std::size_t i) const { return v3_[i]; }
    const Vec4& s3(std::size_t i) const { return v4_[i]; }

    const std::vector<Vec3>& r3_vertices() const { return v3_; }
    const std::vector<Vec4>& s3_vertices() const { return v4_; }

    Polyline reversed() const {
        Polyline c(*this);
        std::reverse(c.v3_.begin(), c.v3_.end());
        std::reverse(c.v4_.begin(), c.v4_.end());
        return c;
    }

private:
    Polyline() = default;

    Polyline(Ambient amb, bool closed, std::vector<Vec3> v3, std::vector<Vec4> v4)
        : ambient_(amb), closed_(closed), v3_(std::move(v3)), v4_(std::move(v4)) {
        const std::size_t n = size();
        const std::size_t least = closed_ ? 3 : 2;
        if (n < least)
            throw OutOfRangeParameter("polyline needs at least " +
                                      std::to_string(least) + " vertices, got " +
                                      std::to_string(n));
        if (ambient_ == Ambient::S3)
            for (auto& v : v4_) v = v.normalized();
        for (std::size_t i = 0; i + 1 < n; ++i)
            if (vertex_gap(i, i + 1) == 0.0)
                throw OutOfRangeParameter("repeated consecutive vertex at index " +
                                          std::to_string(i));
        if (closed_ && vertex_gap(n - 1, 0) == 0.0)
            throw OutOfRangeParameter("closed polyline repeats its first vertex");
    }

    double vertex_gap(std::size_t i, std::size_t j) const {
        return ambient_ == Ambient::R3 ? (v3_[i] - v3_[j]).norm()
                                       : (v4_[i] - v4_[j]).norm();
    }

    Ambient ambient_ = Ambient::R3;
    bool closed_ = false;
    std::vector<Vec3> v3_;
    std::vector<Vec4> v4_;
};

// Chordal (straight-segment) length, including the closing edge when closed.
inline double length(const Polyline& c) {
    const std::size_t n = c.size();
    if (n < 2) return 0.0;
    double total = 0.0;
    if (c.ambient() == Ambient::R3) {
        for (std::size_t i = 0; i + 1 < n; ++i)
            total += (c.r3(i + 1) - c.r3(i)).norm();
        if (c.closed()) total += (c.r3(0) - c.r3(n - 1)).norm();
    } else {
        for (std::size_t i = 0; i + 1 < n; ++i)
            total += (c.s3(i + 1) - c.s3(i)).norm();
        if (c.closed()) total += (c.s3(0) - c.s3(n - 1)).norm();
    }
    return total;
}

// Great-circle angle between unit vectors, computed from the chord so it is
// well conditioned near angle 0.
inline double sphere_angle(const Vec4& a, const Vec4& b) {
    const double half_chord = 0.5 * (a - b).norm();
    return 2.0 * std::asin(std::min(1.0, half_chord));
}

// Rotation of R^4 taking u to v (both unit), acting in span{u,v} and fixing
// its orthogonal complement.  For antipodal u, v the plane is completed with
// the coordinate axis least aligned with u.
inline Mat4 rotation_taking(const Vec4& u, const Vec4& v) {
    const double c = std::clamp(u.dot(v), -1.0, 1.0);
    Vec4 w = v - c * u;  // component of v orthogonal to u
    const double wn = w.norm();
    if (wn > 1e-12) {
        w /= wn;
        const double s = wn;  // sin of the rotation angle, since |v| = 1
        // R = I + (c-1)(uu^T + ww^T) + s(wu^T - uw^T)
        Mat4 r = Mat4::Identity();
        r += (c - 1.0) * (u * u.transpose() + w * w.transpose());
        r += s * (w * u.transpose() - u * w.transpose());
        return r;
    }
    if (c > 0.0) return Mat4::Identity();
    // Antipodal: rotate by pi in a plane through u.
    int k = 0;
    for (int i = 1; i < 4; ++i)
        if (std::abs(u[i]) < std::abs(u[k])) k = i;
    Vec4 e = Vec4::Zero();
    e[k] = 1.0;
    w = (e - u.dot(e) * u).normalized();
    Mat4 r = Mat4::Identity();
    r -= 2.0 * (u * u.transpose() + w * w.transpose());
    return r;
}

// Stereographic chart from an arbitrary pole: rotate the pole to (0,0,0,1)
// with an orientation-preserving rotation, then apply the standard formula
// y_i = x_i / (1 - x_4).
inline Vec3 stereographic_project(const Vec4& p, const Vec4& pole) {
    const Vec4 pn = p.normalized();
    const Vec4 qn = pole.normalized();
    if ((pn - qn).norm() <= 1e-6)
        throw PoleCollision("point lies within 1e-6 of the projection pole");
    const Mat4 r = rotation_taking(qn, Vec4(0, 0, 0, 1));
    const Vec4 z = r * pn;
    const double denom = 1.0 - z[3];
    return Vec3(z[0], z[1], z[2]) / denom;
}

inline Vec4 stereographic_lift(const Vec3& y, const Vec4& pole) {
    const Vec4 qn = pole.normalized();
    const double s = y.squaredNorm();
    Vec4 z;
    z << 2.0 * y, s - 1.0;
    z /= s + 1.0;
    const Mat4 r = rotation_taking(qn, Vec4(0, 0, 0, 1));
    return (r.transpose() * z).normalized();
}

inline Polyline stereographic_project(const Polyline& c, const Vec4& pole) {
    if (c.ambient() != Ambient::S3)
        throw MixedAmbient("stereographic projection expects a curve on S^3");
    std::vector<Vec3> out;
    out.reserve(c.size());
    for (std::size_t i = 0; i < c.size(); ++i)
        out.push_back(stereographic_project(c.s3(i), pole));
    return c.closed() ? Polyline::closed_r3(std::move(out))
                      : Polyline::open_r3(std::move(out));
}

// Minimizing great-circle arc from a to b, sampled at n_samples points
// (endpoints included).  a == b degenerates to the single-point arc.
inline Polyline geodesic_arc(const Vec4& a, const Vec4& b, int n_samples) {
    const Vec4 an = a.normalized();
    const Vec4 bn = b.normalized();
    const double chord = (an - bn).norm();
    if (chord == 0.0) return Polyline::degenerate_s3(an);
    const double theta = sphere_angle(an, bn);
    if (theta >= pi - 1e-6)
        throw AntipodalPoints("no unique minimizing geodesic between near-antipodal points");
    if (n_samples < 2)
        throw OutOfRangeParameter("geodesic_arc needs n_samples >= 2");
    std::vector<Vec4> vs;
    vs.reserve(static_cast<std::size_t>(n_samples));
    const double sin_theta = std::sin(theta);
    for (int i = 0; i < n_samples; ++i) {
        const double t = static_cast<double>(i) / (n_samples - 1);
        Vec4 p;
        if (theta < 1e-8) {
            p = ((1.0 - t) * an + t * bn).normalized();
        } else {
            p = (std::sin((1.0 - t) * theta) * an + std::sin(t * theta) * bn) / sin_theta;
        }
        vs.push_back(p);
    }
    return Polyline::open_s3(std::move(vs));
}

// Fixed well-spread candidate set used when picking projection poles.  Built
// from stratified Hopf coordinates with an additive low-discrepancy sequence,
// so the set is deterministic and has no preferred axis.
inline const std::vector<Vec4>& pole_candidates() {
    static const std::vector<Vec4> pts = [] {
        std::vector<Vec4> out;
        out.reserve(60);
        const double g = 1.32471795724474602596;  // plastic number
        const double g1 = 1.0 / g;
        const double g2 = 1.0 / (g * g);
        for (int j = 0; j < 60; ++j) {
            const double u = (j + 0.5) / 60.0;
            const double eta = std::asin(std::sqrt(u));
            const double xi1 = 2.0 * pi * std::fmod(j * g1, 1.0);
            const double xi2 = 2.0 * pi * std::fmod(j * g2, 1.0);
            out.emplace_back(std::cos(eta) * std::cos(xi1), std::cos(eta) * std::sin(xi1),
                             std::sin(eta) * std::cos(xi2), std::sin(eta) * std::sin(xi2));
        }
        return out;
    }();
    return pts;
}

// Pole for projecting a family of S^3 curves together: the candidate maximizing
// the minimum chordal distance to every curve sample.
inline Vec4 choose_pole(const std::vector<const Polyline*>& curves) {
    double best_score = -1.0;
    Vec4 best = Vec4(0, 0, 0, 1);
    for (const Vec4& cand : pole_candidates()) {
        double worst = 2.0;
        for (const Polyline* c : curves) {
            if (c->ambient() != Ambient::S3)
                throw MixedAmbient("pole selection expects curves on S^3");
            for (std::size_t i = 0; i < c->size(); ++i)
                worst = std::min(worst, (c->s3(i) - cand).norm());
        }
        if (worst > best_score) {
            best_score = worst;
            best = cand;
        }
    }
    return best;
}

inline Vec4 choose_pole(const Polyline& c1, const Polyline& c2) {
    return choose_pole({&c1, &c2});
}

// ---------------------------------------------------------------------------
// Curve files: first meaningful line is `closed` or `open`, then one vertex
// per line (3 columns for R^3, 4 for S^3); `#` starts a comment.

inline Polyline read_curve_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedCurveFile("cannot open '" + path + "'");
    std::string line;
    bool closed = false;
    bool have_header = false;
    int cols = 0;
    std::vector<Vec3> v3;
    std::vector<Vec4> v4;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        std::istringstream ss(line);
        if (!have_header) {
            std::string tag;
            if (!(ss >> tag)) continue;  // blank or comment-only line
            if (tag == "closed")
                closed = true;
            else if (tag == "open")
                closed = false;
            else
                throw MalformedCurveFile(path + ":" + std::to_string(lineno) +
                                         ": expected 'closed' or 'open', got '" + tag + "'");
            std::string extra;
            if (ss >> extra)
                throw MalformedCurveFile(path + ":" + std::to_string(lineno) +
                                         ": trailing token '" + extra + "' after header");
            have_header = true;
            continue;
        }
        std::vector<double> row;
        double val;
        while (ss >> val) row.push_back(val);
        if (!ss.eof())
            throw MalformedCurveFile(path + ":" + std::to_string(lineno) +
                                     ": non-numeric vertex data");
        if (row.empty()) continue;
        if (row.size() != 3 && row.size() != 4)
            throw MalformedCurveFile(path + ":" + std::to_string(lineno) + ": expected 3 or 4 columns, got " +
                                     std::to_string(row.size()));
        if (cols == 0) cols = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != cols)
            throw MalformedCurveFile(path + ":" + std::to_string(lineno) +
                                     ": inconsistent column count");
        if (cols == 3)
            v3.emplace_back(row[0], row[1], row[2]);
        else
            v4.emplace_back(row[0], row[1], row[2], row[3]);
    }
    if (!have_header) throw MalformedCurveFile(path + ": missing 'closed'/'open' header");
    if (cols == 0) throw MalformedCurveFile(path + ": no vertices");
    try {
        if (cols == 3)
            return closed ? Polyline::closed_r3(std::move(v3)) : Polyline::open_r3(std::move(v3));
        return closed ? Polyline::closed_s3(std::move(v4)) : Polyline::open_s3(std::move(v4));
    } catch (const OutOfRangeParameter& e) {
        throw MalformedCurveFile(path + ": " + e.what());
    }
}

inline void write_curve_file(const std::string& path, const Polyline& c) {
    std::ofstream out(path);
    if (!out) throw DomainError("cannot write '" + path + "'");
    out.precision(17);
    out << (c.closed() ? "closed" : "open") << "\n";
    for (std::size_t i = 0; i < c.size(); ++i) {
        if (c.ambient() == Ambient::R3) {
            const Vec3& v = c.r3(i);
            out << v[0] << " " << v[1] << " " << v[2] << "\n";
        } else {
            const Vec4& v = c.s3(i);
            out << v[0] << " " << v[1] << " " << v[2] << " " << v[3] << "\n";
        }
    }
    if (!out) throw DomainError("write failed for '" + path + "'");
}

}  // namespace righthand
