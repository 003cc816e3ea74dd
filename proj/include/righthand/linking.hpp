#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/geometry.hpp"
#include "righthand/rng.hpp"

namespace righthand {

struct LinkingResult {
    double value = 0.0;
    double stderr_est = 0.0;
    std::string method;
};

// Gauss linking kernel (1/4pi) <V, W x (p-q)> / |p-q|^3.
inline double gauss_kernel(const Vec3& p, const Vec3& q, const Vec3& V, const Vec3& W) {
    const Vec3 r = p - q;
    const double d = r.norm();
    if (d < 1e-9) throw NearSingular("kernel evaluated within 1e-9 of the diagonal");
    return V.dot(W.cross(r)) / (4.0 * pi * d * d * d);
}

namespace detail {

// For straight segments the triple product det[d1, d2, r(u,v)] is constant in
// the segment parameters, so a segment pair contributes
//     det[d1, d2, a0-b0] / (4 pi) * Int 1/|r(u,v)|^3 du dv
// and only the positive scalar integral needs quadrature.
struct PairQuadrature {
    Vec3 a0, d1, b0, d2;
    double len1 = 0.0, len2 = 0.0;
    double value = 0.0;  // accumulated integral of 1/|r|^3
    double err2 = 0.0;   // accumulated squared per-leaf error

    Vec3 r(double u, double v) const { return a0 + u * d1 - b0 - v * d2; }

    double inv_cube(double u, double v) const {
        const double d = r(u, v).norm();
        return 1.0 / (d * d * d);
    }

    void leaf(double u0, double u1, double v0, double v1) {
        static constexpr double g = 0.5773502691896257;  // 2-point Gauss node
        const double um = 0.5 * (u0 + u1), uh = 0.5 * (u1 - u0);
        const double vm = 0.5 * (v0 + v1), vh = 0.5 * (v1 - v0);
        const double area = 4.0 * uh * vh;
        double s = 0.0;
        for (int i = -1; i <= 1; i += 2)
            for (int j = -1; j <= 1; j += 2) s += inv_cube(um + i * g * uh, vm + j * g * vh);
        const double fine = 0.25 * s * area;
        const double coarse = inv_cube(um, vm) * area;
        value += fine;
        const double e = fine - coarse;
        err2 += e * e;
    }

    void refine(double u0, double u1, double v0, double v1, int depth) {
        const double sep = std::sqrt(segment_distance_sq(
            Vec3(a0 + u0 * d1), Vec3(a0 + u1 * d1), Vec3(b0 + v0 * d2), Vec3(b0 + v1 * d2)));
        const double reach = 4.0 * (len1 * (u1 - u0) + len2 * (v1 - v0));
        if (sep < reach && depth < 12) {
            const double um = 0.5 * (u0 + u1), vm = 0.5 * (v0 + v1);
            refine(u0, um, v0, vm, depth + 1);
            refine(u0, um, vm, v1, depth + 1);
            refine(um, u1, v0, vm, depth + 1);
            refine(um, u1, vm, v1, depth + 1);
            return;
        }
        if (sep < 1e-6)
            throw CurvesIntersect("segment pair separation " + std::to_string(sep) +
                                  " below 1e-6 at maximum subdivision depth");
        leaf(u0, u1, v0, v1);
    }
};

inline std::vector<Vec3> closed_r3_vertices(const Polyline& c, const char* who) {
    if (!c.closed()) throw OutOfRangeParameter(std::string(who) + " needs closed curves");
    if (c.ambient() != Ambient::R3)
        throw MixedAmbient(std::string(who) + " operates on curves in R^3");
    return c.r3_vertices();
}

struct QuadTotals {
    double value = 0.0;
    double err2 = 0.0;
};

// Sum of adaptive segment-pair integrals over two R^3 polylines, including
// each curve's closing edge only when that curve is closed.
inline QuadTotals curve_pair_sum(const std::vector<Vec3>& p, bool closed1,
                                 const std::vector<Vec3>& q, bool closed2) {
    QuadTotals tot;
    const std::size_t n1 = p.size(), n2 = q.size();
    const std::size_t e1 = closed1 ? n1 : n1 - 1;
    const std::size_t e2 = closed2 ? n2 : n2 - 1;
    for (std::size_t i = 0; i < e1; ++i) {
        const Vec3& a0 = p[i];
        const Vec3 d1 = p[(i + 1) % n1] - a0;
        for (std::size_t j = 0; j < e2; ++j) {
            const Vec3& b0 = q[j];
            const Vec3 d2 = q[(j + 1) % n2] - b0;
            const double det = d1.cross(d2).dot(a0 - b0);
            if (det == 0.0) {
                // Coplanar pairs contribute exactly zero, but only if they
                // are honestly disjoint; touching pairs (shared endpoints,
                // a curve against itself) are an intersection.
                if (segment_distance_sq(a0, Vec3(a0 + d1), b0, Vec3(b0 + d2)) < 1e-18)
                    throw CurvesIntersect("coplanar segment pair with zero separation");
                continue;
            }
            PairQuadrature quad{a0, d1, b0, d2, d1.norm(), d2.norm()};
            quad.refine(0.0, 1.0, 0.0, 1.0, 0);
            const double scale = det / (4.0 * pi);
            tot.value += scale * quad.value;
            tot.err2 += scale * scale * quad.err2;
        }
    }
    return tot;
}

// Shared-chart reduction: two S^3 curves are projected through one pole picked
// away from both; R^3 curves pass through; mixing ambients is an error.
inline std::pair<Polyline, Polyline> common_chart(const Polyline& c1, const Polyline& c2) {
    if (c1.ambient() != c2.ambient())
        throw MixedAmbient("cannot combine an S^3 curve with an R^3 curve");
    if (c1.ambient() == Ambient::R3) return {c1, c2};
    const Vec4 pole = choose_pole(c1, c2);
    return {stereographic_project(c1, pole), stereographic_project(c2, pole)};
}

}  // namespace detail

// Double Gauss-kernel quadrature over a curve pair; open curves integrate
// over their open parameter range.  Segment pairs in near contact are
// bisected (in both parameters) until separated from their own length scale;
// the error estimate aggregates per-leaf embedded-rule differences, inflated
// by 1.5 to absorb correlation between leaves.
inline LinkingResult kernel_integral(const Polyline& curve1, const Polyline& curve2) {
    const auto [c1, c2] = detail::common_chart(curve1, curve2);
    if (c1.ambient() != Ambient::R3)
        throw MixedAmbient("kernel_integral operates on curves in R^3");
    const auto tot = detail::curve_pair_sum(c1.r3_vertices(), c1.closed(), c2.r3_vertices(),
                                            c2.closed());
    return {tot.value, 1.5 * std::sqrt(tot.err2), "gauss_integral"};
}

// Linking number of two disjoint closed curves by the Gauss double integral;
// for honest inputs the value lands within stderr of an integer.
inline LinkingResult linking_integral(const Polyline& curve1, const Polyline& curve2) {
    if (!curve1.closed() || !curve2.closed())
        throw OutOfRangeParameter("linking_integral needs closed curves");
    return kernel_integral(curve1, curve2);
}

namespace detail {

struct Crossing2d {
    bool degenerate = false;
    int sign_sum = 0;
};

inline Crossing2d count_crossings(const std::vector<Vec3>& p, const std::vector<Vec3>& q,
                                  const Vec3& dir) {
    // right-handed frame (u, v, dir)
    Vec3 seed = std::abs(dir[0]) < 0.9 ? Vec3(1, 0, 0) : Vec3(0, 1, 0);
    const Vec3 u = (seed - seed.dot(dir) * dir).normalized();
    const Vec3 v = dir.cross(u);

    const auto plane = [&](const Vec3& x) { return Eigen::Vector2d(x.dot(u), x.dot(v)); };
    const auto height = [&](const Vec3& x) { return x.dot(dir); };

    Crossing2d out;
    const std::size_t n1 = p.size(), n2 = q.size();
    for (std::size_t i = 0; i < n1; ++i) {
        const Eigen::Vector2d p1 = plane(p[i]);
        const Eigen::Vector2d r = plane(p[(i + 1) % n1]) - p1;
        const double h1a = height(p[i]), h1b = height(p[(i + 1) % n1]);
        for (std::size_t j = 0; j < n2; ++j) {
            const Eigen::Vector2d q1 = plane(q[j]);
            const Eigen::Vector2d s = plane(q[(j + 1) % n2]) - q1;
            const double denom = r.x() * s.y() - r.y() * s.x();
            const Eigen::Vector2d w = q1 - p1;
            if (std::abs(denom) < 1e-12 * r.norm() * s.norm()) {
                // parallel in projection; degenerate only if the supports overlap
                const double off = std::abs(w.x() * r.y() - w.y() * r.x());
                if (off < 1e-9 * std::max(1.0, r.norm())) {
                    const double t0 = w.dot(r) / r.squaredNorm();
                    const double t1 = t0 + s.dot(r) / r.squaredNorm();
                    if (std::max(t0, t1) > -1e-9 && std::min(t0, t1) < 1.0 + 1e-9) {
                        out.degenerate = true;
                        return out;
                    }
                }
                continue;
            }
            const double t = (w.x() * s.y() - w.y() * s.x()) / denom;
            const double m = (w.x() * r.y() - w.y() * r.x()) / denom;
            if (t < -1e-9 || t > 1.0 + 1e-9 || m < -1e-9 || m > 1.0 + 1e-9) continue;
            if (t < 1e-9 || t > 1.0 - 1e-9 || m < 1e-9 || m > 1.0 - 1e-9) {
                out.degenerate = true;  // endpoint grazing
                return out;
            }
            const double h2a = height(q[j]), h2b = height(q[(j + 1) % n2]);
            const double dh = (h1a + t * (h1b - h1a)) - (h2a + m * (h2b - h2a));
            if (std::abs(dh) < 1e-9) {
                out.degenerate = true;  // curves touch along the view direction
                return out;
            }
            out.sign_sum += (denom > 0.0 ? 1 : -1) * (dh > 0.0 ? 1 : -1);
        }
    }
    return out;
}

}  // namespace detail

// Exact linking number by signed crossings in the planar projection along
// `direction`.  Degenerate views are retried with deterministically perturbed
// directions; sixteen failures in a row is DegenerateProjection.
inline int crossing_number(const Polyline& curve1, const Polyline& curve2, const Vec3& direction) {
    const auto [c1, c2] = detail::common_chart(curve1, curve2);
    const std::vector<Vec3> p = detail::closed_r3_vertices(c1, "crossing_number");
    const std::vector<Vec3> q = detail::closed_r3_vertices(c2, "crossing_number");

    Vec3 dir = direction.normalized();
    Rng rng(0x9e3779b97f4a7c15ull);
    for (int attempt = 0; attempt < 16; ++attempt) {
        const auto res = detail::count_crossings(p, q, dir);
        if (!res.degenerate && res.sign_sum % 2 == 0) return res.sign_sum / 2;
        dir = (dir + 0.02 * (attempt + 1) * rng.unit3()).normalized();
    }
    throw DegenerateProjection("no crossing-regular view direction found in 16 attempts");
}

// Convenience overload with a fixed generic view direction.
inline int crossing_number(const Polyline& curve1, const Polyline& curve2) {
    return crossing_number(curve1, curve2, Vec3(0.2287, 0.3571, 0.9056));
}

}  // namespace righthand
