#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>

#include "righthand/errors.hpp"
#include "righthand/geometry.hpp"

namespace righthand {

enum class FieldKind { Hopf, AntiHopf, EllipsoidReeb, ConformalHopf };

// Volume-preserving benchmark fields on S^3 with closed-form contact data.
//
// Every instance knows its field X, the invariant volume density rho relative
// to the round probability volume, and (usually) an exact primitive nu of the
// two-form obtained by contracting X into that volume.  All primitives here
// have the shape
//     nu = alpha (x1 dx2 - x2 dx1) + beta (x3 dx4 - x4 dx3),
// represented below by the pair (alpha, beta); covectors are returned as
// ambient R^4 row vectors acting on tangent vectors by the Euclidean pairing.
class FieldSpec {
public:
    static FieldSpec hopf() { return FieldSpec(FieldKind::Hopf); }
    static FieldSpec antihopf() { return FieldSpec(FieldKind::AntiHopf); }

    static FieldSpec ellipsoid_reeb(double a, double b) {
        if (!(a > 0.0) || !(b > 0.0))
            throw OutOfRangeParameter("ellipsoid rates must be positive");
        FieldSpec s(FieldKind::EllipsoidReeb);
        s.a_ = a;
        s.b_ = b;
        return s;
    }

    // Conformal rescaling f * Hopf with f = c0 + c1 x1; needs c0 > |c1| so f
    // stays positive.  The invariant density is 1/(Z f) with Z = E[1/f] over
    // the round probability volume, which keeps total mass 1.
    static FieldSpec conformal_hopf(double c0 = 2.0, double c1 = 1.0) {
        if (!(c0 > std::abs(c1)))
            throw OutOfRangeParameter("conformal factor must be positive on S^3");
        FieldSpec s(FieldKind::ConformalHopf);
        s.c0_ = c0;
        s.c1_ = c1;
        s.z_ = (c1 == 0.0) ? 1.0 / c0
                           : 2.0 * (c0 - std::sqrt(c0 * c0 - c1 * c1)) / (c1 * c1);
        return s;
    }

    FieldKind kind() const { return kind_; }
    double rate_a() const { return a_; }
    double rate_b() const { return b_; }
    double mass_constant() const { return z_; }

    Vec4 field(const Vec4& p) const {
        switch (kind_) {
            case FieldKind::Hopf:
                return Vec4(-p[1], p[0], -p[3], p[2]);
            case FieldKind::AntiHopf:
                return Vec4(-p[1], p[0], p[3], -p[2]);
            case FieldKind::EllipsoidReeb:
                return Vec4(-a_ * p[1], a_ * p[0], -b_ * p[3], b_ * p[2]);
            case FieldKind::ConformalHopf:
                return conformal_factor(p) * Vec4(-p[1], p[0], -p[3], p[2]);
        }
        return Vec4::Zero();
    }

    double conformal_factor(const Vec4& p) const {
        return kind_ == FieldKind::ConformalHopf ? c0_ + c1_ * p[0] : 1.0;
    }

    // Density of the invariant volume against the round probability volume.
    double density(const Vec4& p) const {
        return kind_ == FieldKind::ConformalHopf ? 1.0 / (z_ * conformal_factor(p)) : 1.0;
    }

    bool has_primitive() const { return has_primitive_; }

    Vec4 primitive(const Vec4& p) const {
        if (!has_primitive_)
            throw NoPrimitiveAvailable("field '" + name() + "' carries no closed-form primitive");
        auto [alpha, beta] = primitive_coeffs();
        alpha *= scale_;
        beta *= scale_;
        Vec4 nu(-alpha * p[1], alpha * p[0], -beta * p[3], beta * p[2]);
        if (shift_ != 0.0) nu += shift_ * Vec4(p[2], 0.0, p[0], 0.0);  // + shift * d(x1 x3)
        return nu;
    }

    // Contact form with this field as Reeb field, when one exists in closed
    // form; the conformal rescaling is precisely the case without one.
    std::optional<Vec4> contact_form(const Vec4& p) const {
        switch (kind_) {
            case FieldKind::Hopf:
                return Vec4(-p[1], p[0], -p[3], p[2]);
            case FieldKind::AntiHopf:
                return Vec4(-p[1], p[0], p[3], -p[2]);
            case FieldKind::EllipsoidReeb:
                return Vec4(-p[1] / a_, p[0] / a_, -p[3] / b_, p[2] / b_);
            case FieldKind::ConformalHopf:
                return std::nullopt;
        }
        return std::nullopt;
    }

    double speed_bound() const {
        switch (kind_) {
            case FieldKind::Hopf:
            case FieldKind::AntiHopf:
                return 1.0;
            case FieldKind::EllipsoidReeb:
                return std::max(a_, b_);
            case FieldKind::ConformalHopf:
                return c0_ + std::abs(c1_);
        }
        return 1.0;
    }

    // Test hooks: gauge-shift the primitive by c * d(x1 x3), rescale it, or
    // drop it entirely to exercise the NoPrimitiveAvailable path.
    FieldSpec with_primitive_shift(double c) const {
        FieldSpec s(*this);
        s.shift_ += c;
        return s;
    }
    FieldSpec with_primitive_scale(double c) const {
        FieldSpec s(*this);
        s.scale_ *= c;
        return s;
    }
    FieldSpec without_primitive() const {
        FieldSpec s(*this);
        s.has_primitive_ = false;
        return s;
    }

    std::string name() const {
        char buf[96];
        switch (kind_) {
            case FieldKind::Hopf:
                return "hopf";
            case FieldKind::AntiHopf:
                return "antihopf";
            case FieldKind::EllipsoidReeb:
                std::snprintf(buf, sizeof buf, "ellipsoid:a=%.17g,b=%.17g", a_, b_);
                return buf;
            case FieldKind::ConformalHopf:
                if (c0_ == 2.0 && c1_ == 1.0) return "conformal:f=default";
                std::snprintf(buf, sizeof buf, "conformal:c0=%.17g,c1=%.17g", c0_, c1_);
                return buf;
        }
        return "?";
    }

private:
    explicit FieldSpec(FieldKind k) : kind_(k) {}

    std::pair<double, double> primitive_coeffs() const {
        constexpr double inv4pi2 = 1.0 / (4.0 * pi * pi);
        switch (kind_) {
            case FieldKind::Hopf:
                return {inv4pi2, inv4pi2};
            case FieldKind::AntiHopf:
                return {-inv4pi2, inv4pi2};
            case FieldKind::EllipsoidReeb:
                return {b_ * inv4pi2, a_ * inv4pi2};
            case FieldKind::ConformalHopf:
                return {inv4pi2 / z_, inv4pi2 / z_};
        }
        return {0.0, 0.0};
    }

    FieldKind kind_;
    double a_ = 1.0, b_ = 1.0;   // ellipsoid rates
    double c0_ = 2.0, c1_ = 0.0; // conformal factor coefficients
    double z_ = 1.0;             // E[1/f] over the round volume
    double shift_ = 0.0;
    double scale_ = 1.0;
    bool has_primitive_ = true;
};

// Central finite-difference divergence of X against the field's invariant
// volume, using the degree-0 homogeneous extension off the sphere (whose
// ambient divergence restricts to the spherical one for tangent fields).
inline double divergence_defect(const FieldSpec& spec, const Vec4& p, double h) {
    if (!(h >= 1e-6 && h <= 1e-2))
        throw OutOfRangeParameter("divergence step h must lie in [1e-6, 1e-2]");
    const Vec4 pn = p.normalized();
    double div = 0.0;
    for (int i = 0; i < 4; ++i) {
        Vec4 dp = Vec4::Zero();
        dp[i] = h;
        const Vec4 xp = (pn + dp).normalized();
        const Vec4 xm = (pn - dp).normalized();
        div += (spec.density(xp) * spec.field(xp)[i] - spec.density(xm) * spec.field(xm)[i]) /
               (2.0 * h);
    }
    return div / spec.density(pn);
}

// Closed-form orbit circle of the Hopf or anti-Hopf field through p0, as a
// closed polyline with n vertices.  Exact up to rounding, so tests can use it
// as ground truth without touching the integrator.
inline Polyline fiber_loop(const FieldSpec& spec, const Vec4& p0, int n) {
    if (spec.kind() != FieldKind::Hopf && spec.kind() != FieldKind::AntiHopf)
        throw OutOfRangeParameter("fiber_loop expects the Hopf or anti-Hopf field");
    if (n < 3) throw OutOfRangeParameter("fiber_loop needs at least 3 vertices");
    const double sgn = spec.kind() == FieldKind::Hopf ? 1.0 : -1.0;
    const Vec4 p = p0.normalized();
    std::vector<Vec4> vs;
    vs.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        const double t = 2.0 * pi * k / n;
        const double c = std::cos(t), s = std::sin(t);
        vs.emplace_back(c * p[0] - s * p[1], s * p[0] + c * p[1],
                        c * p[2] - sgn * s * p[3], sgn * s * p[2] + c * p[3]);
    }
    return Polyline::closed_s3(std::move(vs));
}

// Parse the CLI field names: hopf | antihopf | ellipsoid:a=..,b=.. | conformal:f=default
inline FieldSpec parse_field(const std::string& text) {
    if (text == "hopf") return FieldSpec::hopf();
    if (text == "antihopf") return FieldSpec::antihopf();
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "ellipsoid") {
        double a = 0.0, b = 0.0;
        if (std::sscanf(args.c_str(), "a=%lf,b=%lf", &a, &b) != 2)
            throw OutOfRangeParameter("ellipsoid field needs 'ellipsoid:a=<rate>,b=<rate>', got '" +
                                      text + "'");
        return FieldSpec::ellipsoid_reeb(a, b);
    }
    if (head == "conformal") {
        if (!args.empty() && args != "f=default")
            throw OutOfRangeParameter("only 'conformal:f=default' is available, got '" + text + "'");
        return FieldSpec::conformal_hopf();
    }
    throw OutOfRangeParameter("unknown field '" + text + "'");
}

}  // namespace righthand
