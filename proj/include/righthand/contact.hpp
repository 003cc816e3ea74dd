#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "righthand/errors.hpp"
#include "righthand/fields.hpp"
#include "righthand/geometry.hpp"
#include "righthand/measure.hpp"
#include "righthand/rng.hpp"

namespace righthand {

namespace detail {

// Completion of {p, e1, e2} to a positively oriented orthonormal basis of
// R^4: the generalized cross product, so det[p, e1, e2, e3] > 0.
inline Vec4 cross4(const Vec4& a, const Vec4& b, const Vec4& c) {
    Eigen::Matrix3d m;
    Vec4 out;
    for (int i = 0; i < 4; ++i) {
        int col = 0;
        for (int j = 0; j < 4; ++j) {
            if (j == i) continue;
            m(0, col) = a[j];
            m(1, col) = b[j];
            m(2, col) = c[j];
            ++col;
        }
        out[i] = ((i % 2) ? 1.0 : -1.0) * m.determinant();
    }
    return out;
}

// Oriented orthonormal tangent frame at p, seeded by rng draws.
inline std::array<Vec4, 3> tangent_frame(const Vec4& p, Rng& rng) {
    Vec4 e1, e2;
    for (;;) {
        Vec4 v = rng.unit4();
        v -= v.dot(p) * p;
        if (v.norm() > 1e-3) {
            e1 = v.normalized();
            break;
        }
    }
    for (;;) {
        Vec4 v = rng.unit4();
        v -= v.dot(p) * p + v.dot(e1) * e1;
        if (v.norm() > 1e-3) {
            e2 = v.normalized();
            break;
        }
    }
    const Vec4 e3 = cross4(p, e1, e2).normalized();
    return {e1, e2, e3};
}

// Two-form omega = iota_X(volume) at p, against the round probability volume
// scaled by the field's density.
inline double omega_form(const FieldSpec& spec, const Vec4& p, const Vec4& u, const Vec4& v) {
    Mat4 m;
    m.col(0) = p;
    m.col(1) = spec.field(p);
    m.col(2) = u;
    m.col(3) = v;
    return spec.density(p) * m.determinant() / (2.0 * pi * pi);
}

}  // namespace detail

// Pointwise contact-type test: minimum over random points of the density of
// nu wedge omega against the oriented round volume, evaluated on orthonormal
// tangent frames.  Positive minimum is the certificate.
inline double contact_type_check(const FieldSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw OutOfRangeParameter("contact_type_check needs n_samples >= 1");
    Rng rng(seed);
    double worst = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n_samples; ++i) {
        const Vec4 p = rng.unit4();
        const auto [e1, e2, e3] = detail::tangent_frame(p, rng);
        const Vec4 nu = spec.primitive(p);
        const double w23 = detail::omega_form(spec, p, e2, e3);
        const double w13 = detail::omega_form(spec, p, e1, e3);
        const double w12 = detail::omega_form(spec, p, e1, e2);
        const double density = nu.dot(e1) * w23 - nu.dot(e2) * w13 + nu.dot(e3) * w12;
        worst = std::min(worst, density);
    }
    return worst;
}

// R(p) = X(p) / nu(X)(p), the conformal rescaling that makes the field the
// Reeb field of its primitive.
inline Vec4 reconstruct_reeb(const FieldSpec& spec, const Vec4& p) {
    const Vec4 pn = p.normalized();
    const double pairing = spec.primitive(pn).dot(spec.field(pn));
    if (!(pairing > 1e-9))
        throw NonTransverse("nu(X) = " + std::to_string(pairing) +
                            " is not positively bounded away from 0");
    return spec.field(pn) / pairing;
}

struct ReebDefects {
    double max_pairing_defect = 0.0;      // max |nu(R) - 1|
    double max_contraction_defect = 0.0;  // max |omega(R, v)| over unit tangents v
};

// Checks the two identities characterizing a Reeb field, nu(R) = 1 and
// omega(R, -) = 0, at random points with random tangent directions.
inline ReebDefects verify_reeb(const FieldSpec& spec, int n_samples, std::uint64_t seed) {
    if (n_samples < 1) throw OutOfRangeParameter("verify_reeb needs n_samples >= 1");
    Rng rng(seed);
    ReebDefects d;
    for (int i = 0; i < n_samples; ++i) {
        const Vec4 p = rng.unit4();
        const Vec4 r = reconstruct_reeb(spec, p);
        d.max_pairing_defect =
            std::max(d.max_pairing_defect, std::abs(spec.primitive(p).dot(r) - 1.0));
        Vec4 v = rng.unit4();
        v -= v.dot(p) * p;
        if (v.norm() < 1e-3) continue;
        v.normalize();
        d.max_contraction_defect =
            std::max(d.max_contraction_defect, std::abs(detail::omega_form(spec, p, r, v)));
    }
    return d;
}

struct CertificationReport {
    struct Entry {
        std::string provenance;
        double value = 0.0;
        double stderr_est = 0.0;
    };
    std::vector<Entry> entries;
    std::string verdict;  // certified_positive | certified_negative | inconclusive
    double tolerance = 0.0;
};

// Finite-family version of the all-measures criterion: every measure's
// Lk_omega must clear the tolerance with 3 sigma to spare, in the same
// direction, for a definite verdict.
inline CertificationReport mcduff_certify(const FieldSpec& spec,
                                          const std::vector<MeasureSample>& measures,
                                          double tolerance) {
    if (measures.empty())
        throw EmptyMeasureFamily("certification needs at least one invariant measure");
    CertificationReport report;
    report.tolerance = tolerance;
    bool all_positive = true, all_negative = true;
    for (const auto& mu : measures) {
        const auto [value, se] = lk_omega_direct_stats(spec, mu);
        report.entries.push_back({mu.provenance, value, se});
        all_positive = all_positive && (value - 3.0 * se > tolerance);
        all_negative = all_negative && (value + 3.0 * se < -tolerance);
    }
    report.verdict =
        all_positive ? "certified_positive" : (all_negative ? "certified_negative" : "inconclusive");
    return report;
}

}  // namespace righthand
