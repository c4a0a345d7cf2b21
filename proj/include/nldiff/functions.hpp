#pragma once

#include <string>

#include "nldiff/common.hpp"

namespace nldiff {

enum class FunctionKind {
    Constant,
    TanhAffine,
    GaussianBump,
    IndicatorHalfspace,
    IndicatorBall,
    PiecewiseLinearCapped,
};

enum class Regularity { Continuous, UpperSemicontinuous };

/**
 * Bounded initial datum psi with a declared regularity class. Indicator kinds
 * use the closed-set convention (points on the boundary get value 1), which
 * keeps the nodewise samples upper semicontinuous.
 */
struct TestFunction {
    FunctionKind kind = FunctionKind::Constant;
    Regularity regularity = Regularity::Continuous;

    double value = 0.0;       // constant
    Vec direction;            // tanh-affine slope k / halfspace normal / pw-linear slope
    double shift = 0.0;       // affine shift, halfspace threshold
    double scale = 1.0;       // tanh-affine and bump amplitude
    double offset = 0.0;      // additive offset
    Vec center;               // bump / ball center
    double width = 1.0;       // bump width / ball radius
    double cap_lo = -1.0, cap_hi = 1.0;  // piecewise-linear caps

    double operator()(const Vec& x) const {
        switch (kind) {
            case FunctionKind::Constant:
                return value;
            case FunctionKind::TanhAffine:
                return scale * std::tanh(dot(direction, x) + shift) + offset;
            case FunctionKind::GaussianBump: {
                double q = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - center[i];
                    q += d * d;
                }
                return scale * std::exp(-q / (2.0 * width * width)) + offset;
            }
            case FunctionKind::IndicatorHalfspace:
                return dot(direction, x) <= shift ? 1.0 : 0.0;
            case FunctionKind::IndicatorBall: {
                double q = 0.0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - center[i];
                    q += d * d;
                }
                return std::sqrt(q) <= width ? 1.0 : 0.0;
            }
            case FunctionKind::PiecewiseLinearCapped:
                return std::clamp(dot(direction, x) + shift, cap_lo, cap_hi);
        }
        return 0.0;
    }

    double sup_abs() const {
        switch (kind) {
            case FunctionKind::Constant: return std::abs(value);
            case FunctionKind::TanhAffine: return std::abs(scale) + std::abs(offset);
            case FunctionKind::GaussianBump: return std::abs(scale) + std::abs(offset);
            case FunctionKind::IndicatorHalfspace:
            case FunctionKind::IndicatorBall: return 1.0;
            case FunctionKind::PiecewiseLinearCapped:
                return std::max(std::abs(cap_lo), std::abs(cap_hi));
        }
        return 0.0;
    }
};

inline TestFunction constant_fn(double c) {
    TestFunction f;
    f.kind = FunctionKind::Constant;
    f.value = c;
    return f;
}

inline TestFunction tanh_fn(std::size_t d, double scale = 1.0, double shift = 0.0) {
    TestFunction f;
    f.kind = FunctionKind::TanhAffine;
    f.direction = Vec(d, 0.0);
    f.direction[0] = 1.0;
    f.scale = scale;
    f.shift = shift;
    return f;
}

inline TestFunction gaussian_bump_fn(std::size_t d, double amp = 1.0, double width = 1.0) {
    TestFunction f;
    f.kind = FunctionKind::GaussianBump;
    f.center = Vec(d, 0.0);
    f.scale = amp;
    f.width = width;
    return f;
}

/// Indicator of {<n, x> <= c}; declared upper semicontinuous.
inline TestFunction halfspace_fn(std::size_t d, double c = 0.0) {
    TestFunction f;
    f.kind = FunctionKind::IndicatorHalfspace;
    f.regularity = Regularity::UpperSemicontinuous;
    f.direction = Vec(d, 0.0);
    f.direction[0] = 1.0;
    f.shift = c;
    return f;
}

inline TestFunction ball_fn(std::size_t d, double radius) {
    TestFunction f;
    f.kind = FunctionKind::IndicatorBall;
    f.regularity = Regularity::UpperSemicontinuous;
    f.center = Vec(d, 0.0);
    f.width = radius;
    return f;
}

}  // namespace nldiff
