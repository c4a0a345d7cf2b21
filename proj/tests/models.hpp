// Canonical 1-d test models shared across the suite.
#pragma once

#include "nldiff/model.hpp"

namespace testmodels {

using namespace nldiff;

/// F = {0}, a = 1: the classical heat semigroup.
inline ModelSpec heat() {
    ModelSpec m;
    m.d = 1;
    m.bound_C = 2.0;
    m.drift_family = DriftFamily::BoxDrift;
    m.control_box = Box{{0.0}, {0.0}};
    m.diffusion_family = DiffusionFamily::ConstDiffusion;
    m.const_matrix = Matrix::identity(1);
    return m;
}

/// b(f, x) = f, F = [-1, 1], a = 1.
inline ModelSpec box_drift() {
    ModelSpec m = heat();
    m.control_box = Box{{-1.0}, {1.0}};
    return m;
}

/// b(f, x) = tanh(x) f, F = [-1, 1], a(x) = 1 + 0.25 sin(x).
inline ModelSpec shear_diag() {
    ModelSpec m;
    m.d = 1;
    m.bound_C = 2.0;
    m.drift_family = DriftFamily::Shear;
    m.control_box = Box{{-1.0}, {1.0}};
    m.diffusion_family = DiffusionFamily::DiagDiffusion;
    m.diag_exprs = {DiagExpr::OnePlusSin};
    m.diag_params = {0.25};
    return m;
}

inline ControlMesh mesh_of(const ModelSpec& m, std::size_t per_axis = 3) {
    return make_control_mesh(m.control_box, per_axis);
}

}  // namespace testmodels
