#pragma once

#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "nldiff/functions.hpp"
#include "nldiff/grid.hpp"
#include "nldiff/model.hpp"

namespace nldiff {

using Json = nlohmann::json;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace cfg {

inline void reject_unknown(const Json& obj, const std::set<std::string>& allowed,
                           const std::string& path) {
    if (!obj.is_object()) throw ConfigError("config: expected object at " + path);
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!allowed.count(it.key()))
            throw ConfigError("config: unknown key " + path + "." + it.key());
}

template <class T>
T require(const Json& obj, const std::string& key, const std::string& path) {
    if (!obj.contains(key)) throw ConfigError("config: missing key " + path + "." + key);
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config: bad value at " + path + "." + key);
    }
}

template <class T>
T get_or(const Json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw ConfigError("config: bad value at " + path + "." + key);
    }
}

inline Box parse_box(const Json& j, const std::string& path) {
    reject_unknown(j, {"lo", "hi"}, path);
    Box b{require<Vec>(j, "lo", path), require<Vec>(j, "hi", path)};
    if (b.lo.size() != b.hi.size()) throw ConfigError("config: lo/hi size mismatch at " + path);
    return b;
}

}  // namespace cfg

inline ModelSpec parse_model(const Json& j) {
    cfg::reject_unknown(j, {"dimension", "bound_C", "drift", "diffusion", "control_box"}, "model");
    ModelSpec m;
    m.d = cfg::require<std::size_t>(j, "dimension", "model");
    if (m.d < 1 || m.d > 2) throw ConfigError("config: model.dimension must be 1 or 2");
    m.bound_C = cfg::require<double>(j, "bound_C", "model");
    if (m.bound_C <= 0.0) throw ConfigError("config: model.bound_C must be positive");

    const Json& dj = j.at("drift");
    const std::string dfam = cfg::require<std::string>(dj, "family", "model.drift");
    if (dfam == "box-drift") {
        cfg::reject_unknown(dj, {"family"}, "model.drift");
        m.drift_family = DriftFamily::BoxDrift;
    } else if (dfam == "shear") {
        cfg::reject_unknown(dj, {"family"}, "model.drift");
        m.drift_family = DriftFamily::Shear;
    } else if (dfam == "affine-drift") {
        cfg::reject_unknown(dj, {"family", "matrix", "scale", "offset", "offset_const",
                                 "offset_scale"},
                            "model.drift");
        m.drift_family = DriftFamily::AffineDrift;
        const std::string mx = cfg::get_or<std::string>(dj, "matrix", "model.drift", "identity");
        if (mx == "identity")
            m.affine_matrix = AffineMatrixExpr::Identity;
        else if (mx == "diag-tanh")
            m.affine_matrix = AffineMatrixExpr::DiagTanh;
        else
            throw ConfigError("config: unknown matrix expression at model.drift.matrix");
        m.affine_scale = cfg::get_or<double>(dj, "scale", "model.drift", 1.0);
        const std::string off = cfg::get_or<std::string>(dj, "offset", "model.drift", "zero");
        if (off == "zero")
            m.affine_offset = AffineOffsetExpr::Zero;
        else if (off == "const") {
            m.affine_offset = AffineOffsetExpr::Const;
            m.affine_offset_const = cfg::require<Vec>(dj, "offset_const", "model.drift");
        } else if (off == "tanh") {
            m.affine_offset = AffineOffsetExpr::Tanh;
            m.affine_offset_scale = cfg::require<double>(dj, "offset_scale", "model.drift");
        } else
            throw ConfigError("config: unknown offset expression at model.drift.offset");
    } else
        throw ConfigError("config: unknown drift family at model.drift.family");

    const Json& aj = j.at("diffusion");
    const std::string afam = cfg::require<std::string>(aj, "family", "model.diffusion");
    if (afam == "const-diffusion") {
        cfg::reject_unknown(aj, {"family", "matrix"}, "model.diffusion");
        m.diffusion_family = DiffusionFamily::ConstDiffusion;
        const auto rows = cfg::require<std::vector<Vec>>(aj, "matrix", "model.diffusion");
        if (rows.size() != m.d) throw ConfigError("config: diffusion matrix dimension mismatch");
        m.const_matrix = Matrix(m.d, m.d);
        for (std::size_t i = 0; i < m.d; ++i) {
            if (rows[i].size() != m.d)
                throw ConfigError("config: diffusion matrix dimension mismatch");
            for (std::size_t k = 0; k < m.d; ++k) m.const_matrix(i, k) = rows[i][k];
        }
    } else if (afam == "diag-diffusion") {
        cfg::reject_unknown(aj, {"family", "exprs", "params", "clamp"}, "model.diffusion");
        m.diffusion_family = DiffusionFamily::DiagDiffusion;
        const auto exprs = cfg::require<std::vector<std::string>>(aj, "exprs", "model.diffusion");
        m.diag_params = cfg::require<Vec>(aj, "params", "model.diffusion");
        if (exprs.size() != m.d || m.diag_params.size() != m.d)
            throw ConfigError("config: diag-diffusion needs one expr/param per axis");
        for (const std::string& e : exprs) {
            if (e == "const")
                m.diag_exprs.push_back(DiagExpr::Const);
            else if (e == "one-plus-sin")
                m.diag_exprs.push_back(DiagExpr::OnePlusSin);
            else if (e == "one-plus-square")
                m.diag_exprs.push_back(DiagExpr::OnePlusSquare);
            else
                throw ConfigError("config: unknown expression at model.diffusion.exprs");
        }
        m.diag_clamp = cfg::get_or<bool>(aj, "clamp", "model.diffusion", false);
    } else
        throw ConfigError("config: unknown diffusion family at model.diffusion.family");

    m.control_box = cfg::parse_box(j.at("control_box"), "model.control_box");
    if (m.control_box.dim() != m.d)
        throw ConfigError("config: control_box dimension mismatch with model.dimension");
    return m;
}

inline TestFunction parse_function(const Json& j) {
    cfg::reject_unknown(j,
                        {"kind", "value", "direction", "shift", "scale", "offset", "center",
                         "width", "cap_lo", "cap_hi"},
                        "function");
    TestFunction f;
    const std::string kind = cfg::require<std::string>(j, "kind", "function");
    if (kind == "constant") {
        f = constant_fn(cfg::require<double>(j, "value", "function"));
    } else if (kind == "tanh-affine") {
        f.kind = FunctionKind::TanhAffine;
        f.direction = cfg::require<Vec>(j, "direction", "function");
        f.shift = cfg::get_or<double>(j, "shift", "function", 0.0);
        f.scale = cfg::get_or<double>(j, "scale", "function", 1.0);
        f.offset = cfg::get_or<double>(j, "offset", "function", 0.0);
    } else if (kind == "gaussian-bump") {
        f.kind = FunctionKind::GaussianBump;
        f.center = cfg::require<Vec>(j, "center", "function");
        f.width = cfg::get_or<double>(j, "width", "function", 1.0);
        f.scale = cfg::get_or<double>(j, "scale", "function", 1.0);
        f.offset = cfg::get_or<double>(j, "offset", "function", 0.0);
    } else if (kind == "indicator-halfspace") {
        f.kind = FunctionKind::IndicatorHalfspace;
        f.regularity = Regularity::UpperSemicontinuous;
        f.direction = cfg::require<Vec>(j, "direction", "function");
        f.shift = cfg::get_or<double>(j, "shift", "function", 0.0);
    } else if (kind == "indicator-ball") {
        f.kind = FunctionKind::IndicatorBall;
        f.regularity = Regularity::UpperSemicontinuous;
        f.center = cfg::require<Vec>(j, "center", "function");
        f.width = cfg::require<double>(j, "width", "function");
    } else if (kind == "piecewise-linear-capped") {
        f.kind = FunctionKind::PiecewiseLinearCapped;
        f.direction = cfg::require<Vec>(j, "direction", "function");
        f.shift = cfg::get_or<double>(j, "shift", "function", 0.0);
        f.cap_lo = cfg::require<double>(j, "cap_lo", "function");
        f.cap_hi = cfg::require<double>(j, "cap_hi", "function");
    } else
        throw ConfigError("config: unknown function kind at function.kind");
    return f;
}

struct RunConfig {
    ModelSpec model;
    GridSpec grid;
    std::size_t control_points_per_axis = 3;
    TestFunction function;
    Json command;
    Json echo;                  // full parsed config, canonical order
    std::uint64_t hash = 0;     // content hash of the echo
    std::uint64_t model_hash = 0;
};

inline RunConfig parse_config(const Json& j) {
    cfg::reject_unknown(j, {"model", "grid", "control", "function", "command"}, "<root>");
    RunConfig rc;
    if (!j.contains("model")) throw ConfigError("config: missing key <root>.model");
    rc.model = parse_model(j.at("model"));

    if (!j.contains("grid")) throw ConfigError("config: missing key <root>.grid");
    const Json& gj = j.at("grid");
    cfg::reject_unknown(gj, {"domain", "dx", "dt", "t_end"}, "grid");
    const Box domain = cfg::parse_box(gj.at("domain"), "grid.domain");
    if (domain.dim() != rc.model.d) throw ConfigError("config: grid.domain dimension mismatch");
    const SpatialGrid space(domain, cfg::require<Vec>(gj, "dx", "grid"));
    const double t_end = cfg::require<double>(gj, "t_end", "grid");

    if (j.contains("control")) {
        cfg::reject_unknown(j.at("control"), {"points_per_axis"}, "control");
        rc.control_points_per_axis =
            cfg::require<std::size_t>(j.at("control"), "points_per_axis", "control");
    }
    const ControlMesh mesh = make_control_mesh(rc.model.control_box, rc.control_points_per_axis);

    double dt = 0.0;
    if (gj.contains("dt") && gj.at("dt").is_string()) {
        if (gj.at("dt").get<std::string>() != "cfl-max")
            throw ConfigError("config: bad value at grid.dt (number or \"cfl-max\")");
        dt = cfl_limit(rc.model, mesh, space);
    } else {
        dt = cfg::require<double>(gj, "dt", "grid");
    }
    rc.grid = GridSpec(space, dt, t_end);

    if (!j.contains("function")) throw ConfigError("config: missing key <root>.function");
    rc.function = parse_function(j.at("function"));
    if (!j.contains("command")) throw ConfigError("config: missing key <root>.command");
    rc.command = j.at("command");

    rc.echo = j;
    rc.hash = fnv1a64(rc.echo.dump());
    rc.model_hash = fnv1a64(j.at("model").dump());
    return rc;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    Json j;
    try {
        in >> j;
    } catch (const Json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace nldiff
