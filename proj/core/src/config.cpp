#include "ddmpc/config.hpp"

#include <random>
#include <set>

#include "json.hpp"

namespace ddmpc {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& path, const std::string& why) {
    throw ConfigError("config: " + path + ": " + why);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    if (!obj.is_object()) fail(path, "expected an object");
    for (const auto& [key, _] : obj.items())
        if (!allowed.count(key)) fail(path + "." + key, "unknown key");
}

Matrix parse_matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        fail(path, "expected an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j[0].size());
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const auto& row = j[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            fail(path, "ragged matrix rows");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const auto& cell = row[static_cast<std::size_t>(k)];
            if (!cell.is_number()) fail(path, "non-numeric entry");
            m(i, k) = cell.get<double>();
        }
    }
    return m;
}

Vector parse_vector(const json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        const auto& cell = j[static_cast<std::size_t>(i)];
        if (!cell.is_number()) fail(path, "non-numeric entry");
        v(i) = cell.get<double>();
    }
    return v;
}

Sinusoid parse_sinusoid(const json& j, const std::string& path) {
    check_keys(j, path, {"amplitude", "frequency", "phase"});
    Sinusoid s;
    s.amplitude = j.value("amplitude", 0.0);
    s.frequency = j.value("frequency", 0.0);
    s.phase = j.value("phase", 0.0);
    return s;
}

json dump_matrix(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

json dump_vector(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

json dump_sinusoid(const Sinusoid& s) {
    return json{{"amplitude", s.amplitude},
                {"frequency", s.frequency},
                {"phase", s.phase}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& text,
                              std::optional<std::uint64_t> seed_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: JSON parse error: ") +
                          e.what());
    }

    check_keys(root, "$",
               {"plant", "x0", "measurement_mode", "excitation", "collection",
                "identification", "mpc", "reference", "control_period",
                "total_time", "seed", "use_true_model"});

    ExperimentConfig cfg;

    if (!root.contains("plant")) fail("plant", "required");
    check_keys(root["plant"], "plant", {"A", "B"});
    cfg.plant = LtiModel(parse_matrix(root["plant"]["A"], "plant.A"),
                         parse_matrix(root["plant"]["B"], "plant.B"));
    const auto n = cfg.plant.n();
    const auto m = cfg.plant.m();

    cfg.x0 = root.contains("x0") ? parse_vector(root["x0"], "x0")
                                 : Vector::Zero(n).eval();

    const std::string mode = root.value("measurement_mode", "full");
    if (mode == "full")
        cfg.measurement_mode = MeasurementMode::Full;
    else if (mode == "partial")
        cfg.measurement_mode = MeasurementMode::Partial;
    else
        fail("measurement_mode", "must be \"full\" or \"partial\"");

    cfg.seed = seed_override ? *seed_override
                             : root.value("seed", std::uint64_t{0});

    // Seeded phases decorrelate channels sharing the frequency grid.
    const auto seeded_dither = [&cfg, m](int count) {
        cfg.excitation.dither = default_dither(count, static_cast<int>(m));
        std::mt19937_64 rng(cfg.seed);
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        for (auto& ch : cfg.excitation.dither)
            for (auto& s : ch) s.phase = phase(rng);
    };

    if (root.contains("excitation")) {
        const auto& exc = root["excitation"];
        check_keys(exc, "excitation",
                   {"K0", "sinusoids", "auto_count", "duration"});
        if (exc.contains("K0"))
            cfg.excitation.K0 = parse_matrix(exc["K0"], "excitation.K0");
        cfg.excitation.duration = exc.value("duration", 0.0);
        if (!exc.contains("sinusoids") ||
            (exc["sinusoids"].is_string() && exc["sinusoids"] == "auto")) {
            seeded_dither(exc.value(
                "auto_count", static_cast<int>(n * n + n * m)));
        } else {
            const auto& lists = exc["sinusoids"];
            if (!lists.is_array())
                fail("excitation.sinusoids",
                     "expected \"auto\" or per-channel lists");
            for (std::size_t j = 0; j < lists.size(); ++j) {
                std::vector<Sinusoid> ch;
                for (std::size_t i = 0; i < lists[j].size(); ++i)
                    ch.push_back(parse_sinusoid(
                        lists[j][i], "excitation.sinusoids[" +
                                         std::to_string(j) + "][" +
                                         std::to_string(i) + "]"));
                cfg.excitation.dither.push_back(std::move(ch));
            }
        }
    } else {
        seeded_dither(static_cast<int>(n * n + n * m));
    }
    if (cfg.excitation.K0.size() == 0)
        cfg.excitation.K0 = Matrix::Zero(m, n);

    if (!root.contains("collection")) fail("collection", "required");
    check_keys(root["collection"], "collection", {"delta", "l", "dt_sim"});
    cfg.delta = root["collection"].value("delta", 0.05);
    cfg.l = root["collection"].value("l", 0);
    cfg.dt_sim = root["collection"].value("dt_sim", 1e-3);

    if (root.contains("identification")) {
        const auto& ident = root["identification"];
        check_keys(ident, "identification", {"retention", "reidentify"});
        const std::string ret = ident.value("retention", "growing");
        if (ret == "growing")
            cfg.retention = Retention::Growing;
        else if (ret == "window")
            cfg.retention = Retention::Window;
        else
            fail("identification.retention",
                 "must be \"growing\" or \"window\"");
        cfg.reidentify = ident.value("reidentify", true);
    }

    if (!root.contains("mpc")) fail("mpc", "required");
    const auto& mj = root["mpc"];
    check_keys(mj, "mpc",
               {"T", "r", "rho_override", "Q", "R", "P_terminal", "u_min",
                "u_max", "epsilon", "constraint_grid_points"});
    if (!mj.contains("T")) fail("mpc.T", "required");
    if (!mj.contains("r")) fail("mpc.r", "required");
    cfg.mpc.T = mj["T"].get<double>();
    cfg.mpc.r = mj["r"].get<int>();
    if (mj.contains("rho_override"))
        cfg.mpc.rho_override = mj["rho_override"].get<int>();
    cfg.mpc.Q = parse_matrix(mj.value("Q", json::array()), "mpc.Q");
    cfg.mpc.R = parse_matrix(mj.value("R", json::array()), "mpc.R");
    if (mj.contains("P_terminal"))
        cfg.mpc.P_terminal = parse_matrix(mj["P_terminal"], "mpc.P_terminal");
    if (!mj.contains("u_min") || !mj.contains("u_max"))
        fail("mpc.u_min/u_max", "required");
    cfg.mpc.u_lo = parse_vector(mj["u_min"], "mpc.u_min");
    cfg.mpc.u_hi = parse_vector(mj["u_max"], "mpc.u_max");
    cfg.mpc.epsilon = mj.value("epsilon", 1e-10);
    cfg.mpc.constraint_grid_points = mj.value("constraint_grid_points", 32);

    if (!root.contains("reference")) fail("reference", "required");
    const auto& rj = root["reference"];
    check_keys(rj, "reference",
               {"kind", "setpoint", "coefficients", "channels",
                "max_derivative_order"});
    const std::string kind = rj.value("kind", "constant");
    if (kind == "constant") {
        cfg.reference.kind = ReferenceSpec::Kind::Constant;
        cfg.reference.setpoint =
            parse_vector(rj.value("setpoint", json::array()),
                         "reference.setpoint");
    } else if (kind == "polynomial") {
        cfg.reference.kind = ReferenceSpec::Kind::Polynomial;
        cfg.reference.poly_coeffs =
            parse_matrix(rj.value("coefficients", json::array()),
                         "reference.coefficients");
    } else if (kind == "sinusoid") {
        cfg.reference.kind = ReferenceSpec::Kind::Sinusoid;
        if (!rj.contains("channels")) fail("reference.channels", "required");
        for (std::size_t i = 0; i < rj["channels"].size(); ++i)
            cfg.reference.channels.push_back(parse_sinusoid(
                rj["channels"][i],
                "reference.channels[" + std::to_string(i) + "]"));
    } else {
        fail("reference.kind",
             "must be \"constant\", \"polynomial\", or \"sinusoid\"");
    }
    cfg.reference.max_derivative_order =
        rj.value("max_derivative_order", 10);

    cfg.control_period = root.value("control_period", 0.0);
    if (!root.contains("total_time")) fail("total_time", "required");
    cfg.total_time = root["total_time"].get<double>();
    cfg.use_true_model = root.value("use_true_model", false);

    try {
        cfg.validate();
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return cfg;
}

std::string serialize_config(const ExperimentConfig& cfg) {
    json root;
    root["plant"] = {{"A", dump_matrix(cfg.plant.A)},
                     {"B", dump_matrix(cfg.plant.B)}};
    root["x0"] = dump_vector(cfg.x0);
    root["measurement_mode"] =
        cfg.measurement_mode == MeasurementMode::Full ? "full" : "partial";
    json dither = json::array();
    for (const auto& ch : cfg.excitation.dither) {
        json list = json::array();
        for (const auto& s : ch) list.push_back(dump_sinusoid(s));
        dither.push_back(std::move(list));
    }
    root["excitation"] = {{"K0", dump_matrix(cfg.excitation.K0)},
                          {"sinusoids", std::move(dither)},
                          {"duration", cfg.excitation.duration}};
    root["collection"] = {
        {"delta", cfg.delta}, {"l", cfg.l}, {"dt_sim", cfg.dt_sim}};
    root["identification"] = {
        {"retention",
         cfg.retention == Retention::Growing ? "growing" : "window"},
        {"reidentify", cfg.reidentify}};
    json mj;
    mj["T"] = cfg.mpc.T;
    mj["r"] = cfg.mpc.r;
    if (cfg.mpc.rho_override) mj["rho_override"] = *cfg.mpc.rho_override;
    mj["Q"] = dump_matrix(cfg.mpc.Q);
    mj["R"] = dump_matrix(cfg.mpc.R);
    if (cfg.mpc.P_terminal.size() > 0)
        mj["P_terminal"] = dump_matrix(cfg.mpc.P_terminal);
    mj["u_min"] = dump_vector(cfg.mpc.u_lo);
    mj["u_max"] = dump_vector(cfg.mpc.u_hi);
    mj["epsilon"] = cfg.mpc.epsilon;
    mj["constraint_grid_points"] = cfg.mpc.constraint_grid_points;
    root["mpc"] = std::move(mj);
    json rj;
    switch (cfg.reference.kind) {
        case ReferenceSpec::Kind::Constant:
            rj["kind"] = "constant";
            rj["setpoint"] = dump_vector(cfg.reference.setpoint);
            break;
        case ReferenceSpec::Kind::Polynomial:
            rj["kind"] = "polynomial";
            rj["coefficients"] = dump_matrix(cfg.reference.poly_coeffs);
            break;
        case ReferenceSpec::Kind::Sinusoid: {
            rj["kind"] = "sinusoid";
            json chans = json::array();
            for (const auto& s : cfg.reference.channels)
                chans.push_back(dump_sinusoid(s));
            rj["channels"] = std::move(chans);
            break;
        }
    }
    rj["max_derivative_order"] = cfg.reference.max_derivative_order;
    root["reference"] = std::move(rj);
    root["control_period"] = cfg.control_period;
    root["total_time"] = cfg.total_time;
    root["seed"] = cfg.seed;
    root["use_true_model"] = cfg.use_true_model;
    return root.dump(2);
}

std::string cstr_demo_config() {
    // Linearized pair of coupled stirred tanks around an operating point;
    // the setpoint is the steady state of u = [0.5, 0.4].
    return R"json({
  "plant": {
    "A": [[-1.2, 0.0, 0.3, 0.0],
          [0.8, -1.6, 0.0, 0.2],
          [0.2, 0.0, -1.0, 0.0],
          [0.0, 0.3, 0.7, -1.4]],
    "B": [[1.0, 0.0],
          [0.3, 0.0],
          [0.0, 1.0],
          [0.0, 0.4]]
  },
  "x0": [0.0, 0.0, 0.0, 0.0],
  "measurement_mode": "full",
  "excitation": {"sinusoids": "auto"},
  "collection": {"delta": 0.05, "l": 96, "dt_sim": 0.001},
  "mpc": {
    "T": 1.0,
    "r": 2,
    "Q": [[10.0, 0.0, 0.0, 0.0],
          [0.0, 10.0, 0.0, 0.0],
          [0.0, 0.0, 10.0, 0.0],
          [0.0, 0.0, 0.0, 10.0]],
    "R": [[0.01, 0.0], [0.0, 0.01]],
    "u_min": [-5.0, -5.0],
    "u_max": [5.0, 5.0]
  },
  "reference": {
    "kind": "constant",
    "setpoint": [0.54385964912280704, 0.42309673265733139,
                 0.50877192982456154, 0.4593352647674232]
  },
  "total_time": 12.0,
  "seed": 7
})json";
}

}  // namespace ddmpc
