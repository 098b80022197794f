#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "ddmpc/config.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

std::string read_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ddmpc::ConfigError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

fs::path default_out_dir(const std::string& cli_out) {
    if (!cli_out.empty()) return cli_out;
    if (const char* env = std::getenv("DDMPC_OUT")) return env;
    return ".";
}

void write_qp_dump(const ddmpc::QpProblem& qp, const fs::path& path) {
    std::ofstream os(path);
    os.precision(17);
    os << "c," << qp.c << "\n";
    os << "g";
    for (Eigen::Index i = 0; i < qp.g.size(); ++i) os << "," << qp.g(i);
    os << "\n";
    for (Eigen::Index i = 0; i < qp.H.rows(); ++i) {
        os << "H";
        for (Eigen::Index j = 0; j < qp.H.cols(); ++j)
            os << "," << qp.H(i, j);
        os << "\n";
    }
}

int run_and_emit(const ddmpc::ExperimentConfig& cfg, const fs::path& out,
                 bool dump_qp) {
    ddmpc::ExperimentConfig run_cfg = cfg;
    run_cfg.capture_qp = dump_qp;

    ddmpc::ExperimentResult result;
    try {
        result = ddmpc::run_experiment(run_cfg);
    } catch (const ddmpc::NumericalError& e) {
        std::cerr << "ddmpc: " << e.what() << "\n";
        return kExitNumerical;
    }

    fs::create_directories(out);
    {
        std::ofstream os(out / "log.csv");
        ddmpc::write_log_csv(result.log, os);
    }
    {
        std::ofstream os(out / "report.txt");
        ddmpc::write_report(ddmpc::summarize(result.log), result.estimate, os);
    }
    if (dump_qp && result.first_qp)
        write_qp_dump(*result.first_qp, out / "qp.csv");
    return kExitOk;
}

int run_identify(const ddmpc::ExperimentConfig& cfg) {
    const double t_exc = cfg.effective_excitation_duration();
    ddmpc::ExcitationSpec exc = cfg.excitation;
    if (exc.K0.size() == 0)
        exc.K0 = ddmpc::Matrix::Zero(cfg.plant.m(), cfg.plant.n());
    const auto traj = ddmpc::simulate(
        cfg.plant, cfg.x0,
        [&exc](double t, const ddmpc::Vector& x) {
            return ddmpc::excitation_input(exc, x, t);
        },
        0.0, t_exc, cfg.dt_sim);
    try {
        const auto batch = ddmpc::assemble_batch(
            traj, cfg.delta, cfg.effective_l(), cfg.measurement_mode);
        const auto report = ddmpc::excitation_report(batch);
        if (!report.rank_ok) {
            std::cerr << "ddmpc: excitation data is rank deficient "
                         "(condition estimate "
                      << report.condition_estimate << ")\n";
            return kExitNumerical;
        }
        ddmpc::write_estimate_report(ddmpc::estimate(batch), std::cout);
    } catch (const ddmpc::RankDeficientError& e) {
        std::cerr << "ddmpc: " << e.what() << "\n";
        return kExitNumerical;
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"data-driven receding-horizon control toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::int64_t seed_override = -1;
    bool dump_qp = false;
    std::string demo_name;

    auto* run = app.add_subcommand("run", "run a closed-loop experiment");
    run->add_option("config", config_path, "experiment JSON")->required();
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed_override, "override the config seed");
    run->add_flag("--dump-qp", dump_qp, "dump the first control-step QP");

    auto* identify =
        app.add_subcommand("identify", "excitation and estimation only");
    identify->add_option("config", config_path, "experiment JSON")->required();
    identify->add_option("--seed", seed_override, "override the config seed");

    auto* demo = app.add_subcommand("demo", "run a bundled fixture");
    demo->add_option("name", demo_name, "fixture name (cstr)")->required();
    demo->add_option("--out", out_dir, "output directory");
    demo->add_option("--seed", seed_override, "override the config seed");

    CLI11_PARSE(app, argc, argv);

    try {
        std::string text;
        if (demo->parsed()) {
            if (demo_name != "cstr") {
                std::cerr << "ddmpc: unknown demo \"" << demo_name << "\"\n";
                return kExitConfig;
            }
            text = ddmpc::cstr_demo_config();
        } else {
            text = read_file(config_path);
        }
        std::optional<std::uint64_t> seed;
        if (seed_override >= 0)
            seed = static_cast<std::uint64_t>(seed_override);
        ddmpc::ExperimentConfig cfg = ddmpc::parse_config(text, seed);

        if (identify->parsed()) return run_identify(cfg);
        return run_and_emit(cfg, default_out_dir(out_dir), dump_qp);
    } catch (const ddmpc::ConfigError& e) {
        std::cerr << "ddmpc: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ddmpc::RankDeficientError& e) {
        std::cerr << "ddmpc: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "ddmpc: " << e.what() << "\n";
        return kExitNumerical;
    }
}
