#include "uavmec/cvar.hpp"
#include "uavmec/decomposition.hpp"
#include "uavmec/driver.hpp"
#include "uavmec/experiment.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace {

using namespace uavmec;

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Scenario load_with_overrides(const std::string& path, uint64_t* seed) {
    std::string text = slurp(path);
    if (seed) text += "\n[seed]\nseed = " + std::to_string(*seed) + "\n";
    return load_scenario(text);
}

int cmd_validate(const std::string& scenario_path) {
    const Scenario s = load_scenario(slurp(scenario_path));
    std::printf("scenario ok: %d GUs, %d S-UAVs, %d slots, alpha=%.3g, tau=%.3g s\n", s.I, s.M,
                s.T, s.params.alpha, s.params.tau);
    return 0;
}

int cmd_run(const std::string& scenario_path, bool ideal, int max_rounds, double zeta,
            double tol, const std::string& out_dir, uint64_t* seed) {
    Scenario s = load_with_overrides(scenario_path, seed);
    if (zeta > 0.0) s.params.zeta = zeta;
    if (tol > 0.0) s.params.solver_tol = tol;

    const OptimizationResult r =
        ideal ? ideal_baseline(s, max_rounds) : optimize(s, max_rounds);
    std::printf("status: %s\n", to_string(r.status));
    if (r.status == OptStatus::infeasible) {
        std::printf("reason: %s\n", r.infeasible_reason.c_str());
        return 2;
    }
    std::printf("rounds: %d\n", r.rounds);
    std::printf("Gamma: %.12g J\n", r.breakdown.gamma);
    std::printf("  local %.12g J | tx %.12g J | flight %.12g J | edge %.12g J (raw sums)\n",
                r.breakdown.sum_local(), r.breakdown.sum_tx(), r.breakdown.sum_fly(),
                r.breakdown.sum_edge());
    std::printf("offloaded: %.12g bits\n", offloaded_bits(s, r.decision));
    std::printf("timings: ratios %.2fs, assignment %.2fs, trajectory %.2fs\n",
                r.timings.ratios_s, r.timings.assignment_s, r.timings.trajectory_s);
    std::printf("gamma trace:");
    for (double g : r.gamma_trace) std::printf(" %.6f", g);
    std::printf("\n");

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream traj(std::filesystem::path(out_dir) / "trajectories.csv");
        traj << "phase,m,t,x,y\n";
        const Decision init = straight_line_init(s);
        for (int m = 0; m < s.M; ++m)
            for (int t = 0; t < s.T; ++t) {
                traj << "init," << m << "," << t << "," << init.w(m, t)[0] << ","
                     << init.w(m, t)[1] << "\n";
                traj << "optimized," << m << "," << t << "," << r.decision.w(m, t)[0] << ","
                     << r.decision.w(m, t)[1] << "\n";
            }
        std::ofstream sc(std::filesystem::path(out_dir) / "scenario.resolved");
        sc << serialize_scenario(s);
        std::printf("wrote %s/{trajectories.csv,scenario.resolved}\n", out_dir.c_str());
    }
    return 0;
}

int cmd_sweep(const std::string& preset_name, const std::string& scenario_override,
              const std::string& out_override, int jobs, int max_rounds) {
    ExperimentPreset preset = load_preset(preset_name);
    if (!scenario_override.empty()) preset.scenario_path = scenario_override;
    if (!out_override.empty()) preset.out_dir = out_override;
    if (max_rounds > 0) preset.max_rounds = max_rounds;
    validate_preset(preset);

    const auto rows = run_experiment(preset, jobs);
    int infeasible = 0;
    for (const auto& r : rows)
        if (r.status_robust == "infeasible" || r.status_ideal == "infeasible") ++infeasible;
    std::printf("sweep `%s`: %zu runs written to %s (%d infeasible)\n", preset.name.c_str(),
                rows.size(), preset.out_dir.c_str(), infeasible);
    const Summary sum = summarize(preset.out_dir);
    std::fputs(sum.text.c_str(), stdout);
    return 0;
}

int cmd_summarize(const std::string& dir) {
    const Summary sum = summarize(dir);
    std::fputs(sum.text.c_str(), stdout);
    return 0;
}

// Brute-force oracle comparisons, printed for manual inspection.
int cmd_oracle(uint64_t seed) {
    std::mt19937_64 eng(seed);
    auto uni = [&eng](double lo, double hi) {
        return lo + (hi - lo) * static_cast<double>(eng() >> 11) * 0x1.0p-53;
    };

    std::printf("worst-case CVaR: closed form vs two-point grid search\n");
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        cvar::LinearLoss loss;
        loss.Theta = uni(-10.0, 10.0);
        loss.theta0 = uni(-10.0, 10.0);
        loss.mu = uni(-1.0, 1.0);
        loss.sigma = uni(0.0, 2.0);
        const double alpha = std::vector<double>{0.8, 0.9, 0.95, 0.99}[eng() % 4];
        const double cf = cvar::worst_case_cvar_closed_form(loss, alpha);
        const double grid = cvar::two_point_grid_cvar(loss, alpha);
        worst = std::max(worst, std::abs(cf - grid));
        if (k < 5)
            std::printf("  Theta=%7.3f theta0=%7.3f sigma=%5.3f alpha=%.2f | closed %10.6f | "
                        "grid %10.6f\n",
                        loss.Theta, loss.theta0, loss.sigma, alpha, cf, grid);
    }
    std::printf("  max |closed - grid| over 20 draws: %.3g (gate 1e-4)\n", worst);

    std::printf("assignment: min-cost flow vs exhaustive enumeration\n");
    int mism = 0;
    for (int k = 0; k < 50; ++k) {
        const int I = 2 + static_cast<int>(eng() % 5);
        const int M = 1 + static_cast<int>(eng() % 3);
        const int m_max = 1 + static_cast<int>(eng() % 3);
        AssignmentSlot slot;
        slot.cost = Grid2<double>(I, M, 0.0);
        slot.allowed = Grid2<uint8_t>(I, M, 0);
        for (int i = 0; i < I; ++i) {
            if (uni(0.0, 1.0) < 0.3) continue;
            slot.mandatory.push_back(i);
            for (int m = 0; m < M; ++m)
                if (uni(0.0, 1.0) < 0.85) {
                    slot.allowed(i, m) = 1;
                    slot.cost(i, m) = uni(0.0, 1.0);
                }
        }
        const SlotAssignment f = flow_slot_assignment(slot, I, M, m_max);
        const SlotAssignment e = enumerate_slot_assignment(slot, I, M, m_max);
        if (f.feasible != e.feasible || (f.feasible && std::abs(f.cost - e.cost) > 1e-9)) ++mism;
    }
    std::printf("  %d mismatches over 50 random slots\n", mism);
    return (worst <= 1e-4 && mism == 0) ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Robust secure computation offloading for multi-UAV MEC"};
    app.require_subcommand(1);

    std::string scenario_path, preset_name, out_dir, results_dir;
    uint64_t seed = 0;
    bool seed_set = false, ideal = false;
    int jobs = 1, max_rounds = 30;
    double zeta = -1.0, tol = -1.0;

    auto* validate = app.add_subcommand("validate", "check a scenario file");
    validate->add_option("--scenario", scenario_path, "scenario file")->required();

    auto* run = app.add_subcommand("run", "optimize one scenario");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_flag("--ideal", ideal, "deterministic baseline instead of the robust problem");
    run->add_option("--max-rounds", max_rounds, "BCD round cap");
    run->add_option("--zeta", zeta, "convergence accuracy (J)");
    run->add_option("--tol", tol, "conic duality-gap tolerance");
    run->add_option("--out", out_dir, "output directory");
    run->add_option("--seed", seed, "override the task-stream seed")
        ->each([&seed_set](const std::string&) { seed_set = true; });

    auto* sweep = app.add_subcommand("sweep", "run an experiment preset");
    sweep->add_option("--preset", preset_name, "built-in name or JSON preset path")->required();
    sweep->add_option("--scenario", scenario_path, "override the preset's base scenario");
    sweep->add_option("--out", out_dir, "override the output directory");
    sweep->add_option("--jobs", jobs, "worker pool size");
    sweep->add_option("--max-rounds", max_rounds, "BCD round cap");

    auto* summ = app.add_subcommand("summarize", "aggregate a results directory");
    summ->add_option("--out", results_dir, "directory containing results.csv")->required();

    auto* oracle = app.add_subcommand("oracle", "run the brute-force oracle comparisons");
    oracle->add_option("--seed", seed, "oracle RNG seed");

    CLI11_PARSE(app, argc, argv);

    try {
        if (validate->parsed()) return cmd_validate(scenario_path);
        if (run->parsed())
            return cmd_run(scenario_path, ideal, max_rounds, zeta, tol, out_dir,
                           seed_set ? &seed : nullptr);
        if (sweep->parsed())
            return cmd_sweep(preset_name, scenario_path, out_dir, jobs, max_rounds);
        if (summ->parsed()) return cmd_summarize(results_dir);
        if (oracle->parsed()) return cmd_oracle(seed ? seed : 20240901);
    } catch (const ParseError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const InfeasibleError& e) {
        std::fprintf(stderr, "infeasible: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "internal: %s\n", e.what());
        return 3;
    }
    return 0;
}
