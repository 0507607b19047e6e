// end-to-end acceptance run: one PASS/FAIL line per criterion
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "app.hpp"

using namespace pbe::app;
namespace fs = std::filesystem;

namespace {

fs::path g_root;
int g_failed = 0;

json run(const std::string& sub, const std::string& tag, const std::vector<std::pair<std::string, std::string>>& kv)
{
    RunConfig cfg;
    for (const auto& [k, v] : kv) cfg.set(k, v);
    fs::path dir = g_root / tag;
    fs::remove_all(dir);
    RunResult r = execute(sub, cfg, dir.string());
    if (r.manifest["status"] != "ok")
        throw std::runtime_error(sub + " (" + tag + "): " + r.manifest.value("error", std::string("failed")));
    std::cerr << "  " << tag << ": " << r.manifest["timing"]["total_seconds"].get<double>() << " s\n";
    return r.manifest["results"];
}

void report(int id, const std::string& what, bool ok, const std::string& detail)
{
    std::printf("criterion %2d %s: %s | %s\n", id, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++g_failed;
}

std::string g(double x)
{
    char b[32];
    std::snprintf(b, sizeof b, "%.4g", x);
    return b;
}

template <class F>
void guarded(int id, const std::string& what, F&& f)
{
    try {
        f();
    } catch (const std::exception& e) {
        report(id, what, false, std::string("error: ") + e.what());
    }
}

std::string slurp(const fs::path& p)
{
    std::ifstream f(p, std::ios::binary);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

json comparable_manifest(const fs::path& p)
{
    json m = json::parse(slurp(p));
    m.erase("timing");
    m.erase("workers");
    m["config"].erase("workers");
    m["effective"].erase("workers");
    return m;
}

} // namespace

int main(int argc, char** argv)
{
    g_root = argc > 1 ? fs::path(argv[1]) : fs::path("acceptance_out");
    fs::create_directories(g_root);
    const std::string seed = "20240607";

    json cc16, cc32, sp16, sp24, sp32, kap;
    try {
        cc16 = run("collision-check", "collision_n16", {{"n", "16"}, {"samples", "20"}, {"seed", seed}});
        cc32 = run("collision-check", "collision_n32", {{"n", "32"}, {"samples", "0"}, {"seed", seed}});
        sp16 = run("spectrum", "spectrum_n16", {{"n", "16"}, {"fd_directions", "10"}, {"seed", seed}});
        sp24 = run("spectrum", "spectrum_n24", {{"n", "24"}, {"fd_directions", "0"}});
        sp32 = run("spectrum", "spectrum_n32", {{"n", "32"}, {"fd_directions", "0"}});
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
    }

    guarded(1, "equilibrium annihilation", [&] {
        double t16 = cc16.at("tau_eq"), t32 = cc32.at("tau_eq");
        report(1, "equilibrium annihilation", t32 < t16,
               "tau_eq(16)=" + g(t16) + " tau_eq(32)=" + g(t32) + " (shrink required)");
    });
    guarded(2, "conservation", [&] {
        const json& ch = cc16.at("checks");
        report(2, "conservation", ch.at("conservation").get<bool>(),
               "worst relative " + g(cc16.at("conservation_worst_relative")) + " over " +
                   std::to_string(cc16.at("samples").get<int>()) + " samples, tol 1e-10");
    });
    guarded(3, "entropy production", [&] {
        const json& ch = cc16.at("checks");
        bool ok = ch.at("entropy_nonnegative").get<bool>() && ch.at("entropy_equilibrium_within_tau_eq").get<bool>() &&
                  ch.at("entropy_perturbation_above_10_tau_eq").get<bool>();
        report(3, "entropy production", ok,
               "equilibrium max " + g(cc16.at("entropy_equilibrium_max")) + ", perturbation " +
                   g(cc16.at("perturbation").at("entropy_production")) + ", tau_eq " + g(cc16.at("tau_eq")));
    });
    guarded(4, "linearization oracle", [&] {
        report(4, "linearization oracle", sp16.at("checks").at("fd_oracle").get<bool>(),
               "max relative error " + g(sp16.at("fd_max_relative_error")) + " over 10 directions, tol 1e-4");
    });
    guarded(5, "zero modes and gap", [&] {
        bool zm = sp24.at("checks").at("zero_modes_within_tau_eq").get<bool>() &&
                  sp32.at("checks").at("zero_modes_within_tau_eq").get<bool>();
        double a24 = sp24.at("gap"), a32 = sp32.at("gap");
        double rel = std::abs(a32 - a24) / a32;
        report(5, "zero modes and gap", zm && a24 > 0.0 && a32 > 0.0 && rel < 0.1,
               "a(24)=" + g(a24) + " a(32)=" + g(a32) + " relative change " + g(rel) + ", zero modes " +
                   (zm ? "within" : "above") + " tau_eq");
    });
    guarded(6, "M + K consistency", [&] {
        double worst = 0.0, lo = INFINITY, hi = 0.0;
        for (const json* s : {&sp16, &sp24, &sp32}) {
            worst = std::max(worst, s->at("row_identity_relative").get<double>());
            double r = s->at("row_abs_K_sup");
            lo = std::min(lo, r);
            hi = std::max(hi, r);
        }
        report(6, "M + K consistency", worst < 1e-8 && hi <= 2.0 * lo,
               "row identity " + g(worst) + ", sup row |K| in [" + g(lo) + ", " + g(hi) + "] over n=16,24,32");
    });

    guarded(7, "kernel reduction cross-check", [&] {
        json vk = run("validate-kernel", "validate_kernel", {{"seed", seed}});
        report(7, "kernel reduction cross-check", vk.at("checks").at("error_halves_per_eta_halving").get<bool>(),
               "worst reduction per halving " + g(vk.at("worst_reduction")) + " (need >= 2)");
    });
    guarded(8, "kappa validity", [&] {
        kap = run("kappa", "kappa_n24", {{"n", "24"}});
        const json& ch = kap.at("checks");
        bool ok = ch.at("symmetric_positive_definite").get<bool>() && ch.at("direction_invariance").get<bool>() &&
                  ch.at("cross_direction_zero").get<bool>();
        report(8, "kappa validity", ok,
               "mu=(" + g(kap.at("mu")[0]) + ", " + g(kap.at("mu")[1]) + "), direction " +
                   g(kap.at("direction_difference")) + ", cross " + g(kap.at("cross_direction_relative")));
    });
    guarded(9, "dispersion-relation match", [&] {
        json dr = run("dispersion-relation", "dispersion_n24", {{"n", "24"}});
        const json& rel = dr.at("relative_difference");
        report(9, "dispersion-relation match", dr.at("checks").at("quadratic_coefficients_match_kappa").get<bool>(),
               "relative differences " + g(rel[0]) + ", " + g(rel[1]) + " (tol 0.05)");
    });
    guarded(10, "semigroup bound sweep", [&] {
        json sb = run("semigroup-bounds", "semigroup_n12", {{"n", "12"}});
        const json& ch = sb.at("checks");
        report(10, "semigroup bound sweep", ch.at("pq_bound_validated").get<bool>() && ch.at("qq_p2_law").get<bool>(),
               "c=" + g(sb.at("c_hat")) + " C=" + g(sb.at("C_hat")) + " check grid " + g(sb.at("C_check")) +
                   ", QQ halving ratios [" + g(sb.at("qq_ratio_range")[0]) + ", " +
                   g(sb.at("qq_ratio_range")[1]) + "]");
    });

    json ev;
    guarded(11, "slow-mode decay", [&] {
        ev = run("evolve", "evolve_n12", {{"n", "12"}});
        const json& ch = ev.at("checks");
        report(11, "slow-mode decay", ch.at("T_slope").get<bool>() && ch.at("v_slope").get<bool>(),
               "slopes T " + g(ev.at("slope_T")) + " (want -0.5), v " + g(ev.at("slope_v")) + " (want -1.0) over [" +
                   g(ev.at("fit_window")[0]) + ", " + g(ev.at("fit_window")[1]) + "]");
    });
    guarded(12, "Fourier law", [&] {
        bool slaved = kap.at("checks").at("fourier_law_slaved").get<bool>();
        bool late = ev.at("checks").at("fourier_law_late").get<bool>();
        report(12, "Fourier law", slaved && late,
               "slaved " + g(kap.at("fourier_slaved_worst")) + " (tol 1e-6), trajectory late max " +
                   g(ev.at("fourier_late_max")) + " (tol 0.1)");
    });
    guarded(13, "diffusive-limit convergence", [&] {
        json hl = run("hydro-limit", "hydro_n12", {{"n", "12"}});
        std::string d;
        for (const auto& r : hl.at("rows")) d += g(r.at("distance")) + " ";
        const json& ch = hl.at("checks");
        report(13, "diffusive-limit convergence", ch.at("distance_monotone").get<bool>() && ch.at("final_below_third").get<bool>(),
               "distances " + d + "final ratio " + g(hl.at("final_ratio")));
    });

    guarded(14, "determinism", [&] {
        const std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>> cases = {
            {"collision-check", {{"n", "12"}, {"samples", "4"}, {"seed", seed}}},
            {"spectrum", {{"n", "12"}, {"fd_directions", "3"}, {"seed", seed}}},
            {"kappa", {{"n", "12"}}},
            {"semigroup-bounds", {{"n", "12"}, {"p_list", "0.01,0.04"}, {"t_list", "1,10"}, {"p_check", "0.02"},
                                  {"t_check", "5"}}},
            {"evolve", {{"n", "12"}, {"nx", "16"}, {"X", "40"}, {"sigma", "4"}, {"t_end", "4"}}},
            {"hydro-limit", {{"n", "12"}, {"nx", "16"}, {"eps", "0.4,0.2"}, {"t", "0.25"}}},
            {"validate-kernel", {{"samples", "2"}, {"nq", "512"}, {"etas", "0.5,0.25"}, {"seed", seed}}},
        };
        int mismatches = 0, files = 0;
        std::string bad;
        for (const auto& [sub, kv] : cases) {
            std::vector<fs::path> dirs;
            for (const char* w : {"1", "4"}) {
                auto k = kv;
                k.emplace_back("workers", w);
                std::string tag = "determinism/" + sub + "_w" + w;
                run(sub, tag, k);
                dirs.push_back(g_root / tag);
            }
            for (const auto& e : fs::directory_iterator(dirs[0])) {
                std::string name = e.path().filename().string();
                ++files;
                bool same = name == "manifest.json"
                                ? comparable_manifest(dirs[0] / name) == comparable_manifest(dirs[1] / name)
                                : slurp(dirs[0] / name) == slurp(dirs[1] / name);
                if (!same) {
                    ++mismatches;
                    bad += " " + sub + "/" + name;
                }
            }
        }
        report(14, "determinism", mismatches == 0,
               std::to_string(files) + " files compared across 1 and 4 workers" +
                   (mismatches ? ", differing:" + bad : std::string(", all identical")));
    });

    std::printf("%d of 14 criteria failed\n", g_failed);
    return g_failed == 0 ? 0 : 1;
}
