#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "pbe/evolution.hpp"

namespace pbe::app {

using json = nlohmann::ordered_json;

// flat key = value configuration; later sources override earlier ones
class RunConfig {
public:
    static RunConfig parse_text(const std::string& text, const std::string& origin = "config");
    static RunConfig from_file(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value);
    void merge(const RunConfig& other);
    bool has(const std::string& key) const { return kv_.count(key) != 0; }

    std::string str(const std::string& key, const std::string& def) const;
    double num(const std::string& key, double def) const;
    int integer(const std::string& key, int def) const;
    std::vector<double> list(const std::string& key, const std::vector<double>& def) const;

    // unknown keys are configuration errors
    void require_known(const std::vector<std::string>& keys) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }
    json to_json() const;
    // effective values looked up so far, defaults included
    json effective() const;

private:
    std::map<std::string, std::string> kv_;
    mutable std::map<std::string, std::string> used_;
};

std::string fmt(double x); // 17 significant digits

using Cell = std::variant<double, long long, std::string>;

class Output {
public:
    explicit Output(std::filesystem::path dir);
    const std::filesystem::path& dir() const { return dir_; }
    // header entries are "name[unit]"
    void csv(const std::string& name, const std::vector<std::string>& header,
             const std::vector<std::vector<Cell>>& rows);
    const std::vector<std::string>& files() const { return files_; }

private:
    std::filesystem::path dir_;
    std::vector<std::string> files_;
};

// grid, dispersion, delta and collision model from the config
struct Model {
    TorusGrid grid;
    DispersionTable disp;
    CollisionModel model;

    Model(const RunConfig& cfg, int default_n);
    json describe() const;
};

// linearization, spectrum, slow basis, fast solver, kappa and the D(p) family
struct Hydro {
    Linearization lin;
    SpectralSummary spec;
    SlowBasis basis;
    FastSolver solver;
    ConductivityMatrix kappa;
    ModeFamily fam;

    explicit Hydro(const Model& m);
};

struct Context {
    const RunConfig& cfg;
    Output& out;
    json timing = json::object();
};

using Runner = json (*)(Context&);

struct Subcommand {
    std::string name;
    std::string help;
    std::vector<std::string> keys; // accepted besides the common ones
    Runner run;
};

const std::vector<std::string>& common_keys();
const std::vector<Subcommand>& subcommands();
const Subcommand& find_subcommand(const std::string& name);

// the full manifest; exit code 0, 2 (config) or 3 (numerical)
struct RunResult {
    json manifest;
    int exit_code = 0;
};
RunResult execute(const std::string& subcommand, const RunConfig& cfg,
                  const std::optional<std::string>& out_flag = std::nullopt);

// output directory from the config, overridden by PBE_OUTPUT_DIR, overridden by a flag
std::filesystem::path output_dir(const RunConfig& cfg, const std::optional<std::string>& flag);

json run_spectrum(Context& ctx);
json run_kappa(Context& ctx);
json run_collision_check(Context& ctx);
json run_dispersion_relation(Context& ctx);
json run_semigroup_bounds(Context& ctx);
json run_evolve(Context& ctx);
json run_hydro_limit(Context& ctx);
json run_validate_kernel(Context& ctx);

} // namespace pbe::app
