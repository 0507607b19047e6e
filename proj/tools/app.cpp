#include "app.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <omp.h>

namespace pbe::app {

namespace {

std::string trim(const std::string& s)
{
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v)
{
    try {
        size_t pos = 0;
        double x = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("key '" + key + "': '" + v + "' is not a number");
    }
}

std::string csv_field(const std::string& s)
{
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) {
        if (c == '"') q += '"';
        q += c;
    }
    return q + "\"";
}

} // namespace

RunConfig RunConfig::parse_text(const std::string& text, const std::string& origin)
{
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
        if (k.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
        c.set(k, v);
    }
    return c;
}

RunConfig RunConfig::from_file(const std::filesystem::path& path)
{
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_text(ss.str(), path.string());
}

void RunConfig::set(const std::string& key, const std::string& value) { kv_[key] = value; }

void RunConfig::merge(const RunConfig& other)
{
    for (const auto& [k, v] : other.kv_) kv_[k] = v;
}

std::string RunConfig::str(const std::string& key, const std::string& def) const
{
    auto it = kv_.find(key);
    std::string v = it == kv_.end() ? def : it->second;
    used_[key] = v;
    return v;
}

double RunConfig::num(const std::string& key, double def) const
{
    auto it = kv_.find(key);
    if (it == kv_.end()) {
        used_[key] = fmt(def);
        return def;
    }
    used_[key] = it->second;
    return parse_double(key, it->second);
}

int RunConfig::integer(const std::string& key, int def) const
{
    double x = num(key, def);
    if (x != std::floor(x) || std::abs(x) > 1e9) throw ConfigError("key '" + key + "' must be an integer");
    return static_cast<int>(x);
}

std::vector<double> RunConfig::list(const std::string& key, const std::vector<double>& def) const
{
    auto it = kv_.find(key);
    if (it == kv_.end()) {
        std::string s;
        for (size_t i = 0; i < def.size(); ++i) s += (i ? "," : "") + fmt(def[i]);
        used_[key] = s;
        return def;
    }
    used_[key] = it->second;
    std::vector<double> out;
    std::stringstream ss(it->second);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(parse_double(key, item));
    }
    if (out.empty()) throw ConfigError("key '" + key + "' needs at least one value");
    return out;
}

void RunConfig::require_known(const std::vector<std::string>& keys) const
{
    for (const auto& [k, v] : kv_) {
        bool ok = false;
        for (const auto& a : keys) ok = ok || a == k;
        if (!ok) throw ConfigError("unknown key '" + k + "'");
    }
}

json RunConfig::to_json() const
{
    json j = json::object();
    for (const auto& [k, v] : kv_) j[k] = v;
    return j;
}

json RunConfig::effective() const
{
    json j = json::object();
    for (const auto& [k, v] : used_) j[k] = v;
    return j;
}

std::string fmt(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

Output::Output(std::filesystem::path dir) : dir_(std::move(dir))
{
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir_.string());
}

void Output::csv(const std::string& name, const std::vector<std::string>& header,
                 const std::vector<std::vector<Cell>>& rows)
{
    std::ofstream f(dir_ / name, std::ios::binary);
    if (!f) throw ConfigError("cannot write " + (dir_ / name).string());
    for (size_t i = 0; i < header.size(); ++i) f << (i ? "," : "") << csv_field(header[i]);
    f << "\r\n";
    for (const auto& r : rows) {
        if (r.size() != header.size()) throw std::logic_error("csv row width mismatch in " + name);
        for (size_t i = 0; i < r.size(); ++i) {
            if (i) f << ",";
            if (auto d = std::get_if<double>(&r[i])) f << fmt(*d);
            else if (auto n = std::get_if<long long>(&r[i])) f << *n;
            else f << csv_field(std::get<std::string>(r[i]));
        }
        f << "\r\n";
    }
    files_.push_back(name);
}

namespace {

DeltaKernel delta_from(const RunConfig& cfg, const GridSpec& g, const DispersionParams& dp)
{
    DeltaShape shape = parse_delta_shape(cfg.str("delta_shape", "gaussian"));
    std::string eta = cfg.str("eta", "auto");
    DeltaKernel k = eta == "auto" ? DeltaKernel::automatic(g, dp, shape, cfg.num("eta_factor", 4.0))
                                  : DeltaKernel{shape, parse_double("eta", eta)};
    k.validate();
    return k;
}

Regularization regularization_from(const RunConfig& cfg)
{
    return parse_regularization(cfg.str("regularization", "energy_projected"));
}

GridSpec grid_from(const RunConfig& cfg, int default_n)
{
    GridSpec g{cfg.integer("d", 2), cfg.integer("n", default_n)};
    g.validate();
    return g;
}

DispersionParams disp_from(const RunConfig& cfg)
{
    DispersionParams p{cfg.integer("d", 2), cfg.num("r", 1.0)};
    p.validate();
    return p;
}

} // namespace

Model::Model(const RunConfig& cfg, int default_n)
    : grid(grid_from(cfg, default_n)), disp(grid, disp_from(cfg)),
      model(grid, disp, delta_from(cfg, grid.spec(), disp.params()), cfg.num("rate", 1e8),
            regularization_from(cfg))
{
    if (!(model.rate() > 0.0)) throw ConfigError("rate must be positive");
}

json Model::describe() const
{
    return json{{"d", grid.d()},
                {"n", grid.n()},
                {"r", disp.params().r},
                {"delta_shape", to_string(model.delta().shape)},
                {"eta", model.delta().eta},
                {"rate", model.rate()},
                {"regularization", to_string(model.regularization())}};
}

Hydro::Hydro(const Model& m)
    : lin(assemble_linearization(m.model)), spec(spectrum_L(lin.L, m.disp)), basis(m.disp),
      solver(m.disp, lin.L, spec), kappa(compute_kappa(solver, basis, m.disp, 0)), fam(m.disp, lin.L)
{
}

const std::vector<std::string>& common_keys()
{
    static const std::vector<std::string> k = {"d",    "n",       "r",    "delta_shape", "eta",
                                               "eta_factor", "rate", "regularization", "workers",
                                               "seed", "out"};
    return k;
}

const std::vector<Subcommand>& subcommands()
{
    static const std::vector<Subcommand> s = {
        {"spectrum", "eigenvalues of L, zero-mode residuals, gap, kernel row checks, finite-difference oracle",
         {"fd_directions", "fd_step"}, run_spectrum},
        {"kappa", "diffusion operator, conductivity matrix and the slaved Fourier law",
         {"fourier_p"}, run_kappa},
        {"collision-check", "conservation, equilibrium annihilation and entropy production on random states",
         {"samples", "perturbation"}, run_collision_check},
        {"dispersion-relation", "slow eigenvalues of D(p) against kappa, p0 and b",
         {"p_min", "p_max", "p_count", "p0_hi", "p0_tol"}, run_dispersion_relation},
        {"semigroup-bounds", "sweep of |P e^{-tD} Q| and the QQ block under p-halving",
         {"p_list", "t_list", "p_check", "t_check", "qq_p", "qq_t", "validation_tol"}, run_semigroup_bounds},
        {"evolve", "nonlinear run from gaussian slow data with decay diagnostics",
         {"nx", "X", "sigma", "amplitude", "dt", "integrator", "t_end", "halving_steps", "t_fit_lo", "n_w",
          "late_fraction", "linear_only"},
         run_evolve},
        {"hydro-limit", "rescaled runs against the nonlinear heat equation reference",
         {"nx", "X", "sigma", "amplitude", "ratio", "eps", "t", "dt_scale", "n_w"}, run_hydro_limit},
        {"validate-kernel", "exact-delta reduction of I1 against mollified evaluations",
         {"samples", "etas", "nq", "min_sin", "tol"}, run_validate_kernel},
    };
    return s;
}

const Subcommand& find_subcommand(const std::string& name)
{
    for (const auto& s : subcommands())
        if (s.name == name) return s;
    throw ConfigError("unknown subcommand '" + name + "'");
}

std::filesystem::path output_dir(const RunConfig& cfg, const std::optional<std::string>& flag)
{
    if (flag) return *flag;
    if (const char* env = std::getenv("PBE_OUTPUT_DIR"); env && *env) return env;
    auto it = cfg.entries().find("out");
    if (it != cfg.entries().end()) return it->second;
    return "pbe_out";
}

RunResult execute(const std::string& name, const RunConfig& cfg, const std::optional<std::string>& out_flag)
{
    RunResult rr;
    json& m = rr.manifest;
    m["program"] = "pbe";
    m["version"] = "1.0.0";
    m["subcommand"] = name;
    m["config"] = cfg.to_json();
    m["build"] = json{{"compiler", __VERSION__},
                      {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                    "." + std::to_string(EIGEN_MINOR_VERSION)},
                      {"openmp", _OPENMP}};
    std::filesystem::path dir = output_dir(cfg, out_flag);
    std::unique_ptr<Output> out;
    auto t0 = std::chrono::steady_clock::now();
    try {
        const Subcommand& sc = find_subcommand(name);
        std::vector<std::string> keys = common_keys();
        keys.insert(keys.end(), sc.keys.begin(), sc.keys.end());
        cfg.require_known(keys);
        int workers = cfg.integer("workers", 0);
        if (workers < 0) throw ConfigError("workers must be non-negative");
        if (workers > 0) omp_set_num_threads(workers);
        m["workers"] = workers > 0 ? workers : omp_get_max_threads();
        out = std::make_unique<Output>(dir);
        Context ctx{cfg, *out};
        json res = sc.run(ctx);
        m["status"] = "ok";
        m["results"] = res;
        m["timing"] = ctx.timing;
    } catch (const ConfigError& e) {
        m["status"] = "config_error";
        m["error"] = e.what();
        rr.exit_code = 2;
    } catch (const NumericalError& e) {
        m["status"] = "numerical_error";
        m["error"] = e.what();
        rr.exit_code = 3;
    }
    m["effective"] = cfg.effective();
    m["files"] = out ? json(out->files()) : json::array();
    m["timing"]["total_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream f(dir / "manifest.json", std::ios::binary);
    if (f) f << m.dump(2) << "\n";
    return rr;
}

} // namespace pbe::app
