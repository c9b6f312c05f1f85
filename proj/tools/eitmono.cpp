#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "eit/errors.hpp"
#include "eit/forward.hpp"
#include "eit/geometry.hpp"
#include "eit/locpot.hpp"
#include "eit/mesh.hpp"
#include "eit/monotone.hpp"
#include "eit/phantom.hpp"
#include "eit/reconstruct.hpp"

namespace {

using eit::numerical_error;
using eit::parameter_error;
using nlohmann::json;

/// Raised by --check assertions; maps to exit code 4.
struct check_failure : std::runtime_error {
    explicit check_failure(const std::string& what) : std::runtime_error(what) {}
};

json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw parameter_error("config file not found: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        // translate the byte offset into a line number for the diagnostic
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
            if (text[i] == '\n') ++line;
        }
        throw parameter_error(path + " line " + std::to_string(line) + ": " + e.what());
    }
}

void require_fields(const json& j, const std::string& where, const std::set<std::string>& allowed,
                    const std::set<std::string>& required) {
    if (!j.is_object()) throw parameter_error(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        if (allowed.count(item.key()) == 0)
            throw parameter_error(where + ": unknown field '" + item.key() + "'");
    }
    for (const std::string& key : required) {
        if (!j.contains(key)) throw parameter_error(where + ": missing field '" + key + "'");
    }
}

template <typename T>
T get_field(const json& j, const std::string& key, const std::string& where) {
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw parameter_error(where + ": field '" + key + "': " + e.what());
    }
}

template <typename T>
T get_field_or(const json& j, const std::string& key, const std::string& where, T fallback) {
    if (!j.contains(key)) return fallback;
    return get_field<T>(j, key, where);
}

Eigen::Vector2d get_point(const json& j, const std::string& key, const std::string& where) {
    auto v = get_field<std::vector<double>>(j, key, where);
    if (v.size() != 2) throw parameter_error(where + ": field '" + key + "' must be [x, y]");
    return Eigen::Vector2d(v[0], v[1]);
}

void check_schema(const json& j, const std::string& expected, const std::string& where) {
    const auto schema = get_field<std::string>(j, "schema", where);
    if (schema != expected)
        throw parameter_error(where + ": schema '" + schema + "' is not '" + expected + "'");
}

eit::ShapeSpec parse_shape(const json& j, const std::string& where) {
    eit::ShapeSpec s;
    const auto kind = get_field<std::string>(j, "kind", where);
    if (kind == "disk") {
        require_fields(j, where, {"kind", "center", "radius", "contrast"},
                       {"kind", "center", "radius", "contrast"});
        s.kind = eit::ShapeSpec::Kind::disk;
        s.center = get_point(j, "center", where);
        s.radius = get_field<double>(j, "radius", where);
    } else if (kind == "rect" || kind == "lshape") {
        require_fields(j, where, {"kind", "lo", "hi", "contrast"}, {"kind", "lo", "hi", "contrast"});
        s.kind = kind == "rect" ? eit::ShapeSpec::Kind::rect : eit::ShapeSpec::Kind::lshape;
        s.lo = get_point(j, "lo", where);
        s.hi = get_point(j, "hi", where);
    } else {
        throw parameter_error(where + ": unknown shape kind '" + kind + "'");
    }
    s.contrast = get_field<double>(j, "contrast", where);
    return s;
}

std::vector<eit::ShapeSpec> parse_shapes(const json& j, const std::string& where) {
    if (!j.is_array()) throw parameter_error(where + ": 'shapes' must be an array");
    std::vector<eit::ShapeSpec> shapes;
    for (std::size_t i = 0; i < j.size(); ++i) {
        shapes.push_back(parse_shape(j[i], where + ".shapes[" + std::to_string(i) + "]"));
    }
    return shapes;
}

/// Conductivity from a config object: uniform value, a concentric disk
/// inclusion assigned per triangle, or cell-rasterized phantom shapes.
struct SigmaSpec {
    std::string type;            // uniform | concentric | shapes
    double value = 1.0;          // uniform
    double rho = 0.0, contrast = 1.0; // concentric
    std::vector<eit::ShapeSpec> shapes;
};

SigmaSpec parse_sigma(const json& j, const std::string& where) {
    SigmaSpec spec;
    spec.type = get_field<std::string>(j, "type", where);
    if (spec.type == "uniform") {
        require_fields(j, where, {"type", "value"}, {"type"});
        spec.value = get_field_or<double>(j, "value", where, 1.0);
    } else if (spec.type == "concentric") {
        require_fields(j, where, {"type", "rho", "contrast"}, {"type", "rho", "contrast"});
        spec.rho = get_field<double>(j, "rho", where);
        spec.contrast = get_field<double>(j, "contrast", where);
        if (!(spec.rho > 0.0 && spec.rho < 1.0))
            throw parameter_error(where + ": rho must lie in (0,1)");
    } else if (spec.type == "shapes") {
        require_fields(j, where, {"type", "shapes"}, {"type", "shapes"});
        spec.shapes = parse_shapes(j.at("shapes"), where);
    } else {
        throw parameter_error(where + ": unknown sigma type '" + spec.type + "'");
    }
    return spec;
}

eit::Conductivity build_sigma(const SigmaSpec& spec, const eit::Mesh& mesh,
                              const eit::PixelGrid* grid) {
    if (spec.type == "uniform") return eit::Conductivity::uniform(mesh, spec.value);
    if (spec.type == "concentric") {
        auto region = eit::ball_to_region(mesh, Eigen::Vector2d(0, 0), spec.rho);
        return eit::Conductivity::uniform(mesh, 1.0)
            .perturbed(mesh, region, spec.contrast - 1.0);
    }
    if (!grid) throw parameter_error("shape conductivity needs a grid_resolution");
    return eit::make_phantom(spec.shapes, *grid, mesh).sigma;
}

std::vector<int> parse_region(const json& j, const eit::Mesh& mesh, const std::string& where) {
    const auto type = get_field<std::string>(j, "type", where);
    if (type == "ball") {
        require_fields(j, where, {"type", "center", "radius"}, {"type", "center", "radius"});
        return eit::ball_to_region(mesh, get_point(j, "center", where),
                                   get_field<double>(j, "radius", where));
    }
    if (type == "annulus") {
        require_fields(j, where, {"type", "center", "inner", "outer"},
                       {"type", "center", "inner", "outer"});
        return eit::annulus_to_region(mesh, get_point(j, "center", where),
                                      get_field<double>(j, "inner", where),
                                      get_field<double>(j, "outer", where));
    }
    throw parameter_error(where + ": unknown region type '" + type + "'");
}

std::string resolve_out_dir(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("EITMONO_OUT"); env && *env) return env;
    return ".";
}

std::ofstream open_artifact(const std::filesystem::path& dir, const std::string& name) {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name);
    if (!out) throw numerical_error("cannot write artifact: " + (dir / name).string());
    return out;
}

struct Provenance {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& key, const std::string& value) { entries.emplace_back(key, value); }
    void add(const std::string& key, double value) {
        std::ostringstream s;
        s.precision(15);
        s << value;
        add(key, s.str());
    }
    void add(const std::string& key, std::int64_t value) { add(key, std::to_string(value)); }

    void write(const std::filesystem::path& dir) const {
        std::ofstream out(dir / "provenance.log");
        for (const auto& [k, v] : entries) out << k << "=" << v << "\n";
    }
};

std::string format_alphas(const std::vector<double>& alphas) {
    std::ostringstream s;
    s.precision(15);
    for (std::size_t i = 0; i < alphas.size(); ++i) s << (i ? "," : "") << alphas[i];
    return s.str();
}

// ---------------------------------------------------------------------------
// forward

int cmd_forward(const std::string& config_path, const std::string& out_flag, int threads,
                std::optional<std::uint64_t> seed_flag, bool check) {
    (void)threads;
    const json cfg = load_json(config_path);
    const std::string where = "forward config";
    require_fields(cfg, where,
                   {"schema", "mesh_level", "order", "arc", "sigma", "noise", "grid_resolution"},
                   {"schema", "mesh_level", "order", "sigma"});
    check_schema(cfg, "eitmono/forward/1", where);

    const int level = get_field<int>(cfg, "mesh_level", where);
    const int order = get_field<int>(cfg, "order", where);
    const eit::Mesh mesh = eit::build_disk_mesh(level);

    std::shared_ptr<const eit::CurrentBasis> basis;
    bool fourier = true;
    if (cfg.contains("arc")) {
        const auto arc = get_field<std::vector<double>>(cfg, "arc", where);
        if (arc.size() != 2) throw parameter_error(where + ": 'arc' must be [start, end]");
        basis = std::make_shared<eit::CurrentBasis>(
            eit::CurrentBasis::edge_indicators(mesh, arc[0], arc[1]));
        fourier = false;
    } else {
        basis = std::make_shared<eit::CurrentBasis>(eit::CurrentBasis::fourier(mesh, order));
    }

    const SigmaSpec sigma_spec = parse_sigma(cfg.at("sigma"), where + ".sigma");
    std::optional<eit::PixelGrid> grid;
    if (sigma_spec.type == "shapes") {
        grid.emplace(mesh, get_field_or<int>(cfg, "grid_resolution", where, 32));
    }
    const eit::Conductivity sigma = build_sigma(sigma_spec, mesh, grid ? &*grid : nullptr);

    eit::NtDMatrix ntd = eit::assemble_ntd(mesh, sigma, basis);

    double delta = 0.0;
    std::uint64_t seed = 1;
    if (cfg.contains("noise")) {
        const json& noise = cfg.at("noise");
        require_fields(noise, where + ".noise", {"delta", "seed"}, {"delta"});
        delta = get_field<double>(noise, "delta", where + ".noise");
        seed = get_field_or<std::uint64_t>(noise, "seed", where + ".noise", 1);
    }
    if (seed_flag) seed = *seed_flag;
    if (delta > 0.0) ntd = eit::add_noise(ntd, delta, seed).measurement;

    const std::filesystem::path dir = resolve_out_dir(out_flag);
    {
        auto out = open_artifact(dir, "ntd.csv");
        eit::export_ntd(ntd, out);
    }
    {
        auto out = open_artifact(dir, "sigma.csv");
        eit::export_conductivity(sigma, out);
    }

    Provenance prov;
    prov.add("command", std::string("forward"));
    prov.add("config", config_path);
    prov.add("config_json", cfg.dump());
    prov.add("mesh_level", static_cast<std::int64_t>(level));
    prov.add("vertices", static_cast<std::int64_t>(mesh.num_vertices()));
    prov.add("basis", fourier ? "fourier" : "edge_indicators");
    prov.add("basis_size", static_cast<std::int64_t>(basis->size()));
    prov.add("order", static_cast<std::int64_t>(order));
    prov.add("delta", delta);
    prov.add("seed", static_cast<std::int64_t>(seed));

    // analytic comparison only where an oracle exists
    const bool has_oracle =
        fourier && (sigma_spec.type == "uniform" || sigma_spec.type == "concentric");
    if (has_oracle) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ntd.m, Eigen::EigenvaluesOnly);
        if (es.info() != Eigen::Success) throw numerical_error("NtD eigensolve failed");
        std::vector<double> fem(es.eigenvalues().data(), es.eigenvalues().data() + ntd.size());
        std::sort(fem.rbegin(), fem.rend());

        std::vector<std::pair<int, double>> analytic;
        for (int n = 1; n <= order; ++n) {
            const double lam = sigma_spec.type == "uniform"
                                   ? eit::analytic_ntd_eigenvalue_unit(n) / sigma_spec.value
                                   : eit::analytic_ntd_eigenvalue_concentric(n, sigma_spec.rho,
                                                                             sigma_spec.contrast);
            analytic.emplace_back(n, lam);
            analytic.emplace_back(n, lam);
        }
        std::sort(analytic.begin(), analytic.end(),
                  [](const auto& a, const auto& b) { return a.second > b.second; });

        auto out = open_artifact(dir, "eigs.csv");
        out << "mode,fem,analytic,rel_err\n";
        out.precision(15);
        double worst_checked = 0.0;
        const int check_limit = sigma_spec.type == "uniform" ? 8 : 6;
        const double check_tol = sigma_spec.type == "uniform" ? 0.02 : 0.03;
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const auto [n, lam] = analytic[i];
            const double rel = std::abs(fem[i] - lam) / std::abs(lam);
            out << n << ',' << fem[i] << ',' << lam << ',' << rel << "\n";
            if (n <= check_limit) worst_checked = std::max(worst_checked, rel);
        }
        prov.add("eig_worst_rel_err_checked", worst_checked);
        if (check && delta == 0.0 && worst_checked > check_tol)
            throw check_failure("eigenvalue relative error " + std::to_string(worst_checked) +
                                " exceeds " + std::to_string(check_tol));
    }

    prov.write(dir);
    return 0;
}

// ---------------------------------------------------------------------------
// reconstruct

std::vector<double> default_alphas(const std::string& mode, const std::string& op) {
    if (mode == "definite") {
        std::vector<double> a;
        for (int i = -4; i <= 4; ++i) a.push_back(std::ldexp(1.0, i));
        return a;
    }
    if (op == "full") return {2.0, 4.0, 8.0};
    return {0.25, 0.5, 1.0, 2.0};
}

int cmd_reconstruct(const std::string& config_path, const std::string& out_flag, int threads,
                    std::optional<std::uint64_t> seed_flag, bool check) {
    const json cfg = load_json(config_path);
    const std::string where = "reconstruct config";
    require_fields(cfg, where,
                   {"schema", "mesh_level", "order", "grid_resolution", "phantom", "mode",
                    "operator", "sign", "alphas", "alpha", "alpha_reg", "delta", "seed", "arc",
                    "family", "check_jaccard_min"},
                   {"schema", "mesh_level", "order", "grid_resolution", "phantom", "mode"});
    check_schema(cfg, "eitmono/reconstruct/1", where);

    const int level = get_field<int>(cfg, "mesh_level", where);
    const int order = get_field<int>(cfg, "order", where);
    const int resolution = get_field<int>(cfg, "grid_resolution", where);
    const std::string mode = get_field<std::string>(cfg, "mode", where);
    if (mode != "definite-full" && mode != "definite-lin" && mode != "indefinite-family" &&
        mode != "indefinite-shrink")
        throw parameter_error(where + ": unknown mode '" + mode + "'");

    const eit::Mesh mesh = eit::build_disk_mesh(level);
    const eit::PixelGrid grid(mesh, resolution);

    const json& phantom_cfg = cfg.at("phantom");
    require_fields(phantom_cfg, where + ".phantom", {"shapes", "name"}, {"shapes"});
    const auto shapes = parse_shapes(phantom_cfg.at("shapes"), where + ".phantom");
    const std::string name =
        get_field_or<std::string>(phantom_cfg, "name", where + ".phantom", "phantom");
    const eit::Phantom phantom = eit::make_phantom(shapes, grid, mesh, name);

    std::shared_ptr<const eit::CurrentBasis> basis;
    if (cfg.contains("arc")) {
        const auto arc = get_field<std::vector<double>>(cfg, "arc", where);
        if (arc.size() != 2) throw parameter_error(where + ": 'arc' must be [start, end]");
        basis = std::make_shared<eit::CurrentBasis>(
            eit::CurrentBasis::edge_indicators(mesh, arc[0], arc[1]));
    } else {
        basis = std::make_shared<eit::CurrentBasis>(eit::CurrentBasis::fourier(mesh, order));
    }

    const double eps_fem = eit::calibrate_fem_tolerance(mesh, order).eps_fem;
    const double delta = get_field_or<double>(cfg, "delta", where, 0.0);
    std::uint64_t seed = get_field_or<std::uint64_t>(cfg, "seed", where, 1);
    if (seed_flag) seed = *seed_flag;
    // The measurement is produced on this same mesh, so the noiseless floor is
    // eigensolver roundoff, not the discretization error eps_fem (logged below
    // for comparisons against external data).
    const double alpha_reg = get_field_or<double>(cfg, "alpha_reg", where, delta + 1e-9);
    if (!(alpha_reg >= 0.0)) throw parameter_error(where + ": alpha_reg must be nonnegative");

    eit::NtDMatrix measured = eit::assemble_ntd(mesh, phantom.sigma, basis);
    if (delta > 0.0) measured = eit::add_noise(measured, delta, seed).measurement;

    const bool definite = mode.rfind("definite-", 0) == 0;
    const std::string op = definite ? (mode == "definite-full" ? "full" : "linearized")
                                    : get_field_or<std::string>(cfg, "operator", where,
                                                                mode == "indefinite-family"
                                                                    ? "full"
                                                                    : "linearized");
    if (op != "full" && op != "linearized")
        throw parameter_error(where + ": unknown operator '" + op + "'");
    const eit::TestMode test_mode = op == "full" ? eit::TestMode::full : eit::TestMode::linearized;

    std::vector<double> alphas = get_field_or<std::vector<double>>(
        cfg, "alphas", where, default_alphas(definite ? "definite" : "indefinite", op));

    const std::filesystem::path dir = resolve_out_dir(out_flag);
    Provenance prov;
    prov.add("command", std::string("reconstruct"));
    prov.add("config", config_path);
    prov.add("config_json", cfg.dump());
    prov.add("mesh_level", static_cast<std::int64_t>(level));
    prov.add("basis_order", static_cast<std::int64_t>(order));
    prov.add("basis_size", static_cast<std::int64_t>(basis->size()));
    prov.add("grid_resolution", static_cast<std::int64_t>(resolution));
    prov.add("mode", mode);
    prov.add("operator", op);
    prov.add("eps_fem", eps_fem);
    prov.add("delta", delta);
    prov.add("seed", static_cast<std::int64_t>(seed));
    prov.add("alpha_reg", alpha_reg);
    prov.add("threads", static_cast<std::int64_t>(threads));

    eit::IndicatorField truth = eit::set_union(phantom.d_plus, phantom.d_minus);
    std::optional<eit::IndicatorField> recon;

    if (definite) {
        const int sign = get_field_or<int>(cfg, "sign", where, 1);
        auto sweep = eit::reconstruct_definite_sweep(measured, mesh, basis, grid, alphas,
                                                     alpha_reg, test_mode, sign, threads);
        recon = sweep.cells;
        prov.add("sign", static_cast<std::int64_t>(sign));
        prov.add("alphas", format_alphas(alphas));
        prov.add("min_margin", sweep.min_margin);
        auto out = open_artifact(dir, "outcomes.csv");
        out << "region_id,alpha,alpha_reg,lambda_min,pass\n";
        for (const auto& rec : sweep.outcomes) {
            const std::string id = "cell_" + std::to_string(grid.cell_x(rec.cell)) + "_" +
                                   std::to_string(grid.cell_y(rec.cell));
            eit::write_outcome_csv(out, id, rec.outcome);
        }
    } else if (mode == "indefinite-family") {
        bool channels = true;
        if (cfg.contains("family")) {
            const json& fam = cfg.at("family");
            require_fields(fam, where + ".family", {"channels"}, {});
            channels = get_field_or<bool>(fam, "channels", where + ".family", true);
        }
        const auto family = eit::default_indefinite_family(grid, channels);
        auto sweep = eit::reconstruct_indefinite_family_sweep(measured, mesh, basis, family,
                                                              alphas, alpha_reg, test_mode,
                                                              threads);
        recon = sweep.cells;
        prov.add("alphas", format_alphas(alphas));
        prov.add("family_size", static_cast<std::int64_t>(family.size()));
        prov.add("family_channels", channels ? "true" : "false");
        prov.add("family_passed", static_cast<std::int64_t>(sweep.num_passed));
        auto out = open_artifact(dir, "outcomes.csv");
        out << "region_id,alpha,alpha_reg,lambda_min,pass\n";
        for (std::size_t i = 0; i < sweep.outcomes.size(); ++i) {
            eit::write_outcome_csv(out, "family_" + std::to_string(i), sweep.outcomes[i]);
        }
    } else {
        const double alpha = get_field_or<double>(cfg, "alpha", where, 2.0);
        recon = eit::reconstruct_indefinite_shrink(measured, mesh, basis, grid, alpha, alpha_reg,
                                                   test_mode);
        prov.add("alpha", alpha);
    }

    const double j = eit::jaccard(*recon, truth);
    {
        auto out = open_artifact(dir, "recon.pgm");
        eit::export_pgm(*recon, out);
    }
    {
        auto out = open_artifact(dir, "recon_cells.csv");
        eit::export_indicator_csv(*recon, out);
    }
    {
        auto out = open_artifact(dir, "metrics.csv");
        eit::write_metrics_csv(out, name, test_mode, alpha_reg, j, recon->count(), truth.count());
    }
    prov.add("jaccard", j);
    prov.add("cells_in", static_cast<std::int64_t>(recon->count()));
    prov.add("cells_truth", static_cast<std::int64_t>(truth.count()));
    prov.write(dir);

    if (check) {
        if (mode == "indefinite-shrink" && !(eit::outer_closure(*recon) == *recon))
            throw check_failure("shrink result is not outer-closed");
        if (definite) {
            if (!eit::is_subset(*recon, eit::dilate(eit::outer_closure(truth), 1)))
                throw check_failure("reconstruction exceeds the dilated outer closure of the truth");
        } else if (!eit::is_subset(eit::outer_closure(truth), eit::dilate(*recon, 1))) {
            throw check_failure("dilated reconstruction does not cover the truth's outer closure");
        }
        if (cfg.contains("check_jaccard_min")) {
            const double jmin = get_field<double>(cfg, "check_jaccard_min", where);
            if (j < jmin)
                throw check_failure("jaccard " + std::to_string(j) + " below " +
                                    std::to_string(jmin));
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// locpot

int cmd_locpot(const std::string& config_path, const std::string& out_flag, int threads,
               bool check) {
    (void)threads;
    const json cfg = load_json(config_path);
    const std::string where = "locpot config";
    require_fields(cfg, where,
                   {"schema", "mesh_level", "sigma", "d1", "d2", "orders", "eps", "tau", "expect"},
                   {"schema", "mesh_level", "d1", "d2"});
    check_schema(cfg, "eitmono/locpot/1", where);

    const int level = get_field<int>(cfg, "mesh_level", where);
    const eit::Mesh mesh = eit::build_disk_mesh(level);

    const eit::Conductivity sigma =
        cfg.contains("sigma") ? build_sigma(parse_sigma(cfg.at("sigma"), where + ".sigma"), mesh,
                                            nullptr)
                              : eit::Conductivity::uniform(mesh, 1.0);
    const auto d1 = parse_region(cfg.at("d1"), mesh, where + ".d1");
    const auto d2 = parse_region(cfg.at("d2"), mesh, where + ".d2");
    const auto orders =
        get_field_or<std::vector<int>>(cfg, "orders", where, std::vector<int>{4, 8, 12, 16});
    const double eps = get_field_or<double>(cfg, "eps", where, 1e-8);

    const std::filesystem::path dir = resolve_out_dir(out_flag);
    Provenance prov;
    prov.add("command", std::string("locpot"));
    prov.add("config", config_path);
    prov.add("config_json", cfg.dump());
    prov.add("mesh_level", static_cast<std::int64_t>(level));
    prov.add("eps", eps);

    std::string classification;
    if (cfg.contains("tau")) {
        const eit::Conductivity tau =
            build_sigma(parse_sigma(cfg.at("tau"), where + ".tau"), mesh, nullptr);
        const auto report =
            eit::conductivity_independence_check(mesh, sigma, tau, d1, d2, orders, eps);
        classification = report.classification_sigma;
        {
            auto out = open_artifact(dir, "locpot.csv");
            eit::write_locpot_csv(out, report.with_sigma);
            out << "classification," << classification << "\n";
        }
        {
            auto out = open_artifact(dir, "independence.csv");
            out << "order,E1_sigma,E2_sigma,ratio_sigma,E1_tau,E2_tau,ratio_tau\n";
            out.precision(15);
            for (std::size_t k = 0; k < report.with_sigma.orders.size(); ++k) {
                out << report.with_sigma.orders[k] << ',' << report.with_sigma.e1[k] << ','
                    << report.with_sigma.e2[k] << ',' << report.with_sigma.ratio[k] << ','
                    << report.e1_tau[k] << ',' << report.e2_tau[k] << ',' << report.ratio_tau[k]
                    << "\n";
            }
            out << "mutual_bound," << report.mutual_bound << "\n";
            out << "agreement," << (report.classification_agrees ? "true" : "false") << "\n";
        }
        prov.add("classification_sigma", report.classification_sigma);
        prov.add("classification_tau", report.classification_tau);
        prov.add("mutual_bound", report.mutual_bound);
        prov.add("agreement", report.classification_agrees ? "true" : "false");
        if (check && !report.classification_agrees)
            throw check_failure("sigma and tau classifications disagree");
    } else {
        const auto result = eit::locpot_dichotomy_sweep(mesh, sigma, d1, d2, orders, eps);
        classification = result.classification();
        auto out = open_artifact(dir, "locpot.csv");
        eit::write_locpot_csv(out, result);
        out << "classification," << classification << "\n";
    }
    prov.add("classification", classification);
    prov.write(dir);

    if (check && cfg.contains("expect")) {
        const auto expect = get_field<std::string>(cfg, "expect", where);
        if (classification != expect)
            throw check_failure("classification '" + classification + "' is not '" + expect + "'");
    }
    return 0;
}

// ---------------------------------------------------------------------------
// mesh export / phantom render

int cmd_mesh_export(int level, const std::string& out_flag) {
    const eit::Mesh mesh = eit::build_disk_mesh(level);
    const std::filesystem::path dir = resolve_out_dir(out_flag);
    auto out = open_artifact(dir, "mesh.txt");
    eit::export_mesh(mesh, out);
    return 0;
}

int cmd_phantom_render(const std::string& config_path, const std::string& out_flag) {
    const json cfg = load_json(config_path);
    const std::string where = "phantom config";
    require_fields(cfg, where, {"schema", "mesh_level", "grid_resolution", "shapes", "name"},
                   {"schema", "mesh_level", "grid_resolution", "shapes"});
    check_schema(cfg, "eitmono/phantom/1", where);

    const int level = get_field<int>(cfg, "mesh_level", where);
    const int resolution = get_field<int>(cfg, "grid_resolution", where);
    const eit::Mesh mesh = eit::build_disk_mesh(level);
    const eit::PixelGrid grid(mesh, resolution);
    const auto shapes = parse_shapes(cfg.at("shapes"), where);
    const std::string name = get_field_or<std::string>(cfg, "name", where, "phantom");
    const eit::Phantom phantom = eit::make_phantom(shapes, grid, mesh, name);

    const std::filesystem::path dir = resolve_out_dir(out_flag);
    {
        auto out = open_artifact(dir, "sigma.csv");
        eit::export_conductivity(phantom.sigma, out);
    }
    {
        auto out = open_artifact(dir, "dplus.pgm");
        eit::export_pgm(phantom.d_plus, out);
    }
    {
        auto out = open_artifact(dir, "dminus.pgm");
        eit::export_pgm(phantom.d_minus, out);
    }
    {
        auto out = open_artifact(dir, "cells.csv");
        eit::export_indicator_csv(eit::set_union(phantom.d_plus, phantom.d_minus), out);
    }
    Provenance prov;
    prov.add("command", std::string("phantom render"));
    prov.add("config", config_path);
    prov.add("config_json", cfg.dump());
    prov.add("name", name);
    prov.write(dir);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monotonicity-based shape reconstruction toolkit"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    int threads = 0;
    std::uint64_t seed_value = 0;
    bool check = false;
    int mesh_level = 3;

    auto add_common = [&](CLI::App* cmd, bool needs_config) {
        auto* opt = cmd->add_option("--config", config_path, "JSON config file");
        if (needs_config) opt->required();
        cmd->add_option("--out", out_dir, "output directory (default $EITMONO_OUT or .)");
        cmd->add_option("--threads", threads, "worker threads (0 = all cores)");
        cmd->add_flag("--check", check, "verify result invariants; failures exit 4");
    };

    auto* fwd = app.add_subcommand("forward", "assemble a boundary measurement matrix");
    add_common(fwd, true);
    fwd->add_option("--seed", seed_value, "noise seed override");

    auto* rec = app.add_subcommand("reconstruct", "run a shape reconstruction");
    add_common(rec, true);
    rec->add_option("--seed", seed_value, "noise seed override");

    auto* loc = app.add_subcommand("locpot", "localized potential sweeps");
    add_common(loc, true);

    auto* mesh_cmd = app.add_subcommand("mesh", "mesh utilities");
    mesh_cmd->require_subcommand(1);
    auto* mesh_export = mesh_cmd->add_subcommand("export", "write the mesh as text");
    mesh_export->add_option("--level", mesh_level, "refinement level")->required();
    mesh_export->add_option("--out", out_dir, "output directory");

    auto* phantom_cmd = app.add_subcommand("phantom", "phantom utilities");
    phantom_cmd->require_subcommand(1);
    auto* phantom_render = phantom_cmd->add_subcommand("render", "rasterize a phantom config");
    phantom_render->add_option("--config", config_path, "JSON config file")->required();
    phantom_render->add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    const bool seed_given = rec->count("--seed") > 0 || fwd->count("--seed") > 0;
    const std::optional<std::uint64_t> seed_flag =
        seed_given ? std::optional<std::uint64_t>(seed_value) : std::nullopt;

    try {
        if (fwd->parsed()) return cmd_forward(config_path, out_dir, threads, seed_flag, check);
        if (rec->parsed()) return cmd_reconstruct(config_path, out_dir, threads, seed_flag, check);
        if (loc->parsed()) return cmd_locpot(config_path, out_dir, threads, check);
        if (mesh_cmd->parsed() && mesh_export->parsed())
            return cmd_mesh_export(mesh_level, out_dir);
        if (phantom_cmd->parsed() && phantom_render->parsed())
            return cmd_phantom_render(config_path, out_dir);
    } catch (const check_failure& e) {
        std::cerr << "check failed: " << e.what() << "\n";
        return 4;
    } catch (const parameter_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const numerical_error& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 2;
}
