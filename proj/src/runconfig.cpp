#include "oved/runconfig.hpp"

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "oved/io.hpp"
#include "oved/parallel.hpp"
#include "oved/projectile.hpp"

namespace oved::cli {

namespace {

using nlohmann::json;
namespace fs = std::filesystem;

// json accessor that carries the field path into error messages.
struct Cfg {
  const json* j;
  std::string path;

  Cfg at(const std::string& key) const {
    if (!j->is_object() || !j->contains(key))
      throw ConfigError("missing field: " + path + "." + key);
    return Cfg{&(*j)[key], path + "." + key};
  }
  std::optional<Cfg> maybe(const std::string& key) const {
    if (!j->is_object() || !j->contains(key)) return std::nullopt;
    return Cfg{&(*j)[key], path + "." + key};
  }
  double number() const {
    if (!j->is_number()) throw ConfigError("expected a number at " + path);
    return j->get<double>();
  }
  int integer() const {
    if (!j->is_number_integer()) throw ConfigError("expected an integer at " + path);
    return j->get<int>();
  }
  bool boolean() const {
    if (!j->is_boolean()) throw ConfigError("expected a boolean at " + path);
    return j->get<bool>();
  }
  std::string string() const {
    if (!j->is_string()) throw ConfigError("expected a string at " + path);
    return j->get<std::string>();
  }
  Eigen::VectorXd vector() const {
    if (!j->is_array()) throw ConfigError("expected an array at " + path);
    Eigen::VectorXd v(j->size());
    for (std::size_t i = 0; i < j->size(); ++i) {
      if (!(*j)[i].is_number()) throw ConfigError("expected numbers at " + path);
      v[static_cast<Eigen::Index>(i)] = (*j)[i].get<double>();
    }
    return v;
  }
  std::size_t size() const { return j->size(); }
  Cfg item(std::size_t i) const { return Cfg{&(*j)[i], path + "[" + std::to_string(i) + "]"}; }
  bool is_array() const { return j->is_array(); }
};

Box parse_box(const Cfg& c) {
  const Eigen::VectorXd lo = c.at("lower").vector();
  const Eigen::VectorXd hi = c.at("upper").vector();
  try {
    return Box(lo, hi);
  } catch (const std::exception& e) {
    throw ConfigError(std::string(e.what()) + " at " + c.path);
  }
}

Distribution parse_distribution(const Cfg& c) {
  try {
    if (auto n = c.maybe("normal"))
      return Distribution::normal(n->at("mean").number(), n->at("stddev").number());
    if (auto u = c.maybe("uniform"))
      return Distribution::uniform(u->at("lo").number(), u->at("hi").number());
    if (auto d = c.maybe("dirac")) return Distribution::dirac(d->at("point").number());
    if (auto e = c.maybe("empirical")) {
      const Eigen::VectorXd s = e->at("samples").vector();
      return Distribution::empirical(std::vector<double>(s.data(), s.data() + s.size()));
    }
    if (auto p = c.maybe("product")) {
      if (!p->is_array()) throw ConfigError("expected an array at " + p->path);
      std::vector<Distribution> comps;
      for (std::size_t i = 0; i < p->size(); ++i) comps.push_back(parse_distribution(p->item(i)));
      return Distribution::product(std::move(comps));
    }
  } catch (const invalid_argument& e) {
    throw ConfigError(std::string(e.what()) + " at " + c.path);
  }
  throw ConfigError("unknown distribution kind at " + c.path +
                    " (expected normal/uniform/dirac/empirical/product)");
}

constexpr double kMuBar = -11.512925464970229;  // -5 ln 10
constexpr double kK0 = -4.605170185988092;      // -2 ln 10

Distribution default_theta(const std::string& model) {
  if (model == "projectile")
    return Distribution::product(
        {Distribution::normal(9.81, 0.01), Distribution::normal(kMuBar, 0.5)});
  return Distribution::dirac(kK0);
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
  const Cfg c{&root, "config"};

  RunConfig cfg;
  cfg.model = c.at("model").string();
  if (cfg.model != "projectile" && cfg.model != "transport")
    throw ConfigError("config.model must be \"projectile\" or \"transport\"");
  const int dim_x = cfg.model == "projectile" ? 4 : 3;

  if (auto s = c.maybe("seed")) cfg.seed = static_cast<std::uint64_t>(s->integer());
  if (auto t = c.maybe("threads")) cfg.threads = t->integer();
  if (auto o = c.maybe("output_dir")) cfg.output_dir = o->string();

  cfg.qoi = c.at("qoi").string();
  if (cfg.model == "projectile" && cfg.qoi != "max_altitude")
    throw ConfigError("config.qoi: projectile family provides \"max_altitude\"");
  if (cfg.model == "transport" && cfg.qoi != "qoi1" && cfg.qoi != "qoi2")
    throw ConfigError("config.qoi: transport family provides \"qoi1\" or \"qoi2\"");

  cfg.x_pred = c.at("x_pred").vector();
  if (cfg.x_pred.size() != dim_x)
    throw ConfigError("config.x_pred: expected " + std::to_string(dim_x) + " components");
  cfg.x_lab = parse_box(c.at("x_lab"));
  if (cfg.x_lab.dim() != dim_x)
    throw ConfigError("config.x_lab: expected dimension " + std::to_string(dim_x));
  if (auto xf = c.maybe("x_full")) {
    cfg.x_full = parse_box(*xf);
    if (cfg.x_full->dim() != dim_x)
      throw ConfigError("config.x_full: expected dimension " + std::to_string(dim_x));
  }

  cfg.theta = c.maybe("theta") ? parse_distribution(*c.maybe("theta")) : default_theta(cfg.model);
  const int dim_theta = cfg.model == "projectile" ? 2 : 1;
  if (cfg.theta.dim() != dim_theta)
    throw ConfigError("config.theta: expected dimension " + std::to_string(dim_theta));

  if (auto h = c.maybe("h_lab")) {
    if (!h->is_array()) throw ConfigError("expected an array at config.h_lab");
    for (std::size_t i = 0; i < h->size(); ++i) cfg.h_lab_ids.push_back(h->item(i).string());
  } else {
    cfg.h_lab_ids = cfg.model == "projectile"
                        ? std::vector<std::string>{"altitude", "acceleration"}
                        : std::vector<std::string>{"obs"};
  }

  if (auto z = c.maybe("z_lab")) {
    if (auto g = z->maybe("grid_points")) {
      std::vector<Eigen::VectorXd> grid;
      for (std::size_t i = 0; i < g->size(); ++i) grid.push_back(g->item(i).vector());
      if (grid.empty()) throw ConfigError("config.z_lab.grid_points: empty grid");
      cfg.z_grid = std::move(grid);
    } else {
      cfg.z_box = parse_box(*z);
    }
  }

  if (auto o = c.maybe("optimizer")) {
    if (auto v = o->maybe("max_evals")) cfg.opts.max_evals = v->integer();
    if (auto v = o->maybe("n_starts")) cfg.opts.n_starts = v->integer();
    if (auto v = o->maybe("initial_mesh")) cfg.opts.initial_mesh = v->number();
    if (auto v = o->maybe("min_mesh")) cfg.opts.min_mesh = v->number();
    try {
      cfg.opts.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string(e.what()) + " at config.optimizer");
    }
  }
  if (auto s = c.maybe("sensitivity")) {
    if (auto v = s->maybe("n_samples")) cfg.n_mc = v->integer();
    if (cfg.n_mc < 1) throw ConfigError("config.sensitivity.n_samples must be >= 1");
  }
  if (auto s = c.maybe("scan")) {
    if (auto v = s->maybe("n_points")) cfg.scan_points = v->integer();
    if (cfg.scan_points < 1) throw ConfigError("config.scan.n_points must be >= 1");
  }

  if (auto v = c.maybe("validation")) {
    if (auto e = v->maybe("epsilon")) cfg.epsilon = e->number();
    if (auto e = v->maybe("eta")) cfg.eta = e->number();
    if (auto e = v->maybe("cov_budget")) cfg.cov_budget = e->number();
    if (auto e = v->maybe("n_exp")) cfg.n_exp = e->integer();
    if (auto e = v->maybe("n_model")) cfg.n_model = e->integer();
    if (auto e = v->maybe("n_propagate")) cfg.n_propagate = e->integer();
    if (cfg.epsilon <= 0.0) throw ConfigError("config.validation.epsilon must be > 0");
    if (cfg.eta < 0.0 || cfg.eta > 1.0)
      throw ConfigError("config.validation.eta must lie in [0, 1]");
  }

  if (auto e = c.maybe("experiment")) {
    if (auto s = e->maybe("source")) cfg.experiment_source = s->string();
    if (auto n = e->maybe("noise_rel")) cfg.noise_rel = n->number();
    if (auto p = e->maybe("path")) cfg.experiment_csv = p->string();
    if (cfg.experiment_source != "synthetic-fine" && cfg.experiment_source != "synthetic-model" &&
        cfg.experiment_source != "csv")
      throw ConfigError("config.experiment.source must be synthetic-fine, synthetic-model or csv");
    if (cfg.experiment_source == "csv" && cfg.experiment_csv.empty())
      throw ConfigError("config.experiment.path required for the csv source");
    if (cfg.noise_rel < 0.0) throw ConfigError("config.experiment.noise_rel must be >= 0");
  }

  if (auto f = c.maybe("force_x_val")) {
    cfg.force_x_val = f->vector();
    if (cfg.force_x_val->size() != dim_x)
      throw ConfigError("config.force_x_val: expected " + std::to_string(dim_x) + " components");
  }

  if (auto cal = c.maybe("calibration")) {
    RunConfig::CalibrationConfig cc;
    cc.observable = cal->at("observable").string();
    cc.sigma = cal->at("sigma").number();
    if (cc.sigma <= 0.0) throw ConfigError("config.calibration.sigma must be > 0");
    if (auto v = cal->maybe("chain_length")) cc.chain_length = v->integer();
    if (auto v = cal->maybe("burn_in_fraction")) cc.burn_in_fraction = v->number();
    cc.proposal_scale = cal->at("proposal_scale").vector();
    if (cc.proposal_scale.size() != dim_theta)
      throw ConfigError("config.calibration.proposal_scale: expected dimension " +
                        std::to_string(dim_theta));
    cfg.calibration = std::move(cc);
  }

  if (auto t = c.maybe("transport")) {
    auto& tc = cfg.transport;
    if (auto v = t->maybe("nx")) tc.nx = v->integer();
    if (auto v = t->maybe("ny")) tc.ny = v->integer();
    if (auto v = t->maybe("width")) tc.width = v->number();
    if (auto v = t->maybe("height")) tc.height = v->number();
    if (auto v = t->maybe("docks")) tc.docks = v->boolean();
    if (auto v = t->maybe("velocity_file")) tc.velocity_file = v->string();
    if (auto v = t->maybe("v_max")) tc.v_max = v->number();
    if (auto v = t->maybe("obs_side")) tc.obs_side = v->number();
    const auto parse_region = [](const Cfg& rc) {
      const Eigen::VectorXd r = rc.vector();
      if (r.size() != 4) throw ConfigError("expected [x0, x1, y0, y1] at " + rc.path);
      return transport::Region{r[0], r[1], r[2], r[3]};
    };
    if (auto v = t->maybe("omega1")) tc.omega1 = parse_region(*v);
    if (auto v = t->maybe("omega2")) tc.omega2 = parse_region(*v);
    if (auto v = t->maybe("scan_grid")) {
      tc.scan_nx = v->at("nx").integer();
      tc.scan_ny = v->at("ny").integer();
    }
    if (tc.docks && tc.velocity_file.empty())
      throw ConfigError(
          "config.transport: dock geometry requires a loaded velocity field "
          "(the analytic profile does not satisfy dock no-slip)");
  }
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw ConfigError("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str(), path);
}

ModelSetup build_model(const RunConfig& cfg) {
  ModelSetup setup;
  if (cfg.model == "projectile") {
    setup.h_qoi = projectile::qoi_functional();
    for (const auto& id : cfg.h_lab_ids) {
      if (id == "altitude")
        setup.h_lab.push_back(projectile::altitude_functional());
      else if (id == "acceleration")
        setup.h_lab.push_back(projectile::acceleration_functional());
      else if (id == "max_altitude")
        setup.h_lab.push_back(projectile::qoi_functional());
      else
        throw ConfigError("config.h_lab: unknown projectile observable \"" + id + "\"");
    }
    if (cfg.z_grid) {
      setup.z_lab = *cfg.z_grid;
    } else if (cfg.z_box) {
      setup.z_lab = *cfg.z_box;
    } else {
      // Default sensor window [0, 2 t*] under the coarse model at mean theta.
      const auto ctl = projectile::Control::from_vector(
          cfg.force_x_val ? *cfg.force_x_val : cfg.x_pred);
      const auto th = projectile::Theta::from_vector(cfg.theta.mean());
      const double tmax = projectile::time_of_max(ctl, th);
      setup.z_lab = Box(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Constant(1, 2.0 * tmax));
    }

    const double noise = cfg.noise_rel;
    if (cfg.experiment_source == "synthetic-fine") {
      setup.experiment = [noise](const Eigen::VectorXd& x, const Eigen::VectorXd& z, int n,
                                 const RngSpec& rng) {
        require(z.size() == 1, "synthetic-fine source expects a scalar sensor time");
        return projectile::synthetic_observations(projectile::Control::from_vector(x), z[0], n,
                                                  rng, noise);
      };
    }
  } else {
    auto grid = cfg.transport.docks
                    ? transport::Grid::channel_with_docks(cfg.transport.nx, cfg.transport.ny,
                                                          cfg.transport.width, cfg.transport.height)
                    : transport::Grid::channel(cfg.transport.nx, cfg.transport.ny,
                                               cfg.transport.width, cfg.transport.height);
    auto vel = cfg.transport.velocity_file.empty()
                   ? transport::VelocityField::poiseuille(grid, cfg.transport.v_max)
                   : transport::VelocityField::load(cfg.transport.velocity_file, grid);
    auto model = std::make_shared<const transport::TransportModel>(std::move(grid), std::move(vel));
    setup.transport_model = model;

    setup.h_qoi = transport::qoi_functional(
        model, cfg.qoi == "qoi1" ? cfg.transport.omega1 : cfg.transport.omega2, cfg.qoi);
    for (const auto& id : cfg.h_lab_ids) {
      if (id == "obs")
        setup.h_lab.push_back(transport::observable_functional(model, cfg.transport.obs_side));
      else if (id == "qoi1")
        setup.h_lab.push_back(transport::qoi_functional(model, cfg.transport.omega1, "qoi1"));
      else if (id == "qoi2")
        setup.h_lab.push_back(transport::qoi_functional(model, cfg.transport.omega2, "qoi2"));
      else
        throw ConfigError("config.h_lab: unknown transport observable \"" + id + "\"");
    }
    if (cfg.z_grid) {
      setup.z_lab = *cfg.z_grid;
    } else if (cfg.z_box) {
      setup.z_lab = *cfg.z_box;
    } else {
      // Observation-cell grid over the domain (the default sensor domain).
      std::vector<Eigen::VectorXd> grid_pts;
      const auto& g = model->grid();
      for (int j = 0; j < cfg.transport.scan_ny; ++j)
        for (int i = 0; i < cfg.transport.scan_nx; ++i) {
          Eigen::VectorXd z(2);
          z << (i + 0.5) * g.width / cfg.transport.scan_nx,
              (j + 0.5) * g.height / cfg.transport.scan_ny;
          grid_pts.push_back(std::move(z));
        }
      setup.z_lab = std::move(grid_pts);
    }

    if (cfg.experiment_source == "synthetic-fine")
      throw ConfigError(
          "config.experiment.source: the transport family has no fine model; use "
          "synthetic-model or csv");
  }

  if (cfg.experiment_source == "synthetic-model") {
    // Measurements manufactured from the model itself at the mean model
    // parameters, with multiplicative noise.
    const FunctionalPtr gauge = setup.h_lab.front();
    const Eigen::VectorXd theta_mean = cfg.theta.mean();
    const double noise = cfg.noise_rel;
    setup.experiment = [gauge, theta_mean, noise](const Eigen::VectorXd& x,
                                                  const Eigen::VectorXd& z, int n,
                                                  const RngSpec& rng) {
      const double base = gauge->value(x, theta_mean, z);
      RngStream stream(rng);
      std::vector<double> out(static_cast<std::size_t>(n));
      for (auto& y : out) y = base * (1.0 + noise * stream.normal());
      return out;
    };
  } else if (cfg.experiment_source == "csv") {
    const std::string path = cfg.experiment_csv;
    setup.experiment = [path](const Eigen::VectorXd&, const Eigen::VectorXd&, int,
                              const RngSpec&) {
      std::ifstream in(path);
      require(in.good(), "experiment csv: cannot open " + path);
      std::vector<double> values;
      std::string line;
      while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
          values.push_back(std::stod(line));
        } catch (const std::exception&) {
          throw invalid_argument("experiment csv: malformed line \"" + line + "\"");
        }
      }
      require(!values.empty(), "experiment csv: no observations in " + path);
      return values;
    };
  }
  return setup;
}

namespace {

json vec_to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

struct ArtifactWriter {
  fs::path dir;
  std::vector<std::pair<std::string, std::string>> artifacts;  // name, hash

  explicit ArtifactWriter(const std::string& out_dir) : dir(out_dir) {
    fs::create_directories(dir);
  }
  std::string path(const std::string& name) const { return (dir / name).string(); }
  void add(const std::string& name, const std::string& content) {
    write_text_file(path(name), content);
    artifacts.emplace_back(name, file_hash_hex(path(name)));
  }
  void add_csv(const std::string& name, const CsvWriter& csv) { add(name, csv.str()); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void manifest(const std::string& command, const RunConfig& cfg) {
    json m;
    m["command"] = command;
    m["model"] = cfg.model;
    m["seed"] = cfg.seed;
    m["threads"] = cfg.threads;
    json arts = json::array();
    for (const auto& [name, hash] : artifacts) arts.push_back({{"file", name}, {"fnv64", hash}});
    m["artifacts"] = arts;
    write_text_file(path("manifest.json"), m.dump(2) + "\n");
  }
};

std::vector<std::string> start_header(const std::string& prefix, Eigen::Index d) {
  std::vector<std::string> h;
  for (Eigen::Index i = 0; i < d; ++i) h.push_back(prefix + std::to_string(i));
  return h;
}

CsvWriter design_csv(const DesignResult& res, Eigen::Index d) {
  std::vector<std::string> header = start_header("start_", d);
  const auto opt = start_header("optimum_", d);
  header.insert(header.end(), opt.begin(), opt.end());
  header.insert(header.end(), {"objective", "normalized_objective", "evals"});
  CsvWriter csv(header);
  for (const auto& r : res.per_start) {
    std::vector<double> row;
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(r.start[i]);
    for (Eigen::Index i = 0; i < d; ++i) row.push_back(r.optimum[i]);
    row.push_back(r.objective);
    row.push_back(res.target_norm > 0 ? r.objective / res.target_norm
                                      : std::numeric_limits<double>::quiet_NaN());
    row.push_back(r.evals);
    csv.add_row(row);
  }
  return csv;
}

json design_json(const DesignResult& res, const std::vector<std::string>& coord_labels) {
  json out;
  out["best_point"] = vec_to_json(res.best_point);
  out["best_objective"] = res.best_objective;
  out["normalized_objective"] = res.normalized_objective;
  out["target_norm"] = res.target_norm;
  json flat = json::array();
  for (int i : res.flat_coordinates)
    flat.push_back(i < static_cast<int>(coord_labels.size()) ? coord_labels[i]
                                                             : std::to_string(i));
  out["flat_coordinates"] = flat;
  return out;
}

std::vector<std::string> control_labels(const RunConfig& cfg) {
  return cfg.model == "projectile" ? std::vector<std::string>{"m", "ell", "u0", "v0"}
                                   : std::vector<std::string>{"z0", "L", "c"};
}

DesignResult run_scenario(const RunConfig& cfg, const ModelSetup& setup) {
  OptimizerOptions opts = cfg.opts;
  opts.rng = RngSpec{cfg.seed, 1};
  return optimize_scenario(*setup.h_qoi, cfg.x_pred, cfg.theta, cfg.x_lab, opts, cfg.n_mc);
}

std::vector<Eigen::VectorXd> scan_grid(const RunConfig& cfg, const ModelSetup& setup) {
  if (const auto* grid = std::get_if<std::vector<Eigen::VectorXd>>(&setup.z_lab)) return *grid;
  const Box& zbox = std::get<Box>(setup.z_lab);
  require(zbox.dim() == 1, "scan: only 1-d sensor boxes are gridded automatically");
  std::vector<Eigen::VectorXd> grid;
  const int n = cfg.scan_points;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd z(1);
    z[0] = zbox.lower[0] + (zbox.upper[0] - zbox.lower[0]) *
                               (n == 1 ? 0.0 : static_cast<double>(i) / (n - 1));
    grid.push_back(std::move(z));
  }
  return grid;
}

Eigen::VectorXd resolve_x_val(const RunConfig& cfg, const ModelSetup& setup,
                              std::optional<DesignResult>* scenario_out) {
  if (cfg.force_x_val) return *cfg.force_x_val;
  DesignResult res = run_scenario(cfg, setup);
  const Eigen::VectorXd x = res.best_point;
  if (scenario_out) *scenario_out = std::move(res);
  return x;
}

}  // namespace

int cmd_design_scenario(const RunConfig& cfg, const std::string& out_dir) {
  set_thread_count(cfg.threads);
  const ModelSetup setup = build_model(cfg);
  const DesignResult res = run_scenario(cfg, setup);

  ArtifactWriter w(out_dir);
  w.add_csv("scenario_starts.csv", design_csv(res, cfg.x_lab.dim()));
  json summary = design_json(res, control_labels(cfg));
  summary["x_pred"] = vec_to_json(cfg.x_pred);
  w.add_json("scenario.json", summary);

  const RngSpec theta_rng = RngSpec{cfg.seed, 1}.substream(0);
  const auto thetas = sample(cfg.theta, cfg.n_mc, theta_rng);
  const InfluenceMatrix target = influence_matrix_from_samples(
      *setup.h_qoi, cfg.x_pred, Eigen::VectorXd(), thetas, theta_rng);
  write_influence_matrix(target, w.path("target_influence.txt"));
  w.artifacts.emplace_back("target_influence.txt", file_hash_hex(w.path("target_influence.txt")));

  w.manifest("design-scenario", cfg);
  return exit_ok;
}

int cmd_design_sensor(const RunConfig& cfg, const std::string& out_dir) {
  set_thread_count(cfg.threads);
  const ModelSetup setup = build_model(cfg);
  std::optional<DesignResult> scenario;
  const Eigen::VectorXd x_val = resolve_x_val(cfg, setup, &scenario);

  OptimizerOptions opts = cfg.opts;
  opts.rng = RngSpec{cfg.seed, 2};
  const SensorChoice choice =
      optimize_sensor(setup.h_lab, setup.z_lab, x_val, *setup.h_qoi, cfg.theta, opts, cfg.n_mc);

  ArtifactWriter w(out_dir);
  json out;
  out["x_val"] = vec_to_json(x_val);
  out["functional"] = choice.functional_id;
  out["z_val"] = vec_to_json(choice.z);
  out["objective"] = choice.objective;
  json cands = json::array();
  for (const auto& cand : choice.per_functional)
    cands.push_back({{"functional", cand.functional_id},
                     {"z", vec_to_json(cand.z)},
                     {"objective", cand.objective},
                     {"degenerate", cand.degenerate}});
  out["candidates"] = cands;
  if (scenario) out["scenario"] = design_json(*scenario, control_labels(cfg));
  w.add_json("sensor.json", out);

  // Scan data for the figures: objective per grid point and functional.
  const auto grid = scan_grid(cfg, setup);
  for (std::size_t fi = 0; fi < setup.h_lab.size(); ++fi) {
    const auto& h = setup.h_lab[fi];
    if (h->dim_z() == 0) continue;
    const SensorScan scan =
        sensor_scan(*h, x_val, *setup.h_qoi, cfg.theta, grid, RngSpec{cfg.seed, 2}, cfg.n_mc);
    std::vector<std::string> header = start_header("z_", h->dim_z());
    header.push_back("objective");
    CsvWriter csv(header);
    for (std::size_t i = 0; i < scan.grid.size(); ++i) {
      std::vector<double> row(scan.grid[i].data(), scan.grid[i].data() + scan.grid[i].size());
      row.push_back(scan.values[i]);
      csv.add_row(row);
    }
    w.add_csv("sensor_scan_" + h->id() + ".csv", csv);
  }
  w.manifest("design-sensor", cfg);
  return exit_ok;
}

namespace {

WorkflowConfig to_workflow_config(const RunConfig& cfg, const ModelSetup& setup) {
  WorkflowConfig wc;
  wc.h_qoi = setup.h_qoi;
  wc.h_lab = setup.h_lab;
  wc.x_pred = cfg.x_pred;
  wc.x_lab = cfg.x_lab;
  wc.z_lab = setup.z_lab;
  wc.prior = cfg.theta;
  wc.epsilon = cfg.epsilon;
  wc.eta = cfg.eta;
  wc.cov_budget = cfg.cov_budget;
  wc.n_exp = cfg.n_exp;
  wc.n_model = cfg.n_model;
  wc.n_propagate = cfg.n_propagate;
  wc.n_mc = cfg.n_mc;
  wc.opts = cfg.opts;
  wc.opts.rng = RngSpec{cfg.seed, 3};
  wc.rng = RngSpec{cfg.seed, 4};
  wc.experiment = setup.experiment;
  wc.force_x_val = cfg.force_x_val;
  return wc;
}

}  // namespace

int cmd_validate(const RunConfig& cfg, const std::string& out_dir, const std::string& data_csv) {
  set_thread_count(cfg.threads);
  RunConfig effective = cfg;
  if (!data_csv.empty()) {
    effective.experiment_source = "csv";
    effective.experiment_csv = data_csv;
  }
  const ModelSetup setup = build_model(effective);
  const WorkflowConfig wc = to_workflow_config(effective, setup);
  const WorkflowResult res = run_validation_workflow(wc);

  ArtifactWriter w(out_dir);
  json out;
  out["status"] = res.status == WorkflowResult::Status::completed
                      ? "completed"
                      : "exited-uncertainty-too-large";
  out["q_mean"] = res.q_mean;
  out["q_std"] = res.q_std;
  out["q_cov"] = res.q_cov;
  out["cov_budget"] = effective.cov_budget;
  if (res.status == WorkflowResult::Status::completed) {
    out["x_val"] = vec_to_json(res.x_val);
    out["z_val"] = vec_to_json(res.z_val);
    out["h_obs"] = res.h_obs_id;
    out["gamma"] = res.verdict.gamma;
    out["epsilon"] = res.verdict.epsilon;
    out["eta"] = res.verdict.eta;
    out["verdict"] = res.verdict.invalidated ? "invalidated" : "not-invalidated";
    if (res.scenario) out["scenario"] = design_json(*res.scenario, control_labels(effective));

    // |E| CDF data for the discrepancy figure.
    std::vector<double> abs_e;
    abs_e.reserve(res.disc->e.size());
    for (double e : res.disc->e) abs_e.push_back(std::abs(e));
    const EmpiricalCdf cdf(std::move(abs_e));
    CsvWriter csv({"abs_e", "F"});
    const auto& s = cdf.sorted_samples();
    for (std::size_t i = 0; i < s.size(); ++i)
      csv.add_row({s[i], static_cast<double>(i + 1) / static_cast<double>(s.size())});
    w.add_csv("discrepancy_cdf.csv", csv);
  }
  {
    CsvWriter csv({"q"});
    for (double q : res.q_samples) csv.add_row({q});
    w.add_csv("qoi_samples.csv", csv);
  }
  w.add_json("validation.json", out);
  w.manifest("validate", effective);

  if (res.status != WorkflowResult::Status::completed) return exit_ok;
  return res.verdict.invalidated ? exit_invalidated : exit_ok;
}

int cmd_calibrate(const RunConfig& cfg, const std::string& out_dir, const std::string& obs_csv) {
  set_thread_count(cfg.threads);
  if (!cfg.calibration) throw ConfigError("missing field: config.calibration");
  const ModelSetup setup = build_model(cfg);

  FunctionalPtr h_obs;
  for (const auto& h : setup.h_lab)
    if (h->id() == cfg.calibration->observable) h_obs = h;
  if (!h_obs)
    throw ConfigError("config.calibration.observable: \"" + cfg.calibration->observable +
                      "\" is not in h_lab");

  // Observation rows: x (dim_x), z (dim_z), y.
  std::ifstream in(obs_csv);
  if (!in.good()) throw ConfigError("cannot open observations file: " + obs_csv);
  LikelihoodSpec spec;
  spec.sigma = cfg.calibration->sigma;
  std::string line;
  const int dim_x = static_cast<int>(cfg.x_pred.size());
  const int dim_z = h_obs->dim_z();
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> cells;
    std::istringstream ls(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ls, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric && first) {
      first = false;  // header row
      continue;
    }
    first = false;
    if (!numeric) throw ConfigError("observations file: malformed row \"" + line + "\"");
    if (static_cast<int>(cells.size()) != dim_x + dim_z + 1)
      throw ConfigError("observations file: expected " + std::to_string(dim_x + dim_z + 1) +
                        " columns, got " + std::to_string(cells.size()));
    Observation obs;
    obs.x = Eigen::Map<Eigen::VectorXd>(cells.data(), dim_x);
    obs.z = Eigen::Map<Eigen::VectorXd>(cells.data() + dim_x, dim_z);
    obs.y = cells.back();
    spec.observations.push_back(std::move(obs));
  }
  if (spec.observations.empty()) throw ConfigError("observations file: no data rows");

  const PosteriorChain chain =
      posterior_sample(spec, *h_obs, cfg.theta, cfg.calibration->chain_length,
                       cfg.calibration->proposal_scale, RngSpec{cfg.seed, 8},
                       cfg.calibration->burn_in_fraction);

  ArtifactWriter w(out_dir);
  {
    std::vector<std::string> header = start_header("theta_", chain.samples.cols());
    header.push_back("log_density");
    CsvWriter csv(header);
    for (Eigen::Index i = 0; i < chain.samples.rows(); ++i) {
      std::vector<double> row;
      for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) row.push_back(chain.samples(i, j));
      row.push_back(chain.log_density[i]);
      csv.add_row(row);
    }
    w.add_csv("chain.csv", csv);
  }
  json out;
  out["acceptance_rate"] = chain.acceptance_rate;
  out["burn_in"] = chain.burn_in;
  out["mean"] = vec_to_json(chain.mean());
  const Eigen::MatrixXd cov = chain.covariance();
  json cov_json = json::array();
  for (Eigen::Index i = 0; i < cov.rows(); ++i) cov_json.push_back(vec_to_json(cov.row(i)));
  out["covariance"] = cov_json;
  json quantiles;
  for (Eigen::Index j = 0; j < chain.samples.cols(); ++j) {
    auto comp = chain.component(static_cast<int>(j));
    std::sort(comp.begin(), comp.end());
    const auto q = [&](double p) {
      return comp[static_cast<std::size_t>(p * (comp.size() - 1))];
    };
    quantiles["theta_" + std::to_string(j)] = {q(0.05), q(0.25), q(0.5), q(0.75), q(0.95)};
  }
  out["quantiles_5_25_50_75_95"] = quantiles;
  w.add_json("posterior.json", out);
  w.manifest("calibrate", cfg);
  return exit_ok;
}

int cmd_verify(const RunConfig& cfg, const std::string& out_dir) {
  set_thread_count(cfg.threads);
  if (!cfg.x_full) throw ConfigError("missing field: config.x_full (verification control space)");
  const ModelSetup setup = build_model(cfg);
  OptimizerOptions opts = cfg.opts;
  opts.rng = RngSpec{cfg.seed, 9};
  const RecoveryTable table = verify_recovery(*setup.h_qoi, cfg.x_pred, cfg.theta, *cfg.x_full,
                                              opts.n_starts, opts, cfg.n_mc);

  ArtifactWriter w(out_dir);
  const Eigen::Index d = cfg.x_full->dim();
  std::vector<std::string> header = start_header("start_", d);
  const auto opt_h = start_header("optimum_", d);
  header.insert(header.end(), opt_h.begin(), opt_h.end());
  header.insert(header.end(), {"l2_error", "normalized_objective", "evals"});
  CsvWriter csv(header);
  for (const auto& row : table.rows) {
    std::vector<double> cells;
    for (Eigen::Index i = 0; i < d; ++i) cells.push_back(row.start[i]);
    for (Eigen::Index i = 0; i < d; ++i) cells.push_back(row.optimum[i]);
    cells.push_back(row.l2_error);
    cells.push_back(row.normalized_objective);
    cells.push_back(row.evals);
    csv.add_row(cells);
  }
  w.add_csv("recovery.csv", csv);

  json out;
  out["x_pred"] = vec_to_json(cfg.x_pred);
  out["target_norm"] = table.target_norm;
  json flat = json::array();
  const auto labels = control_labels(cfg);
  for (int i : table.flat_coordinates) flat.push_back(labels[static_cast<std::size_t>(i)]);
  out["flat_coordinates"] = flat;
  double max_obj = 0.0;
  for (const auto& row : table.rows) max_obj = std::max(max_obj, row.normalized_objective);
  out["max_normalized_objective"] = max_obj;
  w.add_json("recovery.json", out);
  w.manifest("verify", cfg);
  return exit_ok;
}

int cmd_propagate(const RunConfig& cfg, const std::string& out_dir) {
  set_thread_count(cfg.threads);
  const ModelSetup setup = build_model(cfg);
  const Distribution q = propagate(*setup.h_qoi, cfg.x_pred, Eigen::VectorXd(), cfg.theta,
                                   cfg.n_propagate, RngSpec{cfg.seed, 4});
  const auto& samples = std::get<Distribution::Empirical>(q.node()).samples;

  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  var /= static_cast<double>(samples.size() > 1 ? samples.size() - 1 : 1);
  const double stddev = std::sqrt(var);
  const double cov = mean != 0.0 ? stddev / std::abs(mean)
                                 : std::numeric_limits<double>::infinity();

  ArtifactWriter w(out_dir);
  CsvWriter csv({"q"});
  for (double v : samples) csv.add_row({v});
  w.add_csv("qoi_samples.csv", csv);

  json out;
  out["mean"] = mean;
  out["stddev"] = stddev;
  out["cov"] = cov;
  out["cov_budget"] = cfg.cov_budget;
  out["gate"] = cov > cfg.cov_budget ? "exit-validation" : "proceed";
  const auto q_at = [&](double p) {
    return samples[static_cast<std::size_t>(p * (samples.size() - 1))];
  };
  out["quantiles_5_50_95"] = {q_at(0.05), q_at(0.5), q_at(0.95)};
  w.add_json("propagate.json", out);
  w.manifest("propagate", cfg);
  return exit_ok;
}

}  // namespace oved::cli
