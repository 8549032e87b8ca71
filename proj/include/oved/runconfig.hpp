#pragma once

#include <optional>
#include <string>

#include "oved/transport.hpp"
#include "oved/validation.hpp"

namespace oved::cli {

// Raised for malformed configuration with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Exit codes of every subcommand.
enum ExitCode : int {
  exit_ok = 0,           // success / model not invalidated
  exit_invalidated = 1,  // validation verdict: invalidated
  exit_config = 2,       // usage or configuration error
  exit_numeric = 3,      // numerical failure
};

struct RunConfig {
  std::string model;  // "projectile" | "transport"
  std::uint64_t seed = 1;
  int threads = 1;
  std::string output_dir = "out";
  std::string qoi;  // "max_altitude" | "qoi1" | "qoi2"

  Eigen::VectorXd x_pred;
  Box x_lab;
  std::optional<Box> x_full;  // verification control space (cmd verify)
  Distribution theta = Distribution::dirac(0.0);
  std::vector<std::string> h_lab_ids;
  std::optional<Box> z_box;
  std::optional<std::vector<Eigen::VectorXd>> z_grid;

  OptimizerOptions opts;
  int n_mc = 1000;
  int scan_points = 200;

  double epsilon = 1.0;
  double eta = 0.9;
  double cov_budget = 0.5;
  int n_exp = 10000;
  int n_model = 10000;
  int n_propagate = 10000;

  std::string experiment_source = "synthetic-fine";  // | "synthetic-model" | "csv"
  double noise_rel = 0.05;
  std::string experiment_csv;

  std::optional<Eigen::VectorXd> force_x_val;

  struct CalibrationConfig {
    std::string observable;
    double sigma = 1.0;
    int chain_length = 20000;
    double burn_in_fraction = 0.2;
    Eigen::VectorXd proposal_scale;
  };
  std::optional<CalibrationConfig> calibration;

  struct TransportConfig {
    int nx = 64, ny = 32;
    double width = 5.0, height = 2.0;
    bool docks = false;
    std::string velocity_file;
    double v_max = 1.0;
    transport::Region omega1 = transport::TransportModel::default_omega1();
    transport::Region omega2 = transport::TransportModel::default_omega2();
    double obs_side = 0.1;
    int scan_nx = 20, scan_ny = 8;
  };
  TransportConfig transport;
};

RunConfig parse_config(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& origin = "<config>");

// Model-family objects resolved from a configuration.
struct ModelSetup {
  FunctionalPtr h_qoi;
  std::vector<FunctionalPtr> h_lab;
  SensorDomain z_lab;
  ExperimentSource experiment;
  std::shared_ptr<const transport::TransportModel> transport_model;  // transport family only
};

ModelSetup build_model(const RunConfig& cfg);

int cmd_design_scenario(const RunConfig& cfg, const std::string& out_dir);
int cmd_design_sensor(const RunConfig& cfg, const std::string& out_dir);
int cmd_validate(const RunConfig& cfg, const std::string& out_dir,
                 const std::string& data_csv = "");
int cmd_calibrate(const RunConfig& cfg, const std::string& out_dir, const std::string& obs_csv);
int cmd_verify(const RunConfig& cfg, const std::string& out_dir);
int cmd_propagate(const RunConfig& cfg, const std::string& out_dir);

}  // namespace oved::cli
