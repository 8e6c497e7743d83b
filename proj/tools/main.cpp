// nashtrack command line: simulate, sweep, ne, mdp-verify, verify.

#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "nashtrack/csv.hpp"
#include "nashtrack/harness.hpp"
#include "nashtrack/verify.hpp"

namespace fs = std::filesystem;
using namespace nashtrack;

namespace {

struct CommonArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config, "experiment configuration (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--seed", args.seed, "master seed, overrides the configuration");
  cmd->add_option("--out", args.out, "output directory, overrides the configuration");
}

ExperimentConfig resolve(const CommonArgs& args) {
  ExperimentConfig config = args.config.empty() ? ExperimentConfig{} : load_config(args.config);
  if (args.seed) config.seed = *args.seed;
  if (args.out) config.out_dir = *args.out;
  config.validate();
  fs::create_directories(config.out_dir);
  return config;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

void write_manifest(const ExperimentConfig& config, const std::string& command) {
  nlohmann::json doc{{"schema_version", 1}, {"command", command}, {"config", config.to_json()}};
  open_out(fs::path(config.out_dir) / "manifest.json") << doc.dump(2) << "\n";
}

int simulate(const ExperimentConfig& config) {
  const ExperimentResult result = run_experiment(config);
  write_experiment_csvs(result, config.out_dir);
  write_manifest(config, "simulate");
  for (const auto& p : result.points)
    std::cout << to_string(p.policy) << " eps=" << p.epsilon << " Nbar=" << p.mean_sojourn
              << " EAE=" << p.eae << " MSE=" << p.mse << " P_region=" << p.p_region << "\n";
  return 0;
}

int sweep(const ExperimentConfig& config) {
  std::vector<double> epsilons;
  for (double nbar : config.verify.sojourn_times)
    epsilons.push_back(epsilon_for_sojourn(nbar, config.links, config.subcarriers));
  const auto points = sweep_sojourn(config, epsilons);
  auto out = open_out(fs::path(config.out_dir) / "sweep.csv");
  write_sweep_csv(out, points);
  write_manifest(config, "sweep");
  std::cout << "wrote " << points.size() << " sweep points to " << config.out_dir << "\n";
  return 0;
}

int ne(const ExperimentConfig& config) {
  auto summary = open_out(fs::path(config.out_dir) / "ne_summary.csv");
  csv::Writer w(summary);
  w.header({"epsilon", "states", "delta", "uncertified", "max_cross_interference"});
  for (std::size_t i = 0; i < config.epsilons.size(); ++i) {
    const FsmcSpec spec = config.spec(config.epsilons[i]);
    const JointEnumeration en = enumerate_joint_states(spec, config.enumeration_cap);
    const NeTable table = ne_distance_table(en.states, spec, NoiseModel{config.sigma2},
                                            config.p_max_vector(), {}, config.threads);
    double beta = 0.0;
    for (const auto& s : en.states) beta = std::max(beta, cross_interference_sum(gains_of(spec, s)));
    auto out = open_out(fs::path(config.out_dir) /
                        (config.epsilons.size() == 1 ? std::string("ne.csv")
                                                     : "ne_" + std::to_string(i) + ".csv"));
    write_ne_csv(out, table);
    w << config.epsilons[i] << static_cast<std::uint64_t>(en.states.size()) << table.delta
      << static_cast<std::uint64_t>(table.uncertified) << beta;
    w.end_row();
    std::cout << "eps=" << config.epsilons[i] << " states=" << en.states.size()
              << " delta=" << table.delta << " uncertified=" << table.uncertified << "\n";
  }
  write_manifest(config, "ne");
  return 0;
}

int mdp_verify(const ExperimentConfig& config) {
  const MdpKernel kernel = desk_mdp(config.mdp);
  const RviResult rvi = relative_value_iteration(kernel, kernel.grid, 1e-9);
  const auto greedy = greedy_min_beta_policy(kernel);
  auto out = open_out(fs::path(config.out_dir) / "mdp.csv");
  csv::Writer w(out);
  w.header({"policy", "average_cost"});
  w << "rvi" << rvi.average_cost;
  w.end_row();
  w << "greedy" << evaluate_policy(kernel, kernel.grid, greedy);
  w.end_row();
  for (std::size_t a = 0; a < kernel.actions.size(); ++a) {
    w << "constant_beta_" + csv::number(kernel.actions[a])
      << evaluate_policy(kernel, kernel.grid, std::vector<std::size_t>(kernel.state_count(), a));
    w.end_row();
  }
  write_manifest(config, "mdp-verify");
  std::cout << "RVI average cost " << rvi.average_cost << " after " << rvi.iterations
            << " sweeps\n";
  return 0;
}

int verify(const ExperimentConfig& config) {
  const auto results = verify_suite(config, [](const CheckResult& r) {
    std::cout << "criterion " << r.id << ": " << (r.passed ? "PASS" : "FAIL") << " [" << r.name
              << "] " << r.detail << " (" << r.seconds << " s)" << std::endl;
  });
  write_verify_report(results, config.out_dir);
  bool ok = true;
  for (const auto& r : results) ok = ok && r.passed;
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nash equilibrium tracking over finite-state Markov interference channels"};
  app.require_subcommand(1);
  CommonArgs args;
  std::function<int(const ExperimentConfig&)> action;

  const std::vector<std::pair<std::string, std::function<int(const ExperimentConfig&)>>> commands{
      {"simulate", simulate}, {"sweep", sweep}, {"ne", ne}, {"mdp-verify", mdp_verify},
      {"verify", verify}};
  const std::map<std::string, std::string> help{
      {"simulate", "run all policies and write capacity, EAE, MSE and P_region tables"},
      {"sweep", "sweep the mean sojourn time and write sweep.csv"},
      {"ne", "enumerate channel states and tabulate their equilibria"},
      {"mdp-verify", "solve the desk MDP and compare stationary policies"},
      {"verify", "run the acceptance checks"}};
  for (const auto& [name, fn] : commands) {
    CLI::App* cmd = app.add_subcommand(name, help.at(name));
    add_common(cmd, args);
    cmd->callback([&action, fn = fn] { action = fn; });
  }
  CLI11_PARSE(app, argc, argv);

  try {
    return action(resolve(args));
  } catch (const ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
