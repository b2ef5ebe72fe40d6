// aifml: validate, infer, train, sweep, serve, simulate.
//
// Exit codes: 0 success, 1 validation or domain error, 2 usage error,
// 3 I/O or network error.
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "aifml/service.hpp"
#include "aifml/simulator.hpp"
#include "number_format.hpp"

using namespace aifml;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kUsage = 2, kIo = 3 };

struct Failure {
  Exit code;
  std::string message;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "cannot read " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw Failure{kIo, "cannot write " + path};
}

FuzzySystem load_system(const std::string& path) {
  const auto text = read_file(path);
  try {
    return parse_fml(text);
  } catch (const FmlError& e) {
    std::string message = path + ": invalid system";
    for (const auto& d : e.diagnostics()) message += "\n  " + format_diagnostic(d);
    throw Failure{kInvalid, message};
  }
}

Dataset load_data(const std::string& path, const FuzzySystem& sys) {
  const auto text = read_file(path);
  try {
    return load_dataset(text, sys);
  } catch (const DataError& e) {
    throw Failure{kInvalid, path + ": " + e.what()};
  }
}

void check(const PsoConfig& cfg) {
  try {
    check_config(cfg);
  } catch (const std::invalid_argument& e) {
    throw Failure{kUsage, e.what()};
  }
}

void wait_for_signal() {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  int sig = 0;
  sigwait(&set, &sig);
}

int cmd_validate(const std::string& path) {
  const auto text = read_file(path);
  try {
    parse_fml(text);
  } catch (const FmlError& e) {
    for (const auto& d : e.diagnostics()) std::cout << format_diagnostic(d) << '\n';
    return kInvalid;
  }
  std::cout << "OK\n";
  return kOk;
}

int cmd_infer(const std::string& path, const std::vector<std::string>& assignments, bool json) {
  const auto sys = load_system(path);
  CrispInputs inputs;
  for (const auto& a : assignments) {
    const auto eq = a.find('=');
    if (eq == std::string::npos) throw Failure{kUsage, "--input expects name=value, got '" + a + "'"};
    const auto name = a.substr(0, eq);
    const auto* var = sys.find_variable(name);
    if (var == nullptr || var->role != Role::input) throw Failure{kUsage, "unknown input variable '" + name + "'"};
    const auto value = detail::parse_number(a.substr(eq + 1));
    if (!value) throw Failure{kUsage, "input '" + name + "' is not a number: '" + a.substr(eq + 1) + "'"};
    inputs[name] = *value;
  }
  for (const auto* var : sys.inputs())
    if (!inputs.count(var->name)) throw Failure{kUsage, "missing input '" + var->name + "'"};

  const auto result = infer(sys, inputs);
  if (json) {
    std::cout << result_json(result) << '\n';
    return kOk;
  }
  for (const auto& o : result.outputs)
    std::cout << o.variable << " = " << detail::format_number(o.value) << (o.defaulted ? "  (defaulted=true)" : "")
              << '\n';
  std::cout << "rule activations:\n";
  for (const auto& a : result.rule_activations)
    std::cout << "  " << a.rule_id << " " << detail::format_number(a.strength) << '\n';
  return kOk;
}

int cmd_train(const std::string& system_path, const std::string& data_path, PsoConfig cfg, const std::string& out) {
  check(cfg);
  const auto sys = load_system(system_path);
  const auto data = load_data(data_path, sys);
  const auto trained = pso_train(sys, data, cfg);
  write_file(out, serialize_fml(trained.system));
  write_file(out + ".history.csv", history_csv(trained.history));
  std::cout << "rmse before " << detail::format_number(rmse(sys, data)) << '\n'
            << "rmse after  " << detail::format_number(rmse(trained.system, data)) << '\n'
            << "wrote " << out << " and " << out << ".history.csv\n";
  return kOk;
}

int cmd_sweep(const std::string& system_path, const std::string& data_path, const std::vector<int>& particles,
              const std::vector<int>& budgets, int seeds, std::uint64_t base_seed, PsoConfig base,
              const std::string& out) {
  if (seeds < 1) throw Failure{kUsage, "--seeds must be at least 1"};
  for (int p : particles) {
    for (int b : budgets) {
      base.swarm_size = p;
      base.max_evaluations = b;
      check(base);
    }
  }
  const auto sys = load_system(system_path);
  const auto data = load_data(data_path, sys);
  std::vector<std::uint64_t> seed_list;
  for (int i = 0; i < seeds; ++i) seed_list.push_back(base_seed + static_cast<std::uint64_t>(i));
  const auto rows = sensitivity_sweep(sys, data, particles, budgets, seed_list, base);
  write_file(out, sweep_csv(rows));
  std::cout << "wrote " << rows.size() << " rows to " << out << '\n';
  return kOk;
}

int cmd_serve(ServiceConfig cfg) {
  Service svc(cfg);
  svc.start();
  if (cfg.broker.empty())
    spdlog::warn("no broker given; MQTT devices will not receive results (degraded mode)");
  else if (svc.degraded())
    spdlog::warn("broker {} unreachable; serving HTTP in degraded mode and retrying in the background", cfg.broker);
  std::cout << "listening on http://" << cfg.host << ":" << svc.port() << std::endl;
  wait_for_signal();
  spdlog::info("shutting down");
  return kOk;
}

int cmd_simulate(SimulatorConfig cfg) {
  DeviceSimulator sim(cfg);
  try {
    sim.start();
  } catch (const MqttError& e) {
    throw Failure{kIo, e.what()};
  }
  std::cout << "state on http://" << cfg.host << ":" << sim.port() << "/state" << std::endl;
  wait_for_signal();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  // serve and simulate wait for these with sigwait; block them before any
  // thread starts so every thread inherits the mask.
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);

  spdlog::set_default_logger(spdlog::stderr_color_mt("aifml"));

  CLI::App app{"IEEE 1855 FML engine and AIoT workbench"};
  app.require_subcommand(1);

  std::string system_path, data_path, out_path;
  std::vector<std::string> assignments;
  bool json = false;
  PsoConfig pso;
  std::vector<int> particle_list{10, 20, 40}, budget_list{2000};
  int seeds = 11;

  auto* validate = app.add_subcommand("validate", "check an FML document");
  validate->add_option("--system", system_path, "FML file")->required();

  auto* infer_cmd = app.add_subcommand("infer", "run Mamdani inference");
  infer_cmd->add_option("--system", system_path, "FML file")->required();
  infer_cmd->add_option("--input", assignments, "name=value, once per input")->required();
  infer_cmd->add_flag("--json", json, "print the result as JSON");

  auto add_pso = [&](CLI::App* cmd) {
    cmd->add_option("--inertia", pso.inertia)->capture_default_str();
    cmd->add_option("--cognitive", pso.cognitive)->capture_default_str();
    cmd->add_option("--social", pso.social)->capture_default_str();
    cmd->add_option("--velocity-clamp", pso.velocity_clamp_fraction)->capture_default_str();
  };
  auto* train = app.add_subcommand("train", "tune membership functions with PSO");
  train->add_option("--system", system_path, "template FML file")->required();
  train->add_option("--data", data_path, "training CSV")->required();
  train->add_option("--particles", pso.swarm_size)->capture_default_str();
  train->add_option("--evals", pso.max_evaluations, "fitness-evaluation budget")->capture_default_str();
  train->add_option("--seed", pso.seed)->capture_default_str();
  train->add_option("--out", out_path, "trained FML file; history goes to <out>.history.csv")->required();
  add_pso(train);

  std::uint64_t base_seed = 0;
  auto* sweep = app.add_subcommand("sweep", "PSO sensitivity table over particles, budgets and seeds");
  sweep->add_option("--system", system_path)->required();
  sweep->add_option("--data", data_path)->required();
  sweep->add_option("--particles-list", particle_list)->delimiter(',')->capture_default_str();
  sweep->add_option("--evals-list", budget_list)->delimiter(',')->capture_default_str();
  sweep->add_option("--seeds", seeds, "number of seeds")->capture_default_str();
  sweep->add_option("--seed", base_seed, "first seed; seeds run base..base+K-1")->capture_default_str();
  sweep->add_option("--out", out_path, "CSV file")->required();
  add_pso(sweep);

  ServiceConfig service;
  auto* serve = app.add_subcommand("serve", "HTTP/WebSocket service");
  serve->add_option("--system", service.system_path)->required();
  serve->add_option("--port", service.port)->capture_default_str();
  serve->add_option("--host", service.host)->capture_default_str();
  serve->add_option("--broker", service.broker, "MQTT broker host:port");
  serve->add_option("--devices", service.devices_path, "JSON array of device descriptors");

  SimulatorConfig sim;
  std::string kind = "kebbi", transport = "mqtt";
  auto* simulate = app.add_subcommand("simulate", "device simulator");
  simulate->add_option("--device-kind", kind)->check(CLI::IsMember({"kebbi", "lt", "mooncar", "custom"}));
  simulate->add_option("--device-id", sim.device_id)->capture_default_str();
  simulate->add_option("--broker", sim.broker, "MQTT broker host:port");
  simulate->add_option("--transport", transport)->check(CLI::IsMember({"mqtt", "http"}))->capture_default_str();
  simulate->add_option("--port", sim.port, "state port; 0 picks one")->capture_default_str();
  simulate->add_option("--display-output", sim.display_output, "output shown by an lt display");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*validate) return cmd_validate(system_path);
    if (*infer_cmd) return cmd_infer(system_path, assignments, json);
    if (*train) return cmd_train(system_path, data_path, pso, out_path);
    if (*sweep) return cmd_sweep(system_path, data_path, particle_list, budget_list, seeds, base_seed, pso, out_path);
    if (*serve) {
      try {
        return cmd_serve(service);
      } catch (const FmlError& e) {
        throw Failure{kInvalid, e.what()};
      } catch (const std::invalid_argument& e) {
        throw Failure{kInvalid, e.what()};
      } catch (const std::exception& e) {
        throw Failure{kIo, e.what()};
      }
    }
    if (*simulate) {
      sim.kind = kind == "kebbi" ? DeviceKind::kebbi
                 : kind == "lt"  ? DeviceKind::lt
                 : kind == "mooncar" ? DeviceKind::mooncar
                                     : DeviceKind::custom;
      sim.transport = transport == "mqtt" ? Transport::mqtt : Transport::http;
      if (sim.transport == Transport::mqtt && sim.broker.empty()) throw Failure{kUsage, "--broker is required for mqtt"};
      if (!is_identifier(sim.device_id)) throw Failure{kUsage, "--device-id must be an identifier"};
      try {
        return cmd_simulate(sim);
      } catch (const Failure&) {
        throw;
      } catch (const std::invalid_argument& e) {
        throw Failure{kUsage, e.what()};
      } catch (const std::exception& e) {
        throw Failure{kIo, e.what()};
      }
    }
  } catch (const Failure& f) {
    std::cerr << "aifml: " << f.message << '\n';
    return f.code;
  }
  return kUsage;
}
