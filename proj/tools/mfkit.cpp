// mfkit: command-line front end. Exit codes: 0 success, 2 invalid input,
// 3 numerical failure.

#include <fstream>
#include <iostream>
#include <map>
#include <string>

#include <CLI11.hpp>

#include "ops.hpp"

namespace {

std::string flag_of(std::string key) {
  for (auto& c : key)
    if (c == '_') c = '-';
  return "--" + key;
}

mfkit::io::Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mfkit::ValidationError("cannot open '" + path + "'");
  return mfkit::io::read_config(in);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dyadic net measures, prescribed-dimension sets and multifractal estimators"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  struct Bound {
    const mfcli::Operation* op;
    CLI::App* cmd;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;
  };
  std::vector<std::unique_ptr<Bound>> bound;
  std::map<std::string, CLI::App*> groups;
  for (const auto& op : mfcli::operations()) {
    auto b = std::make_unique<Bound>();
    b->op = &op;
    const auto dot = op.name.find('.');
    if (dot == std::string::npos) {
      b->cmd = app.add_subcommand(op.name, op.help);
    } else {
      const auto group = op.name.substr(0, dot);
      if (!groups.count(group)) {
        groups[group] = app.add_subcommand(group, group + " subcommands");
        groups[group]->require_subcommand(1);
      }
      b->cmd = groups[group]->add_subcommand(op.name.substr(dot + 1), op.help);
    }
    for (const auto& key : op.keys) {
      std::string help = key.help;
      if (!key.fallback) help += " (required)";
      else if (!key.fallback->empty()) help += " [" + *key.fallback + "]";
      b->options[key.name] = b->cmd->add_option(flag_of(key.name), b->values[key.name], help);
    }
    bound.push_back(std::move(b));
  }

  std::string config_path;
  auto* run = app.add_subcommand("run", "run a pipeline described by a key = value config file");
  run->add_option("--config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) {
      const auto cfg = load_config(config_path);
      if (cfg.count("threads")) threads = static_cast<int>(mfkit::io::parse_int(cfg.at("threads")));
      if (threads < 1) throw mfkit::ValidationError("threads must be positive");
      mfkit::set_threads(static_cast<unsigned>(threads));
      std::cout << mfcli::run_config(cfg);
      return 0;
    }
    mfkit::set_threads(static_cast<unsigned>(threads));
    for (const auto& b : bound) {
      if (!b->cmd->parsed()) continue;
      mfkit::io::Config given;
      for (const auto& [key, opt] : b->options)
        if (opt->count() > 0) given[key] = b->values[key];
      std::cout << mfcli::execute(*b->op, given);
      return 0;
    }
    return 2;
  } catch (const mfkit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const mfkit::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
}
