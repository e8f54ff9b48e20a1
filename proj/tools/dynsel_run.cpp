#include <iostream>
#include <string>
#include <vector>

#include "dynsel/experiment.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::optional<dynsel::ExperimentConfig> cfg;
  try {
    std::string help;
    cfg = dynsel::parse_config(args, &help);
    if (!cfg) {
      std::cout << help;
      return dynsel::kExitOk;
    }
  } catch (const dynsel::ConfigViolations& e) {
    for (const auto& v : e.violations()) std::cerr << "dynsel-run: " << v << '\n';
    return dynsel::kExitConfig;
  } catch (const dynsel::ConfigError& e) {
    std::cerr << "dynsel-run: " << e.what() << '\n';
    return dynsel::kExitConfig;
  }

  try {
    auto outcome = dynsel::run_experiment(*cfg);
    if (!outcome.message.empty()) std::cerr << "dynsel-run: " << outcome.message << '\n';
    if (outcome.status == dynsel::kExitOk && !outcome.report.rows.empty()) {
      const auto& last = outcome.report.rows.back();
      std::cout << "instances=" << last.index << " accuracy=" << dynsel::detail::fixed6(last.accuracy)
                << " kappa=" << dynsel::detail::fixed6(last.kappa) << " report=" << cfg->out << '\n';
    }
    return outcome.status;
  } catch (const std::exception& e) {
    std::cerr << "dynsel-run: " << e.what() << '\n';
    return dynsel::kExitRuntime;
  }
}
