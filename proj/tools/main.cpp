#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "pipeline.hpp"

using namespace ergojump;

int main(int argc, char** argv) {
  CLI::App app{"ergojump: dyadic cubes, jump inequalities and ergodic averages on finite spaces"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::optional<std::uint64_t> seed;
  unsigned threads = 0;
  std::vector<std::string> suites;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "config file (JSON)")->required();
    sub->add_option("--out", out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "override the config seed");
    sub->add_option("--threads", threads, "worker threads, 0 = hardware concurrency");
    sub->add_option("--suite", suites, "suites (verify) or operators (probe), comma separated")->delimiter(',');
  };
  for (const char* name : {"space", "cubes", "verify", "probe", "experiment", "run"}) {
    auto* sub = app.add_subcommand(name);
    add_common(sub);
  }
  std::string bundle;
  auto* rep = app.add_subcommand("report", "summarize an output bundle");
  rep->add_option("bundle", bundle, "output directory to summarize")->required();

  CLI11_PARSE(app, argc, argv);
  auto* sub = app.get_subcommands().front();
  if (sub->get_name() == "report") return cli::report(bundle, std::cout, std::cerr);

  try {
    set_thread_count(threads);
    const auto config = cli::load_config(config_path, seed);
    const auto result = cli::run_command(sub->get_name(), config, out_dir, suites);
    for (const auto& f : result.failures) std::cerr << "FAIL " << f << "\n";
    std::cout << "config_sha256 " << config.sha256 << "\n";
    for (const auto& f : result.files) std::cout << "wrote " << f << "\n";
    return result.exit_code;
  } catch (const cli::ConfigError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << config_path << ": error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
