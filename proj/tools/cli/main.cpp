#include <iostream>

#include "cli/commands.hpp"
#include "stinpaint/common/error.hpp"
#include "stinpaint/common/parallel.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kData = 2;
constexpr int kNumeric = 3;

void record_flags(const CLI::App& app, stinpaint::cli::RunManifest& manifest) {
  for (const CLI::Option* opt : app.get_options()) {
    if (opt->count() == 0 || opt->get_name() == "--help") continue;
    manifest.flag(opt->get_name(), opt->results());
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace stinpaint;
  CLI::App root("Spatiotemporal histogram inpainting with partial-convolution U-Nets");
  root.require_subcommand(1);
  int threads = 1;
  root.add_option("--threads", threads, "Worker threads (1 = bit-deterministic)")->check(CLI::PositiveNumber);
  const auto commands = cli::add_commands(root);

  try {
    root.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = root.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  set_num_threads(threads);
  retain_freed_memory();

  for (const auto& cmd : commands) {
    if (!cmd.app->parsed()) continue;
    cli::RunManifest manifest(cmd.app->get_name());
    record_flags(*cmd.app, manifest);
    manifest.flag("--threads", {std::to_string(threads)});
    try {
      cmd.run(manifest);
      const std::string path = manifest.write();
      if (!path.empty()) std::cerr << "manifest: " << path << "\n";
      return kOk;
    } catch (const ParameterError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kUsage;
    } catch (const NumericError& e) {
      std::cerr << "numeric failure: " << e.what() << "\n";
      return kNumeric;
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kData;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return kData;
    }
  }
  return kUsage;
}
