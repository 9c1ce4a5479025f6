#pragma once

#include <functional>
#include <vector>

#include <CLI11.hpp>

#include "cli/manifest.hpp"

namespace stinpaint::cli {

/// Body of one subcommand. It declares its inputs and outputs on the manifest;
/// the dispatcher writes the manifest afterwards.
using Action = std::function<void(RunManifest&)>;

struct Command {
  CLI::App* app = nullptr;
  Action run;
};

std::vector<Command> add_commands(CLI::App& root);

}  // namespace stinpaint::cli
