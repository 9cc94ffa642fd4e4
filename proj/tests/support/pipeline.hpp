#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace pipeline {

namespace fs = std::filesystem;

struct Run {
  int status = 0;
  std::string failed_step;
  std::string log;
};

fs::path fresh_dir(const std::string& name);

/// Runs one command line through the CLI; args exclude the program name.
int cli(const std::vector<std::string>& args, std::string* log = nullptr);

/// simulate -> fit-cr -> fit-cpue -> fit-transfer -> summarize -> plot in `dir`
/// with a short chain configuration.
Run full(const fs::path& dir, std::uint64_t seed, long iterations = 3000);

std::string slurp(const fs::path& path);

}  // namespace pipeline
