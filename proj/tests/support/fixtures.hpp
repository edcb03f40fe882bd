#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "idil/autodiff.hpp"
#include "idil/random.hpp"

namespace idil::testing {

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "idil");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo = -2.0, double hi = 2.0);

// Scores drawn from a small grid so that ties are common.
std::vector<double> tied_scores(Rng& rng, std::size_t n, std::size_t levels);

std::vector<std::vector<double>> to_rows(const ad::Tensor& m);

// Runs the command-line entry point with captured output.
struct CliResult {
  int code = 0;
  std::string out;
  std::string err;
};
CliResult run_cli(const std::vector<std::string>& args);

std::string slurp(const std::filesystem::path& path);
std::vector<std::string> lines(const std::string& text);

}  // namespace idil::testing
