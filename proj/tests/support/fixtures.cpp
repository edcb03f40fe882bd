#include "fixtures.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "idil/cli/commands.hpp"

namespace idil::testing {

namespace fs = std::filesystem;

TempDir::TempDir(const std::string& tag) {
  static std::atomic<unsigned> counter{0};
  path_ = fs::temp_directory_path() /
          (tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

std::vector<double> uniform_values(Rng& rng, std::size_t n, double lo, double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

std::vector<double> tied_scores(Rng& rng, std::size_t n, std::size_t levels) {
  std::vector<double> v(n);
  for (auto& x : v) x = static_cast<double>(rng.below(levels)) / static_cast<double>(levels);
  return v;
}

std::vector<std::vector<double>> to_rows(const ad::Tensor& m) {
  std::vector<std::vector<double>> rows(m.rows(), std::vector<double>(m.cols()));
  for (std::size_t r = 0; r < m.rows(); ++r)
    for (std::size_t c = 0; c < m.cols(); ++c) rows[r][c] = m.at(r, c);
  return rows;
}

CliResult run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv = {"idil-ood"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  CliResult r;
  r.code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace idil::testing
