#include "idil/io.hpp"

#include <algorithm>
#include <sstream>

#include "idil/error.hpp"

namespace idil::io {

namespace {

std::mutex registry_mu;
std::vector<AccessTrace*>& registry() {
  static std::vector<AccessTrace*> traces;
  return traces;
}

}  // namespace

void notify_read(const std::filesystem::path& path) {
  std::lock_guard lock(registry_mu);
  for (AccessTrace* trace : registry()) {
    std::lock_guard inner(trace->mu_);
    trace->reads_.push_back(path);
  }
}

AccessTrace::AccessTrace() {
  std::lock_guard lock(registry_mu);
  registry().push_back(this);
}

AccessTrace::~AccessTrace() {
  std::lock_guard lock(registry_mu);
  auto& traces = registry();
  traces.erase(std::remove(traces.begin(), traces.end(), this), traces.end());
}

std::vector<std::filesystem::path> AccessTrace::reads() const {
  std::lock_guard lock(mu_);
  return reads_;
}

bool AccessTrace::was_read(const std::filesystem::path& path) const {
  std::lock_guard lock(mu_);
  std::error_code ec;
  const auto want = std::filesystem::weakly_canonical(path, ec);
  for (const auto& p : reads_) {
    if (p == path) return true;
    if (std::filesystem::equivalent(p, path, ec)) return true;
    if (!want.empty() && std::filesystem::weakly_canonical(p, ec) == want) return true;
  }
  return false;
}

std::ifstream open_input(const std::filesystem::path& path, bool binary) {
  notify_read(path);
  std::ifstream in(path, binary ? std::ios::in | std::ios::binary : std::ios::in);
  if (!in) throw DataError("cannot open '" + path.string() + "' for reading");
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::out | std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_input(path, true);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const std::filesystem::path& path, const std::string& contents) {
  auto out = open_output(path);
  out << contents;
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace idil::io
