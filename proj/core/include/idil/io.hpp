#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <string>
#include <vector>

namespace idil::io {

// Opens a file for reading and reports the access to every active
// AccessTrace. All library and tool reads go through here.
std::ifstream open_input(const std::filesystem::path& path, bool binary = false);

// Opens a file for writing, creating parent directories.
std::ofstream open_output(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& contents);

// Records every path passed to open_input while alive. Traces nest; all
// active traces see each access.
class AccessTrace {
 public:
  AccessTrace();
  ~AccessTrace();
  AccessTrace(const AccessTrace&) = delete;
  AccessTrace& operator=(const AccessTrace&) = delete;

  std::vector<std::filesystem::path> reads() const;

  // True when any recorded read resolves to the same file as `path`.
  bool was_read(const std::filesystem::path& path) const;

 private:
  friend void notify_read(const std::filesystem::path& path);
  mutable std::mutex mu_;
  std::vector<std::filesystem::path> reads_;
};

}  // namespace idil::io
