// SPDX-License-Identifier: Apache-2.0
#include "specbridge/fsutil.hpp"

#include "specbridge/diagnostics.hpp"

#include <atomic>
#include <fstream>
#include <sstream>

#include <unistd.h>

namespace specbridge {

std::string readFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResourceError("missing-resource", "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void writeFileAtomic(const std::filesystem::path& path, const std::string& content) {
  static std::atomic<unsigned> counter{0};
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ResourceError("io-error", "cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw ResourceError("io-error", "short write to " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ResourceError("io-error", "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

} // namespace specbridge
