#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nonprob/errors.hpp"

namespace nonprob {

inline constexpr const char* kVersion = "0.1.0";

// FNV-1a 64-bit over file bytes, for input provenance.
inline std::string file_digest(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("file-error", "cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

/// Flat ordered key/value report; rendered as aligned text and as a
/// machine-readable key=value sidecar.
struct ReportDocument {
  std::vector<std::pair<std::string, std::string>> fields;

  void add(const std::string& key, const std::string& value) {
    fields.emplace_back(key, value);
  }
  void add(const std::string& key, double value) {
    std::ostringstream os;
    os.precision(12);
    os << value;
    fields.emplace_back(key, os.str());
  }
  void add(const std::string& key, std::size_t value) {
    fields.emplace_back(key, std::to_string(value));
  }

  std::string render_text() const {
    std::size_t width = 0;
    for (const auto& [k, v] : fields) width = std::max(width, k.size());
    std::ostringstream os;
    os << "nonprob estimate report\n";
    for (const auto& [k, v] : fields) {
      os << "  " << k;
      os << std::string(width - k.size() + 2, ' ') << v << '\n';
    }
    return os.str();
  }

  std::string render_kv() const {
    std::ostringstream os;
    for (const auto& [k, v] : fields) os << k << '=' << v << '\n';
    return os.str();
  }
};

}  // namespace nonprob
