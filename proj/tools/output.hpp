#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <system_error>

#include <json.hpp>

#include "rlab/errors.hpp"

namespace rlab::cli {

enum class Format { csv, json, both };

struct OutputSink {
  std::filesystem::path dir = ".";
  Format format = Format::both;

  bool csv() const { return format != Format::json; }
  bool json() const { return format != Format::csv; }

  std::ofstream open(const std::string& name) const {
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) throw ValidationError("cannot write '" + (dir / name).string() + "'");
    return out;
  }

  void write_json(const std::string& name, const nlohmann::json& j) const {
    if (!json()) return;
    auto out = open(name);
    out << j.dump(2) << '\n';
  }
};

/// Shortest round-trip decimal, independent of the C locale.
inline std::string num(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

}  // namespace rlab::cli
