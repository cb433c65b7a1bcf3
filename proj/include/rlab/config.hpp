#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace rlab {

/// Flat `section.key = value` configuration. Every key has a declared type
/// and default; unknown keys and unparsable values raise ValidationError as
/// soon as they are set, so a loaded config is always well-typed.
///
/// Value syntax: reals and counts as usual, booleans true/false, lists as
/// comma-separated reals, choices as one of the listed words.
class RunConfig {
 public:
  enum class Kind { real, count, boolean, text, real_list, choice };

  struct Entry {
    Kind kind;
    std::string default_value;
    std::vector<std::string> choices;  // Kind::choice only
    std::string help;
  };

  RunConfig();

  /// Reads `key = value` lines; '#' starts a comment, blank lines are skipped.
  void load(std::istream& in, const std::string& origin = "config");
  void load_file(const std::string& path);
  /// Parses "key=value" as given on the command line.
  void set_assignment(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  bool boolean(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  std::vector<double> real_list(const std::string& key) const;

  /// Resolved values of one section (or all when empty), typed.
  nlohmann::json to_json(const std::string& section = "") const;

  static const std::map<std::string, Entry>& schema();

 private:
  const std::string& raw(const std::string& key, Kind kind) const;
  std::map<std::string, std::string> values_;
};

}  // namespace rlab
