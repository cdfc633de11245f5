#pragma once

// Minimal line-oriented "key = value" format with [section] and
// [section argument] headers. '#' and ';' start comments.

#include <istream>
#include <optional>
#include <string>
#include <vector>

#include "harbour/common/error.hpp"

namespace harbour {

struct IniEntry {
  std::string key;
  std::string value;
  int line = 0;
};

struct IniSection {
  std::string name;
  std::string argument;  // e.g. "bow" in [thruster bow]
  int line = 0;
  std::vector<IniEntry> entries;

  const IniEntry* find(const std::string& key) const;
};

class IniDocument {
 public:
  static IniDocument parse(std::istream& in, const std::string& source);
  static IniDocument load(const std::string& path);

  const std::string& source() const { return source_; }
  const std::vector<IniSection>& sections() const { return sections_; }

  /// First section with the given name, or nullptr.
  const IniSection* section(const std::string& name) const;
  std::vector<const IniSection*> sections_named(const std::string& name) const;

  [[noreturn]] void fail(int line, const std::string& what) const;

  double number(const IniSection& s, const std::string& key) const;
  std::optional<double> optional_number(const IniSection& s, const std::string& key) const;
  std::string text(const IniSection& s, const std::string& key) const;
  std::optional<std::string> optional_text(const IniSection& s, const std::string& key) const;
  bool flag(const IniSection& s, const std::string& key, bool fallback) const;
  std::vector<double> numbers(const IniSection& s, const std::string& key) const;

  /// Fails on any key in `s` not listed in `known`.
  void reject_unknown(const IniSection& s, const std::vector<std::string>& known) const;

 private:
  std::string source_;
  std::vector<IniSection> sections_;
};

}  // namespace harbour
