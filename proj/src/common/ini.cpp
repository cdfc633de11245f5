#include "harbour/common/ini.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

namespace harbour {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string strip_comment(const std::string& line) {
  const auto pos = line.find_first_of("#;");
  return pos == std::string::npos ? line : line.substr(0, pos);
}

std::optional<double> parse_double(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

}  // namespace

const IniEntry* IniSection::find(const std::string& key) const {
  for (const auto& e : entries) {
    if (e.key == key) return &e;
  }
  return nullptr;
}

IniDocument IniDocument::parse(std::istream& in, const std::string& source) {
  IniDocument doc;
  doc.source_ = source;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = trim(strip_comment(raw));
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') doc.fail(line, "unterminated section header");
      const std::string inner = trim(std::string_view(text).substr(1, text.size() - 2));
      if (inner.empty()) doc.fail(line, "empty section name");
      IniSection s;
      const auto sp = inner.find_first_of(" \t");
      s.name = inner.substr(0, sp);
      if (sp != std::string::npos) s.argument = trim(std::string_view(inner).substr(sp));
      s.line = line;
      doc.sections_.push_back(std::move(s));
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) doc.fail(line, "expected 'key = value'");
    if (doc.sections_.empty()) doc.fail(line, "entry before any [section]");
    IniEntry e{trim(std::string_view(text).substr(0, eq)), trim(std::string_view(text).substr(eq + 1)),
               line};
    if (e.key.empty()) doc.fail(line, "empty key");
    auto& sec = doc.sections_.back();
    if (sec.find(e.key) != nullptr) doc.fail(line, "duplicate key '" + e.key + "'");
    sec.entries.push_back(std::move(e));
  }
  return doc;
}

IniDocument IniDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return parse(in, path);
}

const IniSection* IniDocument::section(const std::string& name) const {
  for (const auto& s : sections_) {
    if (s.name == name) return &s;
  }
  return nullptr;
}

std::vector<const IniSection*> IniDocument::sections_named(const std::string& name) const {
  std::vector<const IniSection*> out;
  for (const auto& s : sections_) {
    if (s.name == name) out.push_back(&s);
  }
  return out;
}

void IniDocument::fail(int line, const std::string& what) const {
  throw ParseError(source_, line, what);
}

double IniDocument::number(const IniSection& s, const std::string& key) const {
  const auto v = optional_number(s, key);
  if (!v) fail(s.line, "[" + s.name + "] missing required key '" + key + "'");
  return *v;
}

std::optional<double> IniDocument::optional_number(const IniSection& s,
                                                   const std::string& key) const {
  const IniEntry* e = s.find(key);
  if (e == nullptr) return std::nullopt;
  const auto v = parse_double(e->value);
  if (!v) fail(e->line, "'" + key + "' is not a number: '" + e->value + "'");
  return v;
}

std::string IniDocument::text(const IniSection& s, const std::string& key) const {
  const auto v = optional_text(s, key);
  if (!v) fail(s.line, "[" + s.name + "] missing required key '" + key + "'");
  return *v;
}

std::optional<std::string> IniDocument::optional_text(const IniSection& s,
                                                      const std::string& key) const {
  const IniEntry* e = s.find(key);
  if (e == nullptr) return std::nullopt;
  return e->value;
}

bool IniDocument::flag(const IniSection& s, const std::string& key, bool fallback) const {
  const IniEntry* e = s.find(key);
  if (e == nullptr) return fallback;
  if (e->value == "true" || e->value == "yes" || e->value == "on" || e->value == "1") return true;
  if (e->value == "false" || e->value == "no" || e->value == "off" || e->value == "0") return false;
  fail(e->line, "'" + key + "' is not a boolean: '" + e->value + "'");
}

std::vector<double> IniDocument::numbers(const IniSection& s, const std::string& key) const {
  const IniEntry* e = s.find(key);
  if (e == nullptr) fail(s.line, "[" + s.name + "] missing required key '" + key + "'");
  std::vector<double> out;
  std::stringstream ss(e->value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto v = parse_double(trim(item));
    if (!v) fail(e->line, "'" + key + "' has a non-numeric element: '" + trim(item) + "'");
    out.push_back(*v);
  }
  return out;
}

void IniDocument::reject_unknown(const IniSection& s, const std::vector<std::string>& known) const {
  for (const auto& e : s.entries) {
    if (std::find(known.begin(), known.end(), e.key) == known.end()) {
      fail(e.line, "unknown key '" + e.key + "' in [" + s.name + "]");
    }
  }
}

}  // namespace harbour
