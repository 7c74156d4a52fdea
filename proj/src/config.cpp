#include "xrec/config.hpp"

#include <sstream>

#include "xrec/error.hpp"
#include "xrec/text.hpp"

namespace xrec {

Config Config::parse(const std::string& contents, const std::string& source) {
  Config config;
  std::istringstream in(contents);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::is_blank_or_comment(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(source, line_no, "expected key=value");
    const auto key = std::string(text::trim(std::string_view(line).substr(0, eq)));
    if (key.empty()) throw ParseError(source, line_no, "empty key");
    config.values_[key] = std::string(text::trim(std::string_view(line).substr(eq + 1)));
  }
  return config;
}

Config Config::load(const std::filesystem::path& path) { return parse(text::read_file(path), path.string()); }

void Config::set(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ValidationError("override '" + assignment + "' is not of the form key=value");
  }
  values_[std::string(text::trim(std::string_view(assignment).substr(0, eq)))] =
      std::string(text::trim(std::string_view(assignment).substr(eq + 1)));
}

std::string Config::get(const std::string& key, const std::string& fallback) const {
  read_[key] = true;
  const auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double Config::get_double(const std::string& key, double fallback) const {
  read_[key] = true;
  if (!has(key)) return fallback;
  const auto v = get(key, "");
  try {
    return text::parse_double(text::trim(v), "", 0);
  } catch (const ParseError&) {
    throw ValidationError("config key " + key + ": expected a number, got '" + v + "'");
  }
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
  read_[key] = true;
  if (!has(key)) return fallback;
  const auto v = get(key, "");
  try {
    return text::parse_int(text::trim(v), "", 0);
  } catch (const ParseError&) {
    throw ValidationError("config key " + key + ": expected an integer, got '" + v + "'");
  }
}

std::size_t Config::get_size(const std::string& key, std::size_t fallback) const {
  const auto v = get_int(key, static_cast<std::int64_t>(fallback));
  if (v < 0) throw ValidationError("config key " + key + " must be nonnegative");
  return static_cast<std::size_t>(v);
}

bool Config::get_bool(const std::string& key, bool fallback) const {
  read_[key] = true;
  if (!has(key)) return fallback;
  const auto v = get(key, "");
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config key " + key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> Config::get_list(const std::string& key,
                                          const std::vector<std::string>& fallback) const {
  read_[key] = true;
  if (!has(key)) return fallback;
  std::vector<std::string> out;
  for (auto item : text::split(get(key, ""), ',')) {
    item = text::trim(item);
    if (!item.empty()) out.emplace_back(item);
  }
  return out;
}

std::vector<std::string> Config::unread_keys() const {
  std::vector<std::string> out;
  for (const auto& [key, value] : values_) {
    if (!read_.count(key)) out.push_back(key);
  }
  return out;
}

}  // namespace xrec
