#include "terrain/manifest.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace terrain {

namespace fs = std::filesystem;

std::string Manifest::resolve(const ManifestEntry& e) const {
  fs::path p(e.path);
  if (p.is_absolute() || base_dir.empty()) return e.path;
  return (fs::path(base_dir) / p).string();
}

std::vector<ManifestEntry> Manifest::split(const std::string& name) const {
  std::vector<ManifestEntry> out;
  for (const auto& e : entries)
    if (e.split == name) out.push_back(e);
  return out;
}

std::vector<std::string> Manifest::label_set() const {
  std::set<std::string> s;
  for (const auto& e : entries) s.insert(e.label);
  return {s.begin(), s.end()};
}

void validate_manifest(const Manifest& m) {
  if (m.entries.empty()) throw std::invalid_argument("manifest is empty");

  std::set<std::string> paths;
  std::set<std::string> train_locs, val_locs;
  for (const auto& e : m.entries) {
    if (e.path.empty() || e.label.empty() || e.location.empty())
      throw std::invalid_argument("manifest row with empty field");
    if (e.split != "train" && e.split != "val" && e.split != "test")
      throw std::invalid_argument("unknown split '" + e.split + "' in manifest");
    if (!paths.insert(e.path).second)
      throw std::invalid_argument("path appears more than once in manifest: " + e.path);
    if (e.split == "train") train_locs.insert(e.location);
    if (e.split == "val") val_locs.insert(e.location);
  }
  for (const auto& loc : train_locs)
    if (val_locs.count(loc))
      throw std::invalid_argument("location '" + loc + "' leaks between train and val splits");
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);

  Manifest m;
  m.base_dir = fs::path(path).parent_path().string();

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty manifest file: " + path);
  // tolerate trailing \r from foreign editors
  auto strip = [](std::string& s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
  };
  strip(line);
  if (line != "path,label,split,location")
    throw std::runtime_error("manifest header must be 'path,label,split,location', got '" + line +
                             "'");

  while (std::getline(in, line)) {
    strip(line);
    if (line.empty()) continue;
    std::stringstream ss(line);
    ManifestEntry e;
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 4)
      throw std::runtime_error("manifest row with " + std::to_string(fields.size()) +
                               " fields (want 4): " + line);
    e.path = fields[0];
    e.label = fields[1];
    e.split = fields[2];
    e.location = fields[3];
    m.entries.push_back(std::move(e));
  }
  validate_manifest(m);
  return m;
}

void save_manifest(const std::string& path, const Manifest& m) {
  validate_manifest(m);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << "path,label,split,location\n";
  for (const auto& e : m.entries)
    out << e.path << ',' << e.label << ',' << e.split << ',' << e.location << '\n';
}

}  // namespace terrain
