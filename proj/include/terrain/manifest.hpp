#pragma once

#include <string>
#include <vector>

namespace terrain {

struct ManifestEntry {
  std::string path;  // as written in the file; resolve against base_dir
  std::string label;
  std::string split;  // train | val | test
  std::string location;
};

/// Dataset index: one row per recording. Relative paths are interpreted
/// against the directory containing the manifest file.
struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string base_dir;

  std::string resolve(const ManifestEntry& e) const;
  std::vector<ManifestEntry> split(const std::string& name) const;
  /// Sorted unique labels — the canonical class-index order.
  std::vector<std::string> label_set() const;
};

/// Rejects duplicate paths, unknown split names, and location leakage
/// (train and val sharing a location tag).
void validate_manifest(const Manifest& m);

/// CSV with header `path,label,split,location`.
Manifest load_manifest(const std::string& path);
void save_manifest(const std::string& path, const Manifest& m);

}  // namespace terrain
