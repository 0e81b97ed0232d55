#pragma once

#include "ifgsim/io/hash.hpp"
#include "ifgsim/io/ifg1.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace ifgsim::io {

struct ManifestEntry {
  std::string file;      ///< relative to the manifest's directory
  double detuning = 0.0; ///< Hz
  double defocus = 0.0;  ///< object space, m
  std::string sha256;
};

/// Plain-text run manifest:
///   # comment
///   key = value                                    (run parameters)
///   file <name> <detuning_hz> <defocus_m> <sha256> (one per image)
struct Manifest {
  std::vector<std::pair<std::string, std::string>> parameters;
  std::vector<ManifestEntry> entries;
};

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_manifest(const std::filesystem::path& path, const Manifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "# ifgsim manifest\n";
  for (const auto& [k, v] : m.parameters) out << k << " = " << v << '\n';
  for (const auto& e : m.entries)
    out << "file " << e.file << ' ' << format_double(e.detuning) << ' ' << format_double(e.defocus) << ' '
        << e.sha256 << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

inline Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  Manifest m;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty() || line[0] == '#') continue;
    if (line.rfind("file ", 0) == 0) {
      std::istringstream ss(line.substr(5));
      ManifestEntry e;
      if (!(ss >> e.file >> e.detuning >> e.defocus >> e.sha256))
        throw IoError(path.string() + ":" + std::to_string(number) + ": malformed file entry");
      m.entries.push_back(std::move(e));
      continue;
    }
    const auto eq = line.find(" = ");
    if (eq == std::string::npos)
      throw IoError(path.string() + ":" + std::to_string(number) + ": expected 'key = value'");
    m.parameters.emplace_back(line.substr(0, eq), line.substr(eq + 3));
  }
  return m;
}

/// Loads every image listed in a manifest, rejecting files whose content
/// hash differs from the recorded one.
inline std::vector<Interferogram> load_manifest_images(const std::filesystem::path& path) {
  const Manifest m = read_manifest(path);
  std::vector<Interferogram> images;
  for (const auto& e : m.entries) {
    const auto file = path.parent_path() / e.file;
    const auto bytes = read_bytes(file);
    if (sha256_hex(bytes) != e.sha256) throw IoError(file.string() + ": content hash does not match manifest");
    images.push_back(decode_ifg1(bytes, file.string()));
  }
  return images;
}

/// Expands manifest paths (*.txt) into their images; other paths are read as
/// IFG1 files.
inline std::vector<Interferogram> load_images(const std::vector<std::filesystem::path>& paths) {
  std::vector<Interferogram> out;
  for (const auto& p : paths) {
    if (p.extension() == ".txt") {
      auto more = load_manifest_images(p);
      out.insert(out.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
    } else {
      out.push_back(read_ifg1(p));
    }
  }
  return out;
}

} // namespace ifgsim::io
