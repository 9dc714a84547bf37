#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace cl {

struct ManifestEntry {
  std::string file;       // name written into the target directory
  std::string algorithm;  // "sha256" or "md5", applied to the downloaded bytes
  std::string digest;     // lowercase hex
  std::string url;        // a ".gz" suffix means the download is gunzipped
};

/// One entry per line: `<file> <algorithm>:<hex> <url>`; `#` starts a comment.
std::vector<ManifestEntry> parse_manifest(std::string_view text);
std::vector<ManifestEntry> load_manifest(const std::filesystem::path& path);

/// Lowercase hex digest of `bytes` ("sha256" or "md5").
std::string hex_digest(const std::string& algorithm, std::string_view bytes);

std::string gunzip(std::string_view compressed);

/// Downloads every entry, verifies its checksum before anything is written,
/// and stores the (decompressed) file. Existing files are left alone.
/// Throws IoError on network failure and FormatError on checksum mismatch.
void fetch_files(const std::vector<ManifestEntry>& entries, const std::filesystem::path& dir, std::ostream& log);

}  // namespace cl
