#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "clstream/metrics.hpp"

namespace cl {

inline constexpr char kCheckpointMagic[] = "CLCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct LoggerOffset {
  std::string file;  // name relative to the output directory
  std::uint64_t bytes = 0;
};

struct Checkpoint {
  std::uint32_t version = kCheckpointVersion;
  std::uint64_t config_digest = 0;
  std::uint64_t next_experience = 0;
  std::uint64_t n_experiences = 0;
  std::string strategy_state;  // Strategy::save payload
  AccuracyMatrix matrix;       // copy for inspection
  std::vector<LoggerOffset> logger_offsets;
};

/// Layout: magic, u32 version, then one length-prefixed section per
/// component, then a 64-bit FNV-1a of everything before it. The file is
/// written to a sibling temp path and renamed into place.
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

/// FormatError on bad magic, truncation or checksum failure; VersionError
/// for any version other than kCheckpointVersion.
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::string_view bytes);

}  // namespace cl
