#include "clstream/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "clstream/error.hpp"
#include "clstream/serialize.hpp"

namespace cl {

namespace {

constexpr std::size_t kMagicLen = sizeof(kCheckpointMagic) - 1;

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  BinaryWriter w;
  w.raw(std::string_view(kCheckpointMagic, kMagicLen));
  w.u32(ckpt.version);

  BinaryWriter meta;
  meta.u64(ckpt.config_digest);
  meta.u64(ckpt.next_experience);
  meta.u64(ckpt.n_experiences);

  BinaryWriter matrix;
  matrix.u64(ckpt.matrix.entries().size());
  for (const auto& [key, acc] : ckpt.matrix.entries()) {
    matrix.u64(key.first);
    matrix.u64(key.second);
    matrix.f64(acc);
  }

  BinaryWriter loggers;
  loggers.u64(ckpt.logger_offsets.size());
  for (const LoggerOffset& o : ckpt.logger_offsets) {
    loggers.str(o.file);
    loggers.u64(o.bytes);
  }

  const std::pair<const char*, const std::string*> sections[] = {
      {"meta", &meta.bytes()},
      {"strategy", &ckpt.strategy_state},
      {"matrix", &matrix.bytes()},
      {"loggers", &loggers.bytes()},
  };
  w.u32(static_cast<std::uint32_t>(std::size(sections)));
  for (const auto& [name, payload] : sections) {
    w.str(name);
    w.str(*payload);
  }
  const std::uint64_t sum = fnv1a64(w.bytes());
  w.u64(sum);
  return w.take();
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  if (bytes.size() < kMagicLen || bytes.substr(0, kMagicLen) != std::string_view(kCheckpointMagic, kMagicLen))
    throw FormatError("checkpoint: bad magic (not a checkpoint file)");
  BinaryReader head(bytes.substr(kMagicLen));
  Checkpoint c;
  c.version = head.u32();
  if (c.version != kCheckpointVersion)
    throw VersionError("checkpoint: unsupported format version " + std::to_string(c.version) + " (this build reads " +
                       std::to_string(kCheckpointVersion) + ")");
  if (bytes.size() < kMagicLen + 4 + 8) throw FormatError("checkpoint: truncated");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);
  BinaryReader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a64(body)) throw FormatError("checkpoint: checksum mismatch (corrupt or truncated)");

  BinaryReader r(body.substr(kMagicLen + 4));
  std::map<std::string, std::string> sections;
  for (std::uint32_t n = r.u32(); n > 0; --n) {
    std::string name = r.str();
    if (!sections.emplace(name, r.str()).second) throw FormatError("checkpoint: duplicate section '" + name + "'");
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes after sections");
  for (const char* required : {"meta", "strategy", "matrix", "loggers"})
    if (!sections.count(required)) throw FormatError(std::string("checkpoint: missing section '") + required + "'");
  if (sections.size() != 4) throw FormatError("checkpoint: unexpected section");

  BinaryReader meta(sections["meta"]);
  c.config_digest = meta.u64();
  c.next_experience = meta.u64();
  c.n_experiences = meta.u64();

  c.strategy_state = std::move(sections["strategy"]);

  BinaryReader matrix(sections["matrix"]);
  for (std::uint64_t n = matrix.u64(); n > 0; --n) {
    const std::size_t k = matrix.u64();
    const std::size_t i = matrix.u64();
    c.matrix.record(k, i, matrix.f64());
  }

  BinaryReader loggers(sections["loggers"]);
  for (std::uint64_t n = loggers.u64(); n > 0; --n) {
    LoggerOffset o;
    o.file = loggers.str();
    o.bytes = loggers.u64();
    c.logger_offsets.push_back(std::move(o));
  }
  if (!meta.at_end() || !matrix.at_end() || !loggers.at_end()) throw FormatError("checkpoint: malformed section");
  return c;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string bytes = encode_checkpoint(ckpt);
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint '" + tmp.string() + "'");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("write failed for checkpoint '" + tmp.string() + "'");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at '" + path.string() + "': " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace cl
