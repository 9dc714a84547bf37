#include <doctest.h>

#include <filesystem>

#include "clstream/checkpoint.hpp"
#include "clstream/error.hpp"
#include "clstream/serialize.hpp"
#include "support.hpp"

using namespace cl;

namespace {

Checkpoint sample_checkpoint() {
  Checkpoint c;
  c.config_digest = 0x1234abcd5678ef90ULL;
  c.next_experience = 2;
  c.n_experiences = 5;
  c.strategy_state = std::string("\0binary\xff payload", 16);
  c.matrix.record(0, 0, 0.9);
  c.matrix.record(1, 0, 0.5);
  c.matrix.record(1, 1, 0.875);
  c.logger_offsets = {{"metrics.csv", 1234}, {"metrics.jsonl", 5678}};
  return c;
}

void check_same(const Checkpoint& a, const Checkpoint& b) {
  CHECK(a.version == b.version);
  CHECK(a.config_digest == b.config_digest);
  CHECK(a.next_experience == b.next_experience);
  CHECK(a.n_experiences == b.n_experiences);
  CHECK(a.strategy_state == b.strategy_state);
  CHECK(a.matrix == b.matrix);
  REQUIRE(a.logger_offsets.size() == b.logger_offsets.size());
  for (std::size_t i = 0; i < a.logger_offsets.size(); ++i) {
    CHECK(a.logger_offsets[i].file == b.logger_offsets[i].file);
    CHECK(a.logger_offsets[i].bytes == b.logger_offsets[i].bytes);
  }
}

// Rewrites the trailing checksum so that only the targeted field is wrong.
std::string reseal(std::string bytes) {
  bytes.resize(bytes.size() - 8);
  const std::uint64_t sum = fnv1a64(bytes);
  for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<char>((sum >> (8 * i)) & 0xff));
  return bytes;
}

}  // namespace

TEST_CASE("checkpoint round-trips in memory and on disk") {
  const Checkpoint c = sample_checkpoint();
  const std::string bytes = encode_checkpoint(c);
  CHECK(bytes.substr(0, 6) == "CLCKPT");
  check_same(decode_checkpoint(bytes), c);
  CHECK(encode_checkpoint(decode_checkpoint(bytes)) == bytes);

  const auto dir = test::temp_dir("ckpt_roundtrip");
  save_checkpoint(dir / "a.clckpt", c);
  check_same(load_checkpoint(dir / "a.clckpt"), c);
  CHECK_FALSE(std::filesystem::exists(dir / "a.clckpt.tmp"));

  // Saving over an existing file replaces it whole.
  Checkpoint later = c;
  later.next_experience = 3;
  save_checkpoint(dir / "a.clckpt", later);
  CHECK(load_checkpoint(dir / "a.clckpt").next_experience == 3);

  CHECK_THROWS_AS(load_checkpoint(dir / "missing.clckpt"), IoError);
}

TEST_CASE("corrupt checkpoints are refused") {
  const std::string good = encode_checkpoint(sample_checkpoint());

  std::string magic = good;
  magic[0] = 'X';
  CHECK_THROWS_AS(decode_checkpoint(magic), FormatError);
  CHECK_THROWS_AS(decode_checkpoint(reseal(magic)), FormatError);

  for (std::size_t cut : {std::size_t{0}, std::size_t{3}, std::size_t{10}, good.size() / 2, good.size() - 1})
    CHECK_THROWS_AS(decode_checkpoint(good.substr(0, cut)), FormatError);

  for (std::size_t i = 6; i < good.size(); i += 7) {
    std::string flipped = good;
    flipped[i] = static_cast<char>(flipped[i] ^ 0x40);
    CHECK_THROWS_AS(decode_checkpoint(flipped), Error);
  }

  CHECK_THROWS_AS(decode_checkpoint(good + "extra"), FormatError);
}

TEST_CASE("unknown versions are refused") {
  std::string bytes = encode_checkpoint(sample_checkpoint());
  bytes[6] = 2;  // little-endian u32 after the magic
  CHECK_THROWS_AS(decode_checkpoint(reseal(bytes)), VersionError);
  bytes[6] = 0;
  CHECK_THROWS_AS(decode_checkpoint(reseal(bytes)), VersionError);
}
