#include <doctest.h>

#include <zlib.h>

#include <sstream>

#include "clstream/error.hpp"
#include "clstream/fetch.hpp"
#include "support.hpp"

using namespace cl;

namespace {

std::string gzip(const std::string& plain) {
  z_stream zs{};
  REQUIRE(deflateInit2(&zs, Z_BEST_COMPRESSION, Z_DEFLATED, 16 + MAX_WBITS, 8, Z_DEFAULT_STRATEGY) == Z_OK);
  std::string out(deflateBound(&zs, plain.size()) + 32, '\0');
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(plain.data()));
  zs.avail_in = static_cast<uInt>(plain.size());
  zs.next_out = reinterpret_cast<Bytef*>(out.data());
  zs.avail_out = static_cast<uInt>(out.size());
  REQUIRE(deflate(&zs, Z_FINISH) == Z_STREAM_END);
  out.resize(zs.total_out);
  deflateEnd(&zs);
  return out;
}

std::string file_url(const std::filesystem::path& p) { return "file://" + p.string(); }

}  // namespace

TEST_CASE("digests match published test vectors") {
  CHECK(hex_digest("md5", "") == "d41d8cd98f00b204e9800998ecf8427e");
  CHECK(hex_digest("md5", "abc") == "900150983cd24fb0d6963f7d28e17f72");
  CHECK(hex_digest("sha256", "abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hex_digest("sha256", "") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK_THROWS_AS(hex_digest("crc32", "abc"), InvalidArgument);
}

TEST_CASE("gunzip inverts gzip") {
  Rng rng(5);
  for (std::size_t n : {std::size_t{0}, std::size_t{1}, std::size_t{1000}, std::size_t{200000}}) {
    std::string plain(n, '\0');
    for (char& c : plain) c = static_cast<char>(rng.uniform_index(7));
    CHECK(gunzip(gzip(plain)) == plain);
  }
  CHECK_THROWS_AS(gunzip("definitely not gzip"), FormatError);
  const std::string whole = gzip(std::string(5000, 'x'));
  CHECK_THROWS_AS(gunzip(whole.substr(0, whole.size() / 2)), FormatError);
}

TEST_CASE("manifest parsing") {
  const auto entries = parse_manifest(
      "# comment\n\n"
      "a.bin sha256:BA7816BF8F01CFEA414140DE5DAE2223B00361A396177A9CB410FF61F20015AD https://example.org/a.bin\n"
      "b-idx md5:900150983cd24fb0d6963f7d28e17f72 https://example.org/b-idx.gz  # trailing\n");
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].file == "a.bin");
  CHECK(entries[0].algorithm == "sha256");
  CHECK(entries[0].digest == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(entries[1].url == "https://example.org/b-idx.gz");

  CHECK_THROWS_AS(parse_manifest("a.bin sha256:00 https://x\n"), FormatError);
  CHECK_THROWS_AS(parse_manifest("a.bin crc:00 https://x\n"), FormatError);
  CHECK_THROWS_AS(parse_manifest("a.bin\n"), FormatError);
  CHECK_THROWS_AS(parse_manifest("../up md5:900150983cd24fb0d6963f7d28e17f72 https://x\n"), FormatError);
}

TEST_CASE("the shipped manifest lists the four MNIST files") {
  const auto entries = load_manifest(CLSTREAM_DEFAULT_MANIFEST);
  REQUIRE(entries.size() == 4);
  for (const auto& e : entries) {
    CHECK(e.url.rfind("https://", 0) == 0);
    CHECK(e.url.size() > 3);
    CHECK(e.url.substr(e.url.size() - 3) == ".gz");
  }
}

TEST_CASE("fetch verifies, decompresses and skips existing files") {
  const auto src = test::temp_dir("fetch_src");
  const auto dst = test::temp_dir("fetch_dst");
  const std::string plain = "IDX-like payload\n";
  const std::string packed = gzip(plain);
  test::write_file(src / "data.gz", packed);
  test::write_file(src / "raw.bin", "raw bytes");

  std::vector<ManifestEntry> entries{
      {"data", "md5", hex_digest("md5", packed), file_url(src / "data.gz")},
      {"raw", "sha256", hex_digest("sha256", "raw bytes"), file_url(src / "raw.bin")},
  };
  std::ostringstream log;
  fetch_files(entries, dst, log);
  CHECK(test::read_file(dst / "data") == plain);
  CHECK(test::read_file(dst / "raw") == "raw bytes");

  // A second call leaves existing files alone even if the source changed.
  test::write_file(src / "raw.bin", "tampered");
  fetch_files(entries, dst, log);
  CHECK(test::read_file(dst / "raw") == "raw bytes");

  const auto fresh = test::temp_dir("fetch_bad");
  CHECK_THROWS_AS(fetch_files({entries[1]}, fresh, log), FormatError);
  CHECK_FALSE(std::filesystem::exists(fresh / "raw"));

  ManifestEntry gone{"gone", "md5", hex_digest("md5", ""), file_url(src / "missing.gz")};
  CHECK_THROWS_AS(fetch_files({gone}, fresh, log), IoError);
  CHECK_FALSE(std::filesystem::exists(fresh / "gone"));
}
