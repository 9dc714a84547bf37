#include "clstream/fetch.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <curl/curl.h>
#include <openssl/evp.h>
#include <zlib.h>

#include "clstream/error.hpp"

namespace cl {

namespace fs = std::filesystem;

std::vector<ManifestEntry> parse_manifest(std::string_view text) {
  std::vector<ManifestEntry> out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    ManifestEntry e;
    std::string checksum, extra;
    if (!(fields >> e.file)) continue;
    if (!(fields >> checksum >> e.url) || (fields >> extra))
      throw FormatError("manifest line " + std::to_string(line_no) + ": expected <file> <algorithm>:<hex> <url>");
    const auto colon = checksum.find(':');
    if (colon == std::string::npos) throw FormatError("manifest line " + std::to_string(line_no) + ": bad checksum");
    e.algorithm = checksum.substr(0, colon);
    e.digest = checksum.substr(colon + 1);
    const std::string where = "manifest line " + std::to_string(line_no) + ": ";
    if (e.algorithm != "sha256" && e.algorithm != "md5")
      throw FormatError(where + "unsupported algorithm '" + e.algorithm + "'");
    const std::size_t hex_len = e.algorithm == "sha256" ? 64 : 32;
    if (e.digest.size() != hex_len) throw FormatError(where + e.algorithm + " digest must have " + std::to_string(hex_len) + " hex digits");
    for (char& c : e.digest) {
      if (!std::isxdigit(static_cast<unsigned char>(c))) throw FormatError(where + "digest is not hex");
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    if (e.file == "." || e.file == ".." || e.file.find_first_of("/\\") != std::string::npos)
      throw FormatError(where + "file must be a plain name, got '" + e.file + "'");
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<ManifestEntry> load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read manifest '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str());
}

std::string hex_digest(const std::string& algorithm, std::string_view bytes) {
  const EVP_MD* md = algorithm == "sha256" ? EVP_sha256() : algorithm == "md5" ? EVP_md5() : nullptr;
  if (!md) throw InvalidArgument("hex_digest: unsupported algorithm '" + algorithm + "'");
  unsigned char out[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), out, &len, md, nullptr) != 1)
    throw Error("hex_digest: digest computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", out[i]);
    hex += buf;
  }
  return hex;
}

std::string gunzip(std::string_view compressed) {
  z_stream zs{};
  if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK) throw Error("gunzip: inflateInit failed");
  zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
  zs.avail_in = static_cast<uInt>(compressed.size());
  std::string out;
  char chunk[1 << 16];
  int rc = Z_OK;
  do {
    zs.next_out = reinterpret_cast<Bytef*>(chunk);
    zs.avail_out = sizeof chunk;
    rc = inflate(&zs, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&zs);
      throw FormatError("gunzip: corrupt gzip stream");
    }
    out.append(chunk, sizeof chunk - zs.avail_out);
  } while (rc != Z_STREAM_END && (zs.avail_in > 0 || zs.avail_out == 0));
  inflateEnd(&zs);
  if (rc != Z_STREAM_END) throw FormatError("gunzip: truncated gzip stream");
  return out;
}

namespace {

std::size_t append_body(char* ptr, std::size_t size, std::size_t n, void* user) {
  static_cast<std::string*>(user)->append(ptr, size * n);
  return size * n;
}

std::string download(const std::string& url) {
  std::unique_ptr<CURL, decltype(&curl_easy_cleanup)> curl(curl_easy_init(), curl_easy_cleanup);
  if (!curl) throw IoError("curl initialisation failed");
  std::string body;
  curl_easy_setopt(curl.get(), CURLOPT_URL, url.c_str());
  curl_easy_setopt(curl.get(), CURLOPT_FOLLOWLOCATION, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_FAILONERROR, 1L);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEFUNCTION, append_body);
  curl_easy_setopt(curl.get(), CURLOPT_WRITEDATA, &body);
  const CURLcode rc = curl_easy_perform(curl.get());
  if (rc != CURLE_OK) throw IoError("download of " + url + " failed: " + curl_easy_strerror(rc));
  return body;
}

}  // namespace

void fetch_files(const std::vector<ManifestEntry>& entries, const fs::path& dir, std::ostream& log) {
  fs::create_directories(dir);
  curl_global_init(CURL_GLOBAL_DEFAULT);
  for (const ManifestEntry& e : entries) {
    const fs::path target = dir / e.file;
    if (fs::exists(target)) {
      log << e.file << ": present, skipped\n";
      continue;
    }
    log << e.file << ": downloading " << e.url << "\n";
    std::string bytes = download(e.url);
    const std::string got = hex_digest(e.algorithm, bytes);
    if (got != e.digest)
      throw FormatError(e.file + ": " + e.algorithm + " mismatch (expected " + e.digest + ", got " + got + ")");
    if (e.url.size() > 3 && e.url.compare(e.url.size() - 3, 3, ".gz") == 0) bytes = gunzip(bytes);
    fs::path tmp = target;
    tmp += ".part";
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
      if (!out) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, target);
    log << e.file << ": verified, " << bytes.size() << " bytes\n";
  }
  curl_global_cleanup();
}

}  // namespace cl
