#include "manifest.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <iomanip>
#include <memory>
#include <sstream>

#include "exemplar/error.hpp"

#ifndef EXEMPLAR_VERSION
#define EXEMPLAR_VERSION "0.0.0"
#endif

namespace exemplar::cli {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("SHA-256 init failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md, &len);
    std::ostringstream os;
    for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return os.str();
  }

 private:
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx_;
};

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Sha256 h;
  h.update(bytes.data(), bytes.size());
  return h.hex();
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot read " + path.string());
  Sha256 h;
  char buf[1 << 16];
  while (is) {
    is.read(buf, sizeof buf);
    h.update(buf, static_cast<std::size_t>(is.gcount()));
  }
  return h.hex();
}

std::filesystem::path Manifest::path_for(const std::filesystem::path& primary_output) {
  auto p = primary_output;
  p += ".manifest.json";
  return p;
}

nlohmann::json Manifest::to_json() const {
  nlohmann::json j;
  j["stage"] = stage;
  j["version"] = EXEMPLAR_VERSION;
  j["seed"] = seed;
  j["config_hash"] = sha256_hex(config_text);
  nlohmann::json cfg = nlohmann::json::object();
  std::istringstream lines(config_text);
  for (std::string line; std::getline(lines, line);) {
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg[line.substr(0, eq)] = line.substr(eq + 1);
  }
  j["config"] = cfg;
  auto files = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& p : paths)
      if (std::filesystem::is_regular_file(p)) arr.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return arr;
  };
  j["inputs"] = files(inputs);
  j["artifacts"] = files(artifacts);
  j["metrics"] = metrics;
  return j;
}

void Manifest::write(const std::filesystem::path& primary_output) const {
  std::ofstream os(path_for(primary_output));
  if (!os) throw FormatError("cannot write manifest for " + primary_output.string());
  os << to_json().dump(2) << '\n';
}

OutputGuard::~OutputGuard() {
  if (committed_) return;
  for (const auto& p : paths_) {
    std::error_code ec;
    std::filesystem::remove(p, ec);
  }
}

const std::filesystem::path& OutputGuard::add(std::filesystem::path p) {
  paths_.push_back(std::move(p));
  return paths_.back();
}

}  // namespace exemplar::cli
