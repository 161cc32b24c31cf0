#pragma once

#include <filesystem>
#include <random>
#include <string>

namespace rsa::test {

inline std::string repo_path(const std::string& rel) {
  return std::string(RSA_REPO_DIR) + "/" + rel;
}

/// Fresh directory under the build tree; wiped on construction so reruns are
/// clean.
class TempDir {
 public:
  explicit TempDir(const std::string& name) {
    path_ = std::filesystem::temp_directory_path() / ("rsa_test_" + name);
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }

  std::string str() const { return path_.string(); }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace rsa::test
