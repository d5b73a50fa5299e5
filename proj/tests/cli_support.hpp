#pragma once

// Helpers for driving the rlmean executable from tests.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

namespace cli {

namespace fs = std::filesystem;

inline std::string binary() { return RLMEAN_CLI_PATH; }

/// Runs `rlmean <args>` with stderr captured to a file and returns the exit
/// status.
inline int run(const std::string &args, std::string *err = nullptr) {
  const fs::path err_file =
      fs::temp_directory_path() /
      ("rlmean_err_" + std::to_string(std::random_device{}()) + ".txt");
  const std::string cmd =
      "'" + binary() + "' " + args + " 2> '" + err_file.string() + "'";
  const int status = std::system(cmd.c_str());
  if (err) {
    std::ifstream f(err_file);
    std::stringstream ss;
    ss << f.rdbuf();
    *err = ss.str();
  }
  fs::remove(err_file);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

inline std::string slurp(const fs::path &path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

inline void spit(const fs::path &path, const std::string &text) {
  std::ofstream(path, std::ios::binary) << text;
}

/// Fresh directory removed on destruction.
class TempDir {
public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() /
            ("rlmean_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir &) = delete;
  TempDir &operator=(const TempDir &) = delete;

  fs::path operator/(const std::string &name) const { return path_ / name; }
  std::string str(const std::string &name) const {
    return (path_ / name).string();
  }

private:
  fs::path path_;
};

} // namespace cli
