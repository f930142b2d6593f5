#pragma once

#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace eud
{
inline constexpr std::string_view kToolkitVersion = "0.1.0";

enum ExitCode : int
{
  kExitOk = 0,
  kExitRuntime = 1,
  kExitConfig = 2,
  kExitAlignment = 3,
};

/// Ordered key=value record written beside each output as `<output>.manifest`.
class RunManifest
{
public:
  void set(std::string key, std::string value);
  void set(std::string key, long long value);
  void set_real(std::string key, double value);
  std::string text() const;
  const std::vector<std::pair<std::string, std::string>> & entries() const { return entries_; }

private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

std::string manifest_path(const std::string & output);

/// Checksum of a file's bytes as 16 hex digits.
std::string file_checksum(const std::string & path);

/// Entry point of the eudparse tool; returns the process exit code.
int run_cli(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

}  // namespace eud
