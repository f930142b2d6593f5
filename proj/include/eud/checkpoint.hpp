#pragma once

#include "eud/config.hpp"
#include "eud/model.hpp"

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace eud
{
/// On-disk layout revision; documented in docs/checkpoint-format.md.
inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

struct Checkpoint
{
  Model model;
  TrainConfig train;
  int epoch = 0;
  std::vector<double> dev_history;
};

class CheckpointError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

std::string serialize_checkpoint(const Checkpoint & checkpoint);
Checkpoint deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const Checkpoint & checkpoint, const std::string & path);
Checkpoint load_checkpoint(const std::string & path);

}  // namespace eud
