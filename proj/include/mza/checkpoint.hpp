#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mza/optimizer.hpp"
#include "mza/tensor.hpp"

namespace mza {

// Versioned binary checkpoint. Byte layout (all integers and reals
// little-endian) is documented in docs/checkpoint_format.md.
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint64_t config_digest = 0;
  std::int64_t training_step = 0;
  ParameterSet params;
  AdamState optimizer;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string encode_checkpoint(const Checkpoint& checkpoint);
Checkpoint decode_checkpoint(std::string_view bytes);

// Writes to a sibling temp file and renames, so readers never observe a
// partial checkpoint.
void save_checkpoint(const std::filesystem::path& path,
                     const Checkpoint& checkpoint);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace mza
