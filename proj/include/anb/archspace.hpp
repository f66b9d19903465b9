#pragma once

#include <compare>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace anb::arch {

using Rng = std::mt19937_64;

struct BlockSpec {
  int expansion = 1;
  int kernel = 3;
  int layers = 1;
  bool se = false;

  auto operator<=>(const BlockSpec &) const = default;
};

struct Architecture {
  std::vector<BlockSpec> blocks;

  auto operator<=>(const Architecture &) const = default;
};

// Channel width and stride of one stage; only the costing model reads these.
struct StageConfig {
  int out_channels = 0;
  int stride = 1;
};

// One searchable decision inside a block.
enum class Field { expansion = 0, kernel = 1, layers = 2, se = 3 };
inline constexpr int kFieldsPerBlock = 4;

struct SpaceDef {
  int num_blocks = 7;
  std::vector<int> expansions{1, 4, 6};
  std::vector<int> kernels{3, 5};
  std::vector<int> layer_counts{1, 2, 3};
  std::vector<bool> se_options{false, true};

  int input_channels = 3;
  int stem_channels = 32;
  int head_channels = 1280;
  int num_classes = 1000;
  int base_resolution = 224;
  std::vector<StageConfig> stages{{16, 1}, {24, 2}, {40, 2}, {80, 2},
                                  {112, 1}, {192, 2}, {320, 1}};

  // MnasNet-style space with EfficientNet-B0 stage widths.
  static SpaceDef mnasnet();
  // Same value sets and widths, keeping only the first `blocks` stages.
  static SpaceDef mnasnet_prefix(int blocks);

  // Throws ValidationError on empty sets or mismatched stage config.
  void validate() const;

  std::size_t choice_count(Field field) const;
  std::size_t num_decisions() const { return kFieldsPerBlock * num_blocks; }
  // Per block: one-hot expansion, one-hot kernel, one-hot layers, se bit.
  std::size_t block_feature_dim() const;
  std::size_t feature_dim() const { return block_feature_dim() * num_blocks; }
};

// Exact number of distinct architectures. Throws ValidationError on overflow.
std::uint64_t space_size(const SpaceDef &space);

void validate_architecture(const SpaceDef &space, const Architecture &arch);
bool is_valid(const SpaceDef &space, const Architecture &arch);

Architecture sample_uniform(const SpaceDef &space, Rng &rng);

std::vector<double> encode(const SpaceDef &space, const Architecture &arch);
Architecture decode(const SpaceDef &space, std::span<const double> features);

// Index of the chosen value of decision `decision` (block * 4 + field).
std::size_t choice_index(const SpaceDef &space, const Architecture &arch,
                         std::size_t decision);
// Sets decision `decision` to the `index`-th value of its set.
void set_choice(const SpaceDef &space, Architecture &arch, std::size_t decision,
                std::size_t index);

Architecture mutate(const SpaceDef &space, const Architecture &arch, Rng &rng);

// Calls `visit` for every architecture in mixed-radix order. Intended for
// small spaces only.
template <typename Visitor>
void for_each_architecture(const SpaceDef &space, Visitor &&visit) {
  const std::size_t decisions = space.num_decisions();
  std::vector<std::size_t> digits(decisions, 0);
  Architecture arch;
  arch.blocks.resize(space.num_blocks);
  for (std::size_t d = 0; d < decisions; ++d) {
    set_choice(space, arch, d, 0);
  }
  while (true) {
    visit(static_cast<const Architecture &>(arch));
    std::size_t d = 0;
    for (; d < decisions; ++d) {
      const auto radix = space.choice_count(static_cast<Field>(d % kFieldsPerBlock));
      if (++digits[d] < radix) {
        set_choice(space, arch, d, digits[d]);
        break;
      }
      digits[d] = 0;
      set_choice(space, arch, d, 0);
    }
    if (d == decisions) {
      return;
    }
  }
}

struct Cost {
  std::uint64_t macs = 0;
  std::uint64_t params = 0;

  auto operator<=>(const Cost &) const = default;
};

// Analytic multiply-accumulate and weight counts of the stem, every MBConv
// layer, the 1x1 head conv and the classifier. Batch-norm and residual adds
// are not counted.
Cost flops_params(const SpaceDef &space, const Architecture &arch,
                  int input_resolution);

int se_count(const Architecture &arch);
int kernel_sum(const Architecture &arch);
int layer_sum(const Architecture &arch);

// `n` architectures with strictly increasing FLOPs spread over a random pool
// of `pool` architectures (equal-frequency FLOPs bins, one pick per bin).
std::vector<Architecture> uniform_grid(const SpaceDef &space, std::size_t n,
                                       std::size_t pool, Rng &rng);

// Text form: comma separated `e6k5l3se1` tokens.
std::string to_string(const Architecture &arch);
Architecture parse_architecture(const SpaceDef &space, std::string_view text);

} // namespace anb::arch
