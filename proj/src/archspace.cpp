#include "anb/archspace.hpp"

#include "anb/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

namespace anb::arch {

namespace {

const char *field_name(Field field) {
  switch (field) {
  case Field::expansion:
    return "expansion";
  case Field::kernel:
    return "kernel";
  case Field::layers:
    return "layers";
  case Field::se:
    return "se";
  }
  return "?";
}

std::size_t index_of(const std::vector<int> &values, int value) {
  auto it = std::find(values.begin(), values.end(), value);
  return static_cast<std::size_t>(it - values.begin());
}

std::size_t index_of(const std::vector<bool> &values, bool value) {
  auto it = std::find(values.begin(), values.end(), value);
  return static_cast<std::size_t>(it - values.begin());
}

std::uint64_t ceil_div(std::uint64_t a, std::uint64_t b) { return (a + b - 1) / b; }

} // namespace

SpaceDef SpaceDef::mnasnet() { return SpaceDef{}; }

SpaceDef SpaceDef::mnasnet_prefix(int blocks) {
  SpaceDef space = mnasnet();
  if (blocks < 1 || blocks > space.num_blocks) {
    throw ValidationError("prefix block count must be in [1, 7]");
  }
  space.num_blocks = blocks;
  space.stages.resize(static_cast<std::size_t>(blocks));
  return space;
}

void SpaceDef::validate() const {
  if (num_blocks < 1) {
    throw ValidationError("num_blocks must be >= 1");
  }
  if (expansions.empty() || kernels.empty() || layer_counts.empty() ||
      se_options.empty()) {
    throw ValidationError("every decision value set must be non-empty");
  }
  if (stages.size() != static_cast<std::size_t>(num_blocks)) {
    throw ValidationError("stage config has " + std::to_string(stages.size()) +
                          " entries, expected " + std::to_string(num_blocks));
  }
  auto positive = [](const std::vector<int> &v) {
    return std::all_of(v.begin(), v.end(), [](int x) { return x > 0; });
  };
  if (!positive(expansions) || !positive(kernels) || !positive(layer_counts)) {
    throw ValidationError("expansion, kernel and layer values must be positive");
  }
  for (const auto &stage : stages) {
    if (stage.out_channels <= 0 || stage.stride <= 0) {
      throw ValidationError("stage widths and strides must be positive");
    }
  }
  if (input_channels <= 0 || stem_channels <= 0 || head_channels <= 0 ||
      num_classes <= 0 || base_resolution <= 0) {
    throw ValidationError("stem/head/classifier sizes must be positive");
  }
}

std::size_t SpaceDef::choice_count(Field field) const {
  switch (field) {
  case Field::expansion:
    return expansions.size();
  case Field::kernel:
    return kernels.size();
  case Field::layers:
    return layer_counts.size();
  case Field::se:
    return se_options.size();
  }
  return 0;
}

std::size_t SpaceDef::block_feature_dim() const {
  return expansions.size() + kernels.size() + layer_counts.size() + 1;
}

std::uint64_t space_size(const SpaceDef &space) {
  space.validate();
  std::uint64_t per_block = 1;
  for (int f = 0; f < kFieldsPerBlock; ++f) {
    per_block *= space.choice_count(static_cast<Field>(f));
  }
  std::uint64_t total = 1;
  for (int b = 0; b < space.num_blocks; ++b) {
    if (__builtin_mul_overflow(total, per_block, &total) ||
        total >= (std::uint64_t{1} << 63)) {
      throw ValidationError("space size overflows 63 bits");
    }
  }
  return total;
}

void validate_architecture(const SpaceDef &space, const Architecture &arch) {
  if (arch.blocks.size() != static_cast<std::size_t>(space.num_blocks)) {
    throw ValidationError("architecture has " + std::to_string(arch.blocks.size()) +
                          " blocks, space expects " +
                          std::to_string(space.num_blocks));
  }
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const auto &block = arch.blocks[b];
    auto fail = [b](Field field, const std::string &value) {
      throw ValidationError("block " + std::to_string(b) + ": " +
                            field_name(field) + " value " + value +
                            " is not in the space");
    };
    if (index_of(space.expansions, block.expansion) == space.expansions.size()) {
      fail(Field::expansion, std::to_string(block.expansion));
    }
    if (index_of(space.kernels, block.kernel) == space.kernels.size()) {
      fail(Field::kernel, std::to_string(block.kernel));
    }
    if (index_of(space.layer_counts, block.layers) == space.layer_counts.size()) {
      fail(Field::layers, std::to_string(block.layers));
    }
    if (index_of(space.se_options, block.se) == space.se_options.size()) {
      fail(Field::se, block.se ? "1" : "0");
    }
  }
}

bool is_valid(const SpaceDef &space, const Architecture &arch) {
  try {
    validate_architecture(space, arch);
    return true;
  } catch (const ValidationError &) {
    return false;
  }
}

std::size_t choice_index(const SpaceDef &space, const Architecture &arch,
                         std::size_t decision) {
  const auto &block = arch.blocks.at(decision / kFieldsPerBlock);
  switch (static_cast<Field>(decision % kFieldsPerBlock)) {
  case Field::expansion:
    return index_of(space.expansions, block.expansion);
  case Field::kernel:
    return index_of(space.kernels, block.kernel);
  case Field::layers:
    return index_of(space.layer_counts, block.layers);
  case Field::se:
    return index_of(space.se_options, block.se);
  }
  return 0;
}

void set_choice(const SpaceDef &space, Architecture &arch, std::size_t decision,
                std::size_t index) {
  auto &block = arch.blocks.at(decision / kFieldsPerBlock);
  switch (static_cast<Field>(decision % kFieldsPerBlock)) {
  case Field::expansion:
    block.expansion = space.expansions.at(index);
    break;
  case Field::kernel:
    block.kernel = space.kernels.at(index);
    break;
  case Field::layers:
    block.layers = space.layer_counts.at(index);
    break;
  case Field::se:
    block.se = space.se_options.at(index);
    break;
  }
}

Architecture sample_uniform(const SpaceDef &space, Rng &rng) {
  Architecture arch;
  arch.blocks.resize(static_cast<std::size_t>(space.num_blocks));
  for (std::size_t d = 0; d < space.num_decisions(); ++d) {
    const auto count = space.choice_count(static_cast<Field>(d % kFieldsPerBlock));
    std::uniform_int_distribution<std::size_t> pick(0, count - 1);
    set_choice(space, arch, d, pick(rng));
  }
  return arch;
}

std::vector<double> encode(const SpaceDef &space, const Architecture &arch) {
  validate_architecture(space, arch);
  std::vector<double> out(space.feature_dim(), 0.0);
  std::size_t offset = 0;
  for (const auto &block : arch.blocks) {
    out[offset + index_of(space.expansions, block.expansion)] = 1.0;
    offset += space.expansions.size();
    out[offset + index_of(space.kernels, block.kernel)] = 1.0;
    offset += space.kernels.size();
    out[offset + index_of(space.layer_counts, block.layers)] = 1.0;
    offset += space.layer_counts.size();
    out[offset] = block.se ? 1.0 : 0.0;
    offset += 1;
  }
  return out;
}

Architecture decode(const SpaceDef &space, std::span<const double> features) {
  if (features.size() != space.feature_dim()) {
    throw ValidationError("feature vector has length " +
                          std::to_string(features.size()) + ", expected " +
                          std::to_string(space.feature_dim()));
  }
  Architecture arch;
  arch.blocks.resize(static_cast<std::size_t>(space.num_blocks));
  std::size_t offset = 0;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    auto one_hot = [&](Field field, std::size_t width) {
      std::size_t hot = width;
      for (std::size_t i = 0; i < width; ++i) {
        const double v = features[offset + i];
        if (v == 1.0) {
          if (hot != width) {
            throw ValidationError("block " + std::to_string(b) + ": " +
                                  field_name(field) + " group has several hot bits");
          }
          hot = i;
        } else if (v != 0.0) {
          throw ValidationError("block " + std::to_string(b) + ": " +
                                field_name(field) + " group holds a non-binary value");
        }
      }
      if (hot == width) {
        throw ValidationError("block " + std::to_string(b) + ": " +
                              field_name(field) + " group has no hot bit");
      }
      offset += width;
      return hot;
    };
    auto &block = arch.blocks[b];
    block.expansion = space.expansions[one_hot(Field::expansion, space.expansions.size())];
    block.kernel = space.kernels[one_hot(Field::kernel, space.kernels.size())];
    block.layers = space.layer_counts[one_hot(Field::layers, space.layer_counts.size())];
    const double se_bit = features[offset++];
    if (se_bit != 0.0 && se_bit != 1.0) {
      throw ValidationError("block " + std::to_string(b) + ": se bit must be 0 or 1");
    }
    block.se = se_bit == 1.0;
    if (index_of(space.se_options, block.se) == space.se_options.size()) {
      throw ValidationError("block " + std::to_string(b) + ": se value " +
                            std::string(block.se ? "1" : "0") + " is not in the space");
    }
  }
  return arch;
}

Architecture mutate(const SpaceDef &space, const Architecture &arch, Rng &rng) {
  validate_architecture(space, arch);
  bool any_mutable = false;
  for (int f = 0; f < kFieldsPerBlock; ++f) {
    any_mutable = any_mutable || space.choice_count(static_cast<Field>(f)) > 1;
  }
  if (!any_mutable) {
    throw ValidationError("cannot mutate: every decision has a single value");
  }
  std::uniform_int_distribution<std::size_t> pick_position(0, space.num_decisions() - 1);
  std::size_t decision = 0;
  std::size_t count = 0;
  do {
    decision = pick_position(rng);
    count = space.choice_count(static_cast<Field>(decision % kFieldsPerBlock));
  } while (count < 2);

  // Draw among the count - 1 other values.
  const std::size_t current = choice_index(space, arch, decision);
  std::uniform_int_distribution<std::size_t> pick_value(0, count - 2);
  std::size_t next = pick_value(rng);
  if (next >= current) {
    ++next;
  }
  Architecture child = arch;
  set_choice(space, child, decision, next);
  return child;
}

Cost flops_params(const SpaceDef &space, const Architecture &arch,
                  int input_resolution) {
  if (input_resolution <= 0) {
    throw ValidationError("input resolution must be positive");
  }
  space.validate();
  validate_architecture(space, arch);

  Cost cost;
  // Stem: 3x3 stride-2 conv.
  std::uint64_t res = ceil_div(static_cast<std::uint64_t>(input_resolution), 2);
  std::uint64_t channels = static_cast<std::uint64_t>(space.stem_channels);
  const std::uint64_t stem_weights =
      9 * static_cast<std::uint64_t>(space.input_channels) * channels;
  cost.macs += res * res * stem_weights;
  cost.params += stem_weights;

  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const auto &block = arch.blocks[b];
    const auto &stage = space.stages[b];
    const auto out_ch = static_cast<std::uint64_t>(stage.out_channels);
    const auto kernel = static_cast<std::uint64_t>(block.kernel);
    for (int layer = 0; layer < block.layers; ++layer) {
      const std::uint64_t in_ch = channels;
      const std::uint64_t stride =
          layer == 0 ? static_cast<std::uint64_t>(stage.stride) : 1;
      const std::uint64_t mid = in_ch * static_cast<std::uint64_t>(block.expansion);
      if (block.expansion != 1) {
        cost.macs += res * res * in_ch * mid;
        cost.params += in_ch * mid;
      }
      const std::uint64_t out_res = ceil_div(res, stride);
      cost.macs += out_res * out_res * kernel * kernel * mid;
      cost.params += kernel * kernel * mid;
      if (block.se) {
        const std::uint64_t reduced = std::max<std::uint64_t>(1, in_ch / 4);
        cost.macs += 2 * mid * reduced;
        cost.params += mid * reduced + reduced + reduced * mid + mid;
      }
      cost.macs += out_res * out_res * mid * out_ch;
      cost.params += mid * out_ch;
      res = out_res;
      channels = out_ch;
    }
  }

  const auto head = static_cast<std::uint64_t>(space.head_channels);
  cost.macs += res * res * channels * head;
  cost.params += channels * head;
  const auto classes = static_cast<std::uint64_t>(space.num_classes);
  cost.macs += head * classes;
  cost.params += head * classes + classes;
  return cost;
}

int se_count(const Architecture &arch) {
  return static_cast<int>(std::count_if(arch.blocks.begin(), arch.blocks.end(),
                                        [](const BlockSpec &b) { return b.se; }));
}

int kernel_sum(const Architecture &arch) {
  return std::accumulate(arch.blocks.begin(), arch.blocks.end(), 0,
                         [](int acc, const BlockSpec &b) { return acc + b.kernel; });
}

int layer_sum(const Architecture &arch) {
  return std::accumulate(arch.blocks.begin(), arch.blocks.end(), 0,
                         [](int acc, const BlockSpec &b) { return acc + b.layers; });
}

std::vector<Architecture> uniform_grid(const SpaceDef &space, std::size_t n,
                                       std::size_t pool, Rng &rng) {
  if (n < 2) {
    throw ValidationError("uniform_grid needs n >= 2");
  }
  if (pool < 10 * n) {
    throw ValidationError("uniform_grid needs pool >= 10 * n");
  }

  struct Candidate {
    Architecture arch;
    Cost cost;
    std::vector<double> code;
  };
  std::vector<Candidate> candidates;
  candidates.reserve(pool);
  for (std::size_t i = 0; i < pool; ++i) {
    Candidate c;
    c.arch = sample_uniform(space, rng);
    c.cost = flops_params(space, c.arch, space.base_resolution);
    c.code = encode(space, c.arch);
    candidates.push_back(std::move(c));
  }
  auto by_cost = [](const Candidate &a, const Candidate &b) {
    if (a.cost.macs != b.cost.macs) return a.cost.macs < b.cost.macs;
    if (a.cost.params != b.cost.params) return a.cost.params < b.cost.params;
    return a.code < b.code;
  };
  std::sort(candidates.begin(), candidates.end(), by_cost);

  std::vector<Architecture> grid;
  grid.reserve(n);
  std::uint64_t last_macs = 0;
  bool have_last = false;
  for (std::size_t bin = 0; bin < n; ++bin) {
    const std::size_t lo = bin * pool / n;
    const std::size_t hi = (bin + 1) * pool / n;
    const std::size_t mid = lo + (hi - lo) / 2;
    const double median = (hi - lo) % 2 == 1
                              ? static_cast<double>(candidates[mid].cost.macs)
                              : 0.5 * (static_cast<double>(candidates[mid - 1].cost.macs) +
                                       static_cast<double>(candidates[mid].cost.macs));
    // Nearest to the bin median, ties by params then encoding, restricted to
    // FLOPs strictly above the previous pick. Falls through to later rows if
    // the whole bin is used up by duplicates.
    const Candidate *best = nullptr;
    double best_distance = 0.0;
    for (std::size_t i = lo; i < pool; ++i) {
      const auto &c = candidates[i];
      if (have_last && c.cost.macs <= last_macs) continue;
      if (i >= hi && best != nullptr) break;
      const double distance = std::abs(static_cast<double>(c.cost.macs) - median);
      if (best == nullptr || distance < best_distance ||
          (distance == best_distance &&
           (c.cost.params < best->cost.params ||
            (c.cost.params == best->cost.params && c.code < best->code)))) {
        best = &c;
        best_distance = distance;
      }
    }
    if (best == nullptr) {
      throw ValidationError("pool has fewer than n distinct FLOPs values");
    }
    grid.push_back(best->arch);
    last_macs = best->cost.macs;
    have_last = true;
  }
  return grid;
}

std::string to_string(const Architecture &arch) {
  std::string out;
  for (std::size_t b = 0; b < arch.blocks.size(); ++b) {
    const auto &block = arch.blocks[b];
    if (b > 0) out += ',';
    out += 'e' + std::to_string(block.expansion) + 'k' + std::to_string(block.kernel) +
           'l' + std::to_string(block.layers) + "se" + (block.se ? '1' : '0');
  }
  return out;
}

namespace {

int parse_int(std::string_view token, std::size_t &pos, std::string_view what,
              std::size_t block) {
  int value = 0;
  const char *begin = token.data() + pos;
  const char *end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr == begin) {
    throw ValidationError("block " + std::to_string(block) + ": expected a number after '" +
                          std::string(what) + "' in token '" + std::string(token) + "'");
  }
  pos = static_cast<std::size_t>(ptr - token.data());
  return value;
}

void expect(std::string_view token, std::size_t &pos, std::string_view prefix,
            std::size_t block) {
  if (token.substr(pos, prefix.size()) != prefix) {
    throw ValidationError("block " + std::to_string(block) + ": expected '" +
                          std::string(prefix) + "' in token '" + std::string(token) + "'");
  }
  pos += prefix.size();
}

} // namespace

Architecture parse_architecture(const SpaceDef &space, std::string_view text) {
  Architecture arch;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = text.find(',', start);
    const std::string_view token =
        text.substr(start, comma == std::string_view::npos ? std::string_view::npos
                                                           : comma - start);
    const std::size_t block = arch.blocks.size();
    std::size_t pos = 0;
    BlockSpec spec;
    expect(token, pos, "e", block);
    spec.expansion = parse_int(token, pos, "e", block);
    expect(token, pos, "k", block);
    spec.kernel = parse_int(token, pos, "k", block);
    expect(token, pos, "l", block);
    spec.layers = parse_int(token, pos, "l", block);
    expect(token, pos, "se", block);
    const int se = parse_int(token, pos, "se", block);
    if (pos != token.size() || (se != 0 && se != 1)) {
      throw ValidationError("block " + std::to_string(block) + ": malformed token '" +
                            std::string(token) + "'");
    }
    spec.se = se == 1;
    arch.blocks.push_back(spec);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  validate_architecture(space, arch);
  return arch;
}

} // namespace anb::arch
