#include "anb/devices.hpp"

#include "anb/errors.hpp"
#include "anb/seeding.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace anb::data {

const std::vector<DeviceProfile> &builtin_devices() {
  static const std::vector<DeviceProfile> devices{
      // name, GMAC/s, GB/s, bytes/param, fixed, layer, se, wide kernel, batch, noise
      {"ZCU", 550.0, 19.2, 1.0, 0.60, 0.030, 0.350, 0.040, 4, 0.01},
      {"VCK", 2600.0, 25.6, 1.0, 0.35, 0.015, 0.200, 0.012, 6, 0.01},
      {"TPUv2", 9000.0, 600.0, 2.0, 2.50, 0.040, 0.030, 0.002, 128, 0.015},
      {"TPUv3", 16000.0, 900.0, 2.0, 2.00, 0.030, 0.025, 0.002, 128, 0.015},
      {"A100", 12000.0, 1555.0, 2.0, 0.80, 0.012, 0.010, 0.004, 256, 0.01},
      {"RTX", 7000.0, 936.0, 2.0, 0.90, 0.015, 0.012, 0.005, 256, 0.01},
  };
  return devices;
}

const DeviceProfile &builtin_device(std::string_view name) {
  for (const auto &d : builtin_devices()) {
    if (d.name == name) return d;
  }
  throw ValidationError("unknown device '" + std::string(name) + "'");
}

DeviceModel::DeviceModel(arch::SpaceDef space, DeviceProfile profile, std::uint64_t seed)
    : space_(std::move(space)), profile_(std::move(profile)), seed_(seed) {
  space_.validate();
  if (profile_.effective_gmacs <= 0.0 || profile_.memory_gbps <= 0.0 ||
      profile_.bytes_per_param <= 0.0 || profile_.batch < 1 || profile_.fixed_ms < 0.0 ||
      profile_.layer_ms < 0.0 || profile_.se_ms < 0.0 || profile_.wide_kernel_ms < 0.0 ||
      profile_.measurement_noise < 0.0 || profile_.measurement_noise >= 0.2) {
    throw ValidationError("device profile '" + profile_.name + "' has out-of-range constants");
  }
}

namespace {

struct Breakdown {
  double compute_ms = 0.0;
  double memory_ms = 0.0;
  double overhead_ms = 0.0; // per image, excluding the fixed launch cost
};

Breakdown breakdown(const arch::SpaceDef &space, const DeviceProfile &p,
                    const arch::Architecture &arch) {
  const auto cost = arch::flops_params(space, arch, space.base_resolution);
  const int widest = *std::max_element(space.kernels.begin(), space.kernels.end());
  int wide_layers = 0;
  for (const auto &b : arch.blocks) {
    if (b.kernel == widest && space.kernels.size() > 1) wide_layers += b.layers;
  }
  Breakdown out;
  out.compute_ms = static_cast<double>(cost.macs) / (p.effective_gmacs * 1e6);
  out.memory_ms = static_cast<double>(cost.params) * p.bytes_per_param / (p.memory_gbps * 1e6);
  out.overhead_ms = p.layer_ms * arch::layer_sum(arch) + p.se_ms * arch::se_count(arch) +
                    p.wide_kernel_ms * wide_layers;
  return out;
}

} // namespace

double DeviceModel::noise_factor(const arch::Architecture &arch, Metric metric) const {
  if (profile_.measurement_noise == 0.0) return 1.0;
  std::uint64_t key = hash_values(seed_, {static_cast<std::uint64_t>(metric)});
  for (char c : profile_.name) key = mix_seed(key, static_cast<unsigned char>(c));
  for (std::size_t d = 0; d < space_.num_decisions(); ++d) {
    key = mix_seed(key, arch::choice_index(space_, arch, d) + 8 * d);
  }
  std::mt19937_64 rng(key);
  std::normal_distribution<double> gauss(0.0, profile_.measurement_noise);
  // Bounded to keep measurements positive.
  return 1.0 + std::clamp(gauss(rng), -0.5, 0.5);
}

double DeviceModel::latency_ms(const arch::Architecture &arch) const {
  const auto b = breakdown(space_, profile_, arch);
  return (profile_.fixed_ms + b.compute_ms + b.memory_ms + b.overhead_ms) *
         noise_factor(arch, Metric::latency);
}

double DeviceModel::throughput(const arch::Architecture &arch) const {
  const auto b = breakdown(space_, profile_, arch);
  const double batch = profile_.batch;
  // Weights are streamed once per batch; per-layer overheads partly overlap.
  const double batch_ms = profile_.fixed_ms + b.memory_ms + batch * b.compute_ms +
                          std::sqrt(batch) * b.overhead_ms;
  return 1000.0 * batch / batch_ms * noise_factor(arch, Metric::throughput);
}

double DeviceModel::measure(const arch::Architecture &arch, Metric metric) const {
  switch (metric) {
  case Metric::latency:
    return latency_ms(arch);
  case Metric::throughput:
    return throughput(arch);
  case Metric::accuracy:
    break;
  }
  throw ValidationError("device models measure throughput or latency, not accuracy");
}

} // namespace anb::data
