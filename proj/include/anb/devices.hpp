#pragma once

#include "anb/archspace.hpp"
#include "anb/data.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace anb::data {

// Analytic stand-in for on-device inference measurements.
struct DeviceProfile {
  std::string name;
  double effective_gmacs = 1000.0; // sustained GMAC/s on MBConv layers
  double memory_gbps = 100.0;
  double bytes_per_param = 1.0;
  double fixed_ms = 0.5;        // per-batch launch cost
  double layer_ms = 0.01;       // per MBConv layer
  double se_ms = 0.05;          // per SE-enabled block
  double wide_kernel_ms = 0.01; // per layer using the larger depthwise kernel
  int batch = 1;
  double measurement_noise = 0.01; // relative std, seeded per architecture
};

// Profiles for ZCU, VCK, TPUv2, TPUv3, A100 and RTX.
const std::vector<DeviceProfile> &builtin_devices();
const DeviceProfile &builtin_device(std::string_view name);

class DeviceModel {
public:
  DeviceModel(arch::SpaceDef space, DeviceProfile profile, std::uint64_t seed = 0);

  // Single-image latency in milliseconds.
  double latency_ms(const arch::Architecture &arch) const;
  // Images per second at the profile's batch size.
  double throughput(const arch::Architecture &arch) const;
  double measure(const arch::Architecture &arch, Metric metric) const;

  const DeviceProfile &profile() const noexcept { return profile_; }

private:
  double noise_factor(const arch::Architecture &arch, Metric metric) const;

  arch::SpaceDef space_;
  DeviceProfile profile_;
  std::uint64_t seed_;
};

} // namespace anb::data
