#pragma once

#include "anb/archspace.hpp"
#include "anb/parallel.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace anb::data {

enum class Metric { accuracy, throughput, latency };
enum class Unit { top1_fraction, images_per_sec, ms };
enum class Split { train, val, test };

inline constexpr int kSchemaVersion = 1;

std::string_view metric_token(Metric metric); // "Acc", "Thr", "Lat"
Metric parse_metric_token(std::string_view token);
std::string_view unit_token(Unit unit); // "top1-fraction", "images-per-sec", "ms"
Unit parse_unit_token(std::string_view token);
std::string_view split_token(Split split);
Split parse_split_token(std::string_view token);
Unit unit_for(Metric metric);

// Devices with FPGA-class latency measurements.
bool is_fpga_device(std::string_view device);

// `ANB-{device}-{metric}`.
std::string dataset_name(std::string_view device, Metric metric);

struct DatasetName {
  std::string device;
  Metric metric = Metric::accuracy;
};
// Throws ValidationError if `name` does not follow `ANB-{device}-{metric}`.
DatasetName parse_dataset_name(std::string_view name);

struct Record {
  arch::Architecture arch;
  double value = 0.0;
  std::optional<Split> split;

  bool operator==(const Record &) const = default;
};

class MetricDataset {
public:
  MetricDataset() = default;
  MetricDataset(std::string name, std::vector<Record> records);

  const std::string &name() const noexcept { return name_; }
  const std::string &device() const noexcept { return device_; }
  Metric metric() const noexcept { return metric_; }
  Unit unit() const noexcept { return unit_for(metric_); }
  const std::vector<Record> &records() const noexcept { return records_; }
  std::size_t size() const noexcept { return records_.size(); }

  // Finite values; Acc in [0, 1]; Thr/Lat > 0; architectures in `space`.
  void validate(const arch::SpaceDef &space) const;

  std::vector<std::size_t> indices(Split split) const;
  void assign_splits(const std::vector<Split> &tags);

  bool operator==(const MetricDataset &) const = default;

private:
  std::string name_;
  std::string device_;
  Metric metric_ = Metric::accuracy;
  std::vector<Record> records_;
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;
};

struct SplitAssignment {
  SplitRatios ratios;
  std::uint64_t seed = 0;
  std::vector<Split> tags;

  std::size_t count(Split split) const;
};

// Seeded shuffle then contiguous cut. Val and test sizes are floored; the
// remainder goes to train.
SplitAssignment split(std::size_t num_records, const SplitRatios &ratios,
                      std::uint64_t seed);
SplitAssignment split(const MetricDataset &ds, const SplitRatios &ratios,
                      std::uint64_t seed);

// JSON-Lines: header {name, count, schema_version, unit} then one record per
// line {arch, value, unit[, split]}.
void save_dataset(const MetricDataset &ds, const std::filesystem::path &path);
std::string serialize_dataset(const MetricDataset &ds);
MetricDataset load_dataset(const arch::SpaceDef &space, const std::filesystem::path &path);
MetricDataset parse_dataset(const arch::SpaceDef &space, std::string_view text);

// A metric source used during collection. May throw for an architecture it
// cannot measure; such architectures are dropped from every dataset.
struct MetricSource {
  std::string device;
  Metric metric = Metric::accuracy;
  std::function<double(const arch::Architecture &)> measure;
};

struct CollectResult {
  std::map<std::string, MetricDataset> datasets;
  std::vector<std::string> warnings;
};

// Samples `n` architectures once and measures each with every source; all
// datasets share the same architecture column.
CollectResult collect(const arch::SpaceDef &space, std::size_t n,
                      const std::vector<MetricSource> &sources, std::uint64_t seed,
                      Exec exec = Exec::parallel);

} // namespace anb::data
