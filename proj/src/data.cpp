#include "anb/data.hpp"

#include "anb/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace anb::data {

using ordered_json = nlohmann::ordered_json;

std::string_view metric_token(Metric metric) {
  switch (metric) {
  case Metric::accuracy:
    return "Acc";
  case Metric::throughput:
    return "Thr";
  case Metric::latency:
    return "Lat";
  }
  return "";
}

Metric parse_metric_token(std::string_view token) {
  if (token == "Acc") return Metric::accuracy;
  if (token == "Thr") return Metric::throughput;
  if (token == "Lat") return Metric::latency;
  throw ValidationError("unknown metric '" + std::string(token) +
                        "' (expected Acc, Thr or Lat)");
}

std::string_view unit_token(Unit unit) {
  switch (unit) {
  case Unit::top1_fraction:
    return "top1-fraction";
  case Unit::images_per_sec:
    return "images-per-sec";
  case Unit::ms:
    return "ms";
  }
  return "";
}

Unit parse_unit_token(std::string_view token) {
  if (token == "top1-fraction") return Unit::top1_fraction;
  if (token == "images-per-sec") return Unit::images_per_sec;
  if (token == "ms") return Unit::ms;
  throw ValidationError("unknown unit '" + std::string(token) + "'");
}

std::string_view split_token(Split split) {
  switch (split) {
  case Split::train:
    return "train";
  case Split::val:
    return "val";
  case Split::test:
    return "test";
  }
  return "";
}

Split parse_split_token(std::string_view token) {
  if (token == "train") return Split::train;
  if (token == "val") return Split::val;
  if (token == "test") return Split::test;
  throw ValidationError("unknown split '" + std::string(token) + "'");
}

Unit unit_for(Metric metric) {
  switch (metric) {
  case Metric::accuracy:
    return Unit::top1_fraction;
  case Metric::throughput:
    return Unit::images_per_sec;
  case Metric::latency:
    return Unit::ms;
  }
  return Unit::top1_fraction;
}

bool is_fpga_device(std::string_view device) { return device == "ZCU" || device == "VCK"; }

std::string dataset_name(std::string_view device, Metric metric) {
  if (device.empty()) {
    return "ANB-" + std::string(metric_token(metric));
  }
  return "ANB-" + std::string(device) + "-" + std::string(metric_token(metric));
}

DatasetName parse_dataset_name(std::string_view name) {
  constexpr std::string_view prefix = "ANB-";
  auto fail = [&]() {
    throw ValidationError("dataset name '" + std::string(name) +
                          "' does not follow ANB-{device}-{metric}");
  };
  if (name.substr(0, prefix.size()) != prefix) {
    fail();
  }
  const std::string_view rest = name.substr(prefix.size());
  DatasetName parsed;
  const auto dash = rest.rfind('-');
  if (dash == std::string_view::npos) {
    // "ANB-Acc": the accuracy dataset is device independent.
    parsed.metric = parse_metric_token(rest);
    return parsed;
  }
  if (dash == 0) {
    fail();
  }
  parsed.device = std::string(rest.substr(0, dash));
  parsed.metric = parse_metric_token(rest.substr(dash + 1));
  return parsed;
}

MetricDataset::MetricDataset(std::string name, std::vector<Record> records)
    : name_(std::move(name)), records_(std::move(records)) {
  const DatasetName parsed = parse_dataset_name(name_);
  device_ = parsed.device;
  metric_ = parsed.metric;
}

void MetricDataset::validate(const arch::SpaceDef &space) const {
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto &r = records_[i];
    arch::validate_architecture(space, r.arch);
    if (!std::isfinite(r.value)) {
      throw ValidationError(name_ + ": record " + std::to_string(i) + " has a non-finite value");
    }
    if (metric_ == Metric::accuracy && (r.value < 0.0 || r.value > 1.0)) {
      throw ValidationError(name_ + ": record " + std::to_string(i) + " accuracy " +
                            std::to_string(r.value) + " is outside [0, 1]");
    }
    if (metric_ != Metric::accuracy && r.value <= 0.0) {
      throw ValidationError(name_ + ": record " + std::to_string(i) +
                            " must have a positive value");
    }
  }
}

std::vector<std::size_t> MetricDataset::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records_.size(); ++i) {
    if (records_[i].split == split) {
      out.push_back(i);
    }
  }
  return out;
}

void MetricDataset::assign_splits(const std::vector<Split> &tags) {
  if (tags.size() != records_.size()) {
    throw ValidationError("split assignment covers " + std::to_string(tags.size()) +
                          " records, dataset has " + std::to_string(records_.size()));
  }
  for (std::size_t i = 0; i < tags.size(); ++i) {
    records_[i].split = tags[i];
  }
}

std::size_t SplitAssignment::count(Split split) const {
  return static_cast<std::size_t>(std::count(tags.begin(), tags.end(), split));
}

SplitAssignment split(std::size_t num_records, const SplitRatios &ratios,
                      std::uint64_t seed) {
  const std::array<double, 3> parts{ratios.train, ratios.val, ratios.test};
  for (double p : parts) {
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      throw ValidationError("split ratios must lie in [0, 1]");
    }
  }
  if (std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
    throw ValidationError("split ratios must sum to 1");
  }
  if (num_records < 3) {
    throw ValidationError("splitting needs at least 3 records");
  }
  const double n = static_cast<double>(num_records);
  const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
  const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));

  std::vector<std::size_t> order(num_records);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  SplitAssignment out;
  out.ratios = ratios;
  out.seed = seed;
  out.tags.assign(num_records, Split::train);
  const std::size_t n_train = num_records - n_val - n_test;
  for (std::size_t i = n_train; i < n_train + n_val; ++i) {
    out.tags[order[i]] = Split::val;
  }
  for (std::size_t i = n_train + n_val; i < num_records; ++i) {
    out.tags[order[i]] = Split::test;
  }
  return out;
}

SplitAssignment split(const MetricDataset &ds, const SplitRatios &ratios,
                      std::uint64_t seed) {
  return split(ds.size(), ratios, seed);
}

std::string serialize_dataset(const MetricDataset &ds) {
  std::string out;
  ordered_json header;
  header["name"] = ds.name();
  header["count"] = ds.size();
  header["schema_version"] = kSchemaVersion;
  header["unit"] = unit_token(ds.unit());
  out += header.dump();
  out += '\n';
  const std::string unit(unit_token(ds.unit()));
  for (const auto &r : ds.records()) {
    ordered_json line;
    line["arch"] = arch::to_string(r.arch);
    line["value"] = r.value;
    line["unit"] = unit;
    if (r.split) {
      line["split"] = split_token(*r.split);
    }
    out += line.dump();
    out += '\n';
  }
  return out;
}

void save_dataset(const MetricDataset &ds, const std::filesystem::path &path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw IoError("cannot open '" + path.string() + "' for writing");
  }
  out << serialize_dataset(ds);
  if (!out) {
    throw IoError("failed writing '" + path.string() + "'");
  }
}

namespace {

[[noreturn]] void line_error(std::size_t line, const std::string &message) {
  throw FormatError(FormatError::Kind::malformed,
                    "line " + std::to_string(line) + ": " + message);
}

template <typename T>
T required(const ordered_json &obj, const char *key, std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    line_error(line, std::string("missing field '") + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception &) {
    line_error(line, std::string("field '") + key + "' has the wrong type");
  }
}

} // namespace

MetricDataset parse_dataset(const arch::SpaceDef &space, std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const auto end = text.find('\n', start);
    if (end == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    lines.push_back(text.substr(start, end - start));
    start = end + 1;
  }
  if (lines.empty()) {
    throw FormatError(FormatError::Kind::truncated, "dataset file is empty");
  }

  const bool ends_cleanly = text.back() == '\n';
  auto parse_line = [&](std::string_view line, std::size_t number) {
    try {
      auto obj = ordered_json::parse(line);
      if (!obj.is_object()) {
        line_error(number, "expected a JSON object");
      }
      return obj;
    } catch (const nlohmann::json::parse_error &e) {
      if (number == lines.size() && !ends_cleanly) {
        throw FormatError(FormatError::Kind::truncated,
                          "line " + std::to_string(number) + ": file ends mid-record");
      }
      line_error(number, e.what());
    }
  };

  const auto header = parse_line(lines[0], 1);
  const int version = required<int>(header, "schema_version", 1);
  if (version != kSchemaVersion) {
    throw FormatError(FormatError::Kind::version_mismatch,
                      "unsupported dataset schema_version " + std::to_string(version) +
                          " (expected " + std::to_string(kSchemaVersion) + ")");
  }
  const auto name = required<std::string>(header, "name", 1);
  const auto count = required<std::size_t>(header, "count", 1);
  DatasetName parsed;
  try {
    parsed = parse_dataset_name(name);
  } catch (const ValidationError &e) {
    line_error(1, e.what());
  }
  const Unit unit = unit_for(parsed.metric);
  if (auto it = header.find("unit"); it != header.end()) {
    if (!it->is_string() || it->get<std::string>() != unit_token(unit)) {
      line_error(1, "header unit does not match metric of '" + name + "'");
    }
  }

  std::vector<Record> records;
  records.reserve(count);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) {
      continue;
    }
    const std::size_t number = i + 1;
    const auto obj = parse_line(lines[i], number);
    Record r;
    try {
      r.arch = arch::parse_architecture(space, required<std::string>(obj, "arch", number));
    } catch (const ValidationError &e) {
      line_error(number, e.what());
    }
    r.value = required<double>(obj, "value", number);
    const auto record_unit = required<std::string>(obj, "unit", number);
    if (record_unit != unit_token(unit)) {
      line_error(number, "unit '" + record_unit + "' does not match dataset unit '" +
                             std::string(unit_token(unit)) + "'");
    }
    if (auto it = obj.find("split"); it != obj.end()) {
      try {
        r.split = parse_split_token(it->get<std::string>());
      } catch (const std::exception &e) {
        line_error(number, e.what());
      }
    }
    records.push_back(std::move(r));
  }
  if (records.size() != count) {
    throw FormatError(records.size() < count ? FormatError::Kind::truncated
                                             : FormatError::Kind::malformed,
                      "header declares " + std::to_string(count) + " records, found " +
                          std::to_string(records.size()));
  }
  MetricDataset ds(name, std::move(records));
  ds.validate(space);
  return ds;
}

MetricDataset load_dataset(const arch::SpaceDef &space, const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw IoError("cannot open dataset '" + path.string() + "'");
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_dataset(space, buffer.str());
}

CollectResult collect(const arch::SpaceDef &space, std::size_t n,
                      const std::vector<MetricSource> &sources, std::uint64_t seed,
                      Exec exec) {
  if (n < 1) {
    throw ValidationError("collect needs n >= 1");
  }
  if (sources.empty()) {
    throw ValidationError("collect needs at least one metric source");
  }
  CollectResult result;
  for (const auto &source : sources) {
    if (source.metric == Metric::latency && !is_fpga_device(source.device)) {
      result.warnings.push_back("latency requested for non-FPGA device '" +
                                source.device + "'");
    }
  }

  arch::Rng rng(seed);
  std::vector<arch::Architecture> archs;
  archs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    archs.push_back(arch::sample_uniform(space, rng));
  }

  const std::size_t s = sources.size();
  std::vector<double> values(n * s, 0.0);
  std::vector<std::string> failures(n);
  auto measure_one = [&](std::size_t i) {
    for (std::size_t k = 0; k < s; ++k) {
      try {
        values[i * s + k] = sources[k].measure(archs[i]);
        if (!std::isfinite(values[i * s + k])) {
          throw ValidationError("non-finite measurement");
        }
      } catch (const std::exception &e) {
        failures[i] = dataset_name(sources[k].device, sources[k].metric) + ": " + e.what();
        return;
      }
    }
  };
  if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic, 16)
    for (std::size_t i = 0; i < n; ++i) {
      measure_one(i);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      measure_one(i);
    }
  }

  std::vector<std::vector<Record>> columns(s);
  for (std::size_t i = 0; i < n; ++i) {
    if (!failures[i].empty()) {
      result.warnings.push_back("skipping " + arch::to_string(archs[i]) + " in all datasets (" +
                                failures[i] + ")");
      continue;
    }
    for (std::size_t k = 0; k < s; ++k) {
      columns[k].push_back(Record{archs[i], values[i * s + k], std::nullopt});
    }
  }
  for (std::size_t k = 0; k < s; ++k) {
    const auto name = dataset_name(sources[k].device, sources[k].metric);
    if (result.datasets.contains(name)) {
      throw ValidationError("duplicate metric source '" + name + "'");
    }
    result.datasets.emplace(name, MetricDataset(name, std::move(columns[k])));
  }
  return result;
}

} // namespace anb::data
