#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mfl {

enum class MetricKind {
  SupNorm,      // max |f_merged - f_reference| over the test inputs
  LogSupNorm,   // mean over repeats of ln sup_norm
  Mse,
  LnMse,        // mean over members of ln test MSE
  Accuracy,
  Variance,
  TrainLoss,
  TestLoss,
  MseMean,      // mean of member MSEs
  MseBest,      // best (lowest) member MSE
};

std::string to_string(MetricKind kind);
MetricKind metric_kind_from_string(const std::string& s);

// One output value. Inapplicable dimensions stay empty and serialize as
// empty CSV fields. Key tuples are unique within a run.
struct MetricRecord {
  std::string experiment;
  std::optional<std::int64_t> n;       // particles per member, or adapter rank
  std::optional<std::int64_t> m;       // members merged
  std::optional<double> lambda;
  std::optional<std::int64_t> repeat;
  std::optional<std::int64_t> epoch;
  MetricKind metric = MetricKind::Mse;
  double value = 0.0;
};

// Header experiment,N,M,lambda,repeat,epoch,metric,value; one row per record;
// full round-trip precision.
void emit_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path);
std::vector<MetricRecord> records_read_csv(const std::filesystem::path& path);

}  // namespace mfl
