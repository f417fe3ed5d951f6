#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace mfl {

enum class TaskKind { Unknown, Circles, MultiIndex, LowRank };
enum class SplitTag { Full, Train, Test };

std::string to_string(TaskKind kind);
std::string to_string(SplitTag tag);
TaskKind task_kind_from_string(const std::string& s);
SplitTag split_tag_from_string(const std::string& s);

struct DatasetMeta {
  TaskKind task = TaskKind::Unknown;
  std::map<std::string, double> params;
  SplitTag split = SplitTag::Full;
  std::uint64_t seed = 0;
};

// Labelled examples with a uniform input dimension and scalar labels.
struct Dataset {
  std::vector<std::vector<double>> inputs;
  std::vector<double> labels;
  DatasetMeta meta;

  std::size_t size() const { return inputs.size(); }
  std::size_t input_dim() const { return inputs.empty() ? 0 : inputs.front().size(); }

  // Throws std::invalid_argument unless non-empty, ragged-free, finite, and
  // label counts match; circles labels must be exactly -1 or +1.
  void validate() const;
};

}  // namespace mfl
