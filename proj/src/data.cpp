#include "mfl/data.hpp"

#include <cmath>
#include <stdexcept>

namespace mfl {

std::string to_string(TaskKind kind) {
  switch (kind) {
    case TaskKind::Unknown: return "unknown";
    case TaskKind::Circles: return "circles";
    case TaskKind::MultiIndex: return "multi_index";
    case TaskKind::LowRank: return "low_rank";
  }
  throw std::invalid_argument("unknown TaskKind");
}

std::string to_string(SplitTag tag) {
  switch (tag) {
    case SplitTag::Full: return "full";
    case SplitTag::Train: return "train";
    case SplitTag::Test: return "test";
  }
  throw std::invalid_argument("unknown SplitTag");
}

TaskKind task_kind_from_string(const std::string& s) {
  if (s == "unknown") return TaskKind::Unknown;
  if (s == "circles") return TaskKind::Circles;
  if (s == "multi_index") return TaskKind::MultiIndex;
  if (s == "low_rank") return TaskKind::LowRank;
  throw std::invalid_argument("unknown task kind: " + s);
}

SplitTag split_tag_from_string(const std::string& s) {
  if (s == "full") return SplitTag::Full;
  if (s == "train") return SplitTag::Train;
  if (s == "test") return SplitTag::Test;
  throw std::invalid_argument("unknown split tag: " + s);
}

void Dataset::validate() const {
  if (inputs.empty()) throw std::invalid_argument("dataset is empty");
  if (inputs.size() != labels.size())
    throw std::invalid_argument("dataset has " + std::to_string(inputs.size()) +
                                " inputs but " + std::to_string(labels.size()) + " labels");
  const std::size_t d = inputs.front().size();
  if (d == 0) throw std::invalid_argument("dataset input dimension is zero");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d)
      throw std::invalid_argument("dataset row " + std::to_string(i) + " has dimension " +
                                  std::to_string(inputs[i].size()) + ", expected " +
                                  std::to_string(d));
    for (double v : inputs[i])
      if (!std::isfinite(v))
        throw std::invalid_argument("dataset row " + std::to_string(i) + " has a non-finite input");
    if (!std::isfinite(labels[i]))
      throw std::invalid_argument("dataset row " + std::to_string(i) + " has a non-finite label");
    if (meta.task == TaskKind::Circles && labels[i] != 1.0 && labels[i] != -1.0)
      throw std::invalid_argument("circles label at row " + std::to_string(i) +
                                  " must be -1 or +1");
  }
}

}  // namespace mfl
