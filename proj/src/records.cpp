#include "mfl/records.hpp"

#include <sstream>
#include <stdexcept>

#include "mfl/io.hpp"

namespace mfl {

std::string to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::SupNorm: return "sup_norm";
    case MetricKind::LogSupNorm: return "log_sup_norm";
    case MetricKind::Mse: return "mse";
    case MetricKind::LnMse: return "ln_mse";
    case MetricKind::Accuracy: return "accuracy";
    case MetricKind::Variance: return "variance";
    case MetricKind::TrainLoss: return "train_loss";
    case MetricKind::TestLoss: return "test_loss";
    case MetricKind::MseMean: return "mse_mean";
    case MetricKind::MseBest: return "mse_best";
  }
  throw std::invalid_argument("unknown MetricKind");
}

MetricKind metric_kind_from_string(const std::string& s) {
  if (s == "sup_norm") return MetricKind::SupNorm;
  if (s == "log_sup_norm") return MetricKind::LogSupNorm;
  if (s == "mse") return MetricKind::Mse;
  if (s == "ln_mse") return MetricKind::LnMse;
  if (s == "accuracy") return MetricKind::Accuracy;
  if (s == "variance") return MetricKind::Variance;
  if (s == "train_loss") return MetricKind::TrainLoss;
  if (s == "test_loss") return MetricKind::TestLoss;
  if (s == "mse_mean") return MetricKind::MseMean;
  if (s == "mse_best") return MetricKind::MseBest;
  throw std::invalid_argument("unknown metric: " + s);
}

namespace {

constexpr const char* kHeader = "experiment,N,M,lambda,repeat,epoch,metric,value";

std::string int_field(const std::optional<std::int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}

std::optional<std::int64_t> parse_int_field(const std::string& s, const std::string& ctx) {
  if (s.empty()) return std::nullopt;
  std::size_t used = 0;
  const long long v = std::stoll(s, &used);
  if (used != s.size()) throw std::runtime_error(ctx + ": bad integer field '" + s + "'");
  return v;
}

}  // namespace

void emit_csv(const std::vector<MetricRecord>& records, const std::filesystem::path& path) {
  std::string out = kHeader;
  out += '\n';
  for (const MetricRecord& r : records) {
    out += r.experiment;
    out += ',';
    out += int_field(r.n);
    out += ',';
    out += int_field(r.m);
    out += ',';
    out += r.lambda ? fmt_double(*r.lambda) : std::string();
    out += ',';
    out += int_field(r.repeat);
    out += ',';
    out += int_field(r.epoch);
    out += ',';
    out += to_string(r.metric);
    out += ',';
    out += fmt_double(r.value);
    out += '\n';
  }
  write_text_file(path, out);
}

std::vector<MetricRecord> records_read_csv(const std::filesystem::path& path) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(path.string() + ": empty records file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader)
    throw std::runtime_error(path.string() + ": expected header '" + kHeader + "', got '" +
                             line + "'");

  std::vector<MetricRecord> records;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    const std::string ctx = path.string() + " row " + std::to_string(row);
    if (fields.size() != 8)
      throw std::runtime_error(ctx + ": has " + std::to_string(fields.size()) +
                               " fields, expected 8");
    MetricRecord r;
    r.experiment = fields[0];
    r.n = parse_int_field(fields[1], ctx);
    r.m = parse_int_field(fields[2], ctx);
    if (!fields[3].empty()) r.lambda = parse_double(fields[3], ctx);
    r.repeat = parse_int_field(fields[4], ctx);
    r.epoch = parse_int_field(fields[5], ctx);
    r.metric = metric_kind_from_string(fields[6]);
    r.value = parse_double(fields[7], ctx);
    records.push_back(std::move(r));
    ++row;
  }
  return records;
}

}  // namespace mfl
