#include "mfl/datagen.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "mfl/io.hpp"
#include "mfl/rng.hpp"

namespace mfl {

Dataset gen_circles(const CirclesParams& params) {
  if (params.n < 2) throw std::invalid_argument("circles: need at least 2 points");
  if (!(params.r_inner > 0.0) || !(params.r_outer > params.r_inner))
    throw std::invalid_argument("circles: need 0 < r_inner < r_outer");
  if (params.noise_std < 0.0) throw std::invalid_argument("circles: noise_std must be >= 0");

  Dataset out;
  out.meta.task = TaskKind::Circles;
  out.meta.seed = params.seed;
  out.meta.params = {{"n", static_cast<double>(params.n)},
                     {"r_inner", params.r_inner},
                     {"r_outer", params.r_outer},
                     {"noise_std", params.noise_std}};

  rng::Stream stream(rng::derive_seed(params.seed, "circles"));
  out.inputs.reserve(params.n);
  out.labels.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    // Even indices inner circle, odd indices outer, shuffled below.
    const bool inner = 2 * i < params.n;
    const double radius = inner ? params.r_inner : params.r_outer;
    const double theta = 2.0 * std::numbers::pi * stream.uniform01();
    const double x = radius * std::cos(theta) + params.noise_std * stream.gauss();
    const double y = radius * std::sin(theta) + params.noise_std * stream.gauss();
    out.inputs.push_back({x, y});
    out.labels.push_back(inner ? -1.0 : 1.0);
  }

  std::vector<std::size_t> order(params.n);
  for (std::size_t i = 0; i < params.n; ++i) order[i] = i;
  rng::Stream shuffler(rng::derive_seed(params.seed, "circles_shuffle"));
  shuffler.shuffle(order);
  Dataset shuffled = out;
  for (std::size_t i = 0; i < params.n; ++i) {
    shuffled.inputs[i] = out.inputs[order[i]];
    shuffled.labels[i] = out.labels[order[i]];
  }
  shuffled.validate();
  return shuffled;
}

Dataset gen_multi_index(const MultiIndexParams& params) {
  if (params.n == 0) throw std::invalid_argument("multi_index: need at least 1 point");
  if (params.d == 0) throw std::invalid_argument("multi_index: d must be positive");
  if (params.k == 0 || params.k > params.d)
    throw std::invalid_argument("multi_index: need 1 <= k <= d, got k=" +
                                std::to_string(params.k) + ", d=" + std::to_string(params.d));
  if (!(params.r > 0.0)) throw std::invalid_argument("multi_index: r must be positive");

  Dataset out;
  out.meta.task = TaskKind::MultiIndex;
  out.meta.seed = params.seed;
  out.meta.params = {{"n", static_cast<double>(params.n)},
                     {"d", static_cast<double>(params.d)},
                     {"k", static_cast<double>(params.k)},
                     {"r", params.r},
                     {"r_bar", params.r_bar}};

  rng::Stream stream(rng::derive_seed(params.seed, "multi_index"));
  out.inputs.reserve(params.n);
  out.labels.reserve(params.n);
  for (std::size_t i = 0; i < params.n; ++i) {
    // Uniform in the ball: direction from a normalized Gaussian, radius
    // r * U^(1/d) so the volume element is uniform.
    std::vector<double> z(params.d);
    double norm_sq = 0.0;
    for (double& v : z) {
      v = stream.gauss();
      norm_sq += v * v;
    }
    double norm = std::sqrt(norm_sq);
    if (norm == 0.0) norm = 1.0;
    const double radius =
        params.r * std::pow(stream.uniform01(), 1.0 / static_cast<double>(params.d));
    for (double& v : z) v *= radius / norm;

    double y = 0.0;
    for (std::size_t j = 0; j < params.k; ++j) y += std::tanh(z[j]);
    y *= params.r_bar / static_cast<double>(params.k);

    out.inputs.push_back(std::move(z));
    out.labels.push_back(y);
  }
  out.validate();
  return out;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& data, double train_frac,
                                          std::uint64_t seed) {
  data.validate();
  if (!(train_frac > 0.0) || !(train_frac < 1.0))
    throw std::invalid_argument("train_frac must lie strictly between 0 and 1, got " +
                                std::to_string(train_frac));
  const std::size_t n = data.size();
  const std::size_t n_train =
      static_cast<std::size_t>(std::floor(static_cast<double>(n) * train_frac));
  if (n_train == 0 || n_train == n)
    throw std::invalid_argument("split leaves an empty side: n=" + std::to_string(n) +
                                ", train_frac=" + std::to_string(train_frac));

  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  rng::Stream stream(rng::derive_seed(seed, "split"));
  stream.shuffle(order);

  Dataset train, test;
  train.meta = data.meta;
  train.meta.split = SplitTag::Train;
  test.meta = data.meta;
  test.meta.split = SplitTag::Test;
  for (std::size_t i = 0; i < n; ++i) {
    Dataset& side = i < n_train ? train : test;
    side.inputs.push_back(data.inputs[order[i]]);
    side.labels.push_back(data.labels[order[i]]);
  }
  return {std::move(train), std::move(test)};
}

void dataset_write(const Dataset& data, const std::filesystem::path& csv_path) {
  data.validate();
  const std::size_t d = data.input_dim();
  std::string out = "y";
  for (std::size_t j = 0; j < d; ++j) out += ",z" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    out += fmt_double(data.labels[i]);
    for (double v : data.inputs[i]) {
      out += ',';
      out += fmt_double(v);
    }
    out += '\n';
  }
  write_text_file(csv_path, out);

  nlohmann::json side;
  side["task"] = to_string(data.meta.task);
  side["params"] = data.meta.params;
  side["split"] = to_string(data.meta.split);
  side["seed"] = data.meta.seed;
  write_text_file(sidecar_path(csv_path), side.dump(2) + "\n");
}

Dataset dataset_read(const std::filesystem::path& csv_path) {
  std::istringstream in(read_text_file(csv_path));
  std::string line;
  if (!std::getline(in, line))
    throw std::runtime_error(csv_path.string() + ": empty dataset file");
  const std::vector<std::string> header = split_csv_line(line);
  if (header.size() < 2 || header[0] != "y")
    throw std::runtime_error(csv_path.string() + ": expected header 'y,z0,...', got '" + line +
                             "'");
  for (std::size_t j = 1; j < header.size(); ++j)
    if (header[j] != "z" + std::to_string(j - 1))
      throw std::runtime_error(csv_path.string() + ": unexpected header column '" + header[j] +
                               "'");
  const std::size_t d = header.size() - 1;

  Dataset out;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const std::vector<std::string> fields = split_csv_line(line);
    if (fields.size() != d + 1)
      throw std::runtime_error(csv_path.string() + ": row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(d + 1));
    const std::string ctx = csv_path.string() + " row " + std::to_string(row);
    out.labels.push_back(parse_double(fields[0], ctx));
    std::vector<double> z(d);
    for (std::size_t j = 0; j < d; ++j) z[j] = parse_double(fields[j + 1], ctx);
    out.inputs.push_back(std::move(z));
    ++row;
  }

  const std::filesystem::path side_path = sidecar_path(csv_path);
  if (std::filesystem::exists(side_path)) {
    nlohmann::json side;
    try {
      side = nlohmann::json::parse(read_text_file(side_path));
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error(side_path.string() + ": " + e.what());
    }
    out.meta.task = task_kind_from_string(side.at("task").get<std::string>());
    out.meta.split = split_tag_from_string(side.value("split", "full"));
    out.meta.seed = side.value("seed", std::uint64_t{0});
    if (side.contains("params"))
      for (const auto& [key, value] : side.at("params").items())
        out.meta.params[key] = value.get<double>();
  }
  out.validate();
  return out;
}

}  // namespace mfl
