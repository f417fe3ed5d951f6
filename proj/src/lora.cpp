#include "mfl/lora.hpp"

#include <cmath>
#include <stdexcept>

#include "mfl/optim.hpp"
#include "mfl/rng.hpp"

namespace mfl {

namespace {

Matrix gaussian_matrix(std::size_t rows, std::size_t cols, double scale, rng::Stream& stream) {
  Matrix m(rows, cols);
  for (double& v : m.data) v = scale * stream.gauss();
  return m;
}

LoraData draw_examples(const Matrix& map, std::size_t n, double noise_std,
                       rng::Stream& stream) {
  LoraData data;
  data.inputs.reserve(n);
  data.targets.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(map.cols);
    for (double& v : z) v = stream.gauss();
    std::vector<double> y = matvec(map, z);
    if (noise_std > 0.0)
      for (double& v : y) v += noise_std * stream.gauss();
    data.inputs.push_back(std::move(z));
    data.targets.push_back(std::move(y));
  }
  return data;
}

}  // namespace

void LoraData::validate() const {
  if (inputs.empty()) throw std::invalid_argument("lora data is empty");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("lora data has " + std::to_string(inputs.size()) +
                                " inputs but " + std::to_string(targets.size()) + " targets");
  const std::size_t d = inputs.front().size();
  const std::size_t k = targets.front().size();
  if (d == 0 || k == 0) throw std::invalid_argument("lora data has a zero dimension");
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != d || targets[i].size() != k)
      throw std::invalid_argument("lora data row " + std::to_string(i) +
                                  " has inconsistent dimensions");
  }
}

std::pair<LoraTask, LoraData> gen_lowrank_task(std::size_t k, std::size_t d,
                                               std::size_t target_rank, std::size_t n,
                                               double noise_std, std::uint64_t seed) {
  if (k == 0 || d == 0) throw std::invalid_argument("gen_lowrank_task: k and d must be positive");
  if (target_rank == 0 || target_rank > std::min(k, d))
    throw std::invalid_argument("gen_lowrank_task: target_rank " + std::to_string(target_rank) +
                                " out of range for " + std::to_string(k) + "x" +
                                std::to_string(d));
  if (n == 0) throw std::invalid_argument("gen_lowrank_task: need at least one example");
  if (noise_std < 0.0) throw std::invalid_argument("gen_lowrank_task: noise_std must be >= 0");

  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  LoraTask task;
  task.target_rank = target_rank;
  task.n = n;
  task.noise_std = noise_std;
  task.seed = seed;

  rng::Stream map_stream(rng::derive_seed(seed, "lowrank_maps"));
  task.base = gaussian_matrix(k, d, scale, map_stream);
  const Matrix u = gaussian_matrix(k, target_rank, scale, map_stream);
  const Matrix v = gaussian_matrix(target_rank, d, 1.0, map_stream);
  task.target = task.base + matmul(u, v);

  rng::Stream data_stream(rng::derive_seed(seed, "lowrank_data"));
  LoraData data = draw_examples(task.target, n, noise_std, data_stream);
  return {std::move(task), std::move(data)};
}

LoraData sample_task_data(const LoraTask& task, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("sample_task_data: need at least one example");
  rng::Stream stream(rng::derive_seed(seed, "lowrank_data"));
  return draw_examples(task.target, n, task.noise_std, stream);
}

std::vector<double> lora_forward(const Matrix& base, const LoraAdapter& adapter,
                                 std::span<const double> z) {
  adapter.validate();
  if (base.cols != z.size() || adapter.in_dim() != z.size() || adapter.out_dim() != base.rows)
    throw std::invalid_argument("lora_forward: incompatible shapes");
  // base z + scale * up (down z); never forms the k x d delta.
  std::vector<double> out = matvec(base, z);
  const std::vector<double> low = matvec(adapter.down, z);
  const std::vector<double> corr = matvec(adapter.up, low);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += adapter.scale * corr[i];
  return out;
}

void LoraTrainConfig::validate() const {
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  if (lambda < 0.0) throw std::invalid_argument("lambda must be >= 0");
  if (l2_coeff < 0.0) throw std::invalid_argument("l2_coeff must be >= 0");
  if (weight_decay < 0.0) throw std::invalid_argument("weight_decay must be >= 0");
  if (epochs == 0) throw std::invalid_argument("epochs must be positive");
  if (init_std < 0.0) throw std::invalid_argument("init_std must be >= 0");
}

double lora_loss_grad(const Matrix& base, const LoraAdapter& adapter, const LoraData& data,
                      double l2_coeff, Matrix* grad_down, Matrix* grad_up) {
  adapter.validate();
  data.validate();
  const std::size_t k = base.rows;
  const std::size_t d = base.cols;
  const std::size_t n = data.size();
  if (data.inputs.front().size() != d || data.targets.front().size() != k)
    throw std::invalid_argument("lora data shaped " + std::to_string(data.targets.front().size()) +
                                "x" + std::to_string(data.inputs.front().size()) +
                                " does not match base " + std::to_string(k) + "x" +
                                std::to_string(d));

  if (grad_down) *grad_down = Matrix(adapter.rank(), d);
  if (grad_up) *grad_up = Matrix(k, adapter.rank());

  const double inv_nk = 1.0 / (static_cast<double>(n) * static_cast<double>(k));
  double loss = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const std::vector<double>& z = data.inputs[j];
    const std::vector<double> low = matvec(adapter.down, z);
    std::vector<double> resid = matvec(base, z);
    {
      const std::vector<double> corr = matvec(adapter.up, low);
      for (std::size_t i = 0; i < k; ++i)
        resid[i] += adapter.scale * corr[i] - data.targets[j][i];
    }
    for (double r : resid) loss += r * r;

    if (grad_up) {
      // d/d(up) of |resid|^2 is 2 scale resid low^T.
      for (std::size_t i = 0; i < k; ++i) {
        const double c = 2.0 * adapter.scale * resid[i] * inv_nk;
        for (std::size_t a = 0; a < adapter.rank(); ++a) (*grad_up)(i, a) += c * low[a];
      }
    }
    if (grad_down) {
      // d/d(down) is 2 scale (up^T resid) z^T.
      for (std::size_t a = 0; a < adapter.rank(); ++a) {
        double back = 0.0;
        for (std::size_t i = 0; i < k; ++i) back += adapter.up(i, a) * resid[i];
        const double c = 2.0 * adapter.scale * back * inv_nk;
        for (std::size_t t = 0; t < d; ++t) (*grad_down)(a, t) += c * z[t];
      }
    }
  }
  loss *= inv_nk;

  if (l2_coeff > 0.0) {
    double sq = 0.0;
    for (double v : adapter.down.data) sq += v * v;
    for (double v : adapter.up.data) sq += v * v;
    loss += l2_coeff * sq;
    if (grad_down)
      for (std::size_t i = 0; i < grad_down->data.size(); ++i)
        grad_down->data[i] += 2.0 * l2_coeff * adapter.down.data[i];
    if (grad_up)
      for (std::size_t i = 0; i < grad_up->data.size(); ++i)
        grad_up->data[i] += 2.0 * l2_coeff * adapter.up.data[i];
  }
  return loss;
}

LoraAdapter finetune_lora(const LoraTask& task, std::size_t rank, const LoraTrainConfig& cfg,
                          const LoraData& data) {
  cfg.validate();
  data.validate();
  if (rank == 0) throw std::invalid_argument("finetune_lora: rank must be positive");
  const std::size_t k = task.base.rows;
  const std::size_t d = task.base.cols;

  LoraAdapter adapter;
  adapter.scale = 1.0 / static_cast<double>(rank);
  rng::Stream init(rng::derive_seed(cfg.seed, "lora_init"));
  adapter.down = Matrix(rank, d);
  for (double& v : adapter.down.data) v = cfg.init_std * init.gauss();
  adapter.up = Matrix(k, rank);  // zero start: delta begins at zero

  const std::size_t total = adapter.down.data.size() + adapter.up.data.size();
  AdamWState state = AdamWState::for_size(total);
  state.beta1 = cfg.beta1;
  state.beta2 = cfg.beta2;
  state.eps = cfg.eps;

  std::vector<double> params(total);
  std::vector<double> grad(total);
  auto pack = [&](const Matrix& a, const Matrix& b, std::vector<double>& dst) {
    std::copy(a.data.begin(), a.data.end(), dst.begin());
    std::copy(b.data.begin(), b.data.end(),
              dst.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  };
  auto unpack = [&](const std::vector<double>& src, Matrix& a, Matrix& b) {
    std::copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(a.data.size()),
              a.data.begin());
    std::copy(src.begin() + static_cast<std::ptrdiff_t>(a.data.size()), src.end(),
              b.data.begin());
  };

  rng::Stream noise(rng::derive_seed(cfg.seed, "lora_noise"));
  Matrix grad_down, grad_up;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    lora_loss_grad(task.base, adapter, data, cfg.l2_coeff, &grad_down, &grad_up);
    pack(adapter.down, adapter.up, params);
    pack(grad_down, grad_up, grad);
    noisy_adamw_step(params, grad, state, cfg.eta, cfg.lambda, cfg.weight_decay, noise);
    unpack(params, adapter.down, adapter.up);
  }
  return adapter;
}

double lora_evaluate(const Matrix& base, const Matrix& delta, const LoraData& data) {
  data.validate();
  if (!base.same_shape(delta))
    throw std::invalid_argument("delta shaped " + std::to_string(delta.rows) + "x" +
                                std::to_string(delta.cols) + " does not match base " +
                                std::to_string(base.rows) + "x" + std::to_string(base.cols));
  const Matrix full = base + delta;
  const double inv_k = 1.0 / static_cast<double>(base.rows);
  double total = 0.0;
  for (std::size_t j = 0; j < data.size(); ++j) {
    const std::vector<double> pred = matvec(full, data.inputs[j]);
    double sq = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const double r = pred[i] - data.targets[j][i];
      sq += r * r;
    }
    total += sq * inv_k;
  }
  return total / static_cast<double>(data.size());
}

}  // namespace mfl
