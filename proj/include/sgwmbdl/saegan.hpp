#pragma once

#include "sgwmbdl/neuralkit.hpp"

namespace sgwmbdl {

// Sparse autoencoder: sigmoid hidden layer so the KL sparsity penalty is
// defined, sigmoid output matching the [0,1]-normalized feature domain.
struct SaeModel {
  Net encoder;
  Net decoder;
  double sparsity_target = 0.05;  // rho
  double sparsity_weight = 0.1;   // alpha

  int input_dim() const { return encoder.in_shape().size(); }
  int latent_dim() const { return encoder.out_shape().size(); }
};

inline SaeModel make_sae(int input_dim, int latent_dim, double rho, double alpha,
                         std::uint64_t seed) {
  if (input_dim < 1 || latent_dim < 1) throw std::invalid_argument("make_sae: bad dimensions");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("make_sae: rho must lie in (0,1)");
  if (!(alpha >= 0.0)) throw std::invalid_argument("make_sae: alpha must be >= 0");
  SaeModel m;
  m.sparsity_target = rho;
  m.sparsity_weight = alpha;
  std::mt19937_64 enc_rng(mix_seed(seed, 0x5aeULL, 1));
  std::mt19937_64 dec_rng(mix_seed(seed, 0x5aeULL, 2));
  m.encoder = Net({1, input_dim});
  m.encoder.add(std::make_unique<DenseLayer>(input_dim, latent_dim, enc_rng));
  m.encoder.add(make_activation(ActKind::Sigmoid));
  m.decoder = Net({1, latent_dim});
  m.decoder.add(std::make_unique<DenseLayer>(latent_dim, input_dim, dec_rng));
  m.decoder.add(make_activation(ActKind::Sigmoid));
  return m;
}

namespace sae_detail {

inline double kl_bernoulli(double rho, double rho_hat) {
  const double r = clamp_prob(rho_hat);
  return rho * std::log(rho / r) + (1.0 - rho) * std::log((1.0 - rho) / (1.0 - r));
}

inline std::vector<double> column_means(const Mat& h) {
  std::vector<double> m(h.cols, 0.0);
  for (std::size_t r = 0; r < h.rows; ++r)
    for (std::size_t c = 0; c < h.cols; ++c) m[c] += h(r, c);
  for (auto& v : m) v /= static_cast<double>(h.rows);
  return m;
}

}  // namespace sae_detail

// loss = 1/2 ||Y - X||_F^2 + alpha * sum_c KL(rho || rho_hat_c), with
// rho_hat_c the batch mean of hidden unit c clamped away from {0,1}.
inline double sae_loss(const Mat& x, const Mat& y, const Mat& hidden_batch, double rho,
                       double alpha) {
  if (x.rows != y.rows || x.cols != y.cols || hidden_batch.rows != x.rows || x.rows == 0)
    throw std::invalid_argument("sae_loss: shape mismatch");
  double rec = 0.0;
  for (std::size_t i = 0; i < x.data.size(); ++i) {
    const double d = y.data[i] - x.data[i];
    rec += d * d;
  }
  double penalty = 0.0;
  for (double rho_hat : sae_detail::column_means(hidden_batch))
    penalty += sae_detail::kl_bernoulli(rho, rho_hat);
  const double loss = 0.5 * rec + alpha * penalty;
  if (!std::isfinite(loss)) throw std::invalid_argument("sae_loss: non-finite loss");
  return loss;
}

// Computes sae_loss on the batch and accumulates its gradient into the
// encoder/decoder grad buffers (callers zero them first).
inline double sae_apply_gradients(SaeModel& m, const Mat& x) {
  const std::size_t n = x.rows;
  if (n == 0) throw std::invalid_argument("sae_apply_gradients: empty batch");
  const int latent = m.latent_dim();
  const double rho = m.sparsity_target, alpha = m.sparsity_weight;

  Mat hidden(n, latent);
  for (std::size_t r = 0; r < n; ++r) {
    const auto h = m.encoder.infer({x.row(r).begin(), x.row(r).end()});
    std::copy(h.begin(), h.end(), hidden.row(r).begin());
  }
  const auto rho_hat = sae_detail::column_means(hidden);

  std::vector<double> kl_grad(latent, 0.0);
  double penalty = 0.0;
  for (int c = 0; c < latent; ++c) {
    penalty += sae_detail::kl_bernoulli(rho, rho_hat[c]);
    if (rho_hat[c] > kProbEps && rho_hat[c] < 1.0 - kProbEps)
      kl_grad[c] = alpha * (-rho / rho_hat[c] + (1.0 - rho) / (1.0 - rho_hat[c])) /
                   static_cast<double>(n);
  }

  double rec = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const std::vector<double> xi(x.row(r).begin(), x.row(r).end());
    const auto h = m.encoder.forward(xi);
    const auto y = m.decoder.forward(h);
    std::vector<double> gy(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
      const double d = y[i] - xi[i];
      rec += d * d;
      gy[i] = d;
    }
    auto gh = m.decoder.backward(gy);
    for (int c = 0; c < latent; ++c) gh[c] += kl_grad[c];
    m.encoder.backward(gh);
  }
  return 0.5 * rec + alpha * penalty;
}

// Full-dataset sae_loss at the current parameters. May return a non-finite
// value when the model has blown up; callers decide how to report that.
inline double sae_eval_loss(const SaeModel& m, const Mat& x) {
  double rec = 0.0, penalty = 0.0;
  std::vector<double> rho_hat(m.latent_dim(), 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const auto h = m.encoder.infer({x.row(r).begin(), x.row(r).end()});
    for (int c = 0; c < m.latent_dim(); ++c) rho_hat[c] += h[c];
    const auto y = m.decoder.infer(h);
    for (std::size_t j = 0; j < x.cols; ++j)
      rec += (y[j] - x(r, j)) * (y[j] - x(r, j));
  }
  for (double rh : rho_hat)
    penalty += sae_detail::kl_bernoulli(m.sparsity_target, rh / static_cast<double>(x.rows));
  return 0.5 * rec + m.sparsity_weight * penalty;
}

// Minibatch gradient descent on sae_loss; trace records the full-data loss
// after each epoch (index 0 holds the pre-training loss).
inline std::vector<double> train_sae_model(SaeModel& m, const Mat& data, const TrainConfig& cfg) {
  validate(cfg);
  if (data.rows == 0) throw std::invalid_argument("train_sae_model: empty data");
  std::vector<std::size_t> order(data.rows);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> trace{sae_eval_loss(m, data)};
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.seed, 0x5aeedULL, static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < data.rows; start += cfg.batch_size) {
      const std::size_t stop = std::min(data.rows, start + cfg.batch_size);
      Mat batch(stop - start, data.cols);
      for (std::size_t b = start; b < stop; ++b) {
        const auto row = data.row(order[b]);
        std::copy(row.begin(), row.end(), batch.row(b - start).begin());
      }
      m.encoder.zero_grads();
      m.decoder.zero_grads();
      const double loss = sae_apply_gradients(m, batch);
      if (!std::isfinite(loss))
        throw std::runtime_error("train_sae_model: diverged at epoch " + std::to_string(epoch));
      m.encoder.sgd_step(cfg.learning_rate);
      m.decoder.sgd_step(cfg.learning_rate);
    }
    const double epoch_loss = sae_eval_loss(m, data);
    if (!std::isfinite(epoch_loss) || !m.encoder.params_finite() || !m.decoder.params_finite())
      throw std::runtime_error("train_sae_model: diverged at epoch " + std::to_string(epoch));
    trace.push_back(epoch_loss);
  }
  return trace;
}

struct SaeTrainResult {
  SaeModel model;
  std::vector<double> loss_trace;
};

inline SaeTrainResult train_sae(const Mat& data, double rho, double alpha, int latent_dim,
                                const TrainConfig& cfg) {
  SaeTrainResult r;
  r.model = make_sae(static_cast<int>(data.cols), latent_dim, rho, alpha, cfg.seed);
  r.loss_trace = train_sae_model(r.model, data, cfg);
  return r;
}

// ---- SAE-embedded GAN ----

struct SaeGanConfig {
  int latent_dim = 32;
  int gen_hidden = 64;
  int disc_hidden = 64;
  double sparsity_target = 0.05;
  double sparsity_weight = 0.1;
  bool freeze_sae = true;
  TrainConfig sae_train{0.003, 300, 8, 1};
  TrainConfig gan_train{0.02, 300, 8, 1};
};

// Generator core operates in the SAE latent space; the sample path is
// decoder(generator_core(z)) with z ~ uniform(-1,1)^latent.
struct SaeGanModel {
  SaeModel sae;
  Net generator_core;
  Net discriminator;
  bool freeze_sae = true;

  int feature_dim() const { return sae.input_dim(); }
  int latent_dim() const { return sae.latent_dim(); }
};

namespace gan_detail {

inline std::vector<double> generate_one(const SaeGanModel& m, const std::vector<double>& z) {
  auto x = m.sae.decoder.infer(m.generator_core.infer(z));
  for (auto& v : x) v = std::clamp(v, 0.0, 1.0);
  return x;
}

inline Mat draw_noise(int count, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Mat z(count, dim);
  for (auto& v : z.data) v = u(rng);
  return z;
}

}  // namespace gan_detail

// L(D) = E log D(x) + E log(1 - D(G(z))) on the given batches; accumulates
// its gradient into the discriminator grad buffers.
inline double discriminator_apply_gradients(SaeGanModel& m, const Mat& real_batch,
                                            const Mat& noise_batch) {
  if (real_batch.rows == 0 || noise_batch.rows == 0)
    throw std::invalid_argument("discriminator_step: empty batch");
  double loss = 0.0;
  const double inv_r = 1.0 / static_cast<double>(real_batch.rows);
  for (std::size_t r = 0; r < real_batch.rows; ++r) {
    const auto out = m.discriminator.forward({real_batch.row(r).begin(),
                                              real_batch.row(r).end()});
    const double p = clamp_prob(out[0]);
    loss += std::log(p) * inv_r;
    const double g = (out[0] > kProbEps && out[0] < 1.0 - kProbEps) ? inv_r / p : 0.0;
    m.discriminator.backward({g});
  }
  const double inv_z = 1.0 / static_cast<double>(noise_batch.rows);
  for (std::size_t r = 0; r < noise_batch.rows; ++r) {
    const auto fake = gan_detail::generate_one(m, {noise_batch.row(r).begin(),
                                                   noise_batch.row(r).end()});
    const auto out = m.discriminator.forward(fake);
    const double p = clamp_prob(out[0]);
    loss += std::log(1.0 - p) * inv_z;
    const double g = (out[0] > kProbEps && out[0] < 1.0 - kProbEps) ? -inv_z / (1.0 - p) : 0.0;
    m.discriminator.backward({g});
  }
  if (!std::isfinite(loss)) throw std::runtime_error("discriminator_step: non-finite loss");
  return loss;
}

// One ascent step on L(D) over discriminator parameters only; generator and
// SAE untouched.
inline double discriminator_step(SaeGanModel& m, const Mat& real_batch, const Mat& noise_batch,
                                 const TrainConfig& cfg) {
  m.discriminator.zero_grads();
  const double loss = discriminator_apply_gradients(m, real_batch, noise_batch);
  m.discriminator.sgd_step(-cfg.learning_rate);  // ascend
  return loss;
}

// L(G) = E log(1 - D(G(z))); accumulates its gradient into the generator_core
// grad buffers, flowing through the decoder and discriminator.
inline double generator_apply_gradients(SaeGanModel& m, const Mat& noise_batch) {
  if (noise_batch.rows == 0) throw std::invalid_argument("generator_step: empty batch");
  double loss = 0.0;
  const double inv_z = 1.0 / static_cast<double>(noise_batch.rows);
  for (std::size_t r = 0; r < noise_batch.rows; ++r) {
    const auto h = m.generator_core.forward({noise_batch.row(r).begin(),
                                             noise_batch.row(r).end()});
    const auto fake = m.sae.decoder.forward(h);
    const auto out = m.discriminator.forward(fake);
    const double p = clamp_prob(out[0]);
    loss += std::log(1.0 - p) * inv_z;
    const double g = (out[0] > kProbEps && out[0] < 1.0 - kProbEps) ? -inv_z / (1.0 - p) : 0.0;
    const auto gfake = m.discriminator.backward({g});
    const auto gh = m.sae.decoder.backward(gfake);
    m.generator_core.backward(gh);
  }
  if (!std::isfinite(loss)) throw std::runtime_error("generator_step: non-finite loss");
  return loss;
}

// One descent step on L(G) over generator_core parameters (plus the decoder
// when the SAE is unfrozen); discriminator parameters untouched.
inline double generator_step(SaeGanModel& m, const Mat& noise_batch, const TrainConfig& cfg) {
  m.generator_core.zero_grads();
  m.sae.decoder.zero_grads();
  m.discriminator.zero_grads();
  const double loss = generator_apply_gradients(m, noise_batch);
  m.generator_core.sgd_step(cfg.learning_rate);
  if (!m.freeze_sae) m.sae.decoder.sgd_step(cfg.learning_rate);
  m.discriminator.zero_grads();  // scratch from the pass-through
  return loss;
}

// Loss evaluators on the inference path, for finite-difference checks.
inline double gan_d_loss(const SaeGanModel& m, const Mat& real_batch, const Mat& noise_batch) {
  double loss = 0.0;
  for (std::size_t r = 0; r < real_batch.rows; ++r)
    loss += std::log(clamp_prob(
                m.discriminator.infer({real_batch.row(r).begin(), real_batch.row(r).end()})[0])) /
            static_cast<double>(real_batch.rows);
  for (std::size_t r = 0; r < noise_batch.rows; ++r) {
    const auto fake =
        gan_detail::generate_one(m, {noise_batch.row(r).begin(), noise_batch.row(r).end()});
    loss += std::log(1.0 - clamp_prob(m.discriminator.infer(fake)[0])) /
            static_cast<double>(noise_batch.rows);
  }
  return loss;
}

inline double gan_g_loss(const SaeGanModel& m, const Mat& noise_batch) {
  double loss = 0.0;
  for (std::size_t r = 0; r < noise_batch.rows; ++r) {
    const auto h = m.generator_core.infer({noise_batch.row(r).begin(), noise_batch.row(r).end()});
    const auto fake = m.sae.decoder.infer(h);
    loss += std::log(1.0 - clamp_prob(m.discriminator.infer(fake)[0])) /
            static_cast<double>(noise_batch.rows);
  }
  return loss;
}

struct SaeGanTrainResult {
  SaeGanModel model;
  std::vector<double> sae_trace;
  std::vector<double> d_trace;
  std::vector<double> g_trace;
};

// Pretrain the SAE on the class's real samples, then alternate one
// discriminator step and one generator step per minibatch.
inline SaeGanTrainResult train_saegan(const Mat& class_data, const SaeGanConfig& cfg) {
  if (class_data.rows < 2)
    throw std::invalid_argument("train_saegan: need at least 2 real samples");
  validate(cfg.gan_train);
  SaeGanTrainResult out;
  auto sae = train_sae(class_data, cfg.sparsity_target, cfg.sparsity_weight, cfg.latent_dim,
                       cfg.sae_train);
  out.sae_trace = std::move(sae.loss_trace);
  out.model.sae = std::move(sae.model);
  out.model.freeze_sae = cfg.freeze_sae;

  std::mt19937_64 gen_rng(mix_seed(cfg.gan_train.seed, 0x6a9ULL, 1));
  std::mt19937_64 disc_rng(mix_seed(cfg.gan_train.seed, 0x6a9ULL, 2));
  out.model.generator_core =
      make_mlp(cfg.latent_dim, {cfg.gen_hidden}, cfg.latent_dim, ActKind::Sigmoid, gen_rng);
  out.model.discriminator = make_mlp(static_cast<int>(class_data.cols), {cfg.disc_hidden}, 1,
                                     ActKind::Sigmoid, disc_rng);

  std::vector<std::size_t> order(class_data.rows);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 noise_rng(mix_seed(cfg.gan_train.seed, 0x6a9ULL, 3));
  for (int epoch = 0; epoch < cfg.gan_train.epochs; ++epoch) {
    std::mt19937_64 rng(mix_seed(cfg.gan_train.seed, 0x6a9ULL, 4,
                                 static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    double d_sum = 0.0, g_sum = 0.0;
    int batches = 0;
    for (std::size_t start = 0; start < class_data.rows; start += cfg.gan_train.batch_size) {
      const std::size_t stop = std::min(class_data.rows, start + cfg.gan_train.batch_size);
      Mat real(stop - start, class_data.cols);
      for (std::size_t b = start; b < stop; ++b) {
        const auto row = class_data.row(order[b]);
        std::copy(row.begin(), row.end(), real.row(b - start).begin());
      }
      const Mat z1 = gan_detail::draw_noise(static_cast<int>(real.rows), cfg.latent_dim,
                                            noise_rng);
      d_sum += discriminator_step(out.model, real, z1, cfg.gan_train);
      const Mat z2 = gan_detail::draw_noise(static_cast<int>(real.rows), cfg.latent_dim,
                                            noise_rng);
      g_sum += generator_step(out.model, z2, cfg.gan_train);
      ++batches;
    }
    out.d_trace.push_back(d_sum / batches);
    out.g_trace.push_back(g_sum / batches);
    if (!std::isfinite(out.d_trace.back()) || !std::isfinite(out.g_trace.back()))
      throw std::runtime_error("train_saegan: diverged at epoch " + std::to_string(epoch));
  }
  return out;
}

// count samples from the decoder(generator_core(z)) path, clipped to [0,1].
inline Mat generate_samples(const SaeGanModel& m, int count, std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generate_samples: negative count");
  Mat out(count, m.feature_dim());
  std::mt19937_64 rng(mix_seed(seed, 0x9e4ULL));
  const Mat z = gan_detail::draw_noise(count, m.latent_dim(), rng);
  for (int r = 0; r < count; ++r) {
    const auto x = gan_detail::generate_one(m, {z.row(r).begin(), z.row(r).end()});
    std::copy(x.begin(), x.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace sgwmbdl
