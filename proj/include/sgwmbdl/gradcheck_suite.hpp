#pragma once

// Central-difference verification of every analytic gradient in the library:
// each layer kind, the SAE loss with its KL term, both GAN objectives, and
// the weak-learner cross-entropy. Shared by the CLI and the acceptance suite.

#include "sgwmbdl/saegan.hpp"

namespace sgwmbdl {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 1e-4;
};

namespace gradcheck_detail {

inline Mat random_mat(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double lo = 0.05,
                      double hi = 0.95) {
  std::uniform_real_distribution<double> u(lo, hi);
  Mat m(rows, cols);
  for (auto& v : m.data) v = u(rng);
  return m;
}

// Smallest |pre-activation| feeding any ReLU along the forward pass; a value
// within a few h of zero means central differences would straddle the kink.
inline double min_relu_preactivation(const Net& net, const Mat& batch) {
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < batch.rows; ++r) {
    std::vector<double> cur(batch.row(r).begin(), batch.row(r).end()), next;
    for (const auto& layer : net.layers()) {
      if (layer->kind_tag() == layer_tag::kReLU)
        for (double v : cur) worst = std::min(worst, std::abs(v));
      layer->apply(cur, next);
      cur.swap(next);
    }
  }
  return worst;
}

inline double min_abs(std::span<const double> v) {
  double m = std::numeric_limits<double>::infinity();
  for (double x : v) m = std::min(m, std::abs(x));
  return m;
}

// Quadratic loss 1/2 ||net(x) - target||^2 against one input.
inline double net_quadratic_check(Net& net, const std::vector<double>& x,
                                  const std::vector<double>& target) {
  net.zero_grads();
  const auto y = net.forward(x);
  std::vector<double> gy(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) gy[i] = y[i] - target[i];
  net.backward(gy);
  const auto analytic = collect_grads(net);
  const auto loss = [&]() {
    const auto out = net.infer(x);
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += 0.5 * (out[i] - target[i]) * (out[i] - target[i]);
    return s;
  };
  return grad_check(net.param_ptrs(), analytic, loss);
}

// Shift every convolution bias upward so no ReLU channel is dead at the
// evaluation point. A dead channel has exactly-zero analytic gradients, and
// at loss magnitudes of order 10 the finite-difference roundoff then swamps
// the relative-error floor no matter how correct backward is.
inline void bias_nudge(Net& net, double shift) {
  for (const auto& layer : net.layers())
    if (layer->kind_tag() == layer_tag::kConv1D || layer->kind_tag() == layer_tag::kDense) {
      auto p = const_cast<Layer&>(*layer).params();
      const auto meta = layer->meta();
      const std::size_t biases = static_cast<std::size_t>(meta[1]);  // out count
      for (std::size_t i = p.size() - biases; i < p.size(); ++i) p[i] += shift;
    }
}

// Cross-entropy check at a nudged evaluation point: among deterministic
// (net, batch) draws, pick the one whose smallest ReLU pre-activation and
// smallest gradient magnitude are most comfortably nonzero.
template <class Builder>
double net_ce_check(Builder build, std::size_t batch, int num_classes, std::uint64_t seed) {
  Net best_net;
  Mat best_x;
  std::vector<int> best_y;
  double best_score = -1.0;
  for (int attempt = 0; attempt < 16; ++attempt) {
    Net net = build(mix_seed(seed, static_cast<std::uint64_t>(attempt), 1));
    bias_nudge(net, 0.8);
    std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(attempt), 2));
    Mat x = random_mat(batch, net.in_shape().size(), rng);
    std::vector<int> y(batch);
    for (auto& label : y) label = static_cast<int>(rng() % num_classes);
    net.zero_grads();
    for (std::size_t r = 0; r < x.rows; ++r) {
      const auto probs = net.forward({x.row(r).begin(), x.row(r).end()});
      net.backward(softmax_ce_grad(probs, y[r]));
    }
    const double score = std::min(min_relu_preactivation(net, x) / 5e-4,
                                  min_abs(collect_grads(net)) / 1e-5);
    if (score > best_score) {
      best_score = score;
      best_net = std::move(net);
      best_x = std::move(x);
      best_y = std::move(y);
    }
    if (best_score >= 1.0) break;
  }
  Net& net = best_net;
  net.zero_grads();
  for (std::size_t r = 0; r < best_x.rows; ++r) {
    const auto probs = net.forward({best_x.row(r).begin(), best_x.row(r).end()});
    net.backward(softmax_ce_grad(probs, best_y[r]));
  }
  const auto analytic = collect_grads(net);
  const auto loss = [&]() {
    double s = 0.0;
    for (std::size_t r = 0; r < best_x.rows; ++r)
      s += softmax_ce_loss(net.infer({best_x.row(r).begin(), best_x.row(r).end()}), best_y[r]);
    return s;
  };
  return grad_check(net.param_ptrs(), analytic, loss);
}

}  // namespace gradcheck_detail

inline std::vector<GradCheckCase> run_gradcheck_suite() {
  using namespace gradcheck_detail;
  std::vector<GradCheckCase> out;
  std::mt19937_64 rng(20240811);

  {  // exact case: linear net, quadratic loss
    std::mt19937_64 r2(7);
    Net net({1, 6});
    net.add(std::make_unique<DenseLayer>(6, 4, r2));
    const Mat x = random_mat(1, 6, rng, -1.0, 1.0);
    const Mat t = random_mat(1, 4, rng, -1.0, 1.0);
    out.push_back({"dense_linear_quadratic",
                   net_quadratic_check(net, {x.row(0).begin(), x.row(0).end()},
                                       {t.row(0).begin(), t.row(0).end()}),
                   1e-7});
  }

  // Every layer kind inside a smooth scalar loss, at a nudged point.
  const auto layer_case = [&](const char* label, auto build) {
    std::mt19937_64 r2(11);
    Net net = build(r2);
    double err = 0.0;
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::mt19937_64 r3(mix_seed(4242, static_cast<std::uint64_t>(attempt)));
      const Mat x = random_mat(1, net.in_shape().size(), r3, -0.9, 0.9);
      const Mat t = random_mat(1, net.out_shape().size(), r3, -0.9, 0.9);
      err = net_quadratic_check(net, {x.row(0).begin(), x.row(0).end()},
                                {t.row(0).begin(), t.row(0).end()});
      if (min_relu_preactivation(net, x) > 5e-4 && min_abs(collect_grads(net)) > 1e-6) break;
    }
    out.push_back({label, err, 1e-4});
  };
  layer_case("conv1d", [](std::mt19937_64& r) {
    Net net({2, 12});
    net.add(std::make_unique<Conv1DLayer>(2, 3, 4, r));
    return net;
  });
  layer_case("mean_pool", [](std::mt19937_64& r) {
    Net net({1, 9});
    net.add(std::make_unique<DenseLayer>(9, 9, r));
    net.add(std::make_unique<MeanPoolLayer>(2));
    return net;
  });
  layer_case("global_avg_pool", [](std::mt19937_64& r) {
    Net net({3, 8});
    net.add(std::make_unique<Conv1DLayer>(3, 4, 3, r));
    net.add(std::make_unique<GlobalAvgPoolLayer>());
    return net;
  });
  layer_case("relu", [](std::mt19937_64& r) {
    Net net({1, 8});
    net.add(std::make_unique<DenseLayer>(8, 6, r));
    net.add(make_activation(ActKind::ReLU));
    net.add(std::make_unique<DenseLayer>(6, 3, r));
    return net;
  });
  layer_case("sigmoid", [](std::mt19937_64& r) {
    Net net({1, 8});
    net.add(std::make_unique<DenseLayer>(8, 6, r));
    net.add(make_activation(ActKind::Sigmoid));
    return net;
  });
  layer_case("tanh", [](std::mt19937_64& r) {
    Net net({1, 8});
    net.add(std::make_unique<DenseLayer>(8, 6, r));
    net.add(make_activation(ActKind::Tanh));
    return net;
  });
  layer_case("softmax", [](std::mt19937_64& r) {
    Net net({1, 8});
    net.add(std::make_unique<DenseLayer>(8, 5, r));
    net.add(make_activation(ActKind::Softmax));
    return net;
  });

  {  // weak-learner cross-entropy through both classifier architectures
    out.push_back({"cnn_softmax_cross_entropy",
                   net_ce_check([](std::uint64_t s) { return make_cnn_classifier(16, 8, s); },
                                12, 8, 1001),
                   1e-4});
    out.push_back({"fcn_softmax_cross_entropy",
                   net_ce_check([](std::uint64_t s) { return make_fcn_classifier(16, 8, s); },
                                12, 8, 1002),
                   1e-4});
  }

  {  // SAE loss with reconstruction + KL sparsity term
    SaeModel sae = make_sae(10, 4, 0.05, 0.7, 99);
    const Mat x = random_mat(5, 10, rng);
    sae.encoder.zero_grads();
    sae.decoder.zero_grads();
    sae_apply_gradients(sae, x);
    std::vector<double> analytic = collect_grads(sae.encoder);
    const auto dec_g = collect_grads(sae.decoder);
    analytic.insert(analytic.end(), dec_g.begin(), dec_g.end());
    auto params = sae.encoder.param_ptrs();
    const auto dec_p = sae.decoder.param_ptrs();
    params.insert(params.end(), dec_p.begin(), dec_p.end());
    const auto loss = [&]() {
      Mat hidden(x.rows, sae.latent_dim()), yhat(x.rows, x.cols);
      for (std::size_t r = 0; r < x.rows; ++r) {
        const auto h = sae.encoder.infer({x.row(r).begin(), x.row(r).end()});
        std::copy(h.begin(), h.end(), hidden.row(r).begin());
        const auto yr = sae.decoder.infer(h);
        std::copy(yr.begin(), yr.end(), yhat.row(r).begin());
      }
      return sae_loss(x, yhat, hidden, sae.sparsity_target, sae.sparsity_weight);
    };
    out.push_back({"sae_loss_with_kl", grad_check(params, analytic, loss), 1e-4});
  }

  {  // GAN objectives at a frozen counterpart
    SaeGanModel m;
    m.sae = make_sae(12, 5, 0.05, 0.1, 17);
    std::mt19937_64 r2(31), r3(37);
    m.generator_core = make_mlp(5, {8}, 5, ActKind::Sigmoid, r2);
    m.discriminator = make_mlp(12, {8}, 1, ActKind::Sigmoid, r3);

    Mat real, noise;
    for (int attempt = 0; attempt < 64; ++attempt) {
      std::mt19937_64 r4(mix_seed(5151, static_cast<std::uint64_t>(attempt)));
      real = random_mat(8, 12, r4);
      noise = random_mat(8, 5, r4, -1.0, 1.0);
      Mat fakes(noise.rows, 12);
      for (std::size_t r = 0; r < noise.rows; ++r) {
        const auto f = gan_detail::generate_one(m, {noise.row(r).begin(), noise.row(r).end()});
        std::copy(f.begin(), f.end(), fakes.row(r).begin());
      }
      m.discriminator.zero_grads();
      discriminator_apply_gradients(m, real, noise);
      const double d_min = min_abs(collect_grads(m.discriminator));
      m.generator_core.zero_grads();
      m.sae.decoder.zero_grads();
      m.discriminator.zero_grads();
      generator_apply_gradients(m, noise);
      const double g_min = min_abs(collect_grads(m.generator_core));
      if (std::min({min_relu_preactivation(m.discriminator, real),
                    min_relu_preactivation(m.discriminator, fakes),
                    min_relu_preactivation(m.generator_core, noise)}) > 5e-4 &&
          std::min(d_min, g_min) > 1e-6)
        break;
    }

    m.discriminator.zero_grads();
    discriminator_apply_gradients(m, real, noise);
    out.push_back({"gan_discriminator_objective",
                   grad_check(m.discriminator.param_ptrs(), collect_grads(m.discriminator),
                              [&]() { return gan_d_loss(m, real, noise); }),
                   1e-4});

    m.generator_core.zero_grads();
    m.sae.decoder.zero_grads();
    m.discriminator.zero_grads();
    generator_apply_gradients(m, noise);
    out.push_back({"gan_generator_objective",
                   grad_check(m.generator_core.param_ptrs(), collect_grads(m.generator_core),
                              [&]() { return gan_g_loss(m, noise); }),
                   1e-4});
  }

  return out;
}

}  // namespace sgwmbdl
