#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "rsvi/errors.hpp"
#include "rsvi/models.hpp"
#include "rsvi/rejection.hpp"
#include "rsvi/special.hpp"

namespace rsvi {
namespace {

void require_positive_hyper(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw DomainError(std::string("DefHyperparams: ") + name + " must be positive");
  }
}

// ln Gam(x; a, b) without the -ln Γ(a) + a ln b constant.
inline double gamma_kernel(double x, double a, double b) { return (a - 1.0) * std::log(x) - b * x; }

}  // namespace

SparseGammaDEF::SparseGammaDEF(std::vector<std::size_t> layer_sizes, CountMatrix data,
                               DefHyperparams hyper)
    : layers_(std::move(layer_sizes)), data_(std::move(data)), hyper_(hyper) {
  if (layers_.empty()) throw DomainError("SparseGammaDEF: need at least one layer");
  for (std::size_t k : layers_) {
    if (k == 0) throw DomainError("SparseGammaDEF: layer sizes must be >= 1");
  }
  if (data_.rows == 0 || data_.cols == 0 || data_.values.size() != data_.rows * data_.cols) {
    throw ContractError("SparseGammaDEF: malformed data matrix");
  }
  require_positive_hyper(hyper_.alpha_z, "alpha_z");
  require_positive_hyper(hyper_.weight_shape, "weight_shape");
  require_positive_hyper(hyper_.weight_rate, "weight_rate");
  require_positive_hyper(hyper_.top_shape, "top_shape");
  require_positive_hyper(hyper_.top_rate, "top_rate");

  std::size_t offset = 0;
  for (std::size_t k : layers_) {
    z_offsets_.push_back(offset);
    offset += data_.rows * k;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    w_offsets_.push_back(offset);
    offset += upper_dim(l) * lower_dim(l);
  }
  total_latents_ = offset;
  for (std::uint32_t x : data_.values) log_factorial_sum_ += log_gamma_fn(x + 1.0);
}

std::size_t SparseGammaDEF::upper_dim(std::size_t layer) const { return layers_[layer]; }

std::size_t SparseGammaDEF::lower_dim(std::size_t layer) const {
  return layer == 0 ? data_.cols : layers_[layer - 1];
}

LatentLayout SparseGammaDEF::layout() const {
  LatentLayout layout;
  for (std::size_t l = 1; l <= layers_.size(); ++l) {
    layout.push_back({"z" + std::to_string(l), LatentFamily::gamma_mean_shape,
                      data_.rows * layers_[l - 1]});
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    layout.push_back({"w" + std::to_string(l), LatentFamily::gamma_mean_shape,
                      upper_dim(l) * lower_dim(l)});
  }
  return layout;
}

double SparseGammaDEF::log_joint(std::span<const double> v) const {
  if (v.size() != total_latents_) throw ContractError("SparseGammaDEF::log_joint: size mismatch");
  for (double x : v) {
    if (!(x > 0.0)) throw DomainError("SparseGammaDEF::log_joint: latents must be positive");
  }
  const std::size_t N = data_.rows;
  const std::size_t D = data_.cols;
  const std::size_t L = layers_.size();
  const double az = hyper_.alpha_z;
  double f = -log_factorial_sum_;

  // Poisson likelihood.
  const double* z1 = v.data() + z_offsets_[0];
  const double* w0 = v.data() + w_offsets_[0];
  const std::size_t K1 = layers_[0];
  for (std::size_t n = 0; n < N; ++n) {
    for (std::size_t d = 0; d < D; ++d) {
      double rate = 0.0;
      for (std::size_t k = 0; k < K1; ++k) rate += z1[n * K1 + k] * w0[k * D + d];
      const std::uint32_t y = data_.at(n, d);
      // A rate that underflowed to zero cannot explain a positive count.
      if (rate == 0.0 && y > 0) return -std::numeric_limits<double>::infinity();
      if (y > 0) f += y * std::log(rate);
      f -= rate;
    }
  }

  // Gamma layers coupled through the weights.
  const double layer_const = az * std::log(az) - log_gamma_fn(az);
  for (std::size_t l = 1; l < L; ++l) {
    const double* z = v.data() + z_offsets_[l - 1];
    const double* zu = v.data() + z_offsets_[l];
    const double* w = v.data() + w_offsets_[l];
    const std::size_t K = layers_[l - 1];
    const std::size_t Ku = layers_[l];
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        double mean = 0.0;
        for (std::size_t ku = 0; ku < Ku; ++ku) mean += zu[n * Ku + ku] * w[ku * K + k];
        const double zz = z[n * K + k];
        f += layer_const - az * std::log(mean) + (az - 1.0) * std::log(zz) - az * zz / mean;
      }
    }
  }

  // Top layer and weight priors.
  const std::size_t top_begin = z_offsets_[L - 1];
  const std::size_t top_end = top_begin + N * layers_[L - 1];
  const double top_const = hyper_.top_shape * std::log(hyper_.top_rate) - log_gamma_fn(hyper_.top_shape);
  for (std::size_t i = top_begin; i < top_end; ++i) {
    f += top_const + gamma_kernel(v[i], hyper_.top_shape, hyper_.top_rate);
  }
  const double w_const =
      hyper_.weight_shape * std::log(hyper_.weight_rate) - log_gamma_fn(hyper_.weight_shape);
  for (std::size_t i = w_offsets_[0]; i < total_latents_; ++i) {
    f += w_const + gamma_kernel(v[i], hyper_.weight_shape, hyper_.weight_rate);
  }
  return f;
}

std::vector<double> SparseGammaDEF::grad(std::span<const double> v) const {
  if (v.size() != total_latents_) throw ContractError("SparseGammaDEF::grad: size mismatch");
  for (double x : v) {
    if (!(x > 0.0)) throw DomainError("SparseGammaDEF::grad: latents must be positive");
  }
  std::vector<double> g(total_latents_, 0.0);
  const std::size_t N = data_.rows;
  const std::size_t D = data_.cols;
  const std::size_t L = layers_.size();
  const double az = hyper_.alpha_z;

  {
    const std::size_t K1 = layers_[0];
    const double* z1 = v.data() + z_offsets_[0];
    const double* w0 = v.data() + w_offsets_[0];
    double* gz1 = g.data() + z_offsets_[0];
    double* gw0 = g.data() + w_offsets_[0];
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t d = 0; d < D; ++d) {
        double rate = 0.0;
        for (std::size_t k = 0; k < K1; ++k) rate += z1[n * K1 + k] * w0[k * D + d];
        const std::uint32_t y = data_.at(n, d);
        const double dr = (y > 0 ? y / rate : 0.0) - 1.0;
        for (std::size_t k = 0; k < K1; ++k) {
          gz1[n * K1 + k] += dr * w0[k * D + d];
          gw0[k * D + d] += dr * z1[n * K1 + k];
        }
      }
    }
  }

  for (std::size_t l = 1; l < L; ++l) {
    const double* z = v.data() + z_offsets_[l - 1];
    const double* zu = v.data() + z_offsets_[l];
    const double* w = v.data() + w_offsets_[l];
    double* gz = g.data() + z_offsets_[l - 1];
    double* gzu = g.data() + z_offsets_[l];
    double* gw = g.data() + w_offsets_[l];
    const std::size_t K = layers_[l - 1];
    const std::size_t Ku = layers_[l];
    for (std::size_t n = 0; n < N; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        double mean = 0.0;
        for (std::size_t ku = 0; ku < Ku; ++ku) mean += zu[n * Ku + ku] * w[ku * K + k];
        const double zz = z[n * K + k];
        gz[n * K + k] += (az - 1.0) / zz - az / mean;
        const double dmean = -az / mean + az * zz / (mean * mean);
        for (std::size_t ku = 0; ku < Ku; ++ku) {
          gzu[n * Ku + ku] += dmean * w[ku * K + k];
          gw[ku * K + k] += dmean * zu[n * Ku + ku];
        }
      }
    }
  }

  const std::size_t top_begin = z_offsets_[L - 1];
  const std::size_t top_end = top_begin + N * layers_[L - 1];
  for (std::size_t i = top_begin; i < top_end; ++i) {
    g[i] += (hyper_.top_shape - 1.0) / v[i] - hyper_.top_rate;
  }
  for (std::size_t i = w_offsets_[0]; i < total_latents_; ++i) {
    g[i] += (hyper_.weight_shape - 1.0) / v[i] - hyper_.weight_rate;
  }
  return g;
}

ModelSpec make_def_model_spec(std::shared_ptr<const SparseGammaDEF> m) {
  ModelSpec spec;
  spec.layout = m->layout();
  spec.log_joint = [m](std::span<const double> z) { return m->log_joint(z); };
  spec.grad_latents = [m](std::span<const double> z) { return m->grad(z); };
  return spec;
}

std::uint64_t draw_poisson(RandomStream& stream, double lambda) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("draw_poisson: bad rate");
  if (lambda == 0.0) return 0;
  if (lambda < 10.0) {
    const double limit = std::exp(-lambda);
    double prod = stream.uniform();
    std::uint64_t k = 0;
    while (prod > limit) {
      prod *= stream.uniform();
      ++k;
    }
    return k;
  }
  // Transformed rejection with squeeze (Hörmann, PTRS).
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = stream.uniform() - 0.5;
    const double v = stream.uniform();
    const double us = 0.5 - std::abs(u);
    const double kf = std::floor((2.0 * a / us + b) * u + lambda + 0.43);
    if (us >= 0.07 && v <= vr) return static_cast<std::uint64_t>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + kf * loglam - log_gamma_fn(kf + 1.0)) {
      return static_cast<std::uint64_t>(kf);
    }
  }
}

SyntheticDefData make_synthetic_def_data(std::span<const std::size_t> layer_sizes,
                                         std::size_t n_obs, std::size_t dim,
                                         const DefHyperparams& hyper, RandomStream& stream,
                                         const SyntheticDefOptions& options) {
  if (n_obs == 0 || dim == 0) throw DomainError("make_synthetic_def_data: sizes must be >= 1");
  // The model object supplies the layout; its data are placeholders here.
  CountMatrix placeholder{n_obs, dim, std::vector<std::uint32_t>(n_obs * dim, 0)};
  const SparseGammaDEF shape_only({layer_sizes.begin(), layer_sizes.end()}, placeholder, hyper);
  const std::size_t L = layer_sizes.size();

  std::map<double, GammaSampler> unit_samplers;
  auto draw_gamma = [&](double shape, double rate) {
    auto it = unit_samplers.find(shape);
    if (it == unit_samplers.end()) {
      it = unit_samplers.emplace(shape, GammaSampler(GammaParams(shape, 1.0), 0)).first;
    }
    return it->second.sample(stream).z / rate;
  };

  SyntheticDefData out;
  out.latents.assign(shape_only.latent_count(), 0.0);
  std::span<double> v(out.latents);

  for (std::size_t l = 0; l < L; ++l) {
    const std::size_t begin = shape_only.w_offset(l);
    const std::size_t count = layer_sizes[l] * (l == 0 ? dim : layer_sizes[l - 1]);
    for (std::size_t i = begin; i < begin + count; ++i) {
      v[i] = options.fixed_weight ? *options.fixed_weight
                                  : draw_gamma(hyper.weight_shape, hyper.weight_rate);
    }
  }
  {
    const std::size_t begin = shape_only.z_offset(L);
    for (std::size_t i = begin; i < begin + n_obs * layer_sizes[L - 1]; ++i) {
      v[i] = draw_gamma(hyper.top_shape, hyper.top_rate);
    }
  }
  for (std::size_t l = L - 1; l >= 1; --l) {
    const std::size_t K = layer_sizes[l - 1];
    const std::size_t Ku = layer_sizes[l];
    const double* zu = v.data() + shape_only.z_offset(l + 1);
    const double* w = v.data() + shape_only.w_offset(l);
    double* z = v.data() + shape_only.z_offset(l);
    for (std::size_t n = 0; n < n_obs; ++n) {
      for (std::size_t k = 0; k < K; ++k) {
        double mean = 0.0;
        for (std::size_t ku = 0; ku < Ku; ++ku) mean += zu[n * Ku + ku] * w[ku * K + k];
        z[n * K + k] = mean > 0.0 ? draw_gamma(hyper.alpha_z, hyper.alpha_z / mean) : 0.0;
      }
    }
  }

  out.counts = CountMatrix{n_obs, dim, std::vector<std::uint32_t>(n_obs * dim, 0)};
  const std::size_t K1 = layer_sizes[0];
  const double* z1 = v.data() + shape_only.z_offset(1);
  const double* w0 = v.data() + shape_only.w_offset(0);
  for (std::size_t n = 0; n < n_obs; ++n) {
    for (std::size_t d = 0; d < dim; ++d) {
      double rate = 0.0;
      for (std::size_t k = 0; k < K1; ++k) rate += z1[n * K1 + k] * w0[k * dim + d];
      out.counts.at(n, d) =
          rate > 0.0 ? static_cast<std::uint32_t>(draw_poisson(stream, rate)) : 0u;
    }
  }
  return out;
}

}  // namespace rsvi
