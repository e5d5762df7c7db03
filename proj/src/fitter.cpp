#include "drc/fitter.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "drc/error.hpp"
#include "drc/grid_io.hpp"

namespace drc {

Adam::Adam(std::size_t size, AdamParams params) : params_(params), m_(size, 0.0), v_(size, 0.0) {
  if (!(params_.step_size > 0.0)) throw std::invalid_argument("step size must be > 0");
  if (!(params_.beta1 >= 0.0 && params_.beta1 < 1.0) || !(params_.beta2 >= 0.0 && params_.beta2 < 1.0)) {
    throw std::invalid_argument("moment decays must lie in [0,1)");
  }
}

void Adam::step(std::span<double> params, std::span<const double> grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) throw std::invalid_argument("Adam size mismatch");
  ++t_;
  const double c1 = 1.0 - std::pow(params_.beta1, t_);
  const double c2 = 1.0 - std::pow(params_.beta2, t_);
  for (std::size_t i = 0; i < params.size(); ++i) {
    m_[i] = params_.beta1 * m_[i] + (1.0 - params_.beta1) * grad[i];
    v_[i] = params_.beta2 * v_[i] + (1.0 - params_.beta2) * grad[i] * grad[i];
    const double m_hat = m_[i] / c1;
    const double v_hat = v_[i] / c2;
    params[i] -= params_.step_size * m_hat / (std::sqrt(v_hat) + params_.epsilon);
  }
}

double sigmoid(double v) {
  if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
  const double e = std::exp(v);
  return e / (1.0 + e);
}

std::vector<double> chain_sigmoid(std::span<const double> grad, std::span<const double> values) {
  std::vector<double> out(grad.size());
  for (std::size_t i = 0; i < grad.size(); ++i) out[i] = grad[i] * values[i] * (1.0 - values[i]);
  return out;
}

std::vector<double> chain_softmax(std::span<const double> grad, std::span<const double> probs, int channels) {
  const auto k = static_cast<std::size_t>(channels);
  std::vector<double> out(grad.size());
  for (std::size_t base = 0; base < grad.size(); base += k) {
    double dot = 0.0;
    for (std::size_t c = 0; c < k; ++c) dot += probs[base + c] * grad[base + c];
    for (std::size_t c = 0; c < k; ++c) out[base + c] = probs[base + c] * (grad[base + c] - dot);
  }
  return out;
}

namespace {

std::uint64_t view_stream(std::uint64_t seed, int view_index) {
  return seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(view_index) + 1;
}

void softmax_cells(std::span<const double> logits, int channels, std::vector<double>& out) {
  const auto k = static_cast<std::size_t>(channels);
  out.resize(logits.size());
  for (std::size_t base = 0; base < logits.size(); base += k) {
    const double mx = *std::max_element(logits.begin() + static_cast<std::ptrdiff_t>(base),
                                        logits.begin() + static_cast<std::ptrdiff_t>(base + k));
    double sum = 0.0;
    for (std::size_t c = 0; c < k; ++c) sum += out[base + c] = std::exp(logits[base + c] - mx);
    for (std::size_t c = 0; c < k; ++c) out[base + c] /= sum;
  }
}

std::vector<int> select_views(std::size_t available, int requested, std::uint64_t seed, int iteration) {
  std::vector<int> order(available);
  std::iota(order.begin(), order.end(), 0);
  std::size_t take = available;
  if (requested > 0) {
    take = std::min<std::size_t>(available, static_cast<std::size_t>(requested));
  } else if (available > 5) {
    take = 3;
  }
  if (take == available) return order;
  for (std::size_t i = 0; i < take; ++i) {
    const double u = hashed_uniform(seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(iteration), i);
    const std::size_t j = i + static_cast<std::size_t>(u * static_cast<double>(available - i));
    std::swap(order[i], order[j]);
  }
  order.resize(take);
  std::sort(order.begin(), order.end());
  return order;
}

}  // namespace

std::vector<RaySample> sample_rays(const Observation& observation, int n, double foreground_weight,
                                   std::uint64_t seed, int iteration, int view_index) {
  if (n < 1) throw std::invalid_argument("ray count must be >= 1");
  const std::size_t pixels = observation.pixel_count();
  const std::uint64_t stream = view_stream(seed, view_index);
  const int w = observation.camera.width();
  std::vector<RaySample> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    const double u = hashed_uniform(stream, static_cast<std::uint64_t>(iteration), static_cast<std::uint64_t>(k));
    const std::size_t px = std::min(pixels - 1, static_cast<std::size_t>(u * static_cast<double>(pixels)));
    const double weight = observation.foreground(px) ? foreground_weight : 1.0;
    out.push_back(RaySample{observation.pixel_ray(static_cast<int>(px % w), static_cast<int>(px / w)),
                            observation.ray_observation(px, weight)});
  }
  return out;
}

std::vector<RaySample> all_pixel_rays(const Observation& observation, double foreground_weight) {
  std::vector<RaySample> out;
  out.reserve(observation.pixel_count());
  for (int v = 0; v < observation.camera.height(); ++v) {
    for (int u = 0; u < observation.camera.width(); ++u) {
      const std::size_t px = observation.pixel_index(u, v);
      const double weight = observation.foreground(px) ? foreground_weight : 1.0;
      out.push_back(RaySample{observation.pixel_ray(u, v), observation.ray_observation(px, weight)});
    }
  }
  return out;
}

FitResult fit(std::span<const Observation> observations, const GridGeometry& geometry, ObservationKind kind,
              const FitConfig& config) {
  if (observations.empty()) throw std::invalid_argument("fit needs at least one observation");
  for (const Observation& o : observations) {
    if (o.kind != kind) {
      throw std::invalid_argument(std::string("observation kind ") + to_string(o.kind) + " does not match fit kind " +
                                  to_string(kind));
    }
  }
  if (config.iterations < 0) throw std::invalid_argument("iterations must be >= 0");
  if (config.rays_per_iteration < 1) throw std::invalid_argument("rays per iteration must be >= 1");
  if (config.views_per_iteration < 0) throw std::invalid_argument("views per iteration must be >= 0");
  if (!(config.foreground_weight > 0.0)) throw std::invalid_argument("foreground weight must be > 0");

  const auto start = std::chrono::steady_clock::now();
  const std::size_t cells = geometry.cell_count();

  int channels = 0;
  std::optional<AuxKind> aux_kind;
  if (kind == ObservationKind::color) {
    aux_kind = AuxKind::color;
    channels = 3;
  } else if (kind == ObservationKind::semantics) {
    aux_kind = AuxKind::semantics;
    channels = observations.front().num_classes;
    for (const Observation& o : observations) {
      if (o.num_classes != channels) throw std::invalid_argument("observations disagree on class count");
    }
  }

  std::vector<double> theta(cells, 0.0);
  std::vector<double> x(cells, 0.5);
  OccupancyGrid grid(geometry, x);
  std::vector<double> phi(cells * static_cast<std::size_t>(channels), 0.0);
  std::vector<double> payload;
  std::optional<AuxGrid> aux;
  if (aux_kind == AuxKind::color) {
    payload.assign(phi.size(), 0.5);
  } else if (aux_kind == AuxKind::semantics) {
    softmax_cells(phi, channels, payload);
  }
  if (aux_kind) aux.emplace(geometry, *aux_kind, channels, payload);

  Adam theta_opt(cells, config.adam);
  Adam phi_opt(phi.size(), config.adam);
  ViewLossOptions vl_opts{config.cost, config.deterministic, config.threads};

  FitReport report;
  report.loss_trace.reserve(static_cast<std::size_t>(config.iterations));
  std::vector<RaySample> rays;
  for (int it = 0; it < config.iterations; ++it) {
    const std::vector<int> views = select_views(observations.size(), config.views_per_iteration, config.seed, it);
    rays.clear();
    const int per_view = std::max(1, config.rays_per_iteration / static_cast<int>(views.size()));
    for (int v : views) {
      const Observation& o = observations[static_cast<std::size_t>(v)];
      std::vector<RaySample> r = config.all_pixels
                                     ? all_pixel_rays(o, config.foreground_weight)
                                     : sample_rays(o, per_view, config.foreground_weight, config.seed, it, v);
      rays.insert(rays.end(), r.begin(), r.end());
    }
    const ViewLoss vl = view_loss(grid, aux ? &*aux : nullptr, rays, vl_opts);
    report.loss_trace.push_back(vl.loss);
    report.ray_counts.push_back(vl.rays);

    theta_opt.step(theta, chain_sigmoid(vl.grad_x, x));
    for (std::size_t i = 0; i < cells; ++i) x[i] = sigmoid(theta[i]);
    grid.replace_values(x);

    if (aux) {
      const std::vector<double> g = aux_kind == AuxKind::color ? chain_sigmoid(vl.grad_p, payload)
                                                               : chain_softmax(vl.grad_p, payload, channels);
      phi_opt.step(phi, g);
      if (aux_kind == AuxKind::color) {
        for (std::size_t i = 0; i < phi.size(); ++i) payload[i] = sigmoid(phi[i]);
      } else {
        softmax_cells(phi, channels, payload);
      }
      aux->replace_payload(payload);
    }
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return FitResult{std::move(grid), std::move(aux), std::move(report)};
}

void write_loss_log(const std::filesystem::path& path, const FitReport& report, ObservationKind kind) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FormatError("cannot open " + path.string() + " for writing");
  out << "iteration\tloss\tmean_ray_loss\tkind\n";
  for (std::size_t i = 0; i < report.loss_trace.size(); ++i) {
    const double rays = i < report.ray_counts.size() ? static_cast<double>(report.ray_counts[i]) : 0.0;
    out << i << '\t' << format_double(report.loss_trace[i]) << '\t'
        << format_double(rays > 0 ? report.loss_trace[i] / rays : 0.0) << '\t' << to_string(kind) << '\n';
  }
}

}  // namespace drc
