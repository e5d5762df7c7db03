#include "drc/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <thread>

namespace drc {

const char* to_string(ObservationKind kind) {
  switch (kind) {
    case ObservationKind::mask: return "mask";
    case ObservationKind::depth: return "depth";
    case ObservationKind::semantics: return "semantics";
    case ObservationKind::color: return "color";
  }
  return "?";
}

ObservationKind parse_observation_kind(const std::string& name) {
  if (name == "mask") return ObservationKind::mask;
  if (name == "depth") return ObservationKind::depth;
  if (name == "semantics") return ObservationKind::semantics;
  if (name == "color") return ObservationKind::color;
  throw std::invalid_argument("unknown observation kind '" + name + "'");
}

RayObservation RayObservation::mask(double s, double weight) {
  RayObservation o;
  o.kind = ObservationKind::mask;
  o.background = s;
  o.weight = weight;
  return o;
}

RayObservation RayObservation::depth_of(double d, double weight) {
  RayObservation o;
  o.kind = ObservationKind::depth;
  o.depth = d;
  o.weight = weight;
  return o;
}

RayObservation RayObservation::semantics(double d, int label, double weight) {
  RayObservation o;
  o.kind = ObservationKind::semantics;
  o.depth = d;
  o.label = label;
  o.weight = weight;
  return o;
}

RayObservation RayObservation::color_of(const Rgb& c, double weight) {
  RayObservation o;
  o.kind = ObservationKind::color;
  o.color = c;
  o.weight = weight;
  return o;
}

namespace {

void check_probabilities(std::span<const double> x) {
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] >= 0.0 && x[i] <= 1.0)) {
      throw std::domain_error("emptiness probability at position " + std::to_string(i) + " outside [0,1]");
    }
  }
}

void check_lengths(std::span<const double> x, std::span<const double> psi) {
  if (psi.size() != x.size() + 1) {
    throw std::invalid_argument("cost vector has " + std::to_string(psi.size()) + " events for " +
                                std::to_string(x.size()) + " cells (expected cells + 1)");
  }
}

}  // namespace

std::vector<double> event_probabilities(std::span<const double> x) {
  check_probabilities(x);
  std::vector<double> p(x.size() + 1);
  double reach = 1.0;  // probability the ray reaches cell i
  for (std::size_t i = 0; i < x.size(); ++i) {
    p[i] = (1.0 - x[i]) * reach;
    reach *= x[i];
  }
  p.back() = reach;
  return p;
}

EventCosts cost_depth(std::span<const double> depths, double observed_depth, const CostParams& params) {
  if (!(observed_depth > 0.0)) throw std::invalid_argument("observed depth must be > 0");
  EventCosts c;
  c.psi.resize(depths.size() + 1);
  for (std::size_t i = 0; i < depths.size(); ++i) c.psi[i] = std::abs(depths[i] - observed_depth);
  c.psi.back() = std::abs(params.escape_depth - observed_depth);
  return c;
}

EventCosts cost_depth(const RayTrace& trace, double observed_depth, const CostParams& params) {
  return cost_depth(trace.depths(), observed_depth, params);
}

EventCosts cost_mask(std::size_t cells, double background) {
  if (background != 0.0 && background != 1.0) throw std::invalid_argument("mask observation must be 0 or 1");
  EventCosts c;
  c.psi.assign(cells + 1, background);
  c.psi.back() = 1.0 - background;
  return c;
}

EventCosts cost_mask(const RayTrace& trace, double background) { return cost_mask(trace.size(), background); }

EventCosts cost_semantic(std::span<const double> depths, std::span<const double> p, int num_classes,
                         double observed_depth, int observed_class, const CostParams& params) {
  if (num_classes < 1) throw std::invalid_argument("class count must be >= 1");
  if (!(observed_depth > 0.0)) throw std::invalid_argument("observed depth must be > 0");
  if (observed_class < 0 || observed_class >= num_classes) throw std::invalid_argument("observed class out of range");
  const std::size_t k = static_cast<std::size_t>(num_classes);
  if (p.size() != depths.size() * k) throw std::invalid_argument("semantic payload size mismatch");

  EventCosts c;
  c.channels = num_classes;
  c.psi.resize(depths.size() + 1);
  c.dpsi_dp.assign(depths.size() * k, 0.0);
  const double observed_disparity = 1.0 / observed_depth;
  for (std::size_t i = 0; i < depths.size(); ++i) {
    const auto dist = p.subspan(i * k, k);
    double sum = 0.0;
    for (double v : dist) {
      if (!(v >= 0.0)) throw std::domain_error("class probabilities must be nonnegative");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::domain_error("class probabilities must sum to 1");
    const double prob = dist[observed_class];
    const double floored = std::max(prob, params.probability_floor);
    c.psi[i] = std::abs(1.0 / depths[i] - observed_disparity) - params.nll_weight * std::log(floored);
    if (prob >= params.probability_floor) c.dpsi_dp[i * k + observed_class] = -params.nll_weight / prob;
  }
  // Escape: far-plane disparity and a uniform class distribution.
  c.psi.back() = std::abs(1.0 / params.semantic_escape_depth - observed_disparity) +
                 params.nll_weight * std::log(static_cast<double>(num_classes));
  return c;
}

EventCosts cost_color(std::span<const double> p, const Rgb& observed) {
  if (p.size() % 3 != 0) throw std::invalid_argument("color payload size must be a multiple of 3");
  const std::size_t n = p.size() / 3;
  EventCosts c;
  c.channels = 3;
  c.psi.resize(n + 1);
  c.dpsi_dp.resize(p.size());
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (int ch = 0; ch < 3; ++ch) {
      const double diff = p[i * 3 + ch] - observed[ch];
      sq += diff * diff;
      c.dpsi_dp[i * 3 + ch] = diff;
    }
    c.psi[i] = 0.5 * sq;
  }
  double sq = 0.0;
  for (int ch = 0; ch < 3; ++ch) sq += (1.0 - observed[ch]) * (1.0 - observed[ch]);
  c.psi.back() = 0.5 * sq;
  return c;
}

double ray_loss(std::span<const double> x, std::span<const double> psi) {
  check_lengths(x, psi);
  double loss = psi[0];
  double prefix = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    prefix *= x[i];
    loss += (psi[i + 1] - psi[i]) * prefix;
  }
  return loss;
}

std::vector<double> ray_loss_grad_x(std::span<const double> x, std::span<const double> psi) {
  check_lengths(x, psi);
  const std::size_t n = x.size();
  std::vector<double> grad(n);
  if (n == 0) return grad;
  // suffix[k] = sum_{i>=k} (psi(i+1) - psi(i)) prod_{k<j<=i} x_j, accumulated backwards.
  double suffix = 0.0;
  for (std::size_t k = n; k-- > 0;) {
    const double next_x = k + 1 < n ? x[k + 1] : 0.0;
    suffix = (psi[k + 1] - psi[k]) + next_x * suffix;
    grad[k] = suffix;
  }
  double prefix = 1.0;
  for (std::size_t k = 0; k < n; ++k) {
    grad[k] *= prefix;
    prefix *= x[k];
  }
  return grad;
}

std::vector<double> ray_loss_grad_p(std::span<const double> x, const EventCosts& costs) {
  check_lengths(x, costs.psi);
  if (costs.channels <= 0 || costs.dpsi_dp.size() != x.size() * static_cast<std::size_t>(costs.channels)) {
    throw std::invalid_argument("event costs carry no payload derivatives");
  }
  const std::size_t k = static_cast<std::size_t>(costs.channels);
  std::vector<double> grad(costs.dpsi_dp.size());
  double reach = 1.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double prob = (1.0 - x[i]) * reach;
    for (std::size_t c = 0; c < k; ++c) grad[i * k + c] = prob * costs.dpsi_dp[i * k + c];
    reach *= x[i];
  }
  return grad;
}

double mask_loss_closed_form(std::span<const double> x, double background) {
  if (background != 0.0 && background != 1.0) throw std::invalid_argument("mask observation must be 0 or 1");
  double prod = 1.0;
  for (double v : x) prod *= v;
  return std::abs(prod - background);
}

EventCosts event_costs_for(const RayTrace& trace, const RayObservation& obs, const AuxGrid* aux,
                           const CostParams& params) {
  switch (obs.kind) {
    case ObservationKind::mask:
      return cost_mask(trace, obs.background);
    case ObservationKind::depth:
      return cost_depth(trace, obs.depth, params);
    case ObservationKind::semantics:
    case ObservationKind::color: {
      const AuxKind needed = obs.kind == ObservationKind::color ? AuxKind::color : AuxKind::semantics;
      if (!aux || aux->kind() != needed) {
        throw std::invalid_argument(std::string(to_string(obs.kind)) + " observation requires a matching aux grid");
      }
      const std::size_t ch = static_cast<std::size_t>(aux->channels());
      std::vector<double> p(trace.size() * ch);
      for (std::size_t i = 0; i < trace.size(); ++i) {
        const auto cell = aux->cell(trace.entries[i].cell);
        std::copy(cell.begin(), cell.end(), p.begin() + static_cast<std::ptrdiff_t>(i * ch));
      }
      if (obs.kind == ObservationKind::color) return cost_color(p, obs.color);
      return cost_semantic(trace.depths(), p, aux->channels(), obs.depth, obs.label, params);
    }
  }
  throw std::logic_error("unhandled observation kind");
}

namespace {

void accumulate_rays(const OccupancyGrid& occupancy, const AuxGrid* aux, std::span<const RaySample> rays,
                     const CostParams& params, ViewLoss& out) {
  RayTrace tr{occupancy.geometry(), {}};
  std::vector<double> x;
  for (const RaySample& sample : rays) {
    trace_into(occupancy.geometry(), sample.ray, tr);
    x.resize(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) x[i] = occupancy[tr.entries[i].cell];
    const EventCosts costs = event_costs_for(tr, sample.observation, aux, params);
    const double w = sample.observation.weight;
    out.loss += w * ray_loss(x, costs.psi);
    const std::vector<double> gx = ray_loss_grad_x(x, costs.psi);
    for (std::size_t i = 0; i < tr.size(); ++i) out.grad_x[tr.entries[i].cell] += w * gx[i];
    if (costs.channels > 0 && !out.grad_p.empty()) {
      const std::vector<double> gp = ray_loss_grad_p(x, costs);
      const std::size_t ch = static_cast<std::size_t>(costs.channels);
      for (std::size_t i = 0; i < tr.size(); ++i) {
        const std::size_t base = tr.entries[i].cell * ch;
        for (std::size_t c = 0; c < ch; ++c) out.grad_p[base + c] += w * gp[i * ch + c];
      }
    }
    ++out.rays;
  }
}

}  // namespace

ViewLoss view_loss(const OccupancyGrid& occupancy, const AuxGrid* aux, std::span<const RaySample> rays,
                   const ViewLossOptions& options) {
  if (rays.empty()) throw std::invalid_argument("view_loss needs at least one ray");
  if (aux && !(aux->geometry() == occupancy.geometry())) throw std::invalid_argument("aux grid geometry mismatch");
  for (const RaySample& s : rays) {
    if (s.observation.kind == ObservationKind::semantics || s.observation.kind == ObservationKind::color) {
      const AuxKind needed = s.observation.kind == ObservationKind::color ? AuxKind::color : AuxKind::semantics;
      if (!aux || aux->kind() != needed) {
        throw std::invalid_argument(std::string(to_string(s.observation.kind)) +
                                    " observation requires a matching aux grid");
      }
    }
  }
  const std::size_t cells = occupancy.size();
  const std::size_t aux_size = aux ? aux->payload().size() : 0;
  auto fresh = [&] {
    ViewLoss v;
    v.grad_x.assign(cells, 0.0);
    v.grad_p.assign(aux_size, 0.0);
    return v;
  };

  const std::size_t workers =
      options.deterministic ? 1 : std::clamp<std::size_t>(static_cast<std::size_t>(std::max(options.threads, 1)), 1,
                                                          rays.size());
  if (workers == 1) {
    ViewLoss out = fresh();
    accumulate_rays(occupancy, aux, rays, options.cost, out);
    return out;
  }

  std::vector<ViewLoss> partial(workers);
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  const std::size_t chunk = (rays.size() + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    partial[w] = fresh();
    const std::size_t begin = std::min(rays.size(), w * chunk);
    const std::size_t end = std::min(rays.size(), begin + chunk);
    pool.emplace_back([&, w, begin, end] {
      try {
        accumulate_rays(occupancy, aux, rays.subspan(begin, end - begin), options.cost, partial[w]);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  ViewLoss out = std::move(partial[0]);
  for (std::size_t w = 1; w < workers; ++w) {
    out.loss += partial[w].loss;
    out.rays += partial[w].rays;
    for (std::size_t i = 0; i < cells; ++i) out.grad_x[i] += partial[w].grad_x[i];
    for (std::size_t i = 0; i < aux_size; ++i) out.grad_p[i] += partial[w].grad_p[i];
  }
  return out;
}

}  // namespace drc
