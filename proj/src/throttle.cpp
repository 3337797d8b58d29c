#include "flare/throttle.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "flare/error.hpp"
#include "flare/rng.hpp"

namespace flare {

double cost_of_attack(std::size_t n_c, double b_uncomp_mbps, double b_denied_mbps) {
  if (n_c == 0 || !(b_uncomp_mbps > 0) || !(b_denied_mbps > 0))
    throw Error(ErrorKind::InvalidThroughput, "cost_of_attack needs positive inputs");
  if (b_denied_mbps > b_uncomp_mbps)
    throw Error(ErrorKind::InvalidThroughput, "denied throughput exceeds uncompromised throughput");
  return static_cast<double>(n_c) * b_uncomp_mbps / b_denied_mbps;
}

double accuracy_curve(double rounds, std::size_t rounds_to_converge) {
  const double tau = static_cast<double>(rounds_to_converge) / std::log(11.0);
  return 0.99 * (1.0 - std::exp(-rounds / tau));
}

ThrottleSchedule ThrottleSchedule::tuned_for(const ModelProfile& assumed, const ClientProfile& client,
                                             const LinkProfile& link, double denial_frac) {
  const double bytes = static_cast<double>(payload_bytes(assumed.theta));
  const double slow = link.bytes_per_s() * (1.0 - denial_frac);
  const double transfer = bytes / slow;
  const double latency = link.base_latency_ms / 1000.0;
  const double compute = mean_compute_s(assumed, client, Aggregation::FedAvg);
  const double margin = 2.0 * client.jitter_frac * compute + 0.05;
  const double uplink_at = 2 * latency + transfer + compute;

  ThrottleSchedule s;
  s.gated = true;
  s.windows.push_back({0.0, latency + 1.25 * transfer + 0.05});
  s.windows.push_back({std::max(0.0, uplink_at - margin), 1.25 * transfer + 2 * margin});
  return s;
}

double transfer_end(double start, double bytes, double bytes_per_s, double denial,
                    std::span<const std::pair<double, double>> throttled) {
  double t = start;
  double left = bytes;
  const double slow = bytes_per_s * (1.0 - denial);
  for (const auto& [b, e] : throttled) {
    if (left <= 0) break;
    if (e <= t) continue;
    if (b > t) {  // unthrottled stretch before this interval
      const double can = (b - t) * bytes_per_s;
      if (can >= left) return t + left / bytes_per_s;
      left -= can;
      t = b;
    }
    const double can = (e - t) * slow;
    if (can >= left) return t + left / slow;
    left -= can;
    t = e;
  }
  return t + std::max(0.0, left) / bytes_per_s;
}

namespace {

struct ClientState {
  const SessionSpec* spec;
  bool attacked = false;
  double throttled_s = 0.0;
};

std::vector<std::pair<double, double>> arm(const ThrottleSchedule& s, double round_start,
                                           double horizon) {
  std::vector<std::pair<double, double>> out;
  if (!s.gated) {
    out.emplace_back(round_start, horizon);
    return out;
  }
  for (const auto& w : s.windows) out.emplace_back(round_start + w.offset_s, round_start + w.offset_s + w.length_s);
  std::sort(out.begin(), out.end());
  // merge overlaps so the intervals are disjoint
  std::vector<std::pair<double, double>> merged;
  for (const auto& iv : out) {
    if (!merged.empty() && iv.first <= merged.back().second)
      merged.back().second = std::max(merged.back().second, iv.second);
    else
      merged.push_back(iv);
  }
  return merged;
}

double overlap(std::span<const std::pair<double, double>> ivs, double a, double b) {
  double s = 0;
  for (const auto& [x, y] : ivs) s += std::max(0.0, std::min(y, b) - std::max(x, a));
  return s;
}

struct RoundResult {
  double arrival;  // update reaches the server
  std::vector<std::pair<double, double>> throttled;
};

// One client round starting when the server dispatches the model at `start`.
RoundResult client_round(const ClientState& c, double start, std::size_t round, double denial,
                         const ThrottleSchedule& schedule, const ModelProfile& model, Aggregation agg) {
  const auto& spec = *c.spec;
  const double bytes = static_cast<double>(payload_bytes(model.theta));
  const double latency = spec.link.base_latency_ms / 1000.0;
  const double rate = spec.link.bytes_per_s();

  Rng rng(derive_seed(spec.seed, {0x7407, round}));
  double factor = 1.0;
  if (spec.client.jitter_frac > 0) {
    const double sigma = spec.client.jitter_frac;
    factor = std::exp(std::normal_distribution<double>(-0.5 * sigma * sigma, sigma)(rng));
  }
  const double compute = mean_compute_s(model, spec.client, agg) * factor;

  RoundResult r;
  const double d = c.attacked ? denial : 0.0;
  if (c.attacked && denial > 0) r.throttled = arm(schedule, start, start + 1e9);
  const double dl_end = transfer_end(start + latency, bytes, rate, d, r.throttled);
  r.arrival = transfer_end(dl_end + compute + latency, bytes, rate, d, r.throttled);
  return r;
}

}  // namespace

ConvergenceReport emulate_throttle(std::span<const SessionSpec> clients,
                                   std::span<const std::size_t> attacked, double denial_frac,
                                   SyncMode mode, const ThrottleSchedule& schedule) {
  if (clients.empty()) throw Error(ErrorKind::InvalidSpec, "emulate_throttle needs clients");
  if (!(denial_frac >= 0.0 && denial_frac < 1.0))
    throw Error(ErrorKind::InvalidSpec, "denial_frac must lie in [0, 1)");
  for (const auto& c : clients) c.validate();
  const ModelProfile& model = clients[0].model;
  const Aggregation agg = clients[0].aggregation;

  std::vector<ClientState> state;
  for (const auto& c : clients) state.push_back({&c});
  for (auto k : attacked) {
    if (k >= clients.size()) throw Error(ErrorKind::InvalidSpec, "attacked client index out of range");
    state[k].attacked = true;
  }

  const double target = kTargetAccuracy - 1e-12;
  ConvergenceReport rep;
  if (mode == SyncMode::Sync) {
    double t = 0;
    std::size_t n = 0;
    while (true) {
      double round_end = t;
      std::vector<RoundResult> results;
      for (const auto& c : state) {
        results.push_back(client_round(c, t, n, denial_frac, schedule, model, agg));
        round_end = std::max(round_end, results.back().arrival);
      }
      const double next = round_end + kServerAggregation_s;
      for (std::size_t k = 0; k < state.size(); ++k)
        state[k].throttled_s += overlap(results[k].throttled, t, next);
      t = next;
      ++n;
      rep.updates += state.size();
      if (accuracy_curve(static_cast<double>(n), model.rounds_to_converge) >= target) break;
    }
    rep.time_s = t;
    rep.rounds = static_cast<double>(n);
  } else {
    double share_sum = 0;
    for (const auto& c : clients) share_sum += c.client.data_share;
    auto weight = [&](std::size_t k) {
      return agg == Aggregation::WeightedFedAvg ? clients[k].client.data_share / share_sum
                                                : 1.0 / static_cast<double>(clients.size());
    };
    struct Pending {
      double arrival;
      std::size_t client;
      double start;
      std::vector<std::pair<double, double>> throttled;
      bool operator>(const Pending& o) const {
        return arrival > o.arrival || (arrival == o.arrival && client > o.client);
      }
    };
    std::priority_queue<Pending, std::vector<Pending>, std::greater<>> queue;
    std::vector<std::size_t> round_of(state.size(), 0);
    auto dispatch = [&](std::size_t k, double start) {
      auto r = client_round(state[k], start, round_of[k]++, denial_frac, schedule, model, agg);
      queue.push({r.arrival, k, start, std::move(r.throttled)});
    };
    for (std::size_t k = 0; k < state.size(); ++k) dispatch(k, 0.0);
    double progress = 0;
    while (true) {
      const Pending p = queue.top();
      queue.pop();
      progress += weight(p.client);
      ++rep.updates;
      const double done = p.arrival + kServerAggregation_s;
      state[p.client].throttled_s += overlap(p.throttled, p.start, done);
      if (accuracy_curve(progress, model.rounds_to_converge) >= target) {
        rep.time_s = done;
        break;
      }
      dispatch(p.client, done);
    }
    rep.rounds = progress;
  }

  std::size_t n_c = 0;
  double b_uncomp = 0, b_denied = 0;
  for (const auto& c : state) {
    if (!c.attacked) continue;
    ++n_c;
    const double f = std::min(1.0, c.throttled_s / rep.time_s);
    rep.throttled_fraction += f;
    b_uncomp += c.spec->link.throughput_mbps;
    b_denied += c.spec->link.throughput_mbps * (1.0 - denial_frac * f);
  }
  if (n_c > 0) {
    rep.throttled_fraction /= static_cast<double>(n_c);
    rep.cost = cost_of_attack(n_c, b_uncomp / static_cast<double>(n_c), b_denied / static_cast<double>(n_c));
  }
  return rep;
}

}  // namespace flare
