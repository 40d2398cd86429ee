#include "sdsqos/workload.h"

#include <algorithm>
#include <cmath>

namespace sdsqos {
namespace {

uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void GenerateNormal(const WorkloadSpec& spec, const ApplicationSpec& app, double target,
                    const SlotContext& ctx, std::mt19937_64& rng,
                    std::vector<RequestRun>& out) {
  std::vector<double> weights = ServerWeights(spec.imbalance, app.app_id, ctx.num_servers);
  std::discrete_distribution<int> pick_server(weights.begin(), weights.end());
  std::normal_distribution<double> pick_size(spec.mean_size, spec.stddev_size);
  std::bernoulli_distribution pick_read(spec.read_fraction);

  double total = 0;
  NodeId node = app.app_id % ctx.num_nodes;
  while (total < target) {
    double size = std::max(kMinRequestSize, pick_size(rng));
    // The last request is kept only if it lands closer to the target.
    if (total + size > target && target - total < size / 2) break;
    total += size;
    out.push_back(RequestRun{
        .app_id = app.app_id,
        .server_id = pick_server(rng),
        .first_node = node,
        .size = size,
        .count = 1,
        .kind = pick_read(rng) ? IoKind::kRead : IoKind::kWrite,
        .arrival_slot = ctx.slot,
    });
    node = (node + 1) % ctx.num_nodes;
  }
}

void GenerateFixed(const WorkloadSpec& spec, const ApplicationSpec& app, double target,
                   const SlotContext& ctx, std::mt19937_64& rng,
                   std::vector<RequestRun>& out) {
  int64_t remaining = std::llround(target / spec.fixed_size);
  std::vector<double> weights = ServerWeights(spec.imbalance, app.app_id, ctx.num_servers);
  double mass = 1.0;
  NodeId node = app.app_id % ctx.num_nodes;
  // Multinomial split of the request count over servers, one binomial draw
  // per server. Same law as drawing a server per request.
  for (int s = 0; s < ctx.num_servers && remaining > 0; ++s) {
    int64_t here = remaining;
    if (s + 1 < ctx.num_servers) {
      double p = mass > 0 ? std::clamp(weights[s] / mass, 0.0, 1.0) : 1.0;
      here = std::binomial_distribution<int64_t>(remaining, p)(rng);
    }
    mass -= weights[s];
    remaining -= here;
    if (here == 0) continue;
    int64_t reads = std::binomial_distribution<int64_t>(here, spec.read_fraction)(rng);
    for (auto [kind, count] : {std::pair{IoKind::kRead, reads},
                               std::pair{IoKind::kWrite, here - reads}}) {
      if (count == 0) continue;
      out.push_back(RequestRun{
          .app_id = app.app_id,
          .server_id = s,
          .first_node = node,
          .size = spec.fixed_size,
          .count = count,
          .kind = kind,
          .arrival_slot = ctx.slot,
      });
      node = static_cast<NodeId>((node + count) % ctx.num_nodes);
    }
  }
}

}  // namespace

std::mt19937_64 SlotRng(uint64_t seed, int64_t slot) {
  return std::mt19937_64(SplitMix64(seed ^ SplitMix64(static_cast<uint64_t>(slot))));
}

std::vector<double> ServerWeights(double imbalance, AppId app, int num_servers) {
  std::vector<double> w(num_servers);
  double sum = 0;
  for (int s = 0; s < num_servers; ++s) {
    int rank = ((s - app) % num_servers + num_servers) % num_servers;
    w[s] = std::pow(static_cast<double>(rank + 1), -imbalance);
    sum += w[s];
  }
  for (double& x : w) x /= sum;
  return w;
}

std::vector<RequestRun> GenerateSlotRuns(const WorkloadSpec& spec,
                                         std::span<const ApplicationSpec> apps,
                                         const SlotContext& ctx) {
  std::vector<RequestRun> out;
  if (spec.mode == WorkloadMode::kScripted) {
    out = spec.script;
    for (RequestRun& r : out) r.arrival_slot = ctx.slot;
    return out;
  }
  std::mt19937_64 rng = SlotRng(ctx.seed, ctx.slot);
  for (const ApplicationSpec& app : apps) {
    double target = app.desired_bw * spec.offered_load_factor * ctx.slot_duration;
    if (target <= 0) continue;
    if (spec.mode == WorkloadMode::kRandomNormal) {
      GenerateNormal(spec, app, target, ctx, rng, out);
    } else {
      GenerateFixed(spec, app, target, ctx, rng, out);
    }
  }
  return out;
}

std::vector<IORequest> GenerateSlotWorkload(const WorkloadSpec& spec,
                                            std::span<const ApplicationSpec> apps,
                                            const SlotContext& ctx) {
  return Expand(GenerateSlotRuns(spec, apps, ctx), ctx.num_nodes);
}

std::vector<RequestRun> UnbalancedExampleRuns() {
  std::vector<RequestRun> runs;
  const int64_t demand_mb[] = {150, 100, 50};
  for (ServerId s = 0; s < 3; ++s) {
    runs.push_back(RequestRun{.app_id = 0,
                              .server_id = s,
                              .first_node = s,
                              .size = 1.0,
                              .count = demand_mb[s],
                              .kind = IoKind::kWrite,
                              .arrival_slot = 0});
  }
  return runs;
}

std::vector<IORequest> MakeUnbalancedExample() {
  return Expand(UnbalancedExampleRuns(), 3);
}

}  // namespace sdsqos
