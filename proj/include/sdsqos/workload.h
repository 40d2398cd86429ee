#ifndef SDSQOS_WORKLOAD_H_
#define SDSQOS_WORKLOAD_H_

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "sdsqos/domain.h"

namespace sdsqos {

// Deterministic per-slot generator state: the same (seed, slot) pair always
// yields the same stream, independent of which slots ran before.
std::mt19937_64 SlotRng(uint64_t seed, int64_t slot);

// Probability that a request of `app` targets each server. Zipf-like over
// server rank with exponent `imbalance`; ranks are rotated by app id so that
// different applications stress different servers.
std::vector<double> ServerWeights(double imbalance, AppId app, int num_servers);

struct SlotContext {
  int num_servers = 1;
  int num_nodes = 1;
  double slot_duration = 1.0;
  int64_t slot = 0;
  uint64_t seed = 0;
};

// Compact form of one slot's arrivals, ordered by app id.
std::vector<RequestRun> GenerateSlotRuns(const WorkloadSpec& spec,
                                         std::span<const ApplicationSpec> apps,
                                         const SlotContext& ctx);

// One slot's arrivals as individual requests.
std::vector<IORequest> GenerateSlotWorkload(const WorkloadSpec& spec,
                                            std::span<const ApplicationSpec> apps,
                                            const SlotContext& ctx);

// Single application, three servers, one slot: 150, 100 and 50 MB of demand
// on servers 0, 1 and 2 as 1 MB requests.
std::vector<RequestRun> UnbalancedExampleRuns();
std::vector<IORequest> MakeUnbalancedExample();

}  // namespace sdsqos

#endif  // SDSQOS_WORKLOAD_H_
