#ifndef WDDP_CORE_PARTITION_HPP
#define WDDP_CORE_PARTITION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rng.hpp"

namespace wddp {

// Assignment of the training indices across m simulated clients.
struct Partition {
  std::vector<std::int64_t> client_sizes;
  std::vector<std::vector<std::int32_t>> assignments;
  double non_average_u = 1.0;  // n_max / n_min actually achieved

  std::int64_t total() const;
  int clients() const { return static_cast<int>(client_sizes.size()); }

  // Checks disjointness, coverage of 0..train_size-1, and size consistency.
  void validate(std::int64_t train_size) const;

  std::string to_json_string() const;
};

struct PartitionOptions {
  std::int64_t min_client_size = 10;
};

// Two groups of clients: group A holds s_max samples each, group B holds
// s_min, with s_max/s_min close to the requested non-average level u. The
// integer-division remainder goes one sample at a time to the lowest-index
// clients. Assignment indices come from a seeded shuffle.
Partition partition_two_group(std::int64_t train_size, int clients, double non_average_u,
                              int group_a_count, Rng& rng, const PartitionOptions& options = {});

// Sizes drawn via m-1 ordered uniform cut points over the range left after
// reserving min_size per client; deterministic per seed.
Partition partition_random(std::int64_t train_size, int clients, std::int64_t min_size, Rng& rng);

// One client owning all indices in order; the centralized degenerate case.
Partition partition_single(std::int64_t train_size);

}  // namespace wddp

#endif  // WDDP_CORE_PARTITION_HPP
