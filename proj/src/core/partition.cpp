#include "partition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "errors.hpp"

namespace wddp {

namespace {

// Deals shuffled indices 0..train_size-1 out to clients with the given sizes.
Partition assemble(std::vector<std::int64_t> sizes, std::int64_t train_size, Rng& rng) {
  std::vector<std::int32_t> order(static_cast<std::size_t>(train_size));
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);

  Partition partition;
  partition.client_sizes = std::move(sizes);
  partition.assignments.resize(partition.client_sizes.size());
  std::size_t cursor = 0;
  for (std::size_t j = 0; j < partition.client_sizes.size(); ++j) {
    const auto size = static_cast<std::size_t>(partition.client_sizes[j]);
    partition.assignments[j].assign(order.begin() + static_cast<std::ptrdiff_t>(cursor),
                                    order.begin() + static_cast<std::ptrdiff_t>(cursor + size));
    cursor += size;
  }
  const auto [min_it, max_it] =
      std::minmax_element(partition.client_sizes.begin(), partition.client_sizes.end());
  partition.non_average_u = static_cast<double>(*max_it) / static_cast<double>(*min_it);
  return partition;
}

}  // namespace

std::int64_t Partition::total() const {
  return std::accumulate(client_sizes.begin(), client_sizes.end(), std::int64_t{0});
}

void Partition::validate(std::int64_t train_size) const {
  if (client_sizes.size() != assignments.size()) {
    throw ValidationError("partition: sizes/assignments length mismatch");
  }
  std::vector<char> seen(static_cast<std::size_t>(train_size), 0);
  std::int64_t covered = 0;
  for (std::size_t j = 0; j < assignments.size(); ++j) {
    if (static_cast<std::int64_t>(assignments[j].size()) != client_sizes[j]) {
      throw ValidationError("partition: client " + std::to_string(j) + " size mismatch");
    }
    for (const std::int32_t i : assignments[j]) {
      if (i < 0 || i >= train_size || seen[static_cast<std::size_t>(i)]) {
        throw ValidationError("partition: index " + std::to_string(i) +
                              " out of range or assigned twice");
      }
      seen[static_cast<std::size_t>(i)] = 1;
      ++covered;
    }
  }
  if (covered != train_size) {
    throw ValidationError("partition: covers " + std::to_string(covered) + " of " +
                          std::to_string(train_size) + " training indices");
  }
}

std::string Partition::to_json_string() const {
  std::ostringstream out;
  out << "{\"client_sizes\":[";
  for (std::size_t j = 0; j < client_sizes.size(); ++j) {
    out << (j ? "," : "") << client_sizes[j];
  }
  out << "],\"non_average_u\":" << non_average_u << ",\"assignments\":[";
  for (std::size_t j = 0; j < assignments.size(); ++j) {
    out << (j ? ",[" : "[");
    for (std::size_t k = 0; k < assignments[j].size(); ++k) {
      out << (k ? "," : "") << assignments[j][k];
    }
    out << "]";
  }
  out << "]}";
  return out.str();
}

Partition partition_two_group(std::int64_t train_size, int clients, double non_average_u,
                              int group_a_count, Rng& rng, const PartitionOptions& options) {
  if (clients < 1) throw ValidationError("partition: need at least one client");
  if (group_a_count < 1 || group_a_count >= clients) {
    throw ValidationError("partition: group_a_count must lie in [1, clients)");
  }
  if (!(non_average_u >= 1.0)) throw ValidationError("partition: non_average_u must be >= 1");
  if (train_size < clients) throw ValidationError("partition: fewer samples than clients");

  // group_a_count * s_max + (clients - group_a_count) * s_min = train_size
  // with s_max = u * s_min.
  const double a = static_cast<double>(group_a_count);
  const double m = static_cast<double>(clients);
  const double s_min_real = static_cast<double>(train_size) / (a * non_average_u + (m - a));
  const auto s_min = static_cast<std::int64_t>(std::floor(s_min_real));
  const auto s_max = static_cast<std::int64_t>(std::floor(non_average_u * s_min_real));
  if (s_min < options.min_client_size) {
    throw ValidationError("partition infeasible: smallest client would hold " +
                          std::to_string(s_min) + " samples, below the floor of " +
                          std::to_string(options.min_client_size));
  }

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(clients));
  for (int j = 0; j < clients; ++j) sizes[static_cast<std::size_t>(j)] = j < group_a_count ? s_max : s_min;
  std::int64_t remainder = train_size - std::accumulate(sizes.begin(), sizes.end(), std::int64_t{0});
  for (int j = 0; remainder > 0; j = (j + 1) % clients, --remainder) {
    ++sizes[static_cast<std::size_t>(j)];
  }
  return assemble(std::move(sizes), train_size, rng);
}

Partition partition_random(std::int64_t train_size, int clients, std::int64_t min_size, Rng& rng) {
  if (clients < 1) throw ValidationError("partition: need at least one client");
  if (min_size < 1) throw ValidationError("partition: min_size must be >= 1");
  if (train_size < static_cast<std::int64_t>(clients) * min_size) {
    throw ValidationError("partition infeasible: " + std::to_string(train_size) +
                          " samples cannot give " + std::to_string(clients) +
                          " clients at least " + std::to_string(min_size) + " each");
  }
  const std::int64_t spare = train_size - static_cast<std::int64_t>(clients) * min_size;
  std::vector<std::int64_t> cuts;
  cuts.reserve(static_cast<std::size_t>(clients) + 1);
  cuts.push_back(0);
  for (int j = 0; j + 1 < clients; ++j) {
    cuts.push_back(static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(spare) + 1)));
  }
  cuts.push_back(spare);
  std::sort(cuts.begin(), cuts.end());

  std::vector<std::int64_t> sizes(static_cast<std::size_t>(clients));
  for (int j = 0; j < clients; ++j) {
    sizes[static_cast<std::size_t>(j)] =
        min_size + (cuts[static_cast<std::size_t>(j) + 1] - cuts[static_cast<std::size_t>(j)]);
  }
  return assemble(std::move(sizes), train_size, rng);
}

Partition partition_single(std::int64_t train_size) {
  if (train_size < 1) throw ValidationError("partition: empty training set");
  Partition partition;
  partition.client_sizes = {train_size};
  partition.assignments.emplace_back(static_cast<std::size_t>(train_size));
  std::iota(partition.assignments[0].begin(), partition.assignments[0].end(), 0);
  partition.non_average_u = 1.0;
  return partition;
}

}  // namespace wddp
