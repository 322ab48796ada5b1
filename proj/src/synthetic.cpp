#include "milkit/synthetic.hpp"

#include <algorithm>
#include <cstdio>

#include "milkit/errors.hpp"
#include "milkit/rng.hpp"

namespace milkit {

SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "gaussian_witness") return SyntheticKind::gaussian_witness;
  if (s == "count_threshold") return SyntheticKind::count_threshold;
  if (s == "distractor") return SyntheticKind::distractor;
  throw ConfigError("unknown synthetic kind: '" + s +
                    "' (expected gaussian_witness, count_threshold or distractor)");
}

const char* synthetic_kind_name(SyntheticKind k) {
  switch (k) {
    case SyntheticKind::gaussian_witness: return "gaussian_witness";
    case SyntheticKind::count_threshold: return "count_threshold";
    case SyntheticKind::distractor: return "distractor";
  }
  return "?";
}

namespace {

std::int64_t size_lo(const SyntheticSpec& s) {
  return std::max<std::int64_t>(1, s.mean_bag_size / 2);
}
std::int64_t size_hi(const SyntheticSpec& s) { return (3 * s.mean_bag_size) / 2; }

std::string bag_name(std::int64_t i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "b%06lld", static_cast<long long>(i));
  return buf;
}

// row-major placement on a near-square grid; threshold-1 L1 edges give the
// usual 4-neighborhood patch graph
Array<std::int64_t> grid_coords(std::int64_t n) {
  std::int64_t width = 1;
  while (width * width < n) ++width;
  Array<std::int64_t> coords({n, 2});
  for (std::int64_t i = 0; i < n; ++i) {
    coords(i, 0) = i / width;
    coords(i, 1) = i % width;
  }
  return coords;
}

void fill_instance(Rng& rng, float* row, std::int64_t d, double mean_axis0,
                   int axis) {
  for (std::int64_t c = 0; c < d; ++c) {
    double v = rng.normal();
    if (c == axis) v += mean_axis0;
    row[c] = static_cast<float>(v);
  }
}

}  // namespace

void validate_spec(const SyntheticSpec& spec) {
  if (spec.n_bags < 1) throw ConfigError("n_bags must be positive");
  if (spec.mean_bag_size < 1) throw ConfigError("mean_bag_size must be positive");
  if (spec.feature_dim < 1) throw ConfigError("feature_dim must be positive");
  if (!(spec.witness_rate > 0.0 && spec.witness_rate < 1.0))
    throw ConfigError("witness_rate must lie in (0,1)");
  if (spec.class_separation <= 0.0)
    throw ConfigError("class_separation must be positive");
  if (spec.witness_rate * static_cast<double>(spec.mean_bag_size) < 1.0)
    throw Error("infeasible witness configuration");
  if (spec.kind == SyntheticKind::count_threshold) {
    if (spec.threshold_k < 1) throw ConfigError("threshold_k must be positive");
    if (spec.threshold_k > size_hi(spec))
      throw Error("infeasible witness configuration");
  }
  if (spec.kind == SyntheticKind::distractor && spec.feature_dim < 2)
    throw Error("infeasible witness configuration");
}

std::vector<Bag> generate(const SyntheticSpec& spec) {
  validate_spec(spec);
  const double sep = spec.class_separation;
  const std::int64_t d = spec.feature_dim;

  std::vector<Bag> bags;
  bags.reserve(static_cast<std::size_t>(spec.n_bags));
  for (std::int64_t i = 0; i < spec.n_bags; ++i) {
    Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
    const bool positive = (i % 2) == 1;  // alternating, exactly balanced

    std::int64_t lo = size_lo(spec);
    const std::int64_t hi = size_hi(spec);
    if (spec.kind == SyntheticKind::count_threshold && positive)
      lo = std::max(lo, spec.threshold_k);
    const std::int64_t n = rng.uniform_int(lo, hi);

    // choose the witness set
    std::vector<std::uint8_t> witness(static_cast<std::size_t>(n), 0);
    std::int64_t n_witness = 0;
    if (spec.kind == SyntheticKind::count_threshold) {
      std::int64_t target;
      if (positive) {
        target = spec.threshold_k;
        for (std::int64_t j = 0; j < n - spec.threshold_k; ++j)
          if (rng.bernoulli(spec.witness_rate)) ++target;
      } else {
        target = rng.uniform_int(0, std::min(spec.threshold_k - 1, n));
      }
      // place `target` witnesses at distinct random positions
      std::vector<std::int64_t> idx(static_cast<std::size_t>(n));
      for (std::int64_t j = 0; j < n; ++j) idx[static_cast<std::size_t>(j)] = j;
      for (std::int64_t j = 0; j < target; ++j) {
        const std::int64_t pick = rng.uniform_int(j, n - 1);
        std::swap(idx[static_cast<std::size_t>(j)], idx[static_cast<std::size_t>(pick)]);
        witness[static_cast<std::size_t>(idx[static_cast<std::size_t>(j)])] = 1;
      }
      n_witness = target;
    } else if (positive) {
      for (std::int64_t j = 0; j < n; ++j) {
        if (rng.bernoulli(spec.witness_rate)) {
          witness[static_cast<std::size_t>(j)] = 1;
          ++n_witness;
        }
      }
      if (n_witness == 0) {
        witness[static_cast<std::size_t>(rng.uniform_int(0, n - 1))] = 1;
        n_witness = 1;
      }
    }

    Bag bag;
    bag.bag_id = bag_name(i);
    bag.features = MatF({n, d});
    for (std::int64_t j = 0; j < n; ++j) {
      float* row = bag.features.row(j);
      if (witness[static_cast<std::size_t>(j)]) {
        fill_instance(rng, row, d, sep, 0);
      } else if (spec.kind == SyntheticKind::distractor &&
                 rng.bernoulli(spec.witness_rate)) {
        fill_instance(rng, row, d, sep, 1);  // distractor component, both classes
      } else {
        fill_instance(rng, row, d, 0.0, 0);
      }
    }

    // label from the generator's instance-level rule
    if (spec.kind == SyntheticKind::count_threshold) {
      bag.label = n_witness >= spec.threshold_k ? 1 : 0;
    } else {
      bag.label = n_witness >= 1 ? 1 : 0;
    }
    // Instance labels mark positive evidence under the bag-level MIL
    // convention: negative bags report all zeros even when they contain
    // decoy instances from the witness component (count_threshold).
    if (bag.label == 0) std::fill(witness.begin(), witness.end(), std::uint8_t{0});
    bag.inst_labels = std::move(witness);
    bag.coords = grid_coords(n);
    bag.adjacency = build_adjacency(*bag.coords, 1.0, DistanceMetric::L1);
    bags.push_back(std::move(bag));
  }
  return bags;
}

}  // namespace milkit
