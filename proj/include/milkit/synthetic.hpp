#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "milkit/bag.hpp"

namespace milkit {

enum class SyntheticKind { gaussian_witness, count_threshold, distractor };

SyntheticKind parse_synthetic_kind(const std::string& s);
const char* synthetic_kind_name(SyntheticKind k);

/// Algorithmic unit-test dataset generator configuration. Bags are
/// deterministic in (spec, seed); each bag gets its own derived RNG stream,
/// grid coordinates and the 4-neighborhood adjacency built from them.
///
/// Generators:
///   gaussian_witness  negatives ~ N(0, I); witnesses ~ N(sep * e1, I);
///                     bag positive iff it contains >= 1 witness.
///   count_threshold   bag positive iff witness count >= threshold_k;
///                     negative bags carry 0..threshold_k-1 witnesses, so
///                     witness presence alone does not separate the classes.
///   distractor        gaussian_witness plus N(sep * e2, I) distractor
///                     instances appearing equally in both classes.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::gaussian_witness;
  std::int64_t n_bags = 100;
  std::int64_t mean_bag_size = 20;
  double witness_rate = 0.1;
  std::int64_t feature_dim = 16;
  double class_separation = 2.0;
  std::int64_t threshold_k = 2;  // count_threshold only
  std::uint64_t seed = 0;
};

/// Throws "infeasible witness configuration" when positive bags cannot be
/// realized under the spec.
void validate_spec(const SyntheticSpec& spec);

std::vector<Bag> generate(const SyntheticSpec& spec);

}  // namespace milkit
