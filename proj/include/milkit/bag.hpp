#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "milkit/array.hpp"
#include "milkit/sparse.hpp"

namespace milkit {

/// One labeled MIL example. Instance features are float32, matching the
/// on-disk storage format bit for bit; models upcast to double internally.
struct Bag {
  std::string bag_id;
  MatF features;                                // N x D
  int label = 0;                                // binary bag label
  std::optional<std::vector<std::uint8_t>> inst_labels;  // length N
  std::optional<Array<std::int64_t>> coords;    // N x k
  std::optional<SparseMatrix> adjacency;        // N x N, symmetric, zero diag

  std::int64_t size() const { return features.rows(); }
  std::int64_t feature_dim() const { return features.cols(); }

  bool operator==(const Bag& o) const;
};

/// Throws on any violated Bag invariant (empty bag, NaN/Inf features,
/// mismatched optional field dimensions, asymmetric adjacency, nonzero
/// diagonal, positive instance labels inside a negative bag).
void validate_bag(const Bag& bag);

/// Collated bags: zero-padded features plus a validity mask. Per-bag sparse
/// adjacency is kept as a list (padded dense blocks would be quadratic in
/// the largest bag).
struct Batch {
  Array<float> features;                // B x Nmax x D, zero padded
  Array<std::uint8_t> mask;             // B x Nmax, 1 = real instance
  std::vector<int> labels;              // length B
  std::vector<std::int64_t> sizes;      // length B
  std::optional<Array<std::uint8_t>> inst_labels;      // B x Nmax, zero padded
  std::optional<Array<std::int64_t>> coords;           // B x Nmax x k, zero padded
  std::optional<std::vector<SparseMatrix>> adjacency;  // per-bag, length B
  std::vector<std::string> bag_ids;     // length B

  std::int64_t batch_size() const { return features.dim(0); }
  std::int64_t max_instances() const { return features.dim(1); }
  std::int64_t feature_dim() const { return features.dim(2); }
};

/// Pads and masks a nonempty list of bags, preserving order. Optional fields
/// must be present on all bags or on none.
Batch collate(const std::vector<Bag>& bags);

/// Strips padding using sizes; inverse of collate.
std::vector<Bag> uncollate(const Batch& batch);

enum class DistanceMetric { L1, L2, Linf };

/// Thresholded distance graph over instance coordinates: edge (i, j) iff
/// i != j and distance(coords_i, coords_j) <= threshold. Weight 1.
SparseMatrix build_adjacency(const Array<std::int64_t>& coords, double threshold,
                             DistanceMetric metric);

enum class NormalizeMode { row, symmetric, symmetric_with_self_loops };

/// row: D^-1 A (zero-degree rows stay zero). symmetric: D^-1/2 A D^-1/2.
/// symmetric_with_self_loops: Dhat^-1/2 (A + I) Dhat^-1/2.
SparseMatrix normalize_adjacency(const SparseMatrix& adj, NormalizeMode mode);

}  // namespace milkit
