#include "milkit/bag.hpp"

#include <cmath>
#include <cstring>

#include "milkit/errors.hpp"

namespace milkit {

bool Bag::operator==(const Bag& o) const {
  return bag_id == o.bag_id && features == o.features && label == o.label &&
         inst_labels == o.inst_labels && coords == o.coords &&
         adjacency == o.adjacency;
}

void validate_bag(const Bag& bag) {
  const std::int64_t n = bag.features.ndim() == 2 ? bag.features.rows() : 0;
  if (bag.features.ndim() != 2 || n < 1)
    throw Error("bag '" + bag.bag_id + "': features must be a nonempty N x D matrix");
  for (float v : bag.features.vec()) {
    if (!std::isfinite(v))
      throw Error("bag '" + bag.bag_id + "': NaN/Inf in features");
  }
  if (bag.label != 0 && bag.label != 1)
    throw Error("bag '" + bag.bag_id + "': label must be 0 or 1");
  if (bag.inst_labels) {
    if (static_cast<std::int64_t>(bag.inst_labels->size()) != n)
      throw Error("bag '" + bag.bag_id + "': field length mismatch: inst_labels vs features");
    for (auto y : *bag.inst_labels) {
      if (y != 0 && y != 1)
        throw Error("bag '" + bag.bag_id + "': instance labels must be 0 or 1");
    }
    if (bag.label == 0) {
      for (auto y : *bag.inst_labels) {
        if (y != 0)
          throw Error("bag '" + bag.bag_id +
                      "': negative bag with positive instance labels");
      }
    }
  }
  if (bag.coords) {
    if (bag.coords->ndim() != 2 || bag.coords->rows() != n)
      throw Error("bag '" + bag.bag_id + "': field length mismatch: coords vs features");
  }
  if (bag.adjacency) {
    if (bag.adjacency->size() != n)
      throw Error("bag '" + bag.bag_id + "': field length mismatch: adjacency vs features");
    if (bag.adjacency->min_value() < 0.0)
      throw Error("bag '" + bag.bag_id + "': adjacency has negative entries");
    if (!bag.adjacency->has_zero_diagonal())
      throw Error("bag '" + bag.bag_id + "': adjacency diagonal not zero");
    if (!bag.adjacency->is_symmetric())
      throw Error("bag '" + bag.bag_id + "': adjacency not symmetric");
  }
}

namespace {

// all-or-none presence for an optional field across the batch
template <class Getter>
bool optional_field_consistent(const std::vector<Bag>& bags, Getter has) {
  const bool first = has(bags.front());
  for (const Bag& b : bags) {
    if (has(b) != first) return false;
  }
  return true;
}

}  // namespace

Batch collate(const std::vector<Bag>& bags) {
  if (bags.empty()) throw Error("empty batch");
  const std::int64_t b_count = static_cast<std::int64_t>(bags.size());
  const std::int64_t d = bags.front().feature_dim();
  std::int64_t nmax = 0;
  for (const Bag& bag : bags) {
    validate_bag(bag);
    if (bag.feature_dim() != d) throw Error("inconsistent feature dimension");
    nmax = std::max(nmax, bag.size());
  }
  if (!optional_field_consistent(bags, [](const Bag& b) { return b.inst_labels.has_value(); }))
    throw Error("inconsistent optional field: inst_labels");
  if (!optional_field_consistent(bags, [](const Bag& b) { return b.coords.has_value(); }))
    throw Error("inconsistent optional field: coords");
  if (!optional_field_consistent(bags, [](const Bag& b) { return b.adjacency.has_value(); }))
    throw Error("inconsistent optional field: adjacency");
  const bool with_inst = bags.front().inst_labels.has_value();
  const bool with_coords = bags.front().coords.has_value();
  const bool with_adj = bags.front().adjacency.has_value();
  std::int64_t coord_dim = 0;
  if (with_coords) {
    coord_dim = bags.front().coords->cols();
    for (const Bag& bag : bags) {
      if (bag.coords->cols() != coord_dim)
        throw Error("inconsistent optional field: coords");
    }
  }

  Batch out;
  out.features = Array<float>({b_count, nmax, d});
  out.mask = Array<std::uint8_t>({b_count, nmax});
  out.labels.resize(static_cast<std::size_t>(b_count));
  out.sizes.resize(static_cast<std::size_t>(b_count));
  out.bag_ids.resize(static_cast<std::size_t>(b_count));
  if (with_inst) out.inst_labels = Array<std::uint8_t>({b_count, nmax});
  if (with_coords) out.coords = Array<std::int64_t>({b_count, nmax, coord_dim});
  if (with_adj) out.adjacency = std::vector<SparseMatrix>();

  for (std::int64_t i = 0; i < b_count; ++i) {
    const Bag& bag = bags[static_cast<std::size_t>(i)];
    const std::int64_t n = bag.size();
    out.sizes[static_cast<std::size_t>(i)] = n;
    out.labels[static_cast<std::size_t>(i)] = bag.label;
    out.bag_ids[static_cast<std::size_t>(i)] = bag.bag_id;
    std::memcpy(&out.features(i, 0, 0), bag.features.data(),
                sizeof(float) * static_cast<std::size_t>(n * d));
    for (std::int64_t j = 0; j < n; ++j) out.mask(i, j) = 1;
    if (with_inst) {
      for (std::int64_t j = 0; j < n; ++j)
        (*out.inst_labels)(i, j) = (*bag.inst_labels)[static_cast<std::size_t>(j)];
    }
    if (with_coords) {
      std::memcpy(&(*out.coords)(i, 0, 0), bag.coords->data(),
                  sizeof(std::int64_t) * static_cast<std::size_t>(n * coord_dim));
    }
    if (with_adj) out.adjacency->push_back(*bag.adjacency);
  }
  return out;
}

std::vector<Bag> uncollate(const Batch& batch) {
  const std::int64_t b_count = batch.batch_size();
  const std::int64_t nmax = batch.max_instances();
  const std::int64_t d = batch.feature_dim();
  if (static_cast<std::int64_t>(batch.sizes.size()) != b_count ||
      static_cast<std::int64_t>(batch.labels.size()) != b_count ||
      static_cast<std::int64_t>(batch.bag_ids.size()) != b_count ||
      batch.mask.ndim() != 2 || batch.mask.dim(0) != b_count ||
      batch.mask.dim(1) != nmax)
    throw Error("corrupt batch");
  for (std::int64_t i = 0; i < b_count; ++i) {
    std::int64_t mask_count = 0;
    for (std::int64_t j = 0; j < nmax; ++j) {
      const bool live = batch.mask(i, j) != 0;
      if (live && j >= batch.sizes[static_cast<std::size_t>(i)])
        throw Error("corrupt batch");
      if (live) ++mask_count;
    }
    if (mask_count != batch.sizes[static_cast<std::size_t>(i)])
      throw Error("corrupt batch");
  }

  std::vector<Bag> bags;
  bags.reserve(static_cast<std::size_t>(b_count));
  for (std::int64_t i = 0; i < b_count; ++i) {
    const std::int64_t n = batch.sizes[static_cast<std::size_t>(i)];
    Bag bag;
    bag.bag_id = batch.bag_ids[static_cast<std::size_t>(i)];
    bag.label = batch.labels[static_cast<std::size_t>(i)];
    bag.features = MatF({n, d});
    std::memcpy(bag.features.data(), batch.features.data() + i * nmax * d,
                sizeof(float) * static_cast<std::size_t>(n * d));
    if (batch.inst_labels) {
      std::vector<std::uint8_t> il(static_cast<std::size_t>(n));
      for (std::int64_t j = 0; j < n; ++j) il[static_cast<std::size_t>(j)] = (*batch.inst_labels)(i, j);
      bag.inst_labels = std::move(il);
    }
    if (batch.coords) {
      const std::int64_t k = batch.coords->dim(2);
      Array<std::int64_t> c({n, k});
      std::memcpy(c.data(), batch.coords->data() + i * nmax * k,
                  sizeof(std::int64_t) * static_cast<std::size_t>(n * k));
      bag.coords = std::move(c);
    }
    if (batch.adjacency) bag.adjacency = (*batch.adjacency)[static_cast<std::size_t>(i)];
    bags.push_back(std::move(bag));
  }
  return bags;
}

SparseMatrix build_adjacency(const Array<std::int64_t>& coords, double threshold,
                             DistanceMetric metric) {
  if (coords.ndim() != 2 || coords.rows() < 1)
    throw Error("coords must be a nonempty N x k matrix");
  if (threshold < 0.0) throw Error("threshold must be nonnegative");
  const std::int64_t n = coords.rows();
  const std::int64_t k = coords.cols();
  std::vector<std::int64_t> rows, cols;
  std::vector<double> vals;
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t j = i + 1; j < n; ++j) {
      double dist = 0.0;
      switch (metric) {
        case DistanceMetric::L1:
          for (std::int64_t c = 0; c < k; ++c)
            dist += std::abs(static_cast<double>(coords(i, c) - coords(j, c)));
          break;
        case DistanceMetric::L2: {
          double acc = 0.0;
          for (std::int64_t c = 0; c < k; ++c) {
            const double diff = static_cast<double>(coords(i, c) - coords(j, c));
            acc += diff * diff;
          }
          dist = std::sqrt(acc);
          break;
        }
        case DistanceMetric::Linf:
          for (std::int64_t c = 0; c < k; ++c)
            dist = std::max(dist, std::abs(static_cast<double>(coords(i, c) - coords(j, c))));
          break;
      }
      if (dist <= threshold) {
        rows.push_back(i);
        cols.push_back(j);
        vals.push_back(1.0);
        rows.push_back(j);
        cols.push_back(i);
        vals.push_back(1.0);
      }
    }
  }
  return SparseMatrix::from_coo(n, rows, cols, vals);
}

SparseMatrix normalize_adjacency(const SparseMatrix& adj, NormalizeMode mode) {
  if (adj.min_value() < 0.0) throw Error("adjacency has negative entries");
  const std::int64_t n = adj.size();
  std::vector<std::int64_t> rows, cols;
  std::vector<double> vals;

  if (mode == NormalizeMode::symmetric_with_self_loops) {
    // Dhat^-1/2 (A + I) Dhat^-1/2 with Dhat the degrees of A + I
    std::vector<double> deg = adj.degrees();
    for (std::int64_t i = 0; i < n; ++i) deg[static_cast<std::size_t>(i)] += 1.0;
    std::vector<double> dinv(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
      dinv[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg[static_cast<std::size_t>(i)]);
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::int64_t p = adj.row_ptr()[static_cast<std::size_t>(i)];
           p < adj.row_ptr()[static_cast<std::size_t>(i) + 1]; ++p) {
        const std::int64_t j = adj.col_idx()[static_cast<std::size_t>(p)];
        rows.push_back(i);
        cols.push_back(j);
        vals.push_back(adj.values()[static_cast<std::size_t>(p)] *
                       dinv[static_cast<std::size_t>(i)] * dinv[static_cast<std::size_t>(j)]);
      }
      rows.push_back(i);
      cols.push_back(i);
      vals.push_back(dinv[static_cast<std::size_t>(i)] * dinv[static_cast<std::size_t>(i)]);
    }
    return SparseMatrix::from_coo(n, rows, cols, vals);
  }

  const std::vector<double> deg = adj.degrees();
  for (std::int64_t i = 0; i < n; ++i) {
    for (std::int64_t p = adj.row_ptr()[static_cast<std::size_t>(i)];
         p < adj.row_ptr()[static_cast<std::size_t>(i) + 1]; ++p) {
      const std::int64_t j = adj.col_idx()[static_cast<std::size_t>(p)];
      const double w = adj.values()[static_cast<std::size_t>(p)];
      double scaled = 0.0;
      if (mode == NormalizeMode::row) {
        const double di = deg[static_cast<std::size_t>(i)];
        scaled = di > 0.0 ? w / di : 0.0;
      } else {
        const double di = deg[static_cast<std::size_t>(i)];
        const double dj = deg[static_cast<std::size_t>(j)];
        scaled = (di > 0.0 && dj > 0.0) ? w / std::sqrt(di * dj) : 0.0;
      }
      rows.push_back(i);
      cols.push_back(j);
      vals.push_back(scaled);
    }
  }
  return SparseMatrix::from_coo(n, rows, cols, vals);
}

}  // namespace milkit
