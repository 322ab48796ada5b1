#include "milkit/train/splits.hpp"

#include <algorithm>

#include "milkit/errors.hpp"
#include "milkit/rng.hpp"

namespace milkit::train {

namespace {

void shuffle_ids(std::vector<std::string>& ids, Rng& rng) {
  for (std::size_t i = ids.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(
        rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
    std::swap(ids[i - 1], ids[j]);
  }
}

}  // namespace

SplitSet make_splits(const std::vector<std::string>& bag_ids,
                     const std::vector<int>& labels, std::int64_t k,
                     double val_fraction, double test_fraction,
                     std::uint64_t seed) {
  if (bag_ids.size() != labels.size())
    throw Error("make_splits: ids/labels size mismatch");
  if (k < 1) throw ConfigError("number of repetitions must be >= 1");
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("val_fraction must lie in (0,1)");
  if (!(test_fraction >= 0.0 && test_fraction < 1.0))
    throw ConfigError("test_fraction must lie in [0,1)");

  std::vector<std::string> pos, neg;
  for (std::size_t i = 0; i < bag_ids.size(); ++i)
    (labels[i] == 1 ? pos : neg).push_back(bag_ids[i]);

  SplitSet out;
  Rng test_rng(derive_seed(seed, 0x7465737453ULL));
  std::vector<std::string> pool_pos = pos, pool_neg = neg;
  shuffle_ids(pool_pos, test_rng);
  shuffle_ids(pool_neg, test_rng);
  const auto take = [](std::vector<std::string>& from, std::size_t n,
                       std::vector<std::string>& to) {
    for (std::size_t i = 0; i < n && !from.empty(); ++i) {
      to.push_back(from.back());
      from.pop_back();
    }
  };
  take(pool_pos, static_cast<std::size_t>(test_fraction * static_cast<double>(pos.size())),
       out.test);
  take(pool_neg, static_cast<std::size_t>(test_fraction * static_cast<double>(neg.size())),
       out.test);
  std::sort(out.test.begin(), out.test.end());

  for (std::int64_t rep = 0; rep < k; ++rep) {
    Rng rng(derive_seed(seed, 0x726570ULL + static_cast<std::uint64_t>(rep)));
    SplitSet::Repetition r;
    std::vector<std::string> rp = pool_pos, rn = pool_neg;
    shuffle_ids(rp, rng);
    shuffle_ids(rn, rng);
    const std::size_t val_pos =
        std::max<std::size_t>(1, static_cast<std::size_t>(val_fraction * static_cast<double>(rp.size())));
    const std::size_t val_neg =
        std::max<std::size_t>(1, static_cast<std::size_t>(val_fraction * static_cast<double>(rn.size())));
    if (val_pos >= rp.size() || val_neg >= rn.size())
      throw Error("make_splits: not enough bags of each class to split");
    take(rp, val_pos, r.val);
    take(rn, val_neg, r.val);
    r.train = std::move(rp);
    r.train.insert(r.train.end(), rn.begin(), rn.end());
    std::sort(r.val.begin(), r.val.end());
    out.repetitions.push_back(std::move(r));
  }
  return out;
}

}  // namespace milkit::train
