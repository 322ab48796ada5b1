#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "milkit/bag.hpp"

namespace milkit {

/// Processed-dataset directory reader.
///
/// Layout:
///   root/manifest.csv            header "bag_id,label", one row per bag
///   root/features/<id>.milt      float32, N x D
///   root/labels/<id>.milt        float32 scalar
///   root/inst_labels/<id>.milt   uint8, length N          (optional)
///   root/coords/<id>.milt        int64, N x k             (optional)
///   root/adjacency/<id>.edges.milt    int64, E x 2        (optional)
///   root/adjacency/<id>.weights.milt  float32, length E   (optional)
///
/// Bags are loaded one at a time; only the requested bag's files are read.
class ProcessedMILDataset {
 public:
  explicit ProcessedMILDataset(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }
  /// bag_ids in manifest order.
  const std::vector<std::string>& bag_ids() const { return bag_ids_; }
  std::int64_t size() const { return static_cast<std::int64_t>(bag_ids_.size()); }
  int manifest_label(const std::string& bag_id) const;

  Bag load_bag(const std::string& bag_id) const;
  std::vector<Bag> load_all() const;

 private:
  std::filesystem::path root_;
  std::vector<std::string> bag_ids_;
  std::vector<int> labels_;
};

/// Writes bags to `root` in the processed-dataset layout. Fails on duplicate
/// bag ids or an empty list; optional fields are written when present.
ProcessedMILDataset save_dataset(const std::vector<Bag>& bags,
                                 const std::filesystem::path& root);

}  // namespace milkit
