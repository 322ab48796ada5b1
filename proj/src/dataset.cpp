#include "milkit/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "milkit/array_file.hpp"
#include "milkit/errors.hpp"

namespace fs = std::filesystem;

namespace milkit {

namespace {

bool valid_bag_id(const std::string& id) {
  if (id.empty()) return false;
  return std::all_of(id.begin(), id.end(), [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
           (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

}  // namespace

ProcessedMILDataset::ProcessedMILDataset(fs::path root) : root_(std::move(root)) {
  const fs::path manifest = root_ / "manifest.csv";
  std::ifstream is(manifest);
  if (!is) throw Error("cannot open manifest: " + manifest.string());
  std::string line;
  if (!std::getline(is, line) || line != "bag_id,label")
    throw Error("bad manifest header in " + manifest.string());
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos)
      throw Error("bad manifest row: " + line);
    const std::string id = line.substr(0, comma);
    const std::string label_str = line.substr(comma + 1);
    if (!valid_bag_id(id)) throw Error("bad bag_id in manifest: " + id);
    if (label_str != "0" && label_str != "1")
      throw Error("bad label in manifest row: " + line);
    bag_ids_.push_back(id);
    labels_.push_back(label_str == "1" ? 1 : 0);
  }
  if (bag_ids_.empty()) throw Error("empty dataset");
}

int ProcessedMILDataset::manifest_label(const std::string& bag_id) const {
  for (std::size_t i = 0; i < bag_ids_.size(); ++i) {
    if (bag_ids_[i] == bag_id) return labels_[i];
  }
  throw Error("unknown bag_id: " + bag_id);
}

Bag ProcessedMILDataset::load_bag(const std::string& bag_id) const {
  const int manifest_lbl = manifest_label(bag_id);  // throws on unknown id

  Bag bag;
  bag.bag_id = bag_id;
  const fs::path feat = root_ / "features" / (bag_id + ".milt");
  if (!fs::exists(feat)) throw Error("missing features file: " + feat.string());
  bag.features = read_array_f32(feat);
  if (bag.features.ndim() != 2)
    throw Error("features must be 2-D: " + feat.string());
  const std::int64_t n = bag.features.rows();

  bag.label = manifest_lbl;
  const fs::path lbl = root_ / "labels" / (bag_id + ".milt");
  if (fs::exists(lbl)) {
    const Array<float> stored = read_array_f32(lbl);
    if (stored.numel() != 1)
      throw Error("label file must hold a scalar: " + lbl.string());
    const int file_lbl = stored.vec()[0] != 0.0f ? 1 : 0;
    if (file_lbl != manifest_lbl)
      throw Error("label mismatch between manifest and label file for bag '" +
                  bag_id + "'");
  }

  const fs::path il = root_ / "inst_labels" / (bag_id + ".milt");
  if (fs::exists(il)) {
    Array<std::uint8_t> a = read_array_u8(il);
    if (a.numel() != n)
      throw Error("field length mismatch: inst_labels vs features for bag '" +
                  bag_id + "'");
    bag.inst_labels = std::move(a.vec());
  }

  const fs::path co = root_ / "coords" / (bag_id + ".milt");
  if (fs::exists(co)) {
    Array<std::int64_t> a = read_array_i64(co);
    if (a.ndim() != 2 || a.rows() != n)
      throw Error("field length mismatch: coords vs features for bag '" +
                  bag_id + "'");
    bag.coords = std::move(a);
  }

  const fs::path edges = root_ / "adjacency" / (bag_id + ".edges.milt");
  if (fs::exists(edges)) {
    const fs::path weights = root_ / "adjacency" / (bag_id + ".weights.milt");
    if (!fs::exists(weights))
      throw Error("adjacency weights file missing for bag '" + bag_id + "'");
    const Array<std::int64_t> e = read_array_i64(edges);
    const Array<float> w = read_array_f32(weights);
    if (e.ndim() != 2 || e.cols() != 2)
      throw Error("adjacency edges must be E x 2 for bag '" + bag_id + "'");
    if (w.numel() != e.rows())
      throw Error("field length mismatch: adjacency edges vs weights for bag '" +
                  bag_id + "'");
    const std::int64_t n_edges = e.rows();
    std::vector<std::int64_t> rows(static_cast<std::size_t>(n_edges));
    std::vector<std::int64_t> cols(static_cast<std::size_t>(n_edges));
    std::vector<double> vals(static_cast<std::size_t>(n_edges));
    for (std::int64_t i = 0; i < n_edges; ++i) {
      rows[static_cast<std::size_t>(i)] = e(i, 0);
      cols[static_cast<std::size_t>(i)] = e(i, 1);
      vals[static_cast<std::size_t>(i)] = static_cast<double>(w.vec()[static_cast<std::size_t>(i)]);
      if (e(i, 0) < 0 || e(i, 0) >= n || e(i, 1) < 0 || e(i, 1) >= n)
        throw Error("field length mismatch: adjacency vs features for bag '" +
                    bag_id + "'");
    }
    bag.adjacency = SparseMatrix::from_coo(n, rows, cols, vals);
  }

  validate_bag(bag);
  return bag;
}

std::vector<Bag> ProcessedMILDataset::load_all() const {
  std::vector<Bag> bags;
  bags.reserve(bag_ids_.size());
  for (const std::string& id : bag_ids_) bags.push_back(load_bag(id));
  return bags;
}

ProcessedMILDataset save_dataset(const std::vector<Bag>& bags, const fs::path& root) {
  if (bags.empty()) throw Error("empty dataset");
  std::set<std::string> seen;
  for (const Bag& b : bags) {
    validate_bag(b);
    if (!valid_bag_id(b.bag_id))
      throw Error("bag_id must match [A-Za-z0-9_-]+: '" + b.bag_id + "'");
    if (!seen.insert(b.bag_id).second)
      throw Error("duplicate bag_id: '" + b.bag_id + "'");
  }

  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec) throw Error("cannot create dataset root: " + root.string());
  fs::create_directories(root / "features");
  fs::create_directories(root / "labels");
  const bool with_inst = bags.front().inst_labels.has_value();
  const bool with_coords = bags.front().coords.has_value();
  const bool with_adj = bags.front().adjacency.has_value();
  if (with_inst) fs::create_directories(root / "inst_labels");
  if (with_coords) fs::create_directories(root / "coords");
  if (with_adj) fs::create_directories(root / "adjacency");

  std::ofstream manifest(root / "manifest.csv", std::ios::binary | std::ios::trunc);
  if (!manifest) throw Error("cannot write manifest under " + root.string());
  manifest << "bag_id,label\n";

  for (const Bag& b : bags) {
    manifest << b.bag_id << ',' << b.label << '\n';
    write_array(b.features, root / "features" / (b.bag_id + ".milt"));
    Array<float> lbl({}, {static_cast<float>(b.label)});
    write_array(lbl, root / "labels" / (b.bag_id + ".milt"));
    if (b.inst_labels) {
      Array<std::uint8_t> il({b.size()}, *b.inst_labels);
      write_array(il, root / "inst_labels" / (b.bag_id + ".milt"));
    }
    if (b.coords) write_array(*b.coords, root / "coords" / (b.bag_id + ".milt"));
    if (b.adjacency) {
      const SparseMatrix& adj = *b.adjacency;
      const std::int64_t e = adj.nnz();
      Array<std::int64_t> edges({e, 2});
      Array<float> weights({e});
      std::int64_t out = 0;
      for (std::int64_t i = 0; i < adj.size(); ++i) {
        for (std::int64_t p = adj.row_ptr()[static_cast<std::size_t>(i)];
             p < adj.row_ptr()[static_cast<std::size_t>(i) + 1]; ++p, ++out) {
          edges(out, 0) = i;
          edges(out, 1) = adj.col_idx()[static_cast<std::size_t>(p)];
          weights.vec()[static_cast<std::size_t>(out)] =
              static_cast<float>(adj.values()[static_cast<std::size_t>(p)]);
        }
      }
      write_array(edges, root / "adjacency" / (b.bag_id + ".edges.milt"));
      write_array(weights, root / "adjacency" / (b.bag_id + ".weights.milt"));
    }
  }
  manifest.close();
  if (!manifest) throw Error("manifest write failed under " + root.string());
  return ProcessedMILDataset(root);
}

}  // namespace milkit
