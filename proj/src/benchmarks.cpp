#include "clstream/benchmarks.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <map>
#include <numeric>

#include "clstream/error.hpp"
#include "clstream/rng.hpp"

namespace cl {

namespace {

Experience make_experience(std::size_t index, const std::string& stream, Dataset ds, int task_label,
                           std::vector<ClassId> classes, std::uint64_t uid) {
  Experience e;
  e.index = index;
  e.stream_name = stream;
  e.dataset = with_attribute(ds, kTaskLabel, Attribute(ds.size(), task_label));
  e.task_label = task_label;
  e.classes_in_this_experience = std::move(classes);
  e.uid = uid;
  return e;
}

std::vector<std::size_t> rows_with_targets(const Dataset& ds, const std::vector<ClassId>& group) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (std::find(group.begin(), group.end(), ds.target(i)) != group.end()) idx.push_back(i);
  return idx;
}

}  // namespace

Benchmark class_incremental(const Dataset& train, const Dataset& test, std::size_t n_experiences,
                            const ClassIncrementalOptions& options) {
  if (n_experiences == 0) throw InvalidArgument("class_incremental: n_experiences must be >= 1");
  const std::vector<ClassId> classes = train.classes();
  const std::vector<ClassId> test_classes = test.classes();
  if (test_classes != classes) throw InvalidArgument("class_incremental: train and test class sets differ");
  if (classes.size() % n_experiences != 0)
    throw InvalidArgument("class_incremental: " + std::to_string(classes.size()) + " classes not divisible into " +
                          std::to_string(n_experiences) + " experiences");

  std::vector<ClassId> order;
  if (options.fixed_class_order) {
    order = *options.fixed_class_order;
    std::vector<ClassId> sorted = order;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != classes) throw InvalidArgument("class_incremental: fixed_class_order is not a permutation of the classes");
  } else {
    Rng rng(options.class_order_seed);
    for (std::size_t i : shuffled_indices(classes.size(), rng)) order.push_back(classes[i]);
  }

  Benchmark bm;
  bm.n_experiences = n_experiences;
  bm.class_order = order;
  bm.train_stream.name = "train";
  bm.test_stream.name = "test";
  const std::size_t per_exp = classes.size() / n_experiences;
  for (std::size_t e = 0; e < n_experiences; ++e) {
    std::vector<ClassId> group(order.begin() + static_cast<std::ptrdiff_t>(e * per_exp),
                               order.begin() + static_cast<std::ptrdiff_t>((e + 1) * per_exp));
    std::vector<ClassId> sorted_group = group;
    std::sort(sorted_group.begin(), sorted_group.end());
    const int task = options.task_labels ? static_cast<int>(e) : 0;
    const auto tr = rows_with_targets(train, group);
    const auto te = rows_with_targets(test, group);
    bm.train_stream.experiences.push_back(
        make_experience(e, "train", subsample(train, tr), task, sorted_group, e));
    bm.test_stream.experiences.push_back(
        make_experience(e, "test", subsample(test, te), task, sorted_group, n_experiences + e));
  }
  return bm;
}

Benchmark instance_incremental(const Dataset& train, const Dataset& test, std::size_t n_experiences,
                               std::uint64_t seed) {
  if (n_experiences == 0 || n_experiences > train.size())
    throw InvalidArgument("instance_incremental: n_experiences must be in [1, " + std::to_string(train.size()) + "]");
  Rng rng(seed);
  const std::vector<std::size_t> perm = shuffled_indices(train.size(), rng);

  // Class-major, shuffle-ordered within a class, then dealt round-robin so
  // each part gets a near-equal share of every class.
  std::vector<std::size_t> dealt = perm;
  std::stable_sort(dealt.begin(), dealt.end(),
                   [&](std::size_t a, std::size_t b) { return train.target(a) < train.target(b); });
  std::vector<std::size_t> position(train.size());
  for (std::size_t p = 0; p < perm.size(); ++p) position[perm[p]] = p;

  std::vector<std::vector<std::size_t>> parts(n_experiences);
  for (std::size_t j = 0; j < dealt.size(); ++j) parts[j % n_experiences].push_back(dealt[j]);

  Benchmark bm;
  bm.n_experiences = n_experiences;
  bm.class_order = train.classes();
  bm.train_stream.name = "train";
  bm.test_stream.name = "test";
  const Dataset full_test = with_attribute(test, kTaskLabel, Attribute(test.size(), 0));
  for (std::size_t e = 0; e < n_experiences; ++e) {
    auto& part = parts[e];
    std::sort(part.begin(), part.end(), [&](std::size_t a, std::size_t b) { return position[a] < position[b]; });
    Dataset ds = subsample(train, part);
    auto cls = ds.classes();
    bm.train_stream.experiences.push_back(make_experience(e, "train", std::move(ds), 0, std::move(cls), e));
    bm.test_stream.experiences.push_back(
        make_experience(e, "test", full_test, 0, full_test.classes(), n_experiences + e));
  }
  return bm;
}

namespace {

std::vector<std::vector<double>> blob_centers(std::size_t n_classes, std::size_t dim, Rng& rng) {
  std::vector<std::vector<double>> centers(n_classes, std::vector<double>(dim));
  for (auto& c : centers) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (double& v : c) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& v : c) v = 5.0 * v / norm;
  }
  return centers;
}

void check_blob_args(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double spread) {
  if (n_classes == 0 || n_per_class == 0 || dim == 0)
    throw InvalidArgument("gaussian_blobs: counts and dim must be >= 1");
  if (!(spread >= 0.0)) throw InvalidArgument("gaussian_blobs: spread must be non-negative");
}

}  // namespace

Dataset gaussian_blobs(std::size_t n_classes, std::size_t n_per_class, std::size_t dim, double cluster_spread,
                       std::uint64_t seed) {
  check_blob_args(n_classes, n_per_class, dim, cluster_spread);
  Rng rng(seed);
  const auto centers = blob_centers(n_classes, dim, rng);
  Matrix x(n_classes * n_per_class, dim);
  std::vector<ClassId> y;
  std::size_t r = 0;
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t i = 0; i < n_per_class; ++i, ++r) {
      for (std::size_t j = 0; j < dim; ++j) x(r, j) = centers[c][j] + cluster_spread * rng.normal();
      y.push_back(static_cast<ClassId>(c));
    }
  return Dataset(std::move(x), std::move(y));
}

std::pair<Dataset, Dataset> gaussian_blobs_split(std::size_t n_classes, std::size_t n_train_per_class,
                                                 std::size_t n_test_per_class, std::size_t dim,
                                                 double cluster_spread, std::uint64_t seed) {
  if (n_test_per_class == 0) throw InvalidArgument("gaussian_blobs_split: n_test_per_class must be >= 1");
  const std::size_t per = n_train_per_class + n_test_per_class;
  const Dataset all = gaussian_blobs(n_classes, per, dim, cluster_spread, seed);
  std::vector<std::size_t> tr, te;
  for (std::size_t c = 0; c < n_classes; ++c)
    for (std::size_t i = 0; i < per; ++i) (i < n_train_per_class ? tr : te).push_back(c * per + i);
  return {subsample(all, tr), subsample(all, te)};
}

namespace {

std::vector<unsigned char> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::uint32_t be32(const std::vector<unsigned char>& b, std::size_t off) {
  return (std::uint32_t{b[off]} << 24) | (std::uint32_t{b[off + 1]} << 16) | (std::uint32_t{b[off + 2]} << 8) |
         std::uint32_t{b[off + 3]};
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = read_file(images_path);
  const auto lab = read_file(labels_path);

  if (img.size() < 16) throw FormatError(images_path.string() + ": truncated IDX header");
  if (be32(img, 0) != 0x00000803) throw FormatError(images_path.string() + ": bad magic, expected 0x00000803");
  const std::uint64_t n = be32(img, 4), rows = be32(img, 8), cols = be32(img, 12);
  const std::uint64_t pixels = rows * cols;
  if (img.size() != 16 + n * pixels)
    throw FormatError(images_path.string() + ": payload size does not match header (truncated or trailing bytes)");

  if (lab.size() < 8) throw FormatError(labels_path.string() + ": truncated IDX header");
  if (be32(lab, 0) != 0x00000801) throw FormatError(labels_path.string() + ": bad magic, expected 0x00000801");
  const std::uint64_t n_labels = be32(lab, 4);
  if (lab.size() != 8 + n_labels) throw FormatError(labels_path.string() + ": payload size does not match header");
  if (n_labels != n) throw FormatError("IDX image count " + std::to_string(n) + " != label count " + std::to_string(n_labels));

  Matrix x(n, pixels);
  auto values = x.values();
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(img[16 + i]) / 255.0;
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<ClassId>(lab[8 + i]);
  return Dataset(std::move(x), std::move(y));
}

Benchmark split_mnist(std::size_t n_experiences, const std::filesystem::path& data_dir, std::uint64_t seed,
                      std::optional<std::vector<ClassId>> fixed_class_order) {
  const Dataset train = load_idx(data_dir / kMnistTrainImages, data_dir / kMnistTrainLabels);
  const Dataset test = load_idx(data_dir / kMnistTestImages, data_dir / kMnistTestLabels);
  ClassIncrementalOptions opts;
  opts.class_order_seed = seed;
  opts.fixed_class_order = std::move(fixed_class_order);
  return class_incremental(train, test, n_experiences, opts);
}

}  // namespace cl
