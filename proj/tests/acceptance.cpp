// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <array>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "clstream/benchmarks.hpp"
#include "clstream/buffers.hpp"
#include "clstream/error.hpp"
#include "clstream/experiment.hpp"
#include "clstream/logging.hpp"
#include "clstream/loss.hpp"
#include "clstream/network.hpp"
#include "support.hpp"

using namespace cl;
namespace fs = std::filesystem;

namespace {

// Collects failed expectations for one criterion.
struct Check {
  std::vector<std::string> failures;
  std::vector<std::string> notes;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  void note(const std::string& s) { notes.push_back(s); }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------------------
// 1. Gradients

double fd_worst_mlp(Check& c) {
  Rng rng(2024);
  const double h = 1e-5;
  double worst = 0.0;
  int nets = 0;
  while (nets < 25) {
    std::vector<std::size_t> layout{1 + rng.uniform_index(5)};
    const std::size_t depth = 1 + rng.uniform_index(3);
    for (std::size_t k = 0; k < depth; ++k) layout.push_back(1 + rng.uniform_index(6));
    layout.back() = std::max<std::size_t>(layout.back(), 2);
    Network net = init_network(layout, rng.next_u64());
    std::size_t n_params = 0;
    for (const Parameter* p : net.parameters()) n_params += p->value.size();
    if (n_params > 100) continue;
    const std::size_t b = 1 + rng.uniform_index(8);
    const Matrix x = test::random_matrix(b, layout.front(), rng, -2, 2);
    ForwardCache probe;
    forward(net, x, probe);
    double kink = INFINITY;
    for (std::size_t k = 0; k < net.layers().size(); ++k)
      if (net.layers()[k].activation == Activation::relu)
        for (double v : probe.pre_activations[k].values()) kink = std::min(kink, std::abs(v));
    if (kink < 1e-3) continue;
    std::vector<ClassId> y(b);
    for (auto& t : y) t = static_cast<ClassId>(rng.uniform_index(layout.back()));
    ++nets;

    ForwardCache cache;
    backward(net, cache, softmax_cross_entropy(forward(net, x, cache), y).dlogits);
    for (Parameter* p : net.parameters())
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double saved = p->value.values()[i];
        p->value.values()[i] = saved + h;
        const double up = softmax_cross_entropy(forward(net, x), y).loss;
        p->value.values()[i] = saved - h;
        const double down = softmax_cross_entropy(forward(net, x), y).loss;
        p->value.values()[i] = saved;
        worst = std::max(worst, test::rel_err((up - down) / (2 * h), p->grad.values()[i]));
      }
  }
  c.note(std::to_string(nets) + " MLPs");
  return worst;
}

double fd_worst_ewc() {
  Rng rng(7);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<std::size_t> hidden{1 + rng.uniform_index(4)};
    Model m = make_model(3, hidden, "incremental", rng.next_u64(), rng.next_u64());
    Experience e;
    e.classes_in_this_experience = {0, 1, 2};
    m.adapt(e);
    EwcPlugin ewc(0.5 + rng.uniform(), 1);
    std::vector<EwcAnchor> anchors;
    for (const Parameter* p : m.parameters()) {
      EwcAnchor a{p->id, test::random_matrix(p->value.rows(), p->value.cols(), rng), Matrix(p->value.rows(), p->value.cols())};
      for (double& f : a.fisher.values()) f = rng.uniform(0.0, 3.0);
      anchors.push_back(std::move(a));
    }
    ewc.add_anchor(0, std::move(anchors));
    m.zero_grads();
    ewc.penalty(m, true);
    for (Parameter* p : m.parameters())
      for (std::size_t i = 0; i < p->value.size(); ++i) {
        const double saved = p->value.values()[i];
        p->value.values()[i] = saved + h;
        const double up = ewc.penalty(m, false);
        p->value.values()[i] = saved - h;
        const double down = ewc.penalty(m, false);
        p->value.values()[i] = saved;
        worst = std::max(worst, test::rel_err((up - down) / (2 * h), p->grad.values()[i]));
      }
  }
  return worst;
}

double fd_worst_lwf() {
  Rng rng(8);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t rows = 1 + rng.uniform_index(5), cols = 2 + rng.uniform_index(4);
    Matrix fresh = test::random_matrix(rows, cols, rng, -2, 2);
    const Matrix old = test::random_matrix(rows, cols, rng, -2, 2);
    std::vector<std::vector<ClassId>> classes(rows);
    for (auto& cls : classes)
      for (std::size_t k = 0; k < cols; ++k) cls.push_back(static_cast<ClassId>(k));
    const double alpha = 0.5 + rng.uniform(), temp = 0.5 + 2.0 * rng.uniform();
    const LossResult d = distillation_loss(fresh, old, classes, alpha, temp);
    for (std::size_t i = 0; i < fresh.size(); ++i) {
      const double saved = fresh.values()[i];
      fresh.values()[i] = saved + h;
      const double up = distillation_loss(fresh, old, classes, alpha, temp).loss;
      fresh.values()[i] = saved - h;
      const double down = distillation_loss(fresh, old, classes, alpha, temp).loss;
      fresh.values()[i] = saved;
      worst = std::max(worst, test::rel_err((up - down) / (2 * h), d.dlogits.values()[i]));
    }
  }
  return worst;
}

void criterion_gradients(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const double mlp = fd_worst_mlp(c), ewc = fd_worst_ewc(), lwf = fd_worst_lwf();
  const double secs = seconds_since(t0);
  c.expect(mlp < 1e-4, "MLP gradient rel. err " + fmt("%.3g", mlp));
  c.expect(ewc < 1e-4, "EWC penalty rel. err " + fmt("%.3g", ewc));
  c.expect(lwf < 1e-4, "LwF penalty rel. err " + fmt("%.3g", lwf));
  c.expect(secs < 10.0, "runtime " + fmt("%.2fs", secs));
  c.note("worst rel. err mlp " + fmt("%.2e", mlp) + ", ewc " + fmt("%.2e", ewc) + ", lwf " + fmt("%.2e", lwf));
  c.note(fmt("%.2fs", secs));
}

// ---------------------------------------------------------------------------
// 2-3. Buffers

Dataset numbered(std::size_t n, double first, const std::vector<ClassId>& classes) {
  Matrix x(n, 1);
  std::vector<ClassId> y(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = first + static_cast<double>(i);
    y[i] = classes[i % classes.size()];
  }
  return Dataset(std::move(x), std::move(y));
}

void criterion_reservoir(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::array<int, 5> hits{};
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    ReservoirBuffer buf(2, derive_seed(static_cast<std::uint64_t>(s), "acceptance-reservoir"));
    for (std::size_t i = 0; i < 5; ++i) buf.update(numbered(1, static_cast<double>(i), {0}));
    const Dataset held = buf.contents();
    for (std::size_t r = 0; r < held.size(); ++r) ++hits[static_cast<std::size_t>(held.raw_row(r)[0])];
  }
  std::string freqs;
  for (int h : hits) {
    const double f = static_cast<double>(h) / trials;
    c.expect(f >= 0.38 && f <= 0.42, "inclusion frequency " + fmt("%.4f", f));
    freqs += fmt(" %.4f", f);
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt("%.2fs", secs));
  c.note("frequencies" + freqs);
  c.note(fmt("%.2fs", secs));
}

void criterion_quotas(Check& c) {
  GroupBalancedBuffer buf(10, 1, GroupBalancedBuffer::Key::class_id);
  buf.update(numbered(20, 0, {0, 1}), 0);
  c.expect(buf.group_sizes() == std::map<std::int64_t, std::size_t>{{0, 5}, {1, 5}}, "two classes give {5,5}");
  buf.update(numbered(10, 100, {2}), 1);
  const auto sizes = buf.group_sizes();
  c.expect(sizes == std::map<std::int64_t, std::size_t>{{0, 4}, {1, 3}, {2, 3}}, "three classes give {4,3,3}");

  Rng rng(99);
  const char* policies[] = {"reservoir", "class_balanced", "experience_balanced"};
  std::size_t operations = 0;
  for (int seq = 0; seq < 1000; ++seq) {
    const std::size_t cap = rng.uniform_index(15);
    auto b = make_buffer(policies[seq % 3], cap, rng.next_u64());
    const std::size_t steps = 1 + rng.uniform_index(6);
    for (std::size_t e = 0; e < steps; ++e) {
      const std::vector<ClassId> classes{static_cast<ClassId>(rng.uniform_index(6)), static_cast<ClassId>(rng.uniform_index(6))};
      b->update(numbered(rng.uniform_index(20), 1000.0 * e, classes), e);
      ++operations;
      c.expect(b->size() <= b->max_size(), "capacity exceeded after update");
      if (rng.uniform_index(4) == 0) {
        b->resize(rng.uniform_index(cap + 5));
        ++operations;
        c.expect(b->size() <= b->max_size(), "capacity exceeded after resize");
      }
    }
  }
  c.note("{4,3,3} after the third class; capacity held over " + std::to_string(operations) + " operations");
}

// ---------------------------------------------------------------------------
// 4. Forgetting ordering

constexpr double kEwcLambda = 1000.0;

struct Outcome {
  double exp0 = 0.0;
  double stream = 0.0;
};

Outcome final_accuracies(const std::string& strategy, std::uint64_t seed) {
  ExperimentConfig c;
  c.seed = seed;
  c.benchmark.synthetic = SyntheticSpec{10, 100, 50, 16, 0.5};
  c.benchmark.n_experiences = 5;
  c.model.hidden = {32};
  c.train.lr = 0.05;
  c.train.epochs = 20;
  c.strategy.name = strategy;
  c.strategy.mem_size = 200;
  c.strategy.lambda = kEwcLambda;
  const Benchmark b = build_benchmark(c);
  auto ep = std::make_shared<EvaluationPlugin>();
  auto s = build_strategy(c, b.train_stream[0].dataset.feature_dim(), ep);
  for (const Experience& e : b.train_stream.experiences) s->train(e);
  Outcome o;
  const std::string exp0 = canonical_name("Acc", Phase::eval, "test", 0, 0, Granularity::experience);
  const std::string stream = canonical_name("Acc", Phase::eval, "test", 0, -1, Granularity::stream);
  for (const MetricValue& v : s->eval(b.test_stream)) {
    if (v.name == exp0) o.exp0 = v.value;
    if (v.name == stream) o.stream = v.value;
  }
  return o;
}

void criterion_forgetting(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  std::map<std::string, Outcome> mean;
  for (const char* name : {"naive", "cumulative", "replay", "ewc"}) {
    Outcome sum;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const Outcome o = final_accuracies(name, seed);
      sum.exp0 += o.exp0 / 5.0;
      sum.stream += o.stream / 5.0;
    }
    mean[name] = sum;
  }
  const double secs = seconds_since(t0);
  c.expect(mean["naive"].exp0 < 0.40, "naive exp0 accuracy " + fmt("%.3f", mean["naive"].exp0));
  c.expect(mean["cumulative"].stream > 0.90, "cumulative stream accuracy " + fmt("%.3f", mean["cumulative"].stream));
  c.expect(mean["replay"].stream >= mean["naive"].stream + 0.15, "replay stream accuracy " + fmt("%.3f", mean["replay"].stream));
  c.expect(mean["ewc"].exp0 >= mean["naive"].exp0, "ewc exp0 retention " + fmt("%.3f", mean["ewc"].exp0));
  c.expect(secs < 120.0, "runtime " + fmt("%.1fs", secs));
  c.note("naive exp0 " + fmt("%.3f", mean["naive"].exp0) + " stream " + fmt("%.3f", mean["naive"].stream));
  c.note("cumulative stream " + fmt("%.3f", mean["cumulative"].stream));
  c.note("replay stream " + fmt("%.3f", mean["replay"].stream));
  c.note("ewc(lambda=" + fmt("%g", kEwcLambda) + ") exp0 " + fmt("%.3f", mean["ewc"].exp0));
  c.note(fmt("%.1fs", secs));
}

// ---------------------------------------------------------------------------
// 5. Head growth

void criterion_adaptation(Check& c) {
  Rng rng(5);
  int probes = 0;
  for (const char* kind : {"incremental", "multihead"}) {
    const std::vector<std::size_t> hidden{8};
    Model m = make_model(4, hidden, kind, 3, 4);
    Experience first;
    first.classes_in_this_experience = {0, 1, 2};
    m.adapt(first);
    Batch probe;
    probe.x = test::random_matrix(6, 4, rng);
    probe.y.assign(6, 0);
    probe.task_labels.assign(6, 0);
    const Matrix before = m.forward(probe);

    m.adapt(first);
    c.expect(m.forward(probe) == before, std::string(kind) + ": adapt is not idempotent");

    Experience second;
    second.classes_in_this_experience = {3, 4, 7};
    m.adapt(second);
    const Matrix after = m.forward(probe);
    for (std::size_t r = 0; r < before.rows(); ++r)
      for (std::size_t col = 0; col < before.cols(); ++col)
        c.expect(after(r, col) == before(r, col), std::string(kind) + ": logit changed after growth");
    ++probes;
  }
  c.note("incremental and multi-head logits bit-identical after growth");
}

// ---------------------------------------------------------------------------
// 6. Dataset algebra

struct Row {
  std::vector<double> x;
  ClassId y;
  std::map<std::string, std::int64_t> attrs;
  bool operator==(const Row&) const = default;
};

Row row_of(const Dataset& ds, std::size_t i) {
  Row r{ds.row(i), ds.target(i), {}};
  for (const auto& [name, col] : ds.attributes()) r.attrs[name] = col.at(i);
  return r;
}

std::vector<Row> rows_of(const Dataset& ds) {
  std::vector<Row> out;
  for (std::size_t i = 0; i < ds.size(); ++i) out.push_back(row_of(ds, i));
  return out;
}

void criterion_algebra(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(6);
  auto random_dataset = [&](std::size_t n) {
    Matrix x = test::random_matrix(n, 3, rng);
    std::vector<ClassId> y(n);
    for (auto& t : y) t = static_cast<ClassId>(rng.uniform_index(4));
    Attribute tag(n);
    for (auto& v : tag) v = static_cast<std::int64_t>(rng.uniform_index(1000));
    return with_attribute(Dataset(std::move(x), std::move(y)), "tag", std::move(tag));
  };
  auto random_indices = [&](std::size_t count, std::size_t bound) {
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = rng.uniform_index(bound);
    return idx;
  };
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(12);
    const Dataset ds = random_dataset(n);
    const auto src = rows_of(ds);
    std::vector<std::size_t> all(n);
    for (std::size_t i = 0; i < n; ++i) all[i] = i;
    c.expect(rows_of(subsample(ds, all)) == src, "identity");

    const auto I = random_indices(1 + rng.uniform_index(10), n);
    const auto J = random_indices(1 + rng.uniform_index(10), I.size());
    const Dataset composed = subsample(subsample(ds, I), J);
    for (std::size_t k = 0; k < J.size(); ++k) c.expect(row_of(composed, k) == src[I[J[k]]], "composition");

    const Dataset b = random_dataset(1 + rng.uniform_index(5));
    const Dataset d = subsample(ds, random_indices(3, n));
    c.expect(rows_of(concat({ds})) == src, "unit");
    c.expect(rows_of(concat({ds, concat({b, d})})) == rows_of(concat({concat({ds, b}), d})), "associativity");

    std::vector<Row> expect = src;
    for (std::size_t i = 0; i < b.size(); ++i) expect.push_back(row_of(b, i));
    const Dataset joined = concat({ds, b});
    const auto K = random_indices(5, joined.size());
    const Dataset picked = subsample(joined, K);
    for (std::size_t k = 0; k < K.size(); ++k) c.expect(row_of(picked, k) == expect[K[k]], "attribute stability");
  }
  const double secs = seconds_since(t0);
  c.expect(secs < 5.0, "runtime " + fmt("%.2fs", secs));
  c.note("200 random datasets, " + fmt("%.2fs", secs));
}

// ---------------------------------------------------------------------------
// 7. Metrics

void criterion_metrics(Check& c) {
  const auto [train, test] = gaussian_blobs_split(6, 30, 17, 4, 1.5, 12);
  const Benchmark b = class_incremental(train, test, 3);
  auto ep = std::make_shared<EvaluationPlugin>();
  const std::vector<std::size_t> hidden{8};
  TrainHyperparams hp;
  hp.epochs = 2;
  hp.batch_size = 8;
  hp.eval_batch_size = 5;
  auto s = make_naive(make_model(4, hidden, "incremental", 1, 2), hp, 3, ep);
  for (const Experience& e : b.train_stream.experiences) s->train(e);
  const auto values = s->eval(b.test_stream);

  std::size_t hits = 0, total = 0;
  for (const Experience& e : b.test_stream.experiences) {
    const Dataset ds = with_transform_group(e.dataset, kEvalGroup);
    for (std::size_t i = 0; i < ds.size(); ++i) {
      Batch one;
      one.x = Matrix(1, ds.feature_dim());
      const auto row = ds.row(i);
      std::copy(row.begin(), row.end(), one.x.row(0).begin());
      one.y = {ds.target(i)};
      one.task_labels = {0};
      hits += argmax(s->state().model.forward(one).row(0)) == static_cast<std::size_t>(ds.target(i));
      ++total;
    }
  }
  const double recount = static_cast<double>(hits) / static_cast<double>(total);
  double reported = -1.0;
  for (const MetricValue& v : values)
    if (v.name == canonical_name("Acc", Phase::eval, "test", 0, -1, Granularity::stream)) reported = v.value;
  c.expect(reported == recount, "stream accuracy " + fmt("%.17g", reported) + " vs recount " + fmt("%.17g", recount));

  AccuracyMatrix r;
  const double grid[3][3] = {{0.9, 0, 0}, {0.6, 0.8, 0}, {0.4, 0.7, 0.95}};
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t i = 0; i <= k; ++i) r.record(k, i, grid[k][i]);
  c.expect(std::abs(forgetting(r, 0, 2) - 0.5) < 1e-12, "forgetting(0,2) = 0.5");
  c.expect(std::abs(forgetting(r, 1, 2) - 0.1) < 1e-12, "forgetting(1,2) = 0.1");
  c.expect(std::abs(forgetting(r, 0, 1) - 0.3) < 1e-12, "forgetting(0,1) = 0.3");
  c.expect(std::abs(bwt(r, 3) - (-0.3)) < 1e-12, "bwt = -0.3");
  AccuracyMatrix two;
  two.record(0, 0, 0.9);
  two.record(1, 0, 0.5);
  c.expect(std::abs(forgetting(two, 0, 1) - 0.4) < 1e-12, "forgetting example 0.4");
  c.note("stream accuracy " + fmt("%.4f", reported) + " equals recount over " + std::to_string(total) + " examples");
}

// ---------------------------------------------------------------------------
// 8. Dispatch

class Recorder final : public Plugin {
 public:
  explicit Recorder(std::vector<std::string>& out) : Plugin("recorder"), out_(out) {}
  void on(CallbackPoint p, StrategyState&) override { out_.push_back(to_string(p)); }

 private:
  std::vector<std::string>& out_;
};

class Counter final : public Logger {
 public:
  Counter(std::string name, std::vector<std::string>& out) : name_(std::move(name)), out_(out) {}
  std::string name() const override { return name_; }
  void log_metric(const MetricValue& v) override { out_.push_back(name_ + "|" + v.name); }

 private:
  std::string name_;
  std::vector<std::string>& out_;
};

void criterion_dispatch(Check& c) {
  const auto [train, test] = gaussian_blobs_split(4, 6, 3, 4, 0.5, 2);
  const Benchmark b = class_incremental(train, test, 2);
  std::vector<std::string> trace;
  TrainHyperparams hp;
  hp.epochs = 2;
  hp.batch_size = 5;
  const std::vector<std::size_t> hidden{8};
  Strategy s(make_model(4, hidden, "incremental", 1, 2), hp, 3, {std::make_shared<Recorder>(trace)});
  s.train(b.train_stream.experiences);
  std::vector<std::string> expect{"before_training"};
  const char* iteration[] = {"before_training_iteration", "before_forward",           "after_forward", "before_backward",
                             "after_backward",            "after_training_iteration", "after_update"};
  for (const Experience& e : b.train_stream.experiences) {
    expect.insert(expect.end(), {"before_training_exp", "after_dataset_adaptation"});
    for (int epoch = 0; epoch < 2; ++epoch) {
      expect.push_back("before_training_epoch");
      for (std::size_t k = 0; k < (e.dataset.size() + 4) / 5; ++k) expect.insert(expect.end(), std::begin(iteration), std::end(iteration));
      expect.push_back("after_training_epoch");
    }
    expect.push_back("after_training_exp");
  }
  expect.push_back("after_training");
  c.expect(trace == expect, "training callback order");

  std::vector<std::string> deliveries;
  EvaluationPlugin ep({std::make_shared<Counter>("a", deliveries), std::make_shared<Counter>("b", deliveries)});
  std::vector<MetricValue> values(3);
  for (std::size_t i = 0; i < 3; ++i) values[i].name = "v" + std::to_string(i);
  ep.dispatch(values);
  c.expect(deliveries == std::vector<std::string>{"a|v0", "b|v0", "a|v1", "b|v1", "a|v2", "b|v2"}, "delivery order");

  const fs::path dir = test::temp_dir("acceptance_dispatch");
  ExperimentConfig cfg;
  cfg.seed = 1;
  cfg.benchmark.synthetic = SyntheticSpec{6, 20, 10, 4, 0.5};
  cfg.benchmark.n_experiences = 3;
  cfg.model.hidden = {8};
  cfg.train.epochs = 2;
  cfg.loggers = {"csv", "jsonl"};
  cfg.output_dir = dir;
  run_experiment(cfg);
  std::istringstream csv(test::read_file(dir / kCsvFile)), jsonl(test::read_file(dir / kJsonlFile));
  std::string a, j;
  std::getline(csv, a);
  std::size_t rows = 0;
  bool same = true;
  while (std::getline(jsonl, j)) {
    same = same && std::getline(csv, a) && parse_csv_row(a) == parse_jsonl_line(j);
    ++rows;
  }
  same = same && !std::getline(csv, a);
  c.expect(same && rows > 0, "CSV and JSONL contents differ");
  c.note(std::to_string(trace.size()) + " callbacks in order; " + std::to_string(rows) + " rows equal across CSV and JSONL");
}

// ---------------------------------------------------------------------------
// 9. Determinism and resume

void criterion_resume(Check& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const fs::path root = test::temp_dir("acceptance_resume");
  ExperimentConfig cfg;
  cfg.seed = 11;
  cfg.benchmark.n_experiences = 5;
  cfg.model.hidden = {32};
  cfg.train.epochs = 5;
  cfg.strategy.name = "replay";
  cfg.strategy.mem_size = 200;
  cfg.loggers = {"csv", "jsonl", "text"};
  cfg.checkpoint.save_every_exp = true;

  cfg.output_dir = root / "a";
  run_experiment(cfg);
  cfg.output_dir = root / "b";
  run_experiment(cfg);
  c.expect(test::read_file(root / "a" / kCsvFile) == test::read_file(root / "b" / kCsvFile), "same seed, different CSV");

  cfg.output_dir = root / "split";
  RunOptions stop;
  stop.stop_after = 2;
  const RunResult part = run_experiment(cfg, stop);
  c.expect(part.next_experience == 2 && part.checkpoint.has_value(), "no checkpoint after experience 2");
  if (part.checkpoint) {
    RunOptions resume;
    resume.resume = *part.checkpoint;
    run_experiment(cfg, resume);
  }
  for (const char* file : {kCsvFile, kJsonlFile, kTextFile})
    c.expect(test::read_file(root / "a" / file) == test::read_file(root / "split" / file),
             std::string("resumed ") + file + " differs");
  const double secs = seconds_since(t0);
  c.expect(secs < 60.0, "runtime " + fmt("%.1fs", secs));
  c.note("replay run, stop after 2 + resume, metric files byte-identical, " + fmt("%.1fs", secs));
}

// ---------------------------------------------------------------------------
// 10. IDX

void criterion_idx(Check& c) {
  const fs::path dir = test::temp_dir("acceptance_idx");
  const std::vector<std::vector<std::uint8_t>> images{{0, 255, 128, 1}, {7, 8, 9, 10}};
  const std::string img = test::idx_images(images, 2, 2), lbl = test::idx_labels({4, 2});
  test::write_file(dir / "img", img);
  test::write_file(dir / "lbl", lbl);
  const Dataset ds = load_idx(dir / "img", dir / "lbl");
  bool exact = ds.size() == 2 && ds.feature_dim() == 4 && ds.targets() == std::vector<ClassId>{4, 2};
  for (std::size_t i = 0; exact && i < 2; ++i)
    for (std::size_t j = 0; j < 4; ++j) exact = exact && ds.raw_row(i)[j] == images[i][j] / 255.0;
  c.expect(exact, "fixture round-trip");

  auto rejects = [&](const std::string& name, const std::string& bytes) {
    test::write_file(dir / name, bytes);
    try {
      load_idx(dir / name, dir / "lbl");
    } catch (const FormatError&) {
      return true;
    } catch (...) {
    }
    return false;
  };
  std::string bad_magic = img;
  bad_magic[2] = 0x09;
  c.expect(rejects("magic", bad_magic), "bad magic accepted");
  c.expect(rejects("short", img.substr(0, img.size() - 2)), "truncated file accepted");

  if (const char* mnist = std::getenv("CL_MNIST_DIR")) {
    const Dataset train = load_idx(fs::path(mnist) / kMnistTrainImages, fs::path(mnist) / kMnistTrainLabels);
    c.expect(train.size() == 60000 && train.feature_dim() == 784, "real MNIST shape");
    c.note("real MNIST " + std::to_string(train.size()) + "x" + std::to_string(train.feature_dim()));
  } else {
    c.note("fixture and malformed files checked; real MNIST skipped (CL_MNIST_DIR unset)");
  }
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
      {"gradient suite", criterion_gradients},
      {"reservoir uniformity", criterion_reservoir},
      {"buffer quotas", criterion_quotas},
      {"forgetting ordering", criterion_forgetting},
      {"adaptation preservation", criterion_adaptation},
      {"dataset algebra", criterion_algebra},
      {"metric correctness", criterion_metrics},
      {"dispatch contracts", criterion_dispatch},
      {"determinism and resume", criterion_resume},
      {"IDX ingestion", criterion_idx},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Check c;
    try {
      criteria[i].second(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    const bool ok = c.failures.empty();
    failed += !ok;
    std::string detail;
    for (const auto& n : c.notes) detail += (detail.empty() ? "" : "; ") + n;
    if (!ok) {
      std::set<std::string> unique(c.failures.begin(), c.failures.end());
      detail.clear();
      for (const auto& f : unique) detail += (detail.empty() ? "" : "; ") + f;
    }
    std::printf("%s %zu %s: %s\n", ok ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
