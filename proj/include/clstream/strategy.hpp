#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "clstream/benchmarks.hpp"
#include "clstream/buffers.hpp"
#include "clstream/loss.hpp"
#include "clstream/metrics.hpp"
#include "clstream/models.hpp"
#include "clstream/rng.hpp"

namespace cl {

class BinaryReader;
class BinaryWriter;

// Within one training iteration the points fire in declaration order, with
// the SGD update between after_backward and after_training_iteration.
enum class CallbackPoint {
  before_training,
  before_training_exp,
  after_dataset_adaptation,
  before_training_epoch,
  before_training_iteration,
  before_forward,
  after_forward,
  before_backward,
  after_backward,
  after_training_iteration,
  after_update,
  after_training_epoch,
  after_training_exp,
  after_training,
  before_eval,
  before_eval_exp,
  before_eval_iteration,
  after_eval_iteration,
  after_eval_exp,
  after_eval,
};

const char* to_string(CallbackPoint p);

struct Clock {
  std::uint64_t total_iterations = 0;
  std::uint64_t train_exp_counter = 0;  // experiences fully trained
  std::uint64_t train_exp_epochs = 0;   // epochs finished in the current experience
  std::uint64_t train_epoch_iterations = 0;
  std::uint64_t eval_iterations = 0;
};

struct TrainHyperparams {
  double lr = 0.05;
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  std::size_t eval_batch_size = 256;
};

/// Produces one epoch of minibatches from a per-epoch seed.
using DataLoader = std::function<std::vector<Batch>(std::uint64_t epoch_seed)>;

/// Everything plugins can read or change during the loop.
struct StrategyState {
  explicit StrategyState(Model m) : model(std::move(m)) {}

  Model model;
  std::vector<Parameter*> optimizer;  // re-enumerated before each experience
  const Experience* experience = nullptr;
  Dataset adapted_dataset;
  DataLoader dataloader;  // left empty: plain shuffled loader over adapted_dataset
  Batch mbatch;
  Matrix mb_logits;
  ModelCache cache;
  double loss = 0.0;       // task loss plus plugin penalties
  double task_loss = 0.0;  // cross-entropy only
  Matrix dlogits;          // d(loss)/d(mb_logits); plugins may add to it
  Clock clock;
  TrainHyperparams hp;
  bool is_training = false;
  Rng shuffle_rng;
};

struct RestoreContext {
  const Stream* train_stream = nullptr;
  const Model* model = nullptr;  // restored model, set by Strategy::load
};

class Plugin {
 public:
  explicit Plugin(std::string name) : name_(std::move(name)) {}
  virtual ~Plugin() = default;

  const std::string& name() const { return name_; }
  virtual void on(CallbackPoint, StrategyState&) {}

  virtual void save(BinaryWriter&) const {}
  virtual void load(BinaryReader&, const RestoreContext&) {}

 private:
  std::string name_;
};

/// The metrics plugin. Always dispatched after every other plugin.
class Evaluator : public Plugin {
 public:
  using Plugin::Plugin;
  /// Values emitted since the last before_eval.
  virtual std::vector<MetricValue> eval_results() const = 0;
};

/// Base SGD template plus an ordered plugin list.
class Strategy {
 public:
  Strategy(Model model, TrainHyperparams hp, std::uint64_t shuffle_seed,
           std::vector<std::shared_ptr<Plugin>> plugins = {}, std::shared_ptr<Evaluator> evaluator = nullptr);

  StrategyState& state() { return state_; }
  const StrategyState& state() const { return state_; }
  const std::vector<std::shared_ptr<Plugin>>& plugins() const { return plugins_; }
  void add_plugin(std::shared_ptr<Plugin> plugin);
  const std::shared_ptr<Evaluator>& evaluator() const { return evaluator_; }

  void train_experience(const Experience& exp);
  void train(std::span<const Experience> experiences);
  void train(const Experience& exp) { train(std::span<const Experience>(&exp, 1)); }

  std::vector<MetricValue> eval(const Stream& stream) { return eval(stream.experiences); }
  std::vector<MetricValue> eval(std::span<const Experience> experiences);

  /// Model, optimizer view, clock, shuffle stream and plugin states.
  void save(BinaryWriter& w) const;
  void load(BinaryReader& r, const RestoreContext& ctx);

 private:
  void dispatch(CallbackPoint p);

  StrategyState state_;
  std::vector<std::shared_ptr<Plugin>> plugins_;
  std::shared_ptr<Evaluator> evaluator_;
};

/// Cross-entropy that tolerates targets beyond the logit width (classes the
/// head has not grown for) by treating the missing columns as masked.
LossResult eval_cross_entropy(const Matrix& logits, std::span<const ClassId> targets);

// ---------------------------------------------------------------------------
// Built-in plugins

/// Trains on the union of every experience seen so far.
class CumulativePlugin final : public Plugin {
 public:
  CumulativePlugin() : Plugin("cumulative") {}
  void on(CallbackPoint p, StrategyState& s) override;
  const Dataset& accumulated() const { return accumulated_; }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r, const RestoreContext& ctx) override;

 private:
  std::vector<std::size_t> seen_;
  Dataset accumulated_;
};

/// Mixes buffer rows into every training batch and refreshes the buffer
/// after each experience.
class ReplayPlugin final : public Plugin {
 public:
  explicit ReplayPlugin(std::unique_ptr<ExemplarsBuffer> buffer);
  void on(CallbackPoint p, StrategyState& s) override;
  const ExemplarsBuffer& buffer() const { return *buffer_; }
  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r, const RestoreContext& ctx) override;

 private:
  std::unique_ptr<ExemplarsBuffer> buffer_;
};

struct EwcAnchor {
  std::string id;
  Matrix optimum;  // θ* at the end of the experience
  Matrix fisher;   // diagonal empirical Fisher
};

/// Elastic weight consolidation with one quadratic penalty per past
/// experience: (λ/2) Σ_k F_k (θ_k − θ*_k)².
class EwcPlugin final : public Plugin {
 public:
  EwcPlugin(double lambda, std::size_t fisher_batches);
  void on(CallbackPoint p, StrategyState& s) override;

  /// Penalty value; when `add_grads` it also accumulates λF(θ−θ*) into grads.
  double penalty(Model& model, bool add_grads) const;
  /// Empirical Fisher from up to fisher_batches unshuffled minibatches.
  std::vector<EwcAnchor> estimate(Model& model, const Dataset& data, std::size_t batch_size) const;
  void add_anchor(std::size_t exp_index, std::vector<EwcAnchor> anchors) { anchors_[exp_index] = std::move(anchors); }
  const std::map<std::size_t, std::vector<EwcAnchor>>& anchors() const { return anchors_; }

  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r, const RestoreContext& ctx) override;

 private:
  double lambda_;
  std::size_t fisher_batches_;
  std::map<std::size_t, std::vector<EwcAnchor>> anchors_;
};

/// α·T²·mean_rows KL(softmax(old/T) ‖ softmax(new/T)), each row restricted
/// to `row_classes[r]` (empty: row contributes nothing). The gradient is
/// with respect to new_logits.
LossResult distillation_loss(const Matrix& new_logits, const Matrix& old_logits,
                             const std::vector<std::vector<ClassId>>& row_classes, double alpha, double temperature);

/// Learning without forgetting against a snapshot taken after each
/// experience, restricted to classes the snapshot had seen.
class LwfPlugin final : public Plugin {
 public:
  LwfPlugin(double alpha, double temperature);
  void on(CallbackPoint p, StrategyState& s) override;

  /// Distillation term for a batch given the current logits.
  LossResult penalty(const Batch& batch, const Matrix& new_logits) const;
  bool has_snapshot() const { return static_cast<bool>(snapshot_); }
  void set_snapshot(const Model& m) { snapshot_ = std::make_unique<Model>(m); }

  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r, const RestoreContext& ctx) override;

 private:
  double alpha_;
  double temperature_;
  std::unique_ptr<Model> snapshot_;
};

std::unique_ptr<Strategy> make_naive(Model model, TrainHyperparams hp, std::uint64_t seed,
                                     std::shared_ptr<Evaluator> evaluator = nullptr);
std::unique_ptr<Strategy> make_cumulative(Model model, TrainHyperparams hp, std::uint64_t seed,
                                          std::shared_ptr<Evaluator> evaluator = nullptr);
std::unique_ptr<Strategy> make_replay(Model model, TrainHyperparams hp, std::uint64_t seed,
                                      const std::string& buffer_policy, std::size_t mem_size,
                                      std::shared_ptr<Evaluator> evaluator = nullptr);
std::unique_ptr<Strategy> make_ewc(Model model, TrainHyperparams hp, std::uint64_t seed, double lambda,
                                   std::size_t fisher_batches, std::shared_ptr<Evaluator> evaluator = nullptr);
std::unique_ptr<Strategy> make_lwf(Model model, TrainHyperparams hp, std::uint64_t seed, double alpha,
                                   double temperature, std::shared_ptr<Evaluator> evaluator = nullptr);

}  // namespace cl
