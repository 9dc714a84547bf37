#include "clstream/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "clstream/error.hpp"
#include "clstream/kernels.hpp"
#include "clstream/serialize.hpp"

namespace cl {

const char* to_string(CallbackPoint p) {
  switch (p) {
    case CallbackPoint::before_training: return "before_training";
    case CallbackPoint::before_training_exp: return "before_training_exp";
    case CallbackPoint::after_dataset_adaptation: return "after_dataset_adaptation";
    case CallbackPoint::before_training_epoch: return "before_training_epoch";
    case CallbackPoint::before_training_iteration: return "before_training_iteration";
    case CallbackPoint::before_forward: return "before_forward";
    case CallbackPoint::after_forward: return "after_forward";
    case CallbackPoint::before_backward: return "before_backward";
    case CallbackPoint::after_backward: return "after_backward";
    case CallbackPoint::after_training_iteration: return "after_training_iteration";
    case CallbackPoint::after_update: return "after_update";
    case CallbackPoint::after_training_epoch: return "after_training_epoch";
    case CallbackPoint::after_training_exp: return "after_training_exp";
    case CallbackPoint::after_training: return "after_training";
    case CallbackPoint::before_eval: return "before_eval";
    case CallbackPoint::before_eval_exp: return "before_eval_exp";
    case CallbackPoint::before_eval_iteration: return "before_eval_iteration";
    case CallbackPoint::after_eval_iteration: return "after_eval_iteration";
    case CallbackPoint::after_eval_exp: return "after_eval_exp";
    case CallbackPoint::after_eval: return "after_eval";
  }
  return "?";
}

Strategy::Strategy(Model model, TrainHyperparams hp, std::uint64_t shuffle_seed,
                   std::vector<std::shared_ptr<Plugin>> plugins, std::shared_ptr<Evaluator> evaluator)
    : state_(std::move(model)), plugins_(std::move(plugins)), evaluator_(std::move(evaluator)) {
  if (!(hp.lr > 0.0)) throw InvalidArgument("strategy: lr must be positive");
  if (hp.batch_size == 0 || hp.eval_batch_size == 0) throw InvalidArgument("strategy: batch sizes must be >= 1");
  state_.hp = hp;
  state_.shuffle_rng = Rng(shuffle_seed);
  for (const auto& p : plugins_)
    if (!p) throw InvalidArgument("strategy: null plugin");
}

void Strategy::add_plugin(std::shared_ptr<Plugin> plugin) {
  if (!plugin) throw InvalidArgument("strategy: null plugin");
  plugins_.push_back(std::move(plugin));
}

void Strategy::dispatch(CallbackPoint p) {
  for (const auto& plugin : plugins_) plugin->on(p, state_);
  if (evaluator_) evaluator_->on(p, state_);
}

void Strategy::train_experience(const Experience& exp) {
  StrategyState& s = state_;
  s.experience = &exp;
  s.is_training = true;
  dispatch(CallbackPoint::before_training_exp);

  s.model.adapt(exp);
  s.optimizer = s.model.parameters();

  s.adapted_dataset = with_transform_group(exp.dataset, kTrainGroup);
  s.dataloader = nullptr;
  dispatch(CallbackPoint::after_dataset_adaptation);
  if (!s.dataloader)
    s.dataloader = [ds = s.adapted_dataset, bs = s.hp.batch_size](std::uint64_t seed) {
      return batches(ds, bs, true, seed);
    };

  s.clock.train_exp_epochs = 0;
  for (std::size_t epoch = 0; epoch < s.hp.epochs; ++epoch) {
    dispatch(CallbackPoint::before_training_epoch);
    s.clock.train_epoch_iterations = 0;
    std::vector<Batch> loader = s.dataloader(s.shuffle_rng.next_u64());
    for (Batch& batch : loader) {
      s.mbatch = std::move(batch);
      dispatch(CallbackPoint::before_training_iteration);
      s.model.zero_grads();
      dispatch(CallbackPoint::before_forward);
      s.mb_logits = s.model.forward(s.mbatch, s.cache);
      dispatch(CallbackPoint::after_forward);
      LossResult ce = softmax_cross_entropy(s.mb_logits, s.mbatch.y);
      s.task_loss = ce.loss;
      s.loss = ce.loss;
      s.dlogits = std::move(ce.dlogits);
      dispatch(CallbackPoint::before_backward);
      if (!std::isfinite(s.loss))
        throw TrainingError("non-finite loss at iteration " + std::to_string(s.clock.total_iterations) +
                            " (experience " + std::to_string(exp.index) + ")");
      s.model.backward(s.cache, s.dlogits);
      dispatch(CallbackPoint::after_backward);
      sgd_step(s.optimizer, s.hp.lr);
      ++s.clock.total_iterations;
      ++s.clock.train_epoch_iterations;
      dispatch(CallbackPoint::after_training_iteration);
      dispatch(CallbackPoint::after_update);
    }
    ++s.clock.train_exp_epochs;
    dispatch(CallbackPoint::after_training_epoch);
  }
  dispatch(CallbackPoint::after_training_exp);
  ++s.clock.train_exp_counter;
  s.is_training = false;
}

void Strategy::train(std::span<const Experience> experiences) {
  state_.is_training = true;
  dispatch(CallbackPoint::before_training);
  for (const Experience& exp : experiences) train_experience(exp);
  state_.is_training = true;
  dispatch(CallbackPoint::after_training);
  state_.is_training = false;
}

LossResult eval_cross_entropy(const Matrix& logits, std::span<const ClassId> targets) {
  std::size_t width = logits.cols();
  for (ClassId t : targets)
    if (t >= 0) width = std::max(width, static_cast<std::size_t>(t) + 1);
  if (width == logits.cols()) return softmax_cross_entropy(logits, targets);
  Matrix padded(logits.rows(), width, kMaskedLogit);
  for (std::size_t r = 0; r < logits.rows(); ++r)
    std::copy(logits.row(r).begin(), logits.row(r).end(), padded.row(r).begin());
  return softmax_cross_entropy(padded, targets);
}

std::vector<MetricValue> Strategy::eval(std::span<const Experience> experiences) {
  StrategyState& s = state_;
  const bool was_training = s.is_training;
  const Experience* previous = s.experience;
  s.is_training = false;
  dispatch(CallbackPoint::before_eval);
  for (const Experience& exp : experiences) {
    s.experience = &exp;
    dispatch(CallbackPoint::before_eval_exp);
    const Dataset ds = with_transform_group(exp.dataset, kEvalGroup);
    for (Batch& batch : batches(ds, s.hp.eval_batch_size, false, 0)) {
      s.mbatch = std::move(batch);
      dispatch(CallbackPoint::before_eval_iteration);
      s.mb_logits = s.model.forward(s.mbatch);
      const LossResult ce = eval_cross_entropy(s.mb_logits, s.mbatch.y);
      s.task_loss = s.loss = ce.loss;
      ++s.clock.eval_iterations;
      dispatch(CallbackPoint::after_eval_iteration);
    }
    dispatch(CallbackPoint::after_eval_exp);
  }
  dispatch(CallbackPoint::after_eval);
  s.is_training = was_training;
  s.experience = previous;
  return evaluator_ ? evaluator_->eval_results() : std::vector<MetricValue>{};
}

void Strategy::save(BinaryWriter& w) const {
  const StrategyState& s = state_;
  w.u64(s.clock.total_iterations);
  w.u64(s.clock.train_exp_counter);
  w.u64(s.clock.train_exp_epochs);
  w.u64(s.clock.train_epoch_iterations);
  w.u64(s.clock.eval_iterations);
  w.rng(s.shuffle_rng);

  const auto& trunk = s.model.trunk().layers();
  w.u64(trunk.size());
  for (const Layer& l : trunk) {
    w.str(l.weight.id);
    w.matrix(l.weight.value);
    w.str(l.bias.id);
    w.matrix(l.bias.value);
    w.u8(l.activation == Activation::relu ? 1 : 0);
  }
  w.str(s.model.head().kind());
  s.model.head().save(w);

  w.u64(s.optimizer.size());
  for (const Parameter* p : s.optimizer) w.str(p->id);

  w.u64(plugins_.size());
  for (const auto& p : plugins_) {
    w.str(p->name());
    BinaryWriter section;
    p->save(section);
    w.str(section.bytes());
  }
  w.u8(evaluator_ ? 1 : 0);
  if (evaluator_) {
    BinaryWriter section;
    evaluator_->save(section);
    w.str(section.bytes());
  }
}

void Strategy::load(BinaryReader& r, const RestoreContext& ctx) {
  StrategyState& s = state_;
  s.clock.total_iterations = r.u64();
  s.clock.train_exp_counter = r.u64();
  s.clock.train_exp_epochs = r.u64();
  s.clock.train_epoch_iterations = r.u64();
  s.clock.eval_iterations = r.u64();
  r.rng(s.shuffle_rng);

  auto& trunk = s.model.trunk().layers();
  if (r.u64() != trunk.size()) throw FormatError("checkpoint: trunk depth differs from the configured model");
  for (Layer& l : trunk) {
    if (r.str() != l.weight.id) throw FormatError("checkpoint: trunk parameter id mismatch");
    Matrix w = r.matrix();
    if (r.str() != l.bias.id) throw FormatError("checkpoint: trunk parameter id mismatch");
    Matrix b = r.matrix();
    if (!w.same_shape(l.weight.value) || !b.same_shape(l.bias.value))
      throw FormatError("checkpoint: trunk parameter shape mismatch");
    l.weight.value = std::move(w);
    l.bias.value = std::move(b);
    l.activation = r.u8() ? Activation::relu : Activation::identity;
  }
  cl::zero_grads(s.model.trunk());
  if (r.str() != s.model.head().kind()) throw FormatError("checkpoint: head kind differs from the configured model");
  s.model.head().load(r);

  std::vector<std::string> ids(r.u64());
  for (auto& id : ids) id = r.str();
  s.optimizer.clear();
  auto params = s.model.parameters();
  for (const auto& id : ids) {
    auto it = std::find_if(params.begin(), params.end(), [&](const Parameter* p) { return p->id == id; });
    if (it == params.end()) throw FormatError("checkpoint: optimizer references unknown parameter " + id);
    s.optimizer.push_back(*it);
  }

  RestoreContext plugin_ctx = ctx;
  plugin_ctx.model = &s.model;
  if (r.u64() != plugins_.size()) throw FormatError("checkpoint: plugin count differs");
  for (const auto& p : plugins_) {
    if (r.str() != p->name()) throw FormatError("checkpoint: plugin order differs at " + p->name());
    const std::string bytes = r.str();
    BinaryReader section(bytes);
    p->load(section, plugin_ctx);
  }
  const bool has_eval = r.u8() != 0;
  if (has_eval != static_cast<bool>(evaluator_)) throw FormatError("checkpoint: evaluator presence differs");
  if (evaluator_) {
    const std::string bytes = r.str();
    BinaryReader section(bytes);
    evaluator_->load(section, plugin_ctx);
  }
}

// ---------------------------------------------------------------------------
// Cumulative

void CumulativePlugin::on(CallbackPoint p, StrategyState& s) {
  if (p != CallbackPoint::after_dataset_adaptation) return;
  seen_.push_back(s.experience->index);
  const Dataset parts[] = {accumulated_, s.adapted_dataset};
  accumulated_ = concat(parts);
  s.adapted_dataset = accumulated_;
}

void CumulativePlugin::save(BinaryWriter& w) const {
  w.u64(seen_.size());
  for (std::size_t i : seen_) w.u64(i);
}

void CumulativePlugin::load(BinaryReader& r, const RestoreContext& ctx) {
  seen_.clear();
  accumulated_ = Dataset{};
  for (std::uint64_t n = r.u64(); n > 0; --n) seen_.push_back(r.u64());
  if (seen_.empty()) return;
  if (!ctx.train_stream) throw StateError("cumulative: restoring needs the train stream");
  std::vector<Dataset> parts;
  for (std::size_t i : seen_) parts.push_back(with_transform_group((*ctx.train_stream)[i].dataset, kTrainGroup));
  accumulated_ = concat(parts);
}

// ---------------------------------------------------------------------------
// Replay

ReplayPlugin::ReplayPlugin(std::unique_ptr<ExemplarsBuffer> buffer) : Plugin("replay"), buffer_(std::move(buffer)) {
  if (!buffer_) throw InvalidArgument("replay: buffer is required");
  if (buffer_->max_size() < 1) throw InvalidArgument("replay: mem_size must be >= 1");
}

void ReplayPlugin::on(CallbackPoint p, StrategyState& s) {
  if (p == CallbackPoint::after_dataset_adaptation) {
    if (buffer_->size() == 0) return;
    std::vector<Dataset> sources{s.adapted_dataset, with_transform_group(buffer_->contents(), kTrainGroup)};
    s.dataloader = [sources = std::move(sources), bs = s.hp.batch_size](std::uint64_t seed) {
      return balanced_joint_loader(sources, bs, seed);
    };
  } else if (p == CallbackPoint::after_training_exp) {
    buffer_->update(s.experience->dataset, s.experience->index);
  }
}

void ReplayPlugin::save(BinaryWriter& w) const {
  w.str(buffer_->policy());
  buffer_->save(w);
}

void ReplayPlugin::load(BinaryReader& r, const RestoreContext&) {
  if (r.str() != buffer_->policy()) throw FormatError("replay: buffer policy differs from checkpoint");
  buffer_->load(r);
}

// ---------------------------------------------------------------------------
// EWC

EwcPlugin::EwcPlugin(double lambda, std::size_t fisher_batches)
    : Plugin("ewc"), lambda_(lambda), fisher_batches_(fisher_batches) {
  if (!(lambda >= 0.0)) throw InvalidArgument("ewc: lambda must be >= 0");
  if (fisher_batches == 0) throw InvalidArgument("ewc: fisher_batches must be >= 1");
}

std::vector<EwcAnchor> EwcPlugin::estimate(Model& model, const Dataset& data, std::size_t batch_size) const {
  auto params = model.parameters();
  std::vector<Matrix> fisher;
  for (const Parameter* p : params) fisher.emplace_back(p->value.rows(), p->value.cols());
  const auto loader = batches(with_transform_group(data, kTrainGroup), batch_size, false, 0);
  const std::size_t n = std::min(fisher_batches_, loader.size());
  ModelCache cache;
  for (std::size_t b = 0; b < n; ++b) {
    model.zero_grads();
    const Matrix logits = model.forward(loader[b], cache);
    const LossResult ce = softmax_cross_entropy(logits, loader[b].y);
    model.backward(cache, ce.dlogits);
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto f = fisher[k].values();
      auto g = params[k]->grad.values();
      for (std::size_t i = 0; i < f.size(); ++i) f[i] += g[i] * g[i];
    }
  }
  model.zero_grads();
  std::vector<EwcAnchor> anchors;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (n > 0)
      for (double& v : fisher[k].values()) v /= static_cast<double>(n);
    anchors.push_back({params[k]->id, params[k]->value, std::move(fisher[k])});
  }
  return anchors;
}

double EwcPlugin::penalty(Model& model, bool add_grads) const {
  if (anchors_.empty()) return 0.0;
  std::map<std::string, Parameter*> by_id;
  for (Parameter* p : model.parameters()) by_id[p->id] = p;
  double total = 0.0;
  for (const auto& [_, anchors] : anchors_)
    for (const EwcAnchor& a : anchors) {
      const auto it = by_id.find(a.id);
      if (it == by_id.end()) continue;
      Parameter& p = *it->second;
      if (!p.value.same_shape(a.optimum)) throw StateError("ewc: parameter " + a.id + " changed shape");
      auto v = p.value.values();
      auto g = p.grad.values();
      auto opt = a.optimum.values();
      auto f = a.fisher.values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        const double d = v[i] - opt[i];
        total += 0.5 * lambda_ * f[i] * d * d;
        if (add_grads) g[i] += lambda_ * f[i] * d;
      }
    }
  return total;
}

void EwcPlugin::on(CallbackPoint p, StrategyState& s) {
  if (p == CallbackPoint::before_backward) {
    s.loss += penalty(s.model, true);
  } else if (p == CallbackPoint::after_training_exp) {
    anchors_[s.experience->index] = estimate(s.model, s.experience->dataset, s.hp.batch_size);
  }
}

void EwcPlugin::save(BinaryWriter& w) const {
  w.u64(anchors_.size());
  for (const auto& [exp, anchors] : anchors_) {
    w.u64(exp);
    w.u64(anchors.size());
    for (const EwcAnchor& a : anchors) {
      w.str(a.id);
      w.matrix(a.optimum);
      w.matrix(a.fisher);
    }
  }
}

void EwcPlugin::load(BinaryReader& r, const RestoreContext&) {
  anchors_.clear();
  for (std::uint64_t n = r.u64(); n > 0; --n) {
    const std::size_t exp = r.u64();
    std::vector<EwcAnchor> anchors(r.u64());
    for (EwcAnchor& a : anchors) {
      a.id = r.str();
      a.optimum = r.matrix();
      a.fisher = r.matrix();
    }
    anchors_[exp] = std::move(anchors);
  }
}

// ---------------------------------------------------------------------------
// LwF

LossResult distillation_loss(const Matrix& new_logits, const Matrix& old_logits,
                             const std::vector<std::vector<ClassId>>& row_classes, double alpha, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("distillation: temperature must be positive");
  if (new_logits.rows() != old_logits.rows() || row_classes.size() != new_logits.rows())
    throw ShapeError("distillation: row counts differ");
  LossResult out;
  out.dlogits = Matrix(new_logits.rows(), new_logits.cols());
  const std::size_t batch = new_logits.rows();
  if (batch == 0) return out;
  const double inv_b = 1.0 / static_cast<double>(batch);

  std::vector<double> zo, zn;
  for (std::size_t r = 0; r < batch; ++r) {
    const auto& cls = row_classes[r];
    if (cls.empty()) continue;
    zo.assign(cls.size(), 0.0);
    zn.assign(cls.size(), 0.0);
    for (std::size_t k = 0; k < cls.size(); ++k) {
      const auto c = static_cast<std::size_t>(cls[k]);
      if (c >= new_logits.cols() || c >= old_logits.cols()) throw ShapeError("distillation: class outside logits");
      zo[k] = old_logits(r, c) / temperature;
      zn[k] = new_logits(r, c) / temperature;
    }
    const double mo = *std::max_element(zo.begin(), zo.end());
    const double mn = *std::max_element(zn.begin(), zn.end());
    double so = 0.0, sn = 0.0;
    for (std::size_t k = 0; k < cls.size(); ++k) {
      so += std::exp(zo[k] - mo);
      sn += std::exp(zn[k] - mn);
    }
    const double lso = std::log(so), lsn = std::log(sn);
    double kl = 0.0;
    for (std::size_t k = 0; k < cls.size(); ++k) {
      const double log_po = zo[k] - mo - lso;
      const double log_pn = zn[k] - mn - lsn;
      const double po = std::exp(log_po);
      const double pn = std::exp(log_pn);
      kl += po * (log_po - log_pn);
      out.dlogits(r, static_cast<std::size_t>(cls[k])) = alpha * temperature * (pn - po) * inv_b;
    }
    out.loss += alpha * temperature * temperature * kl * inv_b;
  }
  return out;
}

LwfPlugin::LwfPlugin(double alpha, double temperature) : Plugin("lwf"), alpha_(alpha), temperature_(temperature) {
  if (!(alpha >= 0.0)) throw InvalidArgument("lwf: alpha must be >= 0");
  if (!(temperature > 0.0)) throw InvalidArgument("lwf: temperature must be > 0");
}

LossResult LwfPlugin::penalty(const Batch& batch, const Matrix& new_logits) const {
  LossResult none;
  none.dlogits = Matrix(new_logits.rows(), new_logits.cols());
  if (!snapshot_) return none;
  const DynamicHead& old_head = snapshot_->head();
  std::vector<std::size_t> known;
  for (std::size_t r = 0; r < batch.size(); ++r)
    if (old_head.knows_task(batch.task_labels[r])) known.push_back(r);
  if (known.empty()) return none;

  Batch sub;
  sub.x = Matrix(known.size(), batch.x.cols());
  for (std::size_t k = 0; k < known.size(); ++k) {
    std::copy(batch.x.row(known[k]).begin(), batch.x.row(known[k]).end(), sub.x.row(k).begin());
    sub.y.push_back(batch.y[known[k]]);
    sub.task_labels.push_back(batch.task_labels[known[k]]);
  }
  const Matrix old_sub = snapshot_->forward(sub);

  Matrix old_full(new_logits.rows(), std::max(new_logits.cols(), old_sub.cols()), kMaskedLogit);
  std::vector<std::vector<ClassId>> classes(new_logits.rows());
  std::map<int, std::vector<ClassId>> per_task;
  for (std::size_t k = 0; k < known.size(); ++k) {
    const std::size_t r = known[k];
    std::copy(old_sub.row(k).begin(), old_sub.row(k).end(), old_full.row(r).begin());
    const int task = batch.task_labels[r];
    if (!per_task.contains(task)) {
      auto seen = old_head.seen_classes(task);
      std::erase_if(seen, [&](ClassId c) { return static_cast<std::size_t>(c) >= new_logits.cols(); });
      per_task[task] = std::move(seen);
    }
    classes[r] = per_task[task];
  }
  return distillation_loss(new_logits, old_full, classes, alpha_, temperature_);
}

void LwfPlugin::on(CallbackPoint p, StrategyState& s) {
  if (p == CallbackPoint::before_backward) {
    if (!snapshot_) return;
    const LossResult d = penalty(s.mbatch, s.mb_logits);
    s.loss += d.loss;
    kernels::accumulate(s.dlogits, d.dlogits);
  } else if (p == CallbackPoint::after_training_exp) {
    snapshot_ = std::make_unique<Model>(s.model);
  }
}

void LwfPlugin::save(BinaryWriter& w) const {
  w.u8(snapshot_ ? 1 : 0);
  if (!snapshot_) return;
  const auto& layers = snapshot_->trunk().layers();
  w.u64(layers.size());
  for (const Layer& l : layers) {
    w.matrix(l.weight.value);
    w.matrix(l.bias.value);
  }
  w.str(snapshot_->head().kind());
  snapshot_->head().save(w);
}

void LwfPlugin::load(BinaryReader& r, const RestoreContext& ctx) {
  snapshot_.reset();
  if (r.u8() == 0) return;
  if (!ctx.model) throw StateError("lwf: restoring needs a model template");
  auto snap = std::make_unique<Model>(*ctx.model);
  auto& layers = snap->trunk().layers();
  if (r.u64() != layers.size()) throw FormatError("lwf: snapshot trunk depth differs");
  for (Layer& l : layers) {
    Matrix w = r.matrix();
    Matrix b = r.matrix();
    if (!w.same_shape(l.weight.value) || !b.same_shape(l.bias.value)) throw FormatError("lwf: snapshot shape mismatch");
    l.weight.value = std::move(w);
    l.bias.value = std::move(b);
  }
  if (r.str() != snap->head().kind()) throw FormatError("lwf: snapshot head kind differs");
  snap->head().load(r);
  snapshot_ = std::move(snap);
}

// ---------------------------------------------------------------------------
// Factories

namespace {

std::unique_ptr<Strategy> with_plugins(Model model, TrainHyperparams hp, std::uint64_t seed,
                                       std::vector<std::shared_ptr<Plugin>> plugins,
                                       std::shared_ptr<Evaluator> evaluator) {
  return std::make_unique<Strategy>(std::move(model), hp, derive_seed(seed, "shuffle"), std::move(plugins),
                                    std::move(evaluator));
}

}  // namespace

std::unique_ptr<Strategy> make_naive(Model model, TrainHyperparams hp, std::uint64_t seed,
                                     std::shared_ptr<Evaluator> evaluator) {
  return with_plugins(std::move(model), hp, seed, {}, std::move(evaluator));
}

std::unique_ptr<Strategy> make_cumulative(Model model, TrainHyperparams hp, std::uint64_t seed,
                                          std::shared_ptr<Evaluator> evaluator) {
  return with_plugins(std::move(model), hp, seed, {std::make_shared<CumulativePlugin>()}, std::move(evaluator));
}

std::unique_ptr<Strategy> make_replay(Model model, TrainHyperparams hp, std::uint64_t seed,
                                      const std::string& buffer_policy, std::size_t mem_size,
                                      std::shared_ptr<Evaluator> evaluator) {
  if (mem_size < 1) throw InvalidArgument("replay: mem_size must be >= 1");
  auto buffer = make_buffer(buffer_policy, mem_size, derive_seed(seed, "reservoir"));
  return with_plugins(std::move(model), hp, seed, {std::make_shared<ReplayPlugin>(std::move(buffer))},
                      std::move(evaluator));
}

std::unique_ptr<Strategy> make_ewc(Model model, TrainHyperparams hp, std::uint64_t seed, double lambda,
                                   std::size_t fisher_batches, std::shared_ptr<Evaluator> evaluator) {
  return with_plugins(std::move(model), hp, seed, {std::make_shared<EwcPlugin>(lambda, fisher_batches)},
                      std::move(evaluator));
}

std::unique_ptr<Strategy> make_lwf(Model model, TrainHyperparams hp, std::uint64_t seed, double alpha,
                                   double temperature, std::shared_ptr<Evaluator> evaluator) {
  return with_plugins(std::move(model), hp, seed, {std::make_shared<LwfPlugin>(alpha, temperature)},
                      std::move(evaluator));
}

}  // namespace cl
