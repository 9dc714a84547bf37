#include "clstream/experiment.hpp"

#include <fstream>

#include "clstream/checkpoint.hpp"
#include "clstream/error.hpp"
#include "clstream/logging.hpp"
#include "clstream/models.hpp"
#include "clstream/rng.hpp"
#include "clstream/serialize.hpp"

namespace cl {

namespace fs = std::filesystem;

namespace {

std::pair<Dataset, Dataset> load_source(const ExperimentConfig& c) {
  const BenchmarkConfig& b = c.benchmark;
  const bool mnist = b.kind == "split_mnist" || b.source == "mnist";
  if (mnist)
    return {load_idx(b.data_dir / kMnistTrainImages, b.data_dir / kMnistTrainLabels),
            load_idx(b.data_dir / kMnistTestImages, b.data_dir / kMnistTestLabels)};
  const SyntheticSpec& s = b.synthetic;
  return gaussian_blobs_split(s.n_classes, s.n_per_class, s.n_test_per_class, s.dim, s.spread,
                              derive_seed(c.seed, "blobs"));
}

std::shared_ptr<Logger> make_logger(const std::string& kind, const fs::path& dir, bool append) {
  if (kind == "csv") return std::make_shared<CsvLogger>(dir / kCsvFile, append);
  if (kind == "jsonl") return std::make_shared<JsonlLogger>(dir / kJsonlFile, append);
  return std::make_shared<TextLogger>(dir / kTextFile, append);
}

const char* logger_file(const std::string& kind) {
  if (kind == "csv") return kCsvFile;
  if (kind == "jsonl") return kJsonlFile;
  return kTextFile;
}

// Cuts every metric file back to the length recorded in the checkpoint, so
// output written after the checkpoint by an interrupted run disappears.
void truncate_logs(const Checkpoint& ckpt, const ExperimentConfig& c, const fs::path& dir) {
  for (const std::string& kind : c.loggers) {
    const std::string file = logger_file(kind);
    const LoggerOffset* rec = nullptr;
    for (const LoggerOffset& o : ckpt.logger_offsets)
      if (o.file == file) rec = &o;
    if (!rec) throw CheckpointMismatch("checkpoint has no offset for logger output '" + file + "'");
    const fs::path p = dir / file;
    if (!fs::exists(p)) throw CheckpointMismatch("cannot resume: metric file '" + p.string() + "' is missing");
    if (fs::file_size(p) < rec->bytes)
      throw CheckpointMismatch("cannot resume: metric file '" + p.string() + "' is shorter than at checkpoint time");
    fs::resize_file(p, rec->bytes);
  }
}

}  // namespace

Benchmark build_benchmark(const ExperimentConfig& c) {
  const BenchmarkConfig& b = c.benchmark;
  auto [train, test] = load_source(c);
  if (b.kind == "instance_incremental")
    return instance_incremental(train, test, b.n_experiences, derive_seed(c.seed, "instance"));
  ClassIncrementalOptions opts;
  opts.class_order_seed = derive_seed(c.seed, "class_order");
  opts.fixed_class_order = b.class_order;
  opts.task_labels = b.task_labels;
  return class_incremental(train, test, b.n_experiences, opts);
}

std::unique_ptr<Strategy> build_strategy(const ExperimentConfig& c, std::size_t input_dim,
                                         std::shared_ptr<Evaluator> evaluator) {
  Model model = make_model(input_dim, c.model.hidden, c.model.head, derive_seed(c.seed, "init"),
                           derive_seed(c.seed, "head"));
  TrainHyperparams hp;
  hp.lr = c.train.lr;
  hp.epochs = c.train.epochs;
  hp.batch_size = c.train.batch_size;
  hp.eval_batch_size = c.train.eval_batch_size;
  const StrategyConfig& s = c.strategy;
  if (s.name == "naive") return make_naive(std::move(model), hp, c.seed, std::move(evaluator));
  if (s.name == "cumulative") return make_cumulative(std::move(model), hp, c.seed, std::move(evaluator));
  if (s.name == "replay")
    return make_replay(std::move(model), hp, c.seed, s.policy, s.mem_size, std::move(evaluator));
  if (s.name == "ewc") return make_ewc(std::move(model), hp, c.seed, s.lambda, s.fisher_batches, std::move(evaluator));
  if (s.name == "lwf") return make_lwf(std::move(model), hp, c.seed, s.alpha, s.temperature, std::move(evaluator));
  throw ConfigError("strategy.name: unknown value '" + s.name + "'");
}

std::vector<Experience> eval_experiences(const Strategy& s, const Benchmark& b) {
  std::vector<Experience> out;
  for (const Experience& e : b.test_stream.experiences)
    if (s.state().model.head().knows_task(e.task_label)) out.push_back(e);
  return out;
}

fs::path checkpoint_path(const ExperimentConfig& c, const fs::path& output_dir) {
  return c.checkpoint.path.empty() ? output_dir / kDefaultCheckpointFile : c.checkpoint.path;
}

RunResult run_experiment(const ExperimentConfig& c, const RunOptions& options) {
  RunResult result;
  result.output_dir = options.output_dir ? *options.output_dir : c.output_dir;
  const fs::path& dir = result.output_dir;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());

  const Benchmark bench = build_benchmark(c);
  result.n_experiences = bench.n_experiences;

  std::optional<Checkpoint> resume;
  if (options.resume) {
    resume = load_checkpoint(*options.resume);
    if (resume->config_digest != config_digest(c))
      throw CheckpointMismatch("checkpoint '" + options.resume->string() +
                               "' was written for a different configuration");
    if (resume->n_experiences != bench.n_experiences || resume->next_experience > bench.n_experiences)
      throw CheckpointMismatch("checkpoint experience counts do not match the benchmark");
    truncate_logs(*resume, c, dir);
  }

  std::vector<std::shared_ptr<Logger>> loggers;
  for (const std::string& kind : c.loggers) loggers.push_back(make_logger(kind, dir, resume.has_value()));
  EvaluationOptions eo;
  eo.timing = c.timing;
  auto evaluator = std::make_shared<EvaluationPlugin>(loggers, eo);

  const std::size_t input_dim = bench.train_stream[0].dataset.feature_dim();
  std::unique_ptr<Strategy> strategy = build_strategy(c, input_dim, evaluator);

  std::size_t next = 0;
  if (resume) {
    BinaryReader r(resume->strategy_state);
    RestoreContext ctx;
    ctx.train_stream = &bench.train_stream;
    strategy->load(r, ctx);
    if (!r.at_end()) throw FormatError("checkpoint: trailing bytes in strategy state");
    next = resume->next_experience;
  }

  const fs::path ckpt_path = checkpoint_path(c, dir);
  for (std::size_t i = next; i < bench.n_experiences; ++i) {
    strategy->train(bench.train_stream[i]);
    strategy->eval(eval_experiences(*strategy, bench));
    for (const auto& l : loggers) l->flush();
    next = i + 1;
    if (options.progress)
      *options.progress << "experience " << i << " done, accuracy on it "
                        << format_value(evaluator->accuracy_matrix().get(i, i).value_or(0.0)) << "\n";

    if (c.checkpoint.save_every_exp) {
      Checkpoint ckpt;
      ckpt.config_digest = config_digest(c);
      ckpt.next_experience = next;
      ckpt.n_experiences = bench.n_experiences;
      BinaryWriter w;
      strategy->save(w);
      ckpt.strategy_state = w.take();
      ckpt.matrix = evaluator->accuracy_matrix();
      for (std::size_t k = 0; k < loggers.size(); ++k)
        ckpt.logger_offsets.push_back({logger_file(c.loggers[k]), loggers[k]->offset()});
      save_checkpoint(ckpt_path, ckpt);
      result.checkpoint = ckpt_path;
    }
    if (options.stop_after && next >= *options.stop_after) break;
  }

  for (const auto& l : loggers) l->close();
  result.next_experience = next;
  result.matrix = evaluator->accuracy_matrix();
  return result;
}

}  // namespace cl
