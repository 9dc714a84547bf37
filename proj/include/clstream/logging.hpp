#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "clstream/metrics.hpp"
#include "clstream/strategy.hpp"

namespace cl {

/// "<Kind>_<Gran>/<phase>_phase/<stream>_stream/Task<task:03>/Exp<exp:03>".
/// Stream-granularity names drop the Exp segment. Granularity suffixes are
/// MB, Epoch, Exp and Stream.
std::string canonical_name(const std::string& kind, Phase phase, const std::string& stream, int task,
                           std::int64_t experience, Granularity granularity);

/// Shortest-safe lossless text form of a double ("%.17g").
std::string format_value(double v);

struct ExperienceSummary {
  std::size_t experience_index = 0;
  std::uint64_t x_axis = 0;
  std::optional<double> train_accuracy;
};

struct EvalSummary {
  std::string stream_name;
  std::optional<std::size_t> trained_through;
  double stream_accuracy = 0.0;
  const AccuracyMatrix* matrix = nullptr;
};

class Logger {
 public:
  virtual ~Logger() = default;
  virtual std::string name() const = 0;
  virtual void log_metric(const MetricValue& v) = 0;
  virtual void on_training_exp_end(const ExperienceSummary&) {}
  virtual void on_eval_end(const EvalSummary&) {}
  virtual void flush() {}
  virtual void close() {}
  /// Bytes written to the backing file so far; 0 for non-file sinks.
  virtual std::uint64_t offset() const { return 0; }
  virtual std::optional<std::filesystem::path> path() const { return std::nullopt; }
};

/// Shared plumbing for loggers that append to a file.
class FileLogger : public Logger {
 public:
  /// append=false truncates; append=true continues an existing file.
  FileLogger(std::filesystem::path path, bool append);
  void flush() override;
  void close() override;
  std::uint64_t offset() const override;
  std::optional<std::filesystem::path> path() const override { return path_; }

 protected:
  void write(const std::string& text);
  bool fresh() const { return fresh_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  bool fresh_ = true;
};

/// Header: name,phase,stream,task,experience,granularity,x_axis,value
class CsvLogger final : public FileLogger {
 public:
  explicit CsvLogger(std::filesystem::path path, bool append = false);
  std::string name() const override { return "csv"; }
  void log_metric(const MetricValue& v) override;
};

/// One JSON object per line with the CSV column names as keys.
class JsonlLogger final : public FileLogger {
 public:
  explicit JsonlLogger(std::filesystem::path path, bool append = false);
  std::string name() const override { return "jsonl"; }
  void log_metric(const MetricValue& v) override;
};

/// Human-readable; only experience and stream granularity values.
class TextLogger final : public Logger {
 public:
  explicit TextLogger(std::ostream& sink) : sink_(&sink) {}
  TextLogger(std::filesystem::path path, bool append);
  std::string name() const override { return "text"; }
  void log_metric(const MetricValue& v) override;
  void on_training_exp_end(const ExperienceSummary& s) override;
  void on_eval_end(const EvalSummary& s) override;
  void flush() override;
  void close() override;
  std::uint64_t offset() const override;
  std::optional<std::filesystem::path> path() const override { return path_; }

 private:
  std::ostream* sink_ = nullptr;
  std::unique_ptr<std::ofstream> file_;
  std::optional<std::filesystem::path> path_;
};

std::string csv_header();
std::string csv_row(const MetricValue& v);
std::string jsonl_line(const MetricValue& v);
/// Inverse of jsonl_line (used to replay logs).
MetricValue parse_jsonl_line(const std::string& line);
/// Inverse of csv_row.
MetricValue parse_csv_row(const std::string& line);

struct EvaluationOptions {
  bool timing = false;  // wall-clock values make outputs nondeterministic
};

/// Computes accuracy/loss at every granularity, keeps the accuracy matrix,
/// and hands each value to every logger in registration order.
class EvaluationPlugin final : public Evaluator {
 public:
  explicit EvaluationPlugin(std::vector<std::shared_ptr<Logger>> loggers = {}, EvaluationOptions options = {});

  void on(CallbackPoint p, StrategyState& s) override;
  std::vector<MetricValue> eval_results() const override { return eval_results_; }

  const AccuracyMatrix& accuracy_matrix() const { return matrix_; }
  const std::vector<std::shared_ptr<Logger>>& loggers() const { return loggers_; }
  /// Every value emitted since construction (or restore).
  const std::vector<MetricValue>& history() const { return history_; }

  void dispatch(const std::vector<MetricValue>& values);

  void save(BinaryWriter& w) const override;
  void load(BinaryReader& r, const RestoreContext& ctx) override;

 private:
  void emit(std::vector<MetricValue>& out, const std::string& kind, double value, Granularity g, Phase phase,
            const StrategyState& s, const std::string& stream, int task, std::int64_t exp) const;

  std::vector<std::shared_ptr<Logger>> loggers_;
  EvaluationOptions options_;
  AccuracyMatrix matrix_;

  RunningMean mb_acc_, mb_loss_;
  RunningMean epoch_acc_, epoch_loss_;
  RunningMean train_exp_acc_;  // mean of epoch accuracies
  RunningMean eval_exp_acc_, eval_exp_loss_;
  RunningMean stream_acc_, stream_loss_;
  std::string eval_stream_;
  ExperienceTimer timer_;

  std::vector<MetricValue> eval_results_;
  std::vector<MetricValue> history_;
};

}  // namespace cl
