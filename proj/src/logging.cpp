#include "clstream/logging.hpp"

#include <cmath>
#include <cstdio>

#include <nlohmann/json.hpp>

#include "clstream/error.hpp"
#include "clstream/serialize.hpp"

namespace cl {

namespace {

const char* granularity_suffix(Granularity g) {
  switch (g) {
    case Granularity::minibatch: return "MB";
    case Granularity::epoch: return "Epoch";
    case Granularity::experience: return "Exp";
    case Granularity::stream: return "Stream";
  }
  return "?";
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  return fields;
}

}  // namespace

std::string canonical_name(const std::string& kind, Phase phase, const std::string& stream, int task,
                           std::int64_t experience, Granularity granularity) {
  char task_part[32];
  std::snprintf(task_part, sizeof task_part, "Task%03d", task);
  std::string name = kind + "_" + granularity_suffix(granularity) + "/" + to_string(phase) + "_phase/" + stream +
                     "_stream/" + task_part;
  if (granularity != Granularity::stream) {
    char exp_part[32];
    std::snprintf(exp_part, sizeof exp_part, "/Exp%03lld", static_cast<long long>(experience));
    name += exp_part;
  }
  return name;
}

std::string format_value(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string csv_header() { return "name,phase,stream,task,experience,granularity,x_axis,value"; }

std::string csv_row(const MetricValue& v) {
  return csv_field(v.name) + "," + to_string(v.phase) + "," + csv_field(v.stream_name) + "," +
         std::to_string(v.task_label) + "," + std::to_string(v.experience_index) + "," + to_string(v.granularity) +
         "," + std::to_string(v.x_axis) + "," + format_value(v.value);
}

std::string jsonl_line(const MetricValue& v) {
  using nlohmann::json;
  const std::string value = std::isfinite(v.value) ? format_value(v.value) : "null";
  return "{\"name\":" + json(v.name).dump() + ",\"phase\":\"" + to_string(v.phase) +
         "\",\"stream\":" + json(v.stream_name).dump() + ",\"task\":" + std::to_string(v.task_label) +
         ",\"experience\":" + std::to_string(v.experience_index) + ",\"granularity\":\"" + to_string(v.granularity) +
         "\",\"x_axis\":" + std::to_string(v.x_axis) + ",\"value\":" + value + "}";
}

MetricValue parse_jsonl_line(const std::string& line) {
  try {
    const auto j = nlohmann::json::parse(line);
    MetricValue v;
    v.name = j.at("name").get<std::string>();
    v.phase = phase_from_string(j.at("phase").get<std::string>());
    v.stream_name = j.at("stream").get<std::string>();
    v.task_label = j.at("task").get<int>();
    v.experience_index = j.at("experience").get<std::int64_t>();
    v.granularity = granularity_from_string(j.at("granularity").get<std::string>());
    v.x_axis = j.at("x_axis").get<std::uint64_t>();
    v.value = j.at("value").is_null() ? std::nan("") : j.at("value").get<double>();
    return v;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("jsonl: ") + e.what());
  }
}

MetricValue parse_csv_row(const std::string& line) {
  const auto f = split_csv(line);
  if (f.size() != 8) throw FormatError("csv: expected 8 fields, got " + std::to_string(f.size()));
  MetricValue v;
  v.name = f[0];
  v.phase = phase_from_string(f[1]);
  v.stream_name = f[2];
  v.task_label = std::stoi(f[3]);
  v.experience_index = std::stoll(f[4]);
  v.granularity = granularity_from_string(f[5]);
  v.x_axis = std::stoull(f[6]);
  v.value = std::stod(f[7]);
  return v;
}

// ---------------------------------------------------------------------------
// File loggers

FileLogger::FileLogger(std::filesystem::path path, bool append) : path_(std::move(path)) {
  fresh_ = !append || !std::filesystem::exists(path_) || std::filesystem::file_size(path_) == 0;
  out_.open(path_, std::ios::binary | (append ? std::ios::app : std::ios::trunc));
  if (!out_) throw IoError("cannot open log file " + path_.string() + " for writing");
}

void FileLogger::write(const std::string& text) {
  out_ << text;
  if (!out_) throw IoError("write failed on " + path_.string());
}

void FileLogger::flush() { out_.flush(); }

void FileLogger::close() {
  if (out_.is_open()) {
    out_.flush();
    out_.close();
  }
}

std::uint64_t FileLogger::offset() const {
  auto& out = const_cast<std::ofstream&>(out_);
  out.flush();
  return static_cast<std::uint64_t>(out.tellp());
}

CsvLogger::CsvLogger(std::filesystem::path path, bool append) : FileLogger(std::move(path), append) {
  if (fresh()) write(csv_header() + "\n");
}

void CsvLogger::log_metric(const MetricValue& v) { write(csv_row(v) + "\n"); }

JsonlLogger::JsonlLogger(std::filesystem::path path, bool append) : FileLogger(std::move(path), append) {}

void JsonlLogger::log_metric(const MetricValue& v) { write(jsonl_line(v) + "\n"); }

TextLogger::TextLogger(std::filesystem::path path, bool append)
    : file_(std::make_unique<std::ofstream>(path, std::ios::binary | (append ? std::ios::app : std::ios::trunc))),
      path_(path) {
  if (!*file_) throw IoError("cannot open log file " + path.string() + " for writing");
  sink_ = file_.get();
}

void TextLogger::log_metric(const MetricValue& v) {
  if (v.granularity != Granularity::experience && v.granularity != Granularity::stream) return;
  *sink_ << v.name << " = " << format_value(v.value) << "\n";
}

void TextLogger::on_training_exp_end(const ExperienceSummary& s) {
  *sink_ << "-- finished training experience " << s.experience_index << " at iteration " << s.x_axis << "\n";
}

void TextLogger::on_eval_end(const EvalSummary& s) {
  *sink_ << "-- eval on " << s.stream_name << " stream: accuracy " << format_value(s.stream_accuracy);
  if (s.trained_through) *sink_ << " (trained through experience " << *s.trained_through << ")";
  *sink_ << "\n";
}

void TextLogger::flush() { sink_->flush(); }

void TextLogger::close() {
  sink_->flush();
  if (file_) file_->close();
}

std::uint64_t TextLogger::offset() const {
  if (!file_) return 0;
  file_->flush();
  return static_cast<std::uint64_t>(file_->tellp());
}

// ---------------------------------------------------------------------------
// EvaluationPlugin

EvaluationPlugin::EvaluationPlugin(std::vector<std::shared_ptr<Logger>> loggers, EvaluationOptions options)
    : Evaluator("evaluation"), loggers_(std::move(loggers)), options_(options) {
  for (const auto& l : loggers_)
    if (!l) throw InvalidArgument("EvaluationPlugin: null logger");
}

void EvaluationPlugin::emit(std::vector<MetricValue>& out, const std::string& kind, double value, Granularity g,
                            Phase phase, const StrategyState& s, const std::string& stream, int task,
                            std::int64_t exp) const {
  MetricValue v;
  v.name = canonical_name(kind, phase, stream, task, exp, g);
  v.value = value;
  v.x_axis = s.clock.total_iterations;
  v.granularity = g;
  v.phase = phase;
  v.stream_name = stream;
  v.task_label = task;
  v.experience_index = g == Granularity::stream ? -1 : exp;
  out.push_back(std::move(v));
}

void EvaluationPlugin::dispatch(const std::vector<MetricValue>& values) {
  for (const MetricValue& v : values) {
    history_.push_back(v);
    for (const auto& logger : loggers_) {
      try {
        logger->log_metric(v);
      } catch (const std::exception& e) {
        throw LoggingError("logger '" + logger->name() + "' failed: " + e.what());
      }
    }
  }
}

void EvaluationPlugin::on(CallbackPoint p, StrategyState& s) {
  std::vector<MetricValue> out;
  const Experience* exp = s.experience;
  switch (p) {
    case CallbackPoint::before_training_exp:
      train_exp_acc_.reset();
      epoch_acc_.reset();
      epoch_loss_.reset();
      if (options_.timing) timer_.start();
      break;

    case CallbackPoint::after_training_iteration: {
      const double b = static_cast<double>(s.mbatch.size());
      mb_acc_.reset();
      mb_loss_.reset();
      accuracy_update(mb_acc_, s.mb_logits, s.mbatch.y);
      mb_loss_.add(s.loss * b, b);
      epoch_acc_.add(mb_acc_.sum(), mb_acc_.weight());
      epoch_loss_.add(mb_loss_.sum(), mb_loss_.weight());
      const int task = exp->task_label;
      const auto idx = static_cast<std::int64_t>(exp->index);
      emit(out, "Acc", mb_acc_.result(), Granularity::minibatch, Phase::train, s, exp->stream_name, task, idx);
      emit(out, "Loss", mb_loss_.result(), Granularity::minibatch, Phase::train, s, exp->stream_name, task, idx);
      mb_acc_.reset();
      mb_loss_.reset();
      break;
    }

    case CallbackPoint::after_training_epoch: {
      const int task = exp->task_label;
      const auto idx = static_cast<std::int64_t>(exp->index);
      emit(out, "Acc", epoch_acc_.result(), Granularity::epoch, Phase::train, s, exp->stream_name, task, idx);
      emit(out, "Loss", epoch_loss_.result(), Granularity::epoch, Phase::train, s, exp->stream_name, task, idx);
      train_exp_acc_.add(epoch_acc_.result(), 1.0);
      epoch_acc_.reset();
      epoch_loss_.reset();
      break;
    }

    case CallbackPoint::after_training_exp: {
      const int task = exp->task_label;
      const auto idx = static_cast<std::int64_t>(exp->index);
      ExperienceSummary summary;
      summary.experience_index = exp->index;
      summary.x_axis = s.clock.total_iterations;
      if (train_exp_acc_.weight() > 0.0) {
        summary.train_accuracy = train_exp_acc_.result();
        emit(out, "Acc", train_exp_acc_.result(), Granularity::experience, Phase::train, s, exp->stream_name, task,
             idx);
      }
      if (options_.timing)
        emit(out, "Time", timer_.stop(), Granularity::experience, Phase::train, s, exp->stream_name, task, idx);
      train_exp_acc_.reset();
      dispatch(out);
      for (const auto& l : loggers_) l->on_training_exp_end(summary);
      return;
    }

    case CallbackPoint::before_eval:
      eval_results_.clear();
      stream_acc_.reset();
      stream_loss_.reset();
      eval_exp_acc_.reset();
      eval_exp_loss_.reset();
      eval_stream_.clear();
      break;

    case CallbackPoint::after_eval_iteration: {
      const double b = static_cast<double>(s.mbatch.size());
      RunningMean batch_acc;
      accuracy_update(batch_acc, s.mb_logits, s.mbatch.y);
      eval_exp_acc_.add(batch_acc.sum(), batch_acc.weight());
      stream_acc_.add(batch_acc.sum(), batch_acc.weight());
      eval_exp_loss_.add(s.loss * b, b);
      stream_loss_.add(s.loss * b, b);
      break;
    }

    case CallbackPoint::after_eval_exp: {
      const int task = exp->task_label;
      const auto idx = static_cast<std::int64_t>(exp->index);
      eval_stream_ = exp->stream_name;
      const double acc = eval_exp_acc_.result();
      emit(out, "Acc", acc, Granularity::experience, Phase::eval, s, exp->stream_name, task, idx);
      emit(out, "Loss", eval_exp_loss_.result(), Granularity::experience, Phase::eval, s, exp->stream_name, task, idx);
      if (s.clock.train_exp_counter > 0) {
        const std::size_t k = s.clock.train_exp_counter - 1;
        matrix_.record(k, exp->index, acc);
        // Only experiences already trained on can be forgotten.
        bool has_prior = false;
        for (std::size_t j = 0; j < k && !has_prior; ++j) has_prior = matrix_.get(j, exp->index).has_value();
        if (exp->index < k && has_prior)
          emit(out, "Forgetting", forgetting(matrix_, exp->index, k), Granularity::experience, Phase::eval, s,
               exp->stream_name, task, idx);
      }
      eval_exp_acc_.reset();
      eval_exp_loss_.reset();
      eval_results_.insert(eval_results_.end(), out.begin(), out.end());
      dispatch(out);
      return;
    }

    case CallbackPoint::after_eval: {
      emit(out, "Acc", stream_acc_.result(), Granularity::stream, Phase::eval, s, eval_stream_, 0, -1);
      emit(out, "Loss", stream_loss_.result(), Granularity::stream, Phase::eval, s, eval_stream_, 0, -1);
      EvalSummary summary;
      summary.stream_name = eval_stream_;
      summary.stream_accuracy = stream_acc_.result();
      summary.matrix = &matrix_;
      if (s.clock.train_exp_counter > 0) {
        const std::size_t n = s.clock.train_exp_counter;
        summary.trained_through = n - 1;
        bool complete = n >= 2;
        for (std::size_t i = 0; complete && i + 1 < n; ++i)
          complete = matrix_.get(n - 1, i).has_value() && matrix_.get(i, i).has_value();
        if (complete) emit(out, "BWT", bwt(matrix_, n), Granularity::stream, Phase::eval, s, eval_stream_, 0, -1);
      }
      stream_acc_.reset();
      stream_loss_.reset();
      eval_results_.insert(eval_results_.end(), out.begin(), out.end());
      dispatch(out);
      for (const auto& l : loggers_) l->on_eval_end(summary);
      return;
    }

    default:
      break;
  }
  dispatch(out);
}

namespace {

void save_mean(BinaryWriter& w, const RunningMean& m) {
  w.f64(m.sum());
  w.f64(m.weight());
}

void load_mean(BinaryReader& r, RunningMean& m) {
  const double sum = r.f64();
  const double weight = r.f64();
  m.restore(sum, weight);
}

}  // namespace

void EvaluationPlugin::save(BinaryWriter& w) const {
  w.u64(matrix_.entries().size());
  for (const auto& [key, acc] : matrix_.entries()) {
    w.u64(key.first);
    w.u64(key.second);
    w.f64(acc);
  }
  for (const RunningMean* m : {&mb_acc_, &mb_loss_, &epoch_acc_, &epoch_loss_, &train_exp_acc_, &eval_exp_acc_,
                               &eval_exp_loss_, &stream_acc_, &stream_loss_})
    save_mean(w, *m);
  w.str(eval_stream_);
}

void EvaluationPlugin::load(BinaryReader& r, const RestoreContext&) {
  matrix_.clear();
  for (std::uint64_t n = r.u64(); n > 0; --n) {
    const std::size_t k = r.u64();
    const std::size_t i = r.u64();
    matrix_.record(k, i, r.f64());
  }
  for (RunningMean* m : {&mb_acc_, &mb_loss_, &epoch_acc_, &epoch_loss_, &train_exp_acc_, &eval_exp_acc_,
                         &eval_exp_loss_, &stream_acc_, &stream_loss_})
    load_mean(r, *m);
  eval_stream_ = r.str();
}

}  // namespace cl
