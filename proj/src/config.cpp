#include "clstream/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "clstream/error.hpp"
#include "clstream/serialize.hpp"

namespace cl {

using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// TOML subset

class TomlParser {
 public:
  explicit TomlParser(std::string_view text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    std::size_t line_no = 0;
    std::string pending;
    std::size_t pending_line = 0;
    std::istringstream in{std::string(text_)};
    for (std::string line; std::getline(in, line);) {
      ++line_no;
      line = strip_comment(line);
      if (!pending.empty()) {
        pending += " " + line;
        if (!balanced(pending)) continue;
        line = std::move(pending);
        pending.clear();
        line_ = pending_line;
      } else {
        line_ = line_no;
      }
      const std::string t = trim(line);
      if (t.empty()) continue;
      if (t.front() == '[') {
        if (t.back() != ']' || t.size() < 3) fail("malformed table header");
        table = &open_table(root, trim(t.substr(1, t.size() - 2)));
        continue;
      }
      if (!balanced(t)) {
        pending = t;
        pending_line = line_no;
        continue;
      }
      const auto eq = t.find('=');
      if (eq == std::string::npos) fail("expected key = value");
      const std::string key = trim(t.substr(0, eq));
      if (!valid_key(key)) fail("invalid key '" + key + "'");
      if (table->contains(key)) fail("duplicate key '" + key + "'");
      std::string_view rest = t;
      rest.remove_prefix(eq + 1);
      std::size_t pos = 0;
      const std::string value_text = trim(std::string(rest));
      (*table)[key] = parse_value(value_text, pos);
      if (!trim(value_text.substr(pos)).empty()) fail("trailing characters after value");
    }
    if (!pending.empty()) {
      line_ = pending_line;
      fail("unterminated array");
    }
    return root;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError("line " + std::to_string(line_) + ": " + msg);
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
  }

  static bool valid_key(const std::string& k) {
    if (k.empty()) return false;
    for (char c : k)
      if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
  }

  static std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '\\' && in_str) {
        ++i;
      } else if (line[i] == '"') {
        in_str = !in_str;
      } else if (line[i] == '#' && !in_str) {
        return line.substr(0, i);
      }
    }
    return line;
  }

  static bool balanced(const std::string& s) {
    int depth = 0;
    bool in_str = false;
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (in_str && s[i] == '\\') {
        ++i;
      } else if (s[i] == '"') {
        in_str = !in_str;
      } else if (!in_str && s[i] == '[') {
        ++depth;
      } else if (!in_str && s[i] == ']') {
        --depth;
      }
    }
    return depth <= 0;
  }

  json& open_table(json& root, const std::string& dotted) {
    json* node = &root;
    std::size_t start = 0;
    while (true) {
      const auto dot = dotted.find('.', start);
      const std::string part = trim(dotted.substr(start, dot == std::string::npos ? std::string::npos : dot - start));
      if (!valid_key(part)) fail("invalid table name '" + dotted + "'");
      json& child = (*node)[part];
      if (child.is_null()) child = json::object();
      if (!child.is_object()) fail("'" + part + "' is already a value");
      node = &child;
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    if (!opened_.insert(dotted).second) fail("table [" + dotted + "] defined twice");
    return *node;
  }

  json parse_value(const std::string& s, std::size_t& pos) {
    skip_ws(s, pos);
    if (pos >= s.size()) fail("missing value");
    const char c = s[pos];
    if (c == '"') return parse_string(s, pos);
    if (c == '[') {
      json arr = json::array();
      ++pos;
      skip_ws(s, pos);
      if (pos < s.size() && s[pos] == ']') {
        ++pos;
        return arr;
      }
      while (true) {
        arr.push_back(parse_value(s, pos));
        skip_ws(s, pos);
        if (pos >= s.size()) fail("unterminated array");
        if (s[pos] == ',') {
          ++pos;
          skip_ws(s, pos);
          if (pos < s.size() && s[pos] == ']') {
            ++pos;
            return arr;
          }
          continue;
        }
        if (s[pos] == ']') {
          ++pos;
          return arr;
        }
        fail("expected ',' or ']' in array");
      }
    }
    std::size_t end = pos;
    while (end < s.size() && s[end] != ',' && s[end] != ']' && !std::isspace(static_cast<unsigned char>(s[end])))
      ++end;
    std::string tok = s.substr(pos, end - pos);
    pos = end;
    if (tok == "true") return true;
    if (tok == "false") return false;
    std::string digits;
    for (char ch : tok)
      if (ch != '_') digits += ch;
    const bool is_float = digits.find_first_of(".eE") != std::string::npos || digits == "inf" || digits == "nan";
    try {
      std::size_t used = 0;
      if (is_float) {
        const double v = std::stod(digits, &used);
        if (used == digits.size()) return v;
      } else {
        const long long v = std::stoll(digits, &used, 10);
        if (used == digits.size()) return v;
      }
    } catch (const std::exception&) {
    }
    fail("cannot parse value '" + tok + "'");
  }

  std::string parse_string(const std::string& s, std::size_t& pos) {
    std::string out;
    ++pos;
    while (pos < s.size()) {
      const char c = s[pos++];
      if (c == '"') return out;
      if (c != '\\') {
        out += c;
        continue;
      }
      if (pos >= s.size()) break;
      switch (s[pos++]) {
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        default: fail("unsupported escape in string");
      }
    }
    fail("unterminated string");
  }

  static void skip_ws(const std::string& s, std::size_t& pos) {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }

  std::string_view text_;
  std::size_t line_ = 0;
  std::set<std::string> opened_;
};

// ---------------------------------------------------------------------------
// Schema

// Reads typed fields from one table and remembers which keys were used.
class Table {
 public:
  Table(const json& node, std::string path) : node_(node), path_(std::move(path)) {
    if (!node_.is_object()) throw ConfigError(label("") + ": expected a table");
  }

  bool has(const std::string& key) const { return node_.contains(key); }

  std::string field(const std::string& key) const { return label(key); }

  template <typename T>
  void get(const std::string& key, T& out) {
    if (!node_.contains(key)) return;
    used_.insert(key);
    const json& v = node_.at(key);
    read(key, v, out);
  }

  Table sub(const std::string& key) {
    used_.insert(key);
    static const json empty = json::object();
    return Table(node_.contains(key) ? node_.at(key) : empty, label(key));
  }

  void finish() const {
    for (const auto& [key, _] : node_.items())
      if (!used_.count(key)) throw ConfigError(label(key) + ": unknown key");
  }

 private:
  std::string label(const std::string& key) const {
    if (path_.empty()) return key;
    return key.empty() ? path_ : path_ + "." + key;
  }

  void read(const std::string& key, const json& v, std::string& out) const {
    if (!v.is_string()) throw ConfigError(label(key) + ": expected a string");
    out = v.get<std::string>();
  }
  void read(const std::string& key, const json& v, std::filesystem::path& out) const {
    std::string s;
    read(key, v, s);
    out = s;
  }
  void read(const std::string& key, const json& v, bool& out) const {
    if (!v.is_boolean()) throw ConfigError(label(key) + ": expected true or false");
    out = v.get<bool>();
  }
  void read(const std::string& key, const json& v, double& out) const {
    if (!v.is_number()) throw ConfigError(label(key) + ": expected a number");
    out = v.get<double>();
  }
  void read(const std::string& key, const json& v, std::size_t& out) const {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(label(key) + ": expected a non-negative integer");
    out = v.get<std::size_t>();
  }
  template <typename T>
  void read(const std::string& key, const json& v, std::vector<T>& out) const {
    if (!v.is_array()) throw ConfigError(label(key) + ": expected an array");
    out.clear();
    for (const json& e : v) {
      T item{};
      read(key, e, item);
      out.push_back(item);
    }
  }
  void read(const std::string& key, const json& v, ClassId& out) const {
    if (!v.is_number_integer() || v.get<long long>() < 0)
      throw ConfigError(label(key) + ": expected a non-negative integer");
    out = static_cast<ClassId>(v.get<long long>());
  }
  template <typename T>
  void read(const std::string& key, const json& v, std::optional<T>& out) const {
    T tmp{};
    read(key, v, tmp);
    out = std::move(tmp);
  }

  const json& node_;
  std::string path_;
  std::set<std::string> used_;
};

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

[[noreturn]] void bad(const std::string& field, const std::string& msg) { throw ConfigError(field + ": " + msg); }

void require_positive(const Table& t, const std::string& key, double v) {
  if (!(v > 0.0)) bad(t.field(key), "must be positive");
}

void require_one_of(const Table& t, const std::string& key, const std::string& v,
                    std::initializer_list<const char*> allowed) {
  std::string list;
  for (const char* a : allowed) {
    if (v == a) return;
    list += list.empty() ? a : std::string(", ") + a;
  }
  bad(t.field(key), "unknown value '" + v + "' (expected one of: " + list + ")");
}

void read_synthetic(Table& t, SyntheticSpec& s) {
  t.get("n_classes", s.n_classes);
  t.get("n_per_class", s.n_per_class);
  t.get("n_test_per_class", s.n_test_per_class);
  t.get("dim", s.dim);
  t.get("spread", s.spread);
  require_positive(t, "n_classes", static_cast<double>(s.n_classes));
  require_positive(t, "n_per_class", static_cast<double>(s.n_per_class));
  require_positive(t, "n_test_per_class", static_cast<double>(s.n_test_per_class));
  require_positive(t, "dim", static_cast<double>(s.dim));
  require_positive(t, "spread", s.spread);
}

}  // namespace

json parse_toml(std::string_view text) { return TomlParser(text).parse(); }

ExperimentConfig config_from_json(const json& doc) {
  ExperimentConfig c;
  Table root(doc, "");
  if (root.has("seed")) {
    const json& v = doc.at("seed");
    if (!v.is_number_integer() || v.get<long long>() < 0) bad("seed", "expected a non-negative integer");
  }
  std::size_t seed = 0;
  root.get("seed", seed);
  c.seed = seed;
  root.get("output_dir", c.output_dir);
  root.get("loggers", c.loggers);
  for (const auto& l : c.loggers) require_one_of(root, "loggers", l, {"text", "csv", "jsonl"});
  for (std::size_t i = 0; i < c.loggers.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (c.loggers[i] == c.loggers[j]) bad("loggers", "'" + c.loggers[i] + "' listed twice");

  {
    Table t = root.sub("benchmark");
    BenchmarkConfig& b = c.benchmark;
    t.get("kind", b.kind);
    require_one_of(t, "kind", b.kind, {"split_synthetic", "split_mnist", "instance_incremental"});
    t.get("n_experiences", b.n_experiences);
    require_positive(t, "n_experiences", static_cast<double>(b.n_experiences));
    if (b.kind == "instance_incremental") {
      t.get("source", b.source);
      require_one_of(t, "source", b.source, {"synthetic", "mnist"});
    }
    const bool mnist = b.kind == "split_mnist" || (b.kind == "instance_incremental" && b.source == "mnist");
    if (mnist) {
      t.get("data_dir", b.data_dir);
      if (b.data_dir.empty()) bad(t.field("data_dir"), "required for MNIST benchmarks");
      if (!std::filesystem::is_directory(b.data_dir))
        bad(t.field("data_dir"), "directory '" + b.data_dir.string() + "' does not exist");
    } else {
      read_synthetic(t, b.synthetic);
    }
    if (b.kind != "instance_incremental") {
      t.get("task_labels", b.task_labels);
      t.get("class_order", b.class_order);
      const std::size_t n_classes = mnist ? 10 : b.synthetic.n_classes;
      if (n_classes % b.n_experiences != 0)
        bad(t.field("n_experiences"), "must divide the number of classes (" + std::to_string(n_classes) + ")");
      if (b.class_order) {
        std::vector<ClassId> sorted = *b.class_order;
        std::sort(sorted.begin(), sorted.end());
        bool permutation = sorted.size() == n_classes;
        for (std::size_t i = 0; permutation && i < n_classes; ++i) permutation = sorted[i] == static_cast<ClassId>(i);
        if (!permutation)
          bad(t.field("class_order"), "must be a permutation of 0.." + std::to_string(n_classes - 1));
      }
    } else if (!mnist && b.n_experiences > b.synthetic.n_classes * b.synthetic.n_per_class) {
      bad(t.field("n_experiences"), "exceeds the number of training rows");
    }
    t.finish();
  }
  {
    Table t = root.sub("model");
    t.get("hidden", c.model.hidden);
    for (std::size_t h : c.model.hidden)
      if (h == 0) bad(t.field("hidden"), "layer sizes must be positive");
    t.get("head", c.model.head);
    require_one_of(t, "head", c.model.head, {"incremental", "multihead"});
    t.finish();
  }
  {
    Table t = root.sub("strategy");
    StrategyConfig& s = c.strategy;
    t.get("name", s.name);
    require_one_of(t, "name", s.name, {"naive", "cumulative", "replay", "ewc", "lwf"});
    if (s.name == "replay") {
      t.get("mem_size", s.mem_size);
      require_positive(t, "mem_size", static_cast<double>(s.mem_size));
      t.get("policy", s.policy);
      require_one_of(t, "policy", s.policy, {"reservoir", "class_balanced", "experience_balanced"});
    } else if (s.name == "ewc") {
      t.get("lambda", s.lambda);
      if (!(s.lambda >= 0.0)) bad(t.field("lambda"), "must be non-negative");
      t.get("fisher_batches", s.fisher_batches);
      require_positive(t, "fisher_batches", static_cast<double>(s.fisher_batches));
    } else if (s.name == "lwf") {
      t.get("alpha", s.alpha);
      t.get("temperature", s.temperature);
      if (!(s.alpha >= 0.0)) bad(t.field("alpha"), "must be non-negative");
      require_positive(t, "temperature", s.temperature);
    }
    t.finish();
  }
  {
    Table t = root.sub("train");
    t.get("lr", c.train.lr);
    t.get("epochs", c.train.epochs);
    t.get("batch_size", c.train.batch_size);
    t.get("eval_batch_size", c.train.eval_batch_size);
    require_positive(t, "lr", c.train.lr);
    require_positive(t, "epochs", static_cast<double>(c.train.epochs));
    require_positive(t, "batch_size", static_cast<double>(c.train.batch_size));
    require_positive(t, "eval_batch_size", static_cast<double>(c.train.eval_batch_size));
    t.finish();
  }
  {
    Table t = root.sub("metrics");
    t.get("timing", c.timing);
    t.finish();
  }
  {
    Table t = root.sub("checkpoint");
    t.get("path", c.checkpoint.path);
    t.get("save_every_exp", c.checkpoint.save_every_exp);
    t.finish();
  }
  root.finish();
  return c;
}

ExperimentConfig parse_config(std::string_view text) { return config_from_json(parse_toml(text)); }

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json canonical_json(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["loggers"] = c.loggers;
  const BenchmarkConfig& b = c.benchmark;
  json& jb = j["benchmark"];
  jb["kind"] = b.kind;
  jb["n_experiences"] = b.n_experiences;
  jb["source"] = b.source;
  jb["data_dir"] = b.data_dir.string();
  jb["task_labels"] = b.task_labels;
  jb["class_order"] = b.class_order ? json(*b.class_order) : json();
  jb["synthetic"] = {{"n_classes", b.synthetic.n_classes},
                     {"n_per_class", b.synthetic.n_per_class},
                     {"n_test_per_class", b.synthetic.n_test_per_class},
                     {"dim", b.synthetic.dim},
                     {"spread", format_double(b.synthetic.spread)}};
  j["model"] = {{"hidden", c.model.hidden}, {"head", c.model.head}};
  const StrategyConfig& s = c.strategy;
  j["strategy"] = {{"name", s.name},
                   {"mem_size", s.mem_size},
                   {"policy", s.policy},
                   {"lambda", format_double(s.lambda)},
                   {"fisher_batches", s.fisher_batches},
                   {"alpha", format_double(s.alpha)},
                   {"temperature", format_double(s.temperature)}};
  j["train"] = {{"lr", format_double(c.train.lr)},
                {"epochs", c.train.epochs},
                {"batch_size", c.train.batch_size},
                {"eval_batch_size", c.train.eval_batch_size}};
  j["metrics"] = {{"timing", c.timing}};
  return j;
}

std::uint64_t config_digest(const ExperimentConfig& c) { return fnv1a64(canonical_json(c).dump()); }

}  // namespace cl
