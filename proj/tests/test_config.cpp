#include <doctest.h>

#include "clstream/config.hpp"
#include "clstream/error.hpp"
#include "support.hpp"

using namespace cl;

namespace {

const char* kFull = R"(# replay run
seed = 7
output_dir = "runs/replay"
loggers = ["csv", "jsonl", "text"]

[benchmark]
kind = "split_synthetic"
n_experiences = 5
n_classes = 10
n_per_class = 40
n_test_per_class = 20
dim = 16
spread = 0.5
class_order = [9, 8, 7, 6, 5, 4, 3, 2, 1, 0]

[model]
hidden = [32, 16]
head = "multihead"

[strategy]
name = "replay"
mem_size = 50
policy = "class_balanced"

[train]
lr = 0.1
epochs = 3
batch_size = 16

[metrics]
timing = true

[checkpoint]
path = "ck.clckpt"
save_every_exp = true
)";

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("TOML subset parsing") {
  const auto doc = parse_toml("a = 1\nb = -2.5\nc = \"x # y\"\nd = [1, 2]\ne = true\n[t.u]\nk = \"lit\" # note\n");
  CHECK(doc["a"] == 1);
  CHECK(doc["b"] == -2.5);
  CHECK(doc["c"] == "x # y");
  CHECK(doc["d"] == nlohmann::json::array({1, 2}));
  CHECK(doc["e"] == true);
  CHECK(doc["t"]["u"]["k"] == "lit");

  CHECK_THROWS_AS(parse_toml("a = 1\na = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("a = \n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("[broken\n"), ConfigError);
  CHECK_THROWS_AS(parse_toml("just words\n"), ConfigError);
}

TEST_CASE("a full config parses into typed fields") {
  const ExperimentConfig c = parse_config(kFull);
  CHECK(c.seed == 7);
  CHECK(c.output_dir == "runs/replay");
  CHECK(c.loggers == std::vector<std::string>{"csv", "jsonl", "text"});
  CHECK(c.benchmark.n_experiences == 5);
  CHECK(c.benchmark.synthetic.n_per_class == 40);
  REQUIRE(c.benchmark.class_order.has_value());
  CHECK(c.benchmark.class_order->front() == 9);
  CHECK(c.model.hidden == std::vector<std::size_t>{32, 16});
  CHECK(c.model.head == "multihead");
  CHECK(c.strategy.name == "replay");
  CHECK(c.strategy.mem_size == 50);
  CHECK(c.strategy.policy == "class_balanced");
  CHECK(c.train.lr == 0.1);
  CHECK(c.train.epochs == 3);
  CHECK(c.timing);
  CHECK(c.checkpoint.path == "ck.clckpt");
  CHECK(c.checkpoint.save_every_exp);

  const ExperimentConfig d = parse_config("");
  CHECK(d.strategy.name == "naive");
  CHECK(d.model.hidden == std::vector<std::size_t>{32});
  CHECK(d.loggers == std::vector<std::string>{"csv"});
}

TEST_CASE("errors name the offending field") {
  CHECK(message_of("[strategy]\nname = \"gem\"\n").find("strategy.name") != std::string::npos);
  CHECK(message_of("[strategy]\nname = \"gem\"\n").find("gem") != std::string::npos);
  CHECK(message_of("[train]\nlearning_rate = 0.1\n").find("train.learning_rate") != std::string::npos);
  CHECK(message_of("colour = 1\n").find("colour") != std::string::npos);
  CHECK(message_of("[train]\nepochs = \"many\"\n").find("train.epochs") != std::string::npos);
  CHECK(message_of("[train]\nlr = -1\n").find("train.lr") != std::string::npos);
  CHECK(message_of("loggers = [\"tensorboard\"]\n").find("loggers") != std::string::npos);
  CHECK(message_of("[model]\nhead = \"progressive\"\n").find("model.head") != std::string::npos);
  CHECK(message_of("[strategy]\nname = \"naive\"\nmem_size = 5\n").find("strategy.mem_size") != std::string::npos);
  CHECK(message_of("[strategy]\nname = \"replay\"\nmem_size = 0\n").find("strategy.mem_size") != std::string::npos);
  CHECK(message_of("[strategy]\nname = \"lwf\"\ntemperature = 0\n").find("strategy.temperature") != std::string::npos);
  CHECK(message_of("[benchmark]\nkind = \"split_mnist\"\ndata_dir = \"/no/such/dir\"\n").find("benchmark.data_dir") !=
        std::string::npos);
  CHECK(message_of("[benchmark]\nn_experiences = 3\n").find("benchmark.n_experiences") != std::string::npos);
  CHECK(message_of("[benchmark]\nclass_order = [0, 1, 2]\n").find("benchmark.class_order") != std::string::npos);
  CHECK_THROWS_AS(load_config("/no/such/config.toml"), ConfigError);
}

TEST_CASE("digest tracks result-relevant settings only") {
  const ExperimentConfig base = parse_config(kFull);
  CHECK(config_digest(base) == config_digest(parse_config(kFull)));

  ExperimentConfig moved = base;
  moved.output_dir = "elsewhere";
  moved.checkpoint.path = "other.clckpt";
  CHECK(config_digest(moved) == config_digest(base));

  ExperimentConfig reseeded = base;
  reseeded.seed = 8;
  CHECK(config_digest(reseeded) != config_digest(base));
  ExperimentConfig faster = base;
  faster.train.lr = 0.1 + 1e-12;
  CHECK(config_digest(faster) != config_digest(base));

  // Spelling out a default changes nothing.
  CHECK(config_digest(parse_config("[train]\nlr = 0.05\n")) == config_digest(parse_config("")));
  CHECK(canonical_json(base).contains("output_dir") == false);
}

TEST_CASE("config files load from disk") {
  const auto dir = test::temp_dir("config_files");
  test::write_file(dir / "c.toml", kFull);
  CHECK(config_digest(load_config(dir / "c.toml")) == config_digest(parse_config(kFull)));
}
