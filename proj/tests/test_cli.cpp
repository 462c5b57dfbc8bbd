#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "procflow/corpus.hpp"
#include "procflow/fixtures.hpp"

using namespace procflow;
namespace fs = std::filesystem;

#ifndef PROCFLOW_BIN
#error "PROCFLOW_BIN must point at the CLI binary"
#endif

namespace {

struct RunResult {
  int code;
  std::string output;
};

RunResult run(const std::string& args) {
  const fs::path out_path = fs::temp_directory_path() / "procflow_cli_out.txt";
  const std::string cmd =
      std::string(PROCFLOW_BIN) + " " + args + " > " + out_path.string() + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return RunResult{WEXITSTATUS(raw), ss.str()};
}

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "procflow_cli_test";
  fs::create_directories(dir);
  return dir;
}

std::string write_fixture_corpus(int count, std::uint64_t seed, const std::string& name) {
  const auto vocab = make_vocab("cooking");
  std::vector<FlowGraph> corpus;
  for (int i = 0; i < count; ++i) {
    Rng rng(Rng::derive(seed, "cli" + std::to_string(i)));
    corpus.push_back(random_graph("doc" + std::to_string(i), "cooking", vocab, rng));
  }
  const std::string path = (scratch() / name).string();
  save_corpus(corpus, path);
  return path;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("no-such-subcommand").code == 2);
  CHECK(run("validate").code == 2);  // missing positional
  CHECK(run("evaluate --predicted x").code == 2);  // missing required flag
}

TEST_CASE("validate") {
  SECTION("valid corpus: exit 0, no output") {
    const std::string path = write_fixture_corpus(4, 1, "valid.jsonl");
    const RunResult r = run("validate " + path);
    CHECK(r.code == 0);
    CHECK(r.output.empty());
  }
  SECTION("cyclic record: exit 1, one violation line naming the record") {
    nlohmann::ordered_json j;
    j["id"] = "cyclic";
    j["domain"] = "cooking";
    j["steps"] = {{"chop", "then", "stir"}};
    j["nodes"] = {{{"id", 0}, {"start", 0}, {"end", 0}, {"tag", "Ac"}},
                  {{"id", 1}, {"start", 2}, {"end", 2}, {"tag", "Ac"}}};
    j["edges"] = {{{"src", 0}, {"dst", 1}, {"label", "Dest"}},
                  {{"src", 1}, {"dst", 0}, {"label", "Dest"}}};
    const std::string path = (scratch() / "cyclic.jsonl").string();
    std::ofstream(path) << j.dump() << "\n";
    const RunResult r = run("validate " + path);
    CHECK(r.code == 1);
    CHECK(r.output.find("cyclic\tcycle") != std::string::npos);
  }
  SECTION("missing file: exit 2") {
    CHECK(run("validate /nonexistent/corpus.jsonl").code == 2);
  }
}

TEST_CASE("stats counts words and steps") {
  nlohmann::ordered_json j;
  j["id"] = "tiny";
  j["domain"] = "crafts";
  j["steps"] = {{"cut", "the", "paper"}, {"fold", "the", "corner"}};
  j["nodes"] = nlohmann::json::array();
  j["edges"] = nlohmann::json::array();
  const std::string path = (scratch() / "tiny.jsonl").string();
  std::ofstream(path) << j.dump() << "\n";
  const RunResult r = run("stats " + path);
  REQUIRE(r.code == 0);
  // 6 words over 2 steps; "cut the paper" is 13 chars, "fold the corner" is 15
  CHECK(r.output.find("crafts\t1\t28.00") != std::string::npos);
  CHECK(r.output.find("\t6.00") != std::string::npos);
  CHECK(r.output.find("\t2.00") != std::string::npos);
}

TEST_CASE("stats means match an independent recount") {
  const std::string path = write_fixture_corpus(30, 77, "stats30.jsonl");
  const auto corpus = load_corpus(path);
  // spreadsheet-style recount, independent of the stats implementation
  auto mean_std = [&](auto&& per_doc) {
    double sum = 0.0;
    std::vector<double> vals;
    for (const FlowGraph& g : corpus) {
      vals.push_back(per_doc(g));
      sum += vals.back();
    }
    const double mean = sum / static_cast<double>(vals.size());
    double sq = 0.0;
    for (double v : vals) sq += (v - mean) * (v - mean);
    return std::pair<double, double>(mean, std::sqrt(sq / static_cast<double>(vals.size())));
  };
  auto cell = [](std::pair<double, double> ms) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f±%.2f", ms.first, ms.second);
    return std::string(buf);
  };
  const auto words = mean_std([](const FlowGraph& g) {
    return static_cast<double>(g.document.token_count());
  });
  const auto chars = mean_std([](const FlowGraph& g) {
    std::size_t total = 0;
    for (const auto& step : g.document.steps()) {
      for (const Token& t : step) total += t.text.size();
      total += step.size() - 1;
    }
    return static_cast<double>(total);
  });
  const auto nodes = mean_std([](const FlowGraph& g) {
    return static_cast<double>(g.nodes.size());
  });

  const RunResult r = run("stats " + path);
  REQUIRE(r.code == 0);
  CHECK(r.output.find(cell(chars)) != std::string::npos);
  CHECK(r.output.find(cell(words)) != std::string::npos);
  CHECK(r.output.find(cell(nodes)) != std::string::npos);
}

TEST_CASE("folds prints one assignment per document plus round plans") {
  const std::string path = write_fixture_corpus(6, 2, "folds.jsonl");
  const RunResult r = run("folds " + path + " --folds 6 --seed 3");
  REQUIRE(r.code == 0);
  std::size_t doc_lines = 0, round_lines = 0;
  std::stringstream ss(r.output);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.rfind("round ", 0) == 0) {
      ++round_lines;
      CHECK(line.find("train") != std::string::npos);
      CHECK(line.find("validation") != std::string::npos);
      CHECK(line.find("test") != std::string::npos);
    } else if (line.rfind("doc", 0) == 0) {
      ++doc_lines;
    }
  }
  CHECK(doc_lines == 6);
  CHECK(round_lines == 6);
  // deterministic under a fixed seed
  CHECK(run("folds " + path + " --folds 6 --seed 3").output == r.output);
}

TEST_CASE("augment writes a corpus that validates") {
  const std::string path = write_fixture_corpus(5, 4, "aug_in.jsonl");
  const std::string out_path = (scratch() / "aug_out.jsonl").string();
  const RunResult r = run("augment " + path + " -o " + out_path + " --swap --seed 9");
  REQUIRE(r.code == 0);
  CHECK(run("validate " + out_path).code == 0);
  const auto augmented = load_corpus(out_path);
  CHECK(augmented.size() >= 5);

  // --replace without a lexicon is a usage error
  CHECK(run("augment " + path + " -o " + out_path + " --replace").code == 2);
}

TEST_CASE("train, predict, evaluate round trip") {
  const std::string train_path = write_fixture_corpus(3, 5, "train.jsonl");
  const std::string test_path = write_fixture_corpus(2, 6, "test.jsonl");
  const fs::path dir = scratch();
  const std::string tiny =
      "--set embedding_dim=4 hidden_dim=6 buckets=64 proj_dim=4 "
      "target_warmup_steps=2 target_decay_steps=8 target_batch=2 seed=7";

  const std::string node_ckpt = (dir / "node.ckpt").string();
  const std::string edge_ckpt = (dir / "edge.ckpt").string();
  REQUIRE(run("train-node --target " + train_path + " -o " + node_ckpt + " " + tiny).code == 0);
  REQUIRE(run("train-edge --target " + train_path + " -o " + edge_ckpt + " " + tiny).code == 0);

  const std::string pred_path = (dir / "pred.jsonl").string();
  REQUIRE(run("predict --node-model " + node_ckpt + " --edge-model " + edge_ckpt + " -i " +
              test_path + " -o " + pred_path)
              .code == 0);
  CHECK(run("validate " + pred_path).code == 0);

  SECTION("prediction is deterministic") {
    const std::string again = (dir / "pred2.jsonl").string();
    REQUIRE(run("predict --node-model " + node_ckpt + " --edge-model " + edge_ckpt + " -i " +
                test_path + " -o " + again)
                .code == 0);
    CHECK(read_file(again) == read_file(pred_path));
  }
  SECTION("gold-node mode copies the input nodes") {
    const std::string gp = (dir / "pred_gold.jsonl").string();
    REQUIRE(run("predict --gold-nodes --edge-model " + edge_ckpt + " -i " + test_path + " -o " +
                gp)
                .code == 0);
    const auto gold = load_corpus(test_path);
    const auto pred = load_corpus(gp);
    REQUIRE(pred.size() == gold.size());
    for (std::size_t i = 0; i < pred.size(); ++i) CHECK(pred[i].nodes == gold[i].nodes);
    // a missing node model is only an error without --gold-nodes
    CHECK(run("predict --edge-model " + edge_ckpt + " -i " + test_path + " -o " + gp).code == 2);
  }
  SECTION("evaluating gold against itself is perfect in every mode") {
    for (const char* mode : {"node", "edge", "pipeline"}) {
      const RunResult r =
          run("evaluate --predicted " + test_path + " --gold " + test_path + " --mode " + mode);
      REQUIRE(r.code == 0);
      CHECK(r.output.find("micro\tP 1.0000\tR 1.0000\tF1 1.0000") != std::string::npos);
    }
  }
  SECTION("evaluate output is stable and includes per-document lines") {
    const std::string cmd =
        "evaluate --predicted " + pred_path + " --gold " + test_path + " --mode pipeline";
    const RunResult r = run(cmd);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("doc0\t") != std::string::npos);
    CHECK(r.output.find("micro\t") != std::string::npos);
    CHECK(run(cmd).output == r.output);
  }
  SECTION("pipeline drop report against gold-node edge predictions") {
    const std::string gp = (dir / "pred_gold.jsonl").string();
    REQUIRE(run("predict --gold-nodes --edge-model " + edge_ckpt + " -i " + test_path + " -o " +
                gp)
                .code == 0);
    const RunResult r = run("evaluate --predicted " + pred_path + " --gold " + test_path +
                            " --mode pipeline --gold-node-predicted " + gp);
    REQUIRE(r.code == 0);
    CHECK(r.output.find("gold-node edge\tF1 ") != std::string::npos);
    CHECK(r.output.find("pipeline drop\t") != std::string::npos);
  }
  SECTION("mismatched document ids are an error") {
    const auto vocab = make_vocab("cooking");
    std::vector<FlowGraph> other;
    for (int i = 0; i < 2; ++i) {
      Rng rng(Rng::derive(99, "zzz" + std::to_string(i)));
      other.push_back(random_graph("zzz" + std::to_string(i), "cooking", vocab, rng));
    }
    const std::string other_path = (dir / "other.jsonl").string();
    save_corpus(other, other_path);
    CHECK(run("evaluate --predicted " + pred_path + " --gold " + other_path + " --mode node")
              .code == 2);
  }
}

TEST_CASE("agreement of an annotation with itself is perfect") {
  const std::string path = write_fixture_corpus(3, 8, "agree.jsonl");
  const RunResult r = run("agreement --a " + path + " --b " + path);
  REQUIRE(r.code == 0);
  CHECK(r.output.find("micro\tnode F1 1.0000\tedge F1 1.0000") != std::string::npos);
}
