#include <sys/wait.h>
#include <unistd.h>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "macrograph/interactions.hpp"
#include "macrograph/io.hpp"
#include "macrograph/micro_graph.hpp"
#include "macrograph/model.hpp"
#include "macrograph/trainer.hpp"

using namespace macrograph;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("macrograph_cli_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
  int code = -1;
  std::string out, err;
};

RunResult run_cli(const TempDir& tmp, const std::string& args) {
  std::string out_f = tmp.file("_stdout"), err_f = tmp.file("_stderr");
  std::string cmd = std::string(CLI_PATH) + " " + args + " >" + out_f + " 2>" + err_f;
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.code = rc == -1 ? -1 : WEXITSTATUS(rc);
  r.out = read_file(out_f);
  r.err = read_file(err_f);
  return r;
}

// Small fixed corpus: every node gets early positives so the training window
// never leaves anything isolated; tail labels follow a fixed 75% pattern.
std::string pipeline_csv() {
  std::ostringstream out;
  out << "user_id,item_id,label,timestamp\n";
  int ts = 1000;
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << (u % 8) << ",1," << ts++ << "\n";
  for (int i = 0; i < 8; ++i)
    out << "user_" << ((i + 3) % 10) << ",item_" << i << ",1," << ts++ << "\n";
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << ((u + 1) % 8) << ",1," << ts++ << "\n";
  for (int k = 0; k < 92; ++k) {
    int u = (k * 5 + 2) % 10, i = (k * 3 + 1) % 8;
    out << "user_" << u << ",item_" << i << "," << (k % 4 != 3 ? 1 : 0) << "," << ts++ << "\n";
  }
  return out.str();
}

// The same corpus split for the delta pipeline: `base` plus ten genuinely new
// positive pairs with later timestamps.
std::string base_csv() {
  std::ostringstream out;
  out << "user_id,item_id,label,timestamp\n";
  int ts = 1000;
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << (u % 8) << ",1," << ts++ << "\n";
  for (int i = 0; i < 8; ++i)
    out << "user_" << ((i + 3) % 10) << ",item_" << i << ",1," << ts++ << "\n";
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << ((u + 1) % 8) << ",1," << ts++ << "\n";
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << ((u + 2) % 8) << ",0," << (1030 + u) << "\n";
  return out.str();
}

std::string delta_rows() {
  std::ostringstream out;
  for (int u = 0; u < 10; ++u)
    out << "user_" << u << ",item_" << ((u + 4) % 8) << ",1," << (1100 + u) << "\n";
  return out.str();
}

void write_text(const std::string& path, const std::string& text) {
  write_file_atomic(path, text);
}

std::string train_config_text() {
  return "lr = 1e-3\n"
         "lambda = 1e-5\n"
         "tau = 0.5\n"
         "epochs = 2\n"
         "seed = 9\n"
         "k_user = 4\n"
         "item_grouping = kmeans\n"
         "k_item = 3\n"
         "recent_len = 5\n"
         "d = 4\n"
         "d_prime = 3\n"
         "hidden = 16,8\n";
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("build-graph: artifacts, reruns, failure modes") {
  TempDir tmp;
  write_text(tmp.file("interactions.csv"), pipeline_csv());

  auto r = run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") + " --out " +
                            tmp.file("g1"));
  REQUIRE(r.code == 0);
  CHECK(fs::exists(tmp.file("g1/graph.bin")));
  CHECK(fs::exists(tmp.file("g1/id_map.csv")));

  auto log = load_log_file(tmp.file("g1/graph.bin"));
  CHECK(log.n_users == 10);
  CHECK(log.n_items == 8);
  CHECK(log.records.size() == 120);
  CHECK(log.user_ids[0] == "user_0");
  CHECK(log.item_ids[7] == "item_7");

  // the CLI is a thin shell over the library parser
  std::istringstream csv(pipeline_csv());
  auto direct = load_interactions(csv);
  CHECK(direct.records.size() == log.records.size());
  CHECK(direct.user_ids == log.user_ids);

  auto r2 = run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") +
                             " --out " + tmp.file("g2"));
  REQUIRE(r2.code == 0);
  CHECK(read_file(tmp.file("g1/graph.bin")) == read_file(tmp.file("g2/graph.bin")));
  CHECK(read_file(tmp.file("g1/id_map.csv")) == read_file(tmp.file("g2/id_map.csv")));

  SUBCASE("bad input leaves no partial output") {
    write_text(tmp.file("bad.csv"), "wrong,header\nuser_0,item_0,1,5\n");
    auto rb = run_cli(tmp, "build-graph --interactions " + tmp.file("bad.csv") + " --out " +
                               tmp.file("never"));
    CHECK(rb.code == 2);
    CHECK(!fs::exists(tmp.file("never")));
  }

  SUBCASE("argument errors exit 1") {
    CHECK(run_cli(tmp, "build-graph --out x").code == 1);           // missing required
    CHECK(run_cli(tmp, "no-such-command").code == 1);
    CHECK(run_cli(tmp, "").code == 1);                              // subcommand required
    CHECK(run_cli(tmp, "build-graph --bogus 1 --interactions a --out b").code == 1);
  }

  SUBCASE("help and version") {
    auto rh = run_cli(tmp, "--help");
    CHECK(rh.code == 0);
    CHECK(rh.out.find("build-graph") != std::string::npos);
    CHECK(rh.out.find("merge-deltas") != std::string::npos);
    auto rs = run_cli(tmp, "build-graph --help");
    CHECK(rs.code == 0);
    CHECK(rs.out.find("--interactions") != std::string::npos);
    auto rv = run_cli(tmp, "--version");
    CHECK(rv.code == 0);
    CHECK(rv.out.find("macrograph") != std::string::npos);
  }
}

TEST_CASE("group: seeded kmeans and category mode match the library") {
  TempDir tmp;
  write_text(tmp.file("interactions.csv"), pipeline_csv());
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") + " --out " +
                           tmp.file("g")).code == 0);

  auto r = run_cli(tmp, "group --graph " + tmp.file("g") +
                            " --side user --k 3 --seed 7 --out " + tmp.file("user.csv"));
  REQUIRE(r.code == 0);
  Side side = Side::item;
  auto got = load_grouping(tmp.file("user.csv"), tmp.file("user.csv.meta.json"), &side);
  CHECK(side == Side::user);
  CHECK(got.K == 3u);
  CHECK(got.assignments.size() == 10);

  auto log = load_log_file(tmp.file("g/graph.bin"));
  auto graph = MicroGraph::build(log);
  auto want = group(behavior_embeddings(graph, Side::user), 3, log.n_items, 7);
  CHECK(got.assignments == want.assignments);
  CHECK(got.objective == want.objective);

  // same seed, same bytes
  REQUIRE(run_cli(tmp, "group --graph " + tmp.file("g") +
                           " --side user --k 3 --seed 7 --out " + tmp.file("user2.csv")).code == 0);
  CHECK(read_file(tmp.file("user.csv")) == read_file(tmp.file("user2.csv")));
  CHECK(read_file(tmp.file("user.csv.meta.json")) == read_file(tmp.file("user2.csv.meta.json")));

  SUBCASE("category grouping on the item side") {
    std::ostringstream cats;
    cats << "item_id,category\n";
    for (int i = 0; i < 8; ++i)
      cats << "item_" << i << "," << (i % 2 ? "odd" : "even") << "\n";
    write_text(tmp.file("cats.csv"), cats.str());
    auto rc = run_cli(tmp, "group --graph " + tmp.file("g") +
                               " --side item --by-category " + tmp.file("cats.csv") + " --out " +
                               tmp.file("item.csv"));
    REQUIRE(rc.code == 0);
    Side s = Side::user;
    auto g2 = load_grouping(tmp.file("item.csv"), tmp.file("item.csv.meta.json"), &s);
    CHECK(s == Side::item);
    CHECK(g2.K == 2u);
    CHECK(g2.mode == "category");
    // dense categories: "even" < "odd"
    for (std::uint32_t i = 0; i < 8; ++i) CHECK(g2.assignments[i] == (i % 2 ? 1u : 0u));
  }

  SUBCASE("mode selection errors") {
    std::string base = "group --graph " + tmp.file("g");
    CHECK(run_cli(tmp, base + " --side user --out x.csv").code == 1);  // neither
    CHECK(run_cli(tmp, base + " --side user --k 2 --by-category c --out x.csv").code == 1);
    CHECK(run_cli(tmp, base + " --side user --by-category " + tmp.file("whatever.csv") +
                           " --out x.csv").code == 1);  // category maps are item-side
    CHECK(run_cli(tmp, base + " --side item --k 0 --out x.csv").code == 2);
    CHECK(run_cli(tmp, base + " --side middle --k 2 --out x.csv").code == 1);
    CHECK(run_cli(tmp, "group --graph " + tmp.file("nowhere") +
                           " --side user --k 2 --out x.csv").code == 2);
  }
}

TEST_CASE("build-macro: one subgraph per node, equal to the library build") {
  TempDir tmp;
  write_text(tmp.file("interactions.csv"), pipeline_csv());
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") + " --out " +
                           tmp.file("g")).code == 0);
  REQUIRE(run_cli(tmp, "group --graph " + tmp.file("g") + " --side user --k 3 --seed 7 --out " +
                           tmp.file("ug.csv")).code == 0);
  REQUIRE(run_cli(tmp, "group --graph " + tmp.file("g") + " --side item --k 2 --seed 8 --out " +
                           tmp.file("ig.csv")).code == 0);

  auto r = run_cli(tmp, "build-macro --graph " + tmp.file("g") + " --user-grouping " +
                            tmp.file("ug.csv") + " --item-grouping " + tmp.file("ig.csv") +
                            " --out " + tmp.file("macro"));
  REQUIRE(r.code == 0);

  auto log = load_log_file(tmp.file("macro/graph.bin"));
  auto graph = MicroGraph::build(log);
  Side side = Side::user;
  auto ug = load_grouping(tmp.file("macro/user_grouping.csv"),
                          tmp.file("macro/user_grouping.meta.json"), &side);
  auto ig = load_grouping(tmp.file("macro/item_grouping.csv"),
                          tmp.file("macro/item_grouping.meta.json"), &side);
  auto reg = MacroNodeRegistry::build(ug, ig);

  for (std::uint32_t u = 0; u < log.n_users; ++u) {
    auto got = load_subgraph(tmp.file("macro/u" + std::to_string(u) + ".json"));
    auto want = build_macro_subgraph(graph, reg, user_node(u));
    CHECK(got.hop1 == want.hop1);
    CHECK(got.hop2_pairs == want.hop2_pairs);
    CHECK(got.hop2_sums == want.hop2_sums);
  }
  for (std::uint32_t i = 0; i < log.n_items; ++i) {
    auto got = load_subgraph(tmp.file("macro/i" + std::to_string(i) + ".json"));
    auto want = build_macro_subgraph(graph, reg, item_node(i));
    CHECK(got.hop1 == want.hop1);
    CHECK(got.hop2_pairs == want.hop2_pairs);
  }

  auto meta = nlohmann::json::parse(read_file(tmp.file("macro/meta.json")));
  CHECK(meta["n_users"] == 10);
  CHECK(meta["n_items"] == 8);
  CHECK(meta["k_user"] == 3);
  CHECK(meta["k_item"] == 2);
  CHECK(meta["edge_count"] == graph.edge_count());
  CHECK(meta["watermark"] == 1119);  // last corpus timestamp

  SUBCASE("grouping/graph size mismatch is a data error") {
    write_text(tmp.file("tiny.csv"), "user_id,item_id,label,timestamp\na,b,1,1\nc,b,1,2\n");
    REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("tiny.csv") + " --out " +
                             tmp.file("gt")).code == 0);
    REQUIRE(run_cli(tmp, "group --graph " + tmp.file("gt") +
                             " --side user --k 1 --out " + tmp.file("tiny_ug.csv")).code == 0);
    auto rb = run_cli(tmp, "build-macro --graph " + tmp.file("g") + " --user-grouping " +
                               tmp.file("tiny_ug.csv") + " --item-grouping " + tmp.file("ig.csv") +
                               " --out " + tmp.file("never"));
    CHECK(rb.code == 2);
    CHECK(!fs::exists(tmp.file("never")));
  }
}

TEST_CASE("merge-deltas: stock plus delta equals a from-scratch rebuild") {
  TempDir tmp;
  write_text(tmp.file("base.csv"), base_csv());
  write_text(tmp.file("full.csv"), base_csv() + delta_rows());
  write_text(tmp.file("delta.csv"), "user_id,item_id,label,timestamp\n" + delta_rows());

  // stock pipeline on the base window
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("base.csv") + " --out " +
                           tmp.file("gbase")).code == 0);
  REQUIRE(run_cli(tmp, "group --graph " + tmp.file("gbase") +
                           " --side user --k 3 --seed 5 --out " + tmp.file("ug.csv")).code == 0);
  REQUIRE(run_cli(tmp, "group --graph " + tmp.file("gbase") +
                           " --side item --k 2 --seed 6 --out " + tmp.file("ig.csv")).code == 0);
  REQUIRE(run_cli(tmp, "build-macro --graph " + tmp.file("gbase") + " --user-grouping " +
                           tmp.file("ug.csv") + " --item-grouping " + tmp.file("ig.csv") +
                           " --out " + tmp.file("stock")).code == 0);

  auto r = run_cli(tmp, "merge-deltas --stock " + tmp.file("stock") + " --delta " +
                            tmp.file("delta.csv") + " --out " + tmp.file("merged"));
  REQUIRE(r.code == 0);

  // rebuild from the union log with the same (base-window) groupings
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("full.csv") + " --out " +
                           tmp.file("gfull")).code == 0);
  REQUIRE(run_cli(tmp, "build-macro --graph " + tmp.file("gfull") + " --user-grouping " +
                           tmp.file("ug.csv") + " --item-grouping " + tmp.file("ig.csv") +
                           " --out " + tmp.file("rebuilt")).code == 0);

  for (int u = 0; u < 10; ++u) {
    std::string name = "u" + std::to_string(u) + ".json";
    CHECK(read_file(tmp.file("merged/" + name)) == read_file(tmp.file("rebuilt/" + name)));
  }
  for (int i = 0; i < 8; ++i) {
    std::string name = "i" + std::to_string(i) + ".json";
    CHECK(read_file(tmp.file("merged/" + name)) == read_file(tmp.file("rebuilt/" + name)));
  }
  for (const char* f : {"graph.bin", "id_map.csv", "meta.json", "user_grouping.csv",
                        "item_grouping.csv"}) {
    CHECK(read_file(tmp.file(std::string("merged/") + f)) ==
          read_file(tmp.file(std::string("rebuilt/") + f)));
  }

  SUBCASE("an empty delta is the identity") {
    write_text(tmp.file("empty.csv"), "user_id,item_id,label,timestamp\n");
    auto re = run_cli(tmp, "merge-deltas --stock " + tmp.file("stock") + " --delta " +
                               tmp.file("empty.csv") + " --out " + tmp.file("copy"));
    REQUIRE(re.code == 0);
    for (const char* f : {"u0.json", "i5.json", "graph.bin", "meta.json"})
      CHECK(read_file(tmp.file(std::string("copy/") + f)) ==
            read_file(tmp.file(std::string("stock/") + f)));
  }

  SUBCASE("invalid deltas exit 2 and write nothing") {
    auto check_rejected = [&](const std::string& rows, const std::string& tag) {
      std::string path = tmp.file("bad_" + tag + ".csv");
      write_text(path, "user_id,item_id,label,timestamp\n" + rows);
      auto rb = run_cli(tmp, "merge-deltas --stock " + tmp.file("stock") + " --delta " + path +
                                 " --out " + tmp.file("never_" + tag));
      CHECK(rb.code == 2);
      CHECK(!fs::exists(tmp.file("never_" + tag)));
    };
    check_rejected("ghost,item_0,1,2000\n", "unknown_user");
    check_rejected("user_0,item_9,1,2000\n", "unknown_item");
    check_rejected("user_0,item_2,0,2000\n", "negative_label");
    check_rejected("user_0,item_0,1,2000\n", "already_present");
    check_rejected("user_0,item_4,1,1\n", "stale_timestamp");  // precedes the stock watermark
    check_rejected("user_0,item_4,1\n", "short_row");
  }
}

TEST_CASE("train, evaluate, score: a full model directory that reruns identically") {
  TempDir tmp;
  write_text(tmp.file("interactions.csv"), pipeline_csv());
  write_text(tmp.file("train.cfg"), train_config_text());
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") + " --out " +
                           tmp.file("g")).code == 0);

  auto r = run_cli(tmp, "train --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                            " --out " + tmp.file("m1"));
  REQUIRE(r.code == 0);
  for (const char* f : {"checkpoint.bin", "user_grouping.csv", "user_grouping.meta.json",
                        "item_grouping.csv", "item_grouping.meta.json", "history.bin",
                        "id_map.csv", "metrics.csv", "meta.json", "summary.json"})
    CHECK(fs::exists(tmp.file(std::string("m1/") + f)));

  auto meta = nlohmann::json::parse(read_file(tmp.file("m1/meta.json")));
  CHECK(meta["train_records"] == 96);
  CHECK(meta["test_records"] == 24);
  CHECK(meta["config"]["tau"] == 0.5);
  int best_epoch = meta["best_epoch"].get<int>();
  CHECK(best_epoch >= 1);
  CHECK(best_epoch <= 2);

  // metrics.csv: train+val rows per epoch, then one test row
  std::istringstream mcsv(read_file(tmp.file("m1/metrics.csv")));
  std::string line;
  std::getline(mcsv, line);
  CHECK(line == "epoch,split,auc,gauc,logloss");
  std::vector<std::string> rows;
  while (std::getline(mcsv, line)) rows.push_back(line);
  REQUIRE(rows.size() == 5);
  CHECK(rows[0].rfind("1,train,", 0) == 0);
  CHECK(rows[1].rfind("1,val,", 0) == 0);
  CHECK(rows[4].rfind(std::to_string(best_epoch) + ",test,", 0) == 0);

  auto summary = nlohmann::json::parse(read_file(tmp.file("m1/summary.json")));
  CHECK(summary["best_epoch"] == best_epoch);
  CHECK(summary["test"]["examples"] == 24);
  double test_auc = summary["test"]["auc"].get<double>();
  CHECK(test_auc >= 0.0);
  CHECK(test_auc <= 1.0);

  // byte-identical rerun
  REQUIRE(run_cli(tmp, "train --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                           " --out " + tmp.file("m2")).code == 0);
  for (const char* f : {"checkpoint.bin", "metrics.csv", "meta.json", "summary.json",
                        "history.bin", "user_grouping.csv", "item_grouping.csv"})
    CHECK(read_file(tmp.file(std::string("m1/") + f)) ==
          read_file(tmp.file(std::string("m2/") + f)));

  // a different seed changes the fit
  REQUIRE(run_cli(tmp, "train --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                           " --seed 77 --out " + tmp.file("m3")).code == 0);
  CHECK(read_file(tmp.file("m1/checkpoint.bin")) != read_file(tmp.file("m3/checkpoint.bin")));

  SUBCASE("evaluate reproduces the training-time test report") {
    auto re = run_cli(tmp, "evaluate --checkpoint " + tmp.file("m1") + " --data " + tmp.file("g") +
                               " --out " + tmp.file("report.json"));
    REQUIRE(re.code == 0);
    auto rep = nlohmann::json::parse(read_file(tmp.file("report.json")));
    CHECK(rep["auc"].get<double>() == test_auc);
    CHECK(rep["examples"] == 24);
    CHECK(rep["logloss"].get<double>() ==
          summary["test"]["logloss"].get<double>());

    // stdout variant emits the same JSON
    auto rs = run_cli(tmp, "evaluate --checkpoint " + tmp.file("m1") + " --data " + tmp.file("g"));
    REQUIRE(rs.code == 0);
    CHECK(rs.out == read_file(tmp.file("report.json")));

    // different underlying log -> refused
    write_text(tmp.file("other.csv"), base_csv());
    REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("other.csv") + " --out " +
                             tmp.file("gother")).code == 0);
    CHECK(run_cli(tmp, "evaluate --checkpoint " + tmp.file("m1") + " --data " +
                           tmp.file("gother")).code == 2);
  }

  SUBCASE("score: csv of forward probabilities, stable across reruns") {
    write_text(tmp.file("pairs.csv"),
               "user_id,item_id\nuser_0,item_3\nuser_7,item_1\nuser_4,item_4\n");
    auto rs = run_cli(tmp, "score --checkpoint " + tmp.file("m1") + " --pairs " +
                               tmp.file("pairs.csv"));
    REQUIRE(rs.code == 0);
    std::istringstream sc(rs.out);
    std::getline(sc, line);
    CHECK(line == "user,item,score");
    std::vector<std::string> srows;
    while (std::getline(sc, line)) srows.push_back(line);
    REQUIRE(srows.size() == 3);
    CHECK(srows[0].rfind("user_0,item_3,", 0) == 0);
    CHECK(srows[2].rfind("user_4,item_4,", 0) == 0);
    for (const auto& row : srows) {
      double s = std::stod(row.substr(row.rfind(',') + 1));
      CHECK(s > 0.0);
      CHECK(s < 1.0);
    }

    auto rs2 = run_cli(tmp, "score --checkpoint " + tmp.file("m1") + " --pairs " +
                                tmp.file("pairs.csv"));
    CHECK(rs2.out == rs.out);

    // the emitted score is exactly the library forward pass
    auto params = load_checkpoint(tmp.file("m1/checkpoint.bin"));
    auto log = load_log_file(tmp.file("g/graph.bin"));
    auto cfg = parse_config_file(tmp.file("train.cfg"));
    Side side = Side::user;
    auto ug = load_grouping(tmp.file("m1/user_grouping.csv"),
                            tmp.file("m1/user_grouping.meta.json"), &side);
    auto ig = load_grouping(tmp.file("m1/item_grouping.csv"),
                            tmp.file("m1/item_grouping.meta.json"), &side);
    auto data = TrainData::build_with_groupings(log, cfg, ug, ig);
    ExampleContext ex;
    ex.u = 0;
    ex.i = 3;
    ex.user_sg = data.user_subgraph(0);
    ex.item_sg = data.item_subgraph(3);
    ex.recent_items = recent_sequence(data.train_window_log(), user_node(0), 5,
                                      std::numeric_limits<std::int64_t>::max());
    ex.recent_users = recent_sequence(data.train_window_log(), item_node(3), 5,
                                      std::numeric_limits<std::int64_t>::max());
    double want = forward(ex, params, data.registry(), nullptr);
    CHECK(srows[0] == "user_0,item_3," + format_double(want));

    CHECK(run_cli(tmp, "score --checkpoint " + tmp.file("m1") + " --pairs " +
                           tmp.file("interactions.csv")).code == 2);  // wrong header
    write_text(tmp.file("ghost.csv"), "user_id,item_id\nnobody,item_0\n");
    CHECK(run_cli(tmp, "score --checkpoint " + tmp.file("m1") + " --pairs " +
                           tmp.file("ghost.csv")).code == 2);
  }

  SUBCASE("off-grid settings need the explicit flag") {
    write_text(tmp.file("off.cfg"), train_config_text() + "lr = 2e-3\n");
    CHECK(run_cli(tmp, "train --config " + tmp.file("off.cfg") + " --data " + tmp.file("g") +
                           " --out " + tmp.file("never")).code == 2);
    CHECK(!fs::exists(tmp.file("never")));
    CHECK(run_cli(tmp, "train --config " + tmp.file("off.cfg") + " --data " + tmp.file("g") +
                           " --allow-off-grid --out " + tmp.file("off_model")).code == 0);
  }
}

TEST_CASE("sweep: one csv row per grid value") {
  TempDir tmp;
  write_text(tmp.file("interactions.csv"), pipeline_csv());
  write_text(tmp.file("train.cfg"), train_config_text());
  REQUIRE(run_cli(tmp, "build-graph --interactions " + tmp.file("interactions.csv") + " --out " +
                           tmp.file("g")).code == 0);

  auto r = run_cli(tmp, "sweep --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                            " --grid tau --values 0.5,0.7 --out " + tmp.file("sweep.csv"));
  REQUIRE(r.code == 0);
  std::istringstream sc(read_file(tmp.file("sweep.csv")));
  std::string line;
  std::getline(sc, line);
  CHECK(line == "value,auc,gauc,logloss,status");
  std::vector<std::string> rows;
  while (std::getline(sc, line)) rows.push_back(line);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].rfind("0.5,", 0) == 0);
  CHECK(rows[1].rfind("0.7,", 0) == 0);
  for (const auto& row : rows) CHECK(row.substr(row.rfind(',') + 1) == "ok");

  auto rk = run_cli(tmp, "sweep --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                             " --grid k --values 2,4");
  REQUIRE(rk.code == 0);
  CHECK(rk.out.find("\n2,") != std::string::npos);
  CHECK(rk.out.find("\n4,") != std::string::npos);

  CHECK(run_cli(tmp, "sweep --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                         " --grid k").code == 1);  // --values required for k
  CHECK(run_cli(tmp, "sweep --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                         " --grid lr --values 1e-3").code == 1);
  CHECK(run_cli(tmp, "sweep --config " + tmp.file("train.cfg") + " --data " + tmp.file("g") +
                         " --grid tau --values 0.5,abc").code == 1);
}

}  // TEST_SUITE
