/*
 * Copyright 2026 The embtree Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "support/synthetic.hpp"

namespace {

using nlohmann::json;

struct Run {
  int status;
  std::string out;
  std::string err;
};

std::string Slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Workspace {
 public:
  Workspace() : dir_(embtree::testing::TempDir("cli")) {
    embtree::testing::WriteCsv(embtree::testing::FourBlob(), path("e.csv"), path("f.csv"));
  }
  ~Workspace() { std::filesystem::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Run Exec(const std::string& args, const std::string& stdin_text = "") const {
    std::string cmd = std::string(EMBTREE_CLI_PATH) + " " + args + " >" + path("out.txt") +
                      " 2>" + path("err.txt");
    if (!stdin_text.empty()) {
      std::ofstream(path("in.txt")) << stdin_text;
      cmd += " <" + path("in.txt");
    } else {
      cmd += " </dev/null";
    }
    const int raw = std::system(cmd.c_str());
    return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, Slurp(path("out.txt")), Slurp(path("err.txt"))};
  }

  Run Build(const std::string& extra = "", const std::string& out = "t.json") const {
    return Exec("build --embeddings " + path("e.csv") + " --features " + path("f.csv") + " --out " +
                path(out) + " " + extra);
  }

 private:
  std::filesystem::path dir_;
};

TEST_CASE("build writes a four-leaf tree") {
  Workspace ws;
  const Run r = ws.Build();
  CHECK(r.status == 0);
  CHECK(r.out.find("N=200 p=8 q=2 leaves=4 depth=2") != std::string::npos);
  const json tree = json::parse(Slurp(ws.path("t.json")));
  CHECK(tree["version"] == 1);
  CHECK(tree["params"]["min_node_size"] == 20);

  const Run again = ws.Build("--parallel", "t2.json");
  CHECK(again.status == 0);
  CHECK(Slurp(ws.path("t.json")) == Slurp(ws.path("t2.json")));
}

TEST_CASE("zero depth gives one leaf") {
  Workspace ws;
  const Run r = ws.Build("--max-depth 0");
  CHECK(r.status == 0);
  CHECK(r.out.find("leaves=1 depth=0") != std::string::npos);
}

TEST_CASE("missing input exits 2") {
  Workspace ws;
  const Run r = ws.Exec("build --embeddings " + ws.path("nope.csv") + " --features " +
                        ws.path("f.csv") + " --out " + ws.path("t.json"));
  CHECK(r.status == 2);
  CHECK(r.err.find("cannot open") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(ws.path("t.json")));
}

TEST_CASE("invalid arguments exit 1") {
  Workspace ws;
  CHECK(ws.Build("--min-node-size 1").status == 1);
  CHECK(ws.Build("--bins 1").status == 1);
  CHECK(ws.Exec("").status == 1);
  CHECK(ws.Exec("frobnicate").status == 1);
  std::ofstream(ws.path("schema.json")) << R"({"A": "ordinal"})";
  const Run bad_schema = ws.Build("--schema " + ws.path("schema.json"));
  CHECK(bad_schema.status == 1);
  CHECK(bad_schema.err.find("ordinal") != std::string::npos);
}

TEST_CASE("explicit schema changes the features") {
  Workspace ws;
  std::ofstream(ws.path("schema.json")) << R"({"A": "categorical", "B": "categorical"})";
  const Run r = ws.Build("--schema " + ws.path("schema.json"));
  CHECK(r.status == 0);
  CHECK(r.out.find("q=4") != std::string::npos);
  // The stored schema lets diagnose reload the same data.
  CHECK(ws.Exec("diagnose --tree " + ws.path("t.json") + " --embeddings " + ws.path("e.csv") +
                " --features " + ws.path("f.csv"))
            .status == 0);
}

TEST_CASE("diagnose prints one line per leaf") {
  Workspace ws;
  REQUIRE(ws.Build().status == 0);
  const Run r = ws.Exec("diagnose --tree " + ws.path("t.json") + " --embeddings " + ws.path("e.csv") +
                        " --features " + ws.path("f.csv"));
  CHECK(r.status == 0);
  std::istringstream lines(r.out);
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const json report = json::parse(line);
    CHECK(report["verdict"] == "consistent");
    ++count;
  }
  CHECK(count == 4);
}

TEST_CASE("diagnose flags a leaf with hidden structure") {
  Workspace ws;
  // Single-leaf tree over two separated blobs.
  REQUIRE(ws.Build("--max-depth 0").status == 0);
  const Run r = ws.Exec("diagnose --tree " + ws.path("t.json") + " --embeddings " + ws.path("e.csv") +
                        " --features " + ws.path("f.csv"));
  REQUIRE(r.status == 0);
  const json report = json::parse(r.out);
  CHECK(report["verdict"] == "inconsistent");
  CHECK(report["cluster_count_estimate"] == 2);
}

TEST_CASE("diagnose rejects other data") {
  Workspace ws;
  REQUIRE(ws.Build().status == 0);
  embtree::testing::WriteCsv(embtree::testing::FourBlob(8), ws.path("e2.csv"), ws.path("f2.csv"));
  const Run r = ws.Exec("diagnose --tree " + ws.path("t.json") + " --embeddings " + ws.path("e2.csv") +
                        " --features " + ws.path("f2.csv"));
  CHECK(r.status == 1);
  CHECK(r.err.find("fingerprint") != std::string::npos);
}

TEST_CASE("infer reads features from stdin") {
  Workspace ws;
  REQUIRE(ws.Build().status == 0);
  const Run r = ws.Exec("infer --tree " + ws.path("t.json"), R"({"A": 1, "B": 0})");
  CHECK(r.status == 0);
  const json out = json::parse(r.out);
  CHECK(out["embedding"].size() == 8);
  CHECK(out["embedding"][0].get<double>() > 15.0);
  CHECK(out["path"].size() == 2);

  const Run missing = ws.Exec("infer --tree " + ws.path("t.json"), R"({"A": 1})");
  CHECK(missing.status == 1);
  CHECK(missing.err.find("missing feature B") != std::string::npos);
  const Run garbage = ws.Exec("infer --tree " + ws.path("t.json"), "nope");
  CHECK(garbage.status == 1);
  const Run no_tree = ws.Exec("infer --tree " + ws.path("none.json"), "{}");
  CHECK(no_tree.status == 2);
}

TEST_CASE("truncated tree file") {
  Workspace ws;
  REQUIRE(ws.Build().status == 0);
  const std::string text = Slurp(ws.path("t.json"));
  std::ofstream(ws.path("cut.json")) << text.substr(0, text.size() / 3);
  const Run r = ws.Exec("infer --tree " + ws.path("cut.json"), R"({"A": 1, "B": 0})");
  CHECK(r.status == 1);
  CHECK(r.err.find("malformed") != std::string::npos);
}

}  // namespace
