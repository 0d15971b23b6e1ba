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

// embtree command-line front end. Talks to the library only through the C
// interface in embtree/embtree.h.

#include <csignal>
#include <cstdio>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <thread>

#include <pthread.h>

#include "CLI11.hpp"
#include "embtree/embtree.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitIo = 2;

struct DatasetDeleter {
  void operator()(embtree_dataset* d) const { embtree_dataset_free(d); }
};
struct TreeDeleter {
  void operator()(embtree_tree* t) const { embtree_tree_free(t); }
};
struct ServerDeleter {
  void operator()(embtree_server* s) const { embtree_server_free(s); }
};
struct StringDeleter {
  void operator()(char* s) const { embtree_string_free(s); }
};

using DatasetPtr = std::unique_ptr<embtree_dataset, DatasetDeleter>;
using TreePtr = std::unique_ptr<embtree_tree, TreeDeleter>;
using ServerPtr = std::unique_ptr<embtree_server, ServerDeleter>;
using StringPtr = std::unique_ptr<char, StringDeleter>;

// Thrown after a failed library call; carries the process exit code.
struct Failure {
  int exit_code;
};

void Check(embtree_status status) {
  if (status == EMBTREE_OK) return;
  std::cerr << "embtree: " << embtree_status_string(status) << ": " << embtree_last_error()
            << "\n";
  throw Failure{status == EMBTREE_ERR_IO ? kExitIo : kExitError};
}

TreePtr LoadTree(const std::string& path) {
  embtree_tree* raw = nullptr;
  Check(embtree_tree_load(path.c_str(), &raw));
  return TreePtr(raw);
}

DatasetPtr LoadDataForTree(const embtree_tree* tree, const std::string& embeddings,
                           const std::string& features) {
  embtree_dataset* raw = nullptr;
  Check(embtree_dataset_load_for_tree(tree, embeddings.c_str(), features.c_str(), &raw));
  return DatasetPtr(raw);
}

struct BuildArgs {
  std::string embeddings, features, schema, out;
  size_t bins = 3, min_node_size = 20, max_depth = 10;
  bool parallel = false;
};

int RunBuild(const BuildArgs& args) {
  embtree_dataset* raw_data = nullptr;
  Check(embtree_dataset_load(args.embeddings.c_str(), args.features.c_str(),
                             args.schema.empty() ? nullptr : args.schema.c_str(), &raw_data));
  DatasetPtr data(raw_data);

  embtree_build_options options;
  embtree_build_options_init(&options);
  options.bin_count = args.bins;
  options.min_node_size = args.min_node_size;
  options.max_depth = args.max_depth;
  options.parallel = args.parallel ? 1 : 0;
  embtree_tree* raw_tree = nullptr;
  Check(embtree_tree_build(data.get(), &options, &raw_tree));
  TreePtr tree(raw_tree);
  Check(embtree_tree_save(tree.get(), args.out.c_str()));

  embtree_tree_summary s;
  Check(embtree_tree_summary_get(tree.get(), &s));
  std::cout << "N=" << s.entities << " p=" << s.dim << " q=" << s.features
            << " leaves=" << s.leaves << " depth=" << s.depth << "\n";
  return kExitOk;
}

int RunDiagnose(const std::string& tree_path, const std::string& embeddings,
                const std::string& features) {
  TreePtr tree = LoadTree(tree_path);
  DatasetPtr data = LoadDataForTree(tree.get(), embeddings, features);
  char* raw = nullptr;
  Check(embtree_diagnose_all_jsonl(tree.get(), data.get(), &raw));
  StringPtr lines(raw);
  std::cout << lines.get();
  return kExitOk;
}

int RunInfer(const std::string& tree_path) {
  TreePtr tree = LoadTree(tree_path);
  const std::string input((std::istreambuf_iterator<char>(std::cin)),
                          std::istreambuf_iterator<char>());
  char* raw = nullptr;
  Check(embtree_infer_json(tree.get(), input.c_str(), &raw));
  StringPtr result(raw);
  std::cout << result.get() << "\n";
  return kExitOk;
}

struct ServeArgs {
  std::string tree, embeddings, features, host = "127.0.0.1", cors = "*";
  int port = 8080;
};

int RunServe(const ServeArgs& args) {
  // Block termination signals in every thread; a dedicated thread waits for
  // them and stops the server.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  TreePtr tree = LoadTree(args.tree);
  DatasetPtr data = LoadDataForTree(tree.get(), args.embeddings, args.features);
  embtree_server* raw = nullptr;
  Check(embtree_server_create(args.cors.c_str(), &raw));
  ServerPtr server(raw);
  Check(embtree_server_load(server.get(), tree.get(), data.get()));
  int port = 0;
  Check(embtree_server_bind(server.get(), args.host.c_str(), args.port, &port));
  std::cerr << "embtree: serving on http://" << args.host << ":" << port << "\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    embtree_server_stop(server.get());
  });
  const embtree_status status = embtree_server_run(server.get());
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  Check(status);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Organize embeddings into a feature hierarchy and explore it."};
  app.require_subcommand(1);

  BuildArgs build;
  auto* cmd_build = app.add_subcommand("build", "Build a tree from embeddings and features");
  cmd_build->add_option("--embeddings", build.embeddings, "Embeddings CSV (id,d0,...)")->required();
  cmd_build->add_option("--features", build.features, "Features CSV (id,<features...>)")->required();
  cmd_build->add_option("--schema", build.schema, "JSON map of feature -> numeric|categorical");
  cmd_build->add_option("--bins", build.bins, "Percentile bins per numeric feature")
      ->capture_default_str()->check(CLI::Range(2, 1000));
  cmd_build->add_option("--min-node-size", build.min_node_size, "Minimum entities for a node to split")
      ->capture_default_str()->check(CLI::Range(2, 1 << 30));
  cmd_build->add_option("--max-depth", build.max_depth, "Maximum tree depth")->capture_default_str();
  cmd_build->add_flag("--parallel", build.parallel, "Build with worker threads");
  cmd_build->add_option("--out", build.out, "Output tree JSON")->required();

  std::string tree_path, embeddings, features;
  auto* cmd_diagnose = app.add_subcommand("diagnose", "Leaf consistency reports as JSON lines");
  cmd_diagnose->add_option("--tree", tree_path)->required();
  cmd_diagnose->add_option("--embeddings", embeddings)->required();
  cmd_diagnose->add_option("--features", features)->required();

  auto* cmd_infer = app.add_subcommand("infer", "Cold-start embedding for features read from stdin");
  cmd_infer->add_option("--tree", tree_path)->required();

  ServeArgs serve;
  auto* cmd_serve = app.add_subcommand("serve", "Serve the explorer HTTP API");
  cmd_serve->add_option("--tree", serve.tree)->required();
  cmd_serve->add_option("--embeddings", serve.embeddings)->required();
  cmd_serve->add_option("--features", serve.features)->required();
  cmd_serve->add_option("--port", serve.port)->capture_default_str()->check(CLI::Range(0, 65535));
  cmd_serve->add_option("--host", serve.host)->capture_default_str();
  cmd_serve->add_option("--cors-origin", serve.cors)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitError;
  }

  try {
    if (*cmd_build) return RunBuild(build);
    if (*cmd_diagnose) return RunDiagnose(tree_path, embeddings, features);
    if (*cmd_infer) return RunInfer(tree_path);
    if (*cmd_serve) return RunServe(serve);
  } catch (const Failure& f) {
    return f.exit_code;
  }
  return kExitError;
}
