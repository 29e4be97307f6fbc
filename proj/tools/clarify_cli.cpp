#include <CLI11.hpp>
#include <pthread.h>
#include <signal.h>

#include <fstream>
#include <iostream>
#include <thread>

#include "clarify/agents.hpp"
#include "clarify/codec.hpp"
#include "clarify/config.hpp"
#include "clarify/eval.hpp"
#include "clarify/http_backend.hpp"
#include "clarify/knowledge_store.hpp"
#include "clarify/orchestrator.hpp"
#include "clarify/service.hpp"

namespace {

using namespace clarify;

struct BackendArgs {
  std::string kind = "mock";
  std::string rules;
  std::string url;
  std::string model;
  std::string api_key_env = "CLARIFY_LLM_API_KEY";
};

void add_backend_options(CLI::App* cmd, BackendArgs& b) {
  cmd->add_option("--backend", b.kind, "mock or http")->check(CLI::IsMember({"mock", "http"}));
  cmd->add_option("--rules", b.rules, "mock rule table (JSON)")->check(CLI::ExistingFile);
  cmd->add_option("--http-url", b.url, "chat-completion endpoint for --backend http");
  cmd->add_option("--http-model", b.model, "model name for --backend http");
  cmd->add_option("--api-key-env", b.api_key_env, "environment variable holding the API key");
}

std::shared_ptr<LlmBackend> backend_from(const BackendArgs& b) {
  BackendSettings s;
  s.kind = b.kind;
  s.mock_rules_path = b.rules;
  s.http.url = b.url;
  s.http.model = b.model;
  s.http.api_key_env = b.api_key_env;
  return make_backend(s);
}

struct EmbedderArgs {
  std::string kind = "hashed";
  std::string url;
  std::size_t dim = 256;
  std::uint64_t seed = 0x5eed;
};

void add_embedder_options(CLI::App* cmd, EmbedderArgs& e) {
  cmd->add_option("--embedder", e.kind, "hashed, onehot, or http")->check(CLI::IsMember({"hashed", "onehot", "http"}));
  cmd->add_option("--embedder-url", e.url, "vector service URL for --embedder http");
  cmd->add_option("--embedder-dim", e.dim, "dimension for hashed/onehot embedders")->check(CLI::PositiveNumber);
  cmd->add_option("--embedder-seed", e.seed, "seed for the hashed embedder");
}

std::unique_ptr<eval::Embedder> embedder_from(const EmbedderArgs& e) {
  if (e.kind == "onehot") return std::make_unique<eval::OneHotHashEmbedder>(e.dim);
  if (e.kind == "http") {
    if (e.url.empty()) fail(ErrorCode::ConfigError, "--embedder http needs --embedder-url");
    return std::make_unique<HttpEmbedder>(e.url);
  }
  return std::make_unique<eval::HashedProjectionEmbedder>(e.dim, e.seed);
}

StoreSnapshot store_from(const std::string& path) {
  if (path.empty()) return std::make_shared<const KnowledgeStore>();
  return std::make_shared<const KnowledgeStore>(KnowledgeStore::load(path));
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::InvalidArgument, "cannot write " + path);
  out << content;
  if (!out) fail(ErrorCode::InvalidArgument, "failed writing " + path);
}

void print_summary(const eval::MetricsReport& r) {
  auto row = [](const char* name, const eval::ClassMetrics& m) {
    std::printf("%-24s %9.3f %9.3f %9.3f\n", name, eval::round_half_up3(m.precision), eval::round_half_up3(m.recall),
                eval::round_half_up3(m.f1));
  };
  std::printf("%-24s %9s %9s %9s\n", "", "precision", "recall", "f1");
  row("clarification needed", r.binary.needed);
  row("clarification not needed", r.binary.not_needed);
  row("average", r.binary.macro);
  const auto& c = r.binary.counts;
  std::printf("counts: tp=%zu fp=%zu fn=%zu tn=%zu  examples=%zu failures=%zu llm_calls=%zu\n", c.tp, c.fp, c.fn, c.tn,
              r.examples, r.failures, r.llm_calls);
  std::printf("question scores over %zu pairs: rouge_l=%.3f similarity=%.3f (%s)\n", r.scored_questions,
              eval::round_half_up3(r.mean_rouge_l), eval::round_half_up3(r.mean_similarity), r.embedder.c_str());
  if (r.binary.needed.precision_zero_division) std::printf("note: no query was predicted as needing clarification\n");
  if (r.binary.not_needed.precision_zero_division) std::printf("note: every query was predicted as needing clarification\n");
}

std::string jsonl(const std::vector<eval::ExampleResult>& rows) {
  std::string out;
  for (const auto& r : rows) out += Json(r).dump() + "\n";
  return out;
}

int run_serve(const std::string& config_path) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  const auto config = load_service_config(config_path);
  auto service = Service::from_config(config, &std::cerr);
  HttpServer server(*service);

  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service->log_line(Json{{"event", "shutdown"}, {"signal", sig}});
    server.stop();
  });
  try {
    server.listen(config.host, config.port, [&](int port) {
      service->log_line(Json{{"event", "listening"}, {"host", config.host}, {"port", port}});
    });
  } catch (...) {
    pthread_kill(watcher.native_handle(), SIGTERM);
    watcher.join();
    throw;
  }
  watcher.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Query disambiguation pipeline: store checks, evaluation, and the HTTP service"};
  app.require_subcommand(1);

  // store validate
  auto* store_cmd = app.add_subcommand("store", "knowledge store tools");
  store_cmd->require_subcommand(1);
  std::string store_path;
  auto* validate_cmd = store_cmd->add_subcommand("validate", "load a store and print its counts");
  validate_cmd->add_option("path", store_path, "store JSON file")->required();

  // eval run / vote / metrics
  auto* eval_cmd = app.add_subcommand("eval", "evaluation harness");
  eval_cmd->require_subcommand(1);

  std::string dataset, pipeline = "unified", out_path, per_example_path, eval_store, eval_config;
  std::size_t threads = 1;
  BackendArgs eval_backend;
  EmbedderArgs eval_embedder;
  auto* run_cmd = eval_cmd->add_subcommand("run", "run a pipeline over a dataset and score it");
  run_cmd->add_option("--dataset", dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--pipeline", pipeline, "unified or baseline")->check(CLI::IsMember({"unified", "baseline"}));
  run_cmd->add_option("--out", out_path, "metrics report (JSON)")->required();
  run_cmd->add_option("--per-example", per_example_path, "per-example results (JSONL)");
  run_cmd->add_option("--store", eval_store, "knowledge store JSON")->check(CLI::ExistingFile);
  run_cmd->add_option("--config", eval_config, "service config; supplies store, agents, and backend")
      ->check(CLI::ExistingFile);
  run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  add_backend_options(run_cmd, eval_backend);
  add_embedder_options(run_cmd, eval_embedder);

  std::string vote_out;
  auto* vote_cmd = eval_cmd->add_subcommand("vote", "majority-vote gold labels (JSONL on stdout)");
  vote_cmd->add_option("--dataset", dataset, "JSONL dataset")->required()->check(CLI::ExistingFile);
  vote_cmd->add_option("--out", vote_out, "write gold labels here instead of stdout");

  std::string pred_path, gold_path, metrics_out;
  EmbedderArgs metrics_embedder;
  auto* metrics_cmd = eval_cmd->add_subcommand("metrics", "score precomputed predictions against gold labels");
  metrics_cmd->add_option("--pred", pred_path, "predictions JSONL")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--gold", gold_path, "gold labels JSONL")->required()->check(CLI::ExistingFile);
  metrics_cmd->add_option("--out", metrics_out, "metrics report (JSON); stdout when omitted");
  add_embedder_options(metrics_cmd, metrics_embedder);

  // serve
  std::string serve_config;
  auto* serve_cmd = app.add_subcommand("serve", "run the HTTP service");
  serve_cmd->add_option("--config", serve_config, "service config file")->required()->check(CLI::ExistingFile);

  // query
  std::string query_text, query_store, policy = "ask_first";
  bool show_prompt = false;
  BackendArgs query_backend;
  auto* query_cmd = app.add_subcommand("query", "disambiguate one query and print the result");
  query_cmd->add_option("text", query_text, "query text")->required();
  query_cmd->add_option("--store", query_store, "knowledge store JSON")->check(CLI::ExistingFile);
  query_cmd->add_option("--policy", policy, "ask_first or answer_first")
      ->check(CLI::IsMember({"ask_first", "answer_first"}));
  query_cmd->add_flag("--show-prompt", show_prompt, "print the rendered prompt to stderr");
  add_backend_options(query_cmd, query_backend);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      const auto store = KnowledgeStore::load(store_path);
      std::cout << Json{{"entities", store.entities().size()},
                        {"products", store.products().size()},
                        {"concepts", store.concepts().size()}}
                       .dump()
                << "\n";
      return 0;
    }

    if (*run_cmd) {
      eval::EvalConfig cfg;
      cfg.pipeline = eval::parse_pipeline_kind(pipeline);
      cfg.threads = threads;
      AgentRegistry registry;
      std::shared_ptr<LlmBackend> backend;
      if (!eval_config.empty()) {
        const auto sc = load_service_config(eval_config);
        registry = make_registry(sc.agents);
        backend = make_backend(sc.backend);
        cfg.store = store_from(sc.store_path.string());
        cfg.pipeline_config.surface_policy = sc.surface_policy;
        cfg.pipeline_config.prompt.history_window = sc.history_window;
        cfg.pipeline_config.max_tokens = sc.max_tokens;
      } else {
        registry = make_default_registry();
        backend = backend_from(eval_backend);
      }
      if (!eval_store.empty()) cfg.store = store_from(eval_store);
      if (!cfg.store) cfg.store = store_from("");
      cfg.registry = &registry;
      cfg.backend = backend.get();
      auto embedder = embedder_from(eval_embedder);
      cfg.embedder = embedder.get();

      const auto run = eval::evaluate(eval::load_dataset(dataset), cfg);
      write_file(out_path, Json(run.report).dump(2) + "\n");
      if (!per_example_path.empty()) write_file(per_example_path, jsonl(run.per_example));
      print_summary(run.report);
      return 0;
    }

    if (*vote_cmd) {
      const auto examples = eval::load_dataset(dataset);
      std::string out;
      std::size_t unresolved = 0;
      for (const auto& ex : examples) {
        auto vote = eval::majority_vote(ex.annotations);
        if (auto* gold = std::get_if<eval::GoldLabel>(&vote)) {
          out += Json(eval::GoldRecord{ex.example_id, *gold}).dump() + "\n";
        } else {
          ++unresolved;
          std::cerr << ex.example_id << ": needs annotator " << std::get<eval::NeedsMoreAnnotations>(vote).stage
                    << "\n";
        }
      }
      if (vote_out.empty()) {
        std::cout << out;
      } else {
        write_file(vote_out, out);
      }
      if (unresolved > 0) {
        std::cerr << "error: " << unresolved << " example(s) need more annotations\n";
        return 1;
      }
      return 0;
    }

    if (*metrics_cmd) {
      const auto preds = eval::parse_predictions(eval::read_text_file(pred_path), pred_path);
      const auto golds = eval::parse_golds(eval::read_text_file(gold_path), gold_path);
      auto embedder = embedder_from(metrics_embedder);
      const auto run = eval::score_predictions(preds, golds, *embedder);
      const auto text = Json(run.report).dump(2) + "\n";
      if (metrics_out.empty()) {
        std::cout << text;
      } else {
        write_file(metrics_out, text);
        print_summary(run.report);
      }
      return 0;
    }

    if (*serve_cmd) return run_serve(serve_config);

    if (*query_cmd) {
      auto backend = backend_from(query_backend);
      PipelineConfig pc;
      pc.surface_policy = parse_surface_policy(policy);
      const auto registry = make_default_registry();
      const auto query = validate_query(query_text, "cli");
      const auto outcome = disambiguate_unified(query, {}, registry, store_from(query_store), *backend, pc);
      if (show_prompt) std::cerr << outcome.prompt.render();
      Json j = outcome.result;
      j["warnings"] = outcome.warnings;
      j["best_guess"] = outcome.best_guess ? Json(*outcome.best_guess) : Json(nullptr);
      std::cout << j.dump(2) << "\n";
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
