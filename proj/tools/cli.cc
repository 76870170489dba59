#include "cli.h"

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include "hlstm/checkpoint.h"
#include "hlstm/corpus.h"
#include "hlstm/embeddings.h"
#include "hlstm/error.h"
#include "hlstm/learners.h"
#include "hlstm/supervision.h"
#include "hlstm/train.h"

namespace hlstm::cli {
namespace fs = std::filesystem;
namespace {

struct RunConfig {
  std::string corpus;
  std::string test_corpus;
  std::string embeddings;
  std::string checkpoint;
  std::string out;
  std::string layout = "auto";
  std::string model = "hlstm-supervised";
  std::size_t cv = 5;
  std::size_t top = 0;
  bool pooled = false;
  bool verbose = false;
  std::string clip_mode = "gradient";
  TrainConfig train;
  SvmOptions svm;
};

// Raised for problems that should exit with the usage code.
struct UsageError : Error {
  using Error::Error;
};

void add_training_flags(CLI::App& cmd, RunConfig& rc) {
  auto& t = rc.train;
  cmd.add_option("--embeddings", rc.embeddings, "Word vectors in text format ('<count> <dim>' header)");
  cmd.add_option("--seed", t.seed, "Random seed")->capture_default_str();
  cmd.add_option("--lambda", t.lambda, "Supervised attention trade-off")->capture_default_str();
  cmd.add_option("--batch-size", t.batch_size, "Mini-batch size")->capture_default_str();
  cmd.add_option("--epochs", t.max_epochs, "Maximum training epochs")->capture_default_str();
  cmd.add_option("--patience", t.patience, "Early-stopping patience (0 disables)")->capture_default_str();
  cmd.add_option("--val-fraction", t.validation_fraction, "Validation fraction for early stopping")
      ->capture_default_str();
  cmd.add_option("--lr", t.learning_rate, "Adam learning rate")->capture_default_str();
  cmd.add_option("--clip", t.clip_threshold, "Frobenius clipping threshold")->capture_default_str();
  cmd.add_option("--clip-mode", rc.clip_mode, "Clip gradients or weights")
      ->check(CLI::IsMember({"gradient", "weight"}))
      ->capture_default_str();
  cmd.add_option("--dropout", t.dropout, "Dropout rate")->capture_default_str();
  cmd.add_option("--L", t.max_sentences, "Sentences kept per body")->capture_default_str();
  cmd.add_option("--K", t.max_words, "Tokens kept per sentence")->capture_default_str();
  cmd.add_option("--H", t.max_header, "Tokens kept per header")->capture_default_str();
  cmd.add_option("--embed-dim", t.embed_dim, "Embedding size without --embeddings")
      ->capture_default_str();
  cmd.add_option("--cell", t.cell_size, "LSTM cell size")->capture_default_str();
  cmd.add_option("--attention", t.attention_size, "Attention vector size")->capture_default_str();
  cmd.add_option("--min-count", t.min_count, "Minimum token frequency for the vocabulary")
      ->capture_default_str();
  cmd.add_flag("--use-header", t.use_header, "Enable the header network");
  cmd.add_flag("--no-supervision", [&t](std::int64_t) { t.use_supervision = false; },
               "Disable supervised attention");
}

void add_corpus_flags(CLI::App& cmd, RunConfig& rc, bool required) {
  auto* opt = cmd.add_option("--corpus,--train-set", rc.corpus,
                             "Corpus: a CSV file or a directory with legit/ and phish/");
  if (required) opt->required();
  cmd.add_option("--layout", rc.layout, "Corpus layout")
      ->check(CLI::IsMember({"auto", "csv", "two-dirs"}))
      ->capture_default_str();
}

Dataset load(const std::string& path, const std::string& layout, bool allow_empty = false) {
  CorpusLayout l = detect_layout(path);
  if (layout == "csv") l = CorpusLayout::kCsv;
  if (layout == "two-dirs") l = CorpusLayout::kTwoDirs;
  return load_corpus(path, l, LoadOptions{allow_empty});
}

std::optional<Embeddings> maybe_embeddings(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return load_embeddings(path);
}

// Writes to <out>/<file> when --out is set, otherwise to `fallback`.
template <typename Fn>
void emit(const std::string& out_dir, const std::string& file, std::ostream& fallback, Fn&& fn) {
  if (out_dir.empty()) {
    fn(fallback);
    return;
  }
  fs::create_directories(out_dir);
  const fs::path path = fs::path(out_dir) / file;
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  fn(f);
  if (!f) throw IoError("failed writing " + path.string());
}

void check_config(RunConfig& rc) {
  rc.train.clip_mode = rc.clip_mode == "weight" ? ClipMode::kWeight : ClipMode::kGradient;
  try {
    rc.train.validate();
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }
}

int cmd_train(RunConfig& rc, std::ostream& out) {
  check_config(rc);
  if (rc.out.empty()) throw UsageError("--out is required");
  const Dataset dataset = load(rc.corpus, rc.layout);
  const auto embeddings = maybe_embeddings(rc.embeddings);
  if (!embeddings) spdlog::warn("no --embeddings given; embeddings start from random values");

  const TrainResult result = train(dataset, rc.train, embeddings ? &*embeddings : nullptr);
  fs::create_directories(rc.out);
  const fs::path dir(rc.out);
  save_checkpoint(result.trained, dir / "model.ckpt");
  result.trained.vocab.save(dir / "vocab.txt");
  emit(rc.out, "history.csv", out, [&](std::ostream& o) { result.history.write_csv(o); });
  emit(rc.out, "config.json", out, [&](std::ostream& o) {
    nlohmann::json snapshot;
    snapshot["command"] = "train";
    snapshot["corpus"] = rc.corpus;
    snapshot["embeddings"] = rc.embeddings;
    snapshot["train"] = result.trained.config;
    snapshot["best_epoch"] = result.history.best_epoch;
    snapshot["epochs_run"] = result.history.epochs.size();
    o << snapshot.dump(2) << '\n';
  });
  out << fmt::format("trained {} epochs (best {}), wrote {}\n", result.history.epochs.size(),
                     result.history.best_epoch, (dir / "model.ckpt").string());
  return kExitOk;
}

int cmd_evaluate(RunConfig& rc, std::ostream& out) {
  check_config(rc);
  const auto kind = parse_model_kind(rc.model);
  if (!kind) throw UsageError("unknown model '" + rc.model + "'");
  const bool split_mode = !rc.test_corpus.empty();
  if (!split_mode && rc.cv < 2) throw UsageError("--cv must be at least 2");

  const auto embeddings = maybe_embeddings(rc.embeddings);
  LearnerOptions options;
  options.train = rc.train;
  options.svm = rc.svm;
  options.svm.seed = rc.train.seed;
  options.embeddings = embeddings ? &*embeddings : nullptr;
  Learner learner;
  try {
    learner = make_learner(*kind, options);
  } catch (const ConfigError& e) {
    throw UsageError(e.what());
  }

  const Dataset dataset = load(rc.corpus, rc.layout);
  if (split_mode) {
    Dataset test = load(rc.test_corpus, rc.layout);
    if (!test.fully_labeled()) throw Error("--test-corpus must be labeled");
    if (!rc.train.use_header) {
      // Body-only setting: the header of the test corpus is ignored.
      for (auto& e : test.emails) e.header.reset();
      test.has_headers = false;
    }
    const auto predictions = learner(dataset, test, 0);
    std::vector<int> labels;
    for (const auto& e : test.emails) labels.push_back(*e.label);
    const Metrics m = score(predictions, labels);
    emit(rc.out, "metrics.csv", out, [&](std::ostream& o) {
      write_metrics_header(o);
      write_metrics_row(o, rc.model, "test", m);
    });
    return kExitOk;
  }

  const auto report = cross_validate(dataset, rc.cv, rc.train.seed, learner);
  emit(rc.out, "metrics.csv", out, [&](std::ostream& o) {
    write_metrics_header(o);
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
      write_metrics_row(o, rc.model, std::to_string(f), report.folds[f]);
    }
    write_metrics_row(o, rc.model, "mean", report.mean);
    if (rc.pooled) write_metrics_row(o, rc.model, "pooled", report.pooled);
  });
  return kExitOk;
}

int cmd_predict(RunConfig& rc, std::ostream& out) {
  const TrainedModel trained = load_checkpoint(rc.checkpoint);
  const Dataset dataset = load(rc.corpus, rc.layout, /*allow_empty=*/true);
  const auto probabilities = predict(trained, dataset);
  emit(rc.out, "predictions.tsv", out, [&](std::ostream& o) {
    o << "id\tprobability\tlabel\n";
    for (std::size_t i = 0; i < dataset.size(); ++i) {
      o << fmt::format("{}\t{:.9f}\t{}\n", dataset.emails[i].id, probabilities[i],
                       label_at(probabilities[i]));
    }
  });
  return kExitOk;
}

int cmd_score_words(RunConfig& rc, std::ostream& out) {
  if (rc.train.min_count == 0) throw UsageError("--min-count must be positive");
  const Dataset dataset = load(rc.corpus, rc.layout);
  const Vocabulary vocab = build_vocab(dataset, rc.train.min_count);
  const ImportanceTable table = compute_ranks(dataset, vocab);
  emit(rc.out, "importance.tsv", out, [&](std::ostream& o) { table.write_tsv(o, rc.top); });
  return kExitOk;
}

// Routes spdlog to `err` until destroyed, then restores the previous logger.
class ScopedLogging {
 public:
  ScopedLogging(std::ostream& err, bool verbose) : previous_(spdlog::default_logger()) {
    auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
    auto logger = std::make_shared<spdlog::logger>("hlstm", sink);
    logger->set_pattern("[%l] %v");
    logger->set_level(verbose ? spdlog::level::debug : spdlog::level::warn);
    spdlog::set_default_logger(logger);
  }
  ~ScopedLogging() { spdlog::set_default_logger(previous_); }
  ScopedLogging(const ScopedLogging&) = delete;
  ScopedLogging& operator=(const ScopedLogging&) = delete;

 private:
  std::shared_ptr<spdlog::logger> previous_;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  RunConfig rc;
  CLI::App app{"Hierarchical attentive BiLSTM phishing-email classifier"};
  app.require_subcommand(1);
  app.add_flag("-v,--verbose", rc.verbose, "Log progress to stderr");

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_corpus_flags(*train_cmd, rc, true);
  add_training_flags(*train_cmd, rc);
  train_cmd->add_option("--out", rc.out, "Output directory")->required();

  auto* eval_cmd = app.add_subcommand("evaluate", "Cross-validate or run a train/test split");
  add_corpus_flags(*eval_cmd, rc, true);
  add_training_flags(*eval_cmd, rc);
  eval_cmd->add_option("--test-corpus,--test-set", rc.test_corpus, "Held-out test corpus");
  eval_cmd->add_option("--model", rc.model, "Model family")
      ->check(CLI::IsMember(model_names()))
      ->capture_default_str();
  eval_cmd->add_option("--cv", rc.cv, "Number of stratified folds")->capture_default_str();
  eval_cmd->add_flag("--pooled", rc.pooled, "Also report metrics over pooled fold predictions");
  eval_cmd->add_option("--svm-c", rc.svm.C, "Linear SVM C")->capture_default_str();
  eval_cmd->add_option("--svm-iterations", rc.svm.iterations, "Subgradient iterations")
      ->capture_default_str();
  eval_cmd->add_option("--out", rc.out, "Write metrics.csv here instead of stdout");

  auto* predict_cmd = app.add_subcommand("predict", "Score a corpus with a checkpoint");
  add_corpus_flags(*predict_cmd, rc, true);
  predict_cmd->add_option("--checkpoint", rc.checkpoint, "Checkpoint file")->required();
  predict_cmd->add_option("--out", rc.out, "Write predictions.tsv here instead of stdout");

  auto* score_cmd = app.add_subcommand("score-words", "Rank-based word importance table");
  add_corpus_flags(*score_cmd, rc, true);
  score_cmd->add_option("--top", rc.top, "Keep only the top N rows (0 = all)");
  score_cmd->add_option("--min-count", rc.train.min_count, "Minimum token frequency")
      ->capture_default_str();
  score_cmd->add_option("--out", rc.out, "Write importance.tsv here instead of stdout");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  const ScopedLogging logging(err, rc.verbose);
  try {
    if (*train_cmd) return cmd_train(rc, out);
    if (*eval_cmd) return cmd_evaluate(rc, out);
    if (*predict_cmd) return cmd_predict(rc, out);
    return cmd_score_words(rc, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace hlstm::cli
