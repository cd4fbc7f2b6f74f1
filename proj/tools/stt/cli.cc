// Copyright 2026 The STT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>
#include <json.hpp>

#include "stt/checkpoint.h"
#include "stt/error.h"
#include "stt/feature_store.h"
#include "stt/gradcheck.h"
#include "stt/report.h"
#include "stt/samples.h"
#include "stt/tasks.h"
#include "stt/trainer.h"
#include "stt/vocabulary.h"

namespace stt::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct HyperFlags {
  std::string profile = "paper";
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> epochs, batch_size, regions, min_freq, cvs_dim, word_dim,
      hidden_dim, max_decode_len;
  std::optional<double> learning_rate, margin, lambda_rank, lambda_ic, lambda_sp, grad_clip;
  std::optional<std::string> mode, negatives, aggregation;

  void Register(CLI::App* app) {
    app->add_option("--profile", profile, "Base hyperparameter profile")
        ->check(CLI::IsMember({"paper", "toy"}))
        ->capture_default_str();
    app->add_option("--config", config, "JSON file overlaid on the profile")
        ->check(CLI::ExistingFile);
    app->add_option("--seed", seed, "Seed for initialization and shuffling");
    app->add_option("--epochs", epochs);
    app->add_option("--batch-size", batch_size);
    app->add_option("--lr", learning_rate);
    app->add_option("--margin", margin);
    app->add_option("--lambda-rank", lambda_rank);
    app->add_option("--lambda-ic", lambda_ic);
    app->add_option("--lambda-sp", lambda_sp);
    app->add_option("--grad-clip", grad_clip, "0 disables clipping");
    app->add_option("--mode", mode)->check(CLI::IsMember({"global", "attention"}));
    app->add_option("--negatives", negatives)->check(CLI::IsMember({"sum", "hardest"}));
    app->add_option("--aggregation", aggregation)->check(CLI::IsMember({"mean", "logsumexp"}));
    app->add_option("--regions", regions);
    app->add_option("--min-freq", min_freq);
    app->add_option("--cvs-dim", cvs_dim);
    app->add_option("--word-dim", word_dim);
    app->add_option("--hidden-dim", hidden_dim);
    app->add_option("--max-decode-len", max_decode_len);
  }

  // Profile, then config file, then flags.
  model::HyperParams Resolve() const {
    model::HyperParams hp = model::HyperParams::Profile(profile);
    if (config) {
      std::ifstream in(*config);
      json j;
      try {
        j = json::parse(in);
      } catch (const json::exception& e) {
        throw ConfigError("config", fmt::format("{}: {}", *config, e.what()));
      }
      hp = model::ApplyJson(hp, j);
    }
    json overrides = json::object();
    auto set = [&overrides](const char* key, const auto& value) {
      if (value) overrides[key] = *value;
    };
    set("seed", seed);
    set("epochs", epochs);
    set("batch_size", batch_size);
    set("learning_rate", learning_rate);
    set("margin", margin);
    set("lambda_rank", lambda_rank);
    set("lambda_ic", lambda_ic);
    set("lambda_sp", lambda_sp);
    set("grad_clip", grad_clip);
    set("mode", mode);
    set("negatives", negatives);
    set("aggregation", aggregation);
    set("regions", regions);
    set("min_freq", min_freq);
    set("cvs_dim", cvs_dim);
    set("word_dim", word_dim);
    set("hidden_dim", hidden_dim);
    set("max_decode_len", max_decode_len);
    hp = model::ApplyJson(hp, overrides);
    hp.Validate();
    return hp;
  }
};

struct ModelFlags {
  std::string checkpoint;
  std::optional<std::string> vocab;

  void Register(CLI::App* app) {
    app->add_option("--checkpoint", checkpoint, "Trained checkpoint (.sttc)")
        ->required()
        ->check(CLI::ExistingFile);
    app->add_option("--vocab", vocab, "Vocabulary (default: vocab.tsv next to the checkpoint)")
        ->check(CLI::ExistingFile);
  }
};

struct LoadedModel {
  train::Checkpoint checkpoint;
  data::Vocabulary vocab;
  eval::EvalParams params;
};

LoadedModel LoadModel(const ModelFlags& flags, std::ostream& err) {
  const fs::path vocab_path =
      flags.vocab ? fs::path(*flags.vocab) : fs::path(flags.checkpoint).parent_path() / "vocab.tsv";
  LoadedModel m;
  m.vocab = data::Vocabulary::Load(vocab_path);
  std::vector<std::string> warnings;
  m.checkpoint = train::LoadCheckpoint(flags.checkpoint, m.vocab.Hash(), &warnings);
  for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
  if (m.checkpoint.params.vocab_size() != m.vocab.size()) {
    throw ContractError(fmt::format("checkpoint expects {} tokens but {} has {}",
                                    m.checkpoint.params.vocab_size(), vocab_path.string(),
                                    m.vocab.size()));
  }
  m.params = m.checkpoint.params.CastTo<double>();
  return m;
}

std::vector<data::ImageCaptions> LoadImages(const std::string& path) {
  const auto records = data::ReadCaptionFile(path);
  if (records.empty()) throw ContractError(path + " has no captions");
  return data::GroupByImage(records);
}

void RequireFeatures(const data::FeatureStore& store, std::span<const data::ImageCaptions> images) {
  for (const auto& image : images) {
    if (!store.Contains(image.image_id)) {
      throw ContractError(fmt::format("no feature record for image {}", image.image_id));
    }
  }
}

void PrintWarnings(std::span<const std::string> warnings, std::ostream& err) {
  for (const auto& w : warnings) fmt::print(err, "warning: {}\n", w);
}

void EmitReport(eval::MetricsReport report, const std::optional<std::string>& out_path,
                const ModelFlags& model, const model::HyperParams& hp, std::ostream& out) {
  report.metadata["checkpoint"] = model.checkpoint;
  report.metadata["mode"] = std::string(model::ToString(hp.mode));
  fmt::print(out, "{}", eval::FormatTable(report));
  if (out_path) {
    const fs::path path(*out_path);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    eval::WriteReport(report, path);
  }
}

// ---- subcommands ----

struct BuildVocabCmd {
  std::string captions, out;
  std::optional<std::size_t> min_freq;
  std::string profile = "paper";

  int Run(std::ostream& out_stream, std::ostream&) const {
    const auto records = data::ReadCaptionFile(captions);
    std::vector<std::string> texts;
    for (const auto& r : records) texts.push_back(r.caption);
    const auto vocab = data::Vocabulary::Build(
        texts, min_freq.value_or(model::HyperParams::Profile(profile).min_freq));
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    vocab.Save(path);
    fmt::print(out_stream, "vocabulary: {} tokens (min_freq {}) -> {}\n", vocab.size(),
               vocab.min_freq(), out);
    return 0;
  }
};

struct TrainCmd {
  HyperFlags hyper;
  std::string features, captions, out;
  std::optional<std::string> vocab, resume;
  std::optional<std::uint64_t> max_iters;
  std::size_t log_every = 50;

  int Run(std::ostream& out_stream, std::ostream& err) const {
    const model::HyperParams hp = hyper.Resolve();
    const auto store = data::ReadFeatureFile(features);
    const auto images = LoadImages(captions);
    RequireFeatures(store, images);

    data::Vocabulary vocabulary;
    if (vocab) {
      vocabulary = data::Vocabulary::Load(*vocab);
    } else {
      std::vector<std::string> texts;
      for (const auto& image : images) texts.insert(texts.end(), image.captions.begin(), image.captions.end());
      vocabulary = data::Vocabulary::Build(texts, hp.min_freq);
    }
    std::vector<std::string> warnings;
    const auto samples = data::BuildSamples(images, vocabulary, &warnings);
    PrintWarnings(warnings, err);
    if (samples.empty()) throw ContractError("no training samples");

    train::TrainOptions options;
    options.out_dir = out;
    options.vocab_hash = vocabulary.Hash();
    options.max_iterations = max_iters;
    if (resume) {
      warnings.clear();
      options.resume = train::LoadCheckpoint(*resume, vocabulary.Hash(), &warnings);
      PrintWarnings(warnings, err);
    }
    options.on_iteration = [&](const train::LogEntry& e) {
      if (log_every > 0 && e.iter % log_every == 0) {
        fmt::print(err, "iter {:>6}  rank {:.4f}  ic {:.4f}  sp {:.4f}  total {:.4f}\n", e.iter,
                   e.l_rank, e.l_ic, e.l_sp, e.total);
      }
    };

    fs::create_directories(out);
    vocabulary.Save(fs::path(out) / "vocab.tsv");
    {
      std::ofstream config(fs::path(out) / "config.json", std::ios::trunc);
      config << model::ToJson(hp).dump(2) << "\n";
    }
    const auto result = train::Train(hp, store, samples, vocabulary.size(), options);
    if (result.log.empty()) {
      fmt::print(out_stream, "no iterations run; initialized checkpoint -> {}\n",
                 (fs::path(out) / "final.sttc").string());
    } else {
      const auto& last = result.log.back();
      fmt::print(out_stream, "trained {} iterations ({} epochs); final total loss {:.4f} -> {}\n",
                 last.iter, result.checkpoint.epoch, last.total,
                 (fs::path(out) / "final.sttc").string());
    }
    return 0;
  }
};

struct EvalRetrievalCmd {
  ModelFlags model;
  std::string features, captions;
  std::size_t folds = 1;
  std::optional<std::string> out;

  int Run(std::ostream& out_stream, std::ostream& err) const {
    const auto loaded = LoadModel(model, err);
    const auto store = data::ReadFeatureFile(features);
    const auto images = LoadImages(captions);
    RequireFeatures(store, images);
    std::vector<std::string> warnings;
    const auto set = eval::MakeRetrievalSet(images, loaded.vocab, &warnings);
    PrintWarnings(warnings, err);
    // Fails before any scoring when the folds do not divide the images.
    eval::SplitFolds(set, folds);
    const auto& hp = loaded.checkpoint.hyper;
    auto report =
        eval::RetrievalReport(eval::EvaluateRetrievalFolds(loaded.params, hp, store, set, folds));
    report.metadata["images"] = set.image_ids.size();
    report.metadata["captions"] = set.captions.size();
    EmitReport(std::move(report), out, model, hp, out_stream);
    return 0;
  }
};

void PrintSamples(std::span<const eval::GeneratedSample> samples, std::size_t count,
                  std::ostream& out) {
  for (std::size_t i = 0; i < std::min(count, samples.size()); ++i) {
    const auto& s = samples[i];
    if (s.query.empty()) {
      fmt::print(out, "image {}: {}\n", s.image_id, s.hypothesis);
    } else {
      fmt::print(out, "image {}: \"{}\" -> {}\n", s.image_id, s.query, s.hypothesis);
    }
  }
}

struct EvalCaptionCmd {
  ModelFlags model;
  std::string features, captions;
  std::optional<std::string> out;
  std::size_t show = 0;

  int Run(std::ostream& out_stream, std::ostream& err) const {
    const auto loaded = LoadModel(model, err);
    const auto store = data::ReadFeatureFile(features);
    const auto images = LoadImages(captions);
    RequireFeatures(store, images);
    const auto& hp = loaded.checkpoint.hyper;
    const auto result = eval::EvalCaptionTask(loaded.params, hp, loaded.vocab, store, images);
    PrintSamples(result.samples, show, out_stream);
    EmitReport(eval::TextReport("caption", result.scores), out, model, hp, out_stream);
    return 0;
  }
};

struct EvalParaphraseCmd {
  ModelFlags model;
  std::string captions;
  std::optional<std::string> out;
  std::size_t show = 0;

  int Run(std::ostream& out_stream, std::ostream& err) const {
    const auto loaded = LoadModel(model, err);
    const auto images = LoadImages(captions);
    const auto& hp = loaded.checkpoint.hyper;
    const auto result = eval::EvalParaphraseTask(loaded.params, hp, loaded.vocab, images);
    PrintSamples(result.samples, show, out_stream);
    EmitReport(eval::TextReport("paraphrase", result.scores), out, model, hp, out_stream);
    return 0;
  }
};

struct GenerateCmd {
  ModelFlags model;
  std::string captions;
  std::optional<std::string> features;
  std::optional<std::uint64_t> image_id;
  std::optional<std::string> caption;
  std::size_t top = 5;

  int Run(std::ostream& out_stream, std::ostream& err) const {
    const auto loaded = LoadModel(model, err);
    const auto& hp = loaded.checkpoint.hyper;
    const auto images = LoadImages(captions);
    std::vector<std::string> warnings;
    const auto set = eval::MakeRetrievalSet(images, loaded.vocab, &warnings);
    PrintWarnings(warnings, err);

    std::vector<double> scores;
    Tensor<double> condition;
    if (image_id) {
      if (!features) throw ContractError("--image-id needs --features");
      const auto store = data::ReadFeatureFile(*features);
      const std::vector<std::uint64_t> ids{*image_id};
      condition = eval::ImageConditions(loaded.params, hp.mode, store, ids);
      if (hp.mode == model::SimilarityMode::kAttention) {
        const auto regions = eval::EmbedImageRegions(loaded.params, store, ids);
        const auto words = eval::EmbedCaptionWords(loaded.params, set.captions);
        const auto options = model::AttentionOptions::From(hp);
        for (const auto& w : words) scores.push_back(model::AttentionSimilarity(regions[0], w, options));
      } else {
        scores = DotRows(eval::EmbedCaptions(loaded.params, set.captions), condition);
      }
      fmt::print(out_stream, "query: image {}\n", *image_id);
    } else {
      const auto tokens = data::Tokenize(*caption, loaded.vocab);
      if (tokens.size() < 3) throw ContractError("--caption has no words");
      const std::vector<std::vector<data::TokenId>> query{tokens};
      condition = eval::EmbedCaptions(loaded.params, query);
      scores = DotRows(eval::EmbedCaptions(loaded.params, set.captions), condition);
      fmt::print(out_stream, "query: \"{}\"\n", *caption);
    }

    const auto decoded = eval::DecodeGreedyAll(loaded.params, condition, hp.max_decode_len);
    fmt::print(out_stream, "generated: {}\n",
               data::JoinWords(data::Detokenize(decoded[0], loaded.vocab)));

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    const std::size_t shown = std::min(top, order.size());
    fmt::print(out_stream, "top-{} retrieved captions:\n", shown);
    for (std::size_t r = 0; r < shown; ++r) {
      const std::size_t c = order[r];
      fmt::print(out_stream, "  {}. [{:.4f}] (image {}) {}\n", r + 1, scores[c],
                 set.image_ids[set.column_owner[c]], set.caption_text[c]);
    }
    return 0;
  }

  static std::vector<double> DotRows(const Tensor<double>& rows, const Tensor<double>& query) {
    std::vector<double> out(rows.rows(), 0.0);
    for (std::size_t r = 0; r < rows.rows(); ++r) {
      for (std::size_t k = 0; k < rows.cols(); ++k) out[r] += rows.at(r, k) * query.at(0, k);
    }
    return out;
  }
};

struct GradCheckCmd {
  std::string op = "all";
  std::string loss = "all";
  std::string mode = "global";
  std::size_t instances = 20;
  std::uint64_t seed = 0;
  double op_tolerance = 1e-6;
  double loss_tolerance = 1e-5;

  int Run(std::ostream& out, std::ostream&) const {
    std::vector<OpKind> kinds;
    if (op == "all") {
      const auto all = AllOpKinds();
      kinds.assign(all.begin(), all.end());
    } else if (op != "none") {
      const auto kind = ParseOpKind(op);
      if (!kind) throw ContractError("unknown op kind " + op);
      kinds.push_back(*kind);
    }
    std::vector<train::LossTerm> terms;
    for (auto t : {train::LossTerm::kRank, train::LossTerm::kCaption, train::LossTerm::kParaphrase}) {
      if (loss == "all" || loss == train::ToString(t)) terms.push_back(t);
    }
    if (loss != "all" && loss != "none" && terms.empty()) {
      throw ContractError("unknown loss " + loss + " (l_rank, l_ic, l_sp, all, none)");
    }

    bool ok = true;
    auto line = [&](const std::string& name, double worst, double tol) {
      const bool pass = worst < tol;
      ok = ok && pass;
      fmt::print(out, "{:<14} max rel err {:.3e} over {} instances (tol {:.0e})  {}\n", name,
                 worst, instances, tol, pass ? "PASS" : "FAIL");
    };
    for (OpKind kind : kinds) {
      double worst = 0.0;
      for (std::size_t i = 0; i < instances; ++i) {
        worst = std::max(worst, GradCheck(kind, {}, op_tolerance, seed + i).max_rel_err);
      }
      line(std::string(OpKindName(kind)), worst, op_tolerance);
    }
    const auto similarity = model::ParseSimilarityMode(mode);
    for (auto term : terms) {
      double worst = 0.0;
      for (std::size_t i = 0; i < instances; ++i) {
        worst = std::max(worst, train::GradCheckLoss(term, similarity, model::NegativeMode::kSum,
                                                     seed + i, loss_tolerance)
                                    .max_rel_err);
      }
      line(std::string(train::ToString(term)), worst, loss_tolerance);
    }
    return ok ? 0 : 1;
  }
};

}  // namespace

int RunCli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cross-modal image/caption embeddings: training, retrieval and generation",
               "stt"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "stt 0.1.0");

  BuildVocabCmd build_vocab;
  auto* vocab_cmd = app.add_subcommand("build-vocab", "Build a vocabulary from a caption file");
  vocab_cmd->add_option("--captions", build_vocab.captions)->required()->check(CLI::ExistingFile);
  vocab_cmd->add_option("--out", build_vocab.out, "Output vocab.tsv")->required();
  vocab_cmd->add_option("--min-freq", build_vocab.min_freq, "Default: profile value");
  vocab_cmd->add_option("--profile", build_vocab.profile)
      ->check(CLI::IsMember({"paper", "toy"}))
      ->capture_default_str();

  TrainCmd train_cmd;
  auto* train_app = app.add_subcommand("train", "Train a model");
  train_cmd.hyper.Register(train_app);
  train_app->add_option("--features", train_cmd.features, "STTF feature file")
      ->required()
      ->check(CLI::ExistingFile);
  train_app->add_option("--captions", train_cmd.captions, "Caption jsonl")
      ->required()
      ->check(CLI::ExistingFile);
  train_app->add_option("--out", train_cmd.out, "Output directory")->required();
  train_app->add_option("--vocab", train_cmd.vocab, "Existing vocabulary (default: build one)")
      ->check(CLI::ExistingFile);
  train_app->add_option("--resume", train_cmd.resume, "Continue from an epoch checkpoint")
      ->check(CLI::ExistingFile);
  train_app->add_option("--max-iters", train_cmd.max_iters, "Stop after this many steps");
  train_app->add_option("--log-every", train_cmd.log_every, "Progress line interval (0: quiet)")
      ->capture_default_str();

  EvalRetrievalCmd retrieval;
  auto* retrieval_app = app.add_subcommand("eval-retrieval", "Recall@K in both directions");
  retrieval.model.Register(retrieval_app);
  retrieval_app->add_option("--features", retrieval.features)->required()->check(CLI::ExistingFile);
  retrieval_app->add_option("--captions", retrieval.captions)->required()->check(CLI::ExistingFile);
  retrieval_app->add_option("--folds", retrieval.folds, "Contiguous image folds to average")
      ->capture_default_str();
  retrieval_app->add_option("--out", retrieval.out, "Report JSON path (table written as .txt)");
  std::optional<std::uint64_t> unused_seed;
  retrieval_app->add_option("--seed", unused_seed, "Accepted for symmetry; evaluation is deterministic");

  EvalCaptionCmd caption;
  auto* caption_app = app.add_subcommand("eval-caption", "BLEU/METEOR of generated captions");
  caption.model.Register(caption_app);
  caption_app->add_option("--features", caption.features)->required()->check(CLI::ExistingFile);
  caption_app->add_option("--captions", caption.captions)->required()->check(CLI::ExistingFile);
  caption_app->add_option("--out", caption.out, "Report JSON path");
  caption_app->add_option("--show", caption.show, "Print this many generated captions");
  caption_app->add_option("--seed", unused_seed);

  EvalParaphraseCmd paraphrase;
  auto* paraphrase_app = app.add_subcommand("eval-paraphrase", "BLEU/METEOR of paraphrases");
  paraphrase.model.Register(paraphrase_app);
  paraphrase_app->add_option("--captions", paraphrase.captions)->required()->check(CLI::ExistingFile);
  paraphrase_app->add_option("--out", paraphrase.out, "Report JSON path");
  paraphrase_app->add_option("--show", paraphrase.show, "Print this many paraphrases");
  paraphrase_app->add_option("--seed", unused_seed);

  GenerateCmd generate;
  auto* generate_app =
      app.add_subcommand("generate", "Decode a caption or paraphrase and list nearest captions");
  generate.model.Register(generate_app);
  generate_app->add_option("--captions", generate.captions, "Caption pool for retrieval")
      ->required()
      ->check(CLI::ExistingFile);
  generate_app->add_option("--features", generate.features)->check(CLI::ExistingFile);
  auto* image_opt = generate_app->add_option("--image-id", generate.image_id);
  auto* caption_opt = generate_app->add_option("--caption", generate.caption);
  image_opt->excludes(caption_opt);
  generate_app->add_option("--top", generate.top)->capture_default_str();
  generate_app->add_option("--seed", unused_seed);

  GradCheckCmd gradcheck;
  auto* gradcheck_app = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck_app->add_option("--op", gradcheck.op, "Op kind, 'all' or 'none'")->capture_default_str();
  gradcheck_app->add_option("--loss", gradcheck.loss, "l_rank, l_ic, l_sp, 'all' or 'none'")
      ->capture_default_str();
  gradcheck_app->add_option("--mode", gradcheck.mode)
      ->check(CLI::IsMember({"global", "attention"}))
      ->capture_default_str();
  gradcheck_app->add_option("--instances", gradcheck.instances)->capture_default_str();
  gradcheck_app->add_option("--seed", gradcheck.seed)->capture_default_str();
  gradcheck_app->add_option("--op-tol", gradcheck.op_tolerance)->capture_default_str();
  gradcheck_app->add_option("--loss-tol", gradcheck.loss_tolerance)->capture_default_str();

  try {
    app.parse(argc, argv);
    if (generate_app->parsed() && !generate.image_id && !generate.caption) {
      throw CLI::RequiredError("--image-id or --caption");
    }
  } catch (const CLI::ParseError& e) {
    if (app.exit(e, out, err) == 0) return 0;
    const auto parsed = app.get_subcommands();
    err << (parsed.empty() ? app.help() : parsed.back()->help());
    return 2;
  }

  try {
    if (vocab_cmd->parsed()) return build_vocab.Run(out, err);
    if (train_app->parsed()) return train_cmd.Run(out, err);
    if (retrieval_app->parsed()) return retrieval.Run(out, err);
    if (caption_app->parsed()) return caption.Run(out, err);
    if (paraphrase_app->parsed()) return paraphrase.Run(out, err);
    if (generate_app->parsed()) return generate.Run(out, err);
    if (gradcheck_app->parsed()) return gradcheck.Run(out, err);
  } catch (const std::exception& e) {
    fmt::print(err, "error: {}\n", e.what());
    return 1;
  }
  return 2;
}

}  // namespace stt::cli
