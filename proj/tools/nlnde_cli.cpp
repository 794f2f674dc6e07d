// Command-line front end for the three-stage pipeline: mention extraction,
// code normalization, and per-document code ranking.

#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "nlnde/biaffine_tagger.hpp"
#include "nlnde/coder.hpp"
#include "nlnde/config.hpp"
#include "nlnde/corpus_io.hpp"
#include "nlnde/crf_tagger.hpp"
#include "nlnde/ensemble.hpp"
#include "nlnde/errors.hpp"
#include "nlnde/evaluation.hpp"
#include "nlnde/manifest.hpp"
#include "nlnde/normalizer.hpp"
#include "nlnde/parallel.hpp"

namespace {

using namespace nlnde;

struct CommonFlags {
  std::string config_path;
  std::string submission;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
};

void add_common_flags(CLI::App* cmd, CommonFlags& flags,
                      bool with_submission = true) {
  cmd->add_option("--config", flags.config_path, "key=value config file");
  if (with_submission) {
    cmd->add_option("--submission", flags.submission, "S1..S5");
  }
  cmd->add_option("--seed", flags.seed, "random seed override");
  cmd->add_option("--jobs", flags.jobs, "worker threads for prediction");
}

PipelineConfig effective_config(const CommonFlags& flags) {
  std::map<std::string, std::string> kv;
  if (!flags.config_path.empty()) kv = read_config_file(flags.config_path);
  merge_env_overrides(kv);
  if (!flags.submission.empty()) kv["submission"] = flags.submission;
  if (flags.seed) kv["seed"] = std::to_string(*flags.seed);
  if (flags.jobs) kv["jobs"] = std::to_string(*flags.jobs);
  return resolve_config(kv);
}

std::string fmt(double v) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(6) << v;
  return out.str();
}

// ---- model loading ---------------------------------------------------------

struct LoadedModel {
  std::optional<CrfTagger> crf;
  std::optional<BiaffineTagger> biaffine;

  std::vector<Mention> predict(const Document& doc) const {
    return crf ? crf->predict(doc) : biaffine->predict(doc);
  }
};

LoadedModel load_member(const std::filesystem::path& model_dir,
                        const std::string& submission) {
  const std::filesystem::path dir = model_dir / submission;
  if (!std::filesystem::exists(dir / "manifest.json")) {
    throw ConfigError("no trained model at " + dir.string() +
                      " (run `train` first)");
  }
  LoadedModel model;
  if (submission_uses_crf(submission)) {
    model.crf = CrfTagger::load(dir);
  } else {
    model.biaffine = BiaffineTagger::load(dir);
  }
  return model;
}

// Per-document predictions for any submission, in document order.
std::vector<std::vector<Mention>> predict_all(
    const PipelineConfig& config, const std::string& submission,
    const std::vector<Document>& docs) {
  std::vector<std::vector<Mention>> out(docs.size());
  if (submission_is_ensemble(submission)) {
    const nlohmann::json manifest =
        read_json_file(config.model_dir / submission / "manifest.json");
    const auto member_ids =
        manifest.at("members").get<std::vector<std::string>>();
    VoteConfig vote;
    vote.quorum = manifest.at("quorum").get<std::size_t>();
    vote.members = member_ids.size();

    std::vector<LoadedModel> members;
    for (const std::string& id : member_ids) {
      members.push_back(load_member(config.model_dir, id));
    }
    parallel_for(docs.size(), config.jobs, [&](std::size_t i) {
      std::vector<std::vector<Mention>> votes;
      votes.reserve(members.size());
      for (const LoadedModel& member : members) {
        votes.push_back(member.predict(docs[i]));
      }
      out[i] = majority_vote(votes, vote);
    });
    return out;
  }

  const LoadedModel model = load_member(config.model_dir, submission);
  parallel_for(docs.size(), config.jobs,
               [&](std::size_t i) { out[i] = model.predict(docs[i]); });
  return out;
}

// ---- train -----------------------------------------------------------------

void train_member(const PipelineConfig& config, const std::string& submission,
                  const std::vector<Document>& train_docs,
                  const std::vector<Document>& dev_docs) {
  MentionSets dev_gold;
  for (const Document& doc : dev_docs) dev_gold[doc.doc_id] = doc.mentions;

  const auto log_epoch = [&](const EpochStats& stats, const auto& model) {
    std::ostringstream line;
    line << "[" << submission << "] epoch " << stats.epoch << " train_loss="
         << fmt(stats.train_loss) << " dev_loss=" << fmt(stats.dev_loss)
         << " lr=" << fmt(stats.lr);
    if (!dev_docs.empty() && submission != "S4") {
      MentionSets dev_pred;
      for (const Document& doc : dev_docs) {
        dev_pred[doc.doc_id] = model.predict(doc);
      }
      line << " dev_f1=" << fmt(ner_prf(dev_gold, dev_pred).f1);
    }
    std::cout << line.str() << "\n";
  };

  const std::filesystem::path dir = config.model_dir / submission;
  if (submission_uses_crf(submission)) {
    const CrfTagger model =
        CrfTagger::train(train_docs, dev_docs,
                         crf_train_config(config, submission), log_epoch);
    model.save(dir);
  } else {
    const BiaffineTagger model = BiaffineTagger::train(
        train_docs, dev_docs, biaffine_train_config(config),
        submission == "S4", log_epoch);
    model.save(dir);
  }
  save_gazetteer(build_gazetteer(train_docs), dir / "gazetteer.tsv");
  std::cout << "[" << submission << "] saved model to " << dir.string()
            << "\n";
}

int cmd_train(const CommonFlags& flags) {
  const PipelineConfig config = effective_config(flags);
  const std::vector<Document> train_docs = load_corpus_dir(config.train_dir);
  const std::vector<Document> dev_docs =
      config.dev_dir.empty() ? std::vector<Document>{}
                             : load_corpus_dir(config.dev_dir);

  if (submission_is_ensemble(config.submission)) {
    for (const std::string& member : {std::string("S1"), std::string("S2"),
                                      std::string("S3")}) {
      train_member(config, member, train_docs, dev_docs);
    }
    const std::filesystem::path dir = config.model_dir / config.submission;
    std::filesystem::create_directories(dir);
    write_json_file(dir / "manifest.json",
                    {{"kind", "ensemble"},
                     {"members", {"S1", "S2", "S3"}},
                     {"quorum", 2}});
    save_gazetteer(build_gazetteer(train_docs), dir / "gazetteer.tsv");
    std::cout << "[S5] saved ensemble manifest to " << dir.string() << "\n";
  } else {
    train_member(config, config.submission, train_docs, dev_docs);
  }
  return 0;
}

// ---- predict ---------------------------------------------------------------

int cmd_predict(const CommonFlags& flags, const std::string& input,
                const std::string& output) {
  const PipelineConfig config = effective_config(flags);
  const std::filesystem::path in_dir =
      input.empty() ? config.test_dir : std::filesystem::path(input);
  const std::filesystem::path out_dir =
      output.empty() ? config.output_dir / config.submission / "ann"
                     : std::filesystem::path(output);

  std::vector<Document> docs = load_corpus_dir(in_dir);
  const auto predictions = predict_all(config, config.submission, docs);
  for (std::size_t i = 0; i < docs.size(); ++i) {
    docs[i].mentions = predictions[i];
  }
  write_ann_dir(out_dir, docs);
  std::cout << "wrote " << docs.size() << " annotation files to "
            << out_dir.string() << "\n";
  return 0;
}

// ---- normalize -------------------------------------------------------------

std::filesystem::path default_gazetteer(const PipelineConfig& config) {
  return config.model_dir / config.submission / "gazetteer.tsv";
}

int cmd_normalize(const CommonFlags& flags, const std::string& input,
                  const std::string& output, const std::string& gazetteer) {
  const PipelineConfig config = effective_config(flags);
  const Gazetteer gaz = load_gazetteer(
      gazetteer.empty() ? default_gazetteer(config)
                        : std::filesystem::path(gazetteer));

  auto anns = load_ann_dir(input);
  std::filesystem::create_directories(output);
  for (auto& [doc_id, mentions] : anns) {
    for (Mention& m : mentions) {
      m.code = normalize(gaz, m.surface).code;
    }
    write_file(std::filesystem::path(output) / (doc_id + ".ann"),
               write_ann(mentions));
  }
  std::cout << "normalized " << anns.size() << " documents into " << output
            << "\n";
  return 0;
}

// ---- code ------------------------------------------------------------------

int cmd_code(const CommonFlags& flags, const std::string& input,
             const std::string& output, const std::string& gazetteer) {
  const PipelineConfig config = effective_config(flags);
  const Gazetteer gaz = load_gazetteer(
      gazetteer.empty() ? default_gazetteer(config)
                        : std::filesystem::path(gazetteer));

  const auto anns = load_ann_dir(input);
  std::vector<CodeRanking> rankings;
  for (const auto& [doc_id, mentions] : anns) {
    rankings.push_back(rank_codes(doc_id, mentions, gaz.code_counts()));
  }
  write_file(output, write_coding_tsv(rankings));
  std::cout << "wrote rankings for " << rankings.size() << " documents to "
            << output << "\n";
  return 0;
}

// ---- evaluate --------------------------------------------------------------

void check_doc_ids(const MentionSets& gold, const MentionSets& pred) {
  std::string missing, extra;
  for (const auto& [id, m] : gold) {
    if (!pred.contains(id)) missing += " " + id;
  }
  for (const auto& [id, m] : pred) {
    if (!gold.contains(id)) extra += " " + id;
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "document sets differ:";
    if (!missing.empty()) msg += " missing from predictions:" + missing + ";";
    if (!extra.empty()) msg += " unexpected in predictions:" + extra;
    throw ConfigError(msg);
  }
}

int cmd_evaluate(const std::string& gold_dir, const std::string& pred_dir,
                 const std::string& exclude_code, bool length_flag,
                 const std::string& pred_coding) {
  const std::vector<Document> gold_docs = load_corpus_dir(gold_dir);
  MentionSets gold;
  for (const Document& doc : gold_docs) gold[doc.doc_id] = doc.mentions;
  const MentionSets pred = load_ann_dir(pred_dir);
  check_doc_ids(gold, pred);

  std::ostringstream out;
  const auto emit_prf = [&](const std::string& name, const PRF& prf) {
    out << name << ".precision\t" << fmt(prf.precision) << "\n";
    out << name << ".recall\t" << fmt(prf.recall) << "\n";
    out << name << ".f1\t" << fmt(prf.f1) << "\n";
  };

  emit_prf("extraction", ner_prf(gold, pred));
  emit_prf("normalization", norm_prf(gold, pred));
  if (!exclude_code.empty()) {
    emit_prf("normalization.excl_" + exclude_code,
             norm_prf(gold, pred, exclude_code));
  }

  if (!pred_coding.empty()) {
    const auto rankings = parse_coding_tsv(read_file(pred_coding));
    std::map<std::string, std::vector<std::string>> by_doc;
    for (const CodeRanking& r : rankings) by_doc[r.doc_id] = r.codes;
    std::vector<std::pair<std::set<std::string>, std::vector<std::string>>>
        per_doc;
    for (const auto& [id, mentions] : gold) {
      std::set<std::string> codes;
      for (const Mention& m : mentions) {
        if (!m.code.empty()) codes.insert(m.code);
      }
      auto it = by_doc.find(id);
      per_doc.emplace_back(std::move(codes),
                           it == by_doc.end() ? std::vector<std::string>{}
                                              : it->second);
    }
    out << "coding.map\t" << fmt(map_score(per_doc)) << "\n";
  }

  if (length_flag) {
    for (const LengthBucket& bucket : length_report(gold, pred)) {
      const std::string name = "length." + bucket.key;
      out << name << ".frequency\t" << fmt(bucket.frequency) << "\n";
      emit_prf(name, bucket.prf);
    }
  }
  std::cout << out.str();
  return 0;
}

// ---- vote ------------------------------------------------------------------

int cmd_vote(const std::vector<std::string>& inputs, const std::string& output,
             std::size_t quorum) {
  std::vector<MentionSets> members;
  members.reserve(inputs.size());
  for (const std::string& dir : inputs) members.push_back(load_ann_dir(dir));
  for (std::size_t i = 1; i < members.size(); ++i) {
    check_doc_ids(members[0], members[i]);
  }

  VoteConfig vote{quorum, members.size()};
  std::filesystem::create_directories(output);
  for (const auto& [doc_id, first] : members[0]) {
    std::vector<std::vector<Mention>> votes;
    votes.reserve(members.size());
    for (const auto& member : members) votes.push_back(member.at(doc_id));
    write_file(std::filesystem::path(output) / (doc_id + ".ann"),
               write_ann(majority_vote(votes, vote)));
  }
  std::cout << "voted " << members[0].size() << " documents into " << output
            << "\n";
  return 0;
}

// ---- pipeline --------------------------------------------------------------

int cmd_pipeline(const CommonFlags& flags, const std::string& input,
                 const std::string& output) {
  const PipelineConfig config = effective_config(flags);
  const std::filesystem::path in_dir =
      input.empty() ? config.test_dir : std::filesystem::path(input);
  const std::filesystem::path out_dir =
      output.empty() ? config.output_dir / config.submission
                     : std::filesystem::path(output);

  const Gazetteer gaz = load_gazetteer(default_gazetteer(config));
  std::vector<Document> docs = load_corpus_dir(in_dir);
  const auto predictions = predict_all(config, config.submission, docs);

  std::vector<CodeRanking> rankings;
  for (std::size_t i = 0; i < docs.size(); ++i) {
    docs[i].mentions = predictions[i];
    for (Mention& m : docs[i].mentions) {
      m.code = normalize(gaz, m.surface).code;
    }
    rankings.push_back(
        rank_codes(docs[i].doc_id, docs[i].mentions, gaz.code_counts()));
  }
  write_ann_dir(out_dir / "ann", docs);
  write_file(out_dir / "coding.tsv", write_coding_tsv(rankings));
  std::cout << "pipeline wrote " << docs.size() << " documents to "
            << out_dir.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clinical tumor-mention extraction, normalization and coding"};
  app.require_subcommand(1);

  CommonFlags train_flags, predict_flags, normalize_flags, code_flags,
      pipeline_flags;
  std::string predict_in, predict_out;
  std::string normalize_in, normalize_out, normalize_gaz;
  std::string code_in, code_out = "coding.tsv", code_gaz;
  std::string eval_gold, eval_pred, eval_exclude, eval_coding;
  bool eval_length = false;
  std::string pipeline_in, pipeline_out;

  CLI::App* train = app.add_subcommand("train", "train submission model(s)");
  add_common_flags(train, train_flags);

  CLI::App* predict =
      app.add_subcommand("predict", "extract mentions to .ann files");
  add_common_flags(predict, predict_flags);
  predict->add_option("input", predict_in, "corpus dir (default: test_dir)");
  predict->add_option("output", predict_out, "output .ann dir");

  CLI::App* normalize_cmd =
      app.add_subcommand("normalize", "assign codes to extracted mentions");
  add_common_flags(normalize_cmd, normalize_flags);
  normalize_cmd->add_option("input", normalize_in, ".ann dir to normalize")
      ->required();
  normalize_cmd->add_option("output", normalize_out, "output .ann dir")
      ->required();
  normalize_cmd->add_option("--gazetteer", normalize_gaz, "gazetteer TSV");

  CLI::App* code =
      app.add_subcommand("code", "rank codes per document into a TSV");
  add_common_flags(code, code_flags);
  code->add_option("input", code_in, "coded .ann dir")->required();
  code->add_option("output", code_out, "output TSV path");
  code->add_option("--gazetteer", code_gaz, "gazetteer TSV");

  CLI::App* evaluate = app.add_subcommand("evaluate", "score predictions");
  evaluate->add_option("gold", eval_gold, "gold corpus dir (.txt + .ann)")
      ->required();
  evaluate->add_option("pred", eval_pred, "predicted .ann dir")->required();
  evaluate->add_option("--exclude-code", eval_exclude,
                       "also report normalization without this code");
  evaluate->add_flag("--length-report", eval_length,
                     "per-token-length buckets");
  evaluate->add_option("--pred-coding", eval_coding,
                       "predicted coding TSV (enables the ranking metric)");

  CLI::App* pipeline =
      app.add_subcommand("pipeline", "extract + normalize + rank end to end");
  add_common_flags(pipeline, pipeline_flags);
  pipeline->add_option("input", pipeline_in, "corpus dir (default: test_dir)");
  pipeline->add_option("output", pipeline_out, "output dir");

  std::vector<std::string> vote_in;
  std::string vote_out;
  std::size_t vote_quorum = 2;
  CLI::App* vote =
      app.add_subcommand("vote", "majority-vote merge of prediction dirs");
  vote->add_option("--input", vote_in, "predicted .ann dirs (two or more)")
      ->required()
      ->expected(2, -1);
  vote->add_option("--output", vote_out, "merged .ann dir")->required();
  vote->add_option("--quorum", vote_quorum, "votes needed to keep a mention");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code_ = app.exit(e);
    return code_ == 0 ? 0 : 2;  // bad usage is a user error
  }

  try {
    if (train->parsed()) return cmd_train(train_flags);
    if (predict->parsed()) {
      return cmd_predict(predict_flags, predict_in, predict_out);
    }
    if (normalize_cmd->parsed()) {
      return cmd_normalize(normalize_flags, normalize_in, normalize_out,
                           normalize_gaz);
    }
    if (code->parsed()) {
      return cmd_code(code_flags, code_in, code_out, code_gaz);
    }
    if (evaluate->parsed()) {
      return cmd_evaluate(eval_gold, eval_pred, eval_exclude, eval_length,
                          eval_coding);
    }
    if (pipeline->parsed()) {
      return cmd_pipeline(pipeline_flags, pipeline_in, pipeline_out);
    }
    if (vote->parsed()) return cmd_vote(vote_in, vote_out, vote_quorum);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
