// embmap command-line toolkit: train a mapper between embedding spaces,
// apply it, run the k-NN refinement baseline, tune hyperparameters, and
// score dependency parses. All state flows through flags; reruns with the
// same flags and seed reproduce output files byte for byte.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "CLI11.hpp"

#include "embmap/embedding_table.hpp"
#include "embmap/errors.hpp"
#include "embmap/knn.hpp"
#include "embmap/lbfgs.hpp"
#include "embmap/mapper.hpp"
#include "embmap/pipeline.hpp"
#include "embmap/synth.hpp"
#include "embmap/text.hpp"
#include "embmap/treebank.hpp"
#include "embmap/tuner.hpp"

namespace {

using namespace embmap;

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;

Count parse_count(const std::string& s) {
  if (s == "inf" || s == "INF" || s == "Inf") return kInfCount;
  Count v = 0;
  for (char c : s) {
    if (c < '0' || c > '9')
      throw ValidationError("expected a non-negative integer or 'inf', got '" +
                            s + "'");
    v = v * 10 + static_cast<Count>(c - '0');
  }
  return v;
}

std::string count_str(Count c) {
  return c == kInfCount ? "inf" : std::to_string(c);
}

// Accumulates the stdout report; a copy can go to a file.
class Report {
 public:
  void section(const std::string& name) { body_ << "# " << name << '\n'; }
  void kv(const std::string& key, const std::string& value) {
    body_ << key << ": " << value << '\n';
  }
  void kv(const std::string& key, double value) { kv(key, format_exact(value)); }
  void kv(const std::string& key, std::uint64_t value) {
    kv(key, std::to_string(value));
  }
  void raw(const std::string& text) { body_ << text; }
  std::string str() const { return body_.str(); }

  void emit(const std::string& out_path) const {
    std::cout << str();
    if (!out_path.empty()) {
      std::ofstream f(out_path, std::ios::binary);
      if (!f) throw ValidationError("cannot open for writing: " + out_path);
      f << str();
      if (!f) throw ValidationError("write failed: " + out_path);
    }
  }

 private:
  std::ostringstream body_;
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open for writing: " + path);
  f << content;
  if (!f) throw ValidationError("write failed: " + path);
}

EmbeddingTable load_table(const std::string& path, bool lowercase) {
  LoadStats stats;
  EmbeddingTable t = load_embeddings(path, {}, &stats, lowercase);
  if (stats.duplicate_words > 0)
    std::cerr << "warning: " << stats.duplicate_words
              << " duplicate word(s) in " << path
              << ", last occurrence kept\n";
  return t;
}

std::set<std::string> load_word_list(const std::string& path, bool lowercase) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open word list: " + path);
  std::set<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    words.insert(lowercase ? ascii_lower(line) : line);
  }
  return words;
}

std::set<std::string> vocab_of(const VocabCounts& counts) {
  std::set<std::string> v;
  for (const auto& [w, n] : counts.map()) v.insert(w);
  return v;
}

// ---------------------------------------------------------------------------
// shared flag bundles

struct ThresholdFlags {
  std::string preset;
  std::string tau_t, tau_m, tau_p;

  void attach(CLI::App* cmd, bool with_t, bool with_m, bool with_p) {
    cmd->add_option("--thresholds", preset,
                    "threshold preset: t1, t3, t5, or tinf");
    if (with_t)
      cmd->add_option("--tau-t", tau_t,
                      "min training-corpus count for mapper training pairs");
    if (with_m)
      cmd->add_option("--tau-m", tau_m,
                      "words seen fewer than this many times get remapped "
                      "('inf' remaps everything)");
    if (with_p)
      cmd->add_option("--tau-p", tau_p,
                      "parser vocabulary threshold for the filter utility");
  }

  ThresholdSettings resolve() const {
    ThresholdSettings t;
    if (!preset.empty()) {
      auto p = ThresholdSettings::preset(preset);
      if (!p)
        throw ValidationError("unknown threshold preset '" + preset +
                              "' (expected t1, t3, t5, or tinf)");
      t = *p;
    }
    if (!tau_t.empty()) t.tau_t = parse_count(tau_t);
    if (!tau_m.empty()) t.tau_m = parse_count(tau_m);
    if (!tau_p.empty()) t.tau_p = parse_count(tau_p);
    return t;
  }
};

struct TrainerFlags {
  double alpha = 0.5;
  double l1 = 0.0;
  double l2 = 0.0;
  std::size_t hidden = 400;
  std::string init = "scaled";
  std::uint64_t seed = 1;
  int max_iter = 500;
  int memory = 10;
  double grad_tol = 1e-6;
  double obj_tol = 1e-9;

  void attach(CLI::App* cmd, bool with_loss) {
    if (with_loss) {
      cmd->add_option("--alpha", alpha,
                      "weight of the absolute-error term, in [0,1]");
      cmd->add_option("--l1", l1, "L1 penalty weight");
      cmd->add_option("--l2", l2, "L2 penalty weight");
    }
    cmd->add_option("--hidden", hidden, "hidden layer width");
    cmd->add_option("--init", init, "parameter init: scaled, uniform, or zero");
    cmd->add_option("--seed", seed, "random seed (echoed in the report)");
    cmd->add_option("--max-iter", max_iter, "optimizer iteration budget");
    cmd->add_option("--memory", memory, "L-BFGS history size");
    cmd->add_option("--grad-tol", grad_tol,
                    "stop when the gradient inf-norm falls below this");
    cmd->add_option("--obj-tol", obj_tol,
                    "stop on relative objective decrease below this");
  }

  MapperHyperParams resolve(const ThresholdSettings& thresholds,
                            int workers) const {
    if (!(alpha >= 0.0 && alpha <= 1.0))
      throw ValidationError("alpha must be in [0,1]");
    if (l1 < 0.0 || l2 < 0.0) throw ValidationError("l1/l2 must be >= 0");
    if (hidden == 0) throw ValidationError("hidden must be >= 1");
    MapperHyperParams hp;
    hp.alpha = alpha;
    hp.lambda1 = l1;
    hp.lambda2 = l2;
    hp.hidden_dim = hidden;
    hp.thresholds = thresholds;
    hp.seed = seed;
    hp.workers = workers;
    if (init == "scaled")
      hp.init = MapperHyperParams::Init::scaled;
    else if (init == "uniform")
      hp.init = MapperHyperParams::Init::uniform_small;
    else if (init == "zero")
      hp.init = MapperHyperParams::Init::zero;
    else
      throw ValidationError("unknown init mode '" + init +
                            "' (expected scaled, uniform, or zero)");
    hp.optimizer.max_iterations = max_iter;
    hp.optimizer.memory = memory;
    hp.optimizer.grad_tol = grad_tol;
    hp.optimizer.obj_rel_tol = obj_tol;
    return hp;
  }

  void echo(Report& r) const {
    r.kv("alpha", alpha);
    r.kv("l1", l1);
    r.kv("l2", l2);
    r.kv("hidden", static_cast<std::uint64_t>(hidden));
    r.kv("init", init);
    r.kv("seed", seed);
    r.kv("max_iter", static_cast<std::uint64_t>(max_iter));
    r.kv("memory", static_cast<std::uint64_t>(memory));
    r.kv("grad_tol", grad_tol);
    r.kv("obj_tol", obj_tol);
  }
};

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string pairs_initial, pairs_trained, counts_path, out, report_out;
  ThresholdFlags thresholds;
  TrainerFlags trainer;
  int workers = 1;
  bool lowercase = false;
  bool trace = false;
};

int run_train(const TrainArgs& a) {
  ThresholdSettings th = a.thresholds.resolve();
  MapperHyperParams hp = a.trainer.resolve(th, a.workers);
  if (a.trace)
    hp.optimizer.trace = [](const lbfgs::IterationTrace& t) {
      std::cerr << "iter " << t.iteration << " f=" << format_exact(t.value)
                << " |g|=" << format_exact(t.grad_inf_norm)
                << " step=" << format_exact(t.step_length) << '\n';
    };

  EmbeddingTable initial = load_table(a.pairs_initial, a.lowercase);
  EmbeddingTable trained = load_table(a.pairs_trained, a.lowercase);
  VocabCounts counts = load_counts(a.counts_path, a.lowercase);

  TrainingPairs pairs =
      select_training_pairs(initial, trained, counts, th.tau_t);
  TrainOutcome outcome = train_mapper(pairs, hp);
  save_checkpoint(outcome.model, a.out);

  Report r;
  r.section("config");
  r.kv("command", std::string("train"));
  r.kv("pairs_initial", a.pairs_initial);
  r.kv("pairs_trained", a.pairs_trained);
  r.kv("counts", a.counts_path);
  r.kv("tau_t", count_str(th.tau_t));
  a.trainer.echo(r);
  r.kv("lowercase", std::string(a.lowercase ? "true" : "false"));
  r.kv("out", a.out);
  r.section("result");
  r.kv("training_pairs", static_cast<std::uint64_t>(pairs.size()));
  r.kv("final_objective", outcome.final_value);
  r.kv("iterations", static_cast<std::uint64_t>(outcome.iterations));
  r.kv("evaluations", static_cast<std::uint64_t>(outcome.evaluations));
  r.kv("termination", std::string(lbfgs::stop_reason_name(outcome.reason)));
  r.emit(a.report_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// map / knn share the merge reporting

void emit_mapping_report(Report& r, const MappingReport& report,
                         const std::string& report_out,
                         const std::string& json_out) {
  r.section("result");
  r.raw(report.to_text());
  r.emit(report_out);
  if (!json_out.empty()) write_file(json_out, report.to_json());
}

struct MapArgs {
  std::string checkpoint, initial, trained, counts_path;
  std::string eval_vocab, eval_conll;
  std::string merged_out, report_out, json_report_out;
  ThresholdFlags thresholds;
  int workers = 1;
  bool lowercase = false;
};

int run_map(const MapArgs& a) {
  ThresholdSettings th = a.thresholds.resolve();
  MapperModel model = load_checkpoint(a.checkpoint);
  EmbeddingTable initial = load_table(a.initial, a.lowercase);
  EmbeddingTable trained = load_table(a.trained, a.lowercase);
  VocabCounts counts = load_counts(a.counts_path, a.lowercase);

  std::set<std::string> vocab;
  const std::set<std::string>* vocab_ptr = nullptr;
  if (!a.eval_vocab.empty()) {
    vocab = load_word_list(a.eval_vocab, a.lowercase);
    vocab_ptr = &vocab;
  } else if (!a.eval_conll.empty()) {
    for (const auto& sent : parse_conll(a.eval_conll, a.lowercase))
      for (const auto& tok : sent.tokens) vocab.insert(tok.form);
    vocab_ptr = &vocab;
  }

  auto [merged, report] = apply_mapping(model, initial, trained, counts,
                                        th.tau_m, vocab_ptr, a.workers);
  save_embeddings(merged, a.merged_out);

  Report r;
  r.section("config");
  r.kv("command", std::string("map"));
  r.kv("checkpoint", a.checkpoint);
  r.kv("initial", a.initial);
  r.kv("trained", a.trained);
  r.kv("counts", a.counts_path);
  r.kv("tau_m", count_str(th.tau_m));
  r.kv("eval_vocab", a.eval_vocab.empty() ? a.eval_conll : a.eval_vocab);
  r.kv("lowercase", std::string(a.lowercase ? "true" : "false"));
  r.kv("merged_out", a.merged_out);
  emit_mapping_report(r, report, a.report_out, a.json_report_out);
  return kExitOk;
}

struct KnnArgs {
  std::string initial, trained, counts_path;
  std::string eval_vocab;
  std::string merged_out, report_out, json_report_out;
  ThresholdFlags thresholds;
  std::size_t k = 3;
  bool normalize_weights = false;
  int workers = 1;
  bool lowercase = false;
};

int run_knn(const KnnArgs& a) {
  ThresholdSettings th = a.thresholds.resolve();
  EmbeddingTable initial = load_table(a.initial, a.lowercase);
  EmbeddingTable trained = load_table(a.trained, a.lowercase);
  VocabCounts counts = load_counts(a.counts_path, a.lowercase);

  std::set<std::string> vocab;
  const std::set<std::string>* vocab_ptr = nullptr;
  if (!a.eval_vocab.empty()) {
    vocab = load_word_list(a.eval_vocab, a.lowercase);
    vocab_ptr = &vocab;
  }

  auto [merged, report] =
      knn_apply_mapping(initial, trained, counts, th.tau_t, th.tau_m, a.k,
                        a.normalize_weights, vocab_ptr, a.workers);
  save_embeddings(merged, a.merged_out);

  Report r;
  r.section("config");
  r.kv("command", std::string("knn"));
  r.kv("initial", a.initial);
  r.kv("trained", a.trained);
  r.kv("counts", a.counts_path);
  r.kv("tau_t", count_str(th.tau_t));
  r.kv("tau_m", count_str(th.tau_m));
  r.kv("k", static_cast<std::uint64_t>(a.k));
  r.kv("normalize_weights",
       std::string(a.normalize_weights ? "true" : "false"));
  r.kv("merged_out", a.merged_out);
  emit_mapping_report(r, report, a.report_out, a.json_report_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// tune

struct TuneArgs {
  std::string pairs_initial, pairs_trained, counts_path, out, report_out;
  ThresholdFlags thresholds;
  TrainerFlags trainer;
  std::vector<double> alphas, l1s, l2s;
  std::string metric = "heldout";
  std::string metric_cmd, metric_table_out;
  double metric_alpha = 0.5;
  double split = 0.9;
  std::size_t subsample = 0;
  std::uint64_t subsample_seed = 1;
  int workers = 1;
  bool lowercase = false;
};

double run_metric_command(const std::string& cmd, const std::string& path) {
  std::string full = cmd + " " + path;
  FILE* pipe = popen(full.c_str(), "r");
  if (!pipe) throw ValidationError("cannot run metric command: " + full);
  std::string output;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) output.append(buf, got);
  int status = pclose(pipe);
  if (status != 0)
    throw ValidationError("metric command failed with status " +
                          std::to_string(status) + ": " + full);
  // Last non-empty line must be a bare real number.
  std::istringstream ss(output);
  std::string line, last;
  while (std::getline(ss, line))
    if (!line.empty()) last = line;
  if (last.empty())
    throw ValidationError("metric command produced no output: " + full);
  const char* begin = last.c_str();
  char* end = nullptr;
  double v = std::strtod(begin, &end);
  if (end != begin + last.size())
    throw ValidationError("metric command output is not a number: '" + last +
                          "'");
  return v;
}

int run_tune(const TuneArgs& a) {
  ThresholdSettings th = a.thresholds.resolve();
  MapperHyperParams base = a.trainer.resolve(th, 1);

  EmbeddingTable initial = load_table(a.pairs_initial, a.lowercase);
  EmbeddingTable trained = load_table(a.pairs_trained, a.lowercase);
  VocabCounts counts = load_counts(a.counts_path, a.lowercase);
  TrainingPairs all_pairs =
      select_training_pairs(initial, trained, counts, th.tau_t);

  GridSpec grid = GridSpec::defaults();
  if (!a.alphas.empty()) grid.alphas = a.alphas;
  if (!a.l1s.empty()) grid.lambda1s = a.l1s;
  if (!a.l2s.empty()) grid.lambda2s = a.l2s;

  TrainingPairs train_part;
  DevMetric metric;
  if (a.metric == "heldout") {
    std::tie(train_part, metric) =
        heldout_metric(all_pairs, a.split, base.seed, a.metric_alpha);
  } else if (a.metric == "command") {
    if (a.metric_cmd.empty() || a.metric_table_out.empty())
      throw ValidationError(
          "--metric command requires --metric-cmd and --metric-table-out");
    train_part = all_pairs;
    metric = [&](const MapperModel& model) {
      auto [merged, report] =
          apply_mapping(model, initial, trained, counts, th.tau_m);
      save_embeddings(merged, a.metric_table_out);
      return run_metric_command(a.metric_cmd, a.metric_table_out);
    };
  } else {
    throw ValidationError("unknown metric '" + a.metric +
                          "' (expected heldout or command)");
  }

  std::optional<SubsampleSpec> sub;
  if (a.subsample > 0) sub = SubsampleSpec{a.subsample, a.subsample_seed};
  // The external-command metric writes one shared table file, so those runs
  // stay sequential.
  int grid_workers = a.metric == "command" ? 1 : a.workers;
  TuneResult result =
      grid_search(train_part, metric, grid, base, grid_workers, sub);

  write_file(a.out, result.to_tsv());

  Report r;
  r.section("config");
  r.kv("command", std::string("tune"));
  r.kv("pairs_initial", a.pairs_initial);
  r.kv("pairs_trained", a.pairs_trained);
  r.kv("counts", a.counts_path);
  r.kv("tau_t", count_str(th.tau_t));
  r.kv("metric", a.metric);
  if (a.metric == "command") {
    r.kv("metric_cmd", a.metric_cmd);
    r.kv("tau_m", count_str(th.tau_m));
  } else {
    r.kv("metric_alpha", a.metric_alpha);
    r.kv("split", a.split);
  }
  a.trainer.echo(r);
  r.kv("grid_points", static_cast<std::uint64_t>(grid.size()));
  if (result.subsampled)
    r.kv("subsample", static_cast<std::uint64_t>(a.subsample));
  r.kv("out", a.out);
  r.section("result");
  r.kv("evaluated_points", static_cast<std::uint64_t>(result.table.size()));
  r.kv("best_alpha", result.best.alpha);
  r.kv("best_l1", result.best.lambda1);
  r.kv("best_l2", result.best.lambda2);
  r.kv("best_metric", result.best_metric);
  r.emit(a.report_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// eval / stats

struct EvalArgs {
  std::string gold, pred, pred_b;
  std::string counts_path, train_conll, initial;
  std::string tau_m;
  std::string subset_mode = "any";
  std::string metric = "uas";
  std::size_t samples = 100000;
  std::uint64_t seed = 1;
  std::string report_out, json_report_out;
  bool exclude_punct = false;
  int workers = 1;
  bool lowercase = false;
};

OotvSubsetMode parse_subset_mode(const std::string& s) {
  if (s == "any") return OotvSubsetMode::any_ootv;
  if (s == "with-initial") return OotvSubsetMode::with_initial;
  throw ValidationError("unknown subset mode '" + s +
                        "' (expected any or with-initial)");
}

int run_eval(const EvalArgs& a) {
  auto gold = parse_conll(a.gold, a.lowercase);
  auto pred = parse_conll(a.pred, a.lowercase);
  AttachmentScores sc = attachment_scores(gold, pred, a.exclude_punct);

  EvalReport report;
  report.uas = sc.uas;
  report.las = sc.las;
  report.token_count = sc.scored_tokens;

  bool have_vocab = !a.counts_path.empty() || !a.train_conll.empty();
  OotvStats st;
  if (have_vocab) {
    if (a.initial.empty())
      throw ValidationError("OOTV statistics require --initial");
    VocabCounts counts = a.train_conll.empty()
                             ? load_counts(a.counts_path, a.lowercase)
                             : count_tokens(parse_conll(a.train_conll,
                                                        a.lowercase));
    EmbeddingTable initial = load_table(a.initial, a.lowercase);
    Count tau_m = a.tau_m.empty() ? 1 : parse_count(a.tau_m);
    st = ootv_stats(vocab_of(counts), gold, initial, tau_m, counts,
                    parse_subset_mode(a.subset_mode));
    report.has_ootv = true;
    report.ootv_rate = st.rate_before;
    report.ootv_after_rate = st.rate_after;
    report.ootv_sentence_count = st.ootv_sentences.size();
    if (!st.ootv_sentences.empty()) {
      std::vector<DepSentence> gsub, psub;
      for (std::size_t idx : st.ootv_sentences) {
        gsub.push_back(gold[idx]);
        psub.push_back(pred[idx]);
      }
      AttachmentScores sub = attachment_scores(gsub, psub, a.exclude_punct);
      report.has_ootv_subset_scores = true;
      report.ootv_uas = sub.uas;
      report.ootv_las = sub.las;
    }
  }

  Report r;
  r.section("config");
  r.kv("command", std::string("eval"));
  r.kv("gold", a.gold);
  r.kv("pred", a.pred);
  if (!a.pred_b.empty()) r.kv("pred_b", a.pred_b);
  r.kv("exclude_punct", std::string(a.exclude_punct ? "true" : "false"));
  if (have_vocab) {
    r.kv("counts", a.train_conll.empty() ? a.counts_path : a.train_conll);
    r.kv("initial", a.initial);
    r.kv("tau_m", a.tau_m.empty() ? "1" : a.tau_m);
    r.kv("subset_mode", a.subset_mode);
  }
  if (!a.pred_b.empty()) {
    r.kv("metric", a.metric);
    r.kv("samples", static_cast<std::uint64_t>(a.samples));
    r.kv("seed", a.seed);
    r.kv("rng", std::string("embmap-rng-v1"));
  }
  r.section("result");
  r.raw(report.to_text());

  if (!a.pred_b.empty()) {
    auto pred_b = parse_conll(a.pred_b, a.lowercase);
    ScoreMetric metric =
        a.metric == "las" ? ScoreMetric::las : ScoreMetric::uas;
    if (a.metric != "las" && a.metric != "uas")
      throw ValidationError("unknown metric '" + a.metric +
                            "' (expected uas or las)");
    double p = bootstrap_test(gold, pred, pred_b, a.samples, a.seed, metric,
                              a.workers, a.exclude_punct);
    r.kv("bootstrap_p", p);
  }

  r.emit(a.report_out);
  if (!a.json_report_out.empty()) write_file(a.json_report_out, report.to_json());
  return kExitOk;
}

struct StatsArgs {
  std::string eval_conll, counts_path, train_conll, initial;
  std::string tau_m;
  std::string subset_mode = "any";
  std::string report_out;
  int workers = 1;
  bool lowercase = false;
};

int run_stats(const StatsArgs& a) {
  if (a.counts_path.empty() && a.train_conll.empty())
    throw ValidationError("stats requires --counts or --train-conll");
  auto corpus = parse_conll(a.eval_conll, a.lowercase);
  VocabCounts counts =
      a.train_conll.empty()
          ? load_counts(a.counts_path, a.lowercase)
          : count_tokens(parse_conll(a.train_conll, a.lowercase));
  EmbeddingTable initial = load_table(a.initial, a.lowercase);
  Count tau_m = a.tau_m.empty() ? 1 : parse_count(a.tau_m);
  OotvStats st = ootv_stats(vocab_of(counts), corpus, initial, tau_m, counts,
                            parse_subset_mode(a.subset_mode));

  Report r;
  r.section("config");
  r.kv("command", std::string("stats"));
  r.kv("eval_conll", a.eval_conll);
  r.kv("counts", a.train_conll.empty() ? a.counts_path : a.train_conll);
  r.kv("initial", a.initial);
  r.kv("tau_m", a.tau_m.empty() ? "1" : a.tau_m);
  r.kv("subset_mode", a.subset_mode);
  r.section("result");
  r.kv("eval_types", static_cast<std::uint64_t>(st.eval_types));
  r.kv("unseen_types", static_cast<std::uint64_t>(st.unseen_types));
  r.kv("unresolved_types", static_cast<std::uint64_t>(st.unresolved_types));
  r.kv("ootv_pct", st.rate_before);
  r.kv("ootv_after_pct", st.rate_after);
  r.kv("ootv_sentences",
       static_cast<std::uint64_t>(st.ootv_sentences.size()));
  r.emit(a.report_out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// synth / neighbors

struct SynthArgs {
  std::uint64_t seed = 1;
  std::size_t n = 1000;
  std::size_t dim = 10;
  std::string transform = "saturating";
  double noise = 0.0;
  double split = 0.9;
  std::string out_prefix;
  std::string report_out;
  int workers = 1;
};

int run_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.seed = a.seed;
  spec.n_pairs = a.n;
  spec.dim = a.dim;
  spec.kind = transform_from_name(a.transform);
  spec.noise = a.noise;
  spec.train_fraction = a.split;
  SynthData data = generate(spec);
  dump_synth(data, a.out_prefix);

  Report r;
  r.section("config");
  r.kv("command", std::string("synth"));
  r.kv("seed", a.seed);
  r.kv("n", static_cast<std::uint64_t>(a.n));
  r.kv("dim", static_cast<std::uint64_t>(a.dim));
  r.kv("transform", a.transform);
  r.kv("noise", a.noise);
  r.kv("split", a.split);
  r.kv("rng", std::string("embmap-rng-v1"));
  r.kv("out_prefix", a.out_prefix);
  r.section("result");
  r.kv("train_pairs", static_cast<std::uint64_t>(data.train.size()));
  r.kv("heldout_pairs", static_cast<std::uint64_t>(data.heldout.size()));
  r.kv("files", a.out_prefix + ".initial.vec " + a.out_prefix +
                    ".trained.vec " + a.out_prefix + ".counts.txt " +
                    a.out_prefix + ".heldout-target.vec");
  r.emit(a.report_out);
  return kExitOk;
}

struct NeighborsArgs {
  std::string table, word;
  std::size_t k = 3;
  bool include_self = false;
  bool lowercase = false;
};

int run_neighbors(const NeighborsArgs& a) {
  EmbeddingTable table = load_table(a.table, a.lowercase);
  std::string word = a.lowercase ? ascii_lower(a.word) : a.word;
  auto vec = table.at(word);
  std::unordered_set<std::string> exclude;
  if (!a.include_self) exclude.insert(word);
  auto neighbors = nearest_neighbors(table, vec, a.k,
                                     exclude.empty() ? nullptr : &exclude);
  for (const auto& [w, sim] : neighbors)
    std::cout << w << ' ' << format_exact(sim) << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"embmap: map initial word embeddings into a task-trained space"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* cmd_train = app.add_subcommand(
      "train", "train a mapper on (initial, task-trained) embedding pairs");
  cmd_train->add_option("--pairs-initial", train.pairs_initial,
                        "initial-space embedding file")
      ->required();
  cmd_train->add_option("--pairs-trained", train.pairs_trained,
                        "task-trained embedding file")
      ->required();
  cmd_train->add_option("--counts", train.counts_path,
                        "training-corpus word counts file")
      ->required();
  cmd_train->add_option("--out", train.out, "checkpoint output path")
      ->required();
  cmd_train->add_option("--report-out", train.report_out,
                        "also write the stdout report here");
  train.thresholds.attach(cmd_train, true, false, false);
  train.trainer.attach(cmd_train, true);
  cmd_train->add_option("--workers", train.workers, "thread count");
  cmd_train->add_flag("--lowercase", train.lowercase,
                      "lowercase words at ingestion");
  cmd_train->add_flag("--trace", train.trace,
                      "per-iteration optimizer trace on stderr");

  MapArgs map_args;
  auto* cmd_map = app.add_subcommand(
      "map", "produce a merged table: keep frequent task-trained rows, map "
             "the rest through a checkpoint");
  cmd_map->add_option("--checkpoint", map_args.checkpoint, "mapper checkpoint")
      ->required();
  cmd_map->add_option("--initial", map_args.initial, "initial-space table")
      ->required();
  cmd_map->add_option("--trained", map_args.trained, "task-trained table")
      ->required();
  cmd_map->add_option("--counts", map_args.counts_path, "word counts file")
      ->required();
  cmd_map->add_option("--merged-out", map_args.merged_out,
                      "merged table output path")
      ->required();
  cmd_map->add_option("--report-out", map_args.report_out,
                      "also write the stdout report here");
  cmd_map->add_option("--json-report-out", map_args.json_report_out,
                      "machine-readable mapping report");
  cmd_map->add_option("--eval-vocab", map_args.eval_vocab,
                      "word list defining the evaluation vocabulary");
  cmd_map->add_option("--eval-conll", map_args.eval_conll,
                      "CoNLL file whose forms define the evaluation "
                      "vocabulary");
  map_args.thresholds.attach(cmd_map, false, true, false);
  cmd_map->add_option("--workers", map_args.workers, "thread count");
  cmd_map->add_flag("--lowercase", map_args.lowercase,
                    "lowercase words at ingestion");

  KnnArgs knn_args;
  auto* cmd_knn = app.add_subcommand(
      "knn", "k-NN refinement baseline producing a merged table");
  cmd_knn->add_option("--initial", knn_args.initial, "original-space table")
      ->required();
  cmd_knn->add_option("--trained", knn_args.trained, "refined-space table")
      ->required();
  cmd_knn->add_option("--counts", knn_args.counts_path, "word counts file")
      ->required();
  cmd_knn->add_option("--merged-out", knn_args.merged_out,
                      "merged table output path")
      ->required();
  cmd_knn->add_option("--report-out", knn_args.report_out,
                      "also write the stdout report here");
  cmd_knn->add_option("--json-report-out", knn_args.json_report_out,
                      "machine-readable mapping report");
  cmd_knn->add_option("--eval-vocab", knn_args.eval_vocab,
                      "word list defining the evaluation vocabulary");
  cmd_knn->add_option("--k", knn_args.k, "neighbor count");
  cmd_knn->add_flag("--normalize-weights", knn_args.normalize_weights,
                    "divide neighbor weights by their sum");
  knn_args.thresholds.attach(cmd_knn, true, true, false);
  cmd_knn->add_option("--workers", knn_args.workers, "thread count");
  cmd_knn->add_flag("--lowercase", knn_args.lowercase,
                    "lowercase words at ingestion");

  TuneArgs tune;
  auto* cmd_tune = app.add_subcommand(
      "tune", "grid search over alpha, l1, l2 maximizing a development "
              "metric");
  cmd_tune->add_option("--pairs-initial", tune.pairs_initial,
                       "initial-space embedding file")
      ->required();
  cmd_tune->add_option("--pairs-trained", tune.pairs_trained,
                       "task-trained embedding file")
      ->required();
  cmd_tune->add_option("--counts", tune.counts_path, "word counts file")
      ->required();
  cmd_tune->add_option("--out", tune.out, "audit table output path (TSV)")
      ->required();
  cmd_tune->add_option("--report-out", tune.report_out,
                       "also write the stdout report here");
  tune.thresholds.attach(cmd_tune, true, true, false);
  tune.trainer.attach(cmd_tune, false);
  cmd_tune->add_option("--alphas", tune.alphas, "alpha grid values")
      ->delimiter(',');
  cmd_tune->add_option("--l1s", tune.l1s, "lambda1 grid values")
      ->delimiter(',');
  cmd_tune->add_option("--l2s", tune.l2s, "lambda2 grid values")
      ->delimiter(',');
  cmd_tune->add_option("--metric", tune.metric,
                       "heldout (built-in) or command (external)");
  cmd_tune->add_option("--metric-cmd", tune.metric_cmd,
                       "external metric command; receives the merged table "
                       "path, must print the metric as its last stdout line");
  cmd_tune->add_option("--metric-table-out", tune.metric_table_out,
                       "merged-table path handed to the metric command");
  cmd_tune->add_option("--metric-alpha", tune.metric_alpha,
                       "alpha used by the built-in held-out metric");
  cmd_tune->add_option("--split", tune.split,
                       "train share of the held-out split");
  cmd_tune->add_option("--subsample", tune.subsample,
                       "evaluate only this many random grid points");
  cmd_tune->add_option("--subsample-seed", tune.subsample_seed,
                       "seed for grid subsampling");
  cmd_tune->add_option("--workers", tune.workers, "thread count");
  cmd_tune->add_flag("--lowercase", tune.lowercase,
                     "lowercase words at ingestion");

  EvalArgs eval;
  auto* cmd_eval = app.add_subcommand(
      "eval", "attachment scores, OOTV statistics, and the paired bootstrap");
  cmd_eval->add_option("--gold", eval.gold, "gold CoNLL file")->required();
  cmd_eval->add_option("--pred", eval.pred, "predicted CoNLL file")
      ->required();
  cmd_eval->add_option("--pred-b", eval.pred_b,
                       "second system (hypothesized better) for the "
                       "bootstrap test");
  cmd_eval->add_option("--counts", eval.counts_path,
                       "training word counts (enables OOTV statistics)");
  cmd_eval->add_option("--train-conll", eval.train_conll,
                       "training corpus to count instead of --counts");
  cmd_eval->add_option("--initial", eval.initial, "initial-space table");
  cmd_eval->add_option("--tau-m", eval.tau_m, "mapping threshold");
  cmd_eval->add_option("--subset-mode", eval.subset_mode,
                       "OOTV sentence subset: any or with-initial");
  cmd_eval->add_option("--metric", eval.metric, "bootstrap metric: uas or las");
  cmd_eval->add_option("--samples", eval.samples, "bootstrap resamples");
  cmd_eval->add_option("--seed", eval.seed, "bootstrap seed");
  cmd_eval->add_option("--report-out", eval.report_out,
                       "also write the stdout report here");
  cmd_eval->add_option("--json-report-out", eval.json_report_out,
                       "machine-readable report");
  cmd_eval->add_flag("--exclude-punct", eval.exclude_punct,
                     "skip tokens whose gold label is punct");
  cmd_eval->add_option("--workers", eval.workers, "thread count");
  cmd_eval->add_flag("--lowercase", eval.lowercase,
                     "lowercase forms at ingestion");

  StatsArgs stats;
  auto* cmd_stats = app.add_subcommand(
      "stats", "OOTV rates of an evaluation corpus against training counts");
  cmd_stats->add_option("--eval-conll", stats.eval_conll, "evaluation corpus")
      ->required();
  cmd_stats->add_option("--counts", stats.counts_path,
                        "training word counts file");
  cmd_stats->add_option("--train-conll", stats.train_conll,
                        "training corpus to count instead of --counts");
  cmd_stats->add_option("--initial", stats.initial, "initial-space table")
      ->required();
  cmd_stats->add_option("--tau-m", stats.tau_m, "mapping threshold");
  cmd_stats->add_option("--subset-mode", stats.subset_mode,
                        "OOTV sentence subset: any or with-initial");
  cmd_stats->add_option("--report-out", stats.report_out,
                        "also write the stdout report here");
  cmd_stats->add_option("--workers", stats.workers, "thread count");
  cmd_stats->add_flag("--lowercase", stats.lowercase,
                      "lowercase words at ingestion");

  SynthArgs synth;
  auto* cmd_synth = app.add_subcommand(
      "synth", "generate a synthetic dataset from a known transform");
  cmd_synth->add_option("--seed", synth.seed, "generator seed");
  cmd_synth->add_option("--n", synth.n, "total pair count");
  cmd_synth->add_option("--dim", synth.dim, "vector dimensionality");
  cmd_synth->add_option("--transform", synth.transform,
                        "identity, linear, affine, or saturating");
  cmd_synth->add_option("--noise", synth.noise, "target noise stddev");
  cmd_synth->add_option("--split", synth.split, "train fraction");
  cmd_synth->add_option("--out-prefix", synth.out_prefix,
                        "output path prefix")
      ->required();
  cmd_synth->add_option("--report-out", synth.report_out,
                        "also write the stdout report here");
  cmd_synth->add_option("--workers", synth.workers, "thread count (unused)");

  NeighborsArgs neighbors;
  auto* cmd_neighbors = app.add_subcommand(
      "neighbors", "nearest neighbors of a word by cosine similarity");
  cmd_neighbors->add_option("--table", neighbors.table, "embedding table")
      ->required();
  cmd_neighbors->add_option("--word", neighbors.word, "query word")
      ->required();
  cmd_neighbors->add_option("--k", neighbors.k, "neighbor count");
  cmd_neighbors->add_flag("--include-self", neighbors.include_self,
                          "keep the query word in the result");
  cmd_neighbors->add_flag("--lowercase", neighbors.lowercase,
                          "lowercase words at ingestion");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }

  try {
    if (cmd_train->parsed()) return run_train(train);
    if (cmd_map->parsed()) return run_map(map_args);
    if (cmd_knn->parsed()) return run_knn(knn_args);
    if (cmd_tune->parsed()) return run_tune(tune);
    if (cmd_eval->parsed()) return run_eval(eval);
    if (cmd_stats->parsed()) return run_stats(stats);
    if (cmd_synth->parsed()) return run_synth(synth);
    if (cmd_neighbors->parsed()) return run_neighbors(neighbors);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
  std::cerr << "error: no subcommand\n";
  return kExitValidation;
}
