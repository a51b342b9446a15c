#include "embmap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "embmap/errors.hpp"
#include "embmap/parallel.hpp"
#include "embmap/rng.hpp"
#include "embmap/text.hpp"

#include "json.hpp"

namespace embmap {

std::optional<ThresholdSettings> ThresholdSettings::preset(
    const std::string& name) {
  if (name == "t1") return t1();
  if (name == "t3") return t3();
  if (name == "t5") return t5();
  if (name == "tinf") return tinf();
  return std::nullopt;
}

TrainingPairs select_training_pairs(const EmbeddingTable& initial,
                                    const EmbeddingTable& trained,
                                    const VocabCounts& counts, Count tau_t) {
  std::vector<std::size_t> picked;  // row indices into trained
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const std::string& w = trained.word_at(i);
    if (counts.of(w) >= tau_t && initial.contains(w)) picked.push_back(i);
  }
  if (picked.empty())
    throw ValidationError("no mapper training data at tau_t=" +
                          (tau_t == kInfCount ? std::string("inf")
                                              : std::to_string(tau_t)));

  TrainingPairs pairs;
  pairs.words.reserve(picked.size());
  pairs.inputs.resize(static_cast<Eigen::Index>(initial.dim()),
                      static_cast<Eigen::Index>(picked.size()));
  pairs.targets.resize(static_cast<Eigen::Index>(trained.dim()),
                       static_cast<Eigen::Index>(picked.size()));
  for (std::size_t k = 0; k < picked.size(); ++k) {
    const std::string& w = trained.word_at(picked[k]);
    pairs.words.push_back(w);
    auto in = initial.at(w);
    auto out = trained.row(picked[k]);
    for (std::size_t j = 0; j < in.size(); ++j)
      pairs.inputs(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          in[j];
    for (std::size_t j = 0; j < out.size(); ++j)
      pairs.targets(static_cast<Eigen::Index>(j),
                    static_cast<Eigen::Index>(k)) = out[j];
  }
  return pairs;
}

TrainOutcome train_mapper(const TrainingPairs& pairs,
                          const MapperHyperParams& hyper) {
  if (pairs.size() == 0) throw ValidationError("train_mapper: no pairs");
  MapperDims dims{pairs.in_dim(), hyper.hidden_dim, pairs.out_dim()};

  std::vector<double> theta0(dims.flat_size(), 0.0);
  if (hyper.init == MapperHyperParams::Init::uniform_small) {
    Rng rng(hyper.seed);
    for (auto& t : theta0) t = rng.uniform(-0.01, 0.01);
  } else if (hyper.init == MapperHyperParams::Init::scaled) {
    Rng rng(hyper.seed);
    const double w1_scale = 2.5 / std::sqrt(static_cast<double>(dims.in));
    const double w2_scale = 1.0 / std::sqrt(static_cast<double>(dims.hidden));
    std::size_t p = 0;
    for (std::size_t i = 0; i < dims.hidden * dims.in; ++i)
      theta0[p++] = rng.uniform(-w1_scale, w1_scale);
    for (std::size_t i = 0; i < dims.hidden; ++i)
      theta0[p++] = rng.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < dims.out * dims.hidden; ++i)
      theta0[p++] = rng.uniform(-w2_scale, w2_scale);
    for (std::size_t i = 0; i < dims.out; ++i)
      theta0[p++] = rng.uniform(-0.01, 0.01);
  }

  Objective obj(pairs, hyper.hidden_dim, hyper.alpha, hyper.lambda1,
                hyper.lambda2, hyper.workers);
  lbfgs::Result res = lbfgs::minimize(
      [&obj](std::span<const double> t, std::span<double> g) {
        return obj.value_and_grad(t, g);
      },
      std::move(theta0), hyper.optimizer);

  if (!std::isfinite(res.value))
    throw NumericError("training diverged: non-finite objective");

  TrainOutcome out;
  out.model = unpack(res.theta, dims);
  out.final_value = res.value;
  out.iterations = res.iterations;
  out.evaluations = res.evaluations;
  out.reason = res.reason;
  return out;
}

namespace {

double pct(std::size_t part, std::size_t whole) {
  return whole == 0 ? 0.0 : 100.0 * static_cast<double>(part) /
                                static_cast<double>(whole);
}

}  // namespace

std::pair<EmbeddingTable, MappingReport> apply_mapping_with(
    const WordMapper& map_word, std::size_t out_dim,
    const EmbeddingTable& initial, const EmbeddingTable& trained,
    const VocabCounts& counts, Count tau_m,
    const std::set<std::string>* eval_vocab, int workers) {
  // Considered vocabulary: trained order, then unseen initial words in table
  // order, then eval-only words in lexicographic order.
  enum class Fate { keep, map, residual };
  std::vector<std::pair<const std::string*, Fate>> plan;
  auto decide = [&](const std::string& w) {
    if (counts.of(w) >= tau_m && trained.contains(w)) return Fate::keep;
    if (initial.contains(w)) return Fate::map;
    return Fate::residual;
  };
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const std::string& w = trained.word_at(i);
    plan.emplace_back(&w, decide(w));
  }
  for (std::size_t i = 0; i < initial.size(); ++i) {
    const std::string& w = initial.word_at(i);
    if (trained.contains(w)) continue;
    plan.emplace_back(&w, decide(w));
  }
  if (eval_vocab) {
    for (const std::string& w : *eval_vocab) {
      if (trained.contains(w) || initial.contains(w)) continue;
      plan.emplace_back(&w, decide(w));
    }
  }

  // Map in parallel into per-word slots; assembly below stays sequential.
  std::vector<std::size_t> to_map;
  for (std::size_t i = 0; i < plan.size(); ++i)
    if (plan[i].second == Fate::map) to_map.push_back(i);
  Eigen::MatrixXd mapped(static_cast<Eigen::Index>(out_dim),
                         static_cast<Eigen::Index>(to_map.size()));
  parallel_for(to_map.size(), workers, [&](std::size_t k) {
    const std::string& w = *plan[to_map[k]].first;
    std::span<double> out{mapped.col(static_cast<Eigen::Index>(k)).data(),
                          out_dim};
    map_word(w, initial.at(w), out);
  });

  EmbeddingTable merged(out_dim);
  MappingReport report;
  std::size_t next_mapped = 0;
  for (const auto& [wp, fate] : plan) {
    switch (fate) {
      case Fate::keep:
        merged.upsert(*wp, trained.at(*wp));
        ++report.words_kept;
        break;
      case Fate::map: {
        auto col = mapped.col(static_cast<Eigen::Index>(next_mapped++));
        merged.upsert(*wp, std::span<const double>{col.data(), out_dim});
        ++report.words_mapped;
        break;
      }
      case Fate::residual:
        report.residual_words.push_back(*wp);
        ++report.words_residual;
        break;
    }
  }
  std::sort(report.residual_words.begin(), report.residual_words.end());
  report.considered = plan.size();

  if (eval_vocab) {
    report.eval_vocab_size = eval_vocab->size();
    std::size_t before = 0, after = 0;
    for (const std::string& w : *eval_vocab) {
      if (!trained.contains(w)) {
        ++before;
        if (!initial.contains(w)) ++after;
      }
    }
    report.ootv_before_pct = pct(before, eval_vocab->size());
    report.ootv_after_pct = pct(after, eval_vocab->size());
  }
  return {std::move(merged), std::move(report)};
}

std::pair<EmbeddingTable, MappingReport> apply_mapping(
    const MapperModel& model, const EmbeddingTable& initial,
    const EmbeddingTable& trained, const VocabCounts& counts, Count tau_m,
    const std::set<std::string>* eval_vocab, int workers) {
  if (model.dims().in != initial.dim())
    throw ValidationError("model in_dim " + std::to_string(model.dims().in) +
                          " != initial table dim " +
                          std::to_string(initial.dim()));
  if (!trained.empty() && model.dims().out != trained.dim())
    throw ValidationError("model out_dim " + std::to_string(model.dims().out) +
                          " != trained table dim " +
                          std::to_string(trained.dim()));
  return apply_mapping_with(
      [&model](const std::string&, std::span<const double> in,
               std::span<double> out) {
        Eigen::VectorXd y = forward(model, in);
        for (std::size_t j = 0; j < out.size(); ++j)
          out[j] = y[static_cast<Eigen::Index>(j)];
      },
      model.dims().out, initial, trained, counts, tau_m, eval_vocab, workers);
}

EmbeddingTable filter_parser_vocab(const EmbeddingTable& trained,
                                   const VocabCounts& counts, Count tau_p,
                                   const std::string& unknown_token) {
  EmbeddingTable out(trained.dim());
  for (std::size_t i = 0; i < trained.size(); ++i) {
    const std::string& w = trained.word_at(i);
    if (w == unknown_token || counts.of(w) >= tau_p)
      out.upsert(w, trained.row(i));
  }
  return out;
}

std::string MappingReport::to_text() const {
  std::ostringstream os;
  os << "words_mapped: " << words_mapped << '\n';
  os << "words_kept: " << words_kept << '\n';
  os << "words_residual: " << words_residual << '\n';
  os << "considered: " << considered << '\n';
  os << "eval_vocab_size: " << eval_vocab_size << '\n';
  if (eval_vocab_size > 0) {
    os << "ootv_before_pct: " << format_exact(ootv_before_pct) << '\n';
    os << "ootv_after_pct: " << format_exact(ootv_after_pct) << '\n';
  } else {
    os << "ootv_before_pct: -\n";
    os << "ootv_after_pct: -\n";
  }
  return os.str();
}

std::string MappingReport::to_json() const {
  nlohmann::json j;
  j["words_mapped"] = words_mapped;
  j["words_kept"] = words_kept;
  j["words_residual"] = words_residual;
  j["considered"] = considered;
  j["eval_vocab_size"] = eval_vocab_size;
  j["ootv_before_pct"] = ootv_before_pct;
  j["ootv_after_pct"] = ootv_after_pct;
  j["residual_words"] = residual_words;
  return j.dump(2) + "\n";
}

}  // namespace embmap
