// Copyright 2026 The RewardForge Authors.
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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Lines starting with "info" are measurements only.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iterator>
#include <random>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "json.hpp"
#include "line_client.h"
#include "reward_forge/checkpoint.h"
#include "reward_forge/data.h"
#include "reward_forge/ensemble.h"
#include "reward_forge/error.h"
#include "reward_forge/kernels.h"
#include "reward_forge/loss.h"
#include "reward_forge/metrics.h"
#include "reward_forge/rl_reward.h"
#include "reward_forge/service.h"
#include "reward_forge/synthetic.h"
#include "reward_forge/trainer.h"
#include "test_util.h"

namespace reward_forge {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double SecondsSince(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void Info(const std::string& text) { std::printf("info  %s\n", text.c_str()); }

// --- gradient suite --------------------------------------------------------

Outcome GradientSuite() {
  constexpr int kInstances = 20;
  constexpr double kStep = 1e-5;
  constexpr double kRelTol = 1e-4;
  // Entries whose magnitude is at the finite-difference noise level are
  // compared absolutely.
  constexpr double kAbsFloor = 1e-8;
  const auto start = Clock::now();
  std::mt19937_64 rng(20260101);
  std::size_t cells = 0;
  std::size_t entries = 0;
  std::size_t bad = 0;
  double worst_rel = 0.0;
  for (int layers = 1; layers <= 5; ++layers) {
    for (ActivationKind act :
         {ActivationKind::kIdentity, ActivationKind::kTanh, ActivationKind::kSiLU}) {
      for (bool ln : {false, true}) {
        for (double lambda : {0.0, 0.01, 0.1}) {
          ++cells;
          for (int inst = 0; inst < kInstances; ++inst) {
            HeadConfig cfg;
            cfg.input_dim = 4;
            cfg.hidden_dim = 3;
            cfg.layer_count = layers;
            cfg.activation = act;
            const HeadParams p = rf_test::RandomHead(cfg, rng, 0.8);
            const TrainBatch batch = rf_test::RandomBatch(rng, 4, 3, 200);
            const auto analytic = FlattenGradient(
                TotalLossAndGrad(batch, p, LossTerms{lambda, ln}).grads);
            const auto numeric = rf_test::FiniteDifference(
                [&](const std::vector<double>& theta) {
                  return rf_test::NaiveTotalLoss(UnflattenParams(cfg, theta), batch, lambda,
                                                 ln);
                },
                FlattenParams(p), kStep);
            for (std::size_t i = 0; i < analytic.size(); ++i) {
              ++entries;
              const double diff = std::fabs(analytic[i] - numeric[i]);
              const double scale = std::max(std::fabs(analytic[i]), std::fabs(numeric[i]));
              if (scale >= 1e-6) worst_rel = std::max(worst_rel, diff / scale);
              if (!rf_test::GradientEntryMatches(analytic[i], numeric[i], kRelTol, kAbsFloor)) {
                ++bad;
              }
            }
          }
        }
      }
    }
  }
  const double seconds = SecondsSince(start);
  return {bad == 0 && cells == 90 && seconds < 60.0,
          fmt::format("{} cells x {} instances, {} gradient entries, {} outside tolerance, "
                      "worst relative error {:.2e} over entries >= 1e-6, {:.1f}s (limit 60s)",
                      cells, kInstances, entries, bad, worst_rel, seconds)};
}

// --- loss fixed points ----------------------------------------------------

Outcome LossFixedPoints() {
  const std::vector<double> zeros(64, 0.0);
  const double at_zero = PairwiseRankingLoss(zeros, zeros);
  const bool ln2 = std::fabs(at_zero - std::log(2.0)) <= 1e-12;

  std::mt19937_64 rng(5);
  bool bit_identical = true;
  for (int trial = 0; trial < 50; ++trial) {
    HeadConfig cfg;
    cfg.input_dim = 6;
    cfg.layer_count = 1 + trial % 5;
    const HeadParams p = rf_test::RandomHead(cfg, rng);
    const TrainBatch batch = rf_test::RandomBatch(rng, 6, 1 + trial % 17);
    for (bool ln : {false, true}) {
      std::vector<double> w;
      std::vector<double> l;
      for (std::size_t i = 0; i < batch.rows(); ++i) {
        w.push_back(ScoreResponse(p, std::vector<float>(batch.chosen_row(i).begin(),
                                                        batch.chosen_row(i).end()),
                                  batch.chosen_lengths[i], ln));
        l.push_back(ScoreResponse(p, std::vector<float>(batch.rejected_row(i).begin(),
                                                        batch.rejected_row(i).end()),
                                  batch.rejected_lengths[i], ln));
      }
      for (ExecutionMode mode : {ExecutionMode::kSerial, ExecutionMode::kParallel}) {
        const LossAndGrad out = TotalLossAndGrad(batch, p, LossTerms{0.0, ln}, mode);
        bit_identical = bit_identical && out.total == PairwiseRankingLoss(w, l) &&
                        out.penalty == 0.0 && out.total == out.ranking;
      }
    }
  }

  const std::vector<double> w50{50.0};
  const std::vector<double> l0{0.0};
  const double tail = PairwiseRankingLoss(w50, l0);
  const bool tail_ok = std::isfinite(tail) && tail < 1e-20 && tail >= 0.0;
  const std::vector<double> big_w{1e300};
  const std::vector<double> big_l{-1e300};
  const bool no_overflow = std::isfinite(PairwiseRankingLoss(big_w, big_l)) &&
                           std::isfinite(PairwiseRankingLoss(big_l, big_w));
  return {ln2 && bit_identical && tail_ok && no_overflow,
          fmt::format("zero rewards {:.17g} (ln 2 = {:.17g}); lambda=0 path bit-identical: {}; "
                      "margin +50 loss {:.3e}; extreme margins finite: {}",
                      at_zero, std::log(2.0), bit_identical, tail, no_overflow)};
}

// --- synthetic recovery ----------------------------------------------------

struct RecoveryRun {
  double accuracy = 0.0;
  double seconds = 0.0;
};

RecoveryRun TrainOnSynthetic(const SyntheticData& data, const TrainConfig& cfg,
                             std::uint64_t seed, std::vector<PreferenceRecord>* held_out_out) {
  auto store = std::make_shared<const EmbeddingStore>(data.store);
  std::vector<PreferenceRecord> train(data.records.begin(), data.records.begin() + 5000);
  std::vector<PreferenceRecord> held_out(data.records.begin() + 5000, data.records.end());
  HeadConfig head;
  head.input_dim = 32;
  head.layer_count = 2;
  head.activation = ActivationKind::kSiLU;
  head.seed = seed;
  const auto start = Clock::now();
  const TrainResult result =
      Train(PreferenceSet{store, train}, PreferenceSet{store, held_out}, head, cfg);
  RecoveryRun run;
  run.seconds = SecondsSince(start);
  run.accuracy = EvalModel(result.params, held_out, *store, cfg.length_normalization).overall_acc;
  if (held_out_out) *held_out_out = std::move(held_out);
  return run;
}

Outcome SyntheticRecovery() {
  SyntheticSpec spec;
  spec.dim = 32;
  spec.n_pairs = 10000;  // 5000 for training, 5000 held out
  spec.noise_temperature = 0.2;
  spec.seed = 7;
  const auto start = Clock::now();
  const SyntheticData data = GenerateSynthetic(spec);
  TrainConfig cfg;  // desk defaults
  cfg.shuffle_seed = 7;
  std::vector<PreferenceRecord> held_out;
  const RecoveryRun run = TrainOnSynthetic(data, cfg, 7, &held_out);
  const double bayes = BayesAccuracy(data.oracle, data.store, held_out);
  const double seconds = SecondsSince(start);

  TrainConfig longer = cfg;
  longer.epochs = 10;
  const RecoveryRun longer_run = TrainOnSynthetic(data, longer, 7, nullptr);
  Info(fmt::format("synthetic recovery with 10 epochs (otherwise defaults): held-out {:.4f}",
                   longer_run.accuracy));
  TrainConfig faster = cfg;
  faster.learning_rate = 1e-2;
  const RecoveryRun faster_run = TrainOnSynthetic(data, faster, 7, nullptr);
  Info(fmt::format("synthetic recovery with lr 1e-2 (otherwise defaults): held-out {:.4f}",
                   faster_run.accuracy));

  const bool pass = run.accuracy >= 0.95 && bayes - run.accuracy <= 0.03 && seconds < 120.0;
  return {pass, fmt::format("lr {} batch {} epochs {}: held-out accuracy {:.4f} (need >= 0.95), "
                            "Bayes {:.4f}, gap {:.4f} (need <= 0.03), {:.2f}s (limit 120s)",
                            cfg.learning_rate, cfg.batch_size, cfg.epochs, run.accuracy, bayes,
                            bayes - run.accuracy, seconds)};
}

// --- metric oracle ---------------------------------------------------------

Outcome MetricOracle() {
  std::mt19937_64 rng(99);
  std::normal_distribution<double> normal;
  // Acc+ <= Acc over random assignments. The bound needs every sample to hold
  // the same number of pairs, so each assignment draws one sample size.
  std::size_t violations = 0;
  std::size_t unequal_violations = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 1 + static_cast<int>(rng() % 5);
    const int samples = 1 + static_cast<int>(rng() % 12);
    std::vector<ScoredPair> pairs;
    for (int s = 0; s < samples; ++s) {
      for (int i = 0; i < k; ++i) {
        // Coarse scores so ties occur too.
        pairs.push_back(ScoredPair{fmt::format("{}-{}", s, i), std::round(normal(rng)),
                                   std::round(normal(rng)), i % 2 ? "a" : "b",
                                   "s" + std::to_string(s)});
      }
    }
    const EvalReport r = BuildReport(pairs);
    if (*r.acc_plus > r.acc) ++violations;

    std::vector<ScoredPair> uneven;
    for (int i = 0; i < 10; ++i) {
      uneven.push_back(ScoredPair{std::to_string(i), std::round(normal(rng)),
                                  std::round(normal(rng)), "c",
                                  "s" + std::to_string(rng() % 4)});
    }
    const EvalReport u = BuildReport(uneven);
    if (*u.acc_plus > u.acc) ++unequal_violations;
  }
  Info(fmt::format("Acc+ > Acc in {} of 1000 assignments with unequal sample sizes "
                   "(the bound does not hold there; Acc+ <= mean per-sample accuracy does)",
                   unequal_violations));

  std::size_t patterns = 0;
  std::size_t mismatches = 0;
  for (const auto& sizes : std::vector<std::vector<int>>{
           {1}, {2}, {3}, {4}, {1, 1}, {2, 2}, {3, 3}, {4, 4}, {1, 2, 3}, {4, 2, 1},
           {2, 2, 2, 2}}) {
    rf_test::ForEachOutcomePattern(sizes, [&](const std::vector<ScoredPair>& pairs) {
      ++patterns;
      const auto brute = rf_test::BruteForceMetrics(pairs);
      const EvalReport r = BuildReport(pairs);
      if (r.overall_acc != brute.overall || r.macro_acc != brute.macro ||
          *r.acc_plus != brute.acc_plus || *r.acc_plus > brute.sample_mean) {
        ++mismatches;
      }
    });
  }

  std::size_t macro_mismatches = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int per = 1 + static_cast<int>(rng() % 30);
    const int cats = 1 + static_cast<int>(rng() % 8);
    std::vector<ScoredPair> pairs;
    for (int c = 0; c < cats; ++c) {
      for (int i = 0; i < per; ++i) {
        pairs.push_back(ScoredPair{fmt::format("{}-{}", c, i), normal(rng), normal(rng),
                                   "c" + std::to_string(c), std::nullopt});
      }
    }
    if (MacroAccuracy(pairs) != OverallAccuracy(pairs)) ++macro_mismatches;
  }
  return {violations == 0 && mismatches == 0 && macro_mismatches == 0,
          fmt::format("Acc+ > Acc in {} of 1000 equal-size assignments; {} exhaustive patterns, "
                      "{} mismatches vs brute force; macro != overall on {} of 500 balanced "
                      "fixtures",
                      violations, patterns, mismatches, macro_mismatches)};
}

// --- regularization --------------------------------------------------------

struct RegularizationStats {
  double sq[2] = {0.0, 0.0};   // mean validation (r_w + r_l)^2 at lambda 0 and 0.1
  double acc[2] = {0.0, 0.0};  // mean validation accuracy
};

RegularizationStats RegularizationSweep(int epochs) {
  constexpr int kSeeds = 5;
  const double lambdas[2] = {0.0, 0.1};
  RegularizationStats stats;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    SyntheticSpec spec;
    spec.dim = 32;
    spec.n_pairs = 6000;
    spec.seed = 100 + seed;
    const SyntheticData data = GenerateSynthetic(spec);
    auto store = std::make_shared<const EmbeddingStore>(data.store);
    ValidationSplit split = SplitValidation(data.records, 1000, seed);
    HeadConfig head;
    head.input_dim = 32;
    head.seed = seed;
    for (int k = 0; k < 2; ++k) {
      TrainConfig cfg;
      cfg.epochs = epochs;
      cfg.lambda_zero_coeff = lambdas[k];
      cfg.shuffle_seed = seed;
      const TrainResult r = Train(PreferenceSet{store, split.train},
                                  PreferenceSet{store, split.validation}, head, cfg);
      const auto pairs = ScorePairs(r.params, *store, split.validation, false);
      double s = 0.0;
      for (const ScoredPair& p : pairs) {
        s += (p.reward_chosen + p.reward_rejected) * (p.reward_chosen + p.reward_rejected);
      }
      stats.sq[k] += s / static_cast<double>(pairs.size()) / kSeeds;
      stats.acc[k] += BuildReport(pairs).overall_acc / kSeeds;
    }
  }
  return stats;
}

Outcome Regularization() {
  constexpr double kNonInferiorityMargin = 0.01;
  const int default_epochs = TrainConfig{}.epochs;
  const RegularizationStats s = RegularizationSweep(default_epochs);
  const RegularizationStats longer = RegularizationSweep(10);
  Info(fmt::format("regularization with 10 epochs: (r_w+r_l)^2 {:.4f} vs {:.4f}, accuracy "
                   "lambda=0 {:.4f}, lambda=0.1 {:.4f}",
                   longer.sq[0], longer.sq[1], longer.acc[0], longer.acc[1]));
  const bool penalty_lower = s.sq[1] < s.sq[0];
  const bool non_inferior = s.acc[1] - s.acc[0] <= kNonInferiorityMargin;
  return {penalty_lower && non_inferior,
          fmt::format("5 seeds, {} epochs each: mean validation (r_w+r_l)^2 lambda=0 {:.4f}, "
                      "lambda=0.1 {:.4f}; mean validation accuracy lambda=0 {:.4f}, "
                      "lambda=0.1 {:.4f} (lambda=0.1 may exceed lambda=0 by at most {})",
                      default_epochs, s.sq[0], s.sq[1], s.acc[0], s.acc[1],
                      kNonInferiorityMargin)};
}

// --- ensemble fixture ------------------------------------------------------

HeadParams LinearHead(std::vector<double> w) {
  HeadParams p;
  p.config.input_dim = w.size();
  p.config.layer_count = 1;
  p.config.activation = ActivationKind::kIdentity;
  p.layers.push_back(DenseLayer{1, w.size(), std::move(w), {0.0}});
  return p;
}

PreferenceRecord IndexPair(std::string id, std::string category, std::size_t chosen,
                           std::size_t rejected) {
  PreferenceRecord r;
  r.id = std::move(id);
  r.dataset_name = "fixture";
  r.category = std::move(category);
  r.chosen.embedding_index = chosen;
  r.rejected.embedding_index = rejected;
  return r;
}

Outcome EnsembleFixture() {
  // Member A reads coordinate 0 and member B coordinate 1. On X, A's margin
  // is +3 and B's -1; on Y the roles swap.
  auto store = std::make_shared<const EmbeddingStore>(
      2, 4, std::vector<float>{3, 0, 0, 1, 0, 3, 1, 0});
  std::vector<PreferenceRecord> records;
  for (int i = 0; i < 4; ++i) {
    records.push_back(IndexPair("x" + std::to_string(i), "X", 0, 1));
    records.push_back(IndexPair("y" + std::to_string(i), "Y", 2, 3));
  }
  std::vector<EnsembleMember> members(2);
  members[0].member_id = "a";
  members[0].params = LinearHead({1.0, 0.0});
  members[1].member_id = "b";
  members[1].params = LinearHead({0.0, 1.0});
  for (auto& m : members) m.store = store;
  const double acc_a = EvalModel(members[0].params, records, *store, false).overall_acc;
  const double acc_b = EvalModel(members[1].params, records, *store, false).overall_acc;
  const double acc_ens = EvalEnsemble(members, EnsembleConfig{}, records).overall_acc;

  const std::vector<double> raw = {0.8, 0.6};
  const auto w = NormalizeWeights(raw);
  const double werr = std::max(std::fabs(w[0] - 4.0 / 7.0), std::fabs(w[1] - 3.0 / 7.0));

  // Accuracy weights computed from members at exactly 0.8 and 0.6.
  auto val_store = std::make_shared<const EmbeddingStore>(
      2, 4, std::vector<float>{1, 1, 0, 0, 1, -1, 0, 0});
  const std::vector<PreferenceRecord> val = {IndexPair("0", "c", 0, 1), IndexPair("1", "c", 0, 1),
                                             IndexPair("2", "c", 0, 1), IndexPair("3", "c", 2, 3),
                                             IndexPair("4", "c", 1, 0)};
  std::vector<EnsembleMember> val_members = members;
  for (auto& m : val_members) m.store = val_store;
  const auto computed = ComputeAccuracyWeights(val_members, val);
  const double cerr =
      std::max(std::fabs(computed[0] - 4.0 / 7.0), std::fabs(computed[1] - 3.0 / 7.0));

  // Degenerate ensembles on random heads and data, every strategy.
  std::mt19937_64 rng(8);
  bool identical = true;
  for (int trial = 0; trial < 20; ++trial) {
    const auto set = rf_test::RandomPreferenceSet(rng, 5, 60, {"p", "q", "r"});
    HeadConfig cfg;
    cfg.input_dim = 5;
    cfg.layer_count = 1 + trial % 5;
    cfg.activation = trial % 2 ? ActivationKind::kTanh : ActivationKind::kSiLU;
    EnsembleMember solo;
    solo.member_id = "solo";
    solo.params = rf_test::RandomHead(cfg, rng);
    solo.length_normalization = trial % 3 == 0;
    solo.store = set.store;
    const std::vector<EnsembleMember> one = {solo};
    const EvalReport expected =
        EvalModel(solo.params, set.records, *set.store, solo.length_normalization);
    for (auto strategy : {EnsembleStrategy::kAverage, EnsembleStrategy::kAccuracyWeighted,
                          EnsembleStrategy::kConfidenceWeighted}) {
      try {
        const EnsembleConfig resolved =
            ResolveWeights(one, EnsembleConfig{strategy, std::nullopt}, set.records);
        identical = identical && EvalEnsemble(one, resolved, set.records) == expected;
      } catch (const Error&) {
        // A member at zero validation accuracy cannot be accuracy-weighted.
        identical = identical && strategy == EnsembleStrategy::kAccuracyWeighted &&
                    expected.overall_acc == 0.0;
      }
    }
  }
  const bool pass = acc_a == 0.5 && acc_b == 0.5 && acc_ens == 1.0 && werr <= 1e-12 &&
                    cerr <= 1e-12 && identical;
  return {pass, fmt::format("members {:.2f} / {:.2f}, average ensemble {:.2f}; weights "
                            "(0.8, 0.6) -> ({:.17g}, {:.17g}), max error {:.1e} (computed from "
                            "validation: {:.1e}); single-member reports identical: {}",
                            acc_a, acc_b, acc_ens, w[0], w[1], werr, cerr, identical)};
}

// --- hybrid reward ---------------------------------------------------------

Outcome HybridRewardCriterion() {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> score(-60.0, 60.0);
  const GroundTruth gt{"42", MatchNormalization::kTrimCaseFold};
  std::size_t out_of_range = 0;
  std::size_t match_not_one = 0;
  for (int i = 0; i < 10000; ++i) {
    const double s = i % 10 == 0 ? 0.0 : score(rng);
    const bool match = rng() % 2 == 0;
    RolloutResponse r;
    r.text = match ? " 42\n" : "41";
    const double reward = HybridReward(r, gt, [s](const RolloutResponse&) { return s; });
    if (!(reward >= 0.0 && reward <= 1.0)) ++out_of_range;
    if (match && reward != 1.0) ++match_not_one;
  }
  RolloutResponse miss;
  miss.text = "41";
  const double half = HybridReward(miss, gt, [](const RolloutResponse&) { return 0.0; });
  const double nan = std::nan("");
  const auto agg = PairwiseAggregate(PairwiseScoreMatrix(3, {nan, 1, 2, 0, nan, 0, 0, 0, nan}));
  const bool agg_ok = agg == std::vector<double>{3.0, 0.0, 0.0};
  return {out_of_range == 0 && match_not_one == 0 && half == 0.5 && agg_ok,
          fmt::format("10000 cases: {} outside [0,1], {} matches not 1.0; non-match at score 0 "
                      "-> {}; pairwise on the 3x3 example -> ({}, {}, {})",
                      out_of_range, match_not_one, half, agg[0], agg[1], agg[2])};
}

// --- determinism and formats -----------------------------------------------

std::string Slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

std::vector<float> AsWire(const std::vector<float>& v) {
  return json(v).get<std::vector<float>>();
}

// Runs a mixed loopback session and counts responses that differ from the
// in-process computation.
std::pair<std::size_t, std::size_t> LoopbackSession(const HeadParams& head, bool ln) {
  auto models = std::make_shared<const ServedModels>(SingleHeadModels(head, ln));
  ServeConfig cfg;
  cfg.bind_address = "127.0.0.1:0";
  ScoringServer server(models, cfg);
  server.Start();
  rf_test::LineClient client(server.port());
  std::mt19937_64 rng(77);
  std::normal_distribution<double> normal;
  const std::size_t dim = head.config.input_dim;
  std::size_t requests = 0;
  std::size_t mismatches = 0;
  auto call = [&](const std::string& line) -> json {
    ++requests;
    const auto reply = client.Call(line);
    if (!reply) return json();
    return json::parse(*reply);
  };
  for (int i = 0; i < 120; ++i) {
    const int kind = i % 6;
    if (kind == 0) {
      const auto e = rf_test::RandomVector(rng, dim);
      const std::int64_t len = 1 + static_cast<std::int64_t>(rng() % 400);
      const json r = call(json{{"op", "score"}, {"request_id", i}, {"embedding", e},
                               {"token_length", len}}
                              .dump());
      if (r.value("request_id", -1) != i ||
          r["rewards"][0].get<double>() != ScoreResponse(head, AsWire(e), len, ln)) {
        ++mismatches;
      }
    } else if (kind == 1) {
      std::vector<std::vector<float>> embs;
      std::vector<std::int64_t> lens;
      for (int k = 0; k < 8; ++k) {
        embs.push_back(rf_test::RandomVector(rng, dim));
        lens.push_back(1 + static_cast<std::int64_t>(rng() % 400));
      }
      const json r = call(json{{"op", "score"}, {"request_id", i}, {"embeddings", embs},
                               {"token_lengths", lens}}
                              .dump());
      for (int k = 0; k < 8; ++k) {
        if (r["rewards"][k].get<double>() != ScoreResponse(head, AsWire(embs[k]), lens[k], ln)) {
          ++mismatches;
          break;
        }
      }
    } else if (kind == 2 || kind == 3) {
      std::vector<std::vector<float>> embs;
      std::vector<std::string> texts;
      for (int k = 0; k < 8; ++k) {
        embs.push_back(rf_test::RandomVector(rng, dim));
        texts.push_back(rng() % 3 == 0 ? " Yes" : "no");
      }
      const char* scheme = kind == 2 ? "hybrid" : "model";
      const json r = call(json{{"op", "score_group"}, {"request_id", i}, {"scheme", scheme},
                               {"embeddings", embs}, {"texts", texts},
                               {"ground_truth", {{"answer", "yes"}}}}
                              .dump());
      const GroundTruth gt{"yes", MatchNormalization::kTrimCaseFold};
      for (int k = 0; k < 8; ++k) {
        RolloutResponse resp;
        resp.text = texts[k];
        resp.embedding = AsWire(embs[k]);
        const double want = kind == 2 ? HybridReward(resp, gt, head, ln)
                                      : ModelReward(resp, head, ln);
        if (r["rewards"][k].get<double>() != want) {
          ++mismatches;
          break;
        }
      }
    } else if (kind == 4) {
      std::vector<std::vector<double>> s(8, std::vector<double>(8));
      std::vector<double> flat;
      for (auto& row : s) {
        for (double& x : row) {
          x = normal(rng);
          flat.push_back(x);
        }
      }
      const json r = call(json{{"op", "score_group"}, {"request_id", i}, {"scheme", "pairwise"},
                               {"pairwise_scores", s}}
                              .dump());
      if (r["rewards"].get<std::vector<double>>() !=
          PairwiseAggregate(PairwiseScoreMatrix(8, flat))) {
        ++mismatches;
      }
    } else {
      // Alternate malformed lines, wrong dimensions and info.
      json r;
      if (i % 4 == 1) {
        r = call("{\"op\": \"score\", \"embedding\": [1,");
        if (!r.contains("error") || r["error"]["code"] != "BAD_REQUEST") ++mismatches;
      } else if (i % 4 == 3) {
        r = call(json{{"op", "score"}, {"embedding", std::vector<float>(dim + 1, 0.5f)}}.dump());
        if (!r.contains("error") || r["error"]["code"] != "DIM_MISMATCH") ++mismatches;
      } else {
        r = call(json{{"op", "info"}, {"request_id", i}}.dump());
        if (r["info"]["dim"] != dim) ++mismatches;
      }
    }
  }
  server.Stop();
  return {requests, mismatches};
}

Outcome DeterminismAndFormats() {
  rf_test::TempDir dir;
  SyntheticSpec spec;
  spec.dim = 16;
  spec.n_pairs = 1500;
  spec.seed = 3;
  spec.category_labels = {"math", "code", "chat"};
  const SyntheticData data = GenerateSynthetic(spec);
  auto store = std::make_shared<const EmbeddingStore>(data.store);
  ValidationSplit split = SplitValidation(data.records, 300, 3);
  HeadConfig head;
  head.input_dim = 16;
  head.layer_count = 3;
  head.seed = 11;
  TrainConfig cfg;
  cfg.shuffle_seed = 11;
  cfg.lambda_zero_coeff = 0.01;
  cfg.length_normalization = true;
  const PreferenceSet train{store, split.train};
  const PreferenceSet val{store, split.validation};
  const TrainResult a = Train(train, val, head, cfg);
  const TrainResult b = Train(train, val, head, cfg);
  SaveCheckpoint(dir / "a.json", Checkpoint{a.params, true});
  SaveCheckpoint(dir / "b.json", Checkpoint{b.params, true});
  const bool checkpoints_identical = Slurp(dir / "a.json") == Slurp(dir / "b.json");

  TrainConfig parallel = cfg;
  parallel.execution = ExecutionMode::kParallel;
  const TrainResult c = Train(train, val, head, parallel);
  Info(fmt::format("parallel training ({} threads) reproduces the sequential parameters "
                   "bit-for-bit: {}",
                   kernels::MaxThreads(), c.params == a.params));

  const Checkpoint loaded = LoadCheckpoint(dir / "a.json");
  SaveCheckpoint(dir / "a2.json", loaded);
  const bool ckpt_roundtrip = loaded.params == a.params && loaded.length_normalization &&
                              Slurp(dir / "a2.json") == Slurp(dir / "a.json");

  WriteEmbeddings(dir / "emb.bin", data.store);
  const EmbeddingStore store2 = LoadEmbeddings(dir / "emb.bin");
  const bool store_roundtrip = store2 == data.store;
  WriteManifest(dir / "m.jsonl", data.records);
  const bool manifest_roundtrip = LoadManifest(dir / "m.jsonl", store2) == data.records;

  const auto [requests, mismatches] = LoopbackSession(a.params, true);
  const bool pass = checkpoints_identical && ckpt_roundtrip && store_roundtrip &&
                    manifest_roundtrip && requests >= 100 && mismatches == 0;
  return {pass, fmt::format("same-seed checkpoints byte-identical: {}; checkpoint/store/manifest "
                            "round-trips exact: {}/{}/{}; loopback: {} mixed requests, {} "
                            "differing from in-process results",
                            checkpoints_identical, ckpt_roundtrip, store_roundtrip,
                            manifest_roundtrip, requests, mismatches)};
}

}  // namespace
}  // namespace reward_forge

int main() {
  using reward_forge::Outcome;
  spdlog::set_level(spdlog::level::warn);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"gradient suite", reward_forge::GradientSuite},
      {"loss fixed points", reward_forge::LossFixedPoints},
      {"synthetic recovery", reward_forge::SyntheticRecovery},
      {"metric oracle", reward_forge::MetricOracle},
      {"regularization mechanism", reward_forge::Regularization},
      {"ensemble fixture", reward_forge::EnsembleFixture},
      {"hybrid reward", reward_forge::HybridRewardCriterion},
      {"determinism and formats", reward_forge::DeterminismAndFormats},
  };
  int failures = 0;
  for (const auto& [name, run] : criteria) {
    Outcome outcome;
    try {
      outcome = run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  %s: %s\n", outcome.pass ? "PASS" : "FAIL", name, outcome.detail.c_str());
    std::fflush(stdout);
    failures += outcome.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
