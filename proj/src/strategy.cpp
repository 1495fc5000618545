#include "contlearn/strategy.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "contlearn/metrics.hpp"
#include "contlearn/rng.hpp"
#include "contlearn/textvec.hpp"

namespace contlearn {

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::FT: return "FT";
    case StrategyKind::EMR: return "EMR";
    case StrategyKind::EWC: return "EWC";
    case StrategyKind::REPEAT: return "REPEAT";
    case StrategyKind::UPPER: return "UPPER";
  }
  return "?";
}

StrategyKind parse_strategy(std::string_view name) {
  std::string upper(name);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (StrategyKind k : kAllStrategies)
    if (to_string(k) == upper) return k;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "' (expected ft, emr, ewc, repeat, upper)");
}

std::int64_t Budget::resolve(std::int64_t cumulative_train) const {
  if (!fractional) return absolute;
  // The epsilon keeps e.g. 0.29 * 100 from flooring to 28.
  return static_cast<std::int64_t>(std::floor(fraction * static_cast<double>(cumulative_train) + 1e-9));
}

std::string Budget::describe() const {
  if (!fractional) return std::to_string(absolute);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", fraction);
  return buf;
}

void StrategyConfig::validate() const {
  if (epochs < 1) throw std::invalid_argument("epochs must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  if (budget.fractional && !(budget.fraction > 0.0 && budget.fraction <= 1.0))
    throw std::invalid_argument("fractional budget must lie in (0, 1]");
  if (!budget.fractional && budget.absolute < 0) throw std::invalid_argument("absolute budget must be >= 0");
  if (k < 1 || mu < 1) throw std::invalid_argument("K and mu must be >= 1");
  if (!(lambda_base >= 0.0) || !std::isfinite(lambda_base)) throw std::invalid_argument("lambda_base must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  Architecture{feature_dim, hidden_dim, 1}.validate();
}

RunState init_run(const StrategyConfig& cfg, int class_count) {
  cfg.validate();
  if (class_count < 1) throw std::invalid_argument("class_count must be positive");
  RunState state;
  state.class_count = class_count;
  state.model = init_model(Architecture{cfg.feature_dim, cfg.hidden_dim, class_count}, cfg.seed);
  state.optimizer = OptimizerState<double>(state.model.params.size());
  state.optimizer.learning_rate = cfg.learning_rate;
  state.row_active.assign(static_cast<std::size_t>(cfg.feature_dim), 0);
  return state;
}

EvalRecord evaluate(const Model& model, std::span<const Sample> samples, int class_count) {
  std::vector<int> preds, golds;
  preds.reserve(samples.size());
  golds.reserve(samples.size());
  for (const auto& s : samples) {
    const Eigen::VectorXd p = forward(model, hashed_features(s.text, model.arch.feature_dim));
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < p.size(); ++c)
      if (p[c] > p[best]) best = c;
    preds.push_back(static_cast<int>(best));
    golds.push_back(s.label);
  }
  EvalRecord r;
  r.accuracy = accuracy(preds, golds);
  const auto prf = class_count == 2 ? prf1(preds, golds, 1) : macro_prf1(preds, golds, class_count);
  r.precision = prf.precision;
  r.recall = prf.recall;
  r.f1 = prf.f1;
  return r;
}

namespace detail {

std::vector<double> train_epochs(RunState& state, std::span<const LabeledFeatures<double>> mixture, int epochs,
                                 int batch_size, std::uint64_t shuffle_seed, const AnchorState* anchor,
                                 double lambda) {
  Model& model = state.model;
  auto& opt = state.optimizer;
  const auto& arch = model.arch;
  const Eigen::Index H = arch.hidden_dim;
  const Eigen::Index tail_begin = arch.b1_offset();
  const Eigen::Index n_params = model.params.size();
  const bool penalized = anchor != nullptr && lambda > 0.0;
  if (penalized) anchor->validate();
  if (opt.m.size() != n_params) throw std::logic_error("optimizer state does not match the model");

  Eigen::VectorXd grad = Eigen::VectorXd::Zero(n_params);
  std::vector<std::size_t> order(mixture.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(shuffle_seed);
  std::vector<char> in_batch(static_cast<std::size_t>(arch.feature_dim), 0);
  std::vector<Eigen::Index> touched;
  std::vector<double> epoch_losses;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(batch_size));
      touched.clear();
      double weight_total = 0.0;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& item = mixture[order[b]];
        loss_sum += accumulate_gradient(model, item.features, item.label, 1.0, grad);
        weight_total += 1.0;
        for (SparseFeatures<double>::InnerIterator it(item.features); it; ++it) {
          auto& mark = in_batch[static_cast<std::size_t>(it.index())];
          if (!mark) {
            mark = 1;
            touched.push_back(it.index());
          }
        }
      }
      for (Eigen::Index row : touched) {
        grad.segment(row * H, H) /= weight_total;
        if (!state.row_active[static_cast<std::size_t>(row)]) {
          state.row_active[static_cast<std::size_t>(row)] = 1;
          state.active_rows.push_back(row);
        }
      }
      grad.tail(n_params - tail_begin) /= weight_total;

      auto visit = [&](auto&& fn) {
        for (Eigen::Index row : state.active_rows)
          for (Eigen::Index i = row * H; i < (row + 1) * H; ++i) fn(i);
        for (Eigen::Index i = tail_begin; i < n_params; ++i) fn(i);
      };
      if (penalized) {
        const double scale = 2.0 * lambda;
        visit([&](Eigen::Index i) {
          grad[i] += scale * anchor->fisher[i] * (model.params[i] - anchor->params[i]);
        });
      }
      bool finite = true;
      visit([&](Eigen::Index i) { finite = finite && std::isfinite(grad[i]); });
      if (!finite) throw std::runtime_error("training diverged: non-finite gradient");
      const auto k = begin_adam_step(opt);
      visit([&](Eigen::Index i) { adam_update(model.params[i], opt.m[i], opt.v[i], grad[i], k); });

      for (Eigen::Index row : touched) {
        grad.segment(row * H, H).setZero();
        in_batch[static_cast<std::size_t>(row)] = 0;
      }
      // Penalty terms may have written into untouched active rows.
      if (penalized)
        for (Eigen::Index row : state.active_rows) grad.segment(row * H, H).setZero();
      grad.tail(n_params - tail_begin).setZero();
    }
    epoch_losses.push_back(mixture.empty() ? 0.0 : loss_sum / static_cast<double>(mixture.size()));
  }
  return epoch_losses;
}

}  // namespace detail

namespace {

void append_features(std::vector<LabeledFeatures<double>>& out, std::span<const Sample> samples, Eigen::Index dim) {
  for (const auto& s : samples) out.push_back({hashed_features(s.text, dim), s.label});
}

std::vector<TokenList> token_lists(std::span<const Sample> samples) {
  std::vector<TokenList> docs;
  docs.reserve(samples.size());
  for (const auto& s : samples) docs.push_back(tokenize(s.text));
  return docs;
}

double repeat_lambda(const StrategyConfig& cfg, std::span<const Sample> current, const ExemplarStore& store) {
  if (store.empty() || current.empty()) return 0.0;
  const auto exemplar_samples = store.samples();
  auto current_docs = token_lists(current);
  auto exemplar_docs = token_lists(exemplar_samples);
  std::vector<TokenList> all = current_docs;
  all.insert(all.end(), exemplar_docs.begin(), exemplar_docs.end());
  const TfidfModel tfidf = fit_tfidf(all);
  return adaptive_lambda(LambdaConfig{cfg.lambda_base}, dataset_vector(tfidf, std::span<const TokenList>(current_docs)),
                         dataset_vector(tfidf, std::span<const TokenList>(exemplar_docs)));
}

std::vector<Sample> fisher_subsample(std::span<const Sample> train, std::int64_t budget, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(std::clamp<std::int64_t>(budget, 0, static_cast<std::int64_t>(train.size())));
  std::vector<std::pair<std::uint64_t, std::size_t>> keyed;
  for (std::size_t i = 0; i < train.size(); ++i) keyed.emplace_back(priority_key(seed, train[i].id), i);
  std::sort(keyed.begin(), keyed.end());
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(train[keyed[i].second]);
  return out;
}

AnchorState make_anchor(const Model& model, std::span<const Sample> samples) {
  AnchorState anchor;
  anchor.params = model.params;
  anchor.fisher = samples.empty() ? Eigen::VectorXd::Zero(model.params.size()) : estimate_fisher(model, samples);
  return anchor;
}

}  // namespace

void run_step(const StrategyConfig& cfg, RunState& state, const DatasetPartition& partition, const PastTrainData* past) {
  const int t = state.step + 1;
  if (partition.index != t)
    throw std::invalid_argument("out-of-order partition: expected index " + std::to_string(t) + ", got " +
                                std::to_string(partition.index));
  if (partition.train.empty()) throw std::invalid_argument("partition " + std::to_string(t) + " has no training data");
  const Eigen::Index dim = state.model.arch.feature_dim;

  StepTrace trace;
  trace.step = t;
  state.cumulative_train += static_cast<std::int64_t>(partition.train.size());
  const std::int64_t budget = cfg.budget.resolve(state.cumulative_train);
  trace.budget = budget;

  std::vector<LabeledFeatures<double>> mixture;
  const AnchorState* anchor = nullptr;
  double lambda = 0.0;
  switch (cfg.kind) {
    case StrategyKind::FT:
      append_features(mixture, partition.train, dim);
      break;
    case StrategyKind::EMR:
    case StrategyKind::REPEAT: {
      append_features(mixture, partition.train, dim);
      const auto replay = state.store.samples();
      append_features(mixture, replay, dim);
      if (cfg.kind == StrategyKind::REPEAT && state.anchor) {
        lambda = repeat_lambda(cfg, partition.train, state.store);
        anchor = &*state.anchor;
      }
      break;
    }
    case StrategyKind::EWC:
      append_features(mixture, partition.train, dim);
      if (state.anchor) {
        lambda = cfg.lambda_base;
        anchor = &*state.anchor;
      }
      break;
    case StrategyKind::UPPER:
      if (t > 1 && (past == nullptr || past->size() < static_cast<std::size_t>(t - 1)))
        throw std::invalid_argument("UPPER requires the training data of every earlier partition");
      for (int j = 0; j + 1 < t; ++j) append_features(mixture, past->train(static_cast<std::size_t>(j)), dim);
      append_features(mixture, partition.train, dim);
      break;
  }
  trace.lambda = lambda;
  trace.mixture_size = mixture.size();
  trace.epoch_losses = detail::train_epochs(state, mixture, cfg.epochs, cfg.batch_size,
                                            derive_seed(cfg.seed, "train", static_cast<std::uint64_t>(t)), anchor,
                                            lambda);

  switch (cfg.kind) {
    case StrategyKind::EMR: {
      auto fresh = select_random(partition.train, state.model, t, budget, cfg.seed);
      state.store = update_store(state.store, std::move(fresh), t, budget, RemovalOrder::RandomPriority, cfg.seed);
      break;
    }
    case StrategyKind::REPEAT: {
      auto fresh = select_for_partition(partition.train, state.model, t, budget, cfg.k, cfg.mu, cfg.seed,
                                        cfg.loss_filter);
      state.store = update_store(state.store, std::move(fresh), t, budget,
                                 cfg.loss_filter ? RemovalOrder::HighestLoss : RemovalOrder::RandomPriority, cfg.seed);
      const auto stored = state.store.samples();
      state.anchor = make_anchor(state.model, stored);
      break;
    }
    case StrategyKind::EWC: {
      const auto subset =
          fisher_subsample(partition.train, budget, derive_seed(cfg.seed, "fisher", static_cast<std::uint64_t>(t)));
      state.anchor = make_anchor(state.model, subset);
      break;
    }
    default:
      break;
  }
  trace.store_sizes = state.store.sizes();

  state.seen_tests.push_back(partition.test);
  for (int j = 1; j <= t; ++j) {
    EvalRecord r = evaluate(state.model, state.seen_tests[static_cast<std::size_t>(j - 1)], state.class_count);
    r.step = t;
    r.test_partition = j;
    state.history.push_back(r);
  }
  state.trace.push_back(std::move(trace));
  state.step = t;
}

RunState run_stream(const StrategyConfig& cfg, const Stream& stream) {
  if (stream.partitions.empty()) throw std::invalid_argument("run_stream: empty stream");
  RunState state = init_run(cfg, stream.class_count);
  for (std::size_t i = 0; i < stream.partitions.size(); ++i) {
    if (cfg.kind == StrategyKind::UPPER) {
      PastTrainData past(std::span<const DatasetPartition>(stream.partitions.data(), i));
      run_step(cfg, state, stream.partitions[i], &past);
    } else {
      run_step(cfg, state, stream.partitions[i]);
    }
  }
  return state;
}

}  // namespace contlearn
