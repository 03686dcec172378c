#pragma once

// Human-in-the-loop Bayesian optimization: space-filling trials, then UCB
// proposals over a fixed feasible candidate set, refitting the ordinal GP after
// every label.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "fracsls/gp_ordinal.hpp"
#include "fracsls/search_space.hpp"
#include "fracsls/sysid.hpp"

namespace fracsls {

struct AcquisitionConfig {
  double lambda = 0.7;
  std::size_t n_space_filling = 5;
  std::size_t n_total = 25;
  std::size_t candidate_count = 4096;
  std::uint64_t candidate_seed = 0x5EED;

  bool operator==(const AcquisitionConfig&) const = default;
};

inline void validate(const AcquisitionConfig& a) {
  if (!(a.lambda >= 0.0)) throw InvalidArgument("lambda must be >= 0");
  if (a.n_total == 0) throw InvalidArgument("n_total must be >= 1");
  if (a.candidate_count == 0) throw InvalidArgument("candidate_count must be >= 1");
}

inline double ucb_score(double mean, double std_dev, double lambda) {
  if (!(std_dev >= 0.0)) throw InvalidArgument("std must be >= 0");
  return mean + lambda * std_dev;
}

/// Feasibility checker plus the feasible candidate set for one
/// (search space, candidate count, candidate seed). Shared between sessions.
struct CandidatePool {
  std::shared_ptr<const FeasibilityChecker> checker;
  std::vector<Point> points;
};

inline std::shared_ptr<const CandidatePool> candidate_pool(const SearchSpace& space,
                                                           const AcquisitionConfig& acq) {
  static std::mutex mu;
  static std::map<std::string, std::shared_ptr<const CandidatePool>> cache;
  const std::string key = json(space).dump() + '|' + std::to_string(acq.candidate_count) + '|' +
                          std::to_string(acq.candidate_seed);
  std::lock_guard lock(mu);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  auto checker = std::make_shared<const FeasibilityChecker>(space);
  auto pool = std::make_shared<CandidatePool>();
  pool->points = feasible_candidates(*checker, acq.candidate_count, acq.candidate_seed);
  pool->checker = std::move(checker);
  cache.emplace(key, pool);
  return pool;
}

struct ScoredPoint {
  Point x;
  double score = 0.0;
};

/// argmax of `score` over the points; ties go to the lexicographically smallest.
template <class Score>
ScoredPoint argmax_points(const std::vector<Point>& a, const std::vector<Point>& b, Score&& score) {
  std::optional<ScoredPoint> best;
  auto visit = [&](const Point& x) {
    const double s = score(x);
    if (!best || s > best->score || (s == best->score && lex_less(x, best->x))) best = ScoredPoint{x, s};
  };
  for (const auto& x : a) visit(x);
  for (const auto& x : b) visit(x);
  if (!best) throw Error("empty feasible set");
  return *best;
}

struct Trial {
  std::size_t index = 0;
  Point x_norm;
  ModelParams params;
  std::optional<Label> label;
  double ucb_at_proposal = 0.0;
};

enum class SessionStatus { proposing, awaiting_feedback, complete };

inline std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::proposing: return "proposing";
    case SessionStatus::awaiting_feedback: return "awaiting_feedback";
    case SessionStatus::complete: return "complete";
  }
  return "?";
}

inline SessionStatus session_status_from_string(const std::string& s) {
  if (s == "proposing") return SessionStatus::proposing;
  if (s == "awaiting_feedback") return SessionStatus::awaiting_feedback;
  if (s == "complete") return SessionStatus::complete;
  throw InvalidArgument("unknown session status '" + s + "'");
}

struct BestEstimate {
  Point x_norm;
  ModelParams params;
  double mean = 0.0;
};

/// One participant's optimization run. A value type: copying a session copies
/// its whole state. Every transition is a deterministic function of
/// (configuration, seed, labels so far).
class Session {
 public:
  Session(std::string id, SearchSpace space, GPConfig gp, AcquisitionConfig acq, std::uint64_t seed)
      : id_(std::move(id)), space_(std::move(space)), gp_(gp), acq_(acq), seed_(seed) {
    validate(space_);
    validate(gp_);
    validate(acq_);
    pool_ = candidate_pool(space_, acq_);
  }

  const std::string& id() const { return id_; }
  std::uint64_t seed() const { return seed_; }
  const SearchSpace& space() const { return space_; }
  const GPConfig& gp_config() const { return gp_; }
  const AcquisitionConfig& acquisition() const { return acq_; }
  const std::vector<Trial>& trials() const { return trials_; }
  SessionStatus status() const { return status_; }
  const CandidatePool& pool() const { return *pool_; }

  std::size_t labeled_count() const {
    return trials_.empty() || trials_.back().label ? trials_.size() : trials_.size() - 1;
  }

  const Trial* pending() const {
    return status_ == SessionStatus::awaiting_feedback ? &trials_.back() : nullptr;
  }

  OrdinalDataset dataset(std::size_t max_trials = SIZE_MAX) const {
    OrdinalDataset d;
    for (const auto& t : trials_) {
      if (d.size() >= max_trials) break;
      if (t.label) d.add(t.x_norm, *t.label);
    }
    return d;
  }

  GPPosterior posterior(std::size_t max_trials = SIZE_MAX) const {
    return laplace_fit(dataset(max_trials), gp_);
  }

  /// Proposes the next trial, or returns the pending one unchanged.
  const Trial& propose() {
    if (status_ == SessionStatus::awaiting_feedback) return trials_.back();
    if (status_ == SessionStatus::complete) throw InvalidArgument("session is complete");
    const std::size_t i = trials_.size();
    const auto post = posterior();
    Trial t;
    t.index = i;
    if (i < space_filling_count()) {
      if (lhs_.empty())
        lhs_ = lhs_init(space_filling_count(), 3, seed_, pool_->checker->predicate());
      t.x_norm = lhs_[i];
      const auto pr = post.predict(t.x_norm);
      t.ucb_at_proposal = ucb_score(pr.mean, std::sqrt(pr.variance), acq_.lambda);
    } else {
      auto best = argmax_points(pool_->points, sampled_points(), [&](const Point& x) {
        const auto pr = post.predict(x);
        return ucb_score(pr.mean, std::sqrt(pr.variance), acq_.lambda);
      });
      t.x_norm = std::move(best.x);
      t.ucb_at_proposal = best.score;
    }
    t.params = space_.to_physical(t.x_norm);
    trials_.push_back(std::move(t));
    status_ = SessionStatus::awaiting_feedback;
    return trials_.back();
  }

  /// Records the label for `trial_index`. Re-submitting an already recorded label
  /// is a no-op; a conflicting label or an unknown index is rejected.
  void submit(std::size_t trial_index, Label label) {
    if (trial_index >= trials_.size()) throw InvalidArgument("no trial with that index");
    auto& t = trials_[trial_index];
    if (t.label) {
      if (*t.label != label) throw InvalidArgument("trial already has a different label");
      return;
    }
    t.label = label;
    status_ = trials_.size() >= acq_.n_total ? SessionStatus::complete : SessionStatus::proposing;
  }

  /// Feasible point with the largest posterior mean over the candidates and the
  /// sampled points, using the first `max_trials` labels.
  BestEstimate best(std::size_t max_trials = SIZE_MAX) const {
    const auto post = posterior(max_trials);
    auto top = argmax_points(pool_->points, sampled_points(max_trials),
                             [&](const Point& x) { return post.predict(x).mean; });
    return {top.x, space_.to_physical(top.x), top.score};
  }

  json to_json() const {
    json trials = json::array();
    for (const auto& t : trials_)
      trials.push_back(json{{"index", t.index},
                            {"x_norm", t.x_norm},
                            {"params_physical", t.params},
                            {"label", t.label ? json(to_string(*t.label)) : json(nullptr)},
                            {"ucb_at_proposal", t.ucb_at_proposal}});
    return json{{"id", id_},
                {"seed", seed_},
                {"config", config_json()},
                {"trials", trials},
                {"status", to_string(status_)}};
  }

  json config_json() const {
    return json{{"search_space", space_},
                {"gp", gp_},
                {"acquisition",
                 {{"lambda", acq_.lambda},
                  {"n_space_filling", acq_.n_space_filling},
                  {"n_total", acq_.n_total},
                  {"candidate_count", acq_.candidate_count},
                  {"candidate_seed", acq_.candidate_seed}}}};
  }

  /// Restores a session from its JSON. Trials are taken as recorded; the
  /// configuration and seed reproduce every later proposal.
  static Session from_json(const json& j) {
    const auto& c = j.at("config");
    Session s(j.at("id").get<std::string>(), c.at("search_space").get<SearchSpace>(),
              c.at("gp").get<GPConfig>(), acquisition_from_json(c.at("acquisition")),
              j.at("seed").get<std::uint64_t>());
    for (const auto& tj : j.at("trials")) {
      Trial t;
      tj.at("index").get_to(t.index);
      tj.at("x_norm").get_to(t.x_norm);
      tj.at("params_physical").get_to(t.params);
      if (!tj.at("label").is_null()) t.label = label_from_string(tj.at("label").get<std::string>());
      tj.at("ucb_at_proposal").get_to(t.ucb_at_proposal);
      if (t.index != s.trials_.size()) throw InvalidArgument("session trials out of order");
      s.trials_.push_back(std::move(t));
    }
    s.status_ = session_status_from_string(j.at("status").get<std::string>());
    return s;
  }

  static AcquisitionConfig acquisition_from_json(const json& j) {
    AcquisitionConfig a;
    if (j.contains("lambda")) j.at("lambda").get_to(a.lambda);
    if (j.contains("n_space_filling")) j.at("n_space_filling").get_to(a.n_space_filling);
    if (j.contains("n_total")) j.at("n_total").get_to(a.n_total);
    if (j.contains("candidate_count")) j.at("candidate_count").get_to(a.candidate_count);
    if (j.contains("candidate_seed")) j.at("candidate_seed").get_to(a.candidate_seed);
    validate(a);
    return a;
  }

 private:
  std::size_t space_filling_count() const { return std::min(acq_.n_space_filling, acq_.n_total); }

  std::vector<Point> sampled_points(std::size_t max_trials = SIZE_MAX) const {
    std::vector<Point> out;
    for (const auto& t : trials_) {
      if (out.size() >= max_trials) break;
      out.push_back(t.x_norm);
    }
    return out;
  }

  std::string id_;
  SearchSpace space_;
  GPConfig gp_;
  AcquisitionConfig acq_;
  std::uint64_t seed_;
  std::shared_ptr<const CandidatePool> pool_;
  std::vector<Point> lhs_;
  std::vector<Trial> trials_;
  SessionStatus status_ = SessionStatus::proposing;
};

/// Anything that turns a candidate into a label. The second argument is the
/// zero-based trial index.
using FeedbackSource = std::function<Label(const ModelParams&, std::size_t)>;

/// Replays a recorded sequence of labels.
inline FeedbackSource transcript_oracle(std::vector<Label> labels) {
  return [labels = std::move(labels)](const ModelParams&, std::size_t i) {
    if (i >= labels.size()) throw Error("transcript exhausted at trial " + std::to_string(i));
    return labels[i];
  };
}

inline std::vector<Label> transcript(const Session& s) {
  std::vector<Label> out;
  for (const auto& t : s.trials())
    if (t.label) out.push_back(*t.label);
  return out;
}

struct SessionResult {
  Session session;
  GPPosterior posterior;
  BestEstimate x_max;
};

/// Runs a full session against `oracle`. `persist` (if given) sees the session
/// after every proposal and every label, and once more if the oracle throws.
inline SessionResult run_session(const SearchSpace& space, const GPConfig& gp,
                                 const AcquisitionConfig& acq, const FeedbackSource& oracle,
                                 std::uint64_t seed,
                                 const std::function<void(const Session&)>& persist = {},
                                 std::string id = {}) {
  if (id.empty()) id = "session-" + std::to_string(seed);
  Session s(std::move(id), space, gp, acq, seed);
  while (s.status() != SessionStatus::complete) {
    const Trial& t = s.propose();
    if (persist) persist(s);
    Label label;
    try {
      label = oracle(t.params, t.index);
    } catch (...) {
      if (persist) persist(s);
      throw;
    }
    s.submit(t.index, label);
    if (persist) persist(s);
  }
  auto post = s.posterior();
  auto best = s.best();
  return {std::move(s), std::move(post), std::move(best)};
}

/// Parameter-space NRMSE of every trial's point against a reference set (the
/// convergence statistic plotted per trial).
inline std::vector<double> convergence_trace(const Session& s, const ModelParams& reference) {
  std::vector<double> out;
  for (const auto& t : s.trials()) out.push_back(param_nrmse(t.params, reference));
  return out;
}

}  // namespace fracsls
