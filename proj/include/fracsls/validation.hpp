#pragma once

// Simulated validation session: participants compare pairs drawn from the
// best/mid/worst triple, label each rendering and pick the more realistic one.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include "fracsls/bcm.hpp"
#include "fracsls/oracle.hpp"

namespace fracsls {

enum class TripleSet { best = 0, mid = 1, worst = 2 };

inline std::string to_string(TripleSet s) {
  switch (s) {
    case TripleSet::best: return "best";
    case TripleSet::mid: return "mid";
    case TripleSet::worst: return "worst";
  }
  return "?";
}

struct ValidationTrial {
  std::array<TripleSet, 2> shown;
  std::array<Label, 2> labels;
  TripleSet preferred;
};

struct ParticipantLog {
  std::vector<ValidationTrial> trials;
  std::array<TripleSet, 3> ranking;  // most to least preferred
};

using Matrix3 = std::array<std::array<std::size_t, 3>, 3>;

struct ValidationReport {
  // rows: best, mid, worst; columns: close, similar, different
  Matrix3 classification{};
  // rows: aggregate rank (best, mid, worst); columns: participant rank 1..3
  Matrix3 ordering{};
  std::vector<ParticipantLog> participants;

  double classification_diagonal_fraction() const {
    std::size_t diag = 0, total = 0;
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        total += classification[i][j];
        if (i == j) diag += classification[i][j];
      }
    return total ? double(diag) / double(total) : 0.0;
  }

  double correct_order_fraction() const {
    if (participants.empty()) return 0.0;
    std::size_t ok = 0;
    for (const auto& p : participants)
      ok += p.ranking == std::array{TripleSet::best, TripleSet::mid, TripleSet::worst};
    return double(ok) / double(participants.size());
  }
};

/// Column of the classification matrix for a label (close first).
inline std::size_t classification_column(Label l) {
  switch (l) {
    case Label::close: return 0;
    case Label::similar: return 1;
    case Label::different: return 2;
  }
  return 2;
}

/// Balanced schedule: every unordered pair of the triple appears trials/3 times,
/// in a seeded order with seeded left/right placement.
inline std::vector<std::array<TripleSet, 2>> validation_schedule(std::size_t trials, std::uint64_t seed) {
  if (trials == 0 || trials % 3 != 0)
    throw InvalidArgument("trials per participant must be a positive multiple of 3");
  constexpr std::array<std::array<TripleSet, 2>, 3> pairs{{{TripleSet::best, TripleSet::mid},
                                                           {TripleSet::best, TripleSet::worst},
                                                           {TripleSet::mid, TripleSet::worst}}};
  std::vector<std::array<TripleSet, 2>> out;
  for (std::size_t r = 0; r < trials / 3; ++r)
    for (const auto& p : pairs) out.push_back(p);
  std::mt19937_64 rng(seed);
  std::shuffle(out.begin(), out.end(), rng);
  for (auto& p : out)
    if (rng() & 1u) std::swap(p[0], p[1]);
  return out;
}

inline ValidationReport run_validation(const OptimaTriple& optima, const std::vector<OracleConfig>& participants,
                                       std::size_t trials_per_participant = 12) {
  ValidationReport report;
  const std::array<const ModelParams*, 3> sets{&optima.best.params, &optima.mid.params, &optima.worst.params};
  for (const auto& cfg : participants) {
    const Oracle oracle(cfg);
    std::array<double, 3> distance{};
    for (std::size_t s = 0; s < 3; ++s) {
      try {
        distance[s] = oracle.distance(*sets[s]);
      } catch (const DivergenceError&) {
        distance[s] = std::numeric_limits<double>::infinity();
      } catch (const InvalidArgument&) {
        distance[s] = std::numeric_limits<double>::infinity();
      }
    }

    ParticipantLog log;
    std::array<std::size_t, 3> wins{};
    std::array<double, 3> perceived_sum{};
    const auto schedule = validation_schedule(trials_per_participant, cfg.seed);
    for (std::size_t t = 0; t < schedule.size(); ++t) {
      ValidationTrial trial{schedule[t], {}, schedule[t][0]};
      std::array<double, 2> u{};
      for (std::size_t slot = 0; slot < 2; ++slot) {
        const auto s = std::size_t(schedule[t][slot]);
        u[slot] = oracle.perceived(distance[s], 2 * t + slot);
        trial.labels[slot] = oracle.classify(u[slot]);
        perceived_sum[s] += u[slot];
        ++report.classification[s][classification_column(trial.labels[slot])];
      }
      trial.preferred = u[1] < u[0] ? schedule[t][1] : schedule[t][0];
      ++wins[std::size_t(trial.preferred)];
      log.trials.push_back(trial);
    }

    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (wins[a] != wins[b]) return wins[a] > wins[b];
      return perceived_sum[a] < perceived_sum[b];
    });
    for (std::size_t rank = 0; rank < 3; ++rank) {
      log.ranking[rank] = TripleSet(order[rank]);
      ++report.ordering[order[rank]][rank];
    }
    report.participants.push_back(std::move(log));
  }
  return report;
}

inline json to_json_value(const ValidationReport& r) {
  json participants = json::array();
  for (const auto& p : r.participants) {
    json trials = json::array();
    for (const auto& t : p.trials)
      trials.push_back(json{{"shown", {to_string(t.shown[0]), to_string(t.shown[1])}},
                            {"labels", {to_string(t.labels[0]), to_string(t.labels[1])}},
                            {"preferred", to_string(t.preferred)}});
    participants.push_back(json{
        {"ranking", {to_string(p.ranking[0]), to_string(p.ranking[1]), to_string(p.ranking[2])}},
        {"trials", trials}});
  }
  return json{{"classification",
               {{"rows", {"best", "mid", "worst"}},
                {"columns", {"close", "similar", "different"}},
                {"counts", r.classification}}},
              {"ordering",
               {{"rows", {"best", "mid", "worst"}}, {"columns", {"rank1", "rank2", "rank3"}}, {"counts", r.ordering}}},
              {"classification_diagonal_fraction", r.classification_diagonal_fraction()},
              {"correct_order_fraction", r.correct_order_fraction()},
              {"participants", participants}};
}

}  // namespace fracsls
