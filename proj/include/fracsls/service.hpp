#pragma once

// HTTP JSON service for live sessions and aggregates. Each session's mutations
// are serialized by a per-session mutex; every transition is persisted before
// the response is sent.

#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "fracsls/bcm.hpp"
#include "fracsls/hil_bo.hpp"
#include "fracsls/oracle.hpp"
#include "fracsls/store.hpp"

// after Eigen: <resolv.h> defines a _res macro that clashes with Eigen parameter names
#include <httplib.h>

namespace fracsls {

/// Configuration that a session request may override.
struct StudyConfig {
  SearchSpace search_space{};
  GPConfig gp{};
  AcquisitionConfig acquisition{};
  OracleConfig oracle{};
};

inline StudyConfig study_config_from_json(const json& j) {
  StudyConfig c;
  if (j.is_null()) return c;
  if (j.contains("search_space")) j.at("search_space").get_to(c.search_space);
  if (j.contains("gp")) j.at("gp").get_to(c.gp);
  if (j.contains("acquisition")) c.acquisition = Session::acquisition_from_json(j.at("acquisition"));
  if (j.contains("oracle")) j.at("oracle").get_to(c.oracle);
  return c;
}

inline json candidate_json(const Trial& t, bool with_curves = true) {
  json j{{"trial_index", t.index}, {"x_norm", t.x_norm}, {"params", t.params}};
  if (with_curves) {
    try {
      j["response_curves"] = to_json_value(response_curves(t.params));
    } catch (const Error&) {
      j["response_curves"] = nullptr;  // not simulatable
    }
  }
  return j;
}

inline json best_json(const BestEstimate& b) {
  return json{{"x_norm", b.x_norm}, {"params", b.params}, {"mean", b.mean}};
}

/// Builds the committee from stored sessions.
inline AggregateModel aggregate_from_sessions(const std::vector<Session>& sessions) {
  if (sessions.empty()) throw InvalidArgument("aggregate needs at least one session");
  std::vector<GPPosterior> members;
  for (const auto& s : sessions) {
    if (!(s.space() == sessions.front().space()) || !(s.gp_config() == sessions.front().gp_config()))
      throw InvalidArgument("sessions in an aggregate must share search space and GP configuration");
    members.push_back(s.posterior());
  }
  return AggregateModel(std::move(members), sessions.front().space());
}

inline json slices_json(const std::vector<SliceGrid>& slices) {
  json out = json::array();
  for (const auto& g : slices) out.push_back(to_json_value(g));
  return json{{"slices", out}};
}

class StudyService {
 public:
  explicit StudyService(StudyStore store, std::size_t grid_density = 64)
      : store_(std::move(store)), grid_density_(grid_density) {}

  StudyStore& store() { return store_; }

  json create_session(const json& body) {
    const auto cfg = study_config_from_json(body.value("config", json()));
    const std::uint64_t seed = body.value("seed", std::uint64_t{0});
    std::string id = body.value("id", std::string("session-") + std::to_string(seed));
    auto entry = std::make_shared<Entry>(Session(id, cfg.search_space, cfg.gp, cfg.acquisition, seed));
    {
      std::lock_guard lock(mu_);
      if (sessions_.count(id) || store_.has_session(id)) throw Conflict("session '" + id + "' already exists");
      sessions_.emplace(id, entry);
    }
    std::lock_guard lock(entry->mu);
    const Trial& t = entry->session.propose();
    store_.save_session(entry->session);
    return json{{"id", id}, {"status", to_string(entry->session.status())}, {"first_candidate", candidate_json(t)}};
  }

  json get_session(const std::string& id) {
    auto e = entry(id);
    std::lock_guard lock(e->mu);
    json j = e->session.to_json();
    if (const Trial* p = e->session.pending()) j["pending_candidate"] = candidate_json(*p);
    return j;
  }

  /// Records a label and returns the state that follows trial `trial_index`.
  /// Repeating a request returns the same answer.
  json submit_feedback(const std::string& id, const json& body) {
    auto e = entry(id);
    const auto index = body.at("trial_index").get<std::size_t>();
    const auto label = label_from_string(body.at("label").get<std::string>());
    std::lock_guard lock(e->mu);
    auto& s = e->session;
    if (index >= s.trials().size()) throw InvalidArgument("no trial with that index");
    if (s.trials()[index].label && *s.trials()[index].label != label)
      throw Conflict("trial " + std::to_string(index) + " already labelled " + to_string(*s.trials()[index].label));
    s.submit(index, label);
    if (s.status() == SessionStatus::proposing) s.propose();
    store_.save_session(s);
    if (index + 1 < s.trials().size())
      return json{{"status", to_string(s.status())}, {"next_candidate", candidate_json(s.trials()[index + 1])}};
    return json{{"status", to_string(s.status())}, {"x_max", best_json(s.best())}};
  }

  json session_slices(const std::string& id, double alpha, std::size_t resolution) {
    auto e = entry(id);
    std::unique_lock lock(e->mu);
    const Session snapshot = e->session;
    lock.unlock();
    const AggregateModel model({snapshot.posterior()}, snapshot.space());
    return slices_json(export_slices(model, {alpha}, resolution));
  }

  json create_aggregate(const json& body) {
    const auto ids = body.at("session_ids").get<std::vector<std::string>>();
    const std::size_t density = body.value("grid_density", grid_density_);
    std::vector<Session> sessions;
    for (const auto& sid : ids) {
      auto e = entry(sid);
      std::lock_guard lock(e->mu);
      sessions.push_back(e->session);
    }
    const auto model = aggregate_from_sessions(sessions);
    const auto optima = select_optima(model, density);
    std::string id;
    {
      std::lock_guard lock(mu_);
      id = body.value("id", std::string());
      if (id.empty()) {
        do id = "aggregate-" + std::to_string(++aggregate_counter_);
        while (store_.has_aggregate(id));
      } else if (store_.has_aggregate(id)) {
        throw Conflict("aggregate '" + id + "' already exists");
      }
      store_.save_aggregate(id, json{{"id", id},
                                     {"session_ids", ids},
                                     {"search_space", model.space()},
                                     {"gp", model.gp_config()},
                                     {"grid_density", density},
                                     {"optima", to_json_value(optima)},
                                     {"precision_guard_count", model.precision_guard_count()}});
    }
    return json{{"id", id}, {"optima_triple", to_json_value(optima)}};
  }

  json aggregate_slices(const std::string& id, double alpha, std::size_t resolution) {
    const auto bundle = store_.load_aggregate(id);
    std::vector<Session> sessions;
    for (const auto& sid : bundle.at("session_ids").get<std::vector<std::string>>()) {
      auto e = entry(sid);
      std::lock_guard lock(e->mu);
      sessions.push_back(e->session);
    }
    const auto model = aggregate_from_sessions(sessions);
    return slices_json(export_slices(model, {alpha}, resolution));
  }

  json reference_responses() const {
    const OracleConfig ref{};
    return json{{"params", ref.ground_truth}, {"response_curves", to_json_value(response_curves(ref.ground_truth))}};
  }

  class Conflict : public Error {
   public:
    using Error::Error;
  };

 private:
  struct Entry {
    explicit Entry(Session s) : session(std::move(s)) {}
    std::mutex mu;
    Session session;
  };

  std::shared_ptr<Entry> entry(const std::string& id) {
    std::lock_guard lock(mu_);
    if (auto it = sessions_.find(id); it != sessions_.end()) return it->second;
    auto e = std::make_shared<Entry>(store_.load_session(id));
    sessions_.emplace(id, e);
    return e;
  }

  StudyStore store_;
  std::size_t grid_density_;
  std::mutex mu_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
  std::size_t aggregate_counter_ = 0;
};

inline double query_double(const httplib::Request& req, const char* key, double fallback) {
  if (!req.has_param(key)) return fallback;
  try {
    return std::stod(req.get_param_value(key));
  } catch (const std::exception&) {
    throw InvalidArgument(std::string("query parameter '") + key + "' is not a number");
  }
}

inline std::size_t query_resolution(const httplib::Request& req) {
  const double r = query_double(req, "res", 32);
  if (!(r >= 1 && r <= 512) || r != std::floor(r)) throw InvalidArgument("res must be an integer in [1, 512]");
  return std::size_t(r);
}

/// Installs the JSON API routes on `server`.
inline void install_routes(httplib::Server& server, StudyService& service) {
  auto handle = [](auto&& fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      res.set_header("Access-Control-Allow-Origin", "*");
      try {
        res.set_content(fn(req).dump(), "application/json");
      } catch (const NotFound& e) {
        res.status = 404;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const StudyService::Conflict& e) {
        res.status = 409;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const InvalidArgument& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const json::exception& e) {
        res.status = 400;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"error", e.what()}}.dump(), "application/json");
      }
    };
  };
  auto body_of = [](const httplib::Request& req) { return req.body.empty() ? json::object() : json::parse(req.body); };

  server.Post("/sessions", handle([&, body_of](const httplib::Request& req) {
                return service.create_session(body_of(req));
              }));
  server.Get("/sessions/:id", handle([&](const httplib::Request& req) {
               return service.get_session(req.path_params.at("id"));
             }));
  server.Post("/sessions/:id/feedback", handle([&, body_of](const httplib::Request& req) {
                return service.submit_feedback(req.path_params.at("id"), body_of(req));
              }));
  server.Get("/sessions/:id/posterior", handle([&](const httplib::Request& req) {
               return service.session_slices(req.path_params.at("id"),
                                             query_double(req, "alpha", kIdentifiedParams.alpha),
                                             query_resolution(req));
             }));
  server.Post("/aggregates", handle([&, body_of](const httplib::Request& req) {
                return service.create_aggregate(body_of(req));
              }));
  server.Get("/aggregates/:id/slices", handle([&](const httplib::Request& req) {
               return service.aggregate_slices(req.path_params.at("id"),
                                               query_double(req, "alpha", kIdentifiedParams.alpha),
                                               query_resolution(req));
             }));
  server.Get("/reference/responses",
             handle([&](const httplib::Request&) { return service.reference_responses(); }));
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace fracsls
