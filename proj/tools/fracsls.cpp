// Command-line front end: simulation, identification, simulated HiL sessions,
// aggregation, validation and the HTTP service.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "fracsls/bcm.hpp"
#include "fracsls/hil_bo.hpp"
#include "fracsls/oracle.hpp"
#include "fracsls/service.hpp"
#include "fracsls/store.hpp"
#include "fracsls/sysid.hpp"
#include "fracsls/validation.hpp"

namespace fs = std::filesystem;
using namespace fracsls;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string config_path;
  std::string out = ".";

  StudyConfig config() const {
    if (config_path.empty()) return {};
    return study_config_from_json(json::parse(read_file(config_path)));
  }
};

ModelParams params_from(const std::vector<double>& v) {
  if (v.empty()) return kIdentifiedParams;
  if (v.size() != 4) throw InvalidArgument("--params takes k0 k1 b1 alpha");
  ModelParams p{v[0], v[1], v[2], v[3]};
  validate(p);
  return p;
}

void print(const json& j) { std::cout << j.dump(2) << "\n"; }

OracleConfig oracle_from(const std::string& spec, const StudyConfig& cfg, std::uint64_t seed) {
  OracleConfig o = cfg.oracle;
  if (spec != "default") o = json::parse(read_file(spec)).get<OracleConfig>();
  if (spec == "default") o.seed = seed;
  return o;
}

std::vector<Label> read_transcript(const std::string& path) {
  std::vector<Label> out;
  std::istringstream in(read_file(path));
  for (std::string tok; in >> tok;) out.push_back(label_from_string(tok));
  return out;
}

struct LoadedAggregate {
  json bundle;
  std::vector<Session> sessions;
};

LoadedAggregate load_aggregate_bundle(const std::string& path) {
  LoadedAggregate a;
  a.bundle = json::parse(read_file(path));
  if (a.bundle.contains("session_files")) {
    for (const auto& f : a.bundle.at("session_files")) a.sessions.push_back(Session::from_json(json::parse(read_file(f.get<std::string>()))));
  } else {
    // written by the service: ids relative to the store holding the bundle
    const StudyStore store(fs::path(path).parent_path().parent_path());
    for (const auto& id : a.bundle.at("session_ids")) a.sessions.push_back(store.load_session(id.get<std::string>()));
  }
  return a;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fractional-order SLS toolkit: simulation, identification and perceptual optimization"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--config", g.config_path, "JSON with search_space / gp / acquisition / oracle overrides");
  app.add_option("--out", g.out, "Output directory")->capture_default_str();

  // coeffs
  auto* coeffs = app.add_subcommand("coeffs", "Print Grunwald-Letnikov coefficients as CSV");
  double c_alpha = 0.5;
  long c_window = kDefaultWindow;
  coeffs->add_option("--alpha", c_alpha)->required();
  coeffs->add_option("--window", c_window)->capture_default_str();
  coeffs->callback([&] {
    const auto c = gl_coeffs(c_alpha, c_window);
    std::cout << "i,c\n";
    for (std::size_t i = 0; i < c.size(); ++i) std::cout << i << ',' << format_double(c[i]) << '\n';
  });

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Simulate stress relaxation and creep with recovery to CSV");
  std::vector<double> s_params;
  std::string s_test = "both";
  double s_step = kRelaxationStep, s_T = kDefaultSampleTime;
  std::size_t s_window = kDefaultWindow;
  simulate->add_option("--params", s_params, "k0 k1 b1 alpha (default: identified set)")->expected(4);
  simulate->add_option("--test", s_test)->check(CLI::IsMember({"relaxation", "creep", "both"}))->capture_default_str();
  simulate->add_option("--step", s_step, "Relaxation step (mm)")->capture_default_str();
  simulate->add_option("--window", s_window)->capture_default_str();
  simulate->add_option("--sample-time", s_T)->capture_default_str();
  simulate->callback([&] {
    const auto f = build_filter(params_from(s_params), s_T, s_window);
    if (s_test != "creep") {
      const auto path = fs::path(g.out) / "relaxation.csv";
      write_file_atomic(path, to_csv(simulate_relaxation(f, s_step, kRelaxationDuration)));
      std::cout << path.string() << "\n";
    }
    if (s_test != "relaxation") {
      const auto path = fs::path(g.out) / "creep.csv";
      write_file_atomic(path, to_csv(simulate_creep(f, creep_recovery_profile(s_T))));
      std::cout << path.string() << "\n";
    }
  });

  // fit
  auto* fit = app.add_subcommand("fit", "Identify model parameters from relaxation and/or creep CSV data");
  std::string f_relax, f_creep, f_force;
  std::vector<double> f_synthetic;
  double f_step = kRelaxationStep, f_noise = 0.0;
  std::size_t f_window = kDefaultWindow;
  fit->add_option("--relaxation", f_relax, "Relaxation force CSV (t,value)");
  fit->add_option("--creep", f_creep, "Creep displacement CSV (t,value)");
  fit->add_option("--force", f_force, "Force profile CSV for the creep data (default: 3 N / 0.5 N)");
  fit->add_option("--step", f_step, "Relaxation step (mm)")->capture_default_str();
  fit->add_option("--window", f_window)->capture_default_str();
  fit->add_option("--synthetic", f_synthetic, "Fit synthetic data generated from k0 k1 b1 alpha")->expected(4);
  fit->add_option("--noise", f_noise, "Relative Gaussian noise on synthetic data")->capture_default_str();
  fit->callback([&] {
    IdentificationProblem prob;
    if (!f_synthetic.empty()) {
      prob = synthetic_problem(params_from(f_synthetic), f_window, f_window);
      if (f_noise > 0.0) add_relative_noise(prob, f_noise, g.seed);
    } else {
      prob.window = f_window;
      if (!f_relax.empty()) {
        const auto s = time_series_from_csv(read_file(f_relax), SignalRole::force);
        prob.sample_time = s.sample_time;
        prob.relaxation = RelaxationRecord{s, f_step};
      }
      if (!f_creep.empty()) {
        const auto x = time_series_from_csv(read_file(f_creep), SignalRole::displacement);
        prob.sample_time = x.sample_time;
        auto force = f_force.empty() ? creep_recovery_profile(x.sample_time)
                                     : time_series_from_csv(read_file(f_force), SignalRole::force);
        if (force.size() != x.size()) throw InvalidArgument("force profile and creep data differ in length");
        prob.creep = CreepRecord{x, force};
      }
    }
    const auto r = fit_params(prob, g.seed);
    const auto report = fit_report(r, prob, g.seed);
    write_file_atomic(fs::path(g.out) / "fit.json", report.dump(2) + "\n");
    print(report);
  });

  // passivity
  auto* passivity = app.add_subcommand("passivity", "Sampled-data passivity margin of a parameter set");
  std::vector<double> p_params;
  PassivityConfig p_cfg;
  passivity->add_option("--params", p_params, "k0 k1 b1 alpha (default: identified set)")->expected(4);
  passivity->add_option("--damping", p_cfg.device_damping, "Device damping b (N*s/mm)")->capture_default_str();
  passivity->add_option("--grid", p_cfg.freq_grid_points)->capture_default_str();
  passivity->add_option("--sample-time", p_cfg.sample_time)->capture_default_str();
  passivity->callback([&] {
    const auto p = params_from(p_params);
    const double m = passivity_margin(p, p_cfg);
    print(json{{"params", p}, {"config", p_cfg}, {"margin", m}, {"passive", m >= 0.0}});
  });

  // hil
  auto* hil = app.add_subcommand("hil", "Run simulated human-in-the-loop sessions");
  std::string h_oracle = "default", h_transcript, h_id;
  std::size_t h_trials = 25, h_population = 0;
  hil->add_option("--oracle", h_oracle, "Oracle JSON path or 'default'")->capture_default_str();
  hil->add_option("--trials", h_trials)->capture_default_str();
  hil->add_option("--transcript", h_transcript, "Replay labels from a whitespace-separated file");
  hil->add_option("--id", h_id, "Session id (default: session-<seed>)");
  hil->add_option("--population", h_population, "Run this many jittered oracles (ids population-<seed>-<i>)");
  hil->callback([&] {
    const auto cfg = g.config();
    auto acq = cfg.acquisition;
    acq.n_total = h_trials;
    const StudyStore store(g.out);
    auto persist = [&](const Session& s) { store.save_session(s); };
    if (h_population > 0) {
      const auto members = jittered_population(h_population, g.seed, oracle_from(h_oracle, cfg, g.seed));
      json summary = json::array();
      for (std::size_t i = 0; i < members.size(); ++i) {
        const Oracle oracle(members[i]);
        const auto id = "population-" + std::to_string(g.seed) + "-" + std::to_string(i);
        const auto r = run_session(cfg.search_space, cfg.gp, acq, oracle.feedback(), g.seed * 1000 + i, persist, id);
        summary.push_back(json{{"id", id}, {"x_max", best_json(r.x_max)}, {"file", store.session_path(id).string()}});
      }
      print(summary);
      return;
    }
    FeedbackSource source;
    std::optional<Oracle> oracle;
    if (!h_transcript.empty()) {
      source = transcript_oracle(read_transcript(h_transcript));
    } else {
      oracle.emplace(oracle_from(h_oracle, cfg, g.seed));
      source = oracle->feedback();
    }
    const auto r = run_session(cfg.search_space, cfg.gp, acq, source, g.seed, persist, h_id);
    print(json{{"id", r.session.id()},
               {"file", store.session_path(r.session.id()).string()},
               {"x_max", best_json(r.x_max)},
               {"labels", [&] {
                  json l = json::array();
                  for (auto x : transcript(r.session)) l.push_back(to_string(x));
                  return l;
                }()}});
  });

  // aggregate
  auto* aggregate = app.add_subcommand("aggregate", "Combine session posteriors and select best/mid/worst");
  std::vector<std::string> a_sessions;
  std::size_t a_grid = 64;
  std::string a_id = "aggregate";
  aggregate->add_option("--sessions", a_sessions, "Session JSON files")->required();
  aggregate->add_option("--grid", a_grid, "Grid points per dimension")->capture_default_str();
  aggregate->add_option("--id", a_id)->capture_default_str();
  aggregate->callback([&] {
    std::vector<Session> sessions;
    std::vector<std::string> files;
    for (const auto& f : a_sessions) {
      sessions.push_back(Session::from_json(json::parse(read_file(f))));
      files.push_back(fs::absolute(f).string());
    }
    const auto model = aggregate_from_sessions(sessions);
    const auto optima = select_optima(model, a_grid);
    const json bundle{{"id", a_id},
                      {"session_files", files},
                      {"search_space", model.space()},
                      {"gp", model.gp_config()},
                      {"grid_density", a_grid},
                      {"optima", to_json_value(optima)},
                      {"precision_guard_count", model.precision_guard_count()}};
    const StudyStore store(g.out);
    store.save_aggregate(a_id, bundle);
    print(json{{"file", store.aggregate_path(a_id).string()}, {"optima", bundle.at("optima")}});
  });

  // slices
  auto* slices = app.add_subcommand("slices", "Export aggregate posterior slices at fixed alpha levels");
  std::string sl_bundle;
  std::vector<double> sl_alpha{0.05, kIdentifiedParams.alpha, 0.5};
  std::size_t sl_res = 32;
  slices->add_option("--aggregate", sl_bundle, "Aggregate bundle JSON")->required();
  slices->add_option("--alpha", sl_alpha, "Alpha levels")->capture_default_str();
  slices->add_option("--res", sl_res, "Grid resolution")->capture_default_str();
  slices->callback([&] {
    const auto a = load_aggregate_bundle(sl_bundle);
    const auto model = aggregate_from_sessions(a.sessions);
    for (const auto& grid : export_slices(model, sl_alpha, sl_res)) {
      char name[64];
      std::snprintf(name, sizeof name, "slice_alpha_%.4f.csv", grid.alpha);
      const auto path = fs::path(g.out) / name;
      write_file_atomic(path, to_csv(grid));
      std::cout << path.string() << "\n";
    }
  });

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Simulated validation of a best/mid/worst triple");
  std::string v_bundle;
  std::size_t v_participants = 24, v_trials = 12;
  double v_noise = 0.01;
  validate_cmd->add_option("--aggregate", v_bundle, "Aggregate bundle JSON holding the optima")->required();
  validate_cmd->add_option("--participants", v_participants)->capture_default_str();
  validate_cmd->add_option("--trials", v_trials)->capture_default_str();
  validate_cmd->add_option("--noise", v_noise, "Oracle noise of the simulated participants")->capture_default_str();
  validate_cmd->callback([&] {
    const auto optima = optima_from_json(json::parse(read_file(v_bundle)).at("optima"));
    auto base = g.config().oracle;
    base.noise = v_noise;
    std::vector<OracleConfig> participants;
    std::mt19937_64 rng(g.seed);
    for (std::size_t i = 0; i < v_participants; ++i) {
      auto c = base;
      c.seed = rng();
      participants.push_back(c);
    }
    const auto report = run_validation(optima, participants, v_trials);
    const auto j = to_json_value(report);
    write_file_atomic(fs::path(g.out) / "validation.json", j.dump(2) + "\n");
    print(json{{"classification", j.at("classification")},
               {"ordering", j.at("ordering")},
               {"classification_diagonal_fraction", j.at("classification_diagonal_fraction")},
               {"correct_order_fraction", j.at("correct_order_fraction")}});
  });

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP session service");
  std::string sv_host = "127.0.0.1";
  int sv_port = 8080;
  std::size_t sv_grid = 64;
  serve->add_option("--host", sv_host)->capture_default_str();
  serve->add_option("--port", sv_port)->capture_default_str();
  serve->add_option("--grid", sv_grid, "Grid points per dimension for aggregates")->capture_default_str();
  serve->callback([&] {
    StudyService service(StudyStore(g.out), sv_grid);
    httplib::Server server;
    install_routes(server, service);
    std::cerr << "listening on http://" << sv_host << ':' << sv_port << " (store " << fs::absolute(g.out).string() << ")\n";
    if (!server.listen(sv_host, sv_port)) throw Error("cannot listen on " + sv_host + ":" + std::to_string(sv_port));
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
