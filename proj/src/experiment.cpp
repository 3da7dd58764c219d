#include "stein4dvar/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <memory>
#include <ostream>
#include <thread>

namespace stein4dvar {

Formulation parse_formulation(const std::string& text) {
  if (text == "spd") return Formulation::spd;
  if (text == "saddle") return Formulation::saddle;
  throw std::invalid_argument("unknown formulation '" + text + "'");
}

std::string formulation_name(Formulation f) { return f == Formulation::spd ? "spd" : "saddle"; }

SolveOutcome solve_system(const SystemData& sys, const SolverSettings& st) {
  const auto t0 = std::chrono::steady_clock::now();
  const PrecondKind kind = st.precond.kind;
  if (st.formulation == Formulation::spd && kind != PrecondKind::Shat && kind != PrecondKind::none)
    throw std::invalid_argument("spd formulation takes the Shat preconditioner or none");
  if (st.formulation == Formulation::saddle && kind == PrecondKind::Shat)
    throw std::invalid_argument("saddle formulation takes P_D, P_T, P_C or none");
  if (st.k < 0 || st.k > sys.n_times()) throw std::invalid_argument("k must lie in [0, N+1]");

  const Preconditioner P = st.k > 0 ? Preconditioner::kblock(sys, st.precond, st.k) : Preconditioner(sys, st.precond);
  SolveConfig oc = st.outer;
  oc.flexible = oc.flexible || P.variable();
  oc.parity_optimization = false;
  const Index s = sys.state_dim(), p = sys.obs_dim(), n = sys.n_times();
  SolveOutcome out;

  if (st.formulation == Formulation::spd) {
    const LinearOp<StateBlockMatrix> S = [&](const StateBlockMatrix& Z) { return apply_hessian(sys, Z); };
    LinearOp<StateBlockMatrix> prec;
    if (kind == PrecondKind::Shat) prec = [&](const StateBlockMatrix& Z) { return P.apply_schur_inv(Z); };
    const StateBlockMatrix rhs = hessian_rhs(sys);
    if (st.k == 0) {
      out.x = matcg(S, prec, rhs, oc, out.report);
    } else {
      const LinearOp<Vector> Sv = [&](const Vector& v) { return S(StateBlockMatrix::from_vec(v, s, n)).vec(); };
      LinearOp<Vector> Pv;
      if (prec) Pv = [&](const Vector& v) { return prec(StateBlockMatrix::from_vec(v, s, n)).vec(); };
      out.x = StateBlockMatrix::from_vec(vec_cg(Sv, Pv, rhs.vec(), oc, out.report), s, n);
    }
  } else {
    const LinearOp<SaddleTriple> A = [&](const SaddleTriple& v) { return apply_saddle(sys, v); };
    const PrecondOp<SaddleTriple> prec = [&](const SaddleTriple& v, BlockHint h) { return P.apply(v, h); };
    const SaddleTriple rhs = saddle_rhs(sys);
    if (st.k == 0) {
      oc.parity_optimization = st.parity && kind == PrecondKind::P_D;
      out.saddle = matgmres(A, prec, rhs, oc, out.report);
    } else {
      const LinearOp<Vector> Av = [&](const Vector& v) { return A(SaddleTriple::from_vec(v, s, p, n)).vec(); };
      const LinearOp<Vector> Pv = [&](const Vector& v) {
        return P.apply(SaddleTriple::from_vec(v, s, p, n)).vec();
      };
      out.saddle = SaddleTriple::from_vec(vec_gmres(Av, Pv, rhs.vec(), oc, out.report), s, p, n);
    }
    out.x = out.saddle.x;
  }
  out.counters = P.counters();
  out.total_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

namespace {

[[noreturn]] void bad(const std::string& src, const ConfigEntry& e, const std::string& what) {
  throw ConfigError(src, e.line, what);
}

CovarianceSpec* covariance_for(ProblemSpec& ps, const std::string& prefix) {
  if (prefix == "B") return &ps.cov_B;
  if (prefix == "Q") return &ps.cov_Q;
  if (prefix == "R") return &ps.cov_R;
  return nullptr;
}

void apply_problem_key(ProblemSpec& ps, const std::string& src, const ConfigEntry& e) {
  const std::string& k = e.key;
  try {
    if (k == "family") ps.family = parse_family(e.value);
    else if (k == "s") ps.s = as_long(src, e);
    else if (k == "p") ps.p = as_long(src, e);
    else if (k == "N") ps.N = as_long(src, e);
    else if (k == "dt") ps.dt = as_double(src, e);
    else if (k == "dx") ps.dx = as_double(src, e);
    else if (k == "spinup_steps") ps.spinup_steps = as_long(src, e);
    else if (k == "spinup_dt") ps.spinup_dt = as_double(src, e);
    else if (k == "zero_rhs") ps.zero_rhs = as_bool(src, e);
    else {
      const auto dot = k.find('.');
      CovarianceSpec* c = dot == std::string::npos ? nullptr : covariance_for(ps, k.substr(0, dot));
      if (!c) bad(src, e, "unknown problem key '" + k + "'");
      const std::string field = k.substr(dot + 1);
      if (field == "L") c->L = as_double(src, e);
      else if (field == "sigma") c->sigma = as_double(src, e);
      else if (field == "nnz") c->nnz = as_long(src, e);
      else if (field == "rel_floor") c->rel_floor = as_double(src, e);
      else if (field == "distance") {
        if (e.value == "chordal") c->distance = SoarDistance::chordal;
        else if (e.value == "circular") c->distance = SoarDistance::circular;
        else bad(src, e, "distance must be chordal or circular");
      } else {
        bad(src, e, "unknown problem key '" + k + "'");
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& ex) {
    bad(src, e, ex.what());
  }
}

template <class T, class F>
std::vector<T> parse_list(const std::string& src, const ConfigEntry& e, F&& one) {
  std::vector<T> out;
  for (const std::string& item : split_list(e.value)) {
    if (item.empty()) bad(src, e, "empty item in list '" + e.key + "'");
    try {
      out.push_back(one(item));
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& ex) {
      bad(src, e, ex.what());
    }
  }
  return out;
}

double parse_number(const std::string& src, const ConfigEntry& e, const std::string& item) {
  return as_double(src, {e.key, item, e.line});
}

long parse_integer(const std::string& src, const ConfigEntry& e, const std::string& item) {
  return as_long(src, {e.key, item, e.line});
}

SolverGroup parse_solver(const std::string& src, const ConfigSection& sec) {
  SolverGroup g;
  g.line = sec.line;
  for (const ConfigEntry& e : sec.entries) {
    if (e.key == "formulation") {
      if (e.value != "auto") {
        try {
          parse_formulation(e.value);
        } catch (const std::exception& ex) {
          bad(src, e, ex.what());
        }
      }
      g.formulation = e.value;
    } else if (e.key == "precond") {
      g.kinds = parse_list<PrecondKind>(src, e, [](const std::string& t) { return parse_precond_kind(t); });
    } else if (e.key == "r") {
      g.ranks = parse_list<RankSpec>(src, e, [&](const std::string& t) {
        if (t == "p") return RankSpec{true, 0};
        const long v = parse_integer(src, e, t);
        if (v < 0) bad(src, e, "r must be nonnegative");
        return RankSpec{false, v};
      });
    } else if (e.key == "mhat") {
      g.mhats = parse_list<MhatStrategy>(src, e, [](const std::string& t) { return MhatStrategy::parse(t); });
    } else if (e.key == "k") {
      g.ks = parse_list<KSpec>(src, e, [&](const std::string& t) {
        if (t == "N+1") return KSpec{true, 0};
        const long v = parse_integer(src, e, t);
        if (v < 0) bad(src, e, "k must be nonnegative");
        return KSpec{false, v};
      });
    } else if (e.key == "inner_tol") {
      g.inner_tol = as_double(src, e);
    } else if (e.key == "inner_max_iter") {
      g.inner_max_iter = static_cast<int>(as_long(src, e));
    } else if (e.key == "use_transform") {
      g.use_transform = as_bool(src, e);
    } else if (e.key == "parity") {
      g.parity = as_bool(src, e);
    } else {
      bad(src, e, "unknown solver key '" + e.key + "'");
    }
  }
  return g;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_config(const ConfigFile& file, const std::string& scale) {
  ExperimentConfig cfg;
  cfg.source = file.source;
  const std::string& src = file.source;
  bool scale_found = scale.empty();
  for (const ConfigSection& sec : file.sections) {
    if (sec.name == "problem") {
      for (const ConfigEntry& e : sec.entries) apply_problem_key(cfg.problem, src, e);
    } else if (sec.name.rfind("scale.", 0) == 0) {
      if (sec.name.substr(6) != scale) continue;
      scale_found = true;
    } else if (sec.name == "experiment") {
      for (const ConfigEntry& e : sec.entries) {
        if (e.key == "name") cfg.name = e.value;
        else if (e.key == "realizations") cfg.realizations = static_cast<int>(as_long(src, e));
        else if (e.key == "seed") cfg.seed = static_cast<std::uint64_t>(as_long(src, e));
        else if (e.key == "tol") cfg.tol = as_double(src, e);
        else if (e.key == "max_iter") cfg.max_iter = static_cast<int>(as_long(src, e));
        else if (e.key == "timing") cfg.timing = as_bool(src, e);
        else if (e.key == "output") cfg.output = e.value;
        else if (e.key == "N")
          cfg.N_values = parse_list<Index>(src, e, [&](const std::string& t) { return parse_integer(src, e, t); });
        else if (e.key == "dt")
          cfg.dt_values = parse_list<double>(src, e, [&](const std::string& t) { return parse_number(src, e, t); });
        else bad(src, e, "unknown experiment key '" + e.key + "'");
      }
    } else if (sec.name == "solver") {
      cfg.solvers.push_back(parse_solver(src, sec));
    } else if (sec.name == "bound") {
      for (const ConfigEntry& e : sec.entries) {
        if (e.key == "dt")
          cfg.bound.dts = parse_list<double>(src, e, [&](const std::string& t) { return parse_number(src, e, t); });
        else if (e.key == "mhat")
          cfg.bound.mhats =
              parse_list<MhatStrategy>(src, e, [](const std::string& t) { return MhatStrategy::parse(t); });
        else bad(src, e, "unknown bound key '" + e.key + "'");
      }
    } else {
      throw ConfigError(src, sec.line, "unknown section '" + sec.name + "'");
    }
  }
  // Scale overrides are applied after [problem], wherever they appear.
  for (const ConfigSection& sec : file.sections)
    if (!scale.empty() && sec.name == "scale." + scale)
      for (const ConfigEntry& e : sec.entries) {
        if (e.key == "realizations") cfg.realizations = static_cast<int>(as_long(src, e));
        else if (e.key == "N")
          cfg.N_values = parse_list<Index>(src, e, [&](const std::string& t) { return parse_integer(src, e, t); });
        else apply_problem_key(cfg.problem, src, e);
      }
  if (!scale_found) throw ConfigError(src, 0, "no [scale." + scale + "] section");
  if (cfg.realizations < 1) throw ConfigError(src, 0, "realizations must be positive");
  if (!(cfg.tol > 0.0) || cfg.max_iter < 1) throw ConfigError(src, 0, "tol and max_iter must be positive");
  try {
    cfg.problem.validate();
  } catch (const std::exception& ex) {
    throw ConfigError(src, 0, ex.what());
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path, const std::string& scale) {
  return from_config(ConfigFile::load(path), scale);
}

std::vector<GridEntry> expand_grid(const ExperimentConfig& cfg) {
  const std::vector<Index> Ns = cfg.N_values.empty() ? std::vector<Index>{cfg.problem.N} : cfg.N_values;
  const std::vector<double> dts = cfg.dt_values.empty() ? std::vector<double>{cfg.problem.dt} : cfg.dt_values;
  std::vector<GridEntry> grid;
  for (Index N : Ns)
    for (double dt : dts)
      for (const SolverGroup& g : cfg.solvers)
        for (PrecondKind kind : g.kinds)
          for (const RankSpec& rs : g.ranks)
            for (const MhatStrategy& mh : g.mhats)
              for (const KSpec& ks : g.ks) {
                const Index r = rs.resolve(cfg.problem.p);
                const bool has_schur = kind == PrecondKind::Shat || kind == PrecondKind::P_D || kind == PrecondKind::P_T;
                if (!has_schur && r > 0) continue;
                GridEntry ge;
                ge.N = N;
                ge.dt = dt;
                SolverSettings& st = ge.settings;
                if (g.formulation == "auto") {
                  if (kind == PrecondKind::none)
                    throw ConfigError(cfg.source, g.line, "formulation must be given for precond none");
                  st.formulation = kind == PrecondKind::Shat ? Formulation::spd : Formulation::saddle;
                } else {
                  st.formulation = parse_formulation(g.formulation);
                }
                const bool spd_ok = kind == PrecondKind::Shat || kind == PrecondKind::none;
                if ((st.formulation == Formulation::spd) != spd_ok && kind != PrecondKind::none)
                  throw ConfigError(cfg.source, g.line,
                                    "preconditioner " + precond_name(kind) + " does not fit the " +
                                        formulation_name(st.formulation) + " formulation");
                if (r > cfg.problem.p) throw ConfigError(cfg.source, g.line, "r exceeds p");
                st.precond.kind = kind;
                st.precond.r = r;
                st.precond.mhat = mh;
                st.precond.inner_tol = g.inner_tol;
                st.precond.inner_max_iter = g.inner_max_iter;
                st.precond.use_transform = g.use_transform;
                st.k = ks.resolve(N);
                st.parity = g.parity;
                st.outer.tol = cfg.tol;
                st.outer.max_iter = cfg.max_iter;
                st.outer.record_history = false;
                grid.push_back(ge);
              }
  return grid;
}

int worker_count(int requested, std::size_t tasks) {
  int n = requested;
  if (n <= 0) {
    n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
    if (const char* env = std::getenv("STEIN4DVAR_THREADS")) {
      const int cap = std::atoi(env);
      if (cap > 0) n = std::min(n, cap);
    }
  }
  return std::max(1, std::min(n, static_cast<int>(std::max<std::size_t>(tasks, 1))));
}

namespace {

ExperimentRow run_entry(const ExperimentConfig& cfg, const GridEntry& ge, const ProblemFactory& factory) {
  const SolverSettings& st = ge.settings;
  ExperimentRow row;
  row.formulation = formulation_name(st.formulation);
  row.preconditioner = precond_name(st.precond.kind);
  row.mhat_strategy = st.k > 0 ? "none" : st.precond.mhat.name();
  row.r = st.precond.r;
  row.k = st.k;
  row.N = ge.N;
  row.dt = ge.dt;
  row.seed = cfg.seed;
  row.realizations = cfg.realizations;
  double iters = 0.0, time = 0.0, inner = 0.0;
  int converged = 0, finished = 0;
  for (int i = 0; i < cfg.realizations; ++i) {
    try {
      const SystemData sys = factory.realization(cfg.seed + static_cast<std::uint64_t>(i));
      const SolveOutcome out = solve_system(sys, st);
      ++finished;
      iters += out.report.iterations;
      time += out.total_time;
      if (out.counters.schur_applications > 0)
        inner += static_cast<double>(out.counters.inner_iterations) /
                 static_cast<double>(out.counters.schur_applications);
      if (out.report.converged) ++converged;
      else if (row.message.empty()) row.message = out.report.message;
    } catch (const std::exception& ex) {
      if (row.message.empty()) row.message = ex.what();
    }
  }
  const double nan = std::nan("");
  row.iterations_mean = finished ? iters / finished : nan;
  row.wall_time_mean = finished ? time / finished : nan;
  row.inner_iter_mean = finished ? inner / finished : nan;
  row.converged_fraction = static_cast<double>(converged) / cfg.realizations;
  return row;
}

}  // namespace

std::vector<ExperimentRow> run_experiment(const ExperimentConfig& cfg, int threads) {
  const std::vector<GridEntry> grid = expand_grid(cfg);
  // One problem instance per (N, dt); built before the workers start.
  std::map<std::pair<Index, double>, std::unique_ptr<ProblemFactory>> factories;
  std::vector<const ProblemFactory*> factory_of(grid.size(), nullptr);
  std::vector<std::string> setup_error(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto key = std::make_pair(grid[i].N, grid[i].dt);
    auto it = factories.find(key);
    if (it == factories.end()) {
      ProblemSpec ps = cfg.problem;
      ps.N = grid[i].N;
      ps.dt = grid[i].dt;
      std::unique_ptr<ProblemFactory> f;
      try {
        f = std::make_unique<ProblemFactory>(ps);
      } catch (const std::exception& ex) {
        setup_error[i] = ex.what();
      }
      it = factories.emplace(key, std::move(f)).first;
    }
    factory_of[i] = it->second.get();
    if (!factory_of[i] && setup_error[i].empty()) setup_error[i] = "problem construction failed";
  }

  std::vector<ExperimentRow> rows(grid.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < grid.size(); i = next++) {
      if (factory_of[i]) {
        rows[i] = run_entry(cfg, grid[i], *factory_of[i]);
      } else {
        rows[i].formulation = formulation_name(grid[i].settings.formulation);
        rows[i].preconditioner = precond_name(grid[i].settings.precond.kind);
        rows[i].mhat_strategy = grid[i].settings.precond.mhat.name();
        rows[i].r = grid[i].settings.precond.r;
        rows[i].k = grid[i].settings.k;
        rows[i].N = grid[i].N;
        rows[i].dt = grid[i].dt;
        rows[i].iterations_mean = rows[i].wall_time_mean = rows[i].inner_iter_mean = std::nan("");
        rows[i].seed = cfg.seed;
        rows[i].realizations = cfg.realizations;
        rows[i].message = setup_error[i];
      }
    }
  };
  const int nt = worker_count(threads, grid.size());
  if (nt <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nt; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return rows;
}

namespace {

std::string num(double x) {
  if (std::isnan(x)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string experiment_csv_header() {
  return "formulation,preconditioner,mhat_strategy,r,k,N,dt,iterations_mean,wall_time_mean,inner_iter_mean,"
         "converged_fraction,seed,realizations,message";
}

void write_experiment_csv(std::ostream& os, const std::vector<ExperimentRow>& rows, bool timing) {
  os << experiment_csv_header() << '\n';
  for (const ExperimentRow& r : rows) {
    os << r.formulation << ',' << r.preconditioner << ',' << quote(r.mhat_strategy) << ',' << r.r << ',' << r.k
       << ',' << r.N << ',' << num(r.dt) << ',' << num(r.iterations_mean) << ','
       << (timing ? num(r.wall_time_mean) : "NA") << ',' << num(r.inner_iter_mean) << ','
       << num(r.converged_fraction) << ',' << r.seed << ',' << r.realizations << ',' << quote(r.message) << '\n';
  }
}

std::vector<BoundRow> run_bound_table(const ProblemSpec& problem, const BoundSettings& settings) {
  const std::vector<double> dts = settings.dts.empty() ? std::vector<double>{problem.dt} : settings.dts;
  const std::vector<MhatStrategy> mhats = settings.mhats.empty() ? std::vector<MhatStrategy>{MhatStrategy{}}
                                                                  : settings.mhats;
  std::vector<BoundRow> rows;
  for (double dt : dts) {
    ProblemSpec ps = problem;
    ps.dt = dt;
    ps.validate();
    const std::vector<Matrix> models = build_models(ps);
    for (const MhatStrategy& mh : mhats) {
      BoundRow row;
      row.dt = dt;
      row.strategy = mh.name();
      try {
        row.report = stein_bound(models, select_mhat(models, mh));
      } catch (const std::exception& ex) {
        row.error = ex.what();
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void write_bound_csv(std::ostream& os, const std::vector<BoundRow>& rows) {
  std::vector<std::string> strategies;
  std::vector<double> dts;
  for (const BoundRow& r : rows) {
    if (std::find(strategies.begin(), strategies.end(), r.strategy) == strategies.end())
      strategies.push_back(r.strategy);
    if (std::find(dts.begin(), dts.end(), r.dt) == dts.end()) dts.push_back(r.dt);
  }
  os << "dt,quantity";
  for (const auto& s : strategies) os << ',' << quote(s);
  os << '\n';
  const char* names[] = {"mhat_norm", "max_defect", "upper_bound"};
  for (double dt : dts) {
    for (int q = 0; q < 3; ++q) {
      os << num(dt) << ',' << names[q];
      for (const auto& s : strategies) {
        const auto it = std::find_if(rows.begin(), rows.end(),
                                     [&](const BoundRow& r) { return r.dt == dt && r.strategy == s; });
        os << ',';
        if (it == rows.end() || !it->error.empty()) {
          os << "NA";
          continue;
        }
        const BoundReport& b = it->report;
        os << num(q == 0 ? b.mhat_norm : q == 1 ? b.max_D : b.upper_bound);
      }
      os << '\n';
    }
  }
}

}  // namespace stein4dvar
