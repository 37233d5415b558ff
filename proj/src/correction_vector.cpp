#include "corrvec/correction_vector.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <thread>
#include <tuple>

#include <fmt/format.h>

#include "corrvec/errors.hpp"

namespace corrvec {

namespace {

constexpr std::uint64_t kVNormTasks = 1ull << 39;
constexpr std::uint64_t kElementTasks = 1ull << 38;
constexpr std::size_t kMaxStartDeterminants = 64;

int branch_index(Branch b) { return b == Branch::particle ? 0 : 1; }

void check_orbital(int orbital, int width) {
  if (orbital < 0 || orbital >= width) throw DimensionError(fmt::format("orbital {} outside register of width {}", orbital, width));
}

std::uint64_t element_task(std::uint64_t task_base, int i) {
  return ((task_base + kElementTasks) << 24) + static_cast<std::uint64_t>(i);
}

CorrectionVectorSolution optimize(const GfProblem& p, const CostG& cg, int cg_orbital, Branch cg_branch,
                                  const AnsatzSpec& spec0,
                                  const std::vector<double>& theta0, const CvOptions& opts, std::uint64_t task_base) {
  CorrectionVectorSolution best;
  best.spec = spec0;
  best.spec.width = p.width();
  const double vv = cg.v_norm_sq();
  if (vv < kVNormThreshold) {
    best.zero = true;
    best.converged = true;
    return best;
  }
  const int max_depth = opts.max_depth > 0 ? opts.max_depth : spec0.depth + 3;
  if (max_depth < spec0.depth) throw ValidationError("max_depth is below the starting depth");

  AnsatzSpec spec = best.spec;
  Circuit circ = build_hea(spec);
  TaskCounter tasks(task_base);
  const std::uint64_t seed = p.seed() ^ (task_base * 0x9E3779B97F4A7C15ull);
  std::vector<double> theta = theta0;
  if (theta.empty()) {
    const auto candidates = p.start_determinants(cg_orbital, cg_branch);
    std::vector<int> start;
    double lowest = std::numeric_limits<double>::infinity();
    for (const auto& occ : candidates) {
      const auto parts = cg.evaluate(circ, initial_angles(spec, 0, 0.0, occ), tasks.next());
      const double fit = std::norm(parts.overlap) / vv;
      const double res = opts.residual == ResidualKind::reconstruction ? (fit > 0.0 ? parts.g / fit : lowest) : parts.g / vv;
      if (res < lowest) {
        lowest = res;
        start = occ;
      }
    }
    theta = initial_angles(spec, seed, 0.1, start);
  }
  if (static_cast<int>(theta.size()) != spec.num_slots()) throw DimensionError("warm-start angles do not match ansatz");
  const CostFunction cost = [&](const std::vector<double>& t) { return cg(circ, t, tasks.next()); };
  const bool exact = p.estimator().exact_noiseless();
  const bool relative = opts.residual == ResidualKind::reconstruction;
  auto residual_at = [&](const std::vector<double>& t, double& g) {
    if (!relative) {
      g = cost(t);
      return g / vv;
    }
    const auto parts = cg.evaluate(circ, t, tasks.next());
    g = parts.g;
    const double fit = std::norm(parts.overlap) / vv;
    return fit > 0.0 ? g / fit : std::numeric_limits<double>::infinity();
  };

  double g = 0.0;
  double r = residual_at(theta, g);
  best.theta = theta;
  best.residual = r;
  best.g = g;
  if (r < opts.eps) {
    best.converged = true;
    return best;
  }
  double prev = r;
  int stall = 0;
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    auto sr = rotosolve_sweep(cost, theta, opts.rotosolve);
    theta = std::move(sr.theta);
    if (exact && !relative) {
      g = sr.cost;
      r = g / vv;
    } else {
      r = residual_at(theta, g);
    }
    best.sweeps = sweep + 1;
    if (r < best.residual) {
      best.residual = r;
      best.g = g;
      best.theta = theta;
      best.spec = spec;
    }
    if (r < opts.eps) {
      best.converged = true;
      break;
    }
    const double rel = std::isfinite(prev) ? (prev - r) / std::max(std::abs(prev), 1e-300) : 1.0;
    stall = rel < opts.stall_rel ? stall + 1 : 0;
    prev = r;
    if (stall >= opts.stall_sweeps) {
      if (spec.depth >= max_depth) break;
      theta = deepen_angles(spec, theta);
      ++spec.depth;
      circ = build_hea(spec);
      stall = 0;
    }
  }
  return best;
}

}  // namespace

PauliSum build_q(const PauliSum& h, double e0, cplx z, int sign) {
  if (sign != 1 && sign != -1) throw ValidationError("shift sign must be +1 or -1");
  if (!h.is_hermitian()) throw ValidationError("Q is built from a hermitian Hamiltonian");
  PauliSum q = h - PauliSum::identity(h.width(), e0);
  q *= static_cast<double>(sign);
  q += PauliSum::identity(h.width(), z);
  return q;
}

GfProblem::GfProblem(PauliSum h, double e0, AnsatzSpec ground_spec, std::vector<double> ground_theta,
                     const Estimator& est, std::uint64_t seed)
    : h_(std::move(h)), e0_(e0), seed_(seed), est_(est), ground_theta_(std::move(ground_theta)) {
  if (!h_.is_hermitian()) throw ValidationError("GF problem needs a hermitian Hamiltonian");
  if (ground_spec.width != h_.width()) throw DimensionError("ground-state ansatz width differs from Hamiltonian");
  ground_ = build_hea(ground_spec);
  if (static_cast<int>(ground_theta_.size()) != ground_.num_slots()) throw DimensionError("ground-state angles do not match ansatz");
  ref_ = est_.reference(ground_, ground_theta_);
  const int m = h_.width();
  for (Branch b : {Branch::particle, Branch::hole}) {
    const int bi = branch_index(b);
    for (int i = 0; i < m; ++i) {
      v_[bi].push_back(perturbation_op(i, ladder_of(b), m));
      const PauliSum vv = adjoint(v_[bi].back()) * v_[bi].back();
      const std::uint64_t task = (kVNormTasks + static_cast<std::uint64_t>(2 * i + bi)) << 24;
      vv_[bi].push_back(est_.expectation(ground_, ground_theta_, vv, task));
    }
  }
}

void GfProblem::set_reference_occupation(std::vector<int> occupied) {
  for (int q : occupied) check_orbital(q, width());
  std::sort(occupied.begin(), occupied.end());
  occupied.erase(std::unique(occupied.begin(), occupied.end()), occupied.end());
  occupied_ = std::move(occupied);
}

std::vector<std::vector<int>> GfProblem::start_determinants(int orbital, Branch b) const {
  check_orbital(orbital, width());
  if (occupied_.empty()) return {};
  const int m = width();
  const int half = m % 2 == 0 ? m / 2 : m;
  auto spin_of = [&](int q) { return q < half ? 0 : 1; };
  int count[2] = {0, 0};
  for (int q : occupied_) ++count[spin_of(q)];
  count[spin_of(orbital)] += b == Branch::particle ? 1 : -1;
  std::vector<std::vector<int>> out;
  if (count[0] < 0 || count[1] < 0) return out;
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << m); ++bits) {
    int c[2] = {0, 0};
    std::vector<int> occ;
    for (int q = 0; q < m; ++q) {
      if (bits >> q & 1) {
        ++c[spin_of(q)];
        occ.push_back(q);
      }
    }
    if (c[0] == count[0] && c[1] == count[1]) out.push_back(std::move(occ));
    if (out.size() > kMaxStartDeterminants) return {};
  }
  return out;
}

const PauliSum& GfProblem::v(int orbital, Branch b) const {
  check_orbital(orbital, width());
  return v_[branch_index(b)][static_cast<std::size_t>(orbital)];
}

double GfProblem::v_norm_sq(int orbital, Branch b) const {
  check_orbital(orbital, width());
  return vv_[branch_index(b)][static_cast<std::size_t>(orbital)];
}

CostG::CostG(const GfProblem& p, int orbital, Branch b, cplx z)
    : p_(p), q_(build_q(p.hamiltonian(), p.e0(), z, q_sign(b))), vv_(p.v_norm_sq(orbital, b)) {
  qdq_ = adjoint(q_) * q_;
  // Q+Q is hermitian; drop the rounding residue in the imaginary parts.
  PauliSum clean(qdq_.width());
  for (const auto& [s, w] : qdq_.terms()) clean.add_term(s, w.real());
  qdq_ = std::move(clean);
  vdq_ = adjoint(p.v(orbital, b)) * q_;
}

cplx CostG::v_q_overlap(const Circuit& u, const std::vector<double>& theta, std::uint64_t task) const {
  return p_.estimator().overlap_sum(p_.reference(), u, theta, vdq_, task);
}

CostG::Parts CostG::evaluate(const Circuit& u, const std::vector<double>& theta, std::uint64_t task) const {
  Parts out;
  out.term1 = p_.estimator().expectation(u, theta, qdq_, task);
  out.overlap = v_q_overlap(u, theta, task + (1ull << 23));
  out.g = out.term1 - std::norm(out.overlap) / vv_;
  return out;
}

double cost_g_dense(const PauliSum& q, const Eigen::VectorXcd& v_psi0, const Eigen::VectorXcd& u) {
  const Eigen::VectorXcd qu = apply_to(q, u);
  const double vv = v_psi0.squaredNorm();
  if (vv < kVNormThreshold) throw NumericalError("perturbation annihilates the ground state");
  return qu.squaredNorm() - std::norm(v_psi0.dot(qu)) / vv;
}

Eigen::MatrixXcd h_prime_dense(const PauliSum& q, const Eigen::VectorXcd& v_psi0) {
  const auto dim = v_psi0.size();
  if (dim != (Eigen::Index{1} << q.width())) throw DimensionError("state does not match operator width");
  Eigen::MatrixXcd qm(dim, dim);
  for (Eigen::Index c = 0; c < dim; ++c) qm.col(c) = apply_to(q, Eigen::VectorXcd::Unit(dim, c));
  const double vv = v_psi0.squaredNorm();
  const Eigen::MatrixXcd proj = Eigen::MatrixXcd::Identity(dim, dim) - v_psi0 * v_psi0.adjoint() / vv;
  return qm.adjoint() * proj * qm;
}

const char* residual_kind_name(ResidualKind k) { return k == ResidualKind::v_norm ? "v_norm" : "reconstruction"; }

void CvOptions::validate() const {
  if (!(eps > 0.0)) throw ValidationError("eps must be positive");
  if (max_sweeps < 1) throw ValidationError("max_sweeps must be positive");
  if (stall_sweeps < 1) throw ValidationError("stall_sweeps must be positive");
  if (stall_rel < 0.0) throw ValidationError("stall threshold must be non-negative");
  if (max_depth < 0) throw ValidationError("max_depth must be non-negative");
}

cplx gamma(const CostG& cost, const Circuit& u, const std::vector<double>& theta, std::uint64_t task) {
  if (cost.v_norm_sq() < kVNormThreshold) return 0.0;
  const cplx den = cost.v_q_overlap(u, theta, task);
  if (!(std::abs(den) >= kGammaThreshold)) {
    throw NumericalError(fmt::format("|<V|Q U>| = {:.3e} is below the normalization threshold", std::abs(den)));
  }
  return cost.v_norm_sq() / den;
}

CorrectionVectorSolution solve_correction_vector(const GfProblem& p, int orbital, Branch b, cplx z,
                                                 const AnsatzSpec& spec, const std::vector<double>& theta0,
                                                 const CvOptions& opts, std::uint64_t task_base) {
  opts.validate();
  check_orbital(orbital, p.width());
  const CostG cg(p, orbital, b, z);
  auto sol = optimize(p, cg, orbital, b, spec, theta0, opts, task_base);
  if (!sol.zero) sol.gamma = gamma(cg, build_hea(sol.spec), sol.theta, element_task(task_base, p.width()));
  return sol;
}

cplx gf_element(const GfProblem& p, int i, Branch b, const CorrectionVectorSolution& sol, std::uint64_t task) {
  check_orbital(i, p.width());
  if (sol.zero || p.v_norm_sq(i, b) < kVNormThreshold) return 0.0;
  const PauliSum vi_dag = adjoint(p.v(i, b));
  return sol.gamma * p.estimator().overlap_sum(p.reference(), build_hea(sol.spec), sol.theta, vi_dag, task);
}

std::vector<int> sweep_columns(int width, const SweepOptions& opts) {
  std::vector<int> cols;
  if (opts.orbitals) {
    cols = *opts.orbitals;
  } else {
    for (int i = 0; i < width; ++i) cols.push_back(i);
  }
  for (int c : cols) check_orbital(c, width);
  if (opts.restricted) {
    if (width % 2 != 0) throw ValidationError("restricted sweeps need an even register");
    std::erase_if(cols, [&](int c) { return c >= width / 2; });
  }
  std::sort(cols.begin(), cols.end());
  cols.erase(std::unique(cols.begin(), cols.end()), cols.end());
  return cols;
}

namespace {

using RecordKey = std::tuple<int, int, int, bool>;

RecordKey key_of(const PointRecord& r) { return {r.point, r.orbital, branch_index(r.branch), r.refined}; }

std::uint64_t solve_task(int point, bool refined, int width, int orbital, Branch b) {
  const auto k = static_cast<std::uint64_t>(point) * 2 + (refined ? 1 : 0);
  return ((k * static_cast<std::uint64_t>(width) + static_cast<std::uint64_t>(orbital)) * 2 +
          static_cast<std::uint64_t>(branch_index(b))) + 1;
}

struct ChainContext {
  const GfProblem& p;
  const FrequencyGrid& grid;
  const SweepOptions& opts;
  const std::map<RecordKey, PointRecord>& prior;
  std::mutex mu;
  std::vector<PointRecord> out;
  const RecordSink& sink;
  std::atomic<long> new_solves{0};
  std::atomic<bool> stopped{false};
  bool spin_blocks = false;
};

PointRecord solve_point(ChainContext& ctx, int k, int j, Branch b, bool refined, const AnsatzSpec& spec,
                        const std::vector<double>& theta0, const CvOptions& cv) {
  PointRecord rec;
  rec.point = k;
  rec.orbital = j;
  rec.branch = b;
  rec.refined = refined;
  const int m = ctx.p.width();
  const std::uint64_t task = solve_task(k, refined, m, j, b);
  try {
    const CostG cg(ctx.p, j, b, ctx.grid.points[static_cast<std::size_t>(k)]);
    rec.solution = optimize(ctx.p, cg, j, b, spec, theta0, cv, task);
    if (!rec.solution.zero) {
      rec.solution.gamma = gamma(cg, build_hea(rec.solution.spec), rec.solution.theta, element_task(task, m));
    }
    rec.column.resize(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
      if (ctx.spin_blocks && (2 * i < m) != (2 * j < m)) continue;
      rec.column[static_cast<std::size_t>(i)] = gf_element(ctx.p, i, b, rec.solution, element_task(task, i));
    }
  } catch (const NumericalError& e) {
    rec.error = e.what();
    rec.column.clear();
  }
  return rec;
}

bool take_budget(ChainContext& ctx) {
  if (ctx.opts.stop_after < 0) return true;
  if (ctx.new_solves.fetch_add(1) >= ctx.opts.stop_after) {
    ctx.stopped = true;
    return false;
  }
  return true;
}

void emit(ChainContext& ctx, const PointRecord& rec) {
  std::lock_guard<std::mutex> lock(ctx.mu);
  ctx.out.push_back(rec);
  if (ctx.sink) ctx.sink(rec);
}

void run_chain(ChainContext& ctx, int j, Branch b) {
  const int n = static_cast<int>(ctx.grid.size());
  AnsatzSpec spec = ctx.opts.spec;
  spec.width = ctx.p.width();
  CvOptions cv = ctx.opts.cv;
  if (cv.max_depth == 0) cv.max_depth = ctx.opts.spec.depth + 3;
  std::vector<double> warm;
  std::vector<PointRecord> chain(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    auto it = ctx.prior.find({k, j, branch_index(b), false});
    if (it != ctx.prior.end()) {
      chain[static_cast<std::size_t>(k)] = it->second;
    } else {
      if (!take_budget(ctx)) return;
      chain[static_cast<std::size_t>(k)] = solve_point(ctx, k, j, b, false, spec, warm, cv);
      emit(ctx, chain[static_cast<std::size_t>(k)]);
    }
    const auto& sol = chain[static_cast<std::size_t>(k)].solution;
    if (!sol.zero && !sol.theta.empty()) {
      spec = sol.spec;
      warm = sol.theta;
    }
  }
  if (!ctx.opts.refine) return;
  auto magnitude = [&](int k) {
    const auto& r = chain[static_cast<std::size_t>(k)];
    return r.error.empty() ? std::abs(r.column[static_cast<std::size_t>(j)]) : -1.0;
  };
  const double tau = ctx.opts.refine_threshold;
  for (int k = 1; k + 1 < n; ++k) {
    const double x = magnitude(k), lo = magnitude(k - 1), hi = magnitude(k + 1);
    if (x < 0.0 || lo < 0.0 || hi < 0.0) continue;
    const auto& base = chain[static_cast<std::size_t>(k)];
    if (base.solution.zero) continue;
    if (!(std::abs(x - lo) > tau * lo && std::abs(x - hi) > tau * hi)) continue;
    if (ctx.prior.count({k, j, branch_index(b), true})) continue;
    if (!take_budget(ctx)) return;
    CvOptions tight = cv;
    tight.eps = cv.eps / 10.0;
    emit(ctx, solve_point(ctx, k, j, b, true, base.solution.spec, base.solution.theta, tight));
  }
}

}  // namespace

SweepState run_gf_sweep(const GfProblem& p, const FrequencyGrid& grid, const SweepOptions& opts,
                        const std::vector<PointRecord>& prior, const RecordSink& sink) {
  grid.validate();
  opts.cv.validate();
  const auto cols = sweep_columns(p.width(), opts);
  std::map<RecordKey, PointRecord> prior_map;
  for (const auto& r : prior) prior_map[key_of(r)] = r;

  ChainContext ctx{p, grid, opts, prior_map, {}, {}, sink};
  ctx.spin_blocks = opts.spin_blocks && conserves_sz(p.hamiltonian());
  std::vector<std::pair<int, Branch>> chains;
  for (int j : cols) {
    chains.emplace_back(j, Branch::particle);
    chains.emplace_back(j, Branch::hole);
  }
  const int workers = std::clamp(opts.workers, 1, std::max(1, static_cast<int>(chains.size())));
  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto worker = [&] {
    for (std::size_t c = next++; c < chains.size(); c = next++) {
      try {
        run_chain(ctx, chains[c].first, chains[c].second);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  SweepState st;
  for (auto& [k, r] : prior_map) st.records.push_back(r);
  for (auto& r : ctx.out) st.records.push_back(std::move(r));
  std::sort(st.records.begin(), st.records.end(),
            [](const PointRecord& a, const PointRecord& b) { return key_of(a) < key_of(b); });
  st.complete = !ctx.stopped;
  return st;
}

GreensSeries assemble_series(const FrequencyGrid& grid, int width, const SweepOptions& opts,
                             const std::vector<PointRecord>& records) {
  const auto cols = sweep_columns(width, opts);
  std::map<RecordKey, const PointRecord*> by_key;
  for (const auto& r : records) by_key[key_of(r)] = &r;
  GreensSeries s(grid, width);
  const int half = width / 2;
  auto flip = [&](int i) { return i < half ? i + half : i - half; };
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::MatrixXcd gp = Eigen::MatrixXcd::Zero(width, width);
    Eigen::MatrixXcd gh = Eigen::MatrixXcd::Zero(width, width);
    for (int j : cols) {
      for (Branch b : {Branch::particle, Branch::hole}) {
        const int bi = branch_index(b);
        const PointRecord* rec = nullptr;
        auto base = by_key.find({static_cast<int>(k), j, bi, false});
        auto ref = by_key.find({static_cast<int>(k), j, bi, true});
        if (ref != by_key.end() && ref->second->error.empty()) {
          rec = ref->second;
        } else if (base != by_key.end()) {
          rec = base->second;
        }
        if (!rec) throw ValidationError(fmt::format("missing record for point {} column {} {}", k, j, branch_name(b)));
        PointDiagnostic d;
        d.orbital = j;
        d.branch = b;
        d.residual = rec->solution.residual;
        d.gamma = rec->solution.gamma;
        d.depth = rec->solution.spec.depth;
        d.sweeps = rec->solution.sweeps;
        d.converged = rec->solution.converged && rec->error.empty();
        d.zero = rec->solution.zero;
        d.refined = rec->refined;
        d.error = rec->error;
        s.diagnostics[k].push_back(d);
        if (!rec->error.empty()) {
          s.valid[k] = 0;
          if (!s.point_errors[k].empty()) s.point_errors[k] += "; ";
          s.point_errors[k] += fmt::format("column {} {}: {}", j, branch_name(b), rec->error);
          continue;
        }
        for (int i = 0; i < width; ++i) {
          const cplx v = rec->column[static_cast<std::size_t>(i)];
          if (b == Branch::particle) {
            gp(i, j) = v;
            if (opts.restricted) gp(flip(i), flip(j)) = v;
          } else {
            gh(j, i) = v;
            if (opts.restricted) gh(flip(j), flip(i)) = v;
          }
        }
      }
    }
    s.g[k] = gp + gh;
  }
  return s;
}

GreensSeries gf_matrix_sweep(const GfProblem& p, const FrequencyGrid& grid, const SweepOptions& opts) {
  if (grid.empty()) throw ValidationError("frequency grid is empty");
  if (opts.orbitals && opts.orbitals->empty()) return GreensSeries(grid, 0);
  const auto st = run_gf_sweep(p, grid, opts);
  return assemble_series(grid, p.width(), opts, st.records);
}

}  // namespace corrvec
