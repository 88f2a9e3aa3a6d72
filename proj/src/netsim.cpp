#include "synctool/netsim.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <random>
#include <sstream>

#include "synctool/errors.hpp"
#include "synctool/numlin.hpp"

namespace synctool::netsim {

namespace {

Error precondition(const std::string& code, const std::string& what) {
  return Error(ErrorKind::kPrecondition, code, what);
}

}  // namespace

ClosedLoopSystem assemble_closed_loop(const std::vector<homog::CompensatedAgent>& agents,
                                      const protocol::ProtocolParams& params, double eps,
                                      const graph::CommGraph& g, SyncMode mode,
                                      const std::optional<graph::RootSet>& root,
                                      const std::optional<homog::Exosystem>& exo) {
  const int n_agents = static_cast<int>(agents.size());
  if (n_agents < 1) throw contract_error("a network needs at least one agent");
  if (g.size() != n_agents) {
    std::ostringstream os;
    os << "graph has " << g.size() << " nodes but there are " << n_agents << " agents";
    throw dimension_error(os.str());
  }
  const auto& target = params.target;
  const int p = target.p();
  const int nt = target.order();
  for (int i = 0; i < n_agents; ++i) {
    const auto rep = homog::verify_homogenization(agents[static_cast<std::size_t>(i)], target);
    if (!rep.passed) {
      std::ostringstream os;
      os << "agent " << i + 1 << " is not homogenized to the target (deviation " << rep.max_deviation << ")";
      throw Error(ErrorKind::kSynthesis, "HOMOGENIZATION_UNVERIFIED", os.str());
    }
  }

  const Matrix lap = graph::laplacian(g);
  Matrix lbar = lap;
  std::optional<Matrix> exo_embed;
  if (mode == SyncMode::kOutputSync) {
    if (n_agents < 2) throw contract_error("output synchronization needs at least two agents");
    if (!graph::has_spanning_tree(g)) {
      throw precondition("NO_SPANNING_TREE", "the communication graph has no directed spanning tree");
    }
  } else {
    if (!root) throw precondition("MISSING_ROOT_SET", "regulated mode needs a root set");
    if (!exo) throw precondition("MISSING_EXOSYSTEM", "regulated mode needs an exosystem");
    exo->validate();
    if (!graph::root_set_covers(g, *root)) {
      throw precondition("ROOT_SET_NOT_COVERING", "some agent is not reachable from the root set");
    }
    if (exo->Cr.rows() != p) throw dimension_error("exosystem output dimension differs from p");
    exo_embed = homog::exosystem_embedding(target, *exo);
    if (!exo_embed) {
      throw precondition("EXOSYSTEM_NOT_EMBEDDED", "the target model cannot generate the exosystem output");
    }
    lbar = graph::expanded_laplacian(lap, *root);
  }

  ClosedLoopSystem cl;
  cl.mode = mode;
  cl.eps = eps;
  cl.p = p;
  Eigen::Index n_tot = 0;
  Eigen::Index w_tot = 0;
  for (const auto& a : agents) {
    if (a.dyn.outputs() != p) throw dimension_error("agent output dimension differs from p");
    cl.agent_offset.push_back(n_tot);
    cl.agent_states.push_back(a.dyn.states());
    cl.plant_states.push_back(a.plant_states);
    n_tot += a.dyn.states();
    cl.disturbance_offset.push_back(w_tot);
    cl.disturbance_width.push_back(a.E.cols());
    w_tot += a.E.cols();
  }
  for (int i = 0; i < n_agents; ++i) {
    cl.protocol_offset.push_back(n_tot);
    n_tot += 2 * nt;
  }
  Eigen::Index r = 0;
  if (mode == SyncMode::kRegulated) {
    cl.exo_offset = n_tot;
    r = exo->Ar.rows();
    n_tot += r;
    cl.exo_x0 = exo->x0;
  }

  Matrix a = Matrix::Zero(n_tot, n_tot);
  Matrix b = Matrix::Zero(n_tot, w_tot);
  cl.outputs = Matrix::Zero(n_agents * p, n_tot);
  cl.reference = Matrix::Zero(mode == SyncMode::kRegulated ? p : 0, n_tot);

  std::vector<protocol::ProtocolBlock> blocks;
  for (int i = 0; i < n_agents; ++i) {
    const bool iota = mode == SyncMode::kRegulated && root->iota(i);
    blocks.push_back(protocol::assemble_protocol_block(params, eps, mode, iota));
  }
  for (int i = 0; i < n_agents; ++i) {
    const auto& ag = agents[static_cast<std::size_t>(i)];
    const auto& blk = blocks[static_cast<std::size_t>(i)].dyn;
    const auto xi = cl.agent_offset[static_cast<std::size_t>(i)];
    const auto ni = ag.dyn.states();
    const auto si = cl.protocol_offset[static_cast<std::size_t>(i)];
    const Matrix cv = blk.C.topRows(p);
    const Matrix cchi = blk.C.bottomRows(nt);
    const Matrix bz = blk.B.leftCols(p);
    const Matrix bzh = blk.B.rightCols(nt);

    a.block(xi, xi, ni, ni) = ag.dyn.A;
    a.block(xi, si, ni, 2 * nt) = ag.dyn.B * cv;
    b.block(xi, cl.disturbance_offset[static_cast<std::size_t>(i)], ni, ag.E.cols()) = ag.E;
    cl.outputs.block(i * p, xi, p, ni) = ag.dyn.C;

    a.block(si, si, 2 * nt, 2 * nt) = blk.A;
    double row_sum = 0.0;
    for (int j = 0; j < n_agents; ++j) {
      const auto& aj = agents[static_cast<std::size_t>(j)];
      const double l = lap(i, j);
      const double lb = lbar(i, j);
      row_sum += lb;
      if (lb != 0.0) {
        a.block(si, cl.agent_offset[static_cast<std::size_t>(j)], 2 * nt, aj.dyn.states()) += lb * bz * aj.dyn.C;
      }
      if (l != 0.0) {
        const auto& cj = blocks[static_cast<std::size_t>(j)].dyn.C.bottomRows(nt);
        a.block(si, cl.protocol_offset[static_cast<std::size_t>(j)], 2 * nt, 2 * nt) += l * bzh * cj;
      }
    }
    if (mode == SyncMode::kRegulated && row_sum != 0.0) {
      a.block(si, cl.exo_offset, 2 * nt, r) -= row_sum * bz * exo->Cr;
    }
  }
  if (mode == SyncMode::kRegulated) {
    a.block(cl.exo_offset, cl.exo_offset, r, r) = exo->Ar;
    cl.reference.block(0, cl.exo_offset, p, r) = exo->Cr;
  }

  Matrix c;
  if (mode == SyncMode::kOutputSync) {
    cl.error_basis = "y_i - y_N, i < N";
    c = Matrix::Zero((n_agents - 1) * p, n_tot);
    const Matrix last = cl.outputs.bottomRows(p);
    for (int i = 0; i + 1 < n_agents; ++i) c.middleRows(i * p, p) = cl.outputs.middleRows(i * p, p) - last;
  } else {
    cl.error_basis = "y_i - y_r";
    c = cl.outputs;
    for (int i = 0; i < n_agents; ++i) c.middleRows(i * p, p) -= cl.reference;
  }
  cl.full = StateSpace(a, b, c);

  // Error realization.
  if (mode == SyncMode::kRegulated) {
    const Eigen::Index m = cl.exo_offset;
    cl.error_dynamics = StateSpace(a.topLeftCorner(m, m), b.topRows(m), c.leftCols(m));
  } else {
    // Quotient by the synchronized motion {x_i = T_i xbar, protocols = 0}:
    // coordinates x_i - T_i M_N x_N (i < N), U_N^T (I - T_N M_N) x_N, and the
    // protocol states; the lift puts xbar = 0.
    const auto& last = agents.back();
    const Matrix u_n = numlin::null_space(last.to_target, "synchronized-motion quotient");
    const auto nn = last.dyn.states();
    const auto xn = cl.agent_offset.back();
    const Eigen::Index reduced = n_tot - nt;
    Matrix pi = Matrix::Zero(reduced, n_tot);
    Matrix lift = Matrix::Zero(n_tot, reduced);
    Eigen::Index row = 0;
    for (int i = 0; i + 1 < n_agents; ++i) {
      const auto& ag = agents[static_cast<std::size_t>(i)];
      const auto ni = ag.dyn.states();
      const auto xi = cl.agent_offset[static_cast<std::size_t>(i)];
      pi.block(row, xi, ni, ni).setIdentity();
      pi.block(row, xn, ni, nn) = -ag.embedding * last.to_target;
      lift.block(xi, row, ni, ni).setIdentity();
      row += ni;
    }
    const Matrix proj = Matrix::Identity(nn, nn) - last.embedding * last.to_target;
    pi.block(row, xn, u_n.cols(), nn) = u_n.transpose() * proj;
    lift.block(xn, row, nn, u_n.cols()) = u_n;
    row += u_n.cols();
    const Eigen::Index prot = n_tot - cl.protocol_offset.front();
    pi.block(row, cl.protocol_offset.front(), prot, prot).setIdentity();
    lift.block(cl.protocol_offset.front(), row, prot, prot).setIdentity();
    cl.error_dynamics = StateSpace(pi * a * lift, pi * b, c * lift);
  }
  return cl;
}

ClosedLoopSystem assemble_closed_loop(const NetworkDesign& d, double eps) {
  return assemble_closed_loop(d.agents, d.params, eps, d.graph, d.mode, d.root, d.exo);
}

double closed_loop_abscissa(const ClosedLoopSystem& cl) {
  return numlin::spectral_abscissa(cl.error_dynamics.A);
}

double closed_loop_hinf(const ClosedLoopSystem& cl, double tol) {
  return numlin::hinf_norm(cl.error_dynamics, tol);
}

double estimate_eps_star(const NetworkDesign& design, double eps_hi) {
  if (!(eps_hi > 0.0 && eps_hi <= 1.0)) throw contract_error("eps_hi must lie in (0, 1]");
  constexpr double kFloor = 1e-3;
  auto stable = [&](double e) { return numlin::is_hurwitz(assemble_closed_loop(design, e).error_dynamics.A); };
  // stable(e) for e and every halving of it down to the floor.
  auto stable_down = [&](double e) {
    for (double x = e; x >= kFloor; x *= 0.5) {
      if (!stable(x)) return false;
    }
    return stable(kFloor);
  };
  if (!stable(kFloor)) {
    throw Error(ErrorKind::kSynthesis, "NOT_STABILIZED", "closed loop is unstable even at eps = 1e-3");
  }
  if (stable_down(eps_hi)) return eps_hi;
  double lo = kFloor;
  double hi = eps_hi;
  while (hi - lo > kFloor) {
    const double mid = 0.5 * (lo + hi);
    if (stable_down(mid)) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return lo;
}

DisturbanceSpec DisturbanceSpec::zero(int n_agents) {
  DisturbanceSpec d;
  d.agents.resize(static_cast<std::size_t>(n_agents));
  return d;
}

Vector initial_state(const ClosedLoopSystem& cl, std::uint64_t seed) {
  Vector x0 = Vector::Zero(cl.full.states());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int i = 0; i < cl.agents(); ++i) {
    const auto off = cl.agent_offset[static_cast<std::size_t>(i)];
    for (Eigen::Index k = 0; k < cl.plant_states[static_cast<std::size_t>(i)]; ++k) x0[off + k] = unif(rng);
  }
  if (cl.exo_offset >= 0) x0.segment(cl.exo_offset, cl.exo_x0.size()) = cl.exo_x0;
  return x0;
}

namespace {

struct RandomChannel {
  Eigen::Index column;
  double bound;
  std::mt19937_64 rng;
};

bool is_multiple(double big, double small, long& ratio) {
  const double q = big / small;
  ratio = std::lround(q);
  return ratio >= 1 && std::abs(q - static_cast<double>(ratio)) <= 1e-9 * q;
}

}  // namespace

SimResult simulate(const ClosedLoopSystem& cl, const DisturbanceSpec& dist, const Vector& x0, double horizon,
                   double output_dt) {
  if (!(horizon > 0.0) || !(output_dt > 0.0)) throw contract_error("horizon and output_dt must be positive");
  if (static_cast<int>(dist.agents.size()) != cl.agents()) {
    throw dimension_error("disturbance spec needs one entry per agent");
  }
  const Eigen::Index n = cl.full.states();
  if (x0.size() != n) throw dimension_error("initial state has the wrong length");

  // Oscillator states for sinusoids (one pair per agent) and held channels.
  int n_osc = 0;
  std::vector<RandomChannel> held;
  double hold = 0.0;
  for (int i = 0; i < cl.agents(); ++i) {
    const auto& d = dist.agents[static_cast<std::size_t>(i)];
    using Kind = AgentDisturbance::Kind;
    if (d.kind == Kind::kSinusoid) {
      if (!(d.frequency >= 0.0)) throw contract_error("sinusoid frequency must be nonnegative");
      n_osc += 2;
    } else if (d.kind == Kind::kHeldRandom) {
      if (!(d.bound >= 0.0) || !(d.hold > 0.0)) throw contract_error("held-random needs bound >= 0 and hold > 0");
      if (hold != 0.0 && std::abs(hold - d.hold) > 1e-12 * hold) {
        throw contract_error("all held-random disturbances must share one hold interval");
      }
      hold = d.hold;
      const auto w = cl.disturbance_width[static_cast<std::size_t>(i)];
      for (Eigen::Index c = 0; c < w; ++c) {
        std::seed_seq seq{static_cast<std::uint32_t>(d.seed), static_cast<std::uint32_t>(d.seed >> 32),
                          static_cast<std::uint32_t>(c)};
        held.push_back(RandomChannel{cl.disturbance_offset[static_cast<std::size_t>(i)] + c, d.bound,
                                     std::mt19937_64(seq)});
      }
    }
  }
  double h = output_dt;
  long out_ratio = 1;
  long hold_ratio = 1;
  if (!held.empty()) {
    if (hold <= output_dt) {
      h = hold;
      if (!is_multiple(output_dt, hold, out_ratio)) {
        throw contract_error("output_dt must be a multiple of the hold interval");
      }
    } else {
      h = output_dt;
      if (!is_multiple(hold, output_dt, hold_ratio)) {
        throw contract_error("the hold interval must be a multiple of output_dt");
      }
    }
  }

  const Eigen::Index nh = static_cast<Eigen::Index>(held.size());
  const Eigen::Index na = n + n_osc;
  Matrix big = Matrix::Zero(na + nh, na + nh);
  big.topLeftCorner(n, n) = cl.full.A;
  Vector z0(na);
  z0.head(n) = x0;
  int osc = 0;
  for (int i = 0; i < cl.agents(); ++i) {
    const auto& d = dist.agents[static_cast<std::size_t>(i)];
    if (d.kind != AgentDisturbance::Kind::kSinusoid) continue;
    const Eigen::Index s = n + osc;
    const auto w = cl.disturbance_width[static_cast<std::size_t>(i)];
    const auto off = cl.disturbance_offset[static_cast<std::size_t>(i)];
    // s = a sin(f t + phi), c = a cos(f t + phi).
    big(s, s + 1) = d.frequency;
    big(s + 1, s) = -d.frequency;
    for (Eigen::Index ch = 0; ch < w; ++ch) big.block(0, s, n, 1) += cl.full.B.col(off + ch);
    z0[s] = d.amplitude * std::sin(d.phase);
    z0[s + 1] = d.amplitude * std::cos(d.phase);
    osc += 2;
  }
  for (Eigen::Index k = 0; k < nh; ++k) big.block(0, na + k, n, 1) = cl.full.B.col(held[static_cast<std::size_t>(k)].column);
  const Matrix step = numlin::expm(big, h);
  const Matrix phi = step.topLeftCorner(na, na);
  const Matrix gam = step.topRightCorner(na, nh);

  const long n_out = static_cast<long>(std::floor(horizon / output_dt + 1e-9));
  SimResult res;
  res.t.resize(static_cast<std::size_t>(n_out + 1));
  res.y.resize(n_out + 1, cl.outputs.rows());
  res.yr.resize(n_out + 1, cl.reference.rows());
  res.errors.resize(n_out + 1, cl.full.outputs());

  std::normal_distribution<double> normal(0.0, 1.0);
  Vector u = Vector::Zero(nh);
  Vector z = z0;
  long internal = 0;
  auto record = [&](long k) {
    const Vector x = z.head(n);
    res.t[static_cast<std::size_t>(k)] = static_cast<double>(k) * output_dt;
    res.y.row(k) = (cl.outputs * x).transpose();
    res.yr.row(k) = (cl.reference * x).transpose();
    res.errors.row(k) = (cl.full.C * x).transpose();
  };
  record(0);
  for (long k = 1; k <= n_out; ++k) {
    for (long s = 0; s < out_ratio; ++s, ++internal) {
      if (nh > 0 && internal % hold_ratio == 0) {
        for (Eigen::Index c = 0; c < nh; ++c) {
          auto& ch = held[static_cast<std::size_t>(c)];
          const double sample = normal(ch.rng) * ch.bound / 3.0;
          u[c] = std::clamp(sample, -ch.bound, ch.bound);
        }
      }
      z = phi * z + gam * u;
    }
    record(k);
  }

  // Tail metrics over the last 20% of the horizon.
  const double t_tail = 0.8 * horizon - 1e-12;
  double sum_sq = 0.0;
  long count = 0;
  const int p = cl.p;
  const int na_agents = cl.agents();
  for (long k = 0; k <= n_out; ++k) {
    if (res.t[static_cast<std::size_t>(k)] < t_tail) continue;
    ++count;
    sum_sq += res.errors.row(k).squaredNorm();
    for (int comp = 0; comp < p; ++comp) {
      if (cl.mode == SyncMode::kOutputSync) {
        double lo = std::numeric_limits<double>::infinity();
        double hi = -lo;
        for (int i = 0; i < na_agents; ++i) {
          lo = std::min(lo, res.y(k, i * p + comp));
          hi = std::max(hi, res.y(k, i * p + comp));
        }
        res.tail_max = std::max(res.tail_max, hi - lo);
      } else {
        for (int i = 0; i < na_agents; ++i) {
          res.tail_max = std::max(res.tail_max, std::abs(res.y(k, i * p + comp) - res.yr(k, comp)));
        }
      }
    }
  }
  res.tail_rms = count > 0 ? std::sqrt(sum_sq / static_cast<double>(count)) : 0.0;
  return res;
}

std::vector<SweepRow> epsilon_sweep(const NetworkDesign& design, const std::vector<double>& eps_list,
                                    const std::optional<SimSetup>& sim, double hinf_tol) {
  for (std::size_t k = 1; k < eps_list.size(); ++k) {
    if (!(eps_list[k] < eps_list[k - 1])) throw contract_error("eps_list must be sorted in strictly descending order");
  }
  auto run_row = [&design, &sim, hinf_tol](double eps) {
    SweepRow row;
    row.eps = eps;
    const auto cl = assemble_closed_loop(design, eps);
    row.abscissa = closed_loop_abscissa(cl);
    row.stable = numlin::is_hurwitz(cl.error_dynamics.A);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (!row.stable) {
      row.hinf = std::numeric_limits<double>::infinity();
      row.gamma_hat = row.hinf;
      row.tail_max = nan;
      row.tail_rms = nan;
      return row;
    }
    row.hinf = closed_loop_hinf(cl, hinf_tol);
    row.gamma_hat = row.hinf / eps;
    if (sim) {
      const auto res = simulate(cl, sim->disturbances, initial_state(cl, sim->seed), sim->horizon, sim->output_dt);
      row.tail_max = res.tail_max;
      row.tail_rms = res.tail_rms;
    } else {
      row.tail_max = nan;
      row.tail_rms = nan;
    }
    return row;
  };
  std::vector<std::future<SweepRow>> jobs;
  for (double eps : eps_list) jobs.push_back(std::async(std::launch::async, run_row, eps));
  std::vector<SweepRow> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

}  // namespace synctool::netsim
