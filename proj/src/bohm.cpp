#include "rnbohm/bohm.hpp"

#include <algorithm>
#include <cmath>

namespace rnbohm {

Timeline compute_timeline(const DiscreteHamiltonian& H, const CVec& x0, double dt, int n_steps,
                          int stride, SolverOptions opt) {
  if (n_steps < 0 || stride < 1) throw ConfigError("timeline: bad step count or stride");
  Timeline tl;
  tl.t0 = 0.0;
  tl.dt = dt * stride;
  CrankNicolson cn(H, dt, opt);
  CVec x = x0;
  tl.snaps.push_back(H.to_state(x, 0.0));
  for (int s = 1; s <= n_steps; ++s) {
    cn.step(x);
    if (s % stride == 0) tl.snaps.push_back(H.to_state(x, s * dt));
  }
  return tl;
}

FockState apply_time_reversal(const FockState& st) {
  const auto& d = dirac_matrices();
  const Mat4 U = d.alpha1 * d.alpha3;
  FockState out = st;
  out.sectors[0][0] = std::conj(st.sectors[0][0]);
  for (int n = 1; n <= st.n_max; ++n) {
    std::vector<cplx> v(st.sectors[n].size());
    for (std::size_t k = 0; k < v.size(); ++k) v[k] = std::conj(st.sectors[n][k]);
    for (int k = 1; k <= n; ++k) v = apply_on_factor(U, k, n, v);
    out.sectors[n] = std::move(v);
  }
  return out;
}

Timeline time_reversed(const Timeline& tl) {
  Timeline r;
  r.t0 = tl.t0;
  r.dt = tl.dt;
  const std::size_t S = tl.snaps.size();
  r.snaps.reserve(S);
  for (std::size_t s = 0; s < S; ++s) {
    FockState st = apply_time_reversal(tl.snaps[S - 1 - s]);
    st.time = tl.t0 + tl.dt * static_cast<double>(s);
    r.snaps.push_back(std::move(st));
  }
  return r;
}

Field::Field(const Timeline& tl, const SpatialGrid& grid, const Geometry& geo)
    : tl_(&tl), grid_(&grid), geo_(&geo) {
  if (tl.snaps.empty()) throw std::invalid_argument("Field: empty timeline");
}

void Field::corners(const Point& p, std::vector<Corner>& out) const {
  out.clear();
  const auto& g = *grid_;
  const int K = g.K(), nt = g.n_theta(), np = g.n_phi();
  // radial: nodes i, i+1; the wall at r_K carries zero
  const double u = p.r / g.dr();
  int i0 = static_cast<int>(std::floor(u));
  double fr = u - i0;
  if (i0 < 0) {
    i0 = 0;
    fr = 0.0;
  }
  double wr[2] = {1.0 - fr, fr};
  int ir[2] = {i0, i0 + 1};

  int jt[2] = {0, 0};
  double wt[2] = {1.0, 0.0};
  if (nt > 1) {
    if (p.theta <= g.theta(0)) {
      jt[0] = jt[1] = 0;
    } else if (p.theta >= g.theta(nt - 1)) {
      jt[0] = jt[1] = nt - 1;
    } else {
      int j = 0;
      while (j + 2 < nt && p.theta >= g.theta(j + 1)) ++j;
      const double f = (p.theta - g.theta(j)) / (g.theta(j + 1) - g.theta(j));
      jt[0] = j;
      jt[1] = j + 1;
      wt[0] = 1.0 - f;
      wt[1] = f;
    }
  }
  int kp[2] = {0, 0};
  double wp[2] = {1.0, 0.0};
  if (np > 1) {
    const double v = wrap_phi(p.phi) / (2.0 * kPi / np) - 0.5;
    const double fl = std::floor(v);
    const double f = v - fl;
    const int k0 = ((static_cast<int>(fl) % np) + np) % np;
    kp[0] = k0;
    kp[1] = (k0 + 1) % np;
    wp[0] = 1.0 - f;
    wp[1] = f;
  }
  for (int a = 0; a < 2; ++a) {
    if (ir[a] >= K || wr[a] == 0.0) continue;
    for (int b = 0; b < 2; ++b) {
      if (wt[b] == 0.0) continue;
      for (int c = 0; c < 2; ++c) {
        if (wp[c] == 0.0) continue;
        const std::size_t ang = static_cast<std::size_t>(jt[b]) * np + kp[c];
        out.push_back({g.site(ir[a], ang), wr[a] * wt[b] * wp[c]});
      }
    }
  }
}

std::vector<cplx> Field::gather(double t, std::span<const std::vector<Corner>> cs, int n) const {
  const auto& tl = *tl_;
  const std::size_t dim = spin_dim(n), ns = grid_->n_sites();
  double u = (t - tl.t0) / tl.dt;
  const double last = static_cast<double>(tl.snaps.size() - 1);
  u = std::clamp(u, 0.0, last);
  std::size_t s0 = static_cast<std::size_t>(std::floor(u));
  if (s0 >= tl.snaps.size() - 1) s0 = tl.snaps.size() > 1 ? tl.snaps.size() - 2 : 0;
  const double ft = tl.snaps.size() > 1 ? u - static_cast<double>(s0) : 0.0;
  const std::size_t s1 = tl.snaps.size() > 1 ? s0 + 1 : s0;

  std::vector<cplx> out(dim, cplx{});
  if (n == 0) {
    out[0] = (1.0 - ft) * tl.snaps[s0].sectors[0][0] + ft * tl.snaps[s1].sectors[0][0];
    return out;
  }
  const auto& v0 = tl.snaps[s0].sectors[n];
  const auto& v1 = tl.snaps[s1].sectors[n];
  std::vector<std::size_t> idx(n, 0);
  // odometer over corner tuples
  while (true) {
    double w = 1.0;
    std::size_t t_index = 0;
    for (int k = 0; k < n; ++k) {
      w *= cs[k][idx[k]].w;
      t_index = t_index * ns + cs[k][idx[k]].site;
    }
    const std::size_t off = t_index * dim;
    const double w0 = w * (1.0 - ft), w1 = w * ft;
    for (std::size_t c = 0; c < dim; ++c) out[c] += w0 * v0[off + c] + w1 * v1[off + c];
    int k = n - 1;
    while (k >= 0 && ++idx[k] == cs[k].size()) idx[k--] = 0;
    if (k < 0) break;
  }
  return out;
}

std::vector<cplx> Field::psi(double t, std::span<const Point> pts) const {
  const int n = static_cast<int>(pts.size());
  std::vector<std::vector<Corner>> cs(n);
  for (int k = 0; k < n; ++k) {
    corners(pts[k], cs[k]);
    if (cs[k].empty()) return std::vector<cplx>(spin_dim(n), cplx{});
  }
  return gather(t, cs, n);
}

std::vector<cplx> Field::boundary_psi(double t, std::span<const Point> q, std::size_t a) const {
  const int n = static_cast<int>(q.size()) + 1;
  std::vector<std::vector<Corner>> cs(n);
  for (int k = 0; k + 1 < n; ++k) {
    corners(q[k], cs[k]);
    if (cs[k].empty()) return std::vector<cplx>(spin_dim(n), cplx{});
  }
  cs[n - 1] = {{grid_->site(0, a), 1.0}};
  return gather(t, cs, n);
}

void reflect_chart(Point& p) {
  if (p.theta < 0.0) {
    p.theta = -p.theta;
    p.phi += kPi;
  } else if (p.theta > kPi) {
    p.theta = 2.0 * kPi - p.theta;
    p.phi += kPi;
  }
  p.theta = std::clamp(p.theta, 1e-12, kPi - 1e-12);
  p.phi = wrap_phi(p.phi);
}

Configuration deterministic_jump(const Configuration& q) {
  Configuration out;
  for (const auto& p : q.points)
    if (p.r > 0.0) out.points.push_back(p);
  return out;
}

MarkovProcess::MarkovProcess(const Field& f, ProcessOptions opt) : f_(&f), opt_(opt) {
  if (opt_.r_hit < 0.0) opt_.r_hit = 0.1 * f.grid().dr();
  if (opt_.r_birth < 0.0) opt_.r_birth = 0.2 * f.grid().dr();
}

std::vector<std::array<double, 3>> MarkovProcess::vel(const Configuration& q, double t) const {
  const auto psi = f_->psi(t, q.points);
  return velocity_from_spinor(f_->geometry(), psi, q.points, opt_.min_density);
}

bool MarkovProcess::rk4(const Configuration& q, double t, double h, Configuration& out) const {
  const std::size_t n = q.points.size();
  auto shifted = [&](const std::vector<std::array<double, 3>>& v, double s) {
    Configuration c = q;
    for (std::size_t k = 0; k < n; ++k) {
      c.points[k].r += s * v[k][0];
      c.points[k].theta += s * v[k][1];
      c.points[k].phi += s * v[k][2];
      if (c.points[k].r <= 0.0) c.points[k].r = 1e-12;
      reflect_chart(c.points[k]);
    }
    return c;
  };
  try {
    const auto k1 = vel(q, t);
    const auto k2 = vel(shifted(k1, 0.5 * h), t + 0.5 * h);
    const auto k3 = vel(shifted(k2, 0.5 * h), t + 0.5 * h);
    const auto k4 = vel(shifted(k3, h), t + h);
    out = q;
    for (std::size_t k = 0; k < n; ++k) {
      for (int c = 0; c < 3; ++c) {
        const double d = h / 6.0 * (k1[k][c] + 2.0 * k2[k][c] + 2.0 * k3[k][c] + k4[k][c]);
        if (c == 0) out.points[k].r += d;
        if (c == 1) out.points[k].theta += d;
        if (c == 2) out.points[k].phi += d;
      }
      if (out.points[k].r <= 0.0) out.points[k].r = 1e-12;
      reflect_chart(out.points[k]);
    }
  } catch (const Error&) {
    return false;
  }
  return true;
}

namespace {

double config_error(const Configuration& a, const Configuration& b) {
  double e = 0.0;
  for (std::size_t k = 0; k < a.points.size(); ++k) {
    e = std::max(e, std::abs(a.points[k].r - b.points[k].r));
    e = std::max(e, std::abs(a.points[k].theta - b.points[k].theta));
    double dphi = std::abs(a.points[k].phi - b.points[k].phi);
    dphi = std::min(dphi, 2.0 * kPi - dphi);
    e = std::max(e, dphi * std::sin(a.points[k].theta));
  }
  return e;
}

}  // namespace

// One accepted adaptive step from t toward t1; h is the proposed size on entry
// and the next proposal on exit.
bool MarkovProcess::substep(Configuration& q, double& t, double t1, double& h) const {
  while (true) {
    h = std::min(h, t1 - t);
    Configuration full, half, two;
    if (!rk4(q, t, h, full) || !rk4(q, t, 0.5 * h, half) ||
        !rk4(half, t + 0.5 * h, 0.5 * h, two)) {
      // a stage left the region where the velocity is defined
      if (h <= opt_.h_min) return false;
      h = std::max(0.25 * h, opt_.h_min);
      continue;
    }
    const double err = config_error(full, two) / 15.0;
    if (err <= opt_.rk_tol || h <= opt_.h_min) {
      q = two;
      t += h;
      const double grow = err > 0.0 ? 0.9 * std::pow(opt_.rk_tol / err, 0.2) : 4.0;
      h *= std::clamp(grow, 0.2, 4.0);
      return true;
    }
    h *= std::max(0.2, 0.9 * std::pow(opt_.rk_tol / err, 0.2));
  }
}

bool MarkovProcess::guide(Configuration& q, double t, double t1) const {
  double h = t1 - t;
  while (t < t1 - 1e-15) {
    if (q.points.empty()) return true;
    if (!substep(q, t, t1, h)) return false;
  }
  return true;
}

std::optional<MarkovProcess::Hit> MarkovProcess::detect_annihilation(const Configuration& q,
                                                                     double t) const {
  const auto& g = f_->grid();
  for (std::size_t k = 0; k < q.points.size(); ++k) {
    const Point& p = q.points[k];
    if (p.r > opt_.r_hit) continue;
    std::vector<Point> others;
    for (std::size_t l = 0; l < q.points.size(); ++l)
      if (l != k) others.push_back(q.points[l]);
    const std::size_t a = g.angular_cell(p.theta, p.phi);
    const auto b = f_->boundary_psi(t, others, a);
    const int n = q.sector();
    const double flux = slot_bilinear(b, n, n - 1, dirac_matrices().alpha1);
    if (flux <= 0.0) return Hit{k, t, a, flux};
  }
  return std::nullopt;
}

double MarkovProcess::hit_delay(const Configuration& q, std::size_t k, double t) const {
  // Remaining time to r = 0 from the small-r asymptote t(r) ~ r^3 / (3 e^2),
  // scaled by the local fraction of light speed.
  const auto psi = f_->psi(t, q.points);
  double norm = 0.0;
  for (const cplx& z : psi) norm += std::norm(z);
  double ratio = norm > 0.0 ? std::abs(slot_bilinear(psi, q.sector(), static_cast<int>(k),
                                                     dirac_matrices().alpha1)) / norm
                            : 1.0;
  ratio = std::max(ratio, 1e-3);
  const double r = q.points[k].r, e = f_->geometry().params().e;
  return r * r * r / (3.0 * e * e * ratio);
}

double MarkovProcess::creation_rate(const Configuration& q, double t, std::size_t a) const {
  const int n = q.sector() + 1;
  if (n > f_->n_max()) return 0.0;
  const auto lower = f_->psi(t, q.points);
  double den = 0.0;
  for (const cplx& z : lower) den += std::norm(z);
  double il = 1.0;
  for (const auto& p : q.points) il *= f_->geometry().inv_lambda(p.r);
  if (!(den * il >= opt_.min_density)) throw Error("creation rate undefined: density below threshold");
  const auto b = f_->boundary_psi(t, q.points, a);
  const double flux = slot_bilinear(b, n, n - 1, dirac_matrices().alpha1);
  return std::max(flux, 0.0) / den;
}

std::vector<double> MarkovProcess::cell_rates(const Configuration& q, double t) const {
  const auto& g = f_->grid();
  std::vector<double> r(g.n_angular(), 0.0);
  if (q.sector() + 1 > f_->n_max()) return r;
  for (std::size_t a = 0; a < r.size(); ++a) r[a] = g.omega(a) * creation_rate(q, t, a);
  return r;
}

std::optional<std::pair<double, std::size_t>> MarkovProcess::sample_creation(const Configuration& q,
                                                                            double t, double t1,
                                                                            Rng& rng) const {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  auto total_of = [](const std::vector<double>& r) {
    double s = 0.0;
    for (double x : r) s += x;
    return s;
  };
  double bound = opt_.bound_safety * std::max(total_of(cell_rates(q, t)), total_of(cell_rates(q, t1)));
  for (int attempt = 0; attempt <= opt_.max_retries; ++attempt) {
    if (bound <= 0.0) return std::nullopt;
    double s = t;
    bool violated = false;
    while (true) {
      s += -std::log(1.0 - u(rng)) / bound;
      if (s >= t1) return std::nullopt;
      const auto rates = cell_rates(q, s);
      const double total = total_of(rates);
      if (total > bound) {
        bound = opt_.bound_safety * total;
        violated = true;
        break;
      }
      if (u(rng) * bound < total) {
        std::discrete_distribution<std::size_t> pick(rates.begin(), rates.end());
        return std::make_pair(s, pick(rng));
      }
    }
    if (!violated) break;
  }
  throw Error("sample_creation: thinning bound violated repeatedly");
}

namespace {

enum class IntervalOutcome { done, bound_violated, absorbed };

}  // namespace

MarkovResult MarkovProcess::run(Configuration q, Rng& rng, std::span<const int> checkpoints) const {
  MarkovResult res;
  const auto& tl = f_->timeline();
  const auto& g = f_->grid();
  const int n_max = f_->n_max();
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t next_cp = 0;
  auto record_checkpoints = [&](std::size_t idx) {
    while (next_cp < checkpoints.size() && static_cast<std::size_t>(checkpoints[next_cp]) == idx) {
      res.checkpoints.push_back(q);
      ++next_cp;
    }
  };
  double h = tl.dt;
  double t = tl.t0;

  auto total_rate = [&](double when, std::vector<double>* cells) {
    auto r = cell_rates(q, when);
    double tot = 0.0;
    for (double x : r) tot += x;
    if (cells) *cells = std::move(r);
    return tot;
  };

  // Runs [t, t1]; on a bound violation returns the offending total in `seen`.
  auto interval = [&](double t1, double min_bound, double& seen) -> IntervalOutcome {
    double bound = 0.0;
    auto refresh = [&]() {
      bound = q.sector() >= n_max ? 0.0
                                  : std::max(opt_.bound_safety * total_rate(t, nullptr), min_bound);
    };
    auto propose = [&]() { return bound > 0.0 ? t - std::log(1.0 - u(rng)) / bound : t1 + 1.0; };
    try {
      refresh();
    } catch (const Error&) {
      return IntervalOutcome::absorbed;
    }
    double t_prop = propose();
    while (t < t1) {
      const double target = std::min(t_prop, t1);
      bool jumped = false;
      while (t < target) {
        if (q.points.empty()) {
          t = target;
          break;
        }
        if (!substep(q, t, target, h)) return IntervalOutcome::absorbed;
        if (target - t < 1e-14 * std::max(1.0, std::abs(target))) t = target;
        auto hit = detect_annihilation(q, t);
        if (!hit) continue;
        const double delay = std::min(hit_delay(q, hit->particle, t), t1 - t);
        Event ev;
        ev.kind = EventKind::annihilation;
        ev.theta = q.points[hit->particle].theta;
        ev.phi = q.points[hit->particle].phi;
        ev.cell = hit->cell;
        ev.flux = hit->flux;
        ev.sector_before = q.sector();
        q.points[hit->particle].r = 0.0;
        q = deterministic_jump(q);
        ev.sector_after = q.sector();
        t += delay;
        ev.t = t;
        res.events.push_back(std::move(ev));
        jumped = true;
        break;
      }
      if (jumped) {
        try {
          refresh();
        } catch (const Error&) {
          return IntervalOutcome::absorbed;
        }
        t_prop = propose();
        continue;
      }
      if (t_prop >= t1) break;
      std::vector<double> rates;
      double total = 0.0;
      try {
        total = total_rate(t, &rates);
      } catch (const Error&) {
        return IntervalOutcome::absorbed;
      }
      if (total > bound) {
        seen = total;
        return IntervalOutcome::bound_violated;
      }
      if (u(rng) * bound < total) {
        std::discrete_distribution<std::size_t> pick(rates.begin(), rates.end());
        const std::size_t a = pick(rng);
        const int j = static_cast<int>(a) / g.n_phi(), k = static_cast<int>(a) % g.n_phi();
        Event ev;
        ev.kind = EventKind::creation;
        ev.t = t;
        ev.cell = a;
        ev.sector_before = q.sector();
        ev.cell_probs.resize(rates.size());
        for (std::size_t c = 0; c < rates.size(); ++c) ev.cell_probs[c] = rates[c] / total;
        const auto b = f_->boundary_psi(t, q.points, a);
        ev.flux = slot_bilinear(b, q.sector() + 1, q.sector(), dirac_matrices().alpha1);
        Point p;
        p.r = opt_.r_birth;
        const double c = g.cell_cos_lo(j) + u(rng) * (g.cell_cos_hi(j) - g.cell_cos_lo(j));
        p.theta = std::clamp(std::acos(std::clamp(c, -1.0, 1.0)), 1e-12, kPi - 1e-12);
        p.phi = 2.0 * kPi * (k + u(rng)) / g.n_phi();
        ev.theta = p.theta;
        ev.phi = p.phi;
        q.points.push_back(p);
        ev.sector_after = q.sector();
        res.events.push_back(std::move(ev));
        if (q.sector() >= n_max) ++res.truncation_hits;
        try {
          refresh();
        } catch (const Error&) {
          return IntervalOutcome::absorbed;
        }
      }
      t_prop = propose();
    }
    return IntervalOutcome::done;
  };

  record_checkpoints(0);
  for (std::size_t s = 1; s < tl.snaps.size(); ++s) {
    const double t1 = tl.t0 + tl.dt * static_cast<double>(s);
    const Configuration q_start = q;
    const double t_start = t, h_start = h;
    const std::size_t n_start = res.events.size();
    double min_bound = 0.0;
    for (int attempt = 0;; ++attempt) {
      double seen = 0.0;
      const auto outcome = interval(t1, min_bound, seen);
      if (outcome == IntervalOutcome::done) break;
      if (outcome == IntervalOutcome::absorbed) {
        Event ev;
        ev.t = t;
        ev.kind = EventKind::absorption;
        ev.sector_before = ev.sector_after = q.sector();
        res.events.push_back(ev);
        res.absorbed = true;
        return res;
      }
      if (attempt >= opt_.max_retries) throw Error("thinning bound violated repeatedly");
      ++res.bound_retries;
      q = q_start;
      t = t_start;
      h = h_start;
      res.events.resize(n_start);
      min_bound = opt_.bound_safety * seen;
    }
    t = t1;
    record_checkpoints(s);
  }
  return res;
}

double bell_rate(const DiscreteHamiltonian& H, const FockState& st,
                 std::span<const std::size_t> q_from, std::size_t a) {
  const auto& g = H.grid();
  const int n = static_cast<int>(q_from.size()) + 1;
  if (n > H.n_max()) return 0.0;
  const std::size_t low = spin_dim(n - 1);
  const std::size_t off = pack_tuple(q_from, g.n_sites()) * low;
  const auto& lower = st.sectors[n - 1];
  double den = 0.0;
  for (std::size_t c = 0; c < low; ++c) den += std::norm(lower[off + c]);
  if (!(den > 0.0)) throw Error("bell_rate: zero denominator");
  const auto tr = boundary_trace(g, st, q_from, a);
  const Spinor dif = H.profile().plus[a] - H.profile().minus[a];
  // <(q',a)|H_I|q'> = conj(coefficient) Omega_a (phi+ - phi-)(a)
  const cplx k = std::conj(H.hi_coefficient()) * g.omega(a);
  cplx acc{};
  for (std::size_t c = 0; c < low; ++c)
    for (int d = 0; d < 4; ++d) acc += std::conj(tr[c * 4 + d]) * k * dif(d) * lower[off + c];
  return std::max(0.0, 2.0 / H.hbar() * acc.imag()) / den;
}

std::vector<MarkovResult> run_ensemble(const MarkovProcess& proc, const ConfigurationSampler& init,
                                       std::size_t n_traj, std::uint64_t seed,
                                       std::span<const int> checkpoints) {
  std::vector<MarkovResult> out(n_traj);
  std::vector<std::string> errors(n_traj);
#pragma omp parallel for schedule(dynamic, 16)
  for (long long i = 0; i < static_cast<long long>(n_traj); ++i) {
    Rng rng = make_rng(seed, static_cast<std::uint64_t>(i));
    try {
      Configuration q0 = init.draw(rng);
      out[i] = proc.run(std::move(q0), rng, checkpoints);
    } catch (const std::exception& ex) {
      errors[i] = ex.what();
    }
  }
  for (const auto& e : errors)
    if (!e.empty()) throw Error("ensemble: " + e);
  return out;
}

}  // namespace rnbohm
