//! Weighted proportional-fair joint power/bandwidth allocation.
//!
//! Solves
//!
//! ```text
//! maximize   sum_i phi_i * ln(r_i),   r_i = w_i * log2(1 + p_i / (n_i * w_i))
//! subject to r_i >= r_min_i,  sum p_i <= P',  sum w_i <= W',  p, w >= 0
//! ```
//!
//! The rate is the perspective of a concave function, so the problem is
//! jointly concave. With prices `lambda` (power) and `mu = rho * lambda`
//! (bandwidth) every user operates at the power spectral density `x_i` that
//! minimizes its cost per bit, which depends on `rho` only:
//!
//! ```text
//! rho / n_i = (1 + e) ln(1 + e) - e,    x_i = n_i * e
//! ```
//!
//! Given `rho`, the bandwidth budget fixes `lambda` in closed form (users
//! whose unconstrained rate falls under `r_min` are pinned to it), and the
//! outer search moves `rho` until the power budget is met.

use std::f64::consts::LN_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum PfError {
    #[error("malformed problem: {0}")]
    Malformed(String),
    #[error("problem text line {line}: {msg}")]
    Parse { line: usize, msg: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PfUser {
    pub phi: f64,
    /// Effective noise `N0 / (beta h)`, W/Hz.
    pub noise: f64,
    /// Rate floor, bps; zero when unconstrained.
    pub min_rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PfProblem {
    pub users: Vec<PfUser>,
    /// Power budget `P'`, W.
    pub power: f64,
    /// Bandwidth budget `W'`, Hz.
    pub bandwidth: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PfGrant {
    pub power: f64,
    pub bandwidth: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PfStatus {
    Optimal,
    Infeasible,
    /// Iteration cap reached; the grants are the best feasible iterate.
    Degraded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PfSolution {
    pub grants: Vec<PfGrant>,
    pub power_price: f64,
    pub bandwidth_price: f64,
    /// Multipliers of the rate floors (zero when slack).
    pub rate_prices: Vec<f64>,
    pub status: PfStatus,
    pub iterations: usize,
}

impl PfSolution {
    fn empty(n: usize, status: PfStatus) -> Self {
        Self {
            grants: vec![PfGrant::default(); n],
            power_price: 0.0,
            bandwidth_price: 0.0,
            rate_prices: vec![0.0; n],
            status,
            iterations: 0,
        }
    }

    pub fn total_power(&self) -> f64 {
        self.grants.iter().map(|g| g.power).sum()
    }

    pub fn total_bandwidth(&self) -> f64 {
        self.grants.iter().map(|g| g.bandwidth).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSettings {
    /// Relative tolerance on the power budget residual.
    pub tolerance: f64,
    pub max_outer: usize,
    pub max_inner: usize,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-12,
            max_outer: 200,
            max_inner: 100,
        }
    }
}

/// `w * log2(1 + p / (n w))`, zero for zero bandwidth.
#[inline]
pub fn pf_rate(noise: f64, power: f64, bandwidth: f64) -> f64 {
    if bandwidth <= 0.0 || power <= 0.0 {
        return 0.0;
    }
    bandwidth * (power / (noise * bandwidth)).ln_1p() / LN_2
}

impl PfProblem {
    pub fn validate(&self) -> Result<(), PfError> {
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(PfError::Malformed(format!(
                "power budget must be > 0, got {}",
                self.power
            )));
        }
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(PfError::Malformed(format!(
                "bandwidth budget must be > 0, got {}",
                self.bandwidth
            )));
        }
        for (i, u) in self.users.iter().enumerate() {
            if !(u.phi > 0.0 && u.phi.is_finite()) {
                return Err(PfError::Malformed(format!("user {i}: phi must be > 0")));
            }
            if !(u.noise > 0.0 && u.noise.is_finite()) {
                return Err(PfError::Malformed(format!("user {i}: noise must be > 0")));
            }
            if !(u.min_rate >= 0.0 && u.min_rate.is_finite()) {
                return Err(PfError::Malformed(format!("user {i}: min_rate must be >= 0")));
            }
        }
        Ok(())
    }

    /// `sum phi_i ln(r_i)` for the given grants; `-inf` if any rate is zero.
    pub fn objective(&self, grants: &[PfGrant]) -> f64 {
        self.users
            .iter()
            .zip(grants)
            .map(|(u, g)| {
                let r = pf_rate(u.noise, g.power, g.bandwidth);
                if r > 0.0 {
                    u.phi * r.ln()
                } else {
                    f64::NEG_INFINITY
                }
            })
            .sum()
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PfProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "# pf-problem v1")?;
        writeln!(f, "power {:e}", self.power)?;
        writeln!(f, "bandwidth {:e}", self.bandwidth)?;
        for u in &self.users {
            writeln!(f, "user {:e} {:e} {:e}", u.phi, u.noise, u.min_rate)?;
        }
        Ok(())
    }
}

impl FromStr for PfProblem {
    type Err = PfError;

    /// Parses the line format written by `Display`: `power P`, `bandwidth W`
    /// and one `user phi noise min_rate` line per user; `#` starts a comment.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut power = None;
        let mut bandwidth = None;
        let mut users = Vec::new();
        for (idx, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: &str| PfError::Parse {
                line: idx + 1,
                msg: msg.to_string(),
            };
            let mut parts = line.split_whitespace();
            let key = parts.next().unwrap_or_default();
            let nums = parts
                .map(|p| p.parse::<f64>().map_err(|_| err(&format!("bad number {p:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            match (key, nums.as_slice()) {
                ("power", [p]) => power = Some(*p),
                ("bandwidth", [w]) => bandwidth = Some(*w),
                ("user", [phi, noise, min_rate]) => users.push(PfUser {
                    phi: *phi,
                    noise: *noise,
                    min_rate: *min_rate,
                }),
                _ => return Err(err(&format!("unexpected line {line:?}"))),
            }
        }
        let problem = PfProblem {
            users,
            power: power.ok_or(PfError::Parse {
                line: 0,
                msg: "missing power".into(),
            })?,
            bandwidth: bandwidth.ok_or(PfError::Parse {
                line: 0,
                msg: "missing bandwidth".into(),
            })?,
        };
        problem.validate()?;
        Ok(problem)
    }
}

const NEWTON_CAP: usize = 100;

/// `(1 + e) ln(1 + e) - e`, accurate near zero.
fn knee(e: f64) -> f64 {
    if e < 1e-3 {
        let e2 = e * e;
        e2 * (0.5 - e * (1.0 / 6.0 - e * (1.0 / 12.0 - e * (1.0 / 20.0 - e / 30.0))))
    } else {
        (1.0 + e) * e.ln_1p() - e
    }
}

/// Inverse of [`knee`] on `e >= 0`. The function is convex and increasing,
/// so Newton started right of the root descends monotonically onto it.
fn knee_inverse(t: f64, max_iter: usize) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    // knee(e) <= e^2 / 2 for all e >= 0, so sqrt(2t) is a lower bound.
    let mut hi = (2.0 * t).sqrt();
    while knee(hi) < t {
        hi *= 2.0;
    }
    let mut e = hi;
    for _ in 0..max_iter {
        let step = (knee(e) - t) / e.ln_1p();
        if !step.is_finite() || step <= 0.0 {
            break;
        }
        let next = e - step;
        if next >= e || step <= e * 1e-16 {
            e = next.max(0.0);
            break;
        }
        e = next;
    }
    e
}

/// Per-user operating point at bandwidth/power price ratio `rho`.
struct Operating {
    /// power spectral density
    x: Vec<f64>,
    /// spectral efficiency, bps/Hz
    se: Vec<f64>,
}

fn operating_points(users: &[PfUser], rho: f64, max_iter: usize) -> Operating {
    let mut x = Vec::with_capacity(users.len());
    let mut se = Vec::with_capacity(users.len());
    for u in users {
        let e = knee_inverse(rho / u.noise, max_iter);
        x.push(u.noise * e);
        se.push(e.ln_1p() / LN_2);
    }
    Operating { x, se }
}

struct Evaluation {
    rho: f64,
    lambda: f64,
    bandwidths: Vec<f64>,
    op: Operating,
    total_power: f64,
}

/// Given `rho`, solves `sum_i max(a_i / lambda, b_i) = W'` for `lambda`.
/// `None` when the pinned users alone need more than `W'`.
fn evaluate(problem: &PfProblem, rho: f64, max_inner: usize) -> Option<Evaluation> {
    let op = operating_points(&problem.users, rho, max_inner);
    let n = problem.users.len();
    let a: Vec<f64> = (0..n).map(|i| problem.users[i].phi / (op.x[i] + rho)).collect();
    let b: Vec<f64> = (0..n)
        .map(|i| {
            let u = &problem.users[i];
            if u.min_rate > 0.0 {
                u.min_rate / op.se[i]
            } else {
                0.0
            }
        })
        .collect();
    let pinned_total: f64 = b.iter().sum();
    if !(pinned_total < problem.bandwidth) {
        return None;
    }
    // Users leave the pinned set as lambda decreases, largest breakpoint first.
    let mut order: Vec<usize> = (0..n).filter(|&i| b[i] > 0.0).collect();
    order.sort_by(|&i, &j| (a[j] / b[j]).total_cmp(&(a[i] / b[i])).then(i.cmp(&j)));
    let mut free_a: f64 = (0..n).filter(|&i| b[i] == 0.0).map(|i| a[i]).sum();
    let mut pinned_b = pinned_total;
    let mut next = 0;
    let lambda = loop {
        let candidate = free_a / (problem.bandwidth - pinned_b);
        match order.get(next) {
            Some(&i) if candidate < a[i] / b[i] || free_a == 0.0 => {
                free_a += a[i];
                pinned_b -= b[i];
                next += 1;
            }
            _ => break candidate,
        }
    };
    let bandwidths: Vec<f64> = (0..n).map(|i| (a[i] / lambda).max(b[i])).collect();
    let total_power = (0..n).map(|i| op.x[i] * bandwidths[i]).sum();
    Some(Evaluation {
        rho,
        lambda,
        bandwidths,
        op,
        total_power,
    })
}

/// Outcome of [`search_log`]: the last evaluated points on each side of the
/// root, with their residuals.
struct Search<T> {
    below: Option<(f64, T)>,
    above: Option<(f64, T)>,
    iterations: usize,
    converged: bool,
}

impl<T> Search<T> {
    /// The side with the smaller residual magnitude.
    fn closest(self) -> Option<(f64, T)> {
        match (self.below, self.above) {
            (Some(b), Some(a)) => Some(if a.0.abs() <= b.0.abs() { a } else { b }),
            (b, a) => a.or(b),
        }
    }
}

/// Root of an increasing residual in `ln(arg)`, by Illinois false position
/// once bracketed (bisection while the lower end is infeasible).
/// `eval` returns `None` for points below the domain of the residual.
fn search_log<T, F>(mut eval: F, start: f64, tol: f64, max_iter: usize) -> Search<T>
where
    F: FnMut(f64) -> Option<(f64, T)>,
{
    let mut out = Search {
        below: None,
        above: None,
        iterations: 0,
        converged: false,
    };
    // Bracket ends in log space; -inf residual marks an infeasible lower end.
    let mut lo: Option<(f64, f64)> = None;
    let mut hi: Option<(f64, f64)> = None;
    let mut probe = |s: f64, out: &mut Search<T>| -> f64 {
        out.iterations += 1;
        match eval(s.exp()) {
            Some((r, v)) if r >= 0.0 => {
                out.above = Some((r, v));
                r
            }
            Some((r, v)) => {
                out.below = Some((r, v));
                r
            }
            None => f64::NEG_INFINITY,
        }
    };

    let s0 = start.ln();
    let r0 = probe(s0, &mut out);
    if r0.abs() <= tol {
        out.converged = true;
        return out;
    }
    if r0 >= 0.0 {
        hi = Some((s0, r0));
    } else {
        lo = Some((s0, r0));
    }
    let mut step = 1.0;
    while out.iterations < max_iter {
        let s = match (lo, hi) {
            (Some(_), Some(_)) => break,
            (Some((s, _)), None) => s + step,
            (None, Some((s, _))) => s - step,
            (None, None) => unreachable!(),
        };
        step *= 2.0;
        let r = probe(s, &mut out);
        if r.abs() <= tol {
            out.converged = true;
            return out;
        }
        if r >= 0.0 {
            hi = Some((s, r));
        } else {
            lo = Some((s, r));
        }
    }
    let (Some(mut lo), Some(mut hi)) = (lo, hi) else {
        return out;
    };

    // Illinois: halve the stale end's residual when the same end moves twice.
    let mut last_side = 0i8;
    let (mut f_lo, mut f_hi) = (lo.1, hi.1);
    while out.iterations < max_iter {
        if hi.0 - lo.0 <= 4.0 * f64::EPSILON * (1.0 + lo.0.abs().max(hi.0.abs())) {
            out.converged = true;
            break;
        }
        let mid = 0.5 * (lo.0 + hi.0);
        let s = if f_lo.is_finite() {
            let t = lo.0 - f_lo * (hi.0 - lo.0) / (f_hi - f_lo);
            if t > lo.0 && t < hi.0 {
                t
            } else {
                mid
            }
        } else {
            mid
        };
        let r = probe(s, &mut out);
        if r.abs() <= tol {
            out.converged = true;
            break;
        }
        if r >= 0.0 {
            hi = (s, r);
            f_hi = r;
            if last_side == 1 {
                f_lo *= 0.5;
            }
            last_side = 1;
        } else {
            lo = (s, r);
            f_lo = r;
            if last_side == -1 {
                f_hi *= 0.5;
            }
            last_side = -1;
        }
    }
    out
}

/// Minimum total power meeting every rate floor within `W'`.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility {
    pub feasible: bool,
    pub min_power_needed: f64,
    /// Per-user share of `min_power_needed` (zero for unconstrained users).
    pub per_user_power: Vec<f64>,
}

pub fn feasibility_check(problem: &PfProblem) -> Feasibility {
    let n = problem.users.len();
    let constrained: Vec<usize> = (0..n).filter(|&i| problem.users[i].min_rate > 0.0).collect();
    if constrained.is_empty() {
        return Feasibility {
            feasible: true,
            min_power_needed: 0.0,
            per_user_power: vec![0.0; n],
        };
    }
    // At the optimum every constrained user sees the same marginal power per
    // Hz, mu = n_i * knee(e_i); total bandwidth shrinks as mu grows.
    let split = |mu: f64| -> (f64, Vec<f64>) {
        let mut total_w = 0.0;
        let mut powers = vec![0.0; n];
        for &i in &constrained {
            let u = &problem.users[i];
            let e = knee_inverse(mu / u.noise, NEWTON_CAP);
            let w = u.min_rate / (e.ln_1p() / LN_2);
            total_w += w;
            powers[i] = u.noise * e * w;
        }
        (total_w, powers)
    };
    let search = search_log(
        |mu| {
            let (w, powers) = split(mu);
            w.is_finite().then(|| ((problem.bandwidth / w).ln(), powers))
        },
        problem.power / problem.bandwidth,
        1e-13,
        400,
    );
    // Prefer the side that fits in W'.
    let per_user_power = match search.above {
        Some((_, p)) => p,
        None => search.below.map(|(_, p)| p).unwrap_or_else(|| vec![f64::INFINITY; n]),
    };
    let min_power_needed: f64 = per_user_power.iter().sum();
    Feasibility {
        feasible: min_power_needed <= problem.power * (1.0 + 1e-9),
        min_power_needed,
        per_user_power,
    }
}

fn solution_from(problem: &PfProblem, ev: &Evaluation, status: PfStatus, iterations: usize) -> PfSolution {
    let n = problem.users.len();
    let mut grants = Vec::with_capacity(n);
    let mut rate_prices = Vec::with_capacity(n);
    for i in 0..n {
        let u = &problem.users[i];
        let w = ev.bandwidths[i];
        let p = ev.op.x[i] * w;
        let rate = w * ev.op.se[i];
        grants.push(PfGrant {
            power: p,
            bandwidth: w,
            rate,
        });
        let marginal = ev.lambda * (u.noise + ev.op.x[i]) * LN_2;
        let nu = if u.min_rate > 0.0 {
            (marginal - u.phi / rate).max(0.0)
        } else {
            0.0
        };
        rate_prices.push(nu);
    }
    PfSolution {
        grants,
        power_price: ev.lambda,
        bandwidth_price: ev.lambda * ev.rho,
        rate_prices,
        status,
        iterations,
    }
}

pub fn solve(problem: &PfProblem, settings: &SolverSettings) -> Result<PfSolution, PfError> {
    problem.validate()?;
    let n = problem.users.len();
    if n == 0 {
        return Ok(PfSolution::empty(0, PfStatus::Optimal));
    }
    if !feasibility_check(problem).feasible {
        return Ok(PfSolution::empty(n, PfStatus::Infeasible));
    }
    let target = problem.power;
    let search = search_log(
        |rho| evaluate(problem, rho, settings.max_inner).map(|ev| ((ev.total_power / target).ln(), ev)),
        problem.power / problem.bandwidth,
        settings.tolerance,
        settings.max_outer,
    );
    let (iterations, converged) = (search.iterations, search.converged);
    // Unconverged: keep the feasible (under-budget) side when there is one.
    let pick = if converged {
        search.closest()
    } else {
        search.below.or(search.above)
    };
    let Some((_, ev)) = pick else {
        return Ok(PfSolution::empty(n, PfStatus::Degraded));
    };
    let status = if converged {
        PfStatus::Optimal
    } else {
        PfStatus::Degraded
    };
    let mut sol = solution_from(problem, &ev, status, iterations);
    if ev.total_power > target {
        // Over budget by at most the tolerance (or unbracketed); scale down.
        let scale = target / ev.total_power;
        for (g, u) in sol.grants.iter_mut().zip(&problem.users) {
            g.power *= scale;
            g.rate = pf_rate(u.noise, g.power, g.bandwidth);
        }
    }
    Ok(sol)
}

/// Largest relative violation of the KKT conditions at `sol`: stationarity
/// in `p` and `w`, budget complementary slackness, and the rate floors.
pub fn kkt_residual(problem: &PfProblem, sol: &PfSolution) -> f64 {
    let lambda = sol.power_price;
    let mu = sol.bandwidth_price;
    let mut worst: f64 = 0.0;
    for (i, (u, g)) in problem.users.iter().zip(&sol.grants).enumerate() {
        if g.bandwidth <= 0.0 {
            worst = worst.max(1.0);
            continue;
        }
        let x = g.power / g.bandwidth;
        let rate = pf_rate(u.noise, g.power, g.bandwidth);
        let dr_dp = 1.0 / ((u.noise + x) * LN_2);
        let dr_dw = (x / u.noise).ln_1p() / LN_2 - x / ((u.noise + x) * LN_2);
        let m = u.phi / rate + sol.rate_prices[i];
        worst = worst.max((m * dr_dp - lambda).abs() / lambda);
        worst = worst.max((m * dr_dw - mu).abs() / mu);
        if u.min_rate > 0.0 {
            worst = worst.max((u.min_rate - rate).max(0.0) / u.min_rate);
            // nu > 0 only on a binding floor
            let slack = (rate - u.min_rate) / u.min_rate;
            worst = worst.max(sol.rate_prices[i] * slack / m);
        }
    }
    let p_slack = (problem.power - sol.total_power()) / problem.power;
    let w_slack = (problem.bandwidth - sol.total_bandwidth()) / problem.bandwidth;
    worst = worst.max(p_slack.abs()).max(w_slack.abs());
    worst
}

/// Exhaustive search over the `grid_points`-per-axis simplex grid of power
/// and bandwidth splits (at most four users). Returns the best grid point
/// meeting every rate floor, or status `Infeasible` if none does.
///
/// Implemented as a max-plus convolution over users so that every grid
/// point is still visited, without enumerating the Cartesian product.
pub fn brute_force_oracle(problem: &PfProblem, grid_points: usize) -> Result<PfSolution, PfError> {
    problem.validate()?;
    let k = problem.users.len();
    if k == 0 || k > 4 {
        return Err(PfError::Malformed(format!("oracle supports 1..=4 users, got {k}")));
    }
    let g = grid_points;
    let side = g + 1;
    let dp = problem.power / g as f64;
    let dw = problem.bandwidth / g as f64;
    let tables: Vec<Vec<f64>> = problem
        .users
        .iter()
        .map(|u| {
            let mut t = vec![f64::NEG_INFINITY; side * side];
            for a in 1..side {
                for b in 1..side {
                    let r = pf_rate(u.noise, a as f64 * dp, b as f64 * dw);
                    if r > 0.0 && r >= u.min_rate {
                        t[a * side + b] = u.phi * r.ln();
                    }
                }
            }
            t
        })
        .collect();

    // Groups of users whose tables get merged before the final split.
    let (left, right): (Vec<usize>, Vec<usize>) = match k {
        1 => (vec![0], vec![]),
        2 => (vec![0], vec![1]),
        3 => (vec![0, 1], vec![2]),
        _ => (vec![0, 1], vec![2, 3]),
    };
    let merge = |ids: &[usize]| -> Vec<f64> {
        if ids.len() == 1 {
            tables[ids[0]].clone()
        } else {
            max_plus(&tables[ids[0]], &tables[ids[1]], side)
        }
    };

    let mut best = (f64::NEG_INFINITY, 0usize, 0usize);
    if right.is_empty() {
        best = (tables[0][g * side + g], g, g);
    } else {
        let l = merge(&left);
        let r = merge(&right);
        for a in 0..side {
            for b in 0..side {
                let v = l[a * side + b] + r[(g - a) * side + (g - b)];
                if v > best.0 {
                    best = (v, a, b);
                }
            }
        }
    }
    if !best.0.is_finite() {
        return Ok(PfSolution::empty(k, PfStatus::Infeasible));
    }

    // Recover per-user units.
    let mut units = vec![(0usize, 0usize); k];
    let split_pair = |i: usize, j: usize, a_tot: usize, b_tot: usize| -> ((usize, usize), (usize, usize)) {
        let (ti, tj) = (&tables[i], &tables[j]);
        let mut arg = (f64::NEG_INFINITY, 0, 0);
        for a in 0..=a_tot {
            for b in 0..=b_tot {
                let v = ti[a * side + b] + tj[(a_tot - a) * side + (b_tot - b)];
                if v > arg.0 {
                    arg = (v, a, b);
                }
            }
        }
        ((arg.1, arg.2), (a_tot - arg.1, b_tot - arg.2))
    };
    let (a_l, b_l) = (best.1, best.2);
    let (a_r, b_r) = (g - a_l, g - b_l);
    match k {
        1 => units[0] = (g, g),
        2 => {
            units[0] = (a_l, b_l);
            units[1] = (a_r, b_r);
        }
        3 => {
            let (u0, u1) = split_pair(0, 1, a_l, b_l);
            units[0] = u0;
            units[1] = u1;
            units[2] = (a_r, b_r);
        }
        _ => {
            let (u0, u1) = split_pair(0, 1, a_l, b_l);
            let (u2, u3) = split_pair(2, 3, a_r, b_r);
            units = vec![u0, u1, u2, u3];
        }
    }
    let grants = problem
        .users
        .iter()
        .zip(&units)
        .map(|(u, &(a, b))| {
            let (p, w) = (a as f64 * dp, b as f64 * dw);
            PfGrant {
                power: p,
                bandwidth: w,
                rate: pf_rate(u.noise, p, w),
            }
        })
        .collect();
    Ok(PfSolution {
        grants,
        power_price: 0.0,
        bandwidth_price: 0.0,
        rate_prices: vec![0.0; k],
        status: PfStatus::Optimal,
        iterations: 0,
    })
}

/// `c[A][B] = max_{a<=A, b<=B} x[a][b] + y[A-a][B-b]` over a `side x side` grid.
fn max_plus(x: &[f64], y: &[f64], side: usize) -> Vec<f64> {
    // Row-reversed copy of y so the inner loop walks both rows forward.
    let mut y_rev = vec![f64::NEG_INFINITY; side * side];
    for a in 0..side {
        for b in 0..side {
            y_rev[a * side + (side - 1 - b)] = y[a * side + b];
        }
    }
    let mut c = vec![f64::NEG_INFINITY; side * side];
    for big_a in 0..side {
        for a in 0..=big_a {
            let xr = &x[a * side..(a + 1) * side];
            let yr = &y_rev[(big_a - a) * side..(big_a - a + 1) * side];
            let cr = &mut c[big_a * side..(big_a + 1) * side];
            for big_b in 0..side {
                // y[B-b] = y_rev[side-1-B+b]
                let off = side - 1 - big_b;
                let xs = &xr[..=big_b];
                let ys = &yr[off..off + big_b + 1];
                let mut m = [f64::NEG_INFINITY; 4];
                let chunks = xs.len() / 4;
                for ch in 0..chunks {
                    for l in 0..4 {
                        let v = xs[ch * 4 + l] + ys[ch * 4 + l];
                        if v > m[l] {
                            m[l] = v;
                        }
                    }
                }
                for t in chunks * 4..xs.len() {
                    let v = xs[t] + ys[t];
                    if v > m[0] {
                        m[0] = v;
                    }
                }
                let best = m[0].max(m[1]).max(m[2].max(m[3]));
                if best > cr[big_b] {
                    cr[big_b] = best;
                }
            }
        }
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn user(noise: f64, phi: f64, min_rate: f64) -> PfUser {
        PfUser { phi, noise, min_rate }
    }

    #[test]
    fn knee_inverse_roundtrip() {
        for &t in &[1e-20, 1e-12, 1e-6, 1e-3, 0.1, 1.0, 10.0, 1e3, 1e6, 1e9] {
            let e = knee_inverse(t, NEWTON_CAP);
            assert!((knee(e) / t - 1.0).abs() < 1e-10, "t={t} e={e} knee={}", knee(e));
        }
        assert_eq!(knee_inverse(0.0, NEWTON_CAP), 0.0);
        // series and closed form agree at the switch point
        let e = 1e-3;
        let closed = (1.0 + e) * f64::ln_1p(e) - e;
        assert!((knee(e) / closed - 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_two_users_split_evenly() {
        let p = PfProblem {
            users: vec![user(1e-6, 1.0, 0.0), user(1e-6, 1.0, 0.0)],
            power: 2.0,
            bandwidth: 2e6,
        };
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, PfStatus::Optimal);
        for g in &s.grants {
            assert!((g.power - 1.0).abs() < 1e-9, "{g:?}");
            assert!((g.bandwidth - 1e6).abs() < 1e-3, "{g:?}");
        }
        assert!(kkt_residual(&p, &s) < 1e-6);
    }

    #[test]
    fn single_user_takes_everything() {
        let p = PfProblem {
            users: vec![user(3e-9, 2.0, 0.0)],
            power: 7.0,
            bandwidth: 3e6,
        };
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert!((s.grants[0].power - 7.0).abs() < 1e-9);
        assert!((s.grants[0].bandwidth - 3e6).abs() < 1e-3);
        let o = brute_force_oracle(&p, 50).unwrap();
        assert!((o.grants[0].power - 7.0).abs() < 1e-12);
        assert!((o.grants[0].bandwidth - 3e6).abs() < 1e-6);
    }

    #[test]
    fn three_user_example_against_grid() {
        let p = PfProblem {
            users: vec![user(1e-13, 2.0, 0.0), user(1e-12, 1.0, 0.0), user(1e-11, 1.0, 500e3)],
            power: 10.0,
            bandwidth: 5e6,
        };
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, PfStatus::Optimal);
        let o = brute_force_oracle(&p, 200).unwrap();
        let (fs, fo) = (p.objective(&s.grants), p.objective(&o.grants));
        assert!(fs >= fo - 1e-9 * fo.abs(), "{fs} < {fo}");
        assert!((fs - fo) / fs.abs() < 5e-3);
        assert!(kkt_residual(&p, &s) < 1e-6);
        assert!(s.grants[2].rate >= 500e3 * (1.0 - 1e-6));
    }

    #[test]
    fn binding_floor_is_met_with_equality() {
        // Weak user with a floor it would not get unconstrained.
        let p = PfProblem {
            users: vec![user(1e-12, 1.0, 0.0), user(1e-5, 1.0, 1e6)],
            power: 10.0,
            bandwidth: 5e6,
        };
        let unconstrained = PfProblem {
            users: vec![user(1e-12, 1.0, 0.0), user(1e-5, 1.0, 0.0)],
            ..p.clone()
        };
        let su = solve(&unconstrained, &SolverSettings::default()).unwrap();
        assert!(su.grants[1].rate < 1e6);
        let s = solve(&p, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, PfStatus::Optimal);
        assert!((s.grants[1].rate / 1e6 - 1.0).abs() < 1e-6, "{}", s.grants[1].rate);
        assert!(s.rate_prices[1] > 0.0);
        assert!(kkt_residual(&p, &s) < 1e-6);
        assert!(p.objective(&s.grants) <= unconstrained.objective(&su.grants));
    }

    #[test]
    fn feasibility_examples() {
        let free = PfProblem {
            users: vec![user(1e-9, 1.0, 0.0)],
            power: 1.0,
            bandwidth: 1e6,
        };
        let f = feasibility_check(&free);
        assert!(f.feasible);
        assert_eq!(f.min_power_needed, 0.0);

        let full_rate = pf_rate(1e-9, 1.0, 1e6);
        let boundary = PfProblem {
            users: vec![user(1e-9, 1.0, full_rate)],
            ..free.clone()
        };
        let f = feasibility_check(&boundary);
        assert!(f.feasible, "{f:?}");
        assert!((f.min_power_needed - 1.0).abs() < 1e-8);

        let too_much = PfProblem {
            users: vec![user(1e-9, 1.0, 2.0 * full_rate)],
            ..free
        };
        assert!(!feasibility_check(&too_much).feasible);
        let s = solve(&too_much, &SolverSettings::default()).unwrap();
        assert_eq!(s.status, PfStatus::Infeasible);
    }

    #[test]
    fn scale_covariance_in_weights() {
        let base = PfProblem {
            users: vec![user(2e-12, 1.0, 0.0), user(5e-11, 3.0, 0.0), user(1e-10, 1.0, 1e5)],
            power: 4.0,
            bandwidth: 8e6,
        };
        let mut scaled = base.clone();
        for u in &mut scaled.users {
            u.phi *= 7.5;
        }
        let a = solve(&base, &SolverSettings::default()).unwrap();
        let b = solve(&scaled, &SolverSettings::default()).unwrap();
        for (x, y) in a.grants.iter().zip(&b.grants) {
            assert!((x.power - y.power).abs() < 1e-8 * base.power);
            assert!((x.bandwidth - y.bandwidth).abs() < 1e-8 * base.bandwidth);
        }
    }

    #[test]
    fn text_roundtrip_and_errors() {
        let p = PfProblem {
            users: vec![user(1e-13, 2.0, 0.0), user(1e-11, 1.0, 5e5)],
            power: 10.0,
            bandwidth: 5e6,
        };
        let back: PfProblem = p.to_text().parse().unwrap();
        assert_eq!(back, p);
        assert!("power 1\nuser 1 1 0\n".parse::<PfProblem>().is_err());
        assert!("power 1\nbandwidth 1\nuser 1 x 0\n".parse::<PfProblem>().is_err());
        assert!("power -1\nbandwidth 1\n".parse::<PfProblem>().is_err());
        let bad = PfProblem { power: 0.0, ..p };
        assert!(solve(&bad, &SolverSettings::default()).is_err());
    }

    #[test]
    fn oracle_rejects_too_many_users() {
        let p = PfProblem {
            users: vec![user(1e-12, 1.0, 0.0); 5],
            power: 1.0,
            bandwidth: 1.0,
        };
        assert!(brute_force_oracle(&p, 10).is_err());
    }
}
