//! Exact optimal transport between finitely supported measures.
//!
//! The solver is successive shortest paths with node potentials on the dense
//! bipartite transportation graph. It is meant for the few-hundred-atom
//! instances this crate builds, where exactness and a checkable optimality
//! certificate matter more than asymptotics: every solution carries dual
//! potentials, and [`Coupling`] exposes the feasibility, complementary
//! slackness and duality-gap defects so tests can certify optimality without
//! trusting the solver.

use crate::num::{dist, dist_sq, Point};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum OtError {
    #[error("a measure needs at least one atom")]
    EmptyMeasure,
    #[error("point dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights must be positive and finite, got {0}")]
    BadWeight(f64),
    #[error("atom coordinates must be finite")]
    NonFinitePoint,
    #[error("atom count mismatch: {points} points, {weights} weights")]
    LengthMismatch { points: usize, weights: usize },
    #[error("transport iteration failed to exhaust mass (remaining {remaining:.3e})")]
    NotConverged { remaining: f64 },
    #[error("cycle enumeration needs {required} cost evaluations, budget is {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
}

/// Finitely supported probability measure. Construction normalizes the
/// weights to unit total mass.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<Point>, weights: Vec<f64>) -> Result<Self, OtError> {
        if points.is_empty() {
            return Err(OtError::EmptyMeasure);
        }
        if points.len() != weights.len() {
            return Err(OtError::LengthMismatch {
                points: points.len(),
                weights: weights.len(),
            });
        }
        let dim = points[0].len();
        for p in &points {
            if p.len() != dim {
                return Err(OtError::DimensionMismatch {
                    expected: dim,
                    got: p.len(),
                });
            }
            if p.iter().any(|c| !c.is_finite()) {
                return Err(OtError::NonFinitePoint);
            }
        }
        for &w in &weights {
            if !(w.is_finite() && w > 0.0) {
                return Err(OtError::BadWeight(w));
            }
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self { points, weights })
    }

    pub fn uniform(points: Vec<Point>) -> Result<Self, OtError> {
        let n = points.len();
        Self::new(points, vec![1.0; n.max(1)])
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }
}

/// Transport plan between two discrete measures together with the dual
/// potentials produced by the solver. `entries` lists `(i, j, mass)` with
/// positive mass; `dual_u[0]` is normalized to zero.
#[derive(Clone, Debug)]
pub struct Coupling {
    pub mu: DiscreteMeasure,
    pub nu: DiscreteMeasure,
    pub entries: Vec<(usize, usize, f64)>,
    pub cost_total: f64,
    pub dual_u: Vec<f64>,
    pub dual_v: Vec<f64>,
}

impl Coupling {
    /// Largest violation of dual feasibility `u_i + v_j <= c_ij` over all
    /// pairs (positive means infeasible).
    pub fn max_feasibility_violation<F>(&self, cost: F) -> f64
    where
        F: Fn(&[f64], &[f64]) -> f64,
    {
        let mut worst = f64::NEG_INFINITY;
        for (i, x) in self.mu.points.iter().enumerate() {
            for (j, y) in self.nu.points.iter().enumerate() {
                let slack = self.dual_u[i] + self.dual_v[j] - cost(x, y);
                if slack > worst {
                    worst = slack;
                }
            }
        }
        worst
    }

    /// Largest |c_ij - u_i - v_j| over entries carrying mass: zero means the
    /// plan and the duals satisfy complementary slackness exactly.
    pub fn max_slackness_defect<F>(&self, cost: F) -> f64
    where
        F: Fn(&[f64], &[f64]) -> f64,
    {
        self.entries
            .iter()
            .map(|&(i, j, _)| {
                (cost(&self.mu.points[i], &self.nu.points[j]) - self.dual_u[i] - self.dual_v[j])
                    .abs()
            })
            .fold(0.0, f64::max)
    }

    /// Primal objective minus dual objective; nonnegative up to roundoff, and
    /// zero exactly when both sides are optimal.
    pub fn duality_gap(&self) -> f64 {
        let dual: f64 = self
            .dual_u
            .iter()
            .zip(&self.mu.weights)
            .map(|(u, a)| u * a)
            .sum::<f64>()
            + self
                .dual_v
                .iter()
                .zip(&self.nu.weights)
                .map(|(v, b)| v * b)
                .sum::<f64>();
        self.cost_total - dual
    }

    /// Largest defect of the two marginal constraints.
    pub fn marginal_error(&self) -> f64 {
        let mut row = vec![0.0; self.mu.len()];
        let mut col = vec![0.0; self.nu.len()];
        for &(i, j, m) in &self.entries {
            row[i] += m;
            col[j] += m;
        }
        let r = row
            .iter()
            .zip(&self.mu.weights)
            .map(|(s, a)| (s - a).abs())
            .fold(0.0, f64::max);
        let c = col
            .iter()
            .zip(&self.nu.weights)
            .map(|(s, b)| (s - b).abs())
            .fold(0.0, f64::max);
        r.max(c)
    }

    /// Support atoms as (source point, target point, mass) triples.
    pub fn support(&self) -> Vec<(&Point, &Point, f64)> {
        self.entries
            .iter()
            .map(|&(i, j, m)| (&self.mu.points[i], &self.nu.points[j], m))
            .collect()
    }
}

/// Residual below which a node is considered exhausted while augmenting.
const RESIDUAL_EPS: f64 = 1e-14;

/// Minimize `sum f_ij cost(x_i, y_j)` over couplings of `mu` and `nu`.
pub fn solve_ot<F>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: F) -> Result<Coupling, OtError>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let n = mu.len();
    let m = nu.len();
    let mut c = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            c[i * m + j] = cost(&mu.points[i], &nu.points[j]);
        }
    }

    let mut supply = mu.weights.clone();
    let mut demand = nu.weights.clone();
    // force exact mass balance so the augmentation loop terminates with
    // exact zeros; the adjustment is at the level of normalization roundoff
    let diff: f64 = supply.iter().sum::<f64>() - demand.iter().sum::<f64>();
    demand[m - 1] += diff;

    let mut flow = vec![0.0; n * m];
    // node potentials: p on sources, q on targets; dual u = -p, v = q.
    let mut p = vec![0.0; n];
    let mut q: Vec<f64> = (0..m)
        .map(|j| (0..n).map(|i| c[i * m + j]).fold(f64::INFINITY, f64::min))
        .collect();

    let nodes = n + m; // sources 0..n, targets n..n+m
    let max_aug = 16 * nodes + 64;
    let mut augmentations = 0usize;

    loop {
        let Some(src) = supply.iter().position(|&s| s > RESIDUAL_EPS) else {
            break;
        };
        if augmentations >= max_aug {
            let remaining: f64 = supply.iter().sum();
            return Err(OtError::NotConverged { remaining });
        }
        augmentations += 1;

        // Dijkstra over reduced costs from the single active source.
        let mut dist_v = vec![f64::INFINITY; nodes];
        let mut done = vec![false; nodes];
        let mut parent = vec![usize::MAX; nodes];
        dist_v[src] = 0.0;
        let mut target = usize::MAX;
        loop {
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            for v in 0..nodes {
                if !done[v] && dist_v[v] < best_d {
                    best_d = dist_v[v];
                    best = v;
                }
            }
            if best == usize::MAX {
                break;
            }
            done[best] = true;
            if best >= n && demand[best - n] > RESIDUAL_EPS {
                target = best;
                break;
            }
            if best < n {
                let i = best;
                for j in 0..m {
                    let rc = (c[i * m + j] + p[i] - q[j]).max(0.0);
                    let nd = best_d + rc;
                    if nd < dist_v[n + j] {
                        dist_v[n + j] = nd;
                        parent[n + j] = i;
                    }
                }
            } else {
                let j = best - n;
                for i in 0..n {
                    if flow[i * m + j] > 0.0 {
                        let rc = (q[j] - p[i] - c[i * m + j]).max(0.0);
                        let nd = best_d + rc;
                        if nd < dist_v[i] {
                            dist_v[i] = nd;
                            parent[i] = n + j;
                        }
                    }
                }
            }
        }
        if target == usize::MAX {
            let remaining: f64 = supply.iter().sum();
            if remaining <= 1e-12 {
                break;
            }
            return Err(OtError::NotConverged { remaining });
        }
        let dt = dist_v[target];
        for i in 0..n {
            p[i] += dist_v[i].min(dt);
        }
        for j in 0..m {
            q[j] += dist_v[n + j].min(dt);
        }

        // bottleneck along the augmenting path
        let mut delta = supply[src].min(demand[target - n]);
        let mut v = target;
        while v != src {
            let u = parent[v];
            if v < n {
                // backward edge (target u-n) -> (source v): limited by flow
                delta = delta.min(flow[v * m + (u - n)]);
            }
            v = u;
        }
        let mut v = target;
        while v != src {
            let u = parent[v];
            if v >= n {
                flow[u * m + (v - n)] += delta;
            } else {
                flow[v * m + (u - n)] -= delta;
            }
            v = u;
        }
        supply[src] -= delta;
        demand[target - n] -= delta;
        if supply[src] <= RESIDUAL_EPS {
            supply[src] = 0.0;
        }
        if demand[target - n] <= RESIDUAL_EPS {
            demand[target - n] = 0.0;
        }
    }

    let mut entries = Vec::new();
    let mut cost_total = 0.0;
    for i in 0..n {
        for j in 0..m {
            let f = flow[i * m + j];
            if f > 0.0 {
                entries.push((i, j, f));
                cost_total += f * c[i * m + j];
            }
        }
    }
    let mut dual_u: Vec<f64> = p.iter().map(|&pi| -pi).collect();
    let mut dual_v = q;
    let shift = dual_u[0];
    for u in &mut dual_u {
        *u -= shift;
    }
    for v in &mut dual_v {
        *v += shift;
    }
    Ok(Coupling {
        mu: mu.clone(),
        nu: nu.clone(),
        entries,
        cost_total,
        dual_u,
        dual_v,
    })
}

/// Half squared distance, the cost convention used for quadratic transport
/// throughout this crate.
pub fn half_sq_cost(a: &[f64], b: &[f64]) -> f64 {
    dist_sq(a, b) / 2.0
}

/// Quadratic-cost solution: the coupling under cost d^2/2 and the resulting
/// 2-Wasserstein distance.
#[derive(Clone, Debug)]
pub struct W2Solution {
    pub coupling: Coupling,
    pub distance: f64,
}

pub fn solve_w2(mu: &DiscreteMeasure, nu: &DiscreteMeasure) -> Result<W2Solution, OtError> {
    let coupling = solve_ot(mu, nu, half_sq_cost)?;
    let sq: f64 = coupling
        .entries
        .iter()
        .map(|&(i, j, mass)| mass * dist_sq(&coupling.mu.points[i], &coupling.nu.points[j]))
        .sum();
    Ok(W2Solution {
        coupling,
        distance: sq.max(0.0).sqrt(),
    })
}

/// Discrete c-transform: `inf_x (cost(x, y) - phi(x))` for each `y`.
pub fn c_transform<F>(phi: &[f64], xs: &[Point], ys: &[Point], cost: F) -> Vec<f64>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    ys.iter()
        .map(|y| {
            xs.iter()
                .zip(phi)
                .map(|(x, &v)| cost(x, y) - v)
                .fold(f64::INFINITY, f64::min)
        })
        .collect()
}

/// Result of enumerating cycles over a plan's support. `worst_margin` is the
/// largest amount by which rerouting a cycle would lower cost; positive means
/// the support is not cyclically monotone and `witness` holds the support
/// indices of the offending cycle in visiting order.
#[derive(Clone, Debug)]
pub struct CycleCheck {
    pub worst_margin: f64,
    pub witness: Option<Vec<usize>>,
    pub cycles_checked: u64,
}

impl CycleCheck {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.worst_margin <= tol
    }
}

/// Exhaustively check cyclical monotonicity of a set of support pairs under
/// `cost`, over all cycles of length `2..=max_cycle`. The number of cost
/// evaluations is estimated first; if it exceeds `budget` the check refuses
/// to run rather than silently sampling.
pub fn check_cyclical_monotonicity<F>(
    pairs: &[(Point, Point)],
    cost: F,
    max_cycle: usize,
    budget: u64,
) -> Result<CycleCheck, OtError>
where
    F: Fn(&[f64], &[f64]) -> f64,
{
    let s = pairs.len();
    let max_cycle = max_cycle.min(s);
    let mut required: u128 = 0;
    for len in 2..=max_cycle {
        let mut comb: u128 = 1;
        for i in 0..len {
            comb = comb * (s - i) as u128 / (i + 1) as u128;
        }
        let mut fact: u128 = 1;
        for i in 1..len {
            fact *= i as u128;
        }
        required = required.saturating_add(comb * fact * len as u128);
    }
    if required > budget as u128 {
        return Err(OtError::BudgetExceeded { required, budget });
    }

    let diag: Vec<f64> = pairs.iter().map(|(x, y)| cost(x, y)).collect();
    let mut check = CycleCheck {
        worst_margin: f64::NEG_INFINITY,
        witness: None,
        cycles_checked: 0,
    };
    let mut idx: Vec<usize> = Vec::new();
    for len in 2..=max_cycle {
        idx.clear();
        idx.extend(0..len);
        // enumerate combinations of `len` support indices
        loop {
            // fix the first element of the cycle, permute the rest
            let mut tail: Vec<usize> = idx[1..].to_vec();
            permute(&mut tail, 0, &mut |order| {
                let mut cycle = Vec::with_capacity(len);
                cycle.push(idx[0]);
                cycle.extend_from_slice(order);
                let mut kept = 0.0;
                let mut rerouted = 0.0;
                for k in 0..len {
                    let a = cycle[k];
                    let b = cycle[(k + 1) % len];
                    kept += diag[a];
                    rerouted += cost(&pairs[a].0, &pairs[b].1);
                }
                let margin = kept - rerouted;
                check.cycles_checked += 1;
                if margin > check.worst_margin {
                    check.worst_margin = margin;
                    check.witness = Some(cycle);
                }
            });
            // next combination in lexicographic order
            let mut i = len;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                if idx[i] != i + s - len {
                    idx[i] += 1;
                    for j in i + 1..len {
                        idx[j] = idx[j - 1] + 1;
                    }
                    break;
                }
                if i == 0 {
                    idx.clear();
                    break;
                }
            }
            if idx.is_empty() {
                break;
            }
        }
    }
    if check.witness.is_none() {
        check.worst_margin = 0.0;
    }
    Ok(check)
}

fn permute(items: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

/// Two-cycle monotonicity for the plain distance cost. Quadratic-cost
/// optimality does not imply it, and plans mixing transport rays fail it, so
/// it serves as a structural filter: `worst_margin > 0` exhibits two pairs
/// whose swap shortens total length.
pub fn check_d_monotone(pairs: &[(Point, Point)]) -> CycleCheck {
    let mut check = CycleCheck {
        worst_margin: f64::NEG_INFINITY,
        witness: None,
        cycles_checked: 0,
    };
    for a in 0..pairs.len() {
        for b in a + 1..pairs.len() {
            let kept = dist(&pairs[a].0, &pairs[a].1) + dist(&pairs[b].0, &pairs[b].1);
            let swapped = dist(&pairs[a].0, &pairs[b].1) + dist(&pairs[b].0, &pairs[a].1);
            let margin = kept - swapped;
            check.cycles_checked += 1;
            if margin > check.worst_margin {
                check.worst_margin = margin;
                check.witness = Some(vec![a, b]);
            }
        }
    }
    if check.witness.is_none() {
        check.worst_margin = 0.0;
    }
    check
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mk(points: &[&[f64]]) -> Vec<Point> {
        points.iter().map(|p| p.to_vec()).collect()
    }

    #[test]
    fn two_point_shift_has_cost_two() {
        let mu = DiscreteMeasure::uniform(mk(&[&[0.0, 0.0], &[1.0, 0.0]])).unwrap();
        let nu = DiscreteMeasure::uniform(mk(&[&[2.0, 0.0], &[3.0, 0.0]])).unwrap();
        let sol = solve_w2(&mu, &nu).unwrap();
        let c = &sol.coupling;
        // monotone matching, each atom moves distance 2: cost = (4/2+4/2)/2
        assert!((c.cost_total - 2.0).abs() < 1e-12, "cost {}", c.cost_total);
        assert!((sol.distance - 2.0).abs() < 1e-12);
        assert_eq!(c.entries.len(), 2);
        assert_eq!((c.entries[0].0, c.entries[0].1), (0, 0));
        assert_eq!((c.entries[1].0, c.entries[1].1), (1, 1));
        assert!(c.duality_gap().abs() < 1e-12);
        assert!(c.max_feasibility_violation(half_sq_cost) < 1e-12);
        assert!(c.max_slackness_defect(half_sq_cost) < 1e-12);
        assert!(c.marginal_error() < 1e-15);
        assert_eq!(c.dual_u[0], 0.0);
    }

    #[test]
    fn crossed_matching_fails_cycle_check_by_one() {
        let pairs = vec![
            (vec![0.0, 0.0], vec![3.0, 0.0]),
            (vec![1.0, 0.0], vec![2.0, 0.0]),
        ];
        let check = check_cyclical_monotonicity(&pairs, half_sq_cost, 3, 1_000).unwrap();
        // kept = (9 + 1)/2, rerouted = (4 + 4)/2
        assert!((check.worst_margin - 1.0).abs() < 1e-12);
        assert!(!check.is_monotone(1e-9));
        assert_eq!(check.witness, Some(vec![0, 1]));

        let straight = vec![
            (vec![0.0, 0.0], vec![2.0, 0.0]),
            (vec![1.0, 0.0], vec![3.0, 0.0]),
        ];
        let check = check_cyclical_monotonicity(&straight, half_sq_cost, 3, 1_000).unwrap();
        assert!(check.is_monotone(1e-12));
    }

    #[test]
    fn cycle_budget_is_enforced() {
        let pairs: Vec<(Point, Point)> = (0..12)
            .map(|i| (vec![i as f64], vec![i as f64 + 1.0]))
            .collect();
        let err = check_cyclical_monotonicity(&pairs, half_sq_cost, 12, 10).unwrap_err();
        assert!(matches!(err, OtError::BudgetExceeded { .. }));
    }

    #[test]
    fn distance_monotonicity_distinguishes_mixed_rays() {
        // quadratically monotone but not length-monotone: swapping shortens
        let phi = std::f64::consts::FRAC_PI_3;
        let pairs = vec![
            (vec![0.0, 0.0], vec![3.0, 0.0]),
            (vec![3.0, 0.0], vec![3.0 + phi.cos(), phi.sin()]),
        ];
        let sq = check_cyclical_monotonicity(&pairs, half_sq_cost, 2, 1_000).unwrap();
        assert!(sq.is_monotone(1e-9), "margin {}", sq.worst_margin);
        let lin = check_d_monotone(&pairs);
        let expected = 4.0 - 13.0f64.sqrt();
        assert!((lin.worst_margin - expected).abs() < 1e-12);
        assert!(lin.worst_margin > 0.0);
    }

    #[test]
    fn c_transform_of_zero_is_min_cost() {
        let xs = mk(&[&[0.0], &[1.0]]);
        let ys = mk(&[&[0.4], &[-2.0]]);
        let v = c_transform(&[0.0, 0.0], &xs, &ys, half_sq_cost);
        assert!((v[0] - 0.08).abs() < 1e-15); // min(0.16, 0.36)/2
        assert!((v[1] - 2.0).abs() < 1e-15); // min(4, 9)/2
    }

    #[test]
    fn sorted_line_instance_matches_identity() {
        let xs: Vec<Point> = (0..8).map(|i| vec![i as f64 * 0.3]).collect();
        let ys: Vec<Point> = (0..8).map(|i| vec![1.7 + i as f64 * 0.41]).collect();
        let mu = DiscreteMeasure::uniform(xs).unwrap();
        let nu = DiscreteMeasure::uniform(ys).unwrap();
        let sol = solve_w2(&mu, &nu).unwrap();
        for (k, &(i, j, m)) in sol.coupling.entries.iter().enumerate() {
            assert_eq!((i, j), (k, k));
            assert!((m - 0.125).abs() < 1e-15);
        }
        let pairs: Vec<(Point, Point)> = sol
            .coupling
            .support()
            .into_iter()
            .map(|(x, y, _)| (x.clone(), y.clone()))
            .collect();
        let check = check_cyclical_monotonicity(&pairs, half_sq_cost, 3, 10_000_000).unwrap();
        assert!(check.is_monotone(1e-12));
    }

    #[test]
    fn permutation_oracle_small_instances() {
        // deterministic pseudo-random clouds; brute-force over permutations
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = move || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for n in 2..=6usize {
            let xs: Vec<Point> = (0..n).map(|_| vec![next() * 4.0, next() * 4.0]).collect();
            let ys: Vec<Point> = (0..n).map(|_| vec![next() * 4.0, next() * 4.0]).collect();
            let mu = DiscreteMeasure::uniform(xs.clone()).unwrap();
            let nu = DiscreteMeasure::uniform(ys.clone()).unwrap();
            let sol = solve_ot(&mu, &nu, half_sq_cost).unwrap();

            let mut best = f64::INFINITY;
            let mut perm: Vec<usize> = (0..n).collect();
            permute(&mut perm, 0, &mut |order| {
                let total: f64 = order
                    .iter()
                    .enumerate()
                    .map(|(i, &j)| half_sq_cost(&xs[i], &ys[j]) / n as f64)
                    .sum();
                if total < best {
                    best = total;
                }
            });
            assert!(
                (sol.cost_total - best).abs() < 1e-10,
                "n={n}: solver {} vs brute {best}",
                sol.cost_total
            );
        }
    }

    #[test]
    fn measure_validation() {
        assert_eq!(DiscreteMeasure::uniform(vec![]).unwrap_err(), OtError::EmptyMeasure);
        assert!(matches!(
            DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![1.0, -0.5]),
            Err(OtError::BadWeight(_))
        ));
        assert!(matches!(
            DiscreteMeasure::uniform(vec![vec![0.0], vec![1.0, 2.0]]),
            Err(OtError::DimensionMismatch { .. })
        ));
        let m = DiscreteMeasure::new(vec![vec![0.0], vec![1.0]], vec![3.0, 1.0]).unwrap();
        assert!((m.weights[0] - 0.75).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn random_instances_carry_optimality_certificates(
            seed in 0u64..1_000_000,
            n in 2usize..9,
            m in 2usize..9,
        ) {
            let mut state = seed.wrapping_mul(0x9e3779b97f4a7c15).wrapping_add(1);
            let mut next = move || {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                (state >> 11) as f64 / (1u64 << 53) as f64
            };
            let xs: Vec<Point> = (0..n).map(|_| vec![next() * 3.0, next() * 3.0]).collect();
            let ys: Vec<Point> = (0..m).map(|_| vec![next() * 3.0, next() * 3.0]).collect();
            let wx: Vec<f64> = (0..n).map(|_| 0.1 + next()).collect();
            let wy: Vec<f64> = (0..m).map(|_| 0.1 + next()).collect();
            let mu = DiscreteMeasure::new(xs, wx).unwrap();
            let nu = DiscreteMeasure::new(ys, wy).unwrap();
            let sol = solve_ot(&mu, &nu, half_sq_cost).unwrap();
            prop_assert!(sol.marginal_error() < 1e-12);
            prop_assert!(sol.max_feasibility_violation(half_sq_cost) < 1e-10);
            prop_assert!(sol.max_slackness_defect(half_sq_cost) < 1e-10);
            prop_assert!(sol.duality_gap().abs() < 1e-9);
            // plan support never exceeds n + m - 1 atoms up to degeneracy-free noise
            prop_assert!(sol.entries.len() <= n + m);
        }
    }
}
