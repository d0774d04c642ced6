use crate::error::{Error, Result};
use crate::geometry::Vector;

/// Maximum atoms per side accepted by [`discrete_ot`].
pub const MAX_ATOMS: usize = 256;

/// Finite weighted point set.
#[derive(Clone, Debug)]
pub struct DiscreteMeasure {
    atoms: Vec<(Vector, f64)>,
    total: f64,
}

impl DiscreteMeasure {
    pub fn new(atoms: Vec<(Vector, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::usage("discrete measure needs at least one atom"));
        }
        if let Some((_, w)) = atoms.iter().find(|(_, w)| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::usage(format!("atom weights must be nonnegative and finite, got {w}")));
        }
        let total = atoms.iter().map(|(_, w)| w).sum();
        Ok(DiscreteMeasure { atoms, total })
    }

    pub fn atoms(&self) -> &[(Vector, f64)] {
        &self.atoms
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }
}

/// Optimal transport value and a sparse optimal plan `(i, j, mass)`.
#[derive(Clone, Debug)]
pub struct OtSolution {
    pub value: f64,
    pub plan: Vec<(usize, usize, f64)>,
}

/// Exact discrete optimal transport by successive shortest paths with
/// Dijkstra on reduced costs.
pub fn discrete_ot<C>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, cost: C) -> Result<OtSolution>
where
    C: Fn(&Vector, &Vector) -> f64,
{
    let (n, m) = (mu.len(), nu.len());
    if n > MAX_ATOMS || m > MAX_ATOMS {
        return Err(Error::usage(format!("at most {MAX_ATOMS} atoms per measure")));
    }
    let scale = mu.total.max(nu.total).max(1.0);
    if (mu.total - nu.total).abs() > 1e-12 * scale {
        return Err(Error::usage(format!(
            "measures must have equal mass, got {} and {}",
            mu.total, nu.total
        )));
    }
    let mut c = vec![vec![0.0; m]; n];
    let mut c_min = f64::INFINITY;
    for (i, (a, _)) in mu.atoms.iter().enumerate() {
        for (j, (b, _)) in nu.atoms.iter().enumerate() {
            let v = cost(a, b);
            if !v.is_finite() {
                return Err(Error::usage(format!("cost between atoms {i} and {j} is not finite")));
            }
            c[i][j] = v;
            c_min = c_min.min(v);
        }
    }
    // Reduced costs must start nonnegative.
    let shifted: Vec<Vec<f64>> = c.iter().map(|row| row.iter().map(|v| v - c_min).collect()).collect();

    let eps = 1e-14 * scale;
    let mut supply: Vec<f64> = mu.atoms.iter().map(|(_, w)| *w).collect();
    let mut demand: Vec<f64> = nu.atoms.iter().map(|(_, w)| *w).collect();
    let mut flow = vec![vec![0.0; m]; n];
    let mut pot = vec![0.0; n + m];
    let mut iterations = 0usize;
    let max_iterations = 4 * (n + m) * (n + m) + 16;

    while demand.iter().any(|&d| d > eps) && supply.iter().any(|&s| s > eps) {
        iterations += 1;
        if iterations > max_iterations {
            return Err(Error::numerical("discrete_ot", "augmentation did not terminate"));
        }
        // Dense Dijkstra over sources 0..n and sinks n..n+m.
        let mut dist = vec![f64::INFINITY; n + m];
        let mut pred = vec![usize::MAX; n + m];
        let mut done = vec![false; n + m];
        for i in 0..n {
            if supply[i] > eps {
                dist[i] = 0.0;
            }
        }
        loop {
            let mut u = usize::MAX;
            let mut best = f64::INFINITY;
            for k in 0..n + m {
                if !done[k] && dist[k] < best {
                    best = dist[k];
                    u = k;
                }
            }
            if u == usize::MAX {
                break;
            }
            done[u] = true;
            if u < n {
                for j in 0..m {
                    let w = n + j;
                    let rc = (shifted[u][j] + pot[u] - pot[w]).max(0.0);
                    if dist[u] + rc < dist[w] {
                        dist[w] = dist[u] + rc;
                        pred[w] = u;
                    }
                }
            } else {
                let j = u - n;
                for i in 0..n {
                    if flow[i][j] > eps {
                        let rc = (-shifted[i][j] - pot[i] + pot[u]).max(0.0);
                        if dist[u] + rc < dist[i] {
                            dist[i] = dist[u] + rc;
                            pred[i] = u;
                        }
                    }
                }
            }
        }
        let target = (0..m)
            .filter(|&j| demand[j] > eps && dist[n + j].is_finite())
            .min_by(|&a, &b| dist[n + a].total_cmp(&dist[n + b]))
            .ok_or_else(|| Error::numerical("discrete_ot", "no augmenting path"))?;
        let dt = dist[n + target];
        for k in 0..n + m {
            pot[k] += dist[k].min(dt);
        }
        // Walk back to the source and find the bottleneck.
        let mut path = vec![n + target];
        let mut cur = n + target;
        while pred[cur] != usize::MAX {
            cur = pred[cur];
            path.push(cur);
        }
        let source = cur;
        let mut amount = supply[source].min(demand[target]);
        for w in path.windows(2) {
            let (to, from) = (w[0], w[1]);
            if from >= n {
                // Backward arc sink -> source cancels flow on (to, from - n).
                amount = amount.min(flow[to][from - n]);
            }
        }
        for w in path.windows(2) {
            let (to, from) = (w[0], w[1]);
            if from < n {
                flow[from][to - n] += amount;
            } else {
                flow[to][from - n] -= amount;
                if flow[to][from - n] < eps {
                    flow[to][from - n] = 0.0;
                }
            }
        }
        supply[source] -= amount;
        demand[target] -= amount;
    }

    let mut plan = Vec::new();
    let mut value = 0.0;
    for i in 0..n {
        for j in 0..m {
            if flow[i][j] > 0.0 {
                plan.push((i, j, flow[i][j]));
                value += flow[i][j] * c[i][j];
            }
        }
    }
    Ok(OtSolution { value, plan })
}

/// Total cost of an arbitrary plan.
pub fn plan_cost<C>(mu: &DiscreteMeasure, nu: &DiscreteMeasure, plan: &[(usize, usize, f64)], cost: C) -> f64
where
    C: Fn(&Vector, &Vector) -> f64,
{
    plan.iter()
        .map(|&(i, j, w)| w * cost(&mu.atoms[i].0, &nu.atoms[j].0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::gauss_density;
    use proptest::prelude::*;

    fn line(points: &[(f64, f64)]) -> DiscreteMeasure {
        DiscreteMeasure::new(points.iter().map(|&(x, w)| (Vector::from(vec![x]), w)).collect()).unwrap()
    }

    fn dist(a: &Vector, b: &Vector) -> f64 {
        a.distance(b)
    }

    #[test]
    fn identical_measures_cost_nothing() {
        let mu = line(&[(0.0, 0.2), (1.0, 0.5), (3.0, 0.3)]);
        let sol = discrete_ot(&mu, &mu, dist).unwrap();
        assert_eq!(sol.value, 0.0);
        for &(i, j, _) in &sol.plan {
            assert_eq!(i, j);
        }
    }

    #[test]
    fn indicator_cost_gives_total_variation() {
        let mu = line(&[(0.0, 0.7), (1.0, 0.3)]);
        let nu = line(&[(0.0, 0.4), (1.0, 0.6)]);
        let sol = discrete_ot(&mu, &nu, |a, b| if a == b { 0.0 } else { 1.0 }).unwrap();
        assert!((sol.value - 0.3).abs() < 1e-15);
    }

    #[test]
    fn unequal_mass_rejected() {
        let mu = line(&[(0.0, 1.0)]);
        let nu = line(&[(0.0, 0.5)]);
        assert!(discrete_ot(&mu, &nu, dist).is_err());
    }

    fn brute_force_assignment(c: &[Vec<f64>]) -> f64 {
        fn go(c: &[Vec<f64>], row: usize, used: &mut Vec<bool>) -> f64 {
            if row == c.len() {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            for j in 0..c.len() {
                if !used[j] {
                    used[j] = true;
                    best = best.min(c[row][j] + go(c, row + 1, used));
                    used[j] = false;
                }
            }
            best
        }
        go(c, 0, &mut vec![false; c.len()])
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn uniform_instances_match_assignment(
            xs in proptest::collection::vec(-5.0f64..5.0, 1..7),
            seed_ys in proptest::collection::vec(-5.0f64..5.0, 7),
            power in 0.2f64..2.0,
        ) {
            let k = xs.len();
            let ys = &seed_ys[..k];
            let w = 1.0 / k as f64;
            let mu = line(&xs.iter().map(|&x| (x, w)).collect::<Vec<_>>());
            let nu = line(&ys.iter().map(|&y| (y, w)).collect::<Vec<_>>());
            let cost = |a: &Vector, b: &Vector| a.distance(b).powf(power);
            let sol = discrete_ot(&mu, &nu, cost).unwrap();
            let c: Vec<Vec<f64>> = xs.iter().map(|&x| ys.iter().map(|&y| (x - y).abs().powf(power)).collect()).collect();
            let oracle = brute_force_assignment(&c) * w;
            prop_assert!((sol.value - oracle).abs() < 1e-12 * (1.0 + oracle));
            for i in 0..k {
                let row: f64 = sol.plan.iter().filter(|p| p.0 == i).map(|p| p.2).sum();
                let col: f64 = sol.plan.iter().filter(|p| p.1 == i).map(|p| p.2).sum();
                prop_assert!((row - w).abs() < 1e-13 && (col - w).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn mirror_plan_is_optimal_for_concave_cost() {
        // N(1, 1) and N(-1, 1) on a symmetric grid.
        let h = 0.1;
        let grid: Vec<f64> = (0..=120).map(|k| (k as i64 - 60) as f64 * h).collect();
        let a: Vec<f64> = grid.iter().map(|&z| gauss_density(z - 1.0, 1.0)).collect();
        let b: Vec<f64> = grid.iter().map(|&z| gauss_density(z + 1.0, 1.0)).collect();
        let (sa, sb): (f64, f64) = (a.iter().sum(), b.iter().sum());
        let a: Vec<f64> = a.iter().map(|v| v / sa).collect();
        let b: Vec<f64> = b.iter().map(|v| v / sb).collect();
        // Keep atoms within the solver limit: drop the far tails, renormalize.
        let keep: Vec<usize> = (0..grid.len()).filter(|&k| grid[k].abs() <= 5.5).collect();
        let (ka, kb): (f64, f64) = (keep.iter().map(|&k| a[k]).sum(), keep.iter().map(|&k| b[k]).sum());
        let mu = line(&keep.iter().map(|&k| (grid[k], a[k] / ka)).collect::<Vec<_>>());
        let nu = line(&keep.iter().map(|&k| (grid[k], b[k] / kb)).collect::<Vec<_>>());
        let cost = |u: &Vector, v: &Vector| u.distance(v).sqrt();
        let oracle = discrete_ot(&mu, &nu, cost).unwrap();
        let mut mirror = Vec::new();
        let n = keep.len();
        for i in 0..n {
            let (wa, wb) = (mu.atoms()[i].1, nu.atoms()[i].1);
            mirror.push((i, i, wa.min(wb)));
            if wa > wb {
                mirror.push((i, n - 1 - i, wa - wb));
            }
        }
        let mirror_value = plan_cost(&mu, &nu, &mirror, cost);
        assert!(mirror_value <= oracle.value + 0.01, "{mirror_value} vs {}", oracle.value);
        assert!(oracle.value <= mirror_value + 1e-12);
    }
}
