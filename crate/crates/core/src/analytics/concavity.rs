use super::tv::Law;
use crate::error::{Error, Result};

/// Second differences of `D -> TV(t, D)` on a strictly increasing grid of
/// positive distances.
///
/// For a nonuniform grid the difference is
/// `[(f[i+1] - f[i]) h[i-1] - (f[i] - f[i-1]) h[i]] / ((h[i-1] + h[i]) / 2)`,
/// which is the usual `f[i+1] - 2 f[i] + f[i-1]` on a uniform grid.
pub fn concavity_check(law: &Law, t: f64, grid: &[f64]) -> Result<Vec<f64>> {
    if grid.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
        return Err(Error::usage("distance grid must be positive and finite"));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::usage("distance grid must be strictly increasing"));
    }
    if grid.len() < 3 {
        return Ok(Vec::new());
    }
    let values = grid.iter().map(|&d| Ok(law.tv(d, t)?.value)).collect::<Result<Vec<f64>>>()?;
    Ok((1..grid.len() - 1)
        .map(|i| {
            let (hl, hr) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
            ((values[i + 1] - values[i]) * hl - (values[i] - values[i - 1]) * hr) / (0.5 * (hl + hr))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::SubordinatorSpec;
    use crate::special::gauss_density;

    const GRID: [f64; 4] = [0.5, 1.0, 1.5, 2.0];

    #[test]
    fn brownian_and_cauchy_are_strictly_concave() {
        let half = SubordinatorSpec::stable(0.5, 1.0).unwrap();
        for law in [Law::Brownian, Law::Subordinated(half)] {
            let sd = concavity_check(&law, 1.0, &GRID).unwrap();
            assert_eq!(sd.len(), 2);
            assert!(sd.iter().all(|&v| v < -1e-4), "{law:?}: {sd:?}");
        }
    }

    #[test]
    fn brownian_matches_closed_form_derivative() {
        // TV'(D) = g_1(D/2), so the second difference is close to h^2 TV''.
        let fine: Vec<f64> = (1..=3).map(|k| 1.0 + 1e-3 * k as f64).collect();
        let sd = concavity_check(&Law::Brownian, 1.0, &fine).unwrap();
        let d = fine[1];
        let second = -0.25 * d * gauss_density(0.5 * d, 1.0);
        assert!((sd[0] / 1e-6 - second).abs() < 1e-4);
    }

    #[test]
    fn short_or_bad_grids() {
        assert!(concavity_check(&Law::Brownian, 1.0, &[0.5, 1.0]).unwrap().is_empty());
        assert!(concavity_check(&Law::Brownian, 1.0, &[1.0, 0.5, 2.0]).is_err());
        assert!(concavity_check(&Law::Brownian, 1.0, &[0.0, 0.5, 2.0]).is_err());
    }
}
