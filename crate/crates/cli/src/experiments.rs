//! One function per experiment kind. Each returns its tables and checks;
//! writing files is left to [`crate::run`].

use mirrorlab_core::analytics::{characterization_check, concavity_check, mismatch_probability, Law};
use mirrorlab_core::couplers::{reflection_path, subordinated_reflection_path};
use mirrorlab_core::generatorlab::{
    analytic_generator, coupled_levy_measure, generator_fd_estimate, levy_density_radial, levy_integral,
    self_check, small_t_levy_estimate, CrossBump, Extrapolation, GaussianBump, IncrementSampler, QuarticBump,
    TestFunction, Trig,
};
use mirrorlab_core::montecarlo::par_reduce;
use mirrorlab_core::{derive_seed, Coupler, PathSkeleton, RngStream, SubordinatorSpec, Vector};
use rand::Rng;

use crate::config::{Experiment, ExperimentConfig};
use crate::error::HarnessError;
use crate::output::{num, num_list, sha256_hex, Check, Table, OPERATION_HEADER, RESULT_HEADER, THRESHOLDS};

type Result<T> = std::result::Result<T, HarnessError>;

// Sub-seed tags, one per independent Monte Carlo quantity.
const TAG_SURVIVAL: u64 = 1;
const TAG_MISMATCH: u64 = 2;
const TAG_CHARACTERIZATION: u64 = 3;
const TAG_POINTS: u64 = 4;
const TAG_FUNCTIONS: u64 = 5;
const TAG_GENERATOR: u64 = 6;
const TAG_LEVY_SINGLE: u64 = 7;
const TAG_LEVY_COUPLED: u64 = 8;
const TAG_LEVY_STABILITY: u64 = 9;

/// Smallest start separation for generator evaluation points.
pub const GENERATOR_MIN_GAP: f64 = 2.0;
/// Evaluation points are drawn from `[-BOX, BOX]^d`.
pub const GENERATOR_BOX: f64 = 1.5;

/// Tables and checks produced by one experiment.
#[derive(Clone, Debug, Default)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
}

/// A validated config with its parsed pieces.
pub struct Setup<'a> {
    pub config: &'a ExperimentConfig,
    pub x: Vector,
    pub y: Vector,
    pub coupler: Coupler,
    pub spec: Option<SubordinatorSpec>,
}

impl<'a> Setup<'a> {
    pub fn new(config: &'a ExperimentConfig) -> Result<Self> {
        let spec = config.subordinator.as_ref().map(|s| s.to_spec()).transpose()?;
        let coupler = config.coupler.parse::<mirrorlab_core::CouplerKind>()?.with_spec(spec)?;
        Ok(Setup {
            config,
            x: Vector::new(config.x.clone())?,
            y: Vector::new(config.y.clone())?,
            coupler,
            spec,
        })
    }

    fn seed(&self, tag: u64) -> u64 {
        derive_seed(self.config.seed, tag)
    }

    fn gap(&self) -> f64 {
        self.x.distance(&self.y)
    }

    fn law(&self) -> Law {
        Law::of_coupler(&self.coupler)
    }
}

pub fn run_experiment(setup: &Setup) -> Result<Outcome> {
    match setup.config.experiment {
        Experiment::CoupleTime => couple_time(setup),
        Experiment::TvIdentity => tv_identity(setup),
        Experiment::Characterization => characterization(setup),
        Experiment::Generator => generator(setup),
        Experiment::Levy => levy(setup),
        Experiment::Concavity => concavity(setup),
    }
}

fn method_of(law: &Law) -> &'static str {
    match law {
        Law::Brownian => "closed-form",
        Law::Subordinated(_) => "quadrature",
    }
}

fn result_row(quantity: String, value: f64, err: f64, method: &str, seed: Option<u64>) -> Vec<String> {
    vec![
        quantity,
        num(value),
        num(err),
        method.into(),
        seed.map_or_else(String::new, |s| s.to_string()),
    ]
}

fn sample_path(setup: &Setup, grid: &[f64], stream: &mut RngStream) -> PathSkeleton {
    match &setup.coupler {
        Coupler::SubordinatedReflection(spec) => subordinated_reflection_path(&setup.x, &setup.y, grid, spec, stream),
        _ => reflection_path(&setup.x, &setup.y, grid, stream),
    }
    .expect("path arguments validated")
}

/// Fraction of replicas still apart at each grid time, with binomial standard errors.
fn survival(setup: &Setup, grid: &[f64], seed: u64) -> Vec<(f64, f64)> {
    let n = setup.config.replicas;
    let alive = par_reduce(
        n,
        || vec![0u64; grid.len()],
        |acc, i| {
            let path = sample_path(setup, grid, &mut RngStream::new(seed, i));
            for (k, &t) in grid.iter().enumerate() {
                if !path.absorbed_by(t) {
                    acc[k] += 1;
                }
            }
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(u, v)| *u += v);
            a
        },
    );
    alive
        .into_iter()
        .map(|c| {
            let p = c as f64 / n as f64;
            (p, (p * (1.0 - p) / n as f64).sqrt())
        })
        .collect()
}

fn couple_time(setup: &Setup) -> Result<Outcome> {
    let grid = &setup.config.grid;
    let law = setup.law();
    let seed = setup.seed(TAG_SURVIVAL);
    let empirical = survival(setup, grid, seed);
    let mut results = Table::new("results.csv", &RESULT_HEADER);
    let mut plot = Table::new("survival.csv", &["t", "empirical", "std_error", "analytic", "analytic_error"]);
    let mut checks = Vec::new();
    for (&t, &(p, se)) in grid.iter().zip(&empirical) {
        let exact = law.tv(setup.gap(), t)?;
        results.push(result_row(format!("survival(t={})", num(t)), p, se, "monte-carlo", Some(seed)));
        results.push(result_row(format!("tv(t={})", num(t)), exact.value, exact.error, method_of(&law), None));
        plot.push(vec![num(t), num(p), num(se), num(exact.value), num(exact.error)]);
        checks.push(Check::agree(
            format!("survival matches tv at t={}", num(t)),
            p,
            se,
            exact.value,
            exact.error,
            THRESHOLDS.equality_z,
        ));
    }
    Ok(Outcome {
        tables: vec![results, plot],
        checks,
    })
}

fn tv_identity(setup: &Setup) -> Result<Outcome> {
    let (t, n, gap) = (setup.config.t, setup.config.replicas, setup.gap());
    let law = setup.law();
    let analytic = law.tv(gap, t)?;
    let mismatch_seed = setup.seed(TAG_MISMATCH);
    let (mismatch, mismatch_se) = mismatch_probability(&setup.coupler, &setup.x, &setup.y, t, n, mismatch_seed)?;
    let survival_seed = setup.seed(TAG_SURVIVAL);
    let (surv, surv_se) = survival(setup, &[t], survival_seed)[0];

    let mut results = Table::new("results.csv", &RESULT_HEADER);
    results.push(result_row("analytic_tv".into(), analytic.value, analytic.error, method_of(&law), None));
    results.push(result_row("empirical_mismatch".into(), mismatch, mismatch_se, "monte-carlo", Some(mismatch_seed)));
    results.push(result_row("empirical_survival".into(), surv, surv_se, "monte-carlo", Some(survival_seed)));

    let z = THRESHOLDS.equality_z;
    let mut checks = vec![
        Check::agree("analytic tv vs mismatch", analytic.value, analytic.error, mismatch, mismatch_se, z),
        Check::agree("analytic tv vs survival", analytic.value, analytic.error, surv, surv_se, z),
        Check::agree("mismatch vs survival", mismatch, mismatch_se, surv, surv_se, z),
    ];
    if let Some(spec) = &setup.spec {
        let atom = spec.atom_at_zero(t);
        if atom > 0.0 {
            results.push(result_row("clock_atom".into(), atom, 0.0, "closed-form", None));
            checks.push(Check::new(
                "analytic tv at least the clock atom",
                analytic.value + analytic.error >= atom,
                format!("tv {} vs atom {}", num(analytic.value), num(atom)),
            ));
            checks.push(Check::new(
                "mismatch at least the clock atom",
                mismatch >= atom - z * mismatch_se,
                format!("mismatch {} vs atom {} - {z} x {}", num(mismatch), num(atom), num(mismatch_se)),
            ));
        }
    }

    let mut plot = Table::new("tv_vs_distance.csv", &["distance", "tv", "error"]);
    for k in 0..=40 {
        let d = gap * k as f64 / 20.0;
        let v = law.tv(d, t)?;
        plot.push(vec![num(d), num(v.value), num(v.error)]);
    }
    Ok(Outcome {
        tables: vec![results, plot],
        checks,
    })
}

fn characterization(setup: &Setup) -> Result<Outcome> {
    let c = setup.config;
    let seed = setup.seed(TAG_CHARACTERIZATION);
    let r = characterization_check(&setup.coupler, &setup.x, &setup.y, c.t, c.s, c.replicas, seed)?;
    let law = setup.law();
    let lhs_err = law.tv(setup.gap(), c.t + c.s)?.error;
    let mut results = Table::new("results.csv", &RESULT_HEADER);
    results.push(result_row(format!("tv(t+s={})", num(c.t + c.s)), r.lhs, lhs_err, method_of(&law), None));
    results.push(result_row(format!("mean_tv_after(t={},s={})", num(c.t), num(c.s)), r.rhs, r.std_error, "monte-carlo", Some(seed)));
    results.push(result_row("z".into(), r.z, 1.0, "standardized-difference", Some(seed)));
    let check = if setup.coupler.is_maximal() {
        Check::new(
            "maximal coupler satisfies the characterization",
            r.z.abs() < THRESHOLDS.equality_z,
            format!("|z| = {} < {}", num(r.z.abs()), THRESHOLDS.equality_z),
        )
    } else {
        Check::new(
            "non-maximal coupler violates the characterization",
            -r.z > THRESHOLDS.strict_inequality_z,
            format!("(rhs - lhs)/se = {} > {}", num(-r.z), THRESHOLDS.strict_inequality_z),
        )
    };
    Ok(Outcome {
        tables: vec![results],
        checks: vec![check],
    })
}

fn digest(parts: &[String]) -> String {
    sha256_hex(parts.join("|").as_bytes())[..16].to_string()
}

fn operation_row(op: &str, inputs: &str, value: f64, err: f64, t_list: &[f64], n: u64, seed: Option<u64>) -> Vec<String> {
    vec![
        op.into(),
        inputs.into(),
        num(value),
        num(err),
        num_list(t_list),
        n.to_string(),
        seed.map_or_else(String::new, |s| s.to_string()),
    ]
}

/// Random start pairs in the generator box, at least [`GENERATOR_MIN_GAP`] apart.
pub fn generator_points(dim: usize, count: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let mut stream = RngStream::new(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut draw = || Vector::from((0..dim).map(|_| stream.random_range(-GENERATOR_BOX..GENERATOR_BOX)).collect::<Vec<_>>());
        let (x, y) = (draw(), draw());
        if x.distance(&y) >= GENERATOR_MIN_GAP {
            out.push((x, y));
        }
    }
    out
}

/// Cross bump, Gaussian bump and trigonometric function on `R^{2d}`.
pub fn generator_functions(dim: usize, width: f64, seed: u64) -> Vec<Box<dyn TestFunction>> {
    let mut stream = RngStream::new(seed, 0);
    let n = 2 * dim;
    let centre = (0..n).map(|_| stream.random_range(-1.0..1.0)).collect();
    let freq = (0..n).map(|_| stream.random_range(-1.0..1.0)).collect();
    let phase = stream.random_range(0.0..std::f64::consts::PI);
    vec![
        Box::new(CrossBump { dim, width }),
        Box::new(GaussianBump { centre, width }),
        Box::new(Trig { freq, phase }),
    ]
}

fn generator(setup: &Setup) -> Result<Outcome> {
    let c = setup.config;
    let points = generator_points(c.dim, c.points, setup.seed(TAG_POINTS));
    let functions = generator_functions(c.dim, c.width, setup.seed(TAG_FUNCTIONS));
    for (j, f) in functions.iter().enumerate() {
        self_check(f.as_ref(), derive_seed(setup.seed(TAG_FUNCTIONS), j as u64 + 1))?;
    }
    let mut results = Table::new("results.csv", &OPERATION_HEADER);
    let mut checks = Vec::new();
    let base = setup.seed(TAG_GENERATOR);
    let name = setup.coupler.name();
    for (p, (x, y)) in points.iter().enumerate() {
        for (j, f) in functions.iter().enumerate() {
            let inputs = digest(&[name.into(), f.name(), format!("{:?}", x.as_slice()), format!("{:?}", y.as_slice())]);
            let seed = derive_seed(base, (p * functions.len() + j) as u64);
            let fd: Extrapolation = generator_fd_estimate(&setup.coupler, f.as_ref(), x, y, &c.t_list, c.replicas, seed)?;
            let exact = analytic_generator(&setup.coupler, f.as_ref(), x, y)?;
            results.push(operation_row(&format!("generator_fd({name},{})", f.name()), &inputs, fd.value, fd.error, &c.t_list, c.replicas, Some(seed)));
            results.push(operation_row(&format!("generator_analytic({name},{})", f.name()), &inputs, exact, 0.0, &[], 0, None));
            checks.push(Check::agree(
                format!("point {p}, {}", f.name()),
                fd.value,
                fd.error,
                exact,
                0.0,
                THRESHOLDS.equality_z,
            ));
        }
    }
    Ok(Outcome {
        tables: vec![results],
        checks,
    })
}

fn levy(setup: &Setup) -> Result<Outcome> {
    let c = setup.config;
    let spec = setup.spec.expect("levy config validated");
    let z = THRESHOLDS.equality_z;
    let mut results = Table::new("results.csv", &OPERATION_HEADER);
    let mut checks = Vec::new();
    let spec_text = spec.describe();

    let unit = levy_density_radial(&spec, 1.0, c.dim)?;
    let inputs = digest(&[spec_text.clone(), c.dim.to_string()]);
    results.push(operation_row("levy_density(|z|=1)", &inputs, unit.value, unit.error, &[], 0, None));

    let single_f = QuarticBump::new(c.dim, c.width);
    let inputs = digest(&[spec_text.clone(), single_f.name()]);
    let quad = levy_integral(&spec, &single_f)?;
    let seed = setup.seed(TAG_LEVY_SINGLE);
    let sampler = IncrementSampler::Single { spec, dim: c.dim };
    let est = small_t_levy_estimate(&sampler, &single_f, &c.t_list, c.replicas, seed)?;
    results.push(operation_row(&format!("levy_integral({})", single_f.name()), &inputs, quad.value, quad.error, &[], 0, None));
    results.push(operation_row(&format!("small_t_levy({})", single_f.name()), &inputs, est.value, est.error, &c.t_list, c.replicas, Some(seed)));
    checks.push(Check::agree("single small-time estimate vs quadrature", est.value, est.error, quad.value, quad.error, z));

    let coupled_f = QuarticBump::new(2 * c.dim, c.width);
    let inputs = digest(&[spec_text, coupled_f.name(), format!("{:?}", c.x), format!("{:?}", c.y)]);
    let quad = coupled_levy_measure(&setup.x, &setup.y, &coupled_f, &spec)?;
    let sampler = IncrementSampler::Coupled { spec, x: setup.x.clone(), y: setup.y.clone() };
    let seed = setup.seed(TAG_LEVY_COUPLED);
    let est = small_t_levy_estimate(&sampler, &coupled_f, &c.t_list, c.replicas, seed)?;
    results.push(operation_row(&format!("coupled_levy_measure({})", coupled_f.name()), &inputs, quad.value, quad.error, &[], 0, None));
    results.push(operation_row(&format!("coupled_small_t_levy({})", coupled_f.name()), &inputs, est.value, est.error, &c.t_list, c.replicas, Some(seed)));
    checks.push(Check::agree("coupled small-time estimate vs quadrature", est.value, est.error, quad.value, quad.error, z));

    // Halving every time should not move the extrapolated limit.
    let halved: Vec<f64> = c.t_list.iter().map(|t| 0.5 * t).collect();
    let seed = setup.seed(TAG_LEVY_STABILITY);
    let finer = small_t_levy_estimate(&sampler, &coupled_f, &halved, c.replicas, seed)?;
    results.push(operation_row(&format!("coupled_small_t_levy({})", coupled_f.name()), &inputs, finer.value, finer.error, &halved, c.replicas, Some(seed)));
    checks.push(Check::agree("coupled estimate stable under halved times", est.value, est.error, finer.value, finer.error, z));

    Ok(Outcome {
        tables: vec![results],
        checks,
    })
}

fn concavity(setup: &Setup) -> Result<Outcome> {
    let c = setup.config;
    let law = setup.law();
    let grid = &c.grid;
    let second = concavity_check(&law, c.t, grid)?;
    let errors = grid.iter().map(|&d| Ok(law.tv(d, c.t)?.error)).collect::<Result<Vec<f64>>>()?;
    let mut results = Table::new("results.csv", &RESULT_HEADER);
    let mut checks = Vec::new();
    for (k, &v) in second.iter().enumerate() {
        let i = k + 1;
        let (hl, hr) = (grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
        let err = (hl * errors[i + 1] + (hl + hr) * errors[i] + hr * errors[i - 1]) / (0.5 * (hl + hr));
        results.push(result_row(format!("second_difference(D={})", num(grid[i])), v, err, method_of(&law), None));
        checks.push(Check::new(
            format!("strictly concave at D={}", num(grid[i])),
            v + err < -THRESHOLDS.concavity_margin,
            format!("{} + {} < -{}", num(v), num(err), THRESHOLDS.concavity_margin),
        ));
    }
    Ok(Outcome {
        tables: vec![results],
        checks,
    })
}
