//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any fails.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use mirrorlab_cli::{run, Experiment, ExperimentConfig, SubordinatorConfig};
use mirrorlab_core::analytics::{mismatch_probability, tv_subordinated};
use mirrorlab_core::couplers::{mirror_pair, RadialProfile};
use mirrorlab_core::generatorlab::levy_density_radial;
use mirrorlab_core::special::norm_cdf;
use mirrorlab_core::stats::ks_test;
use mirrorlab_core::{make_frame, reflect, Coupler, RngStream, SubordinatorSpec, Vector};
use rand::Rng;

const N: u64 = 1_000_000;
const KS_N: u64 = 100_000;
const KS_LEVEL: f64 = 1e-3;

struct Verdict {
    passed: bool,
    detail: String,
}

impl Verdict {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Verdict {
            passed,
            detail: detail.into(),
        }
    }

    fn all(parts: Vec<Verdict>) -> Self {
        let passed = parts.iter().all(|v| v.passed);
        let failing: Vec<_> = parts.iter().filter(|v| !v.passed).map(|v| v.detail.as_str()).collect();
        let detail = if passed {
            format!("{} checks", parts.len())
        } else {
            failing.join("; ")
        };
        Verdict::new(passed, detail)
    }
}

fn v(c: &[f64]) -> Vector {
    Vector::new(c.to_vec()).unwrap()
}

fn pair(dim: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; dim];
    let mut y = vec![0.0; dim];
    x[0] = 1.0;
    y[0] = -1.0;
    (x, y)
}

fn config(kind: Experiment, out: &Path, edit: impl FnOnce(&mut ExperimentConfig)) -> ExperimentConfig {
    let mut c = ExperimentConfig::defaults(kind);
    c.out = out.join(format!("{kind}-{}", COUNTER.fetch_add(1, std::sync::atomic::Ordering::Relaxed)));
    edit(&mut c);
    c
}

static COUNTER: std::sync::atomic::AtomicUsize = std::sync::atomic::AtomicUsize::new(0);

/// Runs the harness and turns its checks into a verdict.
fn harness(c: &ExperimentConfig, label: &str) -> Verdict {
    match run(c) {
        Ok(report) => {
            let failed: Vec<_> = report
                .manifest
                .checks
                .iter()
                .filter(|k| !k.passed)
                .map(|k| format!("{label}: {} ({})", k.name, k.detail))
                .collect();
            if failed.is_empty() {
                Verdict::new(true, format!("{label}: {} checks", report.manifest.checks.len()))
            } else {
                Verdict::new(false, failed.join("; "))
            }
        }
        Err(e) => Verdict::new(false, format!("{label}: {e}")),
    }
}

fn brownian_maximality() -> Verdict {
    let exact = 2.0 * norm_cdf(1.0) - 1.0;
    Verdict::all(
        [1, 2]
            .into_iter()
            .map(|d| {
                let (x, y) = pair(d);
                let (p, _) = mismatch_probability(&Coupler::Reflection, &v(&x), &v(&y), 1.0, N, 101 + d as u64).unwrap();
                Verdict::new((p - exact).abs() < 0.002, format!("d={d}: mismatch {p:.6} vs {exact:.6}"))
            })
            .collect(),
    )
}

fn coupling_time_law(out: &Path) -> Verdict {
    harness(&config(Experiment::CoupleTime, out, |_| {}), "survival curve")
}

fn triple_identity(out: &Path) -> Verdict {
    let spec = SubordinatorSpec::stable(0.5, 1.0).unwrap();
    let tv = tv_subordinated(&v(&[1.0]), &v(&[-1.0]), 1.0, &spec).unwrap().value;
    let exact = 2.0 / PI * SQRT_2.atan();
    Verdict::all(vec![
        Verdict::new((tv - exact).abs() < 1e-8, format!("quadrature tv {tv} vs {exact}")),
        harness(&config(Experiment::TvIdentity, out, |_| {}), "stable(1/2) triple"),
    ])
}

fn atom_term(out: &Path) -> Verdict {
    harness(
        &config(Experiment::TvIdentity, out, |c| {
            c.subordinator = Some(SubordinatorConfig::compound_poisson(1.0));
        }),
        "compound Poisson",
    )
}

fn characterization(out: &Path) -> Verdict {
    Verdict::all(vec![
        harness(&config(Experiment::Characterization, out, |_| {}), "reflection"),
        harness(
            &config(Experiment::Characterization, out, |c| c.coupler = "synchronized".into()),
            "synchronized",
        ),
    ])
}

fn generator_suite(out: &Path) -> Verdict {
    let mut parts = Vec::new();
    for dim in [1, 2] {
        for coupler in ["synchronized", "antithetic", "reflection"] {
            let (x, y) = pair(dim);
            parts.push(harness(
                &config(Experiment::Generator, out, |c| {
                    c.coupler = coupler.into();
                    c.dim = dim;
                    c.x = x;
                    c.y = y;
                }),
                &format!("{coupler} d={dim}"),
            ));
        }
    }
    Verdict::all(parts)
}

fn levy_suite(out: &Path) -> Verdict {
    let spec = SubordinatorSpec::stable(0.5, 1.0).unwrap();
    let n1 = levy_density_radial(&spec, 1.0, 1).unwrap().value;
    let exact = 1.0 / (SQRT_2 * PI);
    Verdict::all(vec![
        Verdict::new((n1 - exact).abs() < 1e-9, format!("n(1) = {n1} vs {exact}")),
        harness(&config(Experiment::Levy, out, |_| {}), "cauchy levy"),
    ])
}

fn concavity(out: &Path) -> Verdict {
    Verdict::all(vec![
        harness(&config(Experiment::Concavity, out, |_| {}), "brownian"),
        harness(
            &config(Experiment::Concavity, out, |c| {
                c.coupler = "subordinated-reflection".into();
                c.subordinator = Some(SubordinatorConfig::stable(0.5));
            }),
            "stable(1/2)",
        ),
    ])
}

fn geometry_properties() -> Verdict {
    let mut stream = RngStream::new(9001, 0);
    let mut worst: f64 = 0.0;
    for k in 0..10_000 {
        let dim = 1 + k % 5;
        let mut draw = |s: f64| Vector::from((0..dim).map(|_| s * stream.random_range(-1.0..1.0)).collect::<Vec<_>>());
        let (x, y, z, w) = (draw(10.0), draw(10.0), draw(10.0), draw(10.0));
        let frame = make_frame(&x, &y).unwrap();
        let rz = reflect(&frame, &z).unwrap();
        let rw = reflect(&frame, &w).unwrap();
        let errs = [
            reflect(&frame, &rz).unwrap().distance(&z),
            (rz.distance(&rw) - z.distance(&w)).abs(),
            reflect(&frame, &x).unwrap().distance(&y),
            reflect(&frame, &y).unwrap().distance(&x),
        ];
        worst = errs.iter().fold(worst, |a, &b| a.max(b));
    }
    Verdict::new(worst < 1e-10, format!("geometry max error {worst:e}"))
}

fn ks_first_coordinates(
    label: &str,
    seed: u64,
    draw: impl Fn(&mut RngStream) -> (f64, f64),
    cdf_first: impl Fn(f64) -> f64,
    cdf_second: impl Fn(f64) -> f64,
) -> Verdict {
    let (mut a, mut b): (Vec<f64>, Vec<f64>) = (0..KS_N).map(|i| draw(&mut RngStream::new(seed, i))).unzip();
    let (pa, pb) = (ks_test(&mut a, cdf_first), ks_test(&mut b, cdf_second));
    Verdict::new(pa > KS_LEVEL && pb > KS_LEVEL, format!("{label}: p = {pa:.4}, {pb:.4}"))
}

fn marginal_properties() -> Verdict {
    let t: f64 = 1.5;
    let sd = t.sqrt();
    let cauchy = SubordinatorSpec::stable(0.5, 1.0).unwrap();
    let gamma = t / SQRT_2;
    let couplers = [
        Coupler::Reflection,
        Coupler::Synchronized,
        Coupler::Antithetic,
        Coupler::Switch,
        Coupler::SubordinatedReflection(cauchy),
    ];
    let mut parts = Vec::new();
    for dim in [1, 2] {
        let (x, y) = pair(dim);
        let (x, y) = (v(&x), v(&y));
        for (k, coupler) in couplers.iter().enumerate() {
            let draw = |s: &mut RngStream| {
                let p = coupler.pair_at(&x, &y, t, s).unwrap();
                (p.first()[0], p.second()[0])
            };
            let label = format!("{} d={dim}", coupler.name());
            let seed = 500 + 10 * dim as u64 + k as u64;
            parts.push(if coupler.is_brownian() {
                ks_first_coordinates(&label, seed, draw, |z| norm_cdf((z - 1.0) / sd), |z| norm_cdf((z + 1.0) / sd))
            } else {
                let cdf = |c: f64| move |z: f64| 0.5 + ((z - c) / gamma).atan() / PI;
                ks_first_coordinates(&label, seed, draw, cdf(1.0), cdf(-1.0))
            });
        }
        let profile = RadialProfile::gaussian(dim, t).unwrap();
        let draw = |s: &mut RngStream| {
            let p = mirror_pair(&profile, &x, &y, s).unwrap();
            (p.first()[0], p.second()[0])
        };
        parts.push(ks_first_coordinates(
            &format!("mirror d={dim}"),
            600 + dim as u64,
            draw,
            |z| norm_cdf((z - 1.0) / sd),
            |z| norm_cdf((z + 1.0) / sd),
        ));
    }
    Verdict::all(parts)
}

fn mirror_reflection_property() -> Verdict {
    let mut parts = Vec::new();
    for dim in [1, 2, 3] {
        let (x, y) = pair(dim);
        let (x, y) = (v(&x), v(&y));
        let frame = make_frame(&x, &y).unwrap();
        let profile = RadialProfile::gaussian(dim, 1.0).unwrap();
        let mut worst: f64 = 0.0;
        let mut unmerged = 0;
        for i in 0..KS_N {
            let p = mirror_pair(&profile, &x, &y, &mut RngStream::new(700 + dim as u64, i)).unwrap();
            if !p.is_merged() {
                unmerged += 1;
                worst = worst.max(reflect(&frame, p.first()).unwrap().distance(p.second()));
            }
        }
        parts.push(Verdict::new(
            unmerged > 0 && worst < 1e-12,
            format!("mirror d={dim}: {unmerged} unmerged, max error {worst:e}"),
        ));
    }
    Verdict::all(parts)
}

fn thread_invariance(out: &Path) -> Verdict {
    let mut parts = Vec::new();
    for kind in [Experiment::CoupleTime, Experiment::TvIdentity, Experiment::Characterization, Experiment::Levy] {
        let runs: Vec<_> = [1usize, 8]
            .iter()
            .map(|&threads| {
                let c = config(kind, out, |c| {
                    c.replicas = 100_000;
                    c.threads = threads;
                });
                run(&c).map(|r| r.out)
            })
            .collect();
        let verdict = match (&runs[0], &runs[1]) {
            (Ok(a), Ok(b)) => {
                let same = ["results.csv", "survival.csv", "tv_vs_distance.csv"].iter().all(|f| {
                    let (fa, fb) = (std::fs::read(a.join(f)), std::fs::read(b.join(f)));
                    match (fa, fb) {
                        (Ok(x), Ok(y)) => x == y,
                        (Err(_), Err(_)) => true,
                        _ => false,
                    }
                });
                Verdict::new(same, format!("{kind}: outputs identical on 1 and 8 threads"))
            }
            (Err(e), _) | (_, Err(e)) => Verdict::new(false, format!("{kind}: {e}")),
        };
        parts.push(verdict);
    }
    Verdict::all(parts)
}

fn property_suites(out: &Path) -> Verdict {
    Verdict::all(vec![
        geometry_properties(),
        marginal_properties(),
        mirror_reflection_property(),
        thread_invariance(out),
    ])
}

fn main() -> ExitCode {
    let dir = tempfile::tempdir().expect("temporary directory");
    let out = dir.path();
    type Criterion<'a> = (&'a str, Duration, Box<dyn Fn() -> Verdict + 'a>);
    let criteria: Vec<Criterion> = vec![
        ("1 brownian maximality", Duration::from_secs(30), Box::new(brownian_maximality)),
        ("2 coupling-time law", Duration::from_secs(60), Box::new(|| coupling_time_law(out))),
        ("3 triple identity", Duration::from_secs(120), Box::new(|| triple_identity(out))),
        ("4 atom term", Duration::from_secs(30), Box::new(|| atom_term(out))),
        ("5 characterization", Duration::from_secs(60), Box::new(|| characterization(out))),
        ("6 generator suite", Duration::from_secs(300), Box::new(|| generator_suite(out))),
        ("7 levy measure suite", Duration::from_secs(300), Box::new(|| levy_suite(out))),
        ("8 concavity", Duration::from_secs(10), Box::new(|| concavity(out))),
        ("9 property suites", Duration::from_secs(600), Box::new(|| property_suites(out))),
    ];
    let mut failures = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let verdict = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= *budget;
        let passed = verdict.passed && in_time;
        if !passed {
            failures += 1;
        }
        println!(
            "{} criterion {name}: {} [{:.1}s of {}s]",
            if passed { "PASS" } else { "FAIL" },
            verdict.detail,
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
