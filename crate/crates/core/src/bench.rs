//! Measurement harness: hypercube-surface sampling, worst-case margins,
//! variant sweeps and CSV output, plus the rational-polynomial data generator.

use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::abstraction::{BuildOptions, GinnacerAbstraction};
use crate::baseline::MergeBaseline;
use crate::error::{check_len, Error, Result};
use crate::icf::NegInput;
use crate::interval::IntervalVector;
use crate::network::Network;

/// Number of repetitions for timing medians.
pub const TIMING_REPEATS: usize = 13;

/// Anything that maps a concrete input to output bounds.
pub trait PointEvaluator: Sync {
    fn input_dim(&self) -> usize;
    fn eval_point(&self, x: &[f64]) -> Result<IntervalVector>;
}

impl PointEvaluator for GinnacerAbstraction {
    fn input_dim(&self) -> usize {
        GinnacerAbstraction::input_dim(self)
    }

    fn eval_point(&self, x: &[f64]) -> Result<IntervalVector> {
        self.eval(x)
    }
}

impl PointEvaluator for MergeBaseline {
    fn input_dim(&self) -> usize {
        MergeBaseline::input_dim(self)
    }

    fn eval_point(&self, x: &[f64]) -> Result<IntervalVector> {
        self.eval(x)
    }
}

/// The original network, as a zero-width evaluator.
impl PointEvaluator for Network {
    fn input_dim(&self) -> usize {
        Network::input_dim(self)
    }

    fn eval_point(&self, x: &[f64]) -> Result<IntervalVector> {
        Ok(IntervalVector::degenerate(&self.forward(x)?))
    }
}

/// `n` points with `‖x − c‖_∞ = δ`: uniform in the cube, then one uniformly
/// chosen coordinate is pushed to `c_i ± δ` with a uniform sign.
pub fn sample_hypercube_surface(c: &[f64], delta: f64, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::InvalidDelta(delta));
    }
    if c.is_empty() {
        return Err(Error::InvalidConfig("centroid is empty".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n)
        .map(|_| {
            let mut x: Vec<f64> = c.iter().map(|&ci| ci + rng.random_range(-delta..=delta)).collect();
            let k = rng.random_range(0..c.len());
            x[k] = if rng.random_bool(0.5) {
                c[k] + delta
            } else {
                c[k] - delta
            };
            x
        })
        .collect())
}

/// Largest coordinate width of the output interval over all points.
pub fn max_margin<E: PointEvaluator + ?Sized>(evaluator: &E, points: &[Vec<f64>]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::InvalidConfig("no points to evaluate".into()));
    }
    points
        .par_iter()
        .map(|x| evaluator.eval_point(x).map(|out| out.max_width()))
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

/// `y = (−0.035x⁵ − 0.12x³ + x) / (0.021x⁶ − 0.10x⁴ + 0.55x² + 1)`.
pub fn polynomial(x: f64) -> f64 {
    let x2 = x * x;
    let num = -0.035 * x2 * x2 * x - 0.12 * x2 * x + x;
    let den = 0.021 * x2 * x2 * x2 - 0.10 * x2 * x2 + 0.55 * x2 + 1.0;
    num / den
}

/// 201 samples of [`polynomial`] on `[-10, 10]` with step 0.1.
pub fn sample_polynomial() -> Vec<(f64, f64)> {
    (-100..=100)
        .map(|i| {
            let x = i as f64 / 10.0;
            (x, polynomial(x))
        })
        .collect()
}

pub fn write_polynomial_csv<W: Write>(out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"])?;
    for (x, y) in sample_polynomial() {
        w.write_record([x.to_string(), y.to_string()])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub centroid: Vec<f64>,
    pub deltas: Vec<f64>,
    pub samples_per_delta: usize,
    pub seed: u64,
    /// When false the timing columns are left empty so that the output only
    /// depends on the inputs.
    pub timing: bool,
}

impl BenchConfig {
    pub fn new(centroid: Vec<f64>, deltas: Vec<f64>) -> Self {
        Self {
            centroid,
            deltas,
            samples_per_delta: 10_000,
            seed: 0,
            timing: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples_per_delta == 0 {
            return Err(Error::InvalidConfig("samples_per_delta must be at least 1".into()));
        }
        if self.deltas.is_empty() {
            return Err(Error::InvalidConfig("no deltas given".into()));
        }
        if let Some(&d) = self.deltas.iter().find(|d| !(**d > 0.0 && d.is_finite())) {
            return Err(Error::InvalidDelta(d));
        }
        if self.deltas.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidConfig("deltas must be strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Ginnacer,
    Baseline,
    /// Plain interval propagation of the whole box `[c − δ, c + δ]`.
    Ibp,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Ginnacer => "ginnacer",
            Self::Baseline => "baseline",
            Self::Ibp => "ibp",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "ginnacer" => Ok(Self::Ginnacer),
            "baseline" => Ok(Self::Baseline),
            "ibp" => Ok(Self::Ibp),
            other => Err(format!("unknown variant {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchPlan {
    pub variants: Vec<Variant>,
    pub skip_sweep: Vec<usize>,
    pub neg_input: NegInput,
}

impl Default for BenchPlan {
    fn default() -> Self {
        Self {
            variants: vec![Variant::Ginnacer, Variant::Baseline, Variant::Ibp],
            skip_sweep: vec![0],
            neg_input: NegInput::Auto,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub variant: &'static str,
    pub skip_layers: usize,
    pub delta: f64,
    pub max_margin: f64,
    pub groups_total: usize,
    pub relus_total: usize,
    pub build_ms: Option<f64>,
    pub eval_us_median: Option<f64>,
}

/// Runs every variant at every δ; the same surface samples are shared by all
/// variants at a given δ. GINNACER and baseline rows are produced once per
/// entry of the skip sweep, the IBP rows once.
pub fn run_benchmark(net: &Network, config: &BenchConfig, plan: &BenchPlan) -> Result<Vec<BenchRow>> {
    config.validate()?;
    check_len("benchmark centroid", net.input_dim(), config.centroid.len())?;
    let samples: Vec<Vec<Vec<f64>>> = config
        .deltas
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            sample_hypercube_surface(
                &config.centroid,
                d,
                config.samples_per_delta,
                config.seed.wrapping_add(k as u64),
            )
        })
        .collect::<Result<_>>()?;

    let wants = |v| plan.variants.contains(&v);
    let mut rows = Vec::new();
    if wants(Variant::Ginnacer) || wants(Variant::Baseline) {
        for &skip in &plan.skip_sweep {
            let opts = BuildOptions {
                neg_input: plan.neg_input,
                skip_layers: skip,
                input_lower_bound: None,
            };
            let build = || GinnacerAbstraction::build(net, &config.centroid, &opts);
            let abs = build()?;
            if wants(Variant::Ginnacer) {
                let build_ms = config.timing.then(|| median_ms(build)).transpose()?;
                let stats = abs.relu_stats();
                for (d, points) in config.deltas.iter().zip(&samples) {
                    rows.push(BenchRow {
                        variant: Variant::Ginnacer.name(),
                        skip_layers: skip,
                        delta: *d,
                        max_margin: max_margin(&abs, points)?,
                        groups_total: stats.abstracted_total(),
                        relus_total: stats.abstracted_total(),
                        build_ms,
                        eval_us_median: config.timing.then(|| median_eval_us(&abs, points)).transpose()?,
                    });
                }
            }
            if wants(Variant::Baseline) {
                let build = || MergeBaseline::matched_to(net, &abs, config.seed);
                let bl = build()?;
                let build_ms = config.timing.then(|| median_ms(build)).transpose()?;
                for (d, points) in config.deltas.iter().zip(&samples) {
                    rows.push(BenchRow {
                        variant: Variant::Baseline.name(),
                        skip_layers: skip,
                        delta: *d,
                        max_margin: max_margin(&bl, points)?,
                        groups_total: bl.groups_total(),
                        relus_total: bl.relus_total(),
                        build_ms,
                        eval_us_median: config.timing.then(|| median_eval_us(&bl, points)).transpose()?,
                    });
                }
            }
        }
    }
    if wants(Variant::Ibp) {
        for &d in &config.deltas {
            let bx = IntervalVector::around(&config.centroid, d)?;
            let out = net.interval_forward(&bx)?;
            let eval_us_median = if config.timing {
                let mut times = (0..TIMING_REPEATS)
                    .map(|_| {
                        let t = Instant::now();
                        net.interval_forward(&bx).map(|_| t.elapsed().as_secs_f64() * 1e6)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Some(median(&mut times))
            } else {
                None
            };
            rows.push(BenchRow {
                variant: Variant::Ibp.name(),
                skip_layers: 0,
                delta: d,
                max_margin: out.max_width(),
                groups_total: net.relu_count(),
                relus_total: net.relu_count(),
                build_ms: None,
                eval_us_median,
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn median_ms<T>(f: impl Fn() -> Result<T>) -> Result<f64> {
    let mut times = Vec::with_capacity(TIMING_REPEATS);
    for _ in 0..TIMING_REPEATS {
        let t = Instant::now();
        f()?;
        times.push(t.elapsed().as_secs_f64() * 1e3);
    }
    Ok(median(&mut times))
}

fn median_eval_us<E: PointEvaluator>(e: &E, points: &[Vec<f64>]) -> Result<f64> {
    let mut times = points
        .iter()
        .map(|x| {
            let t = Instant::now();
            e.eval_point(x).map(|_| t.elapsed().as_secs_f64() * 1e6)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(median(&mut times))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::random_network;

    #[test]
    fn surface_points_lie_on_the_surface() {
        let c = [0.5, -1.0, 3.0, 0.0];
        for delta in [1e-3, 0.1, 2.0, 10.0] {
            for x in sample_hypercube_surface(&c, delta, 500, 3).unwrap() {
                let dist = x.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                assert!((dist - delta).abs() <= 1e-12, "{dist} vs {delta}");
            }
        }
    }

    #[test]
    fn one_dimensional_surface_is_two_points() {
        let pts = sample_hypercube_surface(&[0.0], 2.0, 1, 9).unwrap();
        assert_eq!(pts.len(), 1);
        assert!(pts[0][0] == 2.0 || pts[0][0] == -2.0);
        let many = sample_hypercube_surface(&[0.0], 2.0, 200, 9).unwrap();
        assert!(many.iter().any(|p| p[0] == 2.0) && many.iter().any(|p| p[0] == -2.0));
    }

    #[test]
    fn non_projected_coordinates_are_uniform() {
        // Kolmogorov–Smirnov against U[c − δ, c + δ]
        let (c, delta) = ([1.0, 1.0, 1.0], 0.5);
        let pts = sample_hypercube_surface(&c, delta, 100_000, 17).unwrap();
        let mut free: Vec<f64> = pts
            .iter()
            .flat_map(|p| {
                p.iter()
                    .zip(&c)
                    .filter(|(x, ci)| ((*x - *ci).abs() - delta).abs() > 1e-15)
                    .map(|(x, ci)| (x - ci + delta) / (2.0 * delta))
                    .collect::<Vec<_>>()
            })
            .collect();
        free.sort_by(f64::total_cmp);
        let n = free.len() as f64;
        let d = free
            .iter()
            .enumerate()
            .map(|(i, &u)| ((i + 1) as f64 / n - u).max(u - i as f64 / n))
            .fold(0.0, f64::max);
        // critical value at alpha = 0.01
        assert!(d < 1.63 / n.sqrt(), "KS statistic {d}");
        assert!(free.len() > 150_000);
    }

    #[test]
    fn sampling_is_seeded() {
        let a = sample_hypercube_surface(&[0.0, 0.0], 1.0, 50, 5).unwrap();
        assert_eq!(a, sample_hypercube_surface(&[0.0, 0.0], 1.0, 50, 5).unwrap());
        assert_ne!(a, sample_hypercube_surface(&[0.0, 0.0], 1.0, 50, 6).unwrap());
    }

    #[test]
    fn bad_delta_rejected() {
        assert!(matches!(
            sample_hypercube_surface(&[0.0], 0.0, 1, 0),
            Err(Error::InvalidDelta(_))
        ));
        assert!(sample_hypercube_surface(&[0.0], -1.0, 1, 0).is_err());
    }

    #[test]
    fn polynomial_samples() {
        let s = sample_polynomial();
        assert_eq!(s.len(), 201);
        assert_eq!(s[0].0, -10.0);
        assert_eq!(s[200].0, 10.0);
        assert_eq!(s[100], (0.0, 0.0));
        assert_eq!(s[110].0, 1.0);
        assert!((s[110].1 - 0.845 / 1.471).abs() <= 1e-12);
        // odd function
        for i in 0..=100 {
            assert_eq!(s[100 - i].1, -s[100 + i].1);
        }
    }

    #[test]
    fn exact_evaluator_has_zero_margin() {
        let net = random_network(&[2, 8, 1], 0).unwrap();
        let pts = sample_hypercube_surface(&[0.0, 0.0], 1.0, 100, 0).unwrap();
        assert_eq!(max_margin(&net, &pts).unwrap(), 0.0);
        assert!(max_margin(&net, &[]).is_err());
    }

    #[test]
    fn centroid_margin_is_zero() {
        let net = random_network(&[3, 16, 16, 2], 8).unwrap();
        let c = vec![0.3, -0.7, 1.1];
        let abs = GinnacerAbstraction::build(&net, &c, &BuildOptions::default()).unwrap();
        assert!(max_margin(&abs, &[c]).unwrap() <= 1e-9);
    }

    #[test]
    fn config_validation() {
        let mut cfg = BenchConfig::new(vec![0.0], vec![0.1, 1.0]);
        assert!(cfg.validate().is_ok());
        cfg.deltas = vec![1.0, 0.1];
        assert!(cfg.validate().is_err());
        cfg.deltas = vec![-1.0];
        assert!(matches!(cfg.validate(), Err(Error::InvalidDelta(_))));
        cfg.deltas = vec![1.0];
        cfg.samples_per_delta = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn benchmark_rows_and_csv() {
        let net = random_network(&[2, 8, 8, 1], 1).unwrap();
        let mut cfg = BenchConfig::new(vec![0.1, -0.2], vec![0.1, 1.0]);
        cfg.samples_per_delta = 200;
        let plan = BenchPlan {
            skip_sweep: vec![0, 2],
            ..Default::default()
        };
        let rows = run_benchmark(&net, &cfg, &plan).unwrap();
        // 2 skips x 2 variants x 2 deltas + 2 ibp rows
        assert_eq!(rows.len(), 10);
        for r in rows.iter().filter(|r| r.skip_layers == 2 && r.variant == "ginnacer") {
            assert_eq!(r.max_margin, 0.0);
        }
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        assert_eq!(
            rdr.headers().unwrap().iter().collect::<Vec<_>>(),
            [
                "variant",
                "skip_layers",
                "delta",
                "max_margin",
                "groups_total",
                "relus_total",
                "build_ms",
                "eval_us_median"
            ]
        );
        let parsed: Vec<csv::StringRecord> = rdr.records().collect::<std::result::Result<_, _>>().unwrap();
        assert_eq!(parsed.len(), rows.len());
        assert_eq!(parsed[0][3].parse::<f64>().unwrap(), rows[0].max_margin);
        assert_eq!(&parsed[0][6], "");
    }
}
