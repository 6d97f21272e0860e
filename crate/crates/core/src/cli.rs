//! Command-line front end: one command per run, CSV tables and key/value reports.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use rayon::prelude::*;

use crate::asymptotics::{geo_asymp_csv, geo_asymp_detail, limit_ratio, INV_SQRT_2PI};
use crate::bernstein::PhiEvaluator;
use crate::conditions;
use crate::envelope::{self, ConstantSet};
use crate::error::{Error, Result};
use crate::examples_catalog::{window_csv, window_envelope, LogReal, OscillatingSpec, Parity};
use crate::levy_model::{make_catalog_model, Family, LevyModel, ModelSpec};
use crate::reference_density::{density_by, empirical_density, reference_density, sample_paths, Method};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Calculus,
    Envelope,
    Density,
    Certify,
    Conditions,
    Asymptotics,
    Oscillating,
}

#[derive(Debug, Parser)]
#[command(name = "subordinator", about = "Laplace-exponent calculus and density envelopes for driftless subordinators")]
pub struct Args {
    /// inline `family:k=v,...` or a path to a model file
    #[arg(long)]
    pub model: String,
    #[arg(long, value_enum)]
    pub cmd: Command,
    /// `lo:hi:n[:log]` or a single value
    #[arg(long)]
    pub t: Option<String>,
    #[arg(long)]
    pub x: Option<String>,
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// fourier | saddle | closed_form | series | monte_carlo
    #[arg(long)]
    pub method: Option<String>,
    /// relative quadrature tolerance (Monte Carlo: kernel bandwidth relative to x)
    #[arg(long)]
    pub tol: Option<f64>,
}

/// Evenly spaced (or log-spaced) points `lo:hi:n[:log]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub log: bool,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.lo];
        }
        (0..self.n)
            .map(|i| {
                let f = i as f64 / (self.n - 1) as f64;
                if self.log {
                    (self.lo.ln() + f * (self.hi.ln() - self.lo.ln())).exp()
                } else {
                    self.lo + f * (self.hi - self.lo)
                }
            })
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Config(format!("grid '{s}' is not lo:hi:n[:log] or a number"));
        let parts: Vec<&str> = s.trim().split(':').collect();
        let num = |p: &str| p.trim().parse::<f64>().map_err(|_| bad());
        let g = match parts.as_slice() {
            [v] => {
                let v = num(v)?;
                GridSpec { lo: v, hi: v, n: 1, log: false }
            }
            [lo, hi, n] | [lo, hi, n, _] => {
                let log = match parts.get(3) {
                    None => false,
                    Some(&"log") => true,
                    Some(&"lin") => false,
                    Some(_) => return Err(bad()),
                };
                GridSpec { lo: num(lo)?, hi: num(hi)?, n: n.trim().parse().map_err(|_| bad())?, log }
            }
            _ => return Err(bad()),
        };
        if g.n == 0 || !g.lo.is_finite() || !g.hi.is_finite() || g.hi < g.lo {
            return Err(Error::Config(format!("grid '{s}' is empty or reversed")));
        }
        if g.log && !(g.lo > 0.0) {
            return Err(Error::Config(format!("log grid '{s}' needs lo > 0")));
        }
        Ok(g)
    }
}

/// Everything a run needs, resolved from flags and an optional model file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: ModelSpec,
    pub cmd: Command,
    pub t: Vec<f64>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub method: Option<Method>,
    pub tol: Option<f64>,
}

/// Model file: `key = value` lines, `#` comments. Keys: `family`, `params`
/// (comma-separated k=v), `knots` (path to whitespace-separated `s ν(s)`
/// rows, relative to the file), and optional default grids `t`, `x`, `y`, `seed`.
#[derive(Debug, Clone, Default)]
pub struct ModelFile {
    pub spec: ModelSpec,
    pub t: Option<String>,
    pub x: Option<String>,
    pub y: Option<String>,
    pub seed: Option<u64>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

pub fn parse_knots(text: &str) -> Result<Vec<(f64, f64)>> {
    let mut knots = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(|c: char| c.is_whitespace() || c == ',').filter(|c| !c.is_empty()).collect();
        let bad = || Error::Config(format!("knot line {} is not two numbers", i + 1));
        if cols.len() != 2 {
            return Err(bad());
        }
        knots.push((cols[0].parse().map_err(|_| bad())?, cols[1].parse().map_err(|_| bad())?));
    }
    Ok(knots)
}

pub fn parse_model_file(text: &str, base: &Path) -> Result<ModelFile> {
    let mut mf = ModelFile::default();
    let mut family = None;
    let mut params = String::new();
    let mut knots = None;
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("model file line {} is not key = value", i + 1)))?;
        let v = v.trim().to_string();
        match k.trim() {
            "family" => family = Some(v),
            "params" => params = v,
            "knots" => knots = Some(v),
            "t" => mf.t = Some(v),
            "x" => mf.x = Some(v),
            "y" => mf.y = Some(v),
            "seed" => mf.seed = Some(v.parse().map_err(|_| Error::Config(format!("seed '{v}' is not an integer")))?),
            other => return Err(Error::Config(format!("unknown model file key '{other}'"))),
        }
    }
    let family = family.ok_or_else(|| Error::Config("model file has no family".into()))?;
    mf.spec = ModelSpec::from_str(&format!("{family}:{params}"))?;
    if let Some(k) = knots {
        mf.spec.knots = parse_knots(&read(&base.join(&k))?)?;
    }
    Ok(mf)
}

impl RunConfig {
    pub fn from_args(a: &Args) -> Result<Self> {
        let path = Path::new(&a.model);
        let mf = if path.is_file() {
            parse_model_file(&read(path)?, path.parent().unwrap_or(Path::new(".")))?
        } else {
            let mut spec = ModelSpec::from_str(&a.model)?;
            if spec.family == "tabulated" {
                let file = spec
                    .params
                    .iter()
                    .find(|(k, _)| k == "file")
                    .map(|(_, v)| v.clone())
                    .ok_or_else(|| Error::Config("tabulated needs file=<knots>".into()))?;
                spec.knots = parse_knots(&read(Path::new(&file))?)?;
            }
            ModelFile { spec, ..Default::default() }
        };
        let grid = |flag: &Option<String>, file: &Option<String>, default: &str| -> Result<Vec<f64>> {
            let s = flag.as_deref().or(file.as_deref()).unwrap_or(default);
            Ok(GridSpec::from_str(s)?.values())
        };
        let method = a.method.as_deref().map(Method::from_str).transpose()?;
        if let Some(tol) = a.tol {
            if !(tol > 0.0 && tol < 1.0) {
                return Err(Error::Config(format!("--tol {tol} must lie in (0, 1)")));
            }
        }
        Ok(RunConfig {
            model: mf.spec,
            cmd: a.cmd,
            t: grid(&a.t, &mf.t, "1")?,
            x: grid(&a.x, &mf.x, "0.1:10:20:log")?,
            y: grid(&a.y, &mf.y, "0.1:10:10:log")?,
            seed: a.seed.or(mf.seed).unwrap_or(0),
            out: a.out.clone(),
            method,
            tol: a.tol,
        })
    }
}

/// 12 significant digits; non-finite values spelled out.
pub fn fmt12(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.11e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn or_nan(r: Result<f64>) -> f64 {
    r.unwrap_or(f64::NAN)
}

fn status(r: &Result<impl Sized>) -> &'static str {
    match r {
        Ok(_) => "ok",
        Err(e) => e.code(),
    }
}

fn pairs(a: &[f64], b: &[f64]) -> Vec<(f64, f64)> {
    a.iter().flat_map(|&u| b.iter().map(move |&v| (u, v))).collect()
}

/// Fails when every row of a table failed.
fn require_some<T>(rows: &[Result<T>]) -> Result<()> {
    match rows.iter().find_map(|r| r.as_ref().err()) {
        Some(e) if rows.iter().all(|r| r.is_err()) => Err(e.clone()),
        _ => Ok(()),
    }
}

fn evaluator(cfg: &RunConfig) -> Result<PhiEvaluator> {
    let m = make_catalog_model(&cfg.model)?;
    Ok(match cfg.tol {
        Some(tol) if cfg.method != Some(Method::MonteCarlo) => PhiEvaluator::with_tol(m, tol),
        _ => PhiEvaluator::new(m),
    })
}

/// φ, φ′, φ″, H, w and 𝓗 at λ = r = x; b, D at t; σ(t, x); θ(t, y = x).
fn calculus(cfg: &RunConfig) -> Result<String> {
    let e = evaluator(cfg)?;
    let rows: Vec<[f64; 12]> = pairs(&cfg.t, &cfg.x)
        .par_iter()
        .map(|&(t, x)| {
            [
                t,
                x,
                or_nan(e.phi_deriv(x, 0)),
                or_nan(e.phi_deriv(x, 1)),
                or_nan(e.phi_deriv(x, 2)),
                or_nan(e.h_of(x)),
                or_nan(e.tail(x)),
                or_nan(e.script_h(x)),
                or_nan(e.b_of(t)),
                or_nan(e.d_of(t)),
                or_nan(e.saddle(t, x).map(|s| s.sigma)),
                or_nan(e.theta_of(t, x).map(|th| th.theta)),
            ]
        })
        .collect();
    let mut s = String::from("t,x,phi,phi_prime,phi_second,H,w,script_H,b,D,sigma,theta\n");
    for r in rows {
        s += &r.iter().map(|&v| fmt12(v)).collect::<Vec<_>>().join(",");
        s.push('\n');
    }
    Ok(s)
}

fn envelope_table(cfg: &RunConfig) -> Result<String> {
    let e = evaluator(cfg)?;
    let pts = pairs(&cfg.t, &cfg.x);
    let rows: Vec<Result<envelope::EnvelopeResult>> =
        pts.par_iter().map(|&(t, x)| envelope::envelope(&e, t, x, ConstantSet::default())).collect();
    require_some(&rows)?;
    let mut s = String::from("t,x,regime,y,lower,upper,status\n");
    for (&(t, x), r) in pts.iter().zip(&rows) {
        let (tag, y, lo, hi) = match r {
            Ok(v) => (v.regime.tag.to_string(), v.regime.y, v.lower, v.upper),
            Err(_) => ("-".to_string(), f64::NAN, f64::NAN, f64::NAN),
        };
        s += &format!("{},{},{tag},{},{},{},{}\n", fmt12(t), fmt12(x), fmt12(y), fmt12(lo), fmt12(hi), status(r));
    }
    Ok(s)
}

/// Monte Carlo sample count and smallest simulated jump.
pub const MC_SAMPLES: usize = 100_000;
pub const MC_EPS: f64 = 1e-4;
/// Kernel bandwidth relative to x when `--tol` is absent.
pub const MC_BANDWIDTH: f64 = 0.05;

fn density_table(cfg: &RunConfig) -> Result<String> {
    let e = evaluator(cfg)?;
    let pts = pairs(&cfg.t, &cfg.x);
    let rows: Vec<Result<crate::reference_density::DensityEstimate>> = match cfg.method {
        Some(Method::MonteCarlo) => {
            let bw = cfg.tol.unwrap_or(MC_BANDWIDTH);
            let mut rows = Vec::with_capacity(pts.len());
            for &t in &cfg.t {
                let samples = sample_paths(&e, t, MC_SAMPLES, MC_EPS, cfg.seed);
                for &x in &cfg.x {
                    rows.push(match &samples {
                        Ok(sm) => empirical_density(sm, x, bw * x),
                        Err(err) => Err(err.clone()),
                    });
                }
            }
            rows
        }
        Some(m) => pts.par_iter().map(|&(t, x)| density_by(&e, m, t, x)).collect(),
        None => pts.par_iter().map(|&(t, x)| reference_density(&e, t, x)).collect(),
    };
    require_some(&rows)?;
    let mut s = String::from("t,x,density,log_density,err,method,status\n");
    for (&(t, x), r) in pts.iter().zip(&rows) {
        let (v, lv, err, m) = match r {
            Ok(d) => (d.value, d.log_value, d.err, d.method.to_string()),
            Err(_) => (f64::NAN, f64::NAN, f64::NAN, "-".to_string()),
        };
        s += &format!("{},{},{},{},{},{m},{}\n", fmt12(t), fmt12(x), fmt12(v), fmt12(lv), fmt12(err), status(r));
    }
    Ok(s)
}

/// Sandwich fit over the t grid; PureJump points run out to the y grid's top
/// end, or 100 D(t) by default.
fn certify_report(cfg: &RunConfig, explicit_y: bool) -> Result<String> {
    let e = evaluator(cfg)?;
    let y_top = cfg.y.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let y_max = move |_t: f64, d: f64| if explicit_y { y_top } else { 100.0 * d };
    let method = cfg.method;
    let reference = move |e: &PhiEvaluator, t: f64, x: f64| match method {
        Some(m) => density_by(e, m, t, x),
        None => reference_density(e, t, x),
    };
    let (rep, skipped) = envelope::certify(&e, &cfg.t, 12, &y_max, &reference)?;
    let saddle = envelope::saddle_spread(&e, &rep.points).unwrap_or(f64::NAN);
    let mut s = rep.render();
    s.truncate(s.trim_end().len() - 1);
    s = s.trim_end().to_string();
    s += &format!(
        ",\n  \"method\": \"{}\",\n  \"saddle_spread\": {},\n  \"skipped\": {}\n}}\n",
        method.map(|m| m.to_string()).unwrap_or_else(|| "reference".into()),
        fmt12(saddle),
        skipped.len()
    );
    Ok(s)
}

fn asymptotics_table(cfg: &RunConfig) -> Result<String> {
    let m = make_catalog_model(&cfg.model)?;
    let pts = pairs(&cfg.t, &cfg.x);
    if let Family::GeometricStable { alpha } = m.family {
        let ks: Vec<u8> = (0..=2u8).filter(|&k| geo_asymp_detail(100.0, 1.0, alpha, k).is_ok()).collect();
        let jobs: Vec<(f64, f64, u8)> = pts.iter().flat_map(|&(t, x)| ks.iter().map(move |&k| (t, x, k))).collect();
        let rows: Vec<_> = jobs.par_iter().map(|&(t, x, k)| geo_asymp_detail(t, x, alpha, k)).collect();
        require_some(&rows)?;
        return Ok(geo_asymp_csv(&rows.into_iter().filter_map(|r| r.ok()).collect::<Vec<_>>()));
    }
    let e = PhiEvaluator::new(m);
    let rows: Vec<Result<f64>> = pts.par_iter().map(|&(t, x)| limit_ratio(&e, t, x)).collect();
    require_some(&rows)?;
    let mut s = String::from("t,x,ratio,limit,status\n");
    for (&(t, x), r) in pts.iter().zip(&rows) {
        let v = r.as_ref().copied().unwrap_or(f64::NAN);
        s += &format!("{},{},{},{},{}\n", fmt12(t), fmt12(x), fmt12(v), fmt12(INV_SQRT_2PI), status(r));
    }
    Ok(s)
}

/// Envelope rows on the two representable windows: t ∈ [t₂/2, t₂] against
/// y ∈ [a₂, a₂(ln a₂)^{1/3}], and t ∈ {t₃/2, t₃} against powers of a₃.
fn oscillating_table() -> Result<String> {
    let spec = OscillatingSpec::new();
    let t2 = spec.t_window(2)?;
    let t3 = spec.t_window(3)?;
    let a2 = spec.a(2)?;
    let a3 = spec.a(3)?;
    let y_hi = a2 * a2.log().powf(1.0 / 3.0);
    let mut rows = Vec::new();
    for i in 0..5 {
        let t = LogReal::from_ln(t2.ln() - (1.0 - i as f64 / 4.0) * 2f64.ln());
        for j in 0..5 {
            let y = LogReal::from_ln(a2.ln() + j as f64 / 4.0 * (y_hi.ln() - a2.ln()));
            rows.push(window_envelope(&spec, t, y, Parity::Even, 1.0)?);
        }
    }
    for t in [t3.scale(0.5), t3] {
        for p in [0.5, 0.9, 1.0, 1.1] {
            rows.push(window_envelope(&spec, t, a3.powf(p), Parity::Odd, 1.0)?);
        }
    }
    Ok(window_csv(&rows))
}

pub fn run(cfg: &RunConfig, explicit_y: bool) -> Result<String> {
    match cfg.cmd {
        Command::Calculus => calculus(cfg),
        Command::Envelope => envelope_table(cfg),
        Command::Density => density_table(cfg),
        Command::Certify => certify_report(cfg, explicit_y),
        Command::Conditions => {
            let m: LevyModel = make_catalog_model(&cfg.model)?;
            Ok(conditions::classify(&m)?.render(&m.meta.flags))
        }
        Command::Asymptotics => asymptotics_table(cfg),
        Command::Oscillating => oscillating_table(),
    }
}

/// 2 for configuration problems, 3 for numeric failures.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::Parameter(_) | Error::Io(_) => 2,
        _ => 3,
    }
}

/// Parses, runs and writes the output; returns the process exit code.
pub fn main_with(args: Args) -> i32 {
    let explicit_y = args.y.is_some();
    let result = RunConfig::from_args(&args).and_then(|cfg| {
        let out = run(&cfg, explicit_y)?;
        match &cfg.out {
            Some(p) => std::fs::write(p, out).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
            None => {
                print!("{out}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error {}: {}", e.code(), e.to_string().replace('\n', " "));
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(model: &str, cmd: Command, t: &str, x: &str) -> RunConfig {
        let a = Args {
            model: model.into(),
            cmd,
            t: Some(t.into()),
            x: Some(x.into()),
            y: None,
            seed: None,
            out: None,
            method: None,
            tol: None,
        };
        RunConfig::from_args(&a).unwrap()
    }

    #[test]
    fn grids() {
        let g: GridSpec = "1:100:3:log".parse().unwrap();
        let v = g.values();
        assert!((v[1] - 10.0).abs() < 1e-12 && v.len() == 3);
        assert_eq!("2".parse::<GridSpec>().unwrap().values(), vec![2.0]);
        assert_eq!("0:1:3".parse::<GridSpec>().unwrap().values(), vec![0.0, 0.5, 1.0]);
        for bad in ["", "1:2", "1:0:3", "0:1:3:log", "1:2:0", "a:b:c", "1:2:3:cubic"] {
            assert!(bad.parse::<GridSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn model_file() {
        let text = "# gamma example\nfamily = log_perturbed\nparams = gamma1=0.5, p=1, gamma2=3, q=0\nt = 0.5:2:4:log\nseed = 9\n";
        let mf = parse_model_file(text, Path::new(".")).unwrap();
        assert_eq!(mf.spec.family, "log_perturbed");
        assert_eq!(mf.seed, Some(9));
        assert!(make_catalog_model(&mf.spec).is_ok());
        assert!(parse_model_file("params = a=1\n", Path::new(".")).is_err());
        assert!(parse_model_file("family = stable\ncolour = red\n", Path::new(".")).is_err());
    }

    #[test]
    fn gamma_density_row() {
        let out = run(&cfg("gamma", Command::Density, "2", "0.1:10:3:log"), false).unwrap();
        let row = out.lines().find(|l| l.starts_with("2.00000000000e0,1.00000000000e0")).unwrap();
        let v: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((v - (-1f64).exp()).abs() < 1e-6, "{row}");
    }

    #[test]
    fn deterministic_output() {
        let c = cfg("stable:alpha=0.5", Command::Envelope, "0.5:2:3", "0.1:5:4:log");
        assert_eq!(run(&c, false).unwrap(), run(&c, false).unwrap());
    }

    #[test]
    fn config_errors_exit_two() {
        let a = Args {
            model: "stable:alpha=1.5".into(),
            cmd: Command::Calculus,
            t: None,
            x: None,
            y: None,
            seed: None,
            out: None,
            method: None,
            tol: None,
        };
        assert_eq!(main_with(a), 2);
        let e = RunConfig::from_args(&Args {
            model: "warp:alpha=1".into(),
            cmd: Command::Calculus,
            t: None,
            x: None,
            y: None,
            seed: None,
            out: None,
            method: Some("tea".into()),
            tol: None,
        });
        assert!(e.is_err());
    }

    #[test]
    fn numeric_failure_exits_three() {
        // every row fails at negative x
        let c = cfg("stable:alpha=0.5", Command::Density, "1", "-2:-1:2");
        let err = run(&c, false).unwrap_err();
        assert_eq!(exit_code(&err), 3);
    }

    #[test]
    fn geometric_stable_conditions() {
        let out = run(&cfg("geometric_stable:alpha=0.7", Command::Conditions, "1", "1"), false).unwrap();
        assert!(out.contains("\"L\": true") && out.contains("\"S\": false"), "{out}");
    }
}
