//! Scenario runners. Every number comes from `idt_core`; this module only
//! wires configs to calls and results to files.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use idt_core::constructions::{PathSampler, RadialMeasure};
use idt_core::fmt::float17;
use idt_core::measures::{
    exp_mixture_closed_form, exp_mixture_density, idt_scaling_check, lift_path_measure, transform_levy_measure,
    uniform_u_edges, DiscretePathMeasure, LevyTestFn, PathScalingReport, TransformQuad,
};
use idt_core::process_models::TimeGrid;
use idt_core::quadrature::{integrate, QuadOptions};
use idt_core::spectral::{
    fourier_by_quadrature, hirsch_min_eig, lamperti_covariance, scaling_check, spectral_hat, table_spectral,
    write_covariance_csv, write_density_csv, CovarianceFn, ScalingReport,
};
use idt_core::verify::{
    idt_property_test, joint_mimic_test, marginal_mimic_test, tsd_factorization_test, Decision, TestReport,
};
use serde::Serialize;
use serde_json::Value;

use crate::config::*;
use crate::emit::{to_field_csv, write_json};
use crate::error::CliError;

/// What a finished run produced.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub decision: Decision,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self.decision {
            Decision::Pass => 0,
            Decision::Reject => 2,
        }
    }
}

fn decide(pass: bool) -> Decision {
    if pass {
        Decision::Pass
    } else {
        Decision::Reject
    }
}

struct Sink {
    dir: PathBuf,
    format: Format,
    files: Vec<PathBuf>,
}

impl Sink {
    fn new(dir: &Path, format: Format) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), format, files: Vec::new() })
    }

    fn report<T: Serialize>(&mut self, report: &T) -> Result<(), CliError> {
        let p = self.dir.join("report.json");
        write_json(&p, report)?;
        self.files.push(p);
        if self.format == Format::Csv {
            let p = self.dir.join("report.csv");
            fs::write(&p, to_field_csv(report)?)?;
            self.files.push(p);
        }
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let p = self.dir.join(name);
        write_json(&p, value)?;
        self.files.push(p);
        Ok(())
    }

    fn csv(&mut self, name: &str, write: impl FnOnce(&mut BufWriter<fs::File>) -> Result<(), CliError>) -> Result<(), CliError> {
        let p = self.dir.join(format!("data_{name}.csv"));
        let mut w = BufWriter::new(fs::File::create(&p)?);
        write(&mut w)?;
        std::io::Write::flush(&mut w)?;
        self.files.push(p);
        Ok(())
    }
}

#[derive(Serialize)]
struct Metadata<'a> {
    scenario: &'a str,
    seed: u64,
    seed_source: &'a str,
    config: Value,
    version: &'a str,
}

/// Runs a parsed config. `seed` is the effective master seed.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    raw: &Value,
    seed: u64,
    seed_source: &str,
    out: &Path,
) -> Result<Outcome, CliError> {
    let mut sink = Sink::new(out, cfg.output().format)?;
    let (scenario, decision) = match cfg {
        ExperimentConfig::Simulate(c) => (Scenario::Simulate, simulate(c, seed, &mut sink)?),
        ExperimentConfig::IdtTest(c) => {
            let r = idt_property_test(&c.construction, c.n, &c.times, &c.probes, c.m, c.level, seed)?;
            (Scenario::IdtTest, test_report(r, &mut sink)?)
        }
        ExperimentConfig::MimicTest(c) => (Scenario::MimicTest, mimic(c, seed, &mut sink)?),
        ExperimentConfig::TsdTest(c) => {
            let r = tsd_factorization_test(&c.construction, c.c, &c.times, &c.probes, c.m, c.level, seed)?;
            (Scenario::TsdTest, test_report(r, &mut sink)?)
        }
        ExperimentConfig::Spectral(c) => (Scenario::Spectral, spectral(c, &mut sink)?),
        ExperimentConfig::TransformMeasure(c) => (Scenario::TransformMeasure, transform_measure(c, &mut sink)?),
        ExperimentConfig::PathMeasureCheck(c) => (Scenario::PathMeasureCheck, path_measure_check(c, &mut sink)?),
    };
    // the echoed config carries the effective seed, so it reruns the same experiment
    let mut config = raw.clone();
    if let Some(obj) = config.as_object_mut() {
        obj.insert("seed".into(), Value::from(seed));
    }
    sink.json(
        "metadata.json",
        &Metadata { scenario: scenario.name(), seed, seed_source, config, version: env!("CARGO_PKG_VERSION") },
    )?;
    Ok(Outcome { decision, files: sink.files })
}

fn test_report(r: TestReport, sink: &mut Sink) -> Result<Decision, CliError> {
    sink.report(&r)?;
    Ok(r.decision)
}

#[derive(Serialize)]
struct SimulateReport {
    scenario: &'static str,
    construction: String,
    m: usize,
    seed: u64,
    times: Vec<f64>,
    mean: Vec<f64>,
    variance: Vec<f64>,
}

fn simulate(c: &SimulateConfig, seed: u64, sink: &mut Sink) -> Result<Decision, CliError> {
    let grid = TimeGrid::through(&c.times)?;
    let e = c.construction.sample(&grid, c.m, seed.into())?;
    let (mut mean, mut variance) = (Vec::new(), Vec::new());
    for &t in grid.times() {
        let xs = e.values_at(t)?;
        let n = xs.len() as f64;
        let mu = xs.iter().sum::<f64>() / n;
        mean.push(mu);
        variance.push(if xs.len() > 1 { xs.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 });
    }
    sink.csv("paths", |w| Ok(e.write_csv(w)?))?;
    sink.report(&SimulateReport {
        scenario: "simulate",
        construction: c.construction.label(),
        m: c.m,
        seed,
        times: grid.times().to_vec(),
        mean,
        variance,
    })?;
    Ok(Decision::Pass)
}

fn mimic(c: &MimicTestConfig, seed: u64, sink: &mut Sink) -> Result<Decision, CliError> {
    let r = match c.mode {
        MimicMode::Marginal => {
            if c.probes.iter().any(|p| p.len() != 1) {
                return Err(CliError::Config("marginal probes are one-dimensional".into()));
            }
            let zs: Vec<f64> = c.probes.iter().map(|p| p[0]).collect();
            marginal_mimic_test(&c.construction, &c.triplet, &c.times, &zs, c.m, c.level, seed)?
        }
        MimicMode::Joint => joint_mimic_test(&c.construction, &c.triplet, &c.times, &c.probes, c.m, c.level, seed)?,
    };
    test_report(r, sink)
}

#[derive(Serialize)]
struct FourierPoint {
    x: f64,
    quadrature: f64,
    kernel_side: f64,
    abs_error: f64,
}

#[derive(Serialize)]
struct HirschSummary {
    n: usize,
    min_eigenvalue: f64,
    norm: f64,
    relative: f64,
    tol: f64,
    pass: bool,
}

#[derive(Serialize)]
struct SpectralReport {
    scenario: &'static str,
    scaling: ScalingReport,
    lamperti_residual: f64,
    fourier: Vec<FourierPoint>,
    fourier_tol: f64,
    /// Bound on the dropped series tail; 0 for closed forms.
    truncation_bound: Option<f64>,
    hirsch: HirschSummary,
    decision: Decision,
}

fn spectral(c: &SpectralConfig, sink: &mut Sink) -> Result<Decision, CliError> {
    c.phi.validate()?;
    let cov = CovarianceFn::FromPhi(c.phi.clone());
    let pairs: Vec<(f64, f64)> = c.times.iter().flat_map(|&s| c.times.iter().map(move |&t| (s, t))).collect();
    let scaling = scaling_check(&cov, &c.scaling_factors, &pairs, c.scaling_tol)?;
    let mut lamperti_residual: f64 = 0.0;
    for &(s, t) in &pairs {
        let (y, z) = (s.ln(), t.ln());
        for h in [-1.0, 0.5, 2.0] {
            let d = lamperti_covariance(&cov, y + h, z + h)? - lamperti_covariance(&cov, y, z)?;
            lamperti_residual = lamperti_residual.max(d.abs());
        }
    }
    sink.csv("covariance", |w| Ok(write_covariance_csv(&cov, &pairs, w)?))?;

    // tabulated kernels have no density row; the covariance checks still apply
    let density = if c.phi.is_parametric() { Some(table_spectral(&c.phi)?) } else { None };
    let mut fourier = Vec::new();
    if let Some(g) = &density {
        sink.csv("density", |w| Ok(write_density_csv(g, &c.ys, w)?))?;
        for &x in &c.fourier_points {
            let quadrature = fourier_by_quadrature(g, x)?;
            let kernel_side = spectral_hat(&c.phi, x)?;
            fourier.push(FourierPoint { x, quadrature, kernel_side, abs_error: (quadrature - kernel_side).abs() });
        }
    }
    sink.csv("spectral_hat", |w| {
        writeln_io(w, "x,hat")?;
        for &x in &c.ys {
            writeln_io(w, &format!("{},{}", float17(x), float17(spectral_hat(&c.phi, x)?)))?;
        }
        Ok(())
    })?;

    let h = hirsch_min_eig(&cov, c.hirsch_n)?;
    let hirsch = HirschSummary {
        n: c.hirsch_n,
        min_eigenvalue: h.min_eigenvalue,
        norm: h.norm,
        relative: h.relative(),
        tol: c.hirsch_tol,
        pass: h.is_nonnegative(c.hirsch_tol),
    };
    let fourier_ok = fourier.iter().all(|p| p.abs_error <= c.fourier_tol);
    let pass = scaling.pass && lamperti_residual < c.scaling_tol && fourier_ok && hirsch.pass;
    let report = SpectralReport {
        scenario: "spectral",
        scaling,
        lamperti_residual,
        fourier,
        fourier_tol: c.fourier_tol,
        truncation_bound: density.as_ref().map(|g| g.truncation_bound()),
        hirsch,
        decision: decide(pass),
    };
    sink.report(&report)?;
    Ok(report.decision)
}

fn writeln_io(w: &mut impl std::io::Write, line: &str) -> Result<(), CliError> {
    writeln!(w, "{line}")?;
    Ok(())
}

#[derive(Serialize)]
struct WindowCheck {
    a: f64,
    b: f64,
    transform: f64,
    closed_form: f64,
    relative_error: f64,
}

#[derive(Serialize)]
struct TransformReport {
    scenario: &'static str,
    points: usize,
    max_relative_error: Option<f64>,
    tol: f64,
    formal: bool,
    window: Option<WindowCheck>,
    decision: Decision,
}

fn transform_measure(c: &TransformMeasureConfig, sink: &mut Sink) -> Result<Decision, CliError> {
    c.nu.validate()?;
    let vs: Vec<f64> = if c.vs.is_empty() {
        let (lo, hi) = c.v_range;
        let n = c.points;
        (0..n)
            .map(|k| if n == 1 { lo } else { lo * (hi / lo).powf(k as f64 / (n - 1) as f64) })
            .collect()
    } else {
        c.vs.clone()
    };
    let mut rows = Vec::with_capacity(vs.len());
    let mut worst: Option<f64> = None;
    for &v in &vs {
        let computed = exp_mixture_density(&c.nu, v)?;
        let closed = exp_mixture_closed_form(&c.nu, v);
        if let Some(cf) = closed {
            let r = (computed - cf).abs() / cf.abs();
            worst = Some(worst.map_or(r, |w: f64| w.max(r)));
        }
        rows.push((v, computed, closed));
    }
    sink.csv("transform", |w| {
        writeln_io(w, "v,computed,closed_form")?;
        for (v, x, cf) in &rows {
            writeln_io(w, &format!("{},{},{}", float17(*v), float17(*x), float17(cf.unwrap_or(f64::NAN))))?;
        }
        Ok(())
    })?;

    let window = match c.window {
        Some((a, b)) => Some(window_check(c, a, b)?),
        None => None,
    };
    let formal = matches!(c.nu, idt_core::measures::ScalarLevyMeasure::Density { formal: true, .. });
    let pass = worst.is_none_or(|w| w < c.tol) && window.as_ref().is_none_or(|w| w.relative_error < c.tol);
    let report = TransformReport {
        scenario: "transform-measure",
        points: vs.len(),
        max_relative_error: worst,
        tol: c.tol,
        formal,
        window,
        decision: decide(pass),
    };
    sink.report(&report)?;
    Ok(report.decision)
}

/// `ν^{(μ)}([a, b])` by the nested transform against the integral of the
/// closed-form exponential-mixture density over the window.
fn window_check(c: &TransformMeasureConfig, a: f64, b: f64) -> Result<WindowCheck, CliError> {
    if !(a > 0.0 && b > a && b.is_finite()) {
        return Err(CliError::Config(format!("window must satisfy 0 < a < b, got [{a}, {b}]")));
    }
    if c.mu != (RadialMeasure::LogUniform { a: 0.0, b: 1.0 }) {
        return Err(CliError::Config("the window check compares against the (du/u) 1_[0,1] mixture".into()));
    }
    let f = LevyTestFn::supported_on(move |y| if y >= a && y <= b { 1.0 } else { 0.0 }, a, b)?;
    let transform = transform_levy_measure(&c.nu, &c.mu, &f, &TransformQuad::default())?;
    let nu = c.nu.clone();
    let closed_form = integrate(
        move |v| exp_mixture_closed_form(&nu, v).unwrap_or(f64::NAN),
        a,
        b,
        QuadOptions::with_tol(1e-13, 1e-11),
    )
    .require("closed-form window mass")?;
    Ok(WindowCheck { a, b, transform, closed_form, relative_error: (transform - closed_form).abs() / closed_form.abs() })
}

#[derive(Serialize)]
struct PathReport {
    scenario: &'static str,
    lifted: bool,
    atoms: usize,
    u_resolution: Option<f64>,
    checks: Vec<PathScalingReport>,
    decision: Decision,
}

fn path_measure_check(c: &PathMeasureCheckConfig, sink: &mut Sink) -> Result<Decision, CliError> {
    let base = DiscretePathMeasure::new(c.measure.atoms.clone())?;
    let m = match &c.lift {
        Some(l) => lift_path_measure(&base, &uniform_u_edges(l.u_max, l.cells)?, l.horizon)?,
        None => base,
    };
    let tol = match (c.tol, m.u_resolution) {
        (Some(t), _) => t,
        (None, Some(w)) => 2.0 * w,
        (None, None) => 1e-9,
    };
    let checks = c
        .n
        .iter()
        .map(|&n| idt_scaling_check(&m, n, &c.functionals, tol))
        .collect::<idt_core::Result<Vec<_>>>()?;
    let pass = checks.iter().all(|r| r.pass);
    let report = PathReport {
        scenario: "path-measure-check",
        lifted: c.lift.is_some(),
        atoms: m.atoms.len(),
        u_resolution: m.u_resolution,
        checks,
        decision: decide(pass),
    };
    sink.report(&report)?;
    Ok(report.decision)
}
