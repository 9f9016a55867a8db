//! Configuration-driven experiment runner behind the `parareg` binary.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::analysis::{self, fmt, EstimateReport, LocalData};
use crate::coefficients::{self, CoefficientField, SweepParams};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::exponents::{self, Rational};
use crate::gehring::{self, SolutionTriple};
use crate::grid::{io, Cube, Field, Grid, ParabolicCylinder, Shape};
use crate::holder;
use crate::rng::stream;
use crate::sample::{BandLimited, Cutoff};
use crate::solver::{self, EnergyVector, Localized, RightHandSide, SolveReport, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subcommand {
    Solve,
    Garding,
    Caccioppoli,
    RhU,
    Gehring,
    Holder,
    All,
}

impl Subcommand {
    pub const ALL: [Subcommand; 7] = [
        Subcommand::Solve,
        Subcommand::Garding,
        Subcommand::Caccioppoli,
        Subcommand::RhU,
        Subcommand::Gehring,
        Subcommand::Holder,
        Subcommand::All,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Subcommand::Solve => "solve",
            Subcommand::Garding => "garding",
            Subcommand::Caccioppoli => "caccioppoli",
            Subcommand::RhU => "rh-u",
            Subcommand::Gehring => "gehring",
            Subcommand::Holder => "holder",
            Subcommand::All => "all",
        }
    }
}

impl FromStr for Subcommand {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown subcommand {s:?}")))
    }
}

/// Everything derived from a configuration, computed on first use.
pub struct Context {
    pub cfg: ExperimentConfig,
    pub grid: Grid,
    pub a: CoefficientField,
    pub f0: Field,
    pub ff: Field,
    solution: Option<(EnergyVector, SolveReport)>,
    localized: Option<Localized>,
    cylinders: Option<Vec<ParabolicCylinder>>,
}

impl Context {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let grid = cfg.build_grid()?;
        let c = &cfg.coefficients;
        let a = CoefficientField::generate(grid, c.kind, &c.params(), c.seed)?;
        let d = &cfg.data;
        let band = d.band();
        let f0 = band.sample(&grid, Shape::Scalar, &mut stream(d.seed, "data/f"))?;
        let ff = if d.flux {
            band.sample(&grid, Shape::Vector, &mut stream(d.seed, "data/F"))?
        } else {
            Field::zeros(grid, Shape::Vector)
        };
        Ok(Self {
            cfg: cfg.clone(),
            grid,
            a,
            f0,
            ff,
            solution: None,
            localized: None,
            cylinders: None,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.cfg.coefficients.kappa
    }

    /// Solution of `d_t u - div A grad u + (kappa + 1) u = f + div F`.
    pub fn solution(&mut self) -> Result<&(EnergyVector, SolveReport)> {
        if self.solution.is_none() {
            let rhs = RightHandSide::new(self.f0.clone(), self.ff.clone())?;
            let opts = SolverOptions::with_tol(self.cfg.tolerances.solver);
            self.solution = Some(solver::solve(&self.a, self.kappa(), &rhs, &opts)?);
        }
        Ok(self.solution.as_ref().expect("just computed"))
    }

    pub fn u(&mut self) -> Result<Field> {
        Ok(self.solution()?.0.field().clone())
    }

    /// Source of the zero-order-free form, `f - (kappa + 1) u`.
    pub fn f_reduced(&mut self) -> Result<Field> {
        let c = self.kappa() + 1.0;
        let u = self.u()?;
        self.f0.sub(&u.scale_real(c))
    }

    pub fn local_data(&mut self) -> Result<LocalData> {
        LocalData::new(self.u()?, self.f_reduced()?, self.ff.clone())
    }

    pub fn cutoff(&self) -> Cutoff {
        let k = &self.cfg.cutoff;
        let (t, l) = (self.grid.period_t(), self.grid.period_x());
        Cutoff {
            center_t: k.center_t * t,
            center_x: [k.center_x * l; 2],
            half_t: k.half_t * t,
            half_x: k.half_x * l,
            width_t: k.width_t * t,
            width_x: k.width_x * l,
        }
    }

    pub fn localized(&mut self) -> Result<&Localized> {
        if self.localized.is_none() {
            let u = self.u()?;
            let f = self.f_reduced()?;
            let chi = self.cutoff().field(&self.grid);
            self.localized = Some(solver::localize(&u, &chi, &self.a, &f, &self.ff, None)?);
        }
        Ok(self.localized.as_ref().expect("just computed"))
    }

    pub fn cylinders(&mut self) -> Result<&[ParabolicCylinder]> {
        if self.cylinders.is_none() {
            let c = &self.cfg.cylinders;
            let fam = c.family().sample(&self.grid, None, &mut stream(c.seed, "cylinders"))?;
            self.cylinders = Some(fam);
        }
        Ok(self.cylinders.as_deref().expect("just sampled"))
    }
}

/// Writes files into one directory and remembers what was written.
struct Sink {
    dir: PathBuf,
    written: Vec<String>,
    summary: Vec<(String, String, f64)>,
}

impl Sink {
    fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new(), summary: Vec::new() })
    }

    fn path(&mut self, name: &str) -> PathBuf {
        self.written.push(name.to_string());
        self.dir.join(name)
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let mut w = csv::Writer::from_path(self.path(name))?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        Ok(())
    }

    fn report(&mut self, name: &str, rep: &EstimateReport) -> Result<()> {
        let file = fs::File::create(self.path(&format!("{name}.csv")))?;
        rep.write_csv(BufWriter::new(file))?;
        self.note(name, "max_ratio", rep.max_ratio());
        self.note(name, "zero_rhs_count", rep.zero_rhs_count() as f64);
        Ok(())
    }

    fn jsonl<T: Serialize>(&mut self, name: &str, lines: &[T]) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(self.path(name))?);
        for l in lines {
            serde_json::to_writer(&mut w, l)?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
        Ok(())
    }

    fn snapshot(&mut self, name: &str, field: &Field) -> Result<()> {
        let path = self.path(name);
        io::save(&path, field)
    }

    fn note(&mut self, section: &str, key: &str, value: f64) {
        self.summary.push((section.to_string(), key.to_string(), value));
    }
}

fn rational(r: &Rational) -> String {
    if *r.denom() == 1 {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn center(b_t: f64, b_x: &[f64], n: usize) -> Vec<String> {
    let mut v = vec![fmt(b_t)];
    v.extend(b_x.iter().take(n).map(|&x| fmt(x)));
    v
}

fn center_header(n: usize) -> Vec<&'static str> {
    let mut h = vec!["center_t", "center_x1"];
    if n == 2 {
        h.push("center_x2");
    }
    h
}

fn run_solve(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let tol = ctx.cfg.tolerances;
    let (v, rep) = ctx.solution()?.clone();
    let mut lines: Vec<Value> = rep
        .history
        .iter()
        .enumerate()
        .map(|(k, r)| json!({"event": "iteration", "iteration": k + 1, "residual": r}))
        .collect();
    lines.push(json!({"event": "report", "report": rep}));
    sink.jsonl("solve.jsonl", &lines)?;

    let f = ctx.f_reduced()?;
    let probe = solver::residual_probe(
        v.field(),
        &ctx.a,
        0.0,
        &f,
        &ctx.ff,
        20,
        &BandLimited::new(8, 8),
        0,
    )?;
    let identity = solver::energy_identity_defect(v.field())?;
    let cont = analysis::continuity_check(&v, tol.continuity);
    let bound = analysis::energy_bound_check(&v, &f, &ctx.ff)?;
    sink.csv(
        "solve.csv",
        &[
            "iterations",
            "restarts",
            "dual_residual",
            "rhs_dual_norm",
            "energy_norm",
            "inverse_ratio",
            "inverse_bound",
            "weak_residual",
            "energy_identity_defect",
        ],
        &[vec![
            rep.iterations.to_string(),
            rep.restarts.to_string(),
            fmt(rep.dual_residual),
            fmt(rep.rhs_dual_norm),
            fmt(rep.energy_norm),
            fmt(rep.inverse_ratio),
            fmt(rep.inverse_bound),
            fmt(probe),
            fmt(identity),
        ]],
    )?;
    let rows: Vec<Vec<String>> = cont.profile.iter().map(|&(t, e)| vec![fmt(t), fmt(e)]).collect();
    sink.csv("continuity.csv", &["t", "slice_energy"], &rows)?;
    sink.csv(
        "energy_bound.csv",
        &[
            "sup_slice",
            "l2_upper",
            "half",
            "v_norm",
            "f_term",
            "ff_term",
            "ratio",
            "oscillation",
            "continuity_bound",
            "continuity_holds",
        ],
        &[vec![
            fmt(bound.sup_slice),
            fmt(bound.l2_upper),
            fmt(bound.half),
            fmt(bound.v_norm),
            fmt(bound.f_term),
            fmt(bound.ff_term),
            fmt(bound.ratio),
            fmt(cont.oscillation),
            fmt(cont.bound),
            cont.holds.to_string(),
        ]],
    )?;
    sink.note("solve", "weak_residual", probe);
    sink.note("solve", "energy_bound_ratio", bound.ratio);
    if ctx.cfg.output.snapshots {
        sink.snapshot("u.field", v.field())?;
        let loc = ctx.localized()?.v.clone();
        sink.snapshot("v.field", &loc)?;
    }
    if probe > tol.residual {
        return Err(Error::UnverifiedSolution { residual: probe, tol: tol.residual });
    }
    Ok(())
}

fn run_garding(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let gc = ctx.cfg.garding;
    let exact_ok = ctx.grid.n() == 1 && ctx.grid.nx() <= 64 && gc.exact;
    let sampled = coefficients::verify_garding(&ctx.a, gc.trials, gc.seed);
    let mut rows = vec![vec![
        "sampled".to_string(),
        fmt(sampled.lambda_est),
        fmt(sampled.kappa),
        sampled.trials.to_string(),
    ]];
    if exact_ok {
        let exact = coefficients::verify_garding_exact(&ctx.a, ctx.a.kappa())?;
        rows.push(vec!["exact".into(), fmt(exact.lambda_est), fmt(exact.kappa), "0".into()]);
    }
    sink.csv("garding.csv", &["mode", "lambda_est", "kappa", "trials"], &rows)?;
    sink.note("garding", "lambda_est", sampled.lambda_est);

    let l = ctx.grid.period_x();
    let c = vec![0.5 * l; ctx.grid.n()];
    let q0 = Cube::new(&c, gc.q0_half * l)?;
    let q = Cube::new(&c, gc.q_half * l)?;
    let params = SweepParams {
        sigma_start: gc.sigma_start,
        sigma_factor: gc.sigma_factor,
        steps: gc.steps,
        kappa_cap: None,
        trials: gc.trials,
        seed: gc.seed,
        exact: exact_ok,
    };
    let sweep = coefficients::appendix_sweep(&ctx.a, &q0, &q, &params)?;
    let rows: Vec<Vec<String>> = sweep
        .iter()
        .map(|r| vec![fmt(r.sigma), fmt(r.kappa_needed), fmt(r.lambda_est), r.pass.to_string()])
        .collect();
    sink.csv("extension_sweep.csv", &["sigma", "kappa_needed", "lambda_est", "pass"], &rows)?;
    if let Some(last) = sweep.last() {
        sink.note("extension", "sigma", last.sigma);
        sink.note("extension", "kappa", last.kappa_needed);
        sink.note("extension", "pass", if last.pass { 1.0 } else { 0.0 });
    }
    Ok(())
}

fn run_caccioppoli(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let gamma = ctx.cfg.cylinders.gamma;
    let d = ctx.local_data()?;
    let fam = ctx.cylinders()?.to_vec();
    let level = ctx.grid.nx().trailing_zeros() as usize;
    let rep = analysis::family("caccioppoli", &fam, |b| analysis::caccioppoli_terms(&d, b, gamma))?;
    sink.report("caccioppoli", &rep.with_level(level))?;
    let rep = analysis::family("improved-caccioppoli", &fam, |b| {
        analysis::improved_caccioppoli_terms(&d, b, gamma)
    })?;
    sink.report("improved_caccioppoli", &rep.with_level(level))?;
    Ok(())
}

fn run_rh_u(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let gamma = ctx.cfg.cylinders.gamma;
    let d = ctx.local_data()?;
    let fam = ctx.cylinders()?.to_vec();
    let rep = analysis::family("reverse-holder-u", &fam, |b| {
        analysis::reverse_holder_u_terms(&d, b, gamma)
    })?;
    sink.report("rh_u", &rep.with_level(ctx.grid.nx().trailing_zeros() as usize))?;
    Ok(())
}

/// `(g, |F~|, |f~|)` of the localized solution, with `f~` made exactly consistent.
pub fn gehring_inputs(loc: &Localized) -> Result<(Field, Field, Field)> {
    let v = EnergyVector::new(loc.v.clone())?;
    let g = v.parts().derivative_density();
    Ok((g, loc.ff.magnitude(), loc.consistent_f().magnitude()))
}

fn run_gehring(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let ex = ctx.cfg.exponents()?;
    let n = ctx.grid.n();
    let gamma = ctx.cfg.cylinders.gamma;
    let tol = ctx.cfg.tolerances.residual;
    let fam = ctx.cylinders()?.to_vec();
    let loc = ctx.localized()?.clone();

    let cfg = exponents::solve_exponents(ex.s, ex.p, n);
    let mut header = vec!["s", "p", "n", "alpha", "beta", "q_alpha", "q_beta"];
    header.extend(["q_alpha_f64", "alpha_f64", "feasible"]);
    let row = match &cfg {
        Ok(c) => vec![
            rational(&c.s),
            rational(&c.p),
            n.to_string(),
            rational(&c.alpha),
            rational(&c.beta),
            rational(&c.q_alpha),
            rational(&c.q_beta),
            fmt(exponents::to_f64(&c.q_alpha)),
            fmt(exponents::to_f64(&c.alpha)),
            "true".into(),
        ],
        Err(_) => {
            let mut r = vec![rational(&ex.s), rational(&ex.p), n.to_string()];
            r.extend(std::iter::repeat_n(String::new(), 6));
            r.push("false".into());
            r
        }
    };
    sink.csv("exponents.csv", &header, &[row])?;

    let (g, big_f, h) = gehring_inputs(&loc)?;
    let s = exponents::to_f64(&ex.s);
    let hyp = gehring::gehring_hypothesis_constant(&g, &big_f, &h, s, gamma, &fam)?;
    sink.jsonl("gehring_hypothesis.jsonl", &hyp.rows)?;
    sink.note("gehring", "a_est", hyp.a_est);
    sink.note("gehring", "a_joint", hyp.a_joint);

    let p = exponents::to_f64(&ex.conclusion_p);
    let mut rows = Vec::new();
    let sob = gehring::gehring_conclusion_ratio_sobolev(&g, &big_f, &h, p)?;
    rows.push(("sobolev", sob));
    if let Ok(c) = &cfg {
        rows.push(("mixed", gehring::gehring_conclusion_ratio(&g, &big_f, &h, c)?));
    }
    sink.note("gehring", "conclusion_ratio", sob.ratio);
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|(mode, r)| {
            vec![mode.to_string(), fmt(r.p), fmt(r.lhs), fmt(r.f_term), fmt(r.h_term), fmt(r.ratio)]
        })
        .collect();
    sink.csv("gehring_conclusion.csv", &["mode", "p", "lhs", "f_term", "h_term", "ratio"], &rows)?;

    let v = EnergyVector::new(loc.v.clone())?;
    let f = loc.consistent_f();
    let sol = SolutionTriple { v: &v, a: &ctx.a, c: 0.0, f: &f, ff: &loc.ff };
    let rep = gehring::nonlocal_reverse_holder(&sol, gamma, &fam, tol)?;
    sink.report("nonlocal_reverse_holder", &rep)?;
    Ok(())
}

fn run_holder(ctx: &mut Context, sink: &mut Sink) -> Result<()> {
    let ex = ctx.cfg.exponents()?;
    let n = ctx.grid.n();
    let gamma = ctx.cfg.cylinders.gamma;
    let level = ctx.grid.nx().trailing_zeros();
    let fam = ctx.cylinders()?.to_vec();
    let loc = ctx.localized()?.clone();

    let v = EnergyVector::new(loc.v.clone())?;
    let scan: Vec<f64> = ex.scan.iter().map(exponents::to_f64).collect();
    let rows = holder::higher_integrability_scan(&v, &loc.consistent_f(), &loc.ff, &scan)?;
    let rows: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            [r.p, r.grad_p, r.half_p, r.hilbert_p, r.e_p, r.g_p, r.data, r.ratio].map(fmt).to_vec()
        })
        .collect();
    sink.csv(
        "integrability.csv",
        &["p", "grad_p", "half_p", "hilbert_p", "e_p", "g_p", "data", "ratio"],
        &rows,
    )?;

    let p = exponents::to_f64(&ex.conclusion_p);
    let u = ctx.u()?;
    let f = ctx.f_reduced()?;
    let ff = ctx.ff.clone();
    let reports = fam
        .iter()
        .map(|b| holder::holder_time_report(&u, &f, &ff, b, gamma, p))
        .collect::<Result<Vec<_>>>()?;
    let mut header = vec!["p", "alpha"];
    header.extend(center_header(n));
    header.extend(["r", "sup_norm", "holder_quotient", "rht_ratio", "grid_level"]);
    let rows: Vec<Vec<String>> = reports
        .iter()
        .map(|r| {
            let mut row =
                vec![fmt(r.p), rational(&exponents::holder_alpha(ex.conclusion_p).expect("p > 2"))];
            row.extend(center(r.center_t, &r.center_x, n));
            row.extend([fmt(r.r), fmt(r.sup_norm), fmt(r.holder_quotient), fmt(r.ratio)]);
            row.push(level.to_string());
            row
        })
        .collect();
    sink.csv("holder.csv", &header, &rows)?;
    sink.note("holder", "max_ratio", reports.iter().map(|r| r.ratio).fold(0.0, f64::max));

    let grads = fam
        .iter()
        .map(|b| holder::grad_reverse_holder_report(&u, &f, &ff, b, gamma, p))
        .collect::<Result<Vec<_>>>()?;
    let mut header = center_header(n);
    header.extend(["r", "lhs", "rhs", "ratio", "w_l2", "grad_w_l2", "poincare_ratio"]);
    let rows: Vec<Vec<String>> = grads
        .iter()
        .map(|g| {
            let mut row = center(g.row.center_t, &g.row.center_x, n);
            row.extend(
                [
                    g.row.r,
                    g.row.lhs,
                    g.row.rhs,
                    g.row.ratio,
                    g.intermediate.w_l2,
                    g.intermediate.grad_w_l2,
                    g.intermediate.poincare_ratio,
                ]
                .map(fmt),
            );
            row
        })
        .collect();
    sink.csv("grad_reverse_holder.csv", &header, &rows)?;
    let rows: Vec<_> = grads.into_iter().map(|g| g.row).collect();
    sink.note("grad_reverse_holder", "max_ratio", EstimateReport::new("", rows).max_ratio());

    let cut = ctx.cutoff();
    let phi: Vec<f64> = (0..ctx.grid.spatial_points())
        .map(|j| {
            let (_, ix) = ctx.grid.split_index(j);
            let x: Vec<f64> = ix[..n].iter().map(|&i| ctx.grid.space_of(i)).collect();
            x.iter()
                .enumerate()
                .map(|(d, &xd)| {
                    crate::sample::smooth_box(
                        xd,
                        cut.center_x[d],
                        cut.half_x,
                        cut.width_x,
                        ctx.grid.period_x(),
                    )
                })
                .product()
        })
        .collect();
    let consistency = holder::weighted_mean_consistency(&u, &ctx.a, &f, &ff, &phi)?;
    sink.csv("weighted_means.csv", &["consistency"], &[vec![fmt(consistency)]])?;
    sink.note("weighted_means", "consistency", consistency);
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    pub grid_level: Option<u32>,
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub seeds: BTreeMap<String, u64>,
    pub tolerances: crate::config::Tolerances,
    pub artifacts: Vec<ArtifactEntry>,
    pub summary: Vec<(String, String, f64)>,
    pub timings_ms: BTreeMap<String, f64>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Runs one subcommand, writing its artifacts and `manifest.json` into `out`.
pub fn run(
    sub: Subcommand,
    cfg: &ExperimentConfig,
    out: &Path,
    level: Option<u32>,
) -> Result<Manifest> {
    let cfg = match level {
        Some(k) => cfg.at_level(k)?,
        None => cfg.clone(),
    };
    let mut ctx = Context::new(&cfg)?;
    let mut sink = Sink::new(out)?;
    let steps: Vec<Subcommand> = match sub {
        Subcommand::All => Subcommand::ALL[..6].to_vec(),
        s => vec![s],
    };
    let mut timings = BTreeMap::new();
    for step in steps {
        let start = Instant::now();
        match step {
            Subcommand::Solve => run_solve(&mut ctx, &mut sink),
            Subcommand::Garding => run_garding(&mut ctx, &mut sink),
            Subcommand::Caccioppoli => run_caccioppoli(&mut ctx, &mut sink),
            Subcommand::RhU => run_rh_u(&mut ctx, &mut sink),
            Subcommand::Gehring => run_gehring(&mut ctx, &mut sink),
            Subcommand::Holder => run_holder(&mut ctx, &mut sink),
            Subcommand::All => unreachable!("expanded above"),
        }?;
        timings.insert(step.name().to_string(), start.elapsed().as_secs_f64() * 1e3);
    }
    let rows: Vec<Vec<String>> =
        sink.summary.clone().into_iter().map(|(s, k, v)| vec![s, k, fmt(v)]).collect();
    sink.csv("summary.csv", &["section", "quantity", "value"], &rows)?;

    let mut names = sink.written.clone();
    names.sort();
    names.dedup();
    let artifacts = names
        .iter()
        .map(|name| {
            let bytes = fs::read(sink.dir.join(name))?;
            Ok(ArtifactEntry {
                path: name.clone(),
                bytes: bytes.len() as u64,
                sha256: sha256_hex(&bytes),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let seeds = BTreeMap::from([
        ("coefficients".to_string(), cfg.coefficients.seed),
        ("data".to_string(), cfg.data.seed),
        ("cylinders".to_string(), cfg.cylinders.seed),
        ("garding".to_string(), cfg.garding.seed),
        ("residual_probe".to_string(), 0),
    ]);
    let canonical = toml::to_string(&cfg).map_err(|e| Error::Config(e.to_string()))?;
    let manifest = Manifest {
        tool: "parareg".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        subcommand: sub.name().into(),
        grid_level: level,
        config_sha256: sha256_hex(canonical.as_bytes()),
        config: cfg.clone(),
        seeds,
        tolerances: cfg.tolerances,
        artifacts,
        summary: sink.summary.clone(),
        timings_ms: timings,
    };
    let file = fs::File::create(sink.dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(BufWriter::new(file), &manifest)?;
    Ok(manifest)
}
