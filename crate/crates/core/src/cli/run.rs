use super::config::{Command, ExperimentConfig};
use super::csv::{describe, fmt_num, write_field_csv, CsvError, Table};
use crate::caputo::ls_slope;
use crate::laplace::{log_grid, verify_ml_pair, LaplaceError, TalbotConfig};
use crate::mlf::{ml_decay_bound, ml_eval, MLParams, MLPoint, MlError};
use crate::multiplier::{
    evolve_full, evolve_hom, manufactured_problem, source_times, GridSpec, MultiplierError,
    MultiplierSymbol, StateField, DEFAULT_QUAD_STEPS, MIN_QUAD_STEPS,
};
use crate::sgcalc::{
    check_hypotheses, parametrix_residual, parametrix_terms, reference_evolution, solve_var_hom,
    PhaseGrid, SgError, SymbolField,
};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("mlf: {0}")]
    Ml(#[from] MlError),
    #[error("laplace: {0}")]
    Laplace(#[from] LaplaceError),
    #[error("multiplier: {0}")]
    Multiplier(#[from] MultiplierError),
    #[error("sgcalc: {0}")]
    Sg(#[from] SgError),
    #[error("output: {0}")]
    Csv(#[from] CsvError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    AtMost,
    AtLeast,
}

impl Relation {
    pub fn symbol(&self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::AtMost,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            relation: Relation::AtLeast,
            pass: value >= threshold,
        }
    }

    pub fn describe(&self) -> String {
        describe(
            &self.name,
            self.value,
            self.relation.symbol(),
            self.threshold,
            self.pass,
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub command: Command,
    pub wall_time: Duration,
    pub checks: Vec<Check>,
    pub outputs: Vec<PathBuf>,
}

impl RunReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// The checks as a table; wall time is left out so the file is reproducible.
    pub fn summary_table(&self) -> Table {
        let mut t = Table::new(&["command", "check", "value", "relation", "threshold", "pass"]);
        for c in &self.checks {
            t.push(vec![
                self.command.to_string(),
                c.name.clone(),
                fmt_num(c.value),
                c.relation.symbol().to_string(),
                fmt_num(c.threshold),
                c.pass.to_string(),
            ]);
        }
        t
    }
}

struct Outputs<'a> {
    dir: &'a Path,
    paths: Vec<PathBuf>,
}

impl Outputs<'_> {
    fn table(&mut self, name: &str, table: &Table) -> Result<(), RunError> {
        let path = self.dir.join(name);
        table.write(&path)?;
        self.paths.push(path);
        Ok(())
    }

    fn field(&mut self, name: &str, field: &StateField) -> Result<(), RunError> {
        let path = self.dir.join(name);
        write_field_csv(&path, field)?;
        self.paths.push(path);
        Ok(())
    }
}

/// Runs the configured pipeline, writing its CSV files and `report.csv` into `out_dir`.
pub fn run(cfg: &ExperimentConfig, out_dir: &Path) -> Result<RunReport, RunError> {
    let start = Instant::now();
    fs::create_dir_all(out_dir).map_err(|source| CsvError::Io {
        path: out_dir.display().to_string(),
        source,
    })?;
    let mut out = Outputs {
        dir: out_dir,
        paths: Vec::new(),
    };
    let checks = match cfg.command {
        Command::MlfEval => mlf_eval(cfg, &mut out)?,
        Command::VerifyLaplace => verify_laplace(cfg, &mut out)?,
        Command::SolveConst => solve_const(cfg, &mut out)?,
        Command::SolveVar => solve_var(cfg, &mut out)?,
        Command::VerifyDecay => verify_decay(cfg, &mut out)?,
        Command::ParametrixReport => parametrix_report(cfg, &mut out)?,
    };
    let mut report = RunReport {
        command: cfg.command,
        wall_time: Duration::ZERO,
        checks,
        outputs: Vec::new(),
    };
    out.table("report.csv", &report.summary_table())?;
    report.outputs = out.paths;
    report.wall_time = start.elapsed();
    Ok(report)
}

fn linspace(spec: &[f64]) -> Vec<f64> {
    let (a, b, n) = (spec[0], spec[1], spec[2] as usize);
    (0..n)
        .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
        .collect()
}

fn params(cfg: &ExperimentConfig) -> Result<MLParams, RunError> {
    Ok(MLParams::new(
        cfg.number("alpha", 0.5),
        cfg.number("beta", 1.0),
    )?)
}

fn times(cfg: &ExperimentConfig) -> Vec<f64> {
    cfg.list("t")
        .map(|t| t.to_vec())
        .or_else(|| cfg.list("t_grid").map(linspace))
        .unwrap_or_default()
}

fn gaussian(grid: GridSpec, width: f64) -> StateField {
    StateField::from_fn(grid, 0.0, |x| {
        (-x.iter().map(|v| v * v).sum::<f64>() / (2.0 * width * width)).exp()
    })
}

fn mlf_eval(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let p = params(cfg)?;
    let j = cfg.integer("j", 0);
    let zs = cfg
        .list("z")
        .map(|z| z.to_vec())
        .or_else(|| cfg.list("z_grid").map(linspace))
        .unwrap_or_default();
    let mut table = Table::new(&["z", "value", "branch", "est_rel_error"]);
    let mut worst: f64 = 0.0;
    for z in zs {
        let res = ml_eval(MLPoint {
            params: p,
            z,
            deriv_order: j,
        })?;
        worst = worst.max(res.est_rel_error);
        table.push(vec![
            fmt_num(z),
            fmt_num(res.value),
            res.branch.as_str().into(),
            fmt_num(res.est_rel_error),
        ]);
    }
    out.table("mlf.csv", &table)?;
    Ok(vec![Check::at_most(
        "max_est_rel_error",
        worst,
        cfg.number("tol", 1e-8),
    )])
}

fn verify_laplace(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let p = params(cfg)?;
    let ts = match (cfg.list("t"), cfg.list("t_grid")) {
        (Some(t), _) => t.to_vec(),
        (None, Some(g)) => log_grid(g[0], g[1], g[2] as usize),
        (None, None) => log_grid(0.1, 10.0, 25),
    };
    let talbot = TalbotConfig {
        node_count: cfg.integer("nodes", TalbotConfig::default().node_count),
        ..TalbotConfig::default()
    };
    let rep = verify_ml_pair(p, cfg.number("mu", -1.0), cfg.integer("j", 0), &ts, &talbot)?;
    let mut table = Table::new(&["t", "time_side", "inverted", "rel_err"]);
    for row in &rep.rows {
        table.push(vec![
            fmt_num(row.t),
            fmt_num(row.time_side),
            fmt_num(row.inverted),
            fmt_num(row.rel_err),
        ]);
    }
    out.table("laplace_pair.csv", &table)?;
    Ok(vec![Check::at_most(
        "ml_laplace_pair",
        rep.max_rel_err,
        cfg.number("tol", 1e-6),
    )])
}

/// The x-free part of a configured symbol as a Fourier multiplier.
fn multiplier_symbol(cfg: &ExperimentConfig, dim: usize) -> Result<MultiplierSymbol, RunError> {
    let k = cfg.number("k", 1.0);
    match cfg.text("symbol", "multiplier_xi2").as_str() {
        "multiplier_xi2" => Ok(MultiplierSymbol::laplacian(k)),
        _ => {
            let a = symbol_field(cfg)?;
            if !a.is_x_independent() || dim != 1 {
                return Err(RunError::InvalidInput(format!(
                    "symbol '{}' is not an x-independent one-dimensional multiplier",
                    a.name()
                )));
            }
            Ok(MultiplierSymbol::new(a.name().to_string(), move |xi| {
                k * a.eval(0.0, xi[0])
            }))
        }
    }
}

fn symbol_field(cfg: &ExperimentConfig) -> Result<SymbolField, RunError> {
    let name = cfg.text("symbol", "poly_sg");
    let mut a = match SymbolField::builtin(&name) {
        Some(a) => a,
        None => {
            let coeffs = cfg.list("coefficients").unwrap_or_default();
            let cols = cfg.integer("xi_terms", coeffs.len());
            if cols == 0 || !coeffs.len().is_multiple_of(cols) {
                return Err(RunError::InvalidInput(format!(
                    "{} coefficients do not fill rows of {cols}",
                    coeffs.len()
                )));
            }
            let rows: Vec<Vec<f64>> = coeffs.chunks(cols).map(|c| c.to_vec()).collect();
            let orders = cfg
                .list("orders")
                .map_or(((rows.len() - 1) as f64, (cols - 1) as f64), |o| {
                    (o[0], o[1])
                });
            SymbolField::polynomial("custom", rows, orders)?
        }
    };
    if let Some(h) = cfg.list("hypo") {
        a = a.with_hypo_orders(h[0], h[1], h[2])?;
    }
    Ok(a)
}

fn solve_const(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let r = cfg.number("r", 0.5);
    let dim = cfg.integer("dim", 1);
    let grid = GridSpec::new(dim, cfg.integer("n", 256), cfg.number("L", 10.0))
        .map_err(MultiplierError::from)?;
    let a = multiplier_symbol(cfg, dim)?;
    let u0 = gaussian(grid, cfg.number("width", 1.0));
    let manufactured = cfg.text("source", "none") == "manufactured";
    let q = cfg.integer("quad_steps", DEFAULT_QUAD_STEPS);

    let mut checks = Vec::new();
    let mut norms = Table::new(&["t", "l2_norm"]);
    norms.push(vec![fmt_num(0.0), fmt_num(u0.norm_l2())]);
    let mut history = vec![(0.0, u0.norm_l2())];
    let mut imag_ratio: f64 = 0.0;
    for (i, &t) in times(cfg).iter().enumerate() {
        let u = if manufactured {
            let (f, exact) = manufactured_problem(&u0, &a, r, t, q)?;
            let u = evolve_full(&u0, &f, &a, r, t, q)?;
            checks.push(Check::at_most(
                format!("manufactured_rel_l2_t={t}"),
                u.rel_l2_diff(&exact)?,
                cfg.number("tol", 1e-3),
            ));
            u
        } else {
            let zero: Vec<StateField> = source_times(t, MIN_QUAD_STEPS)
                .into_iter()
                .map(|s| StateField::zeros(grid, s))
                .collect();
            evolve_full(&u0, &zero, &a, r, t, MIN_QUAD_STEPS)?
        };
        let peak = u.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if peak > 0.0 {
            imag_ratio = imag_ratio.max(u.max_imag() / peak);
        }
        out.field(&format!("field_{i:03}.csv"), &u)?;
        norms.push(vec![fmt_num(t), fmt_num(u.norm_l2())]);
        history.push((t, u.norm_l2()));
    }
    out.table("norms.csv", &norms)?;
    checks.push(Check::at_most("max_imag_ratio", imag_ratio, 1e-12));
    if !manufactured {
        history.sort_by(|x, y| x.0.total_cmp(&y.0));
        let growth = history
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / history[0].1)
            .fold(f64::NEG_INFINITY, f64::max);
        checks.push(Check::at_most("l2_norm_increase", growth, 0.0));
    }
    Ok(checks)
}

fn solve_var(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let r = cfg.number("r", 0.5);
    if cfg.integer("dim", 1) != 1 {
        return Err(RunError::InvalidInput(
            "solve-var works in one space dimension".into(),
        ));
    }
    let grid = GridSpec::line(cfg.integer("n", 128), cfg.number("L", 10.0))
        .map_err(MultiplierError::from)?;
    let a = symbol_field(cfg)?;
    let correctors = cfg.integer("J", 3);
    let steps = cfg.integer("steps", 1024);
    let tol = cfg.number("tol", 5e-2);
    let u0 = gaussian(grid, cfg.number("width", 1.0));
    let collapse = a.is_x_independent().then(|| {
        let b = a.clone();
        MultiplierSymbol::new(a.name().to_string(), move |xi| b.eval(0.0, xi[0]))
    });

    let mut checks = Vec::new();
    let mut errors = Table::new(&["t", "rel_l2_vs_reference"]);
    for (i, &t) in times(cfg).iter().enumerate() {
        if !(t > 0.0) {
            return Err(RunError::InvalidInput(format!(
                "solve-var needs t > 0, got {t}"
            )));
        }
        let u = solve_var_hom(&a, &u0, r, t, correctors)?;
        let reference = reference_evolution(&a, &u0, r, t, steps)?;
        let err = u.rel_l2_diff(&reference)?;
        out.field(&format!("var_{i:03}.csv"), &u)?;
        out.field(&format!("reference_{i:03}.csv"), &reference)?;
        errors.push(vec![fmt_num(t), fmt_num(err)]);
        checks.push(Check::at_most(format!("var_vs_reference_t={t}"), err, tol));
        if let Some(m) = &collapse {
            let exact = evolve_hom(&u0, m, r, t)?;
            checks.push(Check::at_most(
                format!("multiplier_collapse_t={t}"),
                u.rel_l2_diff(&exact)?,
                1e-10,
            ));
        }
    }
    out.table("errors.csv", &errors)?;
    Ok(checks)
}

fn verify_decay(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let p = params(cfg)?;
    let j = cfg.integer("j", 0);
    let decades = cfg
        .list("decades")
        .map_or_else(|| linspace(&[2.0, 6.0, 41.0]), linspace);
    let mut table = Table::new(&["z", "value", "envelope", "ratio"]);
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for d in decades {
        let z = -(10f64.powf(d));
        let v = ml_eval(MLPoint {
            params: p,
            z,
            deriv_order: j,
        })?
        .value;
        let env = ml_decay_bound(p, j, z)?;
        table.push(vec![
            fmt_num(z),
            fmt_num(v),
            fmt_num(env),
            fmt_num(v.abs() / env),
        ]);
        xs.push((-z).ln());
        ys.push(v.abs().ln());
    }
    out.table("decay.csv", &table)?;
    let c = if p.alpha == p.beta { 2.0 } else { 1.0 };
    let expected = -(j as f64 + c);
    let slope = ls_slope(&xs, &ys);
    Ok(vec![Check::at_most(
        format!("decay_slope_vs_{expected}"),
        (slope - expected).abs(),
        cfg.number("tol", 0.05),
    )])
}

fn parametrix_report(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<Check>, RunError> {
    let r = cfg.number("r", 0.5);
    let grid = GridSpec::line(cfg.integer("n", 64), cfg.number("L", 10.0))
        .map_err(MultiplierError::from)?;
    let a = symbol_field(cfg)?;
    let max_j = cfg.integer("J", 3);
    let s_values = cfg
        .list("s")
        .map_or_else(|| vec![100.0, 1000.0], |s| s.to_vec());
    let phase = PhaseGrid::new(grid, &a)?;
    let phi = gaussian(grid, cfg.number("width", 1.0));

    let hypo = check_hypotheses(&a, &phase);
    let mut htable = Table::new(&["quantity", "theta", "sigma", "value"]);
    for ((th, sg), v) in &hypo.h1_constants {
        htable.push(vec![
            "h1_constant".into(),
            th.to_string(),
            sg.to_string(),
            fmt_num(*v),
        ]);
    }
    for ((th, sg), v) in &hypo.h3_constants {
        htable.push(vec![
            "h3_constant".into(),
            th.to_string(),
            sg.to_string(),
            fmt_num(*v),
        ]);
    }
    htable.push(vec![
        "h2_lower_margin".into(),
        String::new(),
        String::new(),
        fmt_num(hypo.h2_lower_margin),
    ]);
    htable.push(vec![
        "admissible_s".into(),
        String::new(),
        String::new(),
        fmt_num(hypo.admissible_s(r)),
    ]);
    out.table("hypotheses.csv", &htable)?;

    let mut checks = vec![Check::at_most(
        "hypothesis_failures",
        hypo.failing_points.len() as f64,
        0.0,
    )];
    let mut residuals = Table::new(&["s", "J", "residual"]);
    let mut terms = Table::new(&["s", "j", "max_abs"]);
    let mut first_terms: Option<Vec<Vec<num_complex::Complex64>>> = None;
    for &s in &s_values {
        let mut prev: Option<f64> = None;
        let mut worst_ratio: f64 = 0.0;
        for j in 0..=max_j {
            let res = parametrix_residual(&a, &phase, r, j, s, &phi)?;
            residuals.push(vec![fmt_num(s), j.to_string(), fmt_num(res)]);
            if let Some(p) = prev {
                worst_ratio = worst_ratio.max(res / p);
            }
            prev = Some(res);
        }
        if max_j > 0 {
            checks.push(Check::at_most(
                format!("residual_ratio_s={s}"),
                worst_ratio,
                cfg.number("tol", 0.5),
            ));
        }
        let par = parametrix_terms(&a, &phase, r, max_j, s)?;
        for j in 0..par.expansion.term_count() {
            terms.push(vec![
                fmt_num(s),
                j.to_string(),
                fmt_num(par.expansion.max_abs(j)),
            ]);
        }
        match &first_terms {
            None => {
                checks.push(Check::at_most("a1_max", par.expansion.max_abs(1), 1e-12));
                first_terms = Some(par.expansion.terms);
            }
            Some(base) => {
                let drift = base
                    .iter()
                    .zip(&par.expansion.terms)
                    .map(|(x, y)| {
                        let num: f64 = x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum();
                        let den: f64 = x.iter().map(|p| p.norm_sqr()).sum();
                        if num == 0.0 {
                            0.0
                        } else {
                            (num / den).sqrt()
                        }
                    })
                    .fold(0.0, f64::max);
                checks.push(Check::at_most(
                    format!("term_s_dependence_s={s}"),
                    drift,
                    1e-8,
                ));
            }
        }
    }
    out.table("residuals.csv", &residuals)?;
    out.table("terms.csv", &terms)?;
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::super::config::parse_config;
    use super::super::csv::{field_table, read_field_csv};
    use super::*;

    #[test]
    fn mlf_eval_columns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg =
            parse_config("command = mlf-eval\nalpha = 0.5\nbeta = 1\nz = -10, -1, 0, 2").unwrap();
        let rep = run(&cfg, dir.path()).unwrap();
        assert!(rep.passed());
        let csv = fs::read_to_string(dir.path().join("mlf.csv")).unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "z,value,branch,est_rel_error");
        assert_eq!(lines.len(), 5);
        assert!(lines[1].contains(",integral,") && lines[2].contains(",series,"));
        // E_{1/2,1}(0) = 1
        assert!(lines[3].starts_with("0.0000000000000000e0,1.0000000000000000e0,series,"));
    }

    #[test]
    fn toy_model_fields_round_trip_and_norm_decays() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("command = solve-const\nr = 0.5\nn = 256\nL = 10\nsymbol = multiplier_xi2\nt = 0.25,1,4").unwrap();
        let rep = run(&cfg, dir.path()).unwrap();
        assert!(rep.passed(), "{:?}", rep.checks);
        let norms = fs::read_to_string(dir.path().join("norms.csv")).unwrap();
        let values: Vec<f64> = norms
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(values.len(), 4);
        assert!(values.windows(2).all(|w| w[1] < w[0]));
        let field = read_field_csv(&dir.path().join("field_001.csv")).unwrap();
        assert_eq!(field.time, 1.0);
        assert_eq!(field.grid.n(), 256);
        assert_eq!(
            fs::read_to_string(dir.path().join("field_001.csv")).unwrap(),
            field_table(&field).render()
        );
    }

    #[test]
    fn two_dimensional_fields_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("command = solve-const\nr = 0.8\nn = 16\ndim = 2\nL = 5\nt = 0.5")
            .unwrap();
        run(&cfg, dir.path()).unwrap();
        let path = dir.path().join("field_000.csv");
        let field = read_field_csv(&path).unwrap();
        assert_eq!(field.grid.dim(), 2);
        assert_eq!(
            fs::read_to_string(&path).unwrap(),
            field_table(&field).render()
        );
    }

    #[test]
    fn every_command_parses_from_its_name() {
        for c in Command::ALL {
            assert_eq!(c.as_str().parse::<Command>().unwrap(), c);
        }
    }
}
