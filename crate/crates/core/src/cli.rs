//! Run configuration and table output for the `solve` binary.
//!
//! Config files are flat `key = value` lines; lists use brackets and `#`
//! starts a comment:
//!
//! ```text
//! mode = convergence
//! mesh = [2, 4, 8, 16]
//! timesteps = [4, 16, 64, 256]
//! epsilon = 1
//! ```

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::forms::NonlinearCoefficients;
use crate::mesh::{build_rectangle_mesh, build_staggered, InteriorPointRule, Rectangle};
use crate::solver::{
    run_transient_with, Discretization, InitialGuess, PicardConfig, TimeScheme, TimeSchemeConfig,
};
use crate::spaces::MAX_DEGREE;
use crate::verify::{error_l2, ConvergenceRecord, ConvergenceRow, Forcing, ManufacturedProblem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Single,
    Convergence,
    Sweep,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Single => "single",
            Mode::Convergence => "convergence",
            Mode::Sweep => "sweep",
        }
    }
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Mode::Single),
            "convergence" => Ok(Mode::Convergence),
            "sweep" => Ok(Mode::Sweep),
            _ => Err(Error::Config(format!("mode: unknown value `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    /// Mesh sizes `h⁻¹` of the uniform square grids.
    pub mesh: Vec<usize>,
    /// Time intervals, one per mesh.
    pub timesteps: Vec<usize>,
    pub scheme: TimeScheme,
    pub k: usize,
    pub epsilon: Vec<f64>,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub final_time: f64,
    pub picard_tolerance: f64,
    pub picard_max_iterations: usize,
    pub forcing: Forcing,
    pub out: Option<PathBuf>,
    pub verbosity: u8,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PicardConfig::default();
        Self {
            mode: Mode::Single,
            mesh: Vec::new(),
            timesteps: Vec::new(),
            scheme: TimeScheme::BackwardEuler,
            k: 1,
            epsilon: vec![1.0],
            alpha: vec![1.0],
            beta: vec![1.0],
            final_time: 0.1,
            picard_tolerance: p.tolerance,
            picard_max_iterations: p.max_iterations,
            forcing: Forcing::Manufactured,
            out: None,
            verbosity: 1,
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn items(value: &str) -> Vec<&str> {
    let v = value.trim();
    let inner = v
        .strip_prefix('[')
        .and_then(|s| s.strip_suffix(']'))
        .unwrap_or(v);
    inner.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_list<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<Vec<T>> {
    let out: Vec<T> = items(value)
        .into_iter()
        .map(|s| {
            s.parse::<T>().map_err(|_| Error::Parse {
                line,
                message: format!("{key}: cannot parse `{s}`"),
            })
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::Parse {
            line,
            message: format!("{key}: empty value"),
        });
    }
    Ok(out)
}

fn parse_one<T: std::str::FromStr>(key: &str, value: &str, line: usize) -> Result<T> {
    let mut v = parse_list::<T>(key, value, line)?;
    if v.len() != 1 {
        return Err(Error::Parse {
            line,
            message: format!("{key}: expected a single value"),
        });
    }
    Ok(v.remove(0))
}

/// Parses and validates a config. Keys missing from the text take their
/// defaults; timesteps default to the usual pairing (`N = h⁻²` for backward
/// Euler, `N = h⁻¹` for the second-order scheme).
pub fn parse_config(source: &str) -> Result<RunConfig> {
    let mut c = RunConfig::default();
    let mut seen = std::collections::HashSet::new();
    for (i, raw) in source.lines().enumerate() {
        let line = i + 1;
        let text = strip_comment(raw).trim();
        if text.is_empty() {
            continue;
        }
        let (key, value) = text.split_once('=').ok_or_else(|| Error::Parse {
            line,
            message: format!("expected `key = value`, got `{text}`"),
        })?;
        let (key, value) = (key.trim(), value.trim());
        if !seen.insert(key.to_string()) {
            return Err(Error::Parse {
                line,
                message: format!("{key}: given more than once"),
            });
        }
        match key {
            "mode" => c.mode = value.parse().map_err(|e: Error| Error::Parse { line, message: e.to_string() })?,
            "mesh" => c.mesh = parse_list(key, value, line)?,
            "timesteps" => c.timesteps = parse_list(key, value, line)?,
            "scheme" => {
                c.scheme = value.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("scheme: unknown value `{value}`"),
                })?
            }
            "k" => c.k = parse_one(key, value, line)?,
            "epsilon" => c.epsilon = parse_list(key, value, line)?,
            "alpha" => c.alpha = parse_list(key, value, line)?,
            "beta" => c.beta = parse_list(key, value, line)?,
            "final_time" => c.final_time = parse_one(key, value, line)?,
            "picard_tolerance" => c.picard_tolerance = parse_one(key, value, line)?,
            "picard_max_iterations" => c.picard_max_iterations = parse_one(key, value, line)?,
            "forcing" => {
                c.forcing = match value {
                    "manufactured" => Forcing::Manufactured,
                    "zero" => Forcing::Zero,
                    _ => {
                        return Err(Error::Parse {
                            line,
                            message: format!("forcing: unknown value `{value}`"),
                        })
                    }
                }
            }
            "out" => c.out = Some(PathBuf::from(value)),
            "verbosity" => c.verbosity = parse_one(key, value, line)?,
            _ => {
                return Err(Error::Parse {
                    line,
                    message: format!("unknown key `{key}`"),
                })
            }
        }
    }
    if c.timesteps.is_empty() {
        c.timesteps = c
            .mesh
            .iter()
            .map(|&n| match c.scheme {
                TimeScheme::BackwardEuler => n * n,
                TimeScheme::SecondOrder => n,
            })
            .collect();
    }
    c.validate()?;
    Ok(c)
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mesh.is_empty() {
            return Err(Error::Config("mesh: missing required key".into()));
        }
        if self.mesh.contains(&0) {
            return Err(Error::Config("mesh: sizes must be positive".into()));
        }
        if self.timesteps.len() != self.mesh.len() {
            return Err(Error::Config(format!(
                "timesteps: {} values for {} mesh sizes",
                self.timesteps.len(),
                self.mesh.len()
            )));
        }
        let min_steps = if self.scheme == TimeScheme::SecondOrder { 2 } else { 1 };
        if self.timesteps.iter().any(|&n| n < min_steps) {
            return Err(Error::Config(format!(
                "timesteps: {} needs at least {min_steps} intervals",
                self.scheme.name()
            )));
        }
        if self.k > MAX_DEGREE {
            return Err(Error::Config(format!("k: must be at most {MAX_DEGREE}")));
        }
        for (key, list) in [("epsilon", &self.epsilon), ("alpha", &self.alpha), ("beta", &self.beta)] {
            if list.iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(Error::Config(format!("{key}: values must be finite and nonnegative")));
            }
        }
        if !(self.final_time > 0.0 && self.final_time.is_finite()) {
            return Err(Error::Config("final_time: must be positive".into()));
        }
        if !(self.picard_tolerance > 0.0) {
            return Err(Error::Config("picard_tolerance: must be positive".into()));
        }
        if self.picard_max_iterations == 0 {
            return Err(Error::Config("picard_max_iterations: must be at least 1".into()));
        }
        match self.mode {
            Mode::Single => {
                if self.mesh.len() != 1 {
                    return Err(Error::Config("mesh: single mode takes one mesh size".into()));
                }
                if self.epsilon.len() * self.alpha.len() * self.beta.len() != 1 {
                    return Err(Error::Config("single mode takes one value of epsilon, alpha and beta".into()));
                }
            }
            Mode::Convergence => {
                if self.epsilon.len() * self.alpha.len() * self.beta.len() != 1 {
                    return Err(Error::Config(
                        "convergence mode takes one value of epsilon, alpha and beta; use sweep".into(),
                    ));
                }
            }
            Mode::Sweep => {}
        }
        if self.mode != Mode::Single && self.mesh.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("mesh: sizes must be strictly increasing".into()));
        }
        Ok(())
    }

    /// Text form accepted by [`parse_config`].
    pub fn render(&self) -> String {
        fn list<T: std::fmt::Debug>(v: &[T]) -> String {
            let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
            format!("[{}]", parts.join(", "))
        }
        let mut s = String::new();
        let _ = writeln!(s, "mode = {}", self.mode.name());
        let _ = writeln!(s, "mesh = {}", list(&self.mesh));
        let _ = writeln!(s, "timesteps = {}", list(&self.timesteps));
        let _ = writeln!(s, "scheme = {}", self.scheme.name());
        let _ = writeln!(s, "k = {}", self.k);
        let _ = writeln!(s, "epsilon = {}", list(&self.epsilon));
        let _ = writeln!(s, "alpha = {}", list(&self.alpha));
        let _ = writeln!(s, "beta = {}", list(&self.beta));
        let _ = writeln!(s, "final_time = {:?}", self.final_time);
        let _ = writeln!(s, "picard_tolerance = {:?}", self.picard_tolerance);
        let _ = writeln!(s, "picard_max_iterations = {}", self.picard_max_iterations);
        let forcing = match self.forcing {
            Forcing::Manufactured => "manufactured",
            Forcing::Zero => "zero",
        };
        let _ = writeln!(s, "forcing = {forcing}");
        if let Some(out) = &self.out {
            let _ = writeln!(s, "out = {}", out.display());
        }
        let _ = writeln!(s, "verbosity = {}", self.verbosity);
        s
    }

    pub fn picard(&self) -> PicardConfig {
        PicardConfig {
            tolerance: self.picard_tolerance,
            max_iterations: self.picard_max_iterations,
            initial_guess: InitialGuess::PreviousStep,
        }
    }

    /// Parameter combinations in output order.
    pub fn cells(&self) -> Vec<NonlinearCoefficients> {
        let mut out = Vec::new();
        for &epsilon in &self.epsilon {
            for &alpha in &self.alpha {
                for &beta in &self.beta {
                    out.push(NonlinearCoefficients { alpha, beta, epsilon });
                }
            }
        }
        out
    }
}

/// Errors of one parameter combination over the mesh sequence.
#[derive(Clone, Debug, PartialEq)]
pub struct Block {
    pub coeffs: NonlinearCoefficients,
    pub scheme: TimeScheme,
    pub record: ConvergenceRecord,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunSummary {
    pub blocks: Vec<Block>,
}

/// Runs one manufactured-solution solve and returns its final-time errors.
pub fn run_case(
    config: &RunConfig,
    coeffs: NonlinearCoefficients,
    inv_h: usize,
    steps: usize,
    log: Option<&mut dyn Write>,
) -> Result<ConvergenceRow> {
    let primal = build_rectangle_mesh(inv_h, inv_h, Rectangle::unit_square())?;
    let mesh = build_staggered(primal, &InteriorPointRule::Centroid)?;
    let disc = Discretization::new(mesh, config.k)?;
    let problem = ManufacturedProblem::new(coeffs, config.forcing);
    let time = TimeSchemeConfig::new(config.scheme, config.final_time, steps)?;
    let traj = run_transient_with(&disc, &problem, &time, &config.picard(), log, |_, _| {})?;
    let t = config.final_time;
    let (m, s, f) = (&disc.mesh, &disc.spaces, &traj.fields);
    Ok(ConvergenceRow {
        h: m.h,
        inv_h,
        steps,
        error_u: error_l2(m, &s.velocity, &f.velocity, |x| problem.velocity(x, t))?,
        error_l: error_l2(m, &s.gradient, &f.gradient, |x| problem.gradient_variable(x, t))?,
        error_p: error_l2(m, &s.pressure, &f.pressure, |x| [problem.pressure(x, t)])?,
    })
}

/// Executes every case of the config. Step logs go to `out` when
/// `verbosity >= 2`; progress lines go to `progress`.
pub fn run(config: &RunConfig, progress: &mut dyn Write) -> Result<RunSummary> {
    config.validate()?;
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    let mut summary = RunSummary::default();
    for coeffs in config.cells() {
        let mut record = ConvergenceRecord::default();
        for (&inv_h, &steps) in config.mesh.iter().zip(&config.timesteps) {
            let mut file = match (&config.out, config.verbosity >= 2) {
                (Some(dir), true) => Some(fs::File::create(dir.join(format!(
                    "steps_eps{:e}_alpha{:e}_beta{:e}_h{inv_h}_N{steps}.csv",
                    coeffs.epsilon, coeffs.alpha, coeffs.beta
                )))?),
                _ => None,
            };
            let row = run_case(config, coeffs, inv_h, steps, file.as_mut().map(|f| f as &mut dyn Write))?;
            if config.verbosity >= 1 {
                writeln!(
                    progress,
                    "eps={:e} alpha={:e} beta={:e} h^-1={inv_h} N={steps}: |u-uh|={:.3e} |L-Lh|={:.3e} |p-ph|={:.3e}",
                    coeffs.epsilon, coeffs.alpha, coeffs.beta, row.error_u, row.error_l, row.error_p
                )?;
            }
            record.push(row);
        }
        summary.blocks.push(Block {
            coeffs,
            scheme: config.scheme,
            record,
        });
    }
    if let Some(dir) = &config.out {
        fs::write(dir.join("results.csv"), to_csv(&summary))?;
        fs::write(dir.join("table.txt"), to_table(&summary))?;
        fs::write(dir.join("config.cfg"), config.render())?;
    }
    Ok(summary)
}

pub const CSV_HEADER: &str = "epsilon,alpha,beta,scheme,inv_h,N,err_u,ord_u,err_L,ord_L,err_p,ord_p";

fn fmt_order(o: Option<f64>) -> String {
    o.map_or_else(|| "N/A".to_string(), |v| format!("{v:.2}"))
}

pub fn to_csv(summary: &RunSummary) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for b in &summary.blocks {
        let orders = b.record.observed_orders();
        for (row, o) in b.record.rows.iter().zip(orders) {
            let _ = writeln!(
                s,
                "{:e},{:e},{:e},{},{},{},{:.6e},{},{:.6e},{},{:.6e},{}",
                b.coeffs.epsilon,
                b.coeffs.alpha,
                b.coeffs.beta,
                b.scheme.name(),
                row.inv_h,
                row.steps,
                row.error_u,
                fmt_order(o.u),
                row.error_l,
                fmt_order(o.l),
                row.error_p,
                fmt_order(o.p)
            );
        }
    }
    s
}

/// Aligned text table with Error/Order column pairs.
pub fn to_table(summary: &RunSummary) -> String {
    let mut s = String::new();
    for b in &summary.blocks {
        let _ = writeln!(
            s,
            "{} | epsilon = {:e}, alpha = {:e}, beta = {:e}",
            b.scheme.name(),
            b.coeffs.epsilon,
            b.coeffs.alpha,
            b.coeffs.beta
        );
        let _ = writeln!(
            s,
            "{:>5} {:>5} | {:>10} {:>6} | {:>10} {:>6} | {:>10} {:>6}",
            "h^-1", "N", "|u-uh|", "order", "|L-Lh|", "order", "|p-ph|", "order"
        );
        for (row, o) in b.record.rows.iter().zip(b.record.observed_orders()) {
            let _ = writeln!(
                s,
                "{:>5} {:>5} | {:>10.2e} {:>6} | {:>10.2e} {:>6} | {:>10.2e} {:>6}",
                row.inv_h,
                row.steps,
                row.error_u,
                fmt_order(o.u),
                row.error_l,
                fmt_order(o.l),
                row.error_p,
                fmt_order(o.p)
            );
        }
        s.push('\n');
    }
    s
}

/// One row of a results or reference CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct TableRow {
    pub epsilon: f64,
    pub alpha: f64,
    pub beta: f64,
    pub scheme: TimeScheme,
    pub inv_h: usize,
    pub steps: usize,
    pub errors: [f64; 3],
    pub orders: [Option<f64>; 3],
}

pub fn read_table(text: &str) -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = strip_comment(raw).trim();
        if t.is_empty() || t.starts_with("epsilon") {
            continue;
        }
        let f: Vec<&str> = t.split(',').map(str::trim).collect();
        if f.len() != 12 {
            return Err(Error::Parse {
                line,
                message: format!("expected 12 columns, got {}", f.len()),
            });
        }
        let num = |s: &str, what: &str| -> Result<f64> {
            s.parse().map_err(|_| Error::Parse {
                line,
                message: format!("{what}: cannot parse `{s}`"),
            })
        };
        let ord = |s: &str, what: &str| -> Result<Option<f64>> {
            if s == "N/A" {
                Ok(None)
            } else {
                num(s, what).map(Some)
            }
        };
        rows.push(TableRow {
            epsilon: num(f[0], "epsilon")?,
            alpha: num(f[1], "alpha")?,
            beta: num(f[2], "beta")?,
            scheme: f[3].parse().map_err(|_| Error::Parse {
                line,
                message: format!("scheme: unknown value `{}`", f[3]),
            })?,
            inv_h: num(f[4], "inv_h")? as usize,
            steps: num(f[5], "N")? as usize,
            errors: [num(f[6], "err_u")?, num(f[8], "err_L")?, num(f[10], "err_p")?],
            orders: [ord(f[7], "ord_u")?, ord(f[9], "ord_L")?, ord(f[11], "ord_p")?],
        });
    }
    Ok(rows)
}

/// Tolerances used when comparing against reference tables.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckTolerance {
    /// Allowed ratio between computed and reference errors.
    pub error_factor: f64,
    /// Allowed absolute difference of orders on the finest mesh of a block.
    pub order_window: f64,
}

impl Default for CheckTolerance {
    fn default() -> Self {
        Self {
            error_factor: 1.5,
            order_window: 0.2,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct CheckReport {
    pub compared: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn passed(&self) -> bool {
        self.compared > 0 && self.failures.is_empty()
    }
}

fn same(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

/// Compares computed rows with reference rows of the same parameters. Every
/// error must be within the factor; orders are compared on the finest mesh
/// of each reference block only, since coarse-mesh orders are preasymptotic.
pub fn check_tables(computed: &[TableRow], reference: &[TableRow], tol: CheckTolerance) -> CheckReport {
    let names = ["u", "L", "p"];
    let mut report = CheckReport::default();
    for r in reference {
        let Some(c) = computed.iter().find(|c| {
            same(c.epsilon, r.epsilon)
                && same(c.alpha, r.alpha)
                && same(c.beta, r.beta)
                && c.scheme == r.scheme
                && c.inv_h == r.inv_h
                && c.steps == r.steps
        }) else {
            continue;
        };
        report.compared += 1;
        let tag = format!(
            "eps={:e} beta={:e} h^-1={} N={}",
            r.epsilon, r.beta, r.inv_h, r.steps
        );
        for i in 0..3 {
            let ratio = c.errors[i] / r.errors[i];
            if !(ratio <= tol.error_factor && ratio >= 1.0 / tol.error_factor) {
                report.failures.push(format!(
                    "{tag}: error {} = {:.3e}, reference {:.3e}",
                    names[i], c.errors[i], r.errors[i]
                ));
            }
        }
        let finest = reference
            .iter()
            .filter(|o| same(o.epsilon, r.epsilon) && same(o.alpha, r.alpha) && same(o.beta, r.beta) && o.scheme == r.scheme)
            .map(|o| o.inv_h)
            .max();
        if finest == Some(r.inv_h) {
            for i in 0..3 {
                if let (Some(co), Some(ro)) = (c.orders[i], r.orders[i]) {
                    if (co - ro).abs() > tol.order_window {
                        report.failures.push(format!(
                            "{tag}: order {} = {co:.2}, reference {ro:.2}",
                            names[i]
                        ));
                    }
                }
            }
        }
    }
    if report.compared == 0 {
        report.failures.push("no computed row matches the reference table".into());
    }
    report
}

/// Reads a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path)?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_needs_mesh() {
        let e = parse_config("").unwrap_err();
        assert!(e.to_string().contains("mesh"), "{e}");
    }

    #[test]
    fn defaults_and_pairing() {
        let c = parse_config("mesh = 4").unwrap();
        assert_eq!(c.mode, Mode::Single);
        assert_eq!(c.scheme, TimeScheme::BackwardEuler);
        assert_eq!((c.k, c.alpha.clone()), (1, vec![1.0]));
        assert_eq!(c.timesteps, vec![16]);
        let c = parse_config("mode = convergence\nscheme = second-order\nmesh = [2,4,8]").unwrap();
        assert_eq!(c.timesteps, vec![2, 4, 8]);
    }

    #[test]
    fn parses_lists_and_values() {
        let c = parse_config(
            "mode = convergence # study\nmesh = [2,4,8,16]\ntimesteps = [4,16,64,256]\nepsilon = 1e-4\n",
        )
        .unwrap();
        assert_eq!(c.mesh, vec![2, 4, 8, 16]);
        assert_eq!(c.timesteps, vec![4, 16, 64, 256]);
        assert_eq!(c.epsilon, vec![1e-4]);
    }

    #[test]
    fn named_errors() {
        let cases = [
            ("mesh = 2\ncolour = red", "colour"),
            ("mesh = two", "mesh"),
            ("mesh = 2\nk = 1.5", "k"),
            ("mode = convergence\nmesh = [4, 2]", "mesh"),
            ("mesh = [2, 4]\ntimesteps = [4]\nmode = convergence", "timesteps"),
            ("mesh = 2\nbeta = -1", "beta"),
            ("mesh = 2\nmesh = 4", "mesh"),
            ("mesh = 2\nscheme = leapfrog", "scheme"),
        ];
        for (text, key) in cases {
            let e = parse_config(text).unwrap_err().to_string();
            assert!(e.contains(key), "{text}: {e}");
        }
    }

    #[test]
    fn check_tables_tolerances() {
        let row = |e: f64, o: Option<f64>, h: usize| TableRow {
            epsilon: 1.0,
            alpha: 1.0,
            beta: 1.0,
            scheme: TimeScheme::BackwardEuler,
            inv_h: h,
            steps: h * h,
            errors: [e, e, e],
            orders: [o, o, o],
        };
        let reference = vec![row(4e-2, None, 2), row(1e-2, Some(2.0), 4)];
        let good = vec![row(5e-2, None, 2), row(1.2e-2, Some(1.85), 4)];
        assert!(check_tables(&good, &reference, CheckTolerance::default()).passed());
        let bad = vec![row(7e-2, None, 2), row(1e-2, Some(1.7), 4)];
        let r = check_tables(&bad, &reference, CheckTolerance::default());
        assert_eq!(r.failures.len(), 6);
        assert!(!check_tables(&[], &reference, CheckTolerance::default()).passed());
    }

    #[test]
    fn csv_roundtrip_through_reader() {
        let mut record = ConvergenceRecord::default();
        for (h, e) in [(2usize, 4e-2), (4, 1e-2)] {
            record.push(ConvergenceRow {
                h: 1.0 / h as f64,
                inv_h: h,
                steps: h * h,
                error_u: e,
                error_l: 2.0 * e,
                error_p: 3.0 * e,
            });
        }
        let summary = RunSummary {
            blocks: vec![Block {
                coeffs: NonlinearCoefficients { alpha: 1.0, beta: 100.0, epsilon: 1e-4 },
                scheme: TimeScheme::SecondOrder,
                record,
            }],
        };
        let csv = to_csv(&summary);
        let rows = read_table(&csv).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].orders, [None; 3]);
        assert_eq!(rows[1].orders[0], Some(2.0));
        assert_eq!(rows[1].epsilon, 1e-4);
        assert!(to_table(&summary).contains("N/A"));
    }
}
