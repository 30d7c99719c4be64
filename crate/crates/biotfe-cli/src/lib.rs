//! Driver layer behind the `biotfe` binary: run configuration merged from a
//! key=value file and command-line flags, the convergence, inf-sup, and
//! energy studies, and deterministic CSV emission.

use std::path::{Path, PathBuf};
use std::time::Instant;

use biotfe::assemble::{assemble_operators, reduce_operators};
use biotfe::casebiot::{
    biot_sine_case, polynomial_case, polynomial_case_steady, DiscreteCase, ManufacturedCase,
};
use biotfe::diagnostics::{energy_residual, error_norms};
use biotfe::mesh::{initial_mesh, mesh_size, refine};
use biotfe::space::build_system;
use biotfe::stationary::{
    compatibility_residual, infsup_constant, solve_initial_given_p0, InfSupResult,
};
use biotfe::timeint::{integrate, lobatto_tableau, DaeRhs, TimeGrid};
use biotfe::{Error, Result};

/// Errors below this are round-off for the exactly representable cases, so
/// convergence rates computed from them are meaningless and left blank.
pub const ERROR_FLOOR: f64 = 1e-9;

/// Which manufactured solution drives a study.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum CaseKind {
    BiotSine,
    Polynomial,
}

impl CaseKind {
    pub fn parse(text: &str) -> std::result::Result<Self, String> {
        match text {
            "biot_sine" => Ok(CaseKind::BiotSine),
            "polynomial" => Ok(CaseKind::Polynomial),
            other => Err(format!(
                "unknown case '{other}' (expected biot_sine or polynomial)"
            )),
        }
    }
}

/// Study parameters shared by all subcommands. Config-file keys and long
/// flags use these field names (the final time is spelled `T`).
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub case: CaseKind,
    pub k: usize,
    pub s: usize,
    pub levels: (usize, usize),
    pub tau_ratio: f64,
    pub t_end: f64,
    pub out: Option<PathBuf>,
    pub emit_plots: bool,
    pub timing: bool,
    pub corrupt_tableau: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: CaseKind::BiotSine,
            k: 1,
            s: 2,
            levels: (3, 6),
            tau_ratio: 0.1,
            t_end: 0.5,
            out: None,
            emit_plots: false,
            timing: false,
            corrupt_tableau: false,
        }
    }
}

/// Parses an inclusive level range written as `lo..hi` or a single level.
pub fn parse_levels(text: &str) -> std::result::Result<(usize, usize), String> {
    let (lo, hi) = match text.split_once("..") {
        Some((a, b)) => (a.trim(), b.trim()),
        None => (text.trim(), text.trim()),
    };
    let lo: usize = lo
        .parse()
        .map_err(|_| format!("bad level '{lo}' in '{text}'"))?;
    let hi: usize = hi
        .parse()
        .map_err(|_| format!("bad level '{hi}' in '{text}'"))?;
    if lo > hi {
        return Err(format!("empty level range '{text}'"));
    }
    Ok((lo, hi))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("bad value '{value}' for {key}"))
}

fn parse_bool(value: &str) -> std::result::Result<bool, String> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        other => Err(format!("bad boolean '{other}'")),
    }
}

impl RunConfig {
    /// Applies `key = value` lines from `path` over the current values.
    /// Blank lines and `#` comments are ignored; unknown keys, malformed
    /// lines, and bad values are reported with file name and line number.
    pub fn apply_file(&mut self, path: &Path) -> std::result::Result<(), String> {
        let text =
            std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or_else(|| {
                format!("{}:{line}: expected key=value, got '{raw}'", path.display())
            })?;
            self.set(key.trim(), value.trim())
                .map_err(|msg| format!("{}:{line}: {msg}", path.display()))?;
        }
        Ok(())
    }

    /// Sets one field from its textual form; shared by the file parser and
    /// the flag handling in the binary.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        match key {
            "case" => self.case = CaseKind::parse(value)?,
            "k" => self.k = parse_num(key, value)?,
            "s" => self.s = parse_num(key, value)?,
            "levels" => self.levels = parse_levels(value)?,
            "tau_ratio" => self.tau_ratio = parse_num(key, value)?,
            "T" => self.t_end = parse_num(key, value)?,
            "out" => self.out = Some(PathBuf::from(value)),
            "emit_plots" => self.emit_plots = parse_bool(value)?,
            "timing" => self.timing = parse_bool(value)?,
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }

    /// Rejects out-of-range parameters before any mesh is built.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if !(1..=3).contains(&self.k) {
            return Err(format!("k must be in 1..=3, got {}", self.k));
        }
        if !(2..=4).contains(&self.s) {
            return Err(format!("s must be in 2..=4, got {}", self.s));
        }
        if self.levels.0 > self.levels.1 {
            return Err(format!(
                "empty level range {}..{}",
                self.levels.0, self.levels.1
            ));
        }
        if !(self.tau_ratio.is_finite() && self.tau_ratio > 0.0) {
            return Err(format!("tau_ratio must be positive, got {}", self.tau_ratio));
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(format!("T must be positive, got {}", self.t_end));
        }
        if self.emit_plots && self.out.is_none() {
            return Err("emit_plots needs an output path (set out)".into());
        }
        Ok(())
    }

    fn build_case(&self) -> ManufacturedCase {
        match self.case {
            CaseKind::BiotSine => biot_sine_case(),
            CaseKind::Polynomial => polynomial_case(self.k),
        }
    }
}

/// One level of a convergence ladder before formatting.
#[derive(Clone, Debug)]
pub struct LevelRow {
    pub level: usize,
    pub h: f64,
    pub tau: f64,
    pub dofs_u: usize,
    pub dofs_p: usize,
    pub e_u_inf_h1: f64,
    pub e_p_inf_l2: f64,
    pub e_p_l2_h1: f64,
    pub energy_residual_max: f64,
    pub compat_residual_max: f64,
    pub runtime_s: Option<f64>,
}

/// Solves the configured case over the level ladder and collects the error
/// norms together with the per-run residual diagnostics.
pub fn run_convergence(cfg: &RunConfig) -> Result<Vec<LevelRow>> {
    let case = cfg.build_case();
    let tab = lobatto_tableau(cfg.s)?;
    let mut mesh = initial_mesh();
    for _ in 0..cfg.levels.0 {
        mesh = refine(&mesh);
    }
    let mut rows = Vec::new();
    for level in cfg.levels.0..=cfg.levels.1 {
        let started = Instant::now();
        let h = mesh_size(&mesh);
        let sys = build_system(mesh.clone(), cfg.k, case.bc)?;
        let ops = assemble_operators(&sys, &case.params)?;
        let red = reduce_operators(&ops, &sys);
        let dc = DiscreteCase::new(&sys, &red, &case)?;
        let f_dot = |t: f64| dc.f_dot_free(t);
        let g = |t: f64| dc.g_free(t);
        let f = |t: f64| dc.f_free(t);
        let rhs = DaeRhs {
            f_dot: &f_dot,
            g: &g,
            f: Some(&f),
        };
        let n_steps = (cfg.t_end / (cfg.tau_ratio * h)).round().max(1.0) as usize;
        let grid = TimeGrid {
            t_end: cfg.t_end,
            n_steps,
        };
        let traj = integrate(&red, &tab, &grid, dc.initial_state()?, &rhs)?;
        let report = error_norms(&traj, &sys, &case)?;
        let energy = energy_residual(&traj, &red, &rhs, &tab)?;
        let compat = traj
            .states
            .iter()
            .map(|state| compatibility_residual(&red, state, &dc.f_free(state.t)))
            .fold(0.0_f64, f64::max);
        rows.push(LevelRow {
            level,
            h,
            tau: grid.tau(),
            dofs_u: report.dofs_u,
            dofs_p: report.dofs_p,
            e_u_inf_h1: report.e_u_inf_h1,
            e_p_inf_l2: report.e_p_inf_l2,
            e_p_l2_h1: report.e_p_l2_h1,
            energy_residual_max: energy.max_residual,
            compat_residual_max: compat,
            runtime_s: cfg.timing.then(|| started.elapsed().as_secs_f64()),
        });
        mesh = refine(&mesh);
    }
    Ok(rows)
}

/// Rejects a ladder containing any non-finite value.
pub fn check_finite(rows: &[LevelRow]) -> Result<()> {
    for row in rows {
        let values = [
            row.h,
            row.tau,
            row.e_u_inf_h1,
            row.e_p_inf_l2,
            row.e_p_l2_h1,
            row.energy_residual_max,
            row.compat_residual_max,
            row.runtime_s.unwrap_or(0.0),
        ];
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite value in results at level {}",
                row.level
            )));
        }
    }
    Ok(())
}

fn sci(x: f64) -> String {
    format!("{x:.5e}")
}

fn eoc_cell(prev: Option<&LevelRow>, row: &LevelRow, pick: fn(&LevelRow) -> f64) -> String {
    match prev {
        Some(p) if pick(p) >= ERROR_FLOOR && pick(row) >= ERROR_FLOOR => {
            sci((pick(p) / pick(row)).ln() / (p.h / row.h).ln())
        }
        _ => String::new(),
    }
}

/// Formats a ladder using the documented column schema. The eoc cells of the
/// first row, and of any pair whose error sits below the 1e-9 floor, are
/// empty; so is `runtime_s` unless timing was requested.
pub fn convergence_csv(rows: &[LevelRow]) -> String {
    let mut out = String::from(
        "level,h,tau,dofs_u,dofs_p,err_u_infH1,eoc_u,err_p_infL2,eoc_p_L2,err_p_l2H1,eoc_p_H1,energy_residual_max,compat_residual_max,runtime_s\n",
    );
    for (i, row) in rows.iter().enumerate() {
        let prev = i.checked_sub(1).map(|j| &rows[j]);
        let runtime = row.runtime_s.map(sci).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.level,
            sci(row.h),
            sci(row.tau),
            row.dofs_u,
            row.dofs_p,
            sci(row.e_u_inf_h1),
            eoc_cell(prev, row, |r| r.e_u_inf_h1),
            sci(row.e_p_inf_l2),
            eoc_cell(prev, row, |r| r.e_p_inf_l2),
            sci(row.e_p_l2_h1),
            eoc_cell(prev, row, |r| r.e_p_l2_h1),
            sci(row.energy_residual_max),
            sci(row.compat_residual_max),
            runtime,
        ));
    }
    out
}

/// Writes a gnuplot script that plots the three error columns of `csv_path`
/// against h on log-log axes, with reference slopes k+1 and k anchored at
/// the coarsest level.
pub fn plot_script(rows: &[LevelRow], csv_path: &Path, k: usize) -> String {
    let mut out = String::from("set logscale xy\nset datafile separator ','\n");
    out.push_str("set key left top\nset xlabel 'h'\nset ylabel 'relative error'\n");
    let csv = csv_path.display();
    out.push_str(&format!(
        "plot '{csv}' using 2:6 with linespoints title 'u, inf-H1', \\\n     '{csv}' using 2:8 with linespoints title 'p, inf-L2', \\\n     '{csv}' using 2:10 with linespoints title 'p, l2-H1'"
    ));
    if let Some(first) = rows.first() {
        out.push_str(&format!(
            ", \\\n     {} * (x / {})**{} with lines dashtype 2 title 'slope {}'",
            sci(first.e_u_inf_h1),
            sci(first.h),
            k + 1,
            k + 1
        ));
        out.push_str(&format!(
            ", \\\n     {} * (x / {})**{} with lines dashtype 2 title 'slope {}'",
            sci(first.e_p_l2_h1),
            sci(first.h),
            k,
            k
        ));
    }
    out.push('\n');
    out
}

/// Computes the discrete inf-sup constant on every configured level, using
/// the boundary conditions and parameters of the configured case.
pub fn run_infsup(cfg: &RunConfig) -> Result<Vec<InfSupResult>> {
    let case = cfg.build_case();
    let mut mesh = initial_mesh();
    for _ in 0..cfg.levels.0 {
        mesh = refine(&mesh);
    }
    let mut out = Vec::new();
    for _ in cfg.levels.0..=cfg.levels.1 {
        let sys = build_system(mesh.clone(), cfg.k, case.bc)?;
        let ops = assemble_operators(&sys, &case.params)?;
        let red = reduce_operators(&ops, &sys);
        let result = infsup_constant(&sys, &red)?;
        if !result.beta_h.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite inf-sup constant at level {}",
                result.level
            )));
        }
        out.push(result);
        mesh = refine(&mesh);
    }
    Ok(out)
}

/// Formats inf-sup results as `level,beta_h` CSV.
pub fn infsup_csv(results: &[InfSupResult]) -> String {
    let mut out = String::from("level,beta_h\n");
    for r in results {
        out.push_str(&format!("{},{}\n", r.level, sci(r.beta_h)));
    }
    out
}

/// Outcome of the two energy checks; `first_violation` names the failing
/// check and the earliest grid node where it broke.
#[derive(Clone, Debug)]
pub struct EnergyCheckReport {
    pub identity_max_residual: f64,
    pub identity_nodes: usize,
    pub decay_max_residual: f64,
    pub decay_steps: usize,
    pub first_violation: Option<(&'static str, usize)>,
}

impl EnergyCheckReport {
    pub fn ok(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Runs the two energy checks at the configured degree and stage count on
/// the coarsest configured level: the balance identity under data that is
/// polynomial in time of degree at most s-2, and monotone energy decay
/// under homogeneous data from a nonzero compatible start.
pub fn run_energy_check(cfg: &RunConfig) -> Result<EnergyCheckReport> {
    let mut tab = lobatto_tableau(cfg.s)?;
    if cfg.corrupt_tableau {
        tab.a[cfg.s - 1][cfg.s - 1] *= 1.01;
    }
    let case = if cfg.s == 2 {
        polynomial_case_steady(cfg.k)
    } else {
        polynomial_case(cfg.k)
    };
    let mut mesh = initial_mesh();
    for _ in 0..cfg.levels.0 {
        mesh = refine(&mesh);
    }
    let sys = build_system(mesh, cfg.k, case.bc)?;
    let ops = assemble_operators(&sys, &case.params)?;
    let red = reduce_operators(&ops, &sys);
    let mut first_violation = None;

    let dc = DiscreteCase::new(&sys, &red, &case)?;
    let f_dot = |t: f64| dc.f_dot_free(t);
    let g = |t: f64| dc.g_free(t);
    let f = |t: f64| dc.f_free(t);
    let rhs = DaeRhs {
        f_dot: &f_dot,
        g: &g,
        f: Some(&f),
    };
    let grid = TimeGrid {
        t_end: cfg.t_end,
        n_steps: 20,
    };
    let traj = integrate(&red, &tab, &grid, dc.initial_state()?, &rhs)?;
    let identity = energy_residual(&traj, &red, &rhs, &tab)?;
    if let Some(n) = identity.residual.iter().position(|r| !(*r <= 1e-9)) {
        first_violation = Some(("identity residual", n));
    }

    let nu = red.a_ff.nrows;
    let np = red.k_ff.nrows;
    let p0 = sys.restrict_p(
        &sys.interpolate_pressure(|x| (x[0] * (1.0 - x[0]) * x[1]).sin() + 0.3),
    );
    let start = solve_initial_given_p0(&red, &vec![0.0; nu], &p0)?;
    let zero_u = move |_t: f64| vec![0.0; nu];
    let zero_p = move |_t: f64| vec![0.0; np];
    let hom = DaeRhs {
        f_dot: &zero_u,
        g: &zero_p,
        f: Some(&zero_u),
    };
    let decay_grid = TimeGrid {
        t_end: 2.0,
        n_steps: 50,
    };
    let decay_traj = integrate(&red, &tab, &decay_grid, start, &hom)?;
    let decay = energy_residual(&decay_traj, &red, &hom, &tab)?;
    if first_violation.is_none() {
        if let Some(n) = decay.residual.iter().position(|r| !(*r <= 1e-9)) {
            first_violation = Some(("decay residual", n));
        }
    }
    if first_violation.is_none() {
        if let Some(n) = (1..decay.energies.len())
            .find(|&n| decay.energies[n] > decay.energies[n - 1] * (1.0 + 1e-12))
        {
            first_violation = Some(("energy growth", n));
        }
    }

    Ok(EnergyCheckReport {
        identity_max_residual: identity.max_residual,
        identity_nodes: identity.residual.len(),
        decay_max_residual: decay.max_residual,
        decay_steps: decay_grid.n_steps,
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn level_ranges_parse_inclusively() {
        assert_eq!(parse_levels("3..6").unwrap(), (3, 6));
        assert_eq!(parse_levels("4").unwrap(), (4, 4));
        assert_eq!(parse_levels(" 1 .. 2 ").unwrap(), (1, 2));
        assert!(parse_levels("5..3").unwrap_err().contains("empty"));
        assert!(parse_levels("a..3").is_err());
    }

    #[test]
    fn config_rejects_bad_fields() {
        let mut cfg = RunConfig::default();
        assert!(cfg.set("case", "banana").is_err());
        assert!(cfg.set("k", "one").is_err());
        assert!(cfg.set("volume", "11").unwrap_err().contains("unknown key"));
        cfg.set("k", "4").unwrap();
        assert!(cfg.validate().unwrap_err().contains("k must be"));
        cfg.set("k", "2").unwrap();
        cfg.set("T", "0.25").unwrap();
        cfg.set("emit_plots", "true").unwrap();
        assert!(cfg.validate().unwrap_err().contains("output path"));
        cfg.set("out", "table.csv").unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.t_end, 0.25);
    }

    #[test]
    fn config_file_errors_carry_line_numbers() {
        let dir = std::env::temp_dir().join("biotfe_cli_cfg_test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("bad.cfg");
        std::fs::write(&path, "k = 2\n# comment\n\nlevels 3..4\n").unwrap();
        let err = RunConfig::default().apply_file(&path).unwrap_err();
        assert!(err.contains(":4:"), "{err}");
        assert!(err.contains("key=value"), "{err}");
        std::fs::write(&path, "k = 2\ncase = banana\n").unwrap();
        let err = RunConfig::default().apply_file(&path).unwrap_err();
        assert!(err.contains(":2:"), "{err}");
        assert!(err.contains("banana"), "{err}");
    }

    fn row(level: usize, h: f64, e: f64) -> LevelRow {
        LevelRow {
            level,
            h,
            tau: 0.1 * h,
            dofs_u: 10,
            dofs_p: 5,
            e_u_inf_h1: e,
            e_p_inf_l2: e,
            e_p_l2_h1: e,
            energy_residual_max: 1e-12,
            compat_residual_max: 1e-13,
            runtime_s: None,
        }
    }

    #[test]
    fn csv_leaves_first_row_and_floored_eoc_cells_empty() {
        let rows = vec![row(3, 0.25, 4e-2), row(4, 0.125, 1e-2)];
        let csv = convergence_csv(&rows);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("level,h,tau,dofs_u"));
        let first: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(first.len(), 14);
        assert_eq!(first[6], "");
        assert_eq!(first[13], "");
        let second: Vec<&str> = lines[2].split(',').collect();
        assert_eq!(second[6], "2.00000e0");

        let exact = vec![row(3, 0.25, 3e-12), row(4, 0.125, 2e-12)];
        let csv = convergence_csv(&exact);
        let second: Vec<&str> = csv.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(second[6], "");
        assert_eq!(second[8], "");
        assert_eq!(second[10], "");
    }

    #[test]
    fn finite_check_catches_nan() {
        let mut rows = vec![row(3, 0.25, 4e-2)];
        check_finite(&rows).unwrap();
        rows[0].e_p_inf_l2 = f64::NAN;
        assert!(check_finite(&rows).is_err());
    }

    #[test]
    fn plot_script_references_csv_and_slopes() {
        let rows = vec![row(3, 0.25, 4e-2), row(4, 0.125, 1e-2)];
        let script = plot_script(&rows, Path::new("table.csv"), 1);
        assert!(script.contains("'table.csv' using 2:6"));
        assert!(script.contains("**2"));
        assert!(script.contains("logscale xy"));
    }
}
