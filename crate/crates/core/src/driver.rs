//! Run workflows: simulation with snapshots and diagnostics, convergence studies against
//! exact sphere solutions, and monotonicity checks.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use log::{info, warn};

use crate::assembly::FeSpace;
use crate::config::RunConfig;
use crate::diagnostics::{
    eoc, error_norms, hawking_mass, max_normal_defect, monotonicity, schulze_quantity,
    sphere_exact_state, sphere_radius, Direction, ErrorRecord, MonotoneVerdict, TimeSeries,
};
use crate::error::{Error, Result};
use crate::flow::{FlowKind, FlowLaw};
use crate::init::{build_initial_state, nodal_curvature};
use crate::mesh::{builtin_implicit, export_vtk, import_off, shape_mesh, NodalField, Shape, SurfaceMesh};
use crate::stepper::{History, StartupMode, State, StepReport, Stepper, StepperOptions};

/// Columns of `series.csv` after `time`.
pub const SERIES_COLUMNS: [&str; 7] = [
    "area",
    "hawking_mass",
    "schulze",
    "clamp_count",
    "min_h",
    "max_h",
    "max_normal_defect",
];

/// Initial mesh of a configuration: the built-in mesh of the shape, or an OFF file
/// projected onto the shape and elevated to the configured degree.
pub fn build_mesh(config: &RunConfig) -> Result<SurfaceMesh> {
    match &config.mesh_file {
        Some(path) => builtin_implicit(&config.shape, &import_off(path)?, config.degree),
        None => shape_mesh(&config.shape, config.refinement, config.degree),
    }
}

/// A running simulation: the last `q` levels plus everything needed to continue.
#[derive(Debug, Clone)]
pub struct Simulation {
    config: RunConfig,
    flow: FlowLaw,
    initial_mesh: SurfaceMesh,
    stepper: Stepper,
    history: History,
    step_index: usize,
    clamp_total: usize,
    last_clamped: usize,
}

impl Simulation {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_mesh(&config)?;
        Self::with_mesh(config, mesh)
    }

    pub fn with_mesh(config: RunConfig, mesh: SurfaceMesh) -> Result<Self> {
        Self::with_options(config, mesh, false)
    }

    /// `plain_mass` replaces `M(x, u)` by `M(x)`.
    pub fn with_options(config: RunConfig, mesh: SurfaceMesh, plain_mass: bool) -> Result<Self> {
        config.validate()?;
        let flow = config.flow_law()?;
        if let Some(w) = config.step_size_warning(mesh.mesh_width()) {
            warn!("{w}");
        }
        let options = StepperOptions {
            cg: config.cg,
            velocity: config.velocity_mode,
            plain_mass,
        };
        let stepper = Stepper::new(FeSpace::new(mesh.topology().clone()), flow, options);
        let initial = build_initial_state(&mesh, &config.shape, &flow)?;
        let history = match (config.startup, config.shape) {
            (StartupMode::Exact, Shape::Sphere { radius }) => {
                let exact = |t: f64| sphere_exact_state(&mesh, &flow, radius, t);
                stepper.startup(initial, config.bdf_order, config.tau, StartupMode::Exact, Some(&exact))?
            }
            _ => stepper.startup(initial, config.bdf_order, config.tau, StartupMode::Bootstrap, None)?,
        };
        let step_index = config.bdf_order - 1;
        Ok(Self {
            config,
            flow,
            initial_mesh: mesh,
            stepper,
            history,
            step_index,
            clamp_total: 0,
            last_clamped: 0,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn flow(&self) -> &FlowLaw {
        &self.flow
    }

    pub fn initial_mesh(&self) -> &SurfaceMesh {
        &self.initial_mesh
    }

    pub fn history(&self) -> &History {
        &self.history
    }

    pub fn state(&self) -> &State {
        self.history.latest().expect("history is never empty")
    }

    pub fn time(&self) -> f64 {
        self.state().time
    }

    /// Index `n` of the newest level.
    pub fn step_index(&self) -> usize {
        self.step_index
    }

    pub fn num_steps(&self) -> usize {
        self.config.num_steps()
    }

    pub fn is_finished(&self) -> bool {
        self.step_index >= self.num_steps()
    }

    pub fn clamp_total(&self) -> usize {
        self.clamp_total
    }

    /// Current surface.
    pub fn mesh(&self) -> Result<SurfaceMesh> {
        self.state().mesh(&self.initial_mesh)
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let report = self.stepper.step(&mut self.history)?;
        self.step_index += 1;
        self.clamp_total += report.clamped;
        self.last_clamped = report.clamped;
        Ok(report)
    }

    /// Startup levels, oldest first.
    pub fn levels_oldest_first(&self) -> Vec<&State> {
        let mut v: Vec<&State> = self.history.levels().collect();
        v.reverse();
        v
    }

    /// Exponent used for the Schulze quantity: `alpha` of `H^alpha` flows, 1 otherwise.
    pub fn schulze_alpha(&self) -> f64 {
        match self.flow.kind() {
            FlowKind::PowerMcf { alpha } => alpha,
            _ => 1.0,
        }
    }

    /// Values for [`SERIES_COLUMNS`] at `state`.
    pub fn diagnostics(&self, state: &State, clamped: usize) -> Result<Vec<f64>> {
        let space = self.stepper.space();
        let nodes = state.x.to_points();
        let mass = space.assemble_mass(&nodes)?;
        let h = nodal_curvature(state, &self.flow);
        let area: f64 = mass.apply(&vec![1.0; mass.dim()]).iter().sum();
        let schulze = match schulze_quantity(space, &nodes, &state.u, &h, self.schulze_alpha()) {
            Ok(v) => v.value,
            Err(Error::Undefined(_)) => f64::NAN,
            Err(e) => return Err(e),
        };
        let (min_h, max_h) = h
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(vec![
            area,
            hawking_mass(&mass, &h),
            schulze,
            clamped as f64,
            min_h,
            max_h,
            max_normal_defect(state),
        ])
    }

    pub fn last_clamped(&self) -> usize {
        self.last_clamped
    }

    /// VTK snapshot of `state` with fields `normal`, `V`, `H`.
    pub fn write_snapshot(&self, state: &State, path: impl AsRef<Path>) -> Result<()> {
        let mesh = state.mesh(&self.initial_mesh)?;
        let normals = state.u.to_points();
        let h = nodal_curvature(state, &self.flow);
        export_vtk(
            &mesh,
            &[
                NodalField::Vector("normal", &normals),
                NodalField::Scalar("V", state.normal_velocity()),
                NodalField::Scalar("H", &h),
            ],
            path,
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub clamp_total: usize,
    pub snapshots: Vec<PathBuf>,
    pub series: TimeSeries,
}

fn snapshot_path(dir: &Path, index: usize) -> PathBuf {
    dir.join(format!("surf_{index}.vtk"))
}

/// Time loop writing `surf_{index}.vtk` snapshots and `series.csv` into the output
/// directory. The series written so far is kept when a step fails.
pub fn simulate(config: &RunConfig) -> Result<RunSummary> {
    let mut sim = Simulation::new(config.clone())?;
    run_to_end(&mut sim, Some(&config.output_dir))
}

/// Drive an existing simulation to its final time; output is written when `dir` is given.
pub fn run_to_end(sim: &mut Simulation, dir: Option<&Path>) -> Result<RunSummary> {
    if let Some(d) = dir {
        fs::create_dir_all(d)?;
    }
    let mut series = TimeSeries::new(SERIES_COLUMNS);
    let mut snapshots = Vec::new();
    let cadence = sim.config().snapshot_cadence();
    let total = sim.num_steps();

    let levels: Vec<State> = sim.levels_oldest_first().into_iter().cloned().collect();
    for (n, state) in levels.iter().enumerate() {
        series.push(state.time, sim.diagnostics(state, 0)?)?;
        if let Some(d) = dir {
            if n % cadence == 0 {
                let p = snapshot_path(d, snapshots.len());
                sim.write_snapshot(state, &p)?;
                snapshots.push(p);
            }
        }
    }

    let result = (|| -> Result<()> {
        while !sim.is_finished() {
            let report = sim.step()?;
            let state = sim.state().clone();
            series.push(state.time, sim.diagnostics(&state, report.clamped)?)?;
            let n = sim.step_index();
            if let Some(d) = dir {
                if n % cadence == 0 || n == total {
                    let p = snapshot_path(d, snapshots.len());
                    sim.write_snapshot(&state, &p)?;
                    snapshots.push(p);
                }
            }
            if n % cadence == 0 {
                info!("step {n}/{total}, t = {:.6}", state.time);
            }
        }
        Ok(())
    })();
    if let Some(d) = dir {
        series.write_csv(d.join("series.csv"))?;
    }
    result?;
    Ok(RunSummary {
        steps: sim.step_index(),
        final_time: sim.time(),
        clamp_total: sim.clamp_total(),
        snapshots,
        series,
    })
}

#[derive(Debug, Clone)]
pub struct MonotoneReport {
    pub hawking: MonotoneVerdict,
    pub schulze: MonotoneVerdict,
    /// Whether the flow is one for which the quantity is known to be monotone.
    pub hawking_applies: bool,
    pub schulze_applies: bool,
}

impl MonotoneReport {
    pub fn passed(&self) -> bool {
        (!self.hawking_applies || self.hawking.monotone) && (!self.schulze_applies || self.schulze.monotone)
    }
}

impl fmt::Display for MonotoneReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let line = |f: &mut fmt::Formatter<'_>, name: &str, dir: &str, v: &MonotoneVerdict, applies: bool| {
            writeln!(
                f,
                "{name:<14} {dir:<15} {:<13} max violation {:.3e}{}",
                if v.monotone { "monotone" } else { "NOT monotone" },
                v.max_violation,
                if applies { "" } else { "  (not expected for this flow)" }
            )
        };
        line(f, "hawking_mass", "non-decreasing", &self.hawking, self.hawking_applies)?;
        line(f, "schulze", "non-increasing", &self.schulze, self.schulze_applies)
    }
}

/// Per-step tolerance `1e-6 (1 + |m|)` for monotone quantities.
pub const MONOTONE_TOL: f64 = 1e-6;

pub fn monotone_report(series: &TimeSeries, flow: &FlowLaw) -> MonotoneReport {
    let hawking = series.column("hawking_mass").unwrap_or_default();
    let schulze: Vec<f64> = series
        .column("schulze")
        .unwrap_or_default()
        .into_iter()
        .filter(|v| v.is_finite())
        .collect();
    MonotoneReport {
        hawking: monotonicity(&hawking, Direction::NonDecreasing, MONOTONE_TOL),
        schulze: monotonicity(&schulze, Direction::NonIncreasing, MONOTONE_TOL),
        hawking_applies: matches!(flow.kind(), FlowKind::Imcf),
        schulze_applies: match flow.kind() {
            FlowKind::Mcf => true,
            FlowKind::PowerMcf { alpha } => (1.0..=5.0).contains(&alpha),
            _ => false,
        },
    }
}

/// Simulation followed by the monotonicity verdicts.
pub fn monotone(config: &RunConfig) -> Result<(RunSummary, MonotoneReport)> {
    let summary = simulate(config)?;
    let report = monotone_report(&summary.series, &config.flow_law()?);
    Ok((summary, report))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyMode {
    /// Refinements `r, r+1, ...` at fixed `tau`.
    Space,
    /// Step sizes `tau, tau/2, ...` on the fixed refinement `r`.
    Time,
}

/// L-infinity-in-time errors per level and the rates between levels.
#[derive(Debug, Clone)]
pub struct ConvergenceTable {
    pub mode: StudyMode,
    pub records: Vec<ErrorRecord>,
    pub nodes: Vec<usize>,
}

impl ConvergenceTable {
    fn param(&self, r: &ErrorRecord) -> f64 {
        match self.mode {
            StudyMode::Space => r.h,
            StudyMode::Time => r.tau,
        }
    }

    /// H1 rates per variable, one row per consecutive pair of levels.
    pub fn eocs(&self) -> Vec<[f64; 5]> {
        let params: Vec<f64> = self.records.iter().map(|r| self.param(r)).collect();
        let cols: Vec<Vec<f64>> = (0..5)
            .map(|c| {
                let e: Vec<f64> = self.records.iter().map(|r| r.h1_columns()[c].1).collect();
                eoc(&e, &params).expect("equal lengths")
            })
            .collect();
        (0..self.records.len().saturating_sub(1))
            .map(|i| [cols[0][i], cols[1][i], cols[2][i], cols[3][i], cols[4][i]])
            .collect()
    }

    pub fn to_csv(&self) -> String {
        let names = ErrorRecord::default().h1_columns().map(|c| c.0);
        let with_eoc = self.records.len() > 1;
        let mut s = String::from("nodes,h,tau");
        for n in names {
            s.push_str(&format!(",{n}_h1"));
            if with_eoc {
                s.push_str(&format!(",{n}_eoc"));
            }
        }
        s.push('\n');
        let eocs = self.eocs();
        for (i, r) in self.records.iter().enumerate() {
            s.push_str(&format!("{},{:.16e},{:.16e}", self.nodes[i], r.h, r.tau));
            for (c, (_, e)) in r.h1_columns().iter().enumerate() {
                s.push_str(&format!(",{e:.16e}"));
                if with_eoc {
                    match i.checked_sub(1) {
                        Some(p) => s.push_str(&format!(",{:.16e}", eocs[p][c])),
                        None => s.push(','),
                    }
                }
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for ConvergenceTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names = ErrorRecord::default().h1_columns().map(|c| c.0);
        let with_eoc = self.records.len() > 1;
        write!(f, "{:>7} {:>10} {:>10}", "nodes", "h", "tau")?;
        for n in names {
            write!(f, " {:>16}", n)?;
            if with_eoc {
                write!(f, " {:>5}", "eoc")?;
            }
        }
        writeln!(f)?;
        let eocs = self.eocs();
        for (i, r) in self.records.iter().enumerate() {
            write!(f, "{:>7} {:>10.4e} {:>10.4e}", self.nodes[i], r.h, r.tau)?;
            for (c, (_, e)) in r.h1_columns().iter().enumerate() {
                write!(f, " {:>16.6e}", e)?;
                if with_eoc {
                    match i.checked_sub(1) {
                        Some(p) => write!(f, " {:>5.2}", eocs[p][c])?,
                        None => write!(f, " {:>5}", "-")?,
                    }
                }
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

/// L-infinity-in-time errors of one run against the exact sphere solution.
pub fn sphere_errors(config: &RunConfig) -> Result<(ErrorRecord, usize)> {
    sphere_errors_on(config, build_mesh(config)?)
}

/// As [`sphere_errors`] on a given initial mesh whose nodes lie on the sphere.
pub fn sphere_errors_on(config: &RunConfig, mesh: SurfaceMesh) -> Result<(ErrorRecord, usize)> {
    let Shape::Sphere { radius } = config.shape else {
        return Err(Error::Config("convergence studies need geometry = sphere".into()));
    };
    if !config.has_exact_solution() {
        return Err(Error::Config("convergence studies need a flow with a closed-form sphere solution".into()));
    }
    let mut sim = Simulation::with_mesh(config.clone(), mesh)?;
    let mesh0 = sim.initial_mesh().clone();
    let h = mesh0.mesh_width();
    let (m0, a0) = FeSpace::new(mesh0.topology().clone()).assemble_mass_stiffness(mesh0.nodes())?;
    let flow = *sim.flow();
    let measure = |state: &State| -> Result<ErrorRecord> {
        let exact = sphere_exact_state(&mesh0, &flow, radius, state.time)?;
        let s = sphere_radius(flow.kind(), radius, 2.0, state.time)? / radius;
        // radial scaling: M scales with s^2, A is invariant
        error_norms(state, &exact, &flow, &m0.scaled(s * s), &a0, h, config.tau)
    };
    let mut worst = ErrorRecord {
        h,
        tau: config.tau,
        ..Default::default()
    };
    for state in sim.levels_oldest_first() {
        worst = worst.max(&measure(state)?);
    }
    while !sim.is_finished() {
        sim.step()?;
        worst = worst.max(&measure(sim.state())?);
    }
    Ok((worst, mesh0.num_nodes()))
}

/// Space or time convergence study over `levels` levels.
pub fn convergence(config: &RunConfig, mode: StudyMode, levels: usize) -> Result<ConvergenceTable> {
    if levels == 0 {
        return Err(Error::Config("at least one level is needed".into()));
    }
    let mut records = Vec::with_capacity(levels);
    let mut nodes = Vec::with_capacity(levels);
    for i in 0..levels {
        let mut c = config.clone();
        match mode {
            StudyMode::Space => c.refinement = config.refinement + i,
            StudyMode::Time => c.tau = config.tau / f64::from(1u32 << i),
        }
        let (record, n) = sphere_errors(&c)?;
        info!("level {i}: {n} nodes, h = {:.4e}, tau = {:.4e}", record.h, record.tau);
        records.push(record);
        nodes.push(n);
    }
    Ok(ConvergenceTable { mode, records, nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sphere_config(kind: FlowKind, tau: f64, t: f64, dir: &Path) -> RunConfig {
        let mut c = RunConfig::new(kind, Shape::Sphere { radius: 3.0 }, tau, t);
        c.refinement = 1;
        c.output_dir = dir.to_path_buf();
        c
    }

    #[test]
    fn sphere_imcf_runs_all_steps() {
        let dir = tempfile::tempdir().unwrap();
        let c = sphere_config(FlowKind::Imcf, 0.1, 1.0, dir.path());
        let s = simulate(&c).unwrap();
        assert_eq!(s.steps, 10);
        assert!((s.final_time - 1.0).abs() < 1e-12);
        assert_eq!(s.series.len(), 11);
        // cadence 1 step: every level plus nothing extra
        assert_eq!(s.snapshots.len(), 11);
        assert!(dir.path().join("surf_10.vtk").exists());
        let csv = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert!(csv.starts_with("time,area,hawking_mass,schulze,clamp_count,min_h,max_h,max_normal_defect\n"));
    }

    #[test]
    fn failure_keeps_partial_series() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = sphere_config(FlowKind::Imcf, 0.1, 1.0, dir.path());
        c.bdf_order = 1;
        c.cg.max_iter = 1;
        assert!(simulate(&c).is_err());
        let csv = fs::read_to_string(dir.path().join("series.csv")).unwrap();
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn one_level_table_has_no_rates() {
        let dir = tempfile::tempdir().unwrap();
        let c = sphere_config(FlowKind::Imcf, 0.25, 0.5, dir.path());
        let t = convergence(&c, StudyMode::Time, 1).unwrap();
        assert!(t.eocs().is_empty());
        let csv = t.to_csv();
        assert!(!csv.contains("eoc"));
        assert_eq!(csv.lines().count(), 2);
        assert!(!format!("{t}").contains("eoc"));
    }

    #[test]
    fn time_study_halves_tau() {
        let dir = tempfile::tempdir().unwrap();
        let c = sphere_config(FlowKind::PowerMcf { alpha: 2.0 }, 0.1, 0.4, dir.path());
        let t = convergence(&c, StudyMode::Time, 3).unwrap();
        let taus: Vec<f64> = t.records.iter().map(|r| r.tau).collect();
        assert_eq!(taus, vec![0.1, 0.05, 0.025]);
        assert_eq!(t.eocs().len(), 2);
        assert!(t.records[2].position.h1 < t.records[0].position.h1);
        let csv = t.to_csv();
        assert!(csv.lines().next().unwrap().contains("position_eoc"));
    }

    #[test]
    fn exact_startup_errors_vanish_at_start() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = sphere_config(FlowKind::Imcf, 0.1, 0.3, dir.path());
        c.startup = StartupMode::Exact;
        c.bdf_order = 3;
        let sim = Simulation::new(c).unwrap();
        assert_eq!(sim.step_index(), 2);
        let mesh = sim.initial_mesh();
        let (m, a) = FeSpace::new(mesh.topology().clone()).assemble_mass_stiffness(mesh.nodes()).unwrap();
        for state in sim.levels_oldest_first() {
            let exact = sphere_exact_state(mesh, sim.flow(), 3.0, state.time).unwrap();
            let s = sphere_radius(FlowKind::Imcf, 3.0, 2.0, state.time).unwrap() / 3.0;
            let rec = error_norms(state, &exact, sim.flow(), &m.scaled(s * s), &a, 0.0, 0.1).unwrap();
            for (name, e) in rec.h1_columns() {
                assert!(e < 1e-10, "{name}: {e}");
            }
        }
    }

    #[test]
    fn non_sphere_convergence_rejected() {
        let mut c = RunConfig::new(FlowKind::Imcf, Shape::Ellipsoid { a: 2.0, b: 1.0, c: 1.0 }, 0.1, 1.0);
        c.refinement = 0;
        assert!(matches!(convergence(&c, StudyMode::Space, 2), Err(Error::Config(_))));
        assert!(convergence(&c, StudyMode::Space, 0).is_err());
    }

    #[test]
    fn monotone_flags() {
        let flow = FlowLaw::with_default_clamp(FlowKind::Imcf).unwrap();
        let mut s = TimeSeries::new(SERIES_COLUMNS);
        s.push(0.0, vec![1.0, -0.5, 0.3, 0.0, 1.0, 1.0, 0.0]).unwrap();
        s.push(0.1, vec![1.0, -0.4, 0.4, 0.0, 1.0, 1.0, 0.0]).unwrap();
        let r = monotone_report(&s, &flow);
        assert!(r.hawking.monotone && r.hawking_applies);
        assert!(!r.schulze.monotone && !r.schulze_applies);
        assert!(r.passed());
        let shown = r.to_string();
        assert!(shown.contains("NOT monotone") && shown.contains("not expected"));
    }
}
