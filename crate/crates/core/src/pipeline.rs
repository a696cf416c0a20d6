//! End-to-end run: profile, initial data, evolution with geometry tracking,
//! summary.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{blowup_predicate, BlowupPredicate};
use crate::error::{Error, Result};
use crate::field::{FieldState, RadialGrid};
use crate::geometry::{GeometryConfig, GeometryStats, GeometryTracker};
use crate::profiles::{
    build_initial_data, bump_profile, check_outgoing_constraint, ConstraintResiduals, DataParams, PulseProfile,
    MIN_CELLS_PER_DELTA,
};
use crate::solver::{RunOutcome, Solver, SolverConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Default for BumpSpec {
    fn default() -> Self {
        BumpSpec {
            center: -0.5,
            width: 0.4,
            amplitude: 1.0,
        }
    }
}

/// Grid size: either explicit or by cells across `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    Cells(usize),
    PerDelta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RunSpec {
    pub params: DataParams,
    pub bump: BumpSpec,
    pub resolution: Resolution,
    /// Defaults to the radius the pulse envelope reaches by `t_max`.
    pub r_max: Option<f64>,
    pub solver: SolverConfig,
    pub geometry: Option<GeometryConfig>,
}

impl RunSpec {
    pub fn new(params: DataParams, bump: BumpSpec, t_max: f64) -> Self {
        RunSpec {
            params,
            bump,
            resolution: Resolution::PerDelta(64.0),
            r_max: None,
            solver: SolverConfig::new(params.p, t_max),
            geometry: Some(GeometryConfig::default()),
        }
    }

    pub fn grid(&self) -> Result<RadialGrid> {
        let r_max = self
            .r_max
            .unwrap_or_else(|| self.solver.required_r_max() + 8.0 * self.params.delta);
        match self.resolution {
            Resolution::Cells(n) => RadialGrid::new(r_max, n),
            Resolution::PerDelta(k) => RadialGrid::resolving(r_max, self.params.delta, k),
        }
    }

    pub fn profile(&self) -> Result<PulseProfile> {
        let b = bump_profile(self.bump.center, self.bump.width, self.bump.amplitude)?;
        Ok(PulseProfile::constrained(b, self.params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub spec: RunSpec,
    pub n: usize,
    pub h: f64,
    pub constraint: ConstraintResiduals,
    pub predicate: BlowupPredicate,
    pub outcome: RunOutcome,
    pub geometry: Option<GeometryStats>,
}

/// Everything a finished run leaves behind.
pub struct RunArtifacts {
    pub summary: RunSummary,
    pub tracker: Option<GeometryTracker>,
    pub initial: FieldState,
}

pub fn initial_state(spec: &RunSpec) -> Result<(PulseProfile, FieldState)> {
    let profile = spec.profile()?;
    let grid = spec.grid()?;
    if grid.r_max < spec.solver.required_r_max() {
        return Err(Error::InvalidGrid(format!(
            "r_max = {} does not contain the envelope radius {}",
            grid.r_max,
            spec.solver.required_r_max()
        )));
    }
    let state = build_initial_data(&profile, &spec.params, &grid)?;
    Ok((profile, state))
}

pub fn execute(spec: &RunSpec) -> Result<RunArtifacts> {
    execute_with(spec, None::<fn(&FieldState)>)
}

/// Runs `spec`, handing every snapshot the solver emits to `on_snapshot`.
pub fn execute_with(spec: &RunSpec, on_snapshot: Option<impl FnMut(&FieldState)>) -> Result<RunArtifacts> {
    let (_, initial) = initial_state(spec)?;
    execute_from(spec, initial, on_snapshot)
}

/// Runs `spec` from externally supplied data at `t = 1`.
pub fn execute_from(
    spec: &RunSpec,
    initial: FieldState,
    on_snapshot: Option<impl FnMut(&FieldState)>,
) -> Result<RunArtifacts> {
    let profile = spec.profile()?;
    let grid = initial.grid;
    if (initial.t - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidParams(format!("data must sit at t = 1, got t = {}", initial.t)));
    }
    if grid.r_max < spec.solver.required_r_max() {
        return Err(Error::InvalidGrid(format!(
            "r_max = {} does not contain the envelope radius {}",
            grid.r_max,
            spec.solver.required_r_max()
        )));
    }
    let cells = grid.cells_across(spec.params.delta);
    if cells < MIN_CELLS_PER_DELTA as f64 {
        return Err(Error::ResolutionError {
            cells,
            required: MIN_CELLS_PER_DELTA,
        });
    }
    let constraint = check_outgoing_constraint(&initial, &spec.params);
    let predicate = blowup_predicate(&profile, &spec.params, 2000)?;
    let mut tracker = match spec.geometry {
        Some(g) => Some(GeometryTracker::new(&spec.params, spec.solver.order, g)?),
        None => None,
    };
    let mut solver = Solver::new(spec.solver)?;
    if let Some(t) = tracker.as_mut() {
        solver = solver.with_monitor(t);
    }
    if let Some(f) = on_snapshot {
        solver = solver.on_snapshot(f);
    }
    let outcome = solver.run(initial.clone());
    if let Some(t) = tracker.as_mut() {
        t.finish();
    }
    let summary = RunSummary {
        spec: *spec,
        n: initial.grid.n,
        h: initial.grid.h,
        constraint,
        predicate,
        geometry: tracker.as_ref().filter(|t| t.is_seeded()).map(|t| *t.stats()),
        outcome,
    };
    Ok(RunArtifacts {
        summary,
        tracker,
        initial,
    })
}
