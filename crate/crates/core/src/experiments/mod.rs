//! Scenario runners: single simulations, parameter sweeps, robustness and
//! decoherence scans, and the physical-parameter benchmark.

use rayon::prelude::*;

use crate::dynamics::{
    evolve_lindblad, evolve_schrodinger, initial_state, target_state, IntegratorConfig, SimResult,
};
use crate::error::{Error, Result};
use crate::hilbert::{build_full_space, build_subspace, DensityMatrix};
use crate::model::{cavity_hamiltonian, collapse_channels, ModelParams};
use crate::pulses::{FittedPulse, PulseKind, PulseSet, StirapParams};

mod output;

pub use output::{
    comparison_csv, grid_csv, gnuplot_script, pulse_tables, robustness_csv, sim_result_csv, PlotKind,
    Provenance, PulseTables,
};

/// Cavity leakage of the physical benchmark: 2π × 2.62 MHz against g = 2π × 750 MHz.
pub const PHYSICAL_KAPPA: f64 = 2.62 / 750.0;
/// Atomic decay of the physical benchmark: 2π × 3.5 MHz against g = 2π × 750 MHz.
pub const PHYSICAL_GAMMA: f64 = 3.5 / 750.0;
/// Largest number of points allowed along one sweep axis.
pub const DEFAULT_AXIS_CAP: usize = 200;
/// Largest relative deviation accepted by robustness scans.
pub const MAX_DEVIATION: f64 = 0.5;

/// STIRAP shape relative to the evolution time: Ω₀, τ/t_f, T/t_f.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseShape {
    pub omega0: f64,
    pub tau_fraction: f64,
    pub width_fraction: f64,
}

impl Default for PulseShape {
    fn default() -> Self {
        Self {
            omega0: StirapParams::DEFAULT_OMEGA0,
            tau_fraction: StirapParams::DEFAULT_TAU_FRACTION,
            width_fraction: StirapParams::DEFAULT_WIDTH_FRACTION,
        }
    }
}

impl PulseShape {
    pub fn for_duration(&self, t_f: f64) -> StirapParams {
        StirapParams { omega0: self.omega0, tau: self.tau_fraction * t_f, width: self.width_fraction * t_f, t_f }
    }
}

/// Everything a single run depends on.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: ModelParams,
    pub shape: PulseShape,
    pub fitted: FittedPulse,
    pub integrator: IntegratorConfig,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            params: ModelParams::default(),
            shape: PulseShape::default(),
            fitted: FittedPulse::reference(),
            integrator: IntegratorConfig::default(),
        }
    }
}

impl Scenario {
    pub fn stirap(&self) -> StirapParams {
        self.shape.for_duration(self.params.t_f)
    }

    /// Pulses of the requested kind, designed for the scenario's Δ and t_f.
    pub fn pulses(&self, kind: PulseKind) -> Result<PulseSet> {
        match kind {
            PulseKind::Stirap => PulseSet::stirap(self.stirap()),
            PulseKind::TqdExact => PulseSet::tqd_exact(self.stirap(), self.params.delta),
            PulseKind::TqdFitted => PulseSet::tqd_fitted(self.fitted.clone(), self.params.delta),
        }
    }

    pub fn with_rates(&self, kappa: f64, gamma: f64) -> Self {
        Self { params: ModelParams { kappa, gamma, ..self.params }, ..self.clone() }
    }

    /// Integrator settings that keep only the first and last samples.
    fn final_only(&self) -> IntegratorConfig {
        IntegratorConfig { record_every: usize::MAX, ..self.integrator }
    }

    pub fn provenance(&self, kind: PulseKind, open: bool) -> Provenance {
        let mut p = Provenance::default();
        let m = &self.params;
        p.push("pulse_kind", kind.name());
        p.push("dynamics", if open { "lindblad-80" } else { "schrodinger-8" });
        p.push("g", m.g);
        p.push("delta", m.delta);
        p.push("t_f", m.t_f);
        p.push("kappa", m.kappa);
        p.push("gamma", m.gamma);
        p.push("omega0", self.shape.omega0);
        p.push("tau_frac", self.shape.tau_fraction);
        p.push("T_frac", self.shape.width_fraction);
        for (k, term) in self.fitted.terms().iter().enumerate() {
            p.push(&format!("fit{}.amplitude", k + 1), term.amplitude);
            p.push(&format!("fit{}.center", k + 1), term.center);
            p.push(&format!("fit{}.width", k + 1), term.width);
        }
        p.push("dt", self.integrator.dt);
        p.push("record_every", self.integrator.record_every);
        p.push("integrator", "rk4-fixed");
        p
    }
}

/// Pure-state run on the eight-state subspace (`open = false`) or Lindblad
/// run on the full 80-state space (`open = true`).
pub fn simulate(scenario: &Scenario, kind: PulseKind, open: bool) -> Result<SimResult> {
    simulate_with(scenario, kind, open, &scenario.integrator)
}

fn simulate_with(scenario: &Scenario, kind: PulseKind, open: bool, cfg: &IntegratorConfig) -> Result<SimResult> {
    scenario.params.validate()?;
    let pulses = scenario.pulses(kind)?;
    simulate_pulses(&scenario.params, &pulses, open, cfg)
}

/// Same as [`simulate`] with an explicit pulse schedule.
pub fn simulate_pulses(
    params: &ModelParams,
    pulses: &PulseSet,
    open: bool,
    cfg: &IntegratorConfig,
) -> Result<SimResult> {
    params.validate()?;
    if open {
        let space = build_full_space();
        let h = cavity_hamiltonian(&space, params, pulses)?;
        let channels = collapse_channels(params, &space)?;
        let rho0 = DensityMatrix::from_pure(&initial_state(&space)?);
        evolve_lindblad(&h, &channels, &rho0, &target_state(&space)?, params.t_f, cfg)
    } else {
        let space = build_subspace();
        let h = cavity_hamiltonian(&space, params, pulses)?;
        evolve_schrodinger(&h, &initial_state(&space)?, &target_state(&space)?, params.t_f, cfg)
    }
}

/// Parameter that a sweep axis varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    TFinal,
    Delta,
    Kappa,
    Gamma,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::TFinal => "t_f",
            Axis::Delta => "delta",
            Axis::Kappa => "kappa",
            Axis::Gamma => "gamma",
        }
    }

    fn apply(self, scenario: &mut Scenario, value: f64) {
        let p = &mut scenario.params;
        match self {
            Axis::TFinal => p.t_f = value,
            Axis::Delta => p.delta = value,
            Axis::Kappa => p.kappa = value,
            Axis::Gamma => p.gamma = value,
        }
    }
}

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace(start: f64, end: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => (0..n)
            .map(|k| if k + 1 == n { end } else { start + (end - start) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

fn strictly_monotone(values: &[f64]) -> bool {
    let up = values.windows(2).all(|w| w[1] > w[0]);
    let down = values.windows(2).all(|w| w[1] < w[0]);
    up || down
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepSpec {
    pub x: Axis,
    pub x_values: Vec<f64>,
    pub y: Option<(Axis, Vec<f64>)>,
    pub axis_cap: usize,
}

impl SweepSpec {
    pub fn line(x: Axis, x_values: Vec<f64>) -> Self {
        Self { x, x_values, y: None, axis_cap: DEFAULT_AXIS_CAP }
    }

    pub fn grid(x: Axis, x_values: Vec<f64>, y: Axis, y_values: Vec<f64>) -> Self {
        Self { x, x_values, y: Some((y, y_values)), axis_cap: DEFAULT_AXIS_CAP }
    }

    pub fn y_values(&self) -> &[f64] {
        self.y.as_ref().map_or(&[], |(_, v)| v)
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.x_values.len(), self.y.as_ref().map_or(1, |(_, v)| v.len()))
    }

    pub fn validate(&self) -> Result<()> {
        let mut axes = vec![(self.x, &self.x_values)];
        if let Some((y, ys)) = &self.y {
            if *y == self.x {
                return Err(Error::Parameter(format!("both sweep axes vary {}", y.name())));
            }
            axes.push((*y, ys));
        }
        for (axis, values) in axes {
            if values.is_empty() {
                return Err(Error::Parameter(format!("sweep axis {} has no values", axis.name())));
            }
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parameter(format!("sweep axis {} has non-finite values", axis.name())));
            }
            if !strictly_monotone(values) {
                return Err(Error::Parameter(format!("sweep axis {} must be strictly monotone", axis.name())));
            }
            if values.len() > self.axis_cap {
                return Err(Error::ResourceLimit(format!(
                    "sweep axis {} has {} points, cap is {}",
                    axis.name(),
                    values.len(),
                    self.axis_cap
                )));
            }
        }
        Ok(())
    }
}

/// Final fidelities over a sweep, x-major. Failed cells keep their error text.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub spec: SweepSpec,
    pub cells: Vec<std::result::Result<f64, String>>,
}

impl SweepGrid {
    pub fn get(&self, i: usize, j: usize) -> &std::result::Result<f64, String> {
        let (_, ny) = self.spec.shape();
        &self.cells[i * ny + j]
    }

    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| c.is_err()).count()
    }
}

/// Final fidelity at every point of `spec`, with the pulses redesigned for
/// each point. Cells run in parallel and are placed by index.
pub fn run_sweep(base: &Scenario, spec: &SweepSpec, kind: PulseKind, open: bool) -> Result<SweepGrid> {
    spec.validate()?;
    let (nx, ny) = spec.shape();
    let cells = (0..nx * ny)
        .into_par_iter()
        .map(|index| {
            let mut scenario = base.clone();
            spec.x.apply(&mut scenario, spec.x_values[index / ny]);
            if let Some((axis, values)) = &spec.y {
                axis.apply(&mut scenario, values[index % ny]);
            }
            simulate_with(&scenario, kind, open, &scenario.final_only())
                .map(|r| r.final_fidelity())
                .map_err(|e| e.to_string())
        })
        .collect();
    Ok(SweepGrid { spec: spec.clone(), cells })
}

/// Closed-system fidelity over t_f × Δ with exact TQD pulses.
pub fn run_fidelity_surface(base: &Scenario, spec: &SweepSpec) -> Result<SweepGrid> {
    run_sweep(base, spec, PulseKind::TqdExact, false)
}

/// Lindblad fidelity over κ × γ with the fitted pulses.
pub fn run_decoherence_surface(base: &Scenario, spec: &SweepSpec) -> Result<SweepGrid> {
    run_sweep(base, spec, PulseKind::TqdFitted, true)
}

pub fn default_fidelity_surface() -> SweepSpec {
    SweepSpec::grid(Axis::TFinal, linspace(10.0, 100.0, 46), Axis::Delta, linspace(0.5, 10.0, 39))
}

pub fn default_decoherence_surface() -> SweepSpec {
    SweepSpec::grid(Axis::Kappa, linspace(0.0, 0.05, 26), Axis::Gamma, linspace(0.0, 0.05, 26))
}

/// Populations of the eight subspace states under the fitted pulses.
pub fn run_population_trace(scenario: &Scenario) -> Result<SimResult> {
    simulate(scenario, PulseKind::TqdFitted, false)
}

#[derive(Clone, Debug)]
pub struct MethodComparison {
    pub t_f: f64,
    pub stirap: SimResult,
    pub tqd_exact: SimResult,
    pub tqd_fitted: SimResult,
}

impl MethodComparison {
    pub fn finals(&self) -> [f64; 3] {
        [self.stirap.final_fidelity(), self.tqd_exact.final_fidelity(), self.tqd_fitted.final_fidelity()]
    }
}

/// Fidelity traces of STIRAP (resonant model) and both TQD variants
/// (detuned model) over the same t_f and sampling.
pub fn run_method_comparison(scenario: &Scenario) -> Result<MethodComparison> {
    let runs: Vec<Result<SimResult>> = [PulseKind::Stirap, PulseKind::TqdExact, PulseKind::TqdFitted]
        .into_par_iter()
        .map(|kind| simulate(scenario, kind, false))
        .collect();
    let mut runs = runs.into_iter();
    let mut next = || runs.next().expect("three runs");
    Ok(MethodComparison { t_f: scenario.params.t_f, stirap: next()?, tqd_exact: next()?, tqd_fitted: next()? })
}

/// Quantity perturbed in a robustness scan.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Deviation {
    /// Interaction time; the fitted waveform itself is unchanged.
    TFinal,
    /// Cavity coupling in the Hamiltonian.
    G,
    /// Detuning of the excited levels; the pulses keep their design Δ.
    Delta,
    /// Joint scaling of both fitted Gaussian amplitudes.
    Omega0,
}

impl Deviation {
    pub const ALL: [Deviation; 4] = [Deviation::TFinal, Deviation::G, Deviation::Delta, Deviation::Omega0];

    pub fn name(self) -> &'static str {
        match self {
            Deviation::TFinal => "t_f",
            Deviation::G => "g",
            Deviation::Delta => "delta",
            Deviation::Omega0 => "omega0",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DeviationSpec {
    pub parameters: Vec<Deviation>,
    /// Relative deviations δx/x.
    pub deviations: Vec<f64>,
}

impl Default for DeviationSpec {
    fn default() -> Self {
        Self { parameters: Deviation::ALL.to_vec(), deviations: linspace(-0.1, 0.1, 21) }
    }
}

impl DeviationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.parameters.is_empty() || self.deviations.is_empty() {
            return Err(Error::Parameter("robustness scan needs parameters and deviations".into()));
        }
        if let Some(d) = self.deviations.iter().find(|d| !(d.abs() <= MAX_DEVIATION)) {
            return Err(Error::Parameter(format!("relative deviation {d} outside ±{MAX_DEVIATION}")));
        }
        if !strictly_monotone(&self.deviations) {
            return Err(Error::Parameter("deviations must be strictly monotone".into()));
        }
        if self.deviations.len() > DEFAULT_AXIS_CAP {
            return Err(Error::ResourceLimit(format!(
                "{} deviations requested, cap is {DEFAULT_AXIS_CAP}",
                self.deviations.len()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RobustnessCurves {
    pub deviations: Vec<f64>,
    pub baseline: f64,
    pub curves: Vec<(Deviation, Vec<std::result::Result<f64, String>>)>,
}

fn deviated_fidelity(base: &Scenario, which: Deviation, rel: f64) -> Result<f64> {
    let mut params = base.params;
    let mut pulses = base.pulses(PulseKind::TqdFitted)?;
    match which {
        Deviation::TFinal => params.t_f *= 1.0 + rel,
        Deviation::G => params.g *= 1.0 + rel,
        Deviation::Delta => params.delta *= 1.0 + rel,
        Deviation::Omega0 => pulses = pulses.with_amplitude_scale(1.0 + rel),
    }
    simulate_pulses(&params, &pulses, false, &base.final_only()).map(|r| r.final_fidelity())
}

/// Closed-system fidelity of the fitted pulses when one parameter deviates
/// from its design value.
pub fn run_robustness_scan(base: &Scenario, spec: &DeviationSpec) -> Result<RobustnessCurves> {
    spec.validate()?;
    let baseline = simulate_with(base, PulseKind::TqdFitted, false, &base.final_only())?.final_fidelity();
    let n = spec.deviations.len();
    let flat: Vec<std::result::Result<f64, String>> = (0..spec.parameters.len() * n)
        .into_par_iter()
        .map(|k| {
            deviated_fidelity(base, spec.parameters[k / n], spec.deviations[k % n]).map_err(|e| e.to_string())
        })
        .collect();
    let curves = spec.parameters.iter().zip(flat.chunks(n)).map(|(p, c)| (*p, c.to_vec())).collect();
    Ok(RobustnessCurves { deviations: spec.deviations.clone(), baseline, curves })
}

#[derive(Clone, Debug)]
pub struct Benchmark {
    pub fidelity: f64,
    /// Same pulses and model with κ = γ = 0.
    pub closed_fidelity: f64,
    pub result: SimResult,
}

/// Scenario with the physical decay rates.
pub fn physical_scenario(base: &Scenario) -> Scenario {
    base.with_rates(PHYSICAL_KAPPA, PHYSICAL_GAMMA)
}

/// Lindblad run with the physical rates and the scenario's fitted pulses.
pub fn run_physical_benchmark(base: &Scenario) -> Result<Benchmark> {
    let open = physical_scenario(base);
    let closed = base.with_rates(0.0, 0.0);
    let result = simulate(&open, PulseKind::TqdFitted, true)?;
    let closed_fidelity = simulate(&closed, PulseKind::TqdFitted, true)?.final_fidelity();
    Ok(Benchmark { fidelity: result.final_fidelity(), closed_fidelity, result })
}
