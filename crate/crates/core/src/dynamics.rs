//! Fixed-step RK4 evolution of pure states and density matrices, with
//! populations and target fidelity recorded along the way.

use std::collections::VecDeque;
use std::f64::consts::SQRT_2;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{
    min_hermitian_eigenvalue, CMatrix, CVector, DensityMatrix, EffectiveKet, HilbertSpace, Ket,
    StateVector, C64, I, SUBSPACE_STATES, ZERO,
};
use crate::model::{CollapseChannel, DrivenHamiltonian};

/// Pure-state runs fail once ‖ψ‖ drifts this far from 1.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Lindblad runs fail once tr ρ drifts this far from 1.
pub const TRACE_DRIFT_LIMIT: f64 = 1e-4;
/// Eigenvalues of ρ below this raise the positivity warning.
pub const POSITIVITY_WARNING: f64 = -1e-5;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntegratorConfig {
    /// Upper bound on the step; the actual step divides t_f evenly.
    pub dt: f64,
    /// Record one sample every this many steps (first and last always recorded).
    pub record_every: usize,
    /// Integrate the density matrix only on the block reachable from ρ(0).
    pub reduce_support: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { dt: 0.002, record_every: 50, reduce_support: true }
    }
}

impl IntegratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Parameter(format!("dt must be positive, got {}", self.dt)));
        }
        if self.record_every == 0 {
            return Err(Error::Parameter("record_every must be at least 1".into()));
        }
        Ok(())
    }

    pub fn halved(&self) -> Self {
        Self { dt: self.dt / 2.0, record_every: self.record_every * 2, ..*self }
    }

    fn steps_for(&self, t_f: f64) -> Result<(usize, f64)> {
        self.validate()?;
        if !(t_f > 0.0) {
            return Err(Error::Parameter(format!("evolution time must be positive, got {t_f}")));
        }
        let steps = (t_f / self.dt - 1e-9).ceil().max(1.0) as usize;
        Ok((steps, t_f / steps as f64))
    }
}

#[derive(Debug, Clone)]
pub enum QuantumState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

impl QuantumState {
    pub fn space(&self) -> &Arc<HilbertSpace> {
        match self {
            QuantumState::Pure(psi) => psi.space(),
            QuantumState::Mixed(rho) => rho.space(),
        }
    }
}

/// |⟨target|ψ⟩|² for pure states, ⟨target|ρ|target⟩ for mixed ones.
pub fn fidelity(state: &QuantumState, target: &StateVector) -> Result<f64> {
    if state.space().dim() != target.dim() {
        return Err(Error::Structural(format!(
            "state has dimension {}, target {}",
            state.space().dim(),
            target.dim()
        )));
    }
    match state {
        QuantumState::Pure(psi) => Ok(target.inner(psi)?.norm_sqr()),
        QuantumState::Mixed(rho) => rho.expectation(target),
    }
}

/// (|φ₁⟩ + |φ₇⟩ + |φ₈⟩)/√3 on a product space, or (|φ₁⟩ + √2|ψ₃⟩)/√3 on an
/// effective one.
pub fn target_state(space: &Arc<HilbertSpace>) -> Result<StateVector> {
    let r = C64::from(1.0 / 3f64.sqrt());
    let phi1 = Ket::Effective(EffectiveKet::Phi1);
    if space.index_of(&phi1).is_some() {
        return StateVector::superposition(
            space,
            &[(phi1, r), (Ket::Effective(EffectiveKet::Psi3), r * SQRT_2)],
        );
    }
    StateVector::superposition(
        space,
        &[
            (Ket::Product(SUBSPACE_STATES[0]), r),
            (Ket::Product(SUBSPACE_STATES[6]), r),
            (Ket::Product(SUBSPACE_STATES[7]), r),
        ],
    )
}

/// Initial ket: |φ₁⟩ in whichever representation the space uses.
pub fn initial_state(space: &Arc<HilbertSpace>) -> Result<StateVector> {
    let phi1 = Ket::Effective(EffectiveKet::Phi1);
    if space.index_of(&phi1).is_some() {
        StateVector::basis(space, &phi1)
    } else {
        StateVector::product(space, &SUBSPACE_STATES[0])
    }
}

/// Which kets get their own population column.
#[derive(Debug, Clone)]
struct Tracker {
    labels: Vec<String>,
    indices: Vec<usize>,
    with_leaked: bool,
}

impl Tracker {
    fn for_space(space: &Arc<HilbertSpace>) -> Self {
        let product: Vec<Option<usize>> = SUBSPACE_STATES.iter().map(|s| space.position(s)).collect();
        if product.iter().all(Option::is_some) {
            Self {
                labels: (1..=8).map(|k| format!("phi{k}")).chain(["leaked".to_string()]).collect(),
                indices: product.into_iter().flatten().collect(),
                with_leaked: true,
            }
        } else {
            Self {
                labels: space.kets().iter().map(|k| k.to_string()).collect(),
                indices: (0..space.dim()).collect(),
                with_leaked: false,
            }
        }
    }

    fn row(&self, diagonal: impl Fn(usize) -> f64, total: f64) -> Vec<f64> {
        let mut row: Vec<f64> = self.indices.iter().map(|&i| diagonal(i)).collect();
        if self.with_leaked {
            let tracked: f64 = row.iter().sum();
            row.push((total - tracked).max(0.0));
        }
        row
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub steps: usize,
    pub dt: f64,
    /// max |‖ψ‖ − 1| (pure) or max |tr ρ − 1| (mixed) over the recorded samples.
    pub max_drift: f64,
    /// Largest ‖ρ − ρ†‖ seen before the per-step symmetrization.
    pub max_hermiticity_error: f64,
    /// Smallest eigenvalue of ρ over the recorded samples.
    pub min_eigenvalue: Option<f64>,
    pub positivity_warning: bool,
    /// Dimension actually integrated.
    pub integrated_dim: usize,
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub times: Vec<f64>,
    pub labels: Vec<String>,
    /// One row per sample, columns as in `labels`.
    pub populations: Vec<Vec<f64>>,
    pub fidelity: Vec<f64>,
    pub final_state: QuantumState,
    pub diagnostics: Diagnostics,
}

impl SimResult {
    pub fn final_fidelity(&self) -> f64 {
        *self.fidelity.last().expect("at least one sample")
    }

    pub fn column(&self, label: &str) -> Option<Vec<f64>> {
        let i = self.labels.iter().position(|l| l == label)?;
        Some(self.populations.iter().map(|row| row[i]).collect())
    }
}

/// Solves i ∂ₜψ = H(t) ψ on [0, t_f] with classical RK4.
pub fn evolve_schrodinger(
    hamiltonian: &DrivenHamiltonian,
    psi0: &StateVector,
    target: &StateVector,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<SimResult> {
    let (steps, dt) = cfg.steps_for(t_f)?;
    let space = hamiltonian.space().clone();
    if psi0.dim() != space.dim() || target.dim() != space.dim() {
        return Err(Error::Structural("initial state, target and Hamiltonian dimensions differ".into()));
    }
    if (psi0.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::Parameter(format!("initial state has norm {}", psi0.norm())));
    }
    let n = space.dim();
    let tracker = Tracker::for_space(&space);
    let target_amps = target.amplitudes().clone();

    let mut psi = psi0.amplitudes().clone();
    let mut h_now = CMatrix::zeros(n, n);
    let mut h_mid = CMatrix::zeros(n, n);
    let mut h_next = CMatrix::zeros(n, n);
    hamiltonian.write_into(0.0, &mut h_now);

    let mut out = Recorder::new(tracker);
    let mut max_drift = 0.0f64;
    let mut record = |step: usize, psi: &CVector, out: &mut Recorder| -> Result<()> {
        let t = if step == steps { t_f } else { step as f64 * dt };
        let norm_sq = psi.norm_squared();
        let drift = (norm_sq.sqrt() - 1.0).abs();
        max_drift = max_drift.max(drift);
        if drift > NORM_DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::Instability { time: t, reason: format!("norm drifted by {drift:e}") });
        }
        out.push(t, |i| psi[i].norm_sqr(), norm_sq, target_amps.dotc(psi).norm_sqr());
        Ok(())
    };
    record(0, &psi, &mut out)?;

    let minus_i = -I;
    for step in 0..steps {
        let t = step as f64 * dt;
        hamiltonian.write_into(t + 0.5 * dt, &mut h_mid);
        hamiltonian.write_into(t + dt, &mut h_next);
        let k1 = (&h_now * &psi) * minus_i;
        let k2 = (&h_mid * (&psi + &k1 * C64::from(0.5 * dt))) * minus_i;
        let k3 = (&h_mid * (&psi + &k2 * C64::from(0.5 * dt))) * minus_i;
        let k4 = (&h_next * (&psi + &k3 * C64::from(dt))) * minus_i;
        psi += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
        std::mem::swap(&mut h_now, &mut h_next);
        if (step + 1) % cfg.record_every == 0 || step + 1 == steps {
            record(step + 1, &psi, &mut out)?;
        }
    }

    let final_state = QuantumState::Pure(StateVector::from_amplitudes(&space, psi)?);
    Ok(out.finish(
        final_state,
        Diagnostics { steps, dt, max_drift, integrated_dim: n, ..Diagnostics::default() },
    ))
}

struct Recorder {
    tracker: Tracker,
    times: Vec<f64>,
    populations: Vec<Vec<f64>>,
    fidelity: Vec<f64>,
}

impl Recorder {
    fn new(tracker: Tracker) -> Self {
        Self { tracker, times: Vec::new(), populations: Vec::new(), fidelity: Vec::new() }
    }

    fn push(&mut self, t: f64, diagonal: impl Fn(usize) -> f64, total: f64, fidelity: f64) {
        self.times.push(t);
        self.populations.push(self.tracker.row(diagonal, total));
        self.fidelity.push(fidelity);
    }

    fn finish(self, final_state: QuantumState, diagnostics: Diagnostics) -> SimResult {
        SimResult {
            times: self.times,
            labels: self.tracker.labels,
            populations: self.populations,
            fidelity: self.fidelity,
            final_state,
            diagnostics,
        }
    }
}

/// Indices reachable from the support of ρ(0) through H (either direction)
/// and through the active collapse operators.
fn reachable_support(
    hamiltonian: &DrivenHamiltonian,
    channels: &[CollapseChannel],
    rho0: &CMatrix,
) -> Vec<usize> {
    let n = rho0.nrows();
    let mut adjacency = vec![Vec::new(); n];
    let mut link = |m: &CMatrix, both: bool| {
        for j in 0..n {
            for i in 0..n {
                if m[(i, j)] != ZERO && i != j {
                    adjacency[j].push(i);
                    if both {
                        adjacency[i].push(j);
                    }
                }
            }
        }
    };
    link(hamiltonian.static_part().matrix(), true);
    for d in hamiltonian.drives() {
        link(d.operator.matrix(), true);
    }
    for c in channels.iter().filter(|c| c.rate > 0.0) {
        link(c.operator.matrix(), false);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::new();
    for i in 0..n {
        let occupied = (0..n).any(|j| rho0[(i, j)] != ZERO || rho0[(j, i)] != ZERO);
        if occupied {
            seen[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        for &j in &adjacency[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    (0..n).filter(|&i| seen[i]).collect()
}

fn restrict(m: &CMatrix, support: &[usize]) -> CMatrix {
    CMatrix::from_fn(support.len(), support.len(), |i, j| m[(support[i], support[j])])
}

/// Nonzero entries (row, col, value) of a restricted jump operator, scaled by √rate.
struct Jump {
    entries: Vec<(usize, usize, C64)>,
}

impl Jump {
    /// out += L ρ L†
    fn apply(&self, rho: &CMatrix, out: &mut CMatrix) {
        for &(i, k, a) in &self.entries {
            for &(j, l, b) in &self.entries {
                out[(i, j)] += a * rho[(k, l)] * b.conj();
            }
        }
    }
}

struct LindbladGenerator<'a> {
    hamiltonian: &'a DrivenHamiltonian,
    static_part: CMatrix,
    drives: Vec<CMatrix>,
    decay: CMatrix,
    jumps: Vec<Jump>,
}

impl<'a> LindbladGenerator<'a> {
    fn new(hamiltonian: &'a DrivenHamiltonian, channels: &[CollapseChannel], support: &[usize]) -> Self {
        let k = support.len();
        let mut decay = CMatrix::zeros(k, k);
        let mut jumps = Vec::new();
        for c in channels.iter().filter(|c| c.rate > 0.0) {
            let l = restrict(c.operator.matrix(), support) * C64::from(c.rate.sqrt());
            decay += l.adjoint() * &l;
            let mut entries = Vec::new();
            for j in 0..k {
                for i in 0..k {
                    if l[(i, j)] != ZERO {
                        entries.push((i, j, l[(i, j)]));
                    }
                }
            }
            jumps.push(Jump { entries });
        }
        Self {
            hamiltonian,
            static_part: restrict(hamiltonian.static_part().matrix(), support),
            drives: hamiltonian.drives().iter().map(|d| restrict(d.operator.matrix(), support)).collect(),
            decay,
            jumps,
        }
    }

    /// H(t) − (i/2) Σ rate L†L on the support.
    fn effective_hamiltonian(&self, t: f64, out: &mut CMatrix) {
        out.copy_from(&self.static_part);
        for (op, term) in self.drives.iter().zip(self.hamiltonian.drives()) {
            let c = (term.coefficient)(t);
            if c == ZERO {
                continue;
            }
            *out += op * c + op.adjoint() * c.conj();
        }
        *out -= &self.decay * C64::new(0.0, 0.5);
    }

    /// ρ̇ = −i H_eff ρ + h.c. + Σ L ρ L†
    fn derivative(&self, h_eff: &CMatrix, rho: &CMatrix) -> CMatrix {
        let x = (h_eff * rho) * (-I);
        let mut out = &x + x.adjoint();
        for jump in &self.jumps {
            jump.apply(rho, &mut out);
        }
        out
    }
}

/// Solves ρ̇ = −i[H, ρ] + Σ_c rate_c (L_c ρ L_c† − ½{L_c†L_c, ρ}) with RK4,
/// symmetrizing ρ after every step.
pub fn evolve_lindblad(
    hamiltonian: &DrivenHamiltonian,
    channels: &[CollapseChannel],
    rho0: &DensityMatrix,
    target: &StateVector,
    t_f: f64,
    cfg: &IntegratorConfig,
) -> Result<SimResult> {
    let (steps, dt) = cfg.steps_for(t_f)?;
    let space = hamiltonian.space().clone();
    let n = space.dim();
    if rho0.space().dim() != n || target.dim() != n {
        return Err(Error::Structural("initial state, target and Hamiltonian dimensions differ".into()));
    }
    if let Some(c) = channels.iter().find(|c| c.operator.dim() != n) {
        return Err(Error::Structural(format!("channel {} has the wrong dimension", c.label)));
    }
    if let Some(c) = channels.iter().find(|c| !(c.rate >= 0.0)) {
        return Err(Error::Parameter(format!("channel {} has negative rate {}", c.label, c.rate)));
    }
    if (rho0.trace() - 1.0).abs() > 1e-9 || rho0.hermiticity_error() > 1e-9 {
        return Err(Error::Parameter("initial density matrix must be Hermitian with unit trace".into()));
    }

    let support: Vec<usize> = if cfg.reduce_support {
        reachable_support(hamiltonian, channels, rho0.matrix())
    } else {
        (0..n).collect()
    };
    let k = support.len();
    let generator = LindbladGenerator::new(hamiltonian, channels, &support);
    let tracker = Tracker::for_space(&space);
    let mut position = vec![None; n];
    for (r, &i) in support.iter().enumerate() {
        position[i] = Some(r);
    }
    let target_local = CVector::from_iterator(k, support.iter().map(|&i| target.amplitudes()[i]));

    let mut rho = restrict(rho0.matrix(), &support);
    let mut h_now = CMatrix::zeros(k, k);
    let mut h_mid = CMatrix::zeros(k, k);
    let mut h_next = CMatrix::zeros(k, k);
    generator.effective_hamiltonian(0.0, &mut h_now);

    let mut out = Recorder::new(tracker);
    let mut diag = Diagnostics { steps, dt, integrated_dim: k, min_eigenvalue: Some(f64::INFINITY), ..Diagnostics::default() };
    let record = |step: usize, rho: &CMatrix, out: &mut Recorder, diag: &mut Diagnostics| -> Result<()> {
        let t = if step == steps { t_f } else { step as f64 * dt };
        let trace = rho.trace().re;
        let drift = (trace - 1.0).abs();
        diag.max_drift = diag.max_drift.max(drift);
        if drift > TRACE_DRIFT_LIMIT || !drift.is_finite() {
            return Err(Error::Instability { time: t, reason: format!("trace drifted by {drift:e}") });
        }
        let lowest = min_hermitian_eigenvalue(rho);
        diag.min_eigenvalue = diag.min_eigenvalue.map(|m| m.min(lowest));
        if lowest < POSITIVITY_WARNING {
            diag.positivity_warning = true;
        }
        let fid = target_local.dotc(&(rho * &target_local)).re;
        out.push(t, |i| position[i].map_or(0.0, |r| rho[(r, r)].re), trace, fid);
        Ok(())
    };
    record(0, &rho, &mut out, &mut diag)?;

    for step in 0..steps {
        let t = step as f64 * dt;
        generator.effective_hamiltonian(t + 0.5 * dt, &mut h_mid);
        generator.effective_hamiltonian(t + dt, &mut h_next);
        let k1 = generator.derivative(&h_now, &rho);
        let k2 = generator.derivative(&h_mid, &(&rho + &k1 * C64::from(0.5 * dt)));
        let k3 = generator.derivative(&h_mid, &(&rho + &k2 * C64::from(0.5 * dt)));
        let k4 = generator.derivative(&h_next, &(&rho + &k3 * C64::from(dt)));
        rho += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
        let adjoint = rho.adjoint();
        let herm = crate::hilbert::max_abs_diff(&rho, &adjoint);
        diag.max_hermiticity_error = diag.max_hermiticity_error.max(herm);
        rho = (&rho + adjoint) * C64::from(0.5);
        std::mem::swap(&mut h_now, &mut h_next);
        if (step + 1) % cfg.record_every == 0 || step + 1 == steps {
            record(step + 1, &rho, &mut out, &mut diag)?;
        }
    }

    let mut full = CMatrix::zeros(n, n);
    for (r, &i) in support.iter().enumerate() {
        for (c, &j) in support.iter().enumerate() {
            full[(i, j)] = rho[(r, c)];
        }
    }
    let final_state = QuantumState::Mixed(DensityMatrix::from_matrix(&space, full)?);
    Ok(out.finish(final_state, diag))
}
