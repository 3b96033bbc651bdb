//! Hamiltonians of the two-atom cavity system and its reduced models, the
//! dressed bases used to reduce it, and the dissipation channels.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::hilbert::{
    build_lambda_space, build_two_level_space, BasisState, CMatrix, EffectiveKet, HilbertSpace,
    Ket, Level, Mode, Operator, StateVector, Atom, AtomLevelA, AtomLevelB, C64, I, ONE,
    SUBSPACE_STATES, annihilation_operator, transition_operator,
};
use crate::pulses::{
    effective_rabi, mixing_angle, mixing_angle_rate, stirap_amplitudes, PulseKind, PulseSet,
    StirapParams,
};

/// Physical parameters, in units of the cavity coupling g.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub g: f64,
    /// Detuning Δ of every excited level in the detuned system.
    pub delta: f64,
    /// Photon leakage rate κ of each mode.
    pub kappa: f64,
    /// Spontaneous-emission scale γ; every decay branch has rate γ/2.
    pub gamma: f64,
    pub t_f: f64,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self { g: 1.0, delta: 3.6, kappa: 0.0, gamma: 0.0, t_f: 50.0 }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.g > 0.0) {
            return Err(Error::Parameter(format!("g must be positive, got {}", self.g)));
        }
        if !(self.kappa >= 0.0) || !(self.gamma >= 0.0) {
            return Err(Error::Parameter(format!(
                "decay rates must be nonnegative, got kappa = {}, gamma = {}",
                self.kappa, self.gamma
            )));
        }
        if !(self.t_f > 0.0) {
            return Err(Error::Parameter(format!("t_f must be positive, got {}", self.t_f)));
        }
        if !self.delta.is_finite() {
            return Err(Error::Parameter("delta must be finite".into()));
        }
        Ok(())
    }
}

pub type Coefficient = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

#[derive(Clone)]
pub struct DriveTerm {
    pub operator: Operator,
    pub coefficient: Coefficient,
}

/// H(t) = H_static + Σ_k [c_k(t) O_k + c_k(t)* O_k†].
#[derive(Clone)]
pub struct DrivenHamiltonian {
    static_part: Operator,
    drives: Vec<DriveTerm>,
}

impl fmt::Debug for DrivenHamiltonian {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DrivenHamiltonian")
            .field("dim", &self.dim())
            .field("drives", &self.drives.len())
            .finish()
    }
}

impl DrivenHamiltonian {
    pub fn new(static_part: Operator) -> Self {
        Self { static_part, drives: Vec::new() }
    }

    pub fn with_drive<F>(mut self, operator: Operator, coefficient: F) -> Result<Self>
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        if !crate::hilbert::same_space(operator.space(), self.static_part.space()) {
            return Err(Error::Structural("drive operator lives in a different space".into()));
        }
        self.drives.push(DriveTerm { operator, coefficient: Arc::new(coefficient) });
        Ok(self)
    }

    pub fn space(&self) -> &Arc<HilbertSpace> {
        self.static_part.space()
    }

    pub fn dim(&self) -> usize {
        self.static_part.dim()
    }

    pub fn static_part(&self) -> &Operator {
        &self.static_part
    }

    pub fn drives(&self) -> &[DriveTerm] {
        &self.drives
    }

    pub fn at(&self, t: f64) -> Operator {
        let mut m = self.static_part.matrix().clone();
        self.write_into(t, &mut m);
        Operator::from_matrix(self.space(), m).expect("dimension preserved")
    }

    /// Writes H(t) into `out`, which must already be dim × dim.
    pub fn write_into(&self, t: f64, out: &mut CMatrix) {
        out.copy_from(self.static_part.matrix());
        for d in &self.drives {
            let c = (d.coefficient)(t);
            if c == C64::new(0.0, 0.0) {
                continue;
            }
            let op = d.operator.matrix();
            let n = op.nrows();
            for j in 0..n {
                for i in 0..n {
                    let o = op[(i, j)];
                    if o.re != 0.0 || o.im != 0.0 {
                        out[(i, j)] += c * o;
                        out[(j, i)] += c.conj() * o.conj();
                    }
                }
            }
        }
    }
}

fn product_map(
    space: &Arc<HilbertSpace>,
    map: impl Fn(&BasisState) -> Option<BasisState>,
) -> Operator {
    Operator::from_basis_map(space, |s| map(s).map(|image| (ONE, image)))
}

/// Σ_i (a_i |e₀⟩⟨g_i|_A + a_i |e_i⟩⟨g₀|_B) for i ∈ {L, R}; add the adjoint for the coupling.
pub fn cavity_absorption(space: &Arc<HilbertSpace>) -> Operator {
    use AtomLevelA as A;
    use AtomLevelB as B;
    product_map(space, |s| match (s.a, s.n_l, s.n_r) {
        (A::GL, 1, _) => Some(BasisState { a: A::E0, n_l: 0, ..*s }),
        (A::GR, _, 1) => Some(BasisState { a: A::E0, n_r: 0, ..*s }),
        _ => None,
    })
    .plus(&product_map(space, |s| match (s.b, s.n_l, s.n_r) {
        (B::G0, 1, _) => Some(BasisState { b: B::EL, n_l: 0, ..*s }),
        (B::G0, _, 1) => Some(BasisState { b: B::ER, n_r: 0, ..*s }),
        _ => None,
    }))
    .expect("same space")
}

/// |g₀⟩⟨e₀| on atom A; multiplied by Ω_A(t).
pub fn drive_operator_a(space: &Arc<HilbertSpace>) -> Operator {
    transition_operator(space, Atom::A, Level::E0, Level::G0).expect("valid levels")
}

/// Σ_i |g_i⟩⟨e_i| on atom B; multiplied by Ω_B(t).
pub fn drive_operator_b(space: &Arc<HilbertSpace>) -> Operator {
    transition_operator(space, Atom::B, Level::EL, Level::GL)
        .and_then(|l| l.plus(&transition_operator(space, Atom::B, Level::ER, Level::GR)?))
        .expect("valid levels")
}

/// Projector onto e₀ of A plus e_L, e_R of B.
pub fn excited_projector(space: &Arc<HilbertSpace>) -> Operator {
    Operator::from_basis_map(space, |s| {
        let n = s.a.is_excited() as u8 + s.b.is_excited() as u8;
        (n > 0).then_some((C64::from(n as f64), *s))
    })
}

fn cavity_model(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
    detuning: f64,
) -> Result<DrivenHamiltonian> {
    params.validate()?;
    let coupling = cavity_absorption(space);
    let static_part = coupling
        .plus(&coupling.dagger())?
        .scaled(C64::from(params.g))
        .plus(&excited_projector(space).scaled(C64::from(detuning)))?;
    let (pa, pb) = (pulses.clone(), pulses.clone());
    DrivenHamiltonian::new(static_part)
        .with_drive(drive_operator_a(space), move |t| pa.omega_a(t))?
        .with_drive(drive_operator_b(space), move |t| pb.omega_b(t))
}

/// Resonant atom-cavity Hamiltonian driven by STIRAP pulses, on the full or
/// the eight-state space.
pub fn resonant_hamiltonian(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
) -> Result<DrivenHamiltonian> {
    if pulses.kind() != PulseKind::Stirap {
        return Err(Error::Parameter("the resonant model is driven by STIRAP pulses".into()));
    }
    cavity_model(space, params, pulses, 0.0)
}

/// Detuned alternative system: primed pulses and Δ = `params.delta` on every
/// excited level. The pulses keep their own design detuning, so the two may
/// differ in robustness scans.
pub fn detuned_hamiltonian(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
) -> Result<DrivenHamiltonian> {
    if pulses.kind() == PulseKind::Stirap {
        return Err(Error::Parameter("the detuned model is driven by TQD pulses".into()));
    }
    cavity_model(space, params, pulses, params.delta)
}

/// Resonant model for STIRAP pulses, detuned model otherwise.
pub fn cavity_hamiltonian(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
) -> Result<DrivenHamiltonian> {
    match pulses.kind() {
        PulseKind::Stirap => resonant_hamiltonian(space, params, pulses),
        _ => detuned_hamiltonian(space, params, pulses),
    }
}

pub fn h_resonant(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
    t: f64,
) -> Result<Operator> {
    Ok(resonant_hamiltonian(space, params, pulses)?.at(t))
}

pub fn h_detuned(
    space: &Arc<HilbertSpace>,
    params: &ModelParams,
    pulses: &PulseSet,
    t: f64,
) -> Result<Operator> {
    Ok(detuned_hamiltonian(space, params, pulses)?.at(t))
}

/// Symmetric and antisymmetric L/R combinations on the eight-state space.
#[derive(Debug, Clone)]
pub struct SymmetricBasis {
    /// ψ₁, ψ₂, ψ₃
    pub even: [StateVector; 3],
    /// ψ₁⁻, ψ₂⁻, ψ₃⁻
    pub odd: [StateVector; 3],
}

/// Eigenbasis of the cavity coupling inside the even sector.
#[derive(Debug, Clone)]
pub struct DressedBasis {
    pub dark: StateVector,
    pub plus: StateVector,
    pub minus: StateVector,
}

fn phi(space: &Arc<HilbertSpace>, k: usize) -> StateVector {
    StateVector::product(space, &SUBSPACE_STATES[k - 1]).expect("subspace ket present")
}

pub fn symmetric_vectors(space: &Arc<HilbertSpace>) -> SymmetricBasis {
    let h = C64::from(1.0 / SQRT_2);
    let pair = |i: usize, j: usize, sign: f64| {
        phi(space, i).plus(&phi(space, j).scaled(C64::from(sign))).unwrap().scaled(h)
    };
    SymmetricBasis {
        even: [pair(3, 4, 1.0), pair(5, 6, 1.0), pair(7, 8, 1.0)],
        odd: [pair(3, 4, -1.0), pair(5, 6, -1.0), pair(7, 8, -1.0)],
    }
}

pub fn bright_dark_vectors(space: &Arc<HilbertSpace>) -> DressedBasis {
    let sym = symmetric_vectors(space);
    let phi2 = phi(space, 2);
    let [psi1, psi2, _] = &sym.even;
    let c = |x: f64| C64::from(x);
    let dark = phi2.plus(&psi2.scaled(c(-SQRT_2))).unwrap().scaled(c(1.0 / 3f64.sqrt()));
    let bright = |sign: f64| {
        phi2.scaled(c(SQRT_2))
            .plus(&psi1.scaled(c(sign * 3f64.sqrt())))
            .and_then(|v| v.plus(psi2))
            .unwrap()
            .scaled(c(1.0 / 6f64.sqrt()))
    };
    DressedBasis { dark, plus: bright(1.0), minus: bright(-1.0) }
}

/// Ordered basis (φ₁, φ₂, ψ₁, ψ₂, ψ₃ | ψ₁⁻, ψ₂⁻, ψ₃⁻) separating the two L/R sectors.
pub fn sector_basis(space: &Arc<HilbertSpace>) -> Vec<StateVector> {
    let sym = symmetric_vectors(space);
    let mut out = vec![phi(space, 1), phi(space, 2)];
    out.extend(sym.even.iter().cloned());
    out.extend(sym.odd.iter().cloned());
    out
}

fn effective_ket(space: &Arc<HilbertSpace>, ket: EffectiveKet) -> StateVector {
    StateVector::basis(space, &Ket::Effective(ket)).expect("effective ket present")
}

fn lambda_model(pulses: &PulseSet, detuning: f64) -> Result<DrivenHamiltonian> {
    use EffectiveKet::*;
    let space = build_lambda_space();
    let (p1, d, p3) = (effective_ket(&space, Phi1), effective_ket(&space, Dark), effective_ket(&space, Psi3));
    let static_part = Operator::outer(&d, &d)?.scaled(C64::from(detuning));
    let couple_a = Operator::outer(&p1, &d)?.scaled(C64::from(1.0 / 3f64.sqrt()));
    let couple_b = Operator::outer(&d, &p3)?.scaled(C64::from(-SQRT_2 / 3f64.sqrt()));
    let (pa, pb) = (pulses.clone(), pulses.clone());
    DrivenHamiltonian::new(static_part)
        .with_drive(couple_a, move |t| pa.omega_a(t))?
        .with_drive(couple_b, move |t| pb.omega_b(t))
}

/// Resonant three-level Λ model on (|φ₁⟩, |Ψ_d⟩, |ψ₃⟩).
pub fn lambda_hamiltonian(pulses: &PulseSet) -> Result<DrivenHamiltonian> {
    if pulses.kind() != PulseKind::Stirap {
        return Err(Error::Parameter("the resonant Λ model is driven by STIRAP pulses".into()));
    }
    lambda_model(pulses, 0.0)
}

/// Λ model of the detuned system: primed couplings plus Δ|Ψ_d⟩⟨Ψ_d|.
pub fn detuned_lambda_hamiltonian(pulses: &PulseSet, delta: f64) -> Result<DrivenHamiltonian> {
    if pulses.kind() == PulseKind::Stirap {
        return Err(Error::Parameter("the detuned Λ model is driven by TQD pulses".into()));
    }
    lambda_model(pulses, delta)
}

pub fn h_effective_lambda(pulses: &PulseSet, t: f64) -> Result<Operator> {
    Ok(lambda_hamiltonian(pulses)?.at(t))
}

pub fn h_effective_detuned(pulses: &PulseSet, delta: f64, t: f64) -> Result<Operator> {
    Ok(detuned_lambda_hamiltonian(pulses, delta)?.at(t))
}

const PHASE_LOCK_TOLERANCE: f64 = 1e-12;

fn check_phase_lock(pulses: &PulseSet, t: f64) -> Result<()> {
    let (a, b) = pulses.amplitudes(t);
    let mismatch = (b - I * a / SQRT_2).norm();
    if mismatch > PHASE_LOCK_TOLERANCE * (1.0 + a.norm()) {
        return Err(Error::Parameter(format!(
            "Omega'_B != i Omega'_A / sqrt2 at t = {t} (mismatch {mismatch})"
        )));
    }
    Ok(())
}

/// Two-level model left after eliminating |Ψ_d⟩: coupling −i|Ω′_A|²/(3Δ)
/// on |φ₁⟩⟨ψ₃|. The equal Stark shifts are a global phase and are dropped.
pub fn two_level_hamiltonian(pulses: &PulseSet, delta: f64) -> Result<DrivenHamiltonian> {
    if pulses.kind() == PulseKind::Stirap {
        return Err(Error::Parameter("the two-level model needs phase-locked TQD pulses".into()));
    }
    if delta == 0.0 {
        return Err(Error::Parameter("adiabatic elimination needs a nonzero detuning".into()));
    }
    let t_check = match pulses {
        PulseSet::TqdExact { stirap, .. } => stirap.t_f / 2.0,
        _ => 0.0,
    };
    check_phase_lock(pulses, t_check)?;
    let space = build_two_level_space();
    let p1 = effective_ket(&space, EffectiveKet::Phi1);
    let p3 = effective_ket(&space, EffectiveKet::Psi3);
    let pulses = pulses.clone();
    DrivenHamiltonian::new(Operator::zeros(&space)).with_drive(Operator::outer(&p1, &p3)?, move |t| {
        -I * pulses.omega_a(t).norm_sqr() / (3.0 * delta)
    })
}

pub fn h_two_level(pulses: &PulseSet, delta: f64, t: f64) -> Result<Operator> {
    check_phase_lock(pulses, t)?;
    Ok(two_level_hamiltonian(pulses, delta)?.at(t))
}

/// Berry's counterdiabatic term iθ̇|φ₁⟩⟨ψ₃| + h.c. on the Λ space.
pub fn counterdiabatic_hamiltonian(p: &StirapParams) -> Result<DrivenHamiltonian> {
    p.validate()?;
    let space = build_lambda_space();
    let p1 = effective_ket(&space, EffectiveKet::Phi1);
    let p3 = effective_ket(&space, EffectiveKet::Psi3);
    let p = *p;
    DrivenHamiltonian::new(Operator::zeros(&space))
        .with_drive(Operator::outer(&p1, &p3)?, move |t| I * mixing_angle_rate(&p, t))
}

pub fn h_counterdiabatic(p: &StirapParams, t: f64) -> Result<Operator> {
    Ok(counterdiabatic_hamiltonian(p)?.at(t))
}

/// Instantaneous eigenpairs of the resonant Λ model, ordered (λ₋, λ₀, λ₊).
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: [f64; 3],
    pub vectors: [StateVector; 3],
}

/// Closed-form eigensystem from the mixing angle: λ₀ = 0 with
/// |n₀⟩ = (−cos θ, 0, sin θ), λ± = ±Ω/√3 with |n±⟩ = (sin θ, ∓1, cos θ)/√2.
pub fn instantaneous_eigensystem(p: &StirapParams, t: f64) -> Eigensystem {
    let space = build_lambda_space();
    let theta = mixing_angle(p, t);
    let (a, b) = stirap_amplitudes(p, t);
    let lambda = effective_rabi(a, b) / 3f64.sqrt();
    let (s, c) = theta.sin_cos();
    let vec = |x: [f64; 3]| {
        StateVector::from_amplitudes(&space, crate::hilbert::CVector::from_iterator(3, x.map(C64::from)))
            .expect("three amplitudes")
    };
    let r = 1.0 / SQRT_2;
    Eigensystem {
        values: [-lambda, 0.0, lambda],
        vectors: [vec([r * s, r, r * c]), vec([-c, 0.0, s]), vec([r * s, -r, r * c])],
    }
}

/// Default relative step for the numerical Berry derivative.
pub const BERRY_STEP_FRACTION: f64 = 1e-5;

fn gauge_fixed_eigenvectors(h: &CMatrix) -> Vec<crate::hilbert::CVector> {
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    order
        .into_iter()
        .map(|k| {
            let v = eig.eigenvectors.column(k).into_owned();
            let pivot = v.iter().copied().max_by(|x, y| x.norm().total_cmp(&y.norm())).unwrap();
            v * (pivot.conj() / pivot.norm())
        })
        .collect()
}

/// i Σ_k |∂ₜn_k⟩⟨n_k| for the eigenvectors of an arbitrary Hamiltonian
/// family, by central differences with a positive-overlap gauge.
pub fn berry_counterdiabatic_from<F>(
    space: &Arc<HilbertSpace>,
    hamiltonian: F,
    t: f64,
    h_step: f64,
) -> Result<Operator>
where
    F: Fn(f64) -> CMatrix,
{
    if !(h_step > 0.0) {
        return Err(Error::Parameter(format!("derivative step must be positive, got {h_step}")));
    }
    let centre = gauge_fixed_eigenvectors(&hamiltonian(t));
    let align = |shifted: Vec<crate::hilbert::CVector>| -> Result<Vec<crate::hilbert::CVector>> {
        centre
            .iter()
            .zip(shifted)
            .map(|(n, m)| {
                let overlap = n.dotc(&m);
                if overlap.norm() < 0.9 {
                    return Err(Error::StepSize { time: t, overlap: overlap.norm() });
                }
                Ok(m * (overlap.conj() / overlap.norm()))
            })
            .collect()
    };
    let forward = align(gauge_fixed_eigenvectors(&hamiltonian(t + h_step)))?;
    let backward = align(gauge_fixed_eigenvectors(&hamiltonian(t - h_step)))?;
    let n = space.dim();
    let mut out = CMatrix::zeros(n, n);
    for ((n_k, f), b) in centre.iter().zip(&forward).zip(&backward) {
        let derivative = (f - b) / C64::from(2.0 * h_step);
        out += derivative * n_k.adjoint();
    }
    Operator::from_matrix(space, out * I)
}

/// Numerical Berry term of the resonant Λ model; the independent check on
/// [`h_counterdiabatic`].
pub fn berry_counterdiabatic_numeric(pulses: &PulseSet, t: f64, h_step: f64) -> Result<Operator> {
    let model = lambda_hamiltonian(pulses)?;
    berry_counterdiabatic_from(model.space(), |s| model.at(s).into_matrix(), t, h_step)
}

#[derive(Debug, Clone)]
pub struct CollapseChannel {
    pub label: String,
    pub operator: Operator,
    pub rate: f64,
}

/// Photon leakage from each mode (rate κ) and every spontaneous-emission
/// branch of both atoms (rate γ/2 each): 2 + 3 + 6 channels.
pub fn collapse_channels(params: &ModelParams, space: &Arc<HilbertSpace>) -> Result<Vec<CollapseChannel>> {
    params.validate()?;
    let mut out = Vec::with_capacity(11);
    for (mode, name) in [(Mode::L, "a_L"), (Mode::R, "a_R")] {
        out.push(CollapseChannel {
            label: name.to_string(),
            operator: annihilation_operator(space, mode),
            rate: params.kappa,
        });
    }
    let grounds = [(Level::G0, "g0"), (Level::GL, "gL"), (Level::GR, "gR")];
    for (g, gname) in grounds {
        out.push(CollapseChannel {
            label: format!("A:e0->{gname}"),
            operator: transition_operator(space, Atom::A, Level::E0, g)?,
            rate: params.gamma / 2.0,
        });
    }
    for (e, ename) in [(Level::EL, "eL"), (Level::ER, "eR")] {
        for (g, gname) in grounds {
            out.push(CollapseChannel {
                label: format!("B:{ename}->{gname}"),
                operator: transition_operator(space, Atom::B, e, g)?,
                rate: params.gamma / 2.0,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_full_space, build_subspace, ZERO};
    use crate::pulses::{FittedPulse, StirapParams};
    use approx::assert_abs_diff_eq;

    fn stirap() -> PulseSet {
        PulseSet::stirap(StirapParams::for_duration(50.0)).unwrap()
    }

    fn tqd() -> PulseSet {
        PulseSet::tqd_exact(StirapParams::for_duration(50.0), 3.6).unwrap()
    }

    fn pseudo_random_times(n: usize, t_f: f64) -> Vec<f64> {
        // Weyl sequence, reproducible without an RNG
        let golden = 0.618_033_988_749_894_9;
        (1..=n).map(|k| t_f * ((k as f64 * golden) % 1.0)).collect()
    }

    #[test]
    fn resonant_subspace_matrix_matches_structure() {
        let sub = build_subspace();
        let params = ModelParams::default();
        let pulses = stirap();
        for t in [0.0, 12.5, 31.0, 50.0] {
            let h = h_resonant(&sub, &params, &pulses, t).unwrap();
            let (a, b) = stirap_amplitudes(&StirapParams::for_duration(50.0), t);
            assert_eq!(h.entry(1, 2), ONE);
            assert_eq!(h.entry(1, 3), ONE);
            assert_eq!(h.entry(2, 4), ONE);
            assert_eq!(h.entry(3, 5), ONE);
            assert_eq!(h.entry(0, 1), C64::from(a));
            assert_eq!(h.entry(4, 6), C64::from(b));
            assert_eq!(h.entry(5, 7), C64::from(b));
            assert!(h.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn undriven_subspace_has_eight_couplings() {
        let sub = build_subspace();
        let silent = PulseSet::tqd_fitted(FittedPulse::reference().scaled(0.0), 3.6).unwrap();
        let params = ModelParams { delta: 0.0, ..ModelParams::default() };
        let h = cavity_model(&sub, &params, &silent, 0.0).unwrap().at(10.0);
        assert_eq!(h.count_nonzero(0.0), 8);
    }

    #[test]
    fn detuned_diagonal_and_drive() {
        let sub = build_subspace();
        let params = ModelParams::default();
        let pulses = tqd();
        for t in pseudo_random_times(100, 50.0) {
            let h = h_detuned(&sub, &params, &pulses, t).unwrap();
            assert_eq!(h.entry(1, 1), C64::from(3.6));
            assert_eq!(h.entry(4, 4), C64::from(3.6));
            assert_eq!(h.entry(5, 5), C64::from(3.6));
            assert_eq!(h.entry(0, 0), ZERO);
            assert_eq!(h.entry(0, 1), pulses.omega_a(t));
            assert!(h.entry(0, 1).re == 0.0 && h.entry(0, 1).im <= 0.0);
            assert!(h.hermiticity_error() < 1e-12);
        }
    }

    #[test]
    fn model_kinds_are_enforced() {
        let sub = build_subspace();
        let params = ModelParams::default();
        assert!(h_resonant(&sub, &params, &tqd(), 0.0).is_err());
        assert!(h_detuned(&sub, &params, &stirap(), 0.0).is_err());
        assert!(h_effective_lambda(&tqd(), 0.0).is_err());
        assert!(two_level_hamiltonian(&stirap(), 3.6).is_err());
    }

    #[test]
    fn full_model_keeps_subspace_closed() {
        let full = build_full_space();
        let sub = build_subspace();
        let params = ModelParams::default();
        for pulses in [stirap(), tqd()] {
            let model = cavity_hamiltonian(&full, &params, &pulses).unwrap();
            for t in pseudo_random_times(200, 50.0) {
                let h = model.at(t);
                for k in 0..8 {
                    let v = StateVector::basis(&sub, &sub.ket(k)).unwrap().embed(&full).unwrap();
                    let out = h.apply(&v).unwrap();
                    let inside = out.project(&sub).embed(&full).unwrap();
                    let residual = (out.amplitudes() - inside.amplitudes()).norm();
                    assert!(residual < 1e-12);
                }
            }
        }
    }

    #[test]
    fn full_model_restricts_to_subspace_model() {
        let full = build_full_space();
        let sub = build_subspace();
        let params = ModelParams::default();
        let pulses = tqd();
        let big = h_detuned(&full, &params, &pulses, 22.0).unwrap();
        let small = h_detuned(&sub, &params, &pulses, 22.0).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                let fi = full.index_of(&sub.ket(i)).unwrap();
                let fj = full.index_of(&sub.ket(j)).unwrap();
                assert_eq!(big.entry(fi, fj), small.entry(i, j));
            }
        }
    }

    #[test]
    fn symmetric_and_dressed_vectors() {
        let sub = build_subspace();
        let sym = symmetric_vectors(&sub);
        let psi3 = &sym.even[2];
        let r = 1.0 / SQRT_2;
        assert_abs_diff_eq!(psi3.amplitudes()[6].re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(psi3.amplitudes()[7].re, r, epsilon = 1e-15);

        let d = bright_dark_vectors(&sub);
        let expected = phi(&sub, 2)
            .plus(&sym.even[1].scaled(C64::from(-SQRT_2)))
            .unwrap()
            .scaled(C64::from(1.0 / 3f64.sqrt()));
        assert!((d.dark.amplitudes() - expected.amplitudes()).norm() < 1e-15);
        let all = [&d.dark, &d.plus, &d.minus];
        for (i, x) in all.iter().enumerate() {
            for (j, y) in all.iter().enumerate() {
                let want = if i == j { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(x.inner(y).unwrap().norm(), want, epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn dressed_states_diagonalize_cavity_coupling() {
        let sub = build_subspace();
        let c = cavity_absorption(&sub);
        let h0 = c.plus(&c.dagger()).unwrap();
        let d = bright_dark_vectors(&sub);
        let s3 = 3f64.sqrt();
        for (v, lambda) in [(&d.dark, 0.0), (&d.plus, s3), (&d.minus, -s3)] {
            let hv = h0.apply(v).unwrap();
            let diff = hv.amplitudes() - v.amplitudes() * C64::from(lambda);
            assert!(diff.norm() < 1e-14);
        }
    }

    #[test]
    fn odd_sector_decouples() {
        let sub = build_subspace();
        let basis = sector_basis(&sub);
        for pulses in [stirap(), tqd()] {
            let model = cavity_hamiltonian(&sub, &ModelParams::default(), &pulses).unwrap();
            for t in pseudo_random_times(50, 50.0) {
                let h = model.at(t);
                for even in &basis[..5] {
                    for odd in &basis[5..] {
                        assert!(h.element(even, odd).unwrap().norm() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn lambda_model_matches_projection_of_dressed_couplings() {
        // ⟨φ₁|H|Ψ_d⟩ and ⟨Ψ_d|H|ψ₃⟩ of the subspace model equal the Λ couplings
        let sub = build_subspace();
        let pulses = stirap();
        let d = bright_dark_vectors(&sub);
        let psi3 = &symmetric_vectors(&sub).even[2];
        let full = h_resonant(&sub, &ModelParams::default(), &pulses, 27.0).unwrap();
        let lambda = h_effective_lambda(&pulses, 27.0).unwrap();
        let p1 = phi(&sub, 1);
        assert_abs_diff_eq!((full.element(&p1, &d.dark).unwrap() - lambda.entry(0, 1)).norm(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!((full.element(&d.dark, psi3).unwrap() - lambda.entry(1, 2)).norm(), 0.0, epsilon = 1e-14);
    }

    #[test]
    fn lambda_eigenvalues() {
        let p = StirapParams::for_duration(50.0);
        let pulses = stirap();
        for t in pseudo_random_times(100, 50.0) {
            let h = h_effective_lambda(&pulses, t).unwrap();
            let (a, b) = stirap_amplitudes(&p, t);
            let l = effective_rabi(a, b) / 3f64.sqrt();
            let ev = h.hermitian_eigenvalues();
            for (got, want) in ev.iter().zip([-l, 0.0, l]) {
                assert!((got - want).abs() < 1e-10);
            }
            let eig = instantaneous_eigensystem(&p, t);
            for (value, vector) in eig.values.iter().zip(&eig.vectors) {
                let residual = h.apply(vector).unwrap().amplitudes() - vector.amplitudes() * C64::from(*value);
                assert!(residual.norm() < 1e-10);
                assert_abs_diff_eq!(vector.norm(), 1.0, epsilon = 1e-12);
            }
            for i in 0..3 {
                for j in (i + 1)..3 {
                    assert!(eig.vectors[i].inner(&eig.vectors[j]).unwrap().norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn equal_amplitudes_give_unit_eigenvalues() {
        let space = build_lambda_space();
        let w = 0.35;
        let m = CMatrix::from_row_slice(3, 3, &[
            ZERO, C64::from(w / 3f64.sqrt()), ZERO,
            C64::from(w / 3f64.sqrt()), ZERO, C64::from(-SQRT_2 * w / 3f64.sqrt()),
            ZERO, C64::from(-SQRT_2 * w / 3f64.sqrt()), ZERO,
        ]);
        let ev = Operator::from_matrix(&space, m).unwrap().hermitian_eigenvalues();
        for (got, want) in ev.iter().zip([-w, 0.0, w]) {
            assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
        }
    }

    #[test]
    fn dark_vector_at_final_angle_is_target() {
        let p = StirapParams::for_duration(50.0);
        let theta = -(2f64.sqrt()).atan();
        let (s, c) = theta.sin_cos();
        let dark = [-c, 0.0, s];
        let target = [1.0 / 3f64.sqrt(), 0.0, SQRT_2 / 3f64.sqrt()];
        let overlap: f64 = dark.iter().zip(target).map(|(x, y)| x * y).sum();
        assert_abs_diff_eq!(overlap.abs(), 1.0, epsilon = 1e-15);
        let at_end = instantaneous_eigensystem(&p, 50.0).vectors[1].clone();
        let measured = at_end.amplitudes()[0].re * target[0] + at_end.amplitudes()[2].re * target[2];
        assert!(measured.abs() > 1.0 - 1e-6);
    }

    #[test]
    fn detuned_lambda_structure() {
        let pulses = tqd();
        for t in pseudo_random_times(20, 50.0) {
            let h = h_effective_detuned(&pulses, 3.6, t).unwrap();
            assert_eq!(h.entry(0, 0), ZERO);
            assert_eq!(h.entry(1, 1), C64::from(3.6));
            assert_eq!(h.entry(2, 2), ZERO);
            let (a, b) = pulses.amplitudes(t);
            assert!((h.entry(0, 1) - a / 3f64.sqrt()).norm() < 1e-15);
            assert!((h.entry(1, 2) + b * SQRT_2 / 3f64.sqrt()).norm() < 1e-15);
        }
        let silent = PulseSet::tqd_fitted(FittedPulse::reference().scaled(0.0), 3.6).unwrap();
        let ev = h_effective_detuned(&silent, 3.6, 10.0).unwrap().hermitian_eigenvalues();
        assert_eq!(ev, vec![0.0, 0.0, 3.6]);
    }

    #[test]
    fn two_level_coupling_magnitude_is_rate() {
        let p = StirapParams::for_duration(50.0);
        let pulses = tqd();
        for t in pseudo_random_times(50, 50.0) {
            let h = h_two_level(&pulses, 3.6, t).unwrap();
            assert_abs_diff_eq!(h.entry(0, 1).norm(), mixing_angle_rate(&p, t).abs(), epsilon = 1e-12);
            // equals the counterdiabatic coupling iθ̇
            let cd = h_counterdiabatic(&p, t).unwrap();
            assert!((h.entry(0, 1) - cd.entry(0, 2)).norm() < 1e-12);
        }
        let silent = PulseSet::tqd_fitted(FittedPulse::reference().scaled(0.0), 3.6).unwrap();
        assert_eq!(h_two_level(&silent, 3.6, 25.0).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn counterdiabatic_closed_form_matches_berry_formula() {
        let p = StirapParams::for_duration(50.0);
        let pulses = stirap();
        for t in pseudo_random_times(50, 50.0) {
            let exact = h_counterdiabatic(&p, t).unwrap();
            let numeric = berry_counterdiabatic_numeric(&pulses, t, BERRY_STEP_FRACTION * 50.0).unwrap();
            let err = crate::hilbert::max_abs_diff(exact.matrix(), numeric.matrix());
            assert!(err < 1e-6, "t = {t}: {err}");
            assert!(numeric.hermiticity_error() < 1e-9);
            let ev = exact.hermitian_eigenvalues();
            let rate = mixing_angle_rate(&p, t).abs();
            for (got, want) in ev.iter().zip([-rate, 0.0, rate]) {
                assert_abs_diff_eq!(*got, want, epsilon = 1e-14);
            }
            assert!(exact.matrix().trace().norm() < 1e-15);
        }
    }

    #[test]
    fn berry_term_vanishes_for_static_hamiltonian() {
        let space = build_lambda_space();
        let h = h_effective_lambda(&stirap(), 25.0).unwrap().into_matrix();
        let out = berry_counterdiabatic_from(&space, |_| h.clone(), 25.0, 1e-3).unwrap();
        assert!(out.max_abs() < 1e-12);
    }

    #[test]
    fn collapse_channel_inventory() {
        let full = build_full_space();
        let params = ModelParams { kappa: 0.01, gamma: 0.05, ..ModelParams::default() };
        let channels = collapse_channels(&params, &full).unwrap();
        assert_eq!(channels.len(), 11);
        assert_eq!(channels.iter().filter(|c| c.rate == 0.01).count(), 2);
        assert_eq!(channels.iter().filter(|c| c.rate == 0.025).count(), 9);
        for ch in &channels {
            for (col, ket) in full.kets().iter().enumerate() {
                let Ket::Product(s) = ket else { unreachable!() };
                for row in 0..80 {
                    if ch.operator.entry(row, col) != ZERO {
                        let Ket::Product(image) = full.ket(row) else { unreachable!() };
                        assert_eq!(image.excitations() + 1, s.excitations(), "{}", ch.label);
                    }
                }
            }
        }
        let closed = collapse_channels(&ModelParams::default(), &full).unwrap();
        assert!(closed.iter().all(|c| c.rate == 0.0));
    }
}
