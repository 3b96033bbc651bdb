//! Control amplitudes: STIRAP Gaussians, the dark-state mixing angle, the
//! counterdiabatic (TQD) amplitudes of the detuned system, and the
//! two-Gaussian approximation of those amplitudes.
//!
//! All rates are in units of g and all times in units of 1/g.

mod fit;

use std::f64::consts::SQRT_2;

use crate::error::{Error, Result};
use crate::hilbert::{C64, I, ZERO};

pub use fit::{fit_two_gaussians, FitOutcome, FIT_GRADIENT_TOLERANCE, FIT_MAX_ITERATIONS};

/// Number of points used when pulses are sampled for export.
pub const EXPORT_SAMPLES: usize = 1001;

/// Above this, Δ·θ̇ is treated as a genuine sign violation rather than round-off.
const SIGN_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StirapParams {
    pub omega0: f64,
    /// Offset of the two Gaussian centres from t_f/2.
    pub tau: f64,
    /// Gaussian width T.
    pub width: f64,
    pub t_f: f64,
}

impl StirapParams {
    pub const DEFAULT_OMEGA0: f64 = 0.35;
    pub const DEFAULT_TAU_FRACTION: f64 = 0.12;
    pub const DEFAULT_WIDTH_FRACTION: f64 = 0.16;

    /// Ω₀ = 0.35 g, τ = 0.12 t_f, T = 0.16 t_f.
    pub fn for_duration(t_f: f64) -> Self {
        Self {
            omega0: Self::DEFAULT_OMEGA0,
            tau: Self::DEFAULT_TAU_FRACTION * t_f,
            width: Self::DEFAULT_WIDTH_FRACTION * t_f,
            t_f,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_f > 0.0) {
            return Err(Error::Parameter(format!("t_f must be positive, got {}", self.t_f)));
        }
        if !(self.omega0 > 0.0) {
            return Err(Error::Parameter(format!("omega0 must be positive, got {}", self.omega0)));
        }
        if !(self.tau > 0.0 && self.tau < self.t_f / 2.0) {
            return Err(Error::Parameter(format!(
                "tau must lie in (0, t_f/2), got {} with t_f = {}",
                self.tau, self.t_f
            )));
        }
        if !(self.width > 0.0) {
            return Err(Error::Parameter(format!("pulse width must be positive, got {}", self.width)));
        }
        Ok(())
    }

    fn late_center(&self) -> f64 {
        self.t_f / 2.0 + self.tau
    }

    fn early_center(&self) -> f64 {
        self.t_f / 2.0 - self.tau
    }
}

/// (value, d/dt value) of exp(−(t−c)²/w²).
fn gaussian_with_slope(t: f64, center: f64, width: f64) -> (f64, f64) {
    let x = t - center;
    let g = (-(x * x) / (width * width)).exp();
    (g, -2.0 * x / (width * width) * g)
}

/// STIRAP Rabi frequencies (Ω_A, Ω_B) at time t.
pub fn stirap_amplitudes(p: &StirapParams, t: f64) -> (f64, f64) {
    let (a, b, _, _) = stirap_with_derivatives(p, t);
    (a, b)
}

/// (Ω_A, Ω_B, Ω̇_A, Ω̇_B), derivatives taken analytically.
pub fn stirap_with_derivatives(p: &StirapParams, t: f64) -> (f64, f64, f64, f64) {
    let (late, late_slope) = gaussian_with_slope(t, p.late_center(), p.width);
    let (early, early_slope) = gaussian_with_slope(t, p.early_center(), p.width);
    let inv_sqrt5 = 1.0 / 5f64.sqrt();
    let omega_a = 2.0 * inv_sqrt5 * p.omega0 * late;
    let omega_b = inv_sqrt5 * p.omega0 * late + p.omega0 * early;
    let d_omega_a = 2.0 * inv_sqrt5 * p.omega0 * late_slope;
    let d_omega_b = inv_sqrt5 * p.omega0 * late_slope + p.omega0 * early_slope;
    (omega_a, omega_b, d_omega_a, d_omega_b)
}

/// Ω(t) = √(Ω_A² + 2Ω_B²)
pub fn effective_rabi(omega_a: f64, omega_b: f64) -> f64 {
    (omega_a * omega_a + 2.0 * omega_b * omega_b).sqrt()
}

/// Dark-state mixing angle θ with tan θ = −Ω_A/(√2 Ω_B).
pub fn mixing_angle(p: &StirapParams, t: f64) -> f64 {
    let (a, b) = stirap_amplitudes(p, t);
    // Ω_B > 0 for every finite t, so the principal branch is continuous.
    (-a / (SQRT_2 * b)).atan()
}

/// θ̇ = √2 (Ω_A Ω̇_B − Ω̇_A Ω_B) / Ω².
pub fn mixing_angle_rate(p: &StirapParams, t: f64) -> f64 {
    let (a, b, da, db) = stirap_with_derivatives(p, t);
    let omega_sq = a * a + 2.0 * b * b;
    if omega_sq == 0.0 {
        return 0.0;
    }
    SQRT_2 * (a * db - da * b) / omega_sq
}

/// |θ̇| / (Ω/√3): how far the STIRAP run is from the adiabatic regime.
pub fn adiabaticity_ratio(p: &StirapParams, t: f64) -> f64 {
    let (a, b) = stirap_amplitudes(p, t);
    let gap = effective_rabi(a, b) / 3f64.sqrt();
    mixing_angle_rate(p, t).abs() / gap
}

/// Counterdiabatic amplitudes (Ω′_A, Ω′_B) of the detuned system.
///
/// |Ω′_A| = √(−3Δθ̇), Ω′_B = |Ω′_A|/√2 ≥ 0 and Ω′_A = −i√2 Ω′_B, so the
/// adiabatically eliminated coupling equals iθ̇ with θ̇ ≤ 0 and Δ > 0.
pub fn tqd_amplitudes(p: &StirapParams, delta: f64, t: f64) -> Result<(C64, f64)> {
    if delta == 0.0 {
        return Err(Error::Parameter("TQD amplitudes need a nonzero detuning".into()));
    }
    let rate = mixing_angle_rate(p, t);
    if delta * rate > SIGN_TOLERANCE {
        return Err(Error::PulseSynthesis {
            time: t,
            reason: format!("delta * theta_dot = {} > 0 has no real amplitude", delta * rate),
        });
    }
    Ok(tqd_from_rate(delta, rate))
}

fn tqd_from_rate(delta: f64, rate: f64) -> (C64, f64) {
    let magnitude = (-3.0 * delta * rate).max(0.0).sqrt();
    (-I * magnitude, magnitude / SQRT_2)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GaussianTerm {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl GaussianTerm {
    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        self.amplitude * (-x * x).exp()
    }
}

/// Sum of Gaussian terms standing in for Ω′_B.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedPulse {
    terms: Vec<GaussianTerm>,
}

impl FittedPulse {
    pub fn new(terms: Vec<GaussianTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::Parameter("a fitted pulse needs at least one term".into()));
        }
        if let Some(bad) = terms.iter().find(|g| !(g.width > 0.0)) {
            return Err(Error::Parameter(format!("Gaussian width must be positive, got {}", bad.width)));
        }
        Ok(Self { terms })
    }

    /// The published two-Gaussian pulse for Δ = 3.6 g, t_f = 50/g.
    pub fn reference() -> Self {
        Self {
            terms: vec![
                GaussianTerm { amplitude: 0.3861, center: 25.6816, width: 12.2827 },
                GaussianTerm { amplitude: 0.3227, center: 25.6808, width: 5.7835 },
            ],
        }
    }

    pub fn terms(&self) -> &[GaussianTerm] {
        &self.terms
    }

    pub fn value(&self, t: f64) -> f64 {
        fitted_pulse_value(self, t)
    }

    /// All amplitudes multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|g| GaussianTerm { amplitude: g.amplitude * factor, ..*g })
                .collect(),
        }
    }
}

pub fn fitted_pulse_value(f: &FittedPulse, t: f64) -> f64 {
    f.terms.iter().map(|g| g.value(t)).sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PulseKind {
    Stirap,
    TqdExact,
    TqdFitted,
}

impl PulseKind {
    pub fn name(self) -> &'static str {
        match self {
            PulseKind::Stirap => "stirap",
            PulseKind::TqdExact => "tqd",
            PulseKind::TqdFitted => "tqd-fitted",
        }
    }
}

/// One complete drive schedule for the two lasers.
#[derive(Clone, Debug, PartialEq)]
pub enum PulseSet {
    Stirap(StirapParams),
    TqdExact { stirap: StirapParams, delta: f64 },
    TqdFitted { pulse: FittedPulse, delta: f64 },
}

impl PulseSet {
    pub fn stirap(p: StirapParams) -> Result<Self> {
        p.validate()?;
        Ok(Self::Stirap(p))
    }

    /// Exact counterdiabatic pulses; the sign condition is checked on the
    /// export grid so evaluation later cannot fail.
    pub fn tqd_exact(stirap: StirapParams, delta: f64) -> Result<Self> {
        stirap.validate()?;
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::Parameter(format!("TQD pulses need a finite nonzero detuning, got {delta}")));
        }
        for t in sample_times(stirap.t_f, EXPORT_SAMPLES) {
            tqd_amplitudes(&stirap, delta, t)?;
        }
        Ok(Self::TqdExact { stirap, delta })
    }

    /// Fitted pulses with Ω″_B = f(t) and Ω″_A = −i√2 Ω″_B.
    pub fn tqd_fitted(pulse: FittedPulse, delta: f64) -> Result<Self> {
        if delta == 0.0 || !delta.is_finite() {
            return Err(Error::Parameter(format!("TQD pulses need a finite nonzero detuning, got {delta}")));
        }
        Ok(Self::TqdFitted { pulse, delta })
    }

    pub fn kind(&self) -> PulseKind {
        match self {
            PulseSet::Stirap(_) => PulseKind::Stirap,
            PulseSet::TqdExact { .. } => PulseKind::TqdExact,
            PulseSet::TqdFitted { .. } => PulseKind::TqdFitted,
        }
    }

    /// Design detuning of the pulses (zero for STIRAP).
    pub fn delta(&self) -> f64 {
        match self {
            PulseSet::Stirap(_) => 0.0,
            PulseSet::TqdExact { delta, .. } | PulseSet::TqdFitted { delta, .. } => *delta,
        }
    }

    /// (Ω_A, Ω_B) as complex amplitudes; primed or double-primed channels for TQD kinds.
    pub fn amplitudes(&self, t: f64) -> (C64, C64) {
        match self {
            PulseSet::Stirap(p) => {
                let (a, b) = stirap_amplitudes(p, t);
                (C64::from(a), C64::from(b))
            }
            PulseSet::TqdExact { stirap, delta } => {
                let (a, b) = tqd_from_rate(*delta, mixing_angle_rate(stirap, t));
                (a, C64::from(b))
            }
            PulseSet::TqdFitted { pulse, .. } => {
                let b = pulse.value(t);
                (-I * SQRT_2 * b, C64::from(b))
            }
        }
    }

    pub fn omega_a(&self, t: f64) -> C64 {
        self.amplitudes(t).0
    }

    pub fn omega_b(&self, t: f64) -> C64 {
        self.amplitudes(t).1
    }

    /// Same schedule with every amplitude scaled by `factor`.
    pub fn with_amplitude_scale(&self, factor: f64) -> Self {
        match self {
            PulseSet::Stirap(p) => PulseSet::Stirap(StirapParams { omega0: p.omega0 * factor, ..*p }),
            PulseSet::TqdFitted { pulse, delta } => {
                PulseSet::TqdFitted { pulse: pulse.scaled(factor), delta: *delta }
            }
            // |Ω′| ∝ √Δ, so scaling the amplitudes by s is a design detuning of s²Δ.
            PulseSet::TqdExact { stirap, delta } => {
                PulseSet::TqdExact { stirap: *stirap, delta: delta * factor * factor }
            }
        }
    }

    pub fn is_silent(&self, t: f64) -> bool {
        let (a, b) = self.amplitudes(t);
        a == ZERO && b == ZERO
    }
}

/// `n` uniformly spaced times on [0, t_f], endpoints included.
pub fn sample_times(t_f: f64, n: usize) -> impl Iterator<Item = f64> {
    let step = if n > 1 { t_f / (n - 1) as f64 } else { 0.0 };
    (0..n).map(move |k| if k + 1 == n { t_f } else { k as f64 * step })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn defaults() -> StirapParams {
        StirapParams::for_duration(50.0)
    }

    // Direct transcription of the Gaussian pulse pair, kept separate from the
    // production path.
    fn oracle_stirap(t: f64) -> (f64, f64) {
        let (w0, tf, tau, w) = (0.35, 50.0, 6.0, 8.0);
        let late = (-((t - tf / 2.0 - tau) / w).powi(2)).exp();
        let early = (-((t - tf / 2.0 + tau) / w).powi(2)).exp();
        (2.0 / 5f64.sqrt() * w0 * late, w0 / 5f64.sqrt() * late + w0 * early)
    }

    #[test]
    fn stirap_peak_and_tails() {
        let p = defaults();
        let (a, _) = stirap_amplitudes(&p, 31.0);
        assert_abs_diff_eq!(a, 2.0 / 5f64.sqrt() * 0.35, epsilon = 1e-15);
        assert_abs_diff_eq!(a, 0.3130, epsilon = 1e-4);

        let (a0, b0) = stirap_amplitudes(&p, 0.0);
        let (oa, ob) = oracle_stirap(0.0);
        assert_abs_diff_eq!(a0, oa, epsilon = 1e-12);
        assert_abs_diff_eq!(b0, ob, epsilon = 1e-12);
        assert_abs_diff_eq!(a0, 9.4e-8, epsilon = 0.1e-8);
        assert_abs_diff_eq!(b0, 1.24e-3, epsilon = 0.01e-3);

        for k in 0..=100 {
            let t = 0.5 * k as f64;
            let (a, b) = stirap_amplitudes(&p, t);
            let (oa, ob) = oracle_stirap(t);
            assert_abs_diff_eq!(a, oa, epsilon = 1e-12);
            assert_abs_diff_eq!(b, ob, epsilon = 1e-12);
            assert!(a >= 0.0 && b >= 0.0);
        }
    }

    #[test]
    fn early_gaussian_of_omega_b_peaks_at_omega0() {
        let p = defaults();
        let (_, b) = stirap_amplitudes(&p, 19.0);
        let late_tail = 0.35 / 5f64.sqrt() * (-(12.0f64 / 8.0).powi(2)).exp();
        assert_abs_diff_eq!(b - late_tail, 0.35, epsilon = 1e-15);
    }

    #[test]
    fn boundary_angles() {
        let p = defaults();
        let start = mixing_angle(&p, 0.0);
        assert!(start.abs() < 1e-4);
        assert_abs_diff_eq!(start, -5.3e-5, epsilon = 0.1e-5);
        let end = mixing_angle(&p, 50.0);
        assert_abs_diff_eq!(end, -0.95522, epsilon = 1e-5);
        assert!((end + 2f64.sqrt().atan()).abs() < 2e-3);
    }

    #[test]
    fn angle_is_minus_quarter_pi_where_omega_a_is_sqrt2_omega_b() {
        let p = defaults();
        // bisect Ω_A − √2Ω_B on [25, 50]
        let f = |t: f64| {
            let (a, b) = stirap_amplitudes(&p, t);
            a - SQRT_2 * b
        };
        let (mut lo, mut hi) = (25.0, 50.0);
        assert!(f(lo) < 0.0 && f(hi) > 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 { lo = mid } else { hi = mid }
        }
        assert_abs_diff_eq!(mixing_angle(&p, lo), -std::f64::consts::FRAC_PI_4, epsilon = 1e-12);
    }

    #[test]
    fn angle_is_continuous() {
        let p = defaults();
        let step = 1e-3 * p.t_f;
        let mut prev = mixing_angle(&p, 0.0);
        for k in 1..=1000 {
            let next = mixing_angle(&p, k as f64 * step);
            assert!((next - prev).abs() < 0.02);
            prev = next;
        }
    }

    #[test]
    fn rate_matches_central_difference() {
        let p = defaults();
        let h = 1e-4;
        for k in 0..100 {
            let t = h + (50.0 - 2.0 * h) * k as f64 / 99.0;
            let fd = (mixing_angle(&p, t + h) - mixing_angle(&p, t - h)) / (2.0 * h);
            assert!((mixing_angle_rate(&p, t) - fd).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn rate_is_never_positive() {
        let p = defaults();
        for t in sample_times(50.0, 20001) {
            assert!(mixing_angle_rate(&p, t) <= 0.0, "t = {t}");
        }
    }

    #[test]
    fn rate_integrates_to_angle_change() {
        // composite Simpson on 20000 panels
        let p = defaults();
        let n = 20000;
        let h = 50.0 / n as f64;
        let mut sum = mixing_angle_rate(&p, 0.0) + mixing_angle_rate(&p, 50.0);
        for k in 1..n {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * mixing_angle_rate(&p, k as f64 * h);
        }
        let integral = sum * h / 3.0;
        let change = mixing_angle(&p, 50.0) - mixing_angle(&p, 0.0);
        assert_abs_diff_eq!(integral, change, epsilon = 1e-9);
        assert_abs_diff_eq!(integral, -0.95517, epsilon = 1e-5);
    }

    #[test]
    fn tqd_amplitudes_obey_defining_relations() {
        let p = defaults();
        let delta = 3.6;
        for t in sample_times(50.0, 501) {
            let (a, b) = tqd_amplitudes(&p, delta, t).unwrap();
            let rate = mixing_angle_rate(&p, t);
            assert!((a.norm_sqr() + 3.0 * delta * rate).abs() < 1e-9);
            assert_abs_diff_eq!(a.norm_sqr() / (3.0 * delta), rate.abs(), epsilon = 1e-12);
            // Ω′_B = iΩ′_A/√2
            let lock = I * a / SQRT_2 - C64::from(b);
            assert!(lock.norm() < 1e-15);
            assert!(b >= 0.0);
        }
    }

    #[test]
    fn tqd_peak_sits_near_fitted_peak() {
        let p = defaults();
        let (t_peak, peak) = sample_times(50.0, 50001)
            .map(|t| (t, tqd_amplitudes(&p, 3.6, t).unwrap().1))
            .fold((0.0, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        let fitted_peak = 0.3861 + 0.3227;
        assert!((peak - fitted_peak).abs() < 0.02, "peak {peak}");
        assert!((t_peak - 25.7).abs() < 0.5, "t_peak {t_peak}");
    }

    #[test]
    fn tqd_rejects_wrong_sign_detuning() {
        let p = defaults();
        let err = tqd_amplitudes(&p, -3.6, 25.0).unwrap_err();
        assert!(matches!(err, Error::PulseSynthesis { time, .. } if time == 25.0));
        assert!(PulseSet::tqd_exact(p, -3.6).is_err());
        assert!(PulseSet::tqd_exact(p, 0.0).is_err());
    }

    #[test]
    fn tqd_vanishes_with_rate() {
        // constant pulses: Ω_A ∝ late Gaussian with τ tiny still moves, so use
        // a far tail where θ̇ underflows to zero
        let p = defaults();
        let t = -2000.0;
        assert_eq!(mixing_angle_rate(&p, t), 0.0);
        let (a, b) = tqd_amplitudes(&p, 3.6, t).unwrap();
        assert_eq!(a, ZERO);
        assert_eq!(b, 0.0);
    }

    #[test]
    fn fitted_reference_values() {
        let f = FittedPulse::reference();
        assert_abs_diff_eq!(f.value(25.68), 0.7088, epsilon = 1e-4);
        let at_zero = 0.3861 * (-(25.6816f64 / 12.2827).powi(2)).exp()
            + 0.3227 * (-(25.6808f64 / 5.7835).powi(2)).exp();
        assert_abs_diff_eq!(f.value(0.0), at_zero, epsilon = 1e-15);
        assert_abs_diff_eq!(f.value(0.0), 0.0049, epsilon = 1e-4);
        for t in sample_times(50.0, 1001) {
            assert!(f.value(t) >= 0.0);
        }
    }

    #[test]
    fn single_term_returns_amplitude_at_center() {
        let f = FittedPulse::new(vec![GaussianTerm { amplitude: 0.42, center: 7.0, width: 3.0 }]).unwrap();
        assert_eq!(f.value(7.0), 0.42);
        assert!(FittedPulse::new(vec![]).is_err());
        assert!(FittedPulse::new(vec![GaussianTerm { amplitude: 1.0, center: 0.0, width: 0.0 }]).is_err());
    }

    #[test]
    fn fitted_pulse_phase_convention() {
        let set = PulseSet::tqd_fitted(FittedPulse::reference(), 3.6).unwrap();
        let (a, b) = set.amplitudes(25.0);
        assert!((a + I * SQRT_2 * b).norm() < 1e-15);
        assert_eq!(b.im, 0.0);
    }

    #[test]
    fn stirap_params_validation() {
        assert!(StirapParams { tau: 30.0, ..StirapParams::for_duration(50.0) }.validate().is_err());
        assert!(StirapParams { omega0: 0.0, ..StirapParams::for_duration(50.0) }.validate().is_err());
        assert!(StirapParams::for_duration(50.0).validate().is_ok());
    }

    proptest! {
        #[test]
        fn angle_stays_in_principal_branch(t in 0.0f64..50.0, tf in 10.0f64..120.0) {
            let p = StirapParams::for_duration(tf);
            let theta = mixing_angle(&p, t * tf / 50.0);
            prop_assert!(theta > -std::f64::consts::FRAC_PI_2 && theta <= 0.0);
        }

        #[test]
        fn exact_tqd_pulses_are_phase_locked(t in 0.0f64..50.0, delta in 0.5f64..20.0) {
            let set = PulseSet::tqd_exact(StirapParams::for_duration(50.0), delta).unwrap();
            let (a, b) = set.amplitudes(t);
            prop_assert!((b - I * a / SQRT_2).norm() < 1e-14);
        }
    }
}
