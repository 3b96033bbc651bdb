//! Text renderings of runner results: CSV with a `#` provenance header, and
//! gnuplot scripts that read them.

use std::fmt::{Display, Write};

use super::{MethodComparison, RobustnessCurves, Scenario, SweepGrid};
use crate::dynamics::SimResult;
use crate::error::Result;
use crate::pulses::{mixing_angle, mixing_angle_rate, sample_times, stirap_amplitudes, tqd_amplitudes, EXPORT_SAMPLES};

/// Ordered `key = value` pairs describing how an output was produced.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Provenance {
    entries: Vec<(String, String)>,
}

impl Provenance {
    pub fn push(&mut self, key: &str, value: impl Display) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn with(mut self, key: &str, value: impl Display) -> Self {
        self.push(key, value);
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn header(&self) -> String {
        self.entries.iter().map(|(k, v)| format!("# {k} = {v}\n")).collect()
    }
}

fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.10}")
    } else {
        "nan".to_string()
    }
}

fn status(cell: &std::result::Result<f64, String>) -> (String, String) {
    match cell {
        Ok(f) => (num(*f), "ok".to_string()),
        Err(e) => ("nan".to_string(), e.replace([',', '\n'], ";")),
    }
}

/// Columns `t*g, P(...)..., F`; one row per recorded sample.
pub fn sim_result_csv(result: &SimResult, provenance: &Provenance) -> String {
    let mut out = provenance.header();
    let cols: Vec<String> = result
        .labels
        .iter()
        .map(|l| if l == "leaked" { "P_leaked".to_string() } else { format!("P({l})") })
        .collect();
    let _ = writeln!(out, "t*g,{},F", cols.join(","));
    for ((t, row), f) in result.times.iter().zip(&result.populations).zip(&result.fidelity) {
        let pops: Vec<String> = row.iter().map(|&p| num(p)).collect();
        let _ = writeln!(out, "{},{},{}", num(*t), pops.join(","), num(*f));
    }
    out
}

/// Long format, x-major. Two-dimensional grids get a blank line after each
/// x block so gnuplot can draw them as surfaces.
pub fn grid_csv(grid: &SweepGrid, provenance: &Provenance) -> String {
    let mut out = provenance.header();
    let spec = &grid.spec;
    let nx = spec.x_values.len();
    match &spec.y {
        None => {
            let _ = writeln!(out, "{},F,status", spec.x.name());
            for (x, cell) in spec.x_values.iter().zip(&grid.cells) {
                let (f, s) = status(cell);
                let _ = writeln!(out, "{},{f},{s}", num(*x));
            }
        }
        Some((y_axis, ys)) => {
            let _ = writeln!(out, "{},{},F,status", spec.x.name(), y_axis.name());
            for i in 0..nx {
                for (j, y) in ys.iter().enumerate() {
                    let (f, s) = status(grid.get(i, j));
                    let _ = writeln!(out, "{},{},{f},{s}", num(spec.x_values[i]), num(*y));
                }
                if i + 1 < nx {
                    out.push('\n');
                }
            }
        }
    }
    out
}

/// Columns `t/t_f, F_stirap, F_tqd, F_tqd_fitted`.
pub fn comparison_csv(cmp: &MethodComparison, provenance: &Provenance) -> String {
    let mut out = provenance.header();
    out.push_str("t/t_f,F_stirap,F_tqd,F_tqd_fitted\n");
    for (k, t) in cmp.stirap.times.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            num(t / cmp.t_f),
            num(cmp.stirap.fidelity[k]),
            num(cmp.tqd_exact.fidelity[k]),
            num(cmp.tqd_fitted.fidelity[k])
        );
    }
    out
}

/// Columns `deviation, F_<parameter>...`; failed runs are `nan`.
pub fn robustness_csv(curves: &RobustnessCurves, provenance: &Provenance) -> String {
    let mut out = provenance.clone().with("baseline_fidelity", num(curves.baseline)).header();
    let names: Vec<String> = curves.curves.iter().map(|(p, _)| format!("F_{}", p.name())).collect();
    let _ = writeln!(out, "deviation,{}", names.join(","));
    for (k, d) in curves.deviations.iter().enumerate() {
        let values: Vec<String> = curves.curves.iter().map(|(_, c)| status(&c[k]).0).collect();
        let _ = writeln!(out, "{},{}", num(*d), values.join(","));
    }
    out
}

/// Sampled pulse schedules on the export grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseTables {
    pub times: Vec<f64>,
    pub omega_a: Vec<f64>,
    pub omega_b: Vec<f64>,
    pub theta: Vec<f64>,
    pub theta_dot: Vec<f64>,
    /// |Ω′_A| of the exact TQD pulses.
    pub tqd_abs_a: Vec<f64>,
    /// Ω′_B of the exact TQD pulses.
    pub tqd_b: Vec<f64>,
    /// Ω″_B of the fitted pulses.
    pub fitted_b: Vec<f64>,
}

pub fn pulse_tables(scenario: &Scenario) -> Result<PulseTables> {
    let p = scenario.stirap();
    p.validate()?;
    let delta = scenario.params.delta;
    let times: Vec<f64> = sample_times(p.t_f, EXPORT_SAMPLES).collect();
    let mut tables = PulseTables {
        times: times.clone(),
        omega_a: Vec::new(),
        omega_b: Vec::new(),
        theta: Vec::new(),
        theta_dot: Vec::new(),
        tqd_abs_a: Vec::new(),
        tqd_b: Vec::new(),
        fitted_b: Vec::new(),
    };
    for t in times {
        let (a, b) = stirap_amplitudes(&p, t);
        let (ta, tb) = tqd_amplitudes(&p, delta, t)?;
        tables.omega_a.push(a);
        tables.omega_b.push(b);
        tables.theta.push(mixing_angle(&p, t));
        tables.theta_dot.push(mixing_angle_rate(&p, t));
        tables.tqd_abs_a.push(ta.norm());
        tables.tqd_b.push(tb);
        tables.fitted_b.push(scenario.fitted.value(t));
    }
    Ok(tables)
}

impl PulseTables {
    /// Columns `t*g, Omega_A, Omega_B, theta, theta_dot`.
    pub fn stirap_csv(&self, provenance: &Provenance) -> String {
        let mut out = provenance.header();
        out.push_str("t*g,Omega_A,Omega_B,theta,theta_dot\n");
        for k in 0..self.times.len() {
            let row = [self.times[k], self.omega_a[k], self.omega_b[k], self.theta[k], self.theta_dot[k]];
            let _ = writeln!(out, "{}", row.map(num).join(","));
        }
        out
    }

    /// Columns `t*g, abs_OmegaP_A, OmegaP_B, OmegaPP_B` (|Ω′_A|, Ω′_B, fitted Ω″_B).
    pub fn tqd_csv(&self, provenance: &Provenance) -> String {
        let mut out = provenance.header();
        out.push_str("t*g,abs_OmegaP_A,OmegaP_B,OmegaPP_B\n");
        for k in 0..self.times.len() {
            let row = [self.times[k], self.tqd_abs_a[k], self.tqd_b[k], self.fitted_b[k]];
            let _ = writeln!(out, "{}", row.map(num).join(","));
        }
        out
    }
}

/// Layout of the data file a gnuplot script reads.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlotKind {
    StirapPulses,
    TqdPulses,
    Populations,
    Comparison,
    Curve,
    Surface,
    Robustness,
}

/// A standalone gnuplot script that renders `csv` into `png`.
pub fn gnuplot_script(kind: PlotKind, csv: &str, png: &str, x_label: &str, y_label: &str) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output '{png}'");
    let _ = writeln!(s, "set key outside right autotitle columnhead");
    let _ = writeln!(s, "set xlabel '{x_label}'");
    let _ = writeln!(s, "set ylabel '{y_label}'");
    let body = match kind {
        PlotKind::StirapPulses => format!(
            "plot '{csv}' using 1:2 with lines title 'Omega_A', \\\n     '' using 1:3 with lines title 'Omega_B', \\\n     '' using 1:4 with lines title 'theta', \\\n     '' using 1:5 with lines title 'theta dot'\n"
        ),
        PlotKind::TqdPulses => format!(
            "plot '{csv}' using 1:2 with lines title \"|Omega'_A|\", \\\n     '' using 1:3 with lines title \"Omega'_B\", \\\n     '' using 1:4 with lines dt 2 title \"Omega''_B (fit)\"\n"
        ),
        PlotKind::Populations => {
            let mut lines = vec![format!("plot '{csv}' using 1:2 with lines title 'phi1'")];
            for k in 2..=8 {
                lines.push(format!("     '' using 1:{} with lines title 'phi{k}'", k + 1));
            }
            lines.push("     '' using 1:10 with lines title 'leaked'".to_string());
            lines.join(", \\\n") + "\n"
        }
        PlotKind::Comparison => format!(
            "set yrange [0:1.05]\nplot '{csv}' using 1:2 with lines title 'STIRAP', \\\n     '' using 1:3 with lines title 'TQD', \\\n     '' using 1:4 with lines dt 2 title 'TQD (fitted)'\n"
        ),
        PlotKind::Curve => format!("plot '{csv}' using 1:2 with linespoints title 'F'\n"),
        PlotKind::Surface => format!(
            "set view map\nset cblabel 'F'\nset pm3d map\nsplot '{csv}' using 1:2:3 with pm3d notitle\n"
        ),
        PlotKind::Robustness => format!(
            "plot for [k=2:5] '{csv}' using 1:k with linespoints title columnheader(k)\n"
        ),
    };
    s.push_str(&body);
    s
}
