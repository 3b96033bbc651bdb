use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use tqd_core::experiments::{
    comparison_csv, gnuplot_script, grid_csv, pulse_tables, robustness_csv, run_decoherence_surface,
    run_fidelity_surface, run_method_comparison, run_robustness_scan, sim_result_csv, simulate, Axis, Deviation,
    DeviationSpec, PlotKind, Provenance, SweepGrid, SweepSpec,
};
use tqd_core::pulses::PulseKind;
use tqd_core::verify;

use crate::config::RunConfig;
use crate::error::CliError;

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects every file of one command and finishes with its manifest.
/// All writes happen on the calling thread.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<(String, String)>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|source| CliError::Io { path, source })?;
        self.written.push((name.to_string(), sha256_hex(contents.as_bytes())));
        Ok(())
    }

    /// `key = value` lines: command, version, the input hash, every resolved
    /// config value and the hash of each output.
    pub fn finish(mut self, name: &str, command: &str, config: &RunConfig) -> Result<(), CliError> {
        let inputs = format!("command = {command}\n{}", config.canonical());
        let mut text = format!(
            "command = {command}\nversion = {} {}\ninputs_sha256 = {}\n",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION"),
            sha256_hex(inputs.as_bytes())
        );
        for (k, v) in &config.resolved {
            if k != "out" {
                text.push_str(&format!("config.{k} = {v}\n"));
            }
        }
        for (file, hash) in &self.written {
            text.push_str(&format!("output.{file} = sha256:{hash}\n"));
        }
        let written = std::mem::take(&mut self.written);
        self.write(name, &text)?;
        self.written = written;
        Ok(())
    }
}

pub fn pulses(config: &RunConfig) -> Result<(), CliError> {
    let s = &config.scenario;
    let tables = pulse_tables(s)?;
    let mut prov = Provenance::default();
    for (k, v) in config.resolved.iter().filter(|(k, _)| !k.starts_with("sweep.") && k != "out") {
        prov.push(k, v);
    }
    let mut out = Outputs::new(&config.out)?;
    out.write("pulses_stirap.csv", &tables.stirap_csv(&prov))?;
    out.write("pulses_tqd.csv", &tables.tqd_csv(&prov))?;
    out.write(
        "pulses_stirap.gp",
        &gnuplot_script(PlotKind::StirapPulses, "pulses_stirap.csv", "pulses_stirap.png", "t g", "Omega / g"),
    )?;
    out.write(
        "pulses_tqd.gp",
        &gnuplot_script(PlotKind::TqdPulses, "pulses_tqd.csv", "pulses_tqd.png", "t g", "Omega / g"),
    )?;
    out.finish("pulses.manifest", "pulses", config)?;
    let peak = tables.tqd_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let fitted_peak = tables.fitted_b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("peak_omega_prime_b={peak:.6}");
    println!("peak_fitted_omega_b={fitted_peak:.6}");
    println!("theta_start={:.6e}", tables.theta[0]);
    println!("theta_end={:.6}", tables.theta.last().copied().unwrap_or(f64::NAN));
    Ok(())
}

pub fn simulate_cmd(config: &RunConfig, kind: PulseKind, open: bool) -> Result<(), CliError> {
    let s = &config.scenario;
    let result = simulate(s, kind, open)?;
    let stem = format!("simulate_{}_{}", kind.name(), if open { "open" } else { "closed" });
    let prov = s.provenance(kind, open);
    let mut out = Outputs::new(&config.out)?;
    out.write(&format!("{stem}.csv"), &sim_result_csv(&result, &prov))?;
    out.write(
        &format!("{stem}.gp"),
        &gnuplot_script(PlotKind::Populations, &format!("{stem}.csv"), &format!("{stem}.png"), "t g", "population"),
    )?;
    let command = format!("simulate --method {} --{}", kind.name(), if open { "open" } else { "closed" });
    out.finish(&format!("{stem}.manifest"), &command, config)?;
    let d = &result.diagnostics;
    if d.positivity_warning {
        eprintln!("warning: density matrix eigenvalue fell to {:e}", d.min_eigenvalue.unwrap_or(f64::NAN));
    }
    eprintln!("steps={} dt={} max_drift={:e} integrated_dim={}", d.steps, d.dt, d.max_drift, d.integrated_dim);
    println!("final_fidelity={:.10}", result.final_fidelity());
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    /// Closed-system fidelity over t_f × Δ, exact TQD pulses.
    #[value(name = "4a")]
    Surface,
    /// Fidelity against Δ at the configured t_f.
    #[value(name = "4b")]
    DeltaScan,
    /// Fidelity against t_f at the configured Δ.
    #[value(name = "4c")]
    DurationScan,
    /// Robustness of the fitted pulses to parameter deviations.
    #[value(name = "8")]
    Robustness,
    /// Lindblad fidelity over κ × γ, fitted pulses.
    #[value(name = "9")]
    Decoherence,
    /// STIRAP and TQD fidelity traces over the same t_f.
    #[value(name = "7")]
    Comparison,
}

impl Figure {
    fn stem(self) -> &'static str {
        match self {
            Figure::Surface => "fig4a",
            Figure::DeltaScan => "fig4b",
            Figure::DurationScan => "fig4c",
            Figure::Robustness => "fig8",
            Figure::Decoherence => "fig9",
            Figure::Comparison => "fig7",
        }
    }

    fn flag(self) -> &'static str {
        &self.stem()[3..]
    }
}

fn capped(spec: SweepSpec, cap: usize) -> SweepSpec {
    SweepSpec { axis_cap: cap, ..spec }
}

fn grid_summary(grid: &SweepGrid) {
    let ok: Vec<f64> = grid.cells.iter().filter_map(|c| c.as_ref().ok().copied()).collect();
    let best = ok.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("cells={} failed={} max_fidelity={best:.10}", grid.cells.len(), grid.failures());
}

pub fn sweep(config: &RunConfig, figure: Figure) -> Result<(), CliError> {
    let s = &config.scenario;
    let stem = figure.stem();
    let csv_name = format!("{stem}.csv");
    let png_name = format!("{stem}.png");
    let cap = config.axis_cap;
    let (csv, plot) = match figure {
        Figure::Surface | Figure::DeltaScan | Figure::DurationScan | Figure::Decoherence => {
            let (spec, kind, open, plot, labels) = match figure {
                Figure::Surface => (
                    SweepSpec::grid(Axis::TFinal, config.sweep_t_f.values(), Axis::Delta, config.sweep_delta.values()),
                    PulseKind::TqdExact,
                    false,
                    PlotKind::Surface,
                    ("t_f g", "Delta / g"),
                ),
                Figure::DeltaScan => (
                    SweepSpec::line(Axis::Delta, config.sweep_delta.values()),
                    PulseKind::TqdExact,
                    false,
                    PlotKind::Curve,
                    ("Delta / g", "F"),
                ),
                Figure::DurationScan => (
                    SweepSpec::line(Axis::TFinal, config.sweep_t_f.values()),
                    PulseKind::TqdExact,
                    false,
                    PlotKind::Curve,
                    ("t_f g", "F"),
                ),
                _ => (
                    SweepSpec::grid(Axis::Kappa, config.sweep_kappa.values(), Axis::Gamma, config.sweep_gamma.values()),
                    PulseKind::TqdFitted,
                    true,
                    PlotKind::Surface,
                    ("kappa / g", "gamma / g"),
                ),
            };
            let spec = capped(spec, cap);
            let grid = if open { run_decoherence_surface(s, &spec)? } else { run_fidelity_surface(s, &spec)? };
            grid_summary(&grid);
            let prov = s.provenance(kind, open).with("figure", figure.flag());
            (grid_csv(&grid, &prov), gnuplot_script(plot, &csv_name, &png_name, labels.0, labels.1))
        }
        Figure::Robustness => {
            let deviations = config.sweep_deviation.values();
            if deviations.len() > cap {
                return Err(tqd_core::Error::ResourceLimit(format!(
                    "{} deviations requested, cap is {cap}",
                    deviations.len()
                ))
                .into());
            }
            let spec = DeviationSpec { parameters: Deviation::ALL.to_vec(), deviations };
            let curves = run_robustness_scan(s, &spec)?;
            println!("baseline_fidelity={:.10}", curves.baseline);
            let prov = s.provenance(PulseKind::TqdFitted, false).with("figure", figure.flag());
            (
                robustness_csv(&curves, &prov),
                gnuplot_script(PlotKind::Robustness, &csv_name, &png_name, "relative deviation", "F"),
            )
        }
        Figure::Comparison => {
            let cmp = run_method_comparison(s)?;
            let [stirap, exact, fitted] = cmp.finals();
            println!("final_stirap={stirap:.10}\nfinal_tqd={exact:.10}\nfinal_tqd_fitted={fitted:.10}");
            let prov = s.provenance(PulseKind::TqdExact, false).with("figure", figure.flag());
            (
                comparison_csv(&cmp, &prov),
                gnuplot_script(PlotKind::Comparison, &csv_name, &png_name, "t / t_f", "F"),
            )
        }
    };
    let mut out = Outputs::new(&config.out)?;
    out.write(&csv_name, &csv)?;
    out.write(&format!("{stem}.gp"), &plot)?;
    out.finish(&format!("{stem}.manifest"), &format!("sweep --figure {}", figure.flag()), config)?;
    Ok(())
}

pub fn verify_cmd(config: &RunConfig) -> Result<(), CliError> {
    let report = verify::run_all(&config.scenario);
    print!("{}", report.text());
    let mut out = Outputs::new(&config.out)?;
    out.write("verify_report.txt", &report.key_values())?;
    out.finish("verify.manifest", "verify", config)?;
    let failed = report.criteria.iter().filter(|c| !c.passed()).count();
    if failed > 0 {
        return Err(CliError::Verification(failed));
    }
    Ok(())
}
