//! Reproducible experiment campaigns: JSON configs, figure presets, CSV and
//! optional SVG emission, and a checksummed result manifest.
//!
//! The CSV files are the interface contract; identical config + seed yields
//! byte-identical CSVs. Figure presets (`fig2` .. `fig10`) pin every
//! parameter the source figures state and fill the unstated ones with
//! explicit defaults, all echoed into the manifest.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ame::{self, AmeOptions, BathParams};
use crate::error::{Error, Result};
use crate::ising::{build_pfc, low_energy_census, AnnealSchedule, PfcParams};
use crate::plot::{line_chart, Series};
use crate::semiclassical::{self, angle_grid, CoherentAngles};
use crate::spectral;
use crate::svmc::{self, CampaignSpec, SvmcVariant};
use crate::thermo;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[clap(rename_all = "snake_case")]
pub enum ExperimentKind {
    Thermo,
    Spectrum,
    PhaseDiagram,
    Landscape,
    TraceNorm,
    SvmcSweep,
    SvmcScaling,
    QuantumClosed,
    QuantumOpen,
    RateProfile,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
    Fig9,
    Fig10,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Thermo => "thermo",
            ExperimentKind::Spectrum => "spectrum",
            ExperimentKind::PhaseDiagram => "phase_diagram",
            ExperimentKind::Landscape => "landscape",
            ExperimentKind::TraceNorm => "trace_norm",
            ExperimentKind::SvmcSweep => "svmc_sweep",
            ExperimentKind::SvmcScaling => "svmc_scaling",
            ExperimentKind::QuantumClosed => "quantum_closed",
            ExperimentKind::QuantumOpen => "quantum_open",
            ExperimentKind::RateProfile => "rate_profile",
            ExperimentKind::Fig2 => "fig2",
            ExperimentKind::Fig3 => "fig3",
            ExperimentKind::Fig4 => "fig4",
            ExperimentKind::Fig5 => "fig5",
            ExperimentKind::Fig6 => "fig6",
            ExperimentKind::Fig7 => "fig7",
            ExperimentKind::Fig8 => "fig8",
            ExperimentKind::Fig9 => "fig9",
            ExperimentKind::Fig10 => "fig10",
        }
    }

    fn is_preset(self) -> bool {
        matches!(
            self,
            ExperimentKind::Fig2
                | ExperimentKind::Fig3
                | ExperimentKind::Fig4
                | ExperimentKind::Fig5
                | ExperimentKind::Fig6
                | ExperimentKind::Fig7
                | ExperimentKind::Fig8
                | ExperimentKind::Fig9
                | ExperimentKind::Fig10
        )
    }
}

/// Declarative description of one experiment run.
///
/// Generic kinds require `params` (and `bath` where open-system dynamics is
/// involved); figure presets fill every unset field themselves.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub params: Option<PfcParams>,
    #[serde(default)]
    pub campaign: Option<CampaignSpec>,
    #[serde(default)]
    pub bath: Option<BathParams>,
    #[serde(default)]
    pub variants: Option<Vec<SvmcVariant>>,
    #[serde(default)]
    pub d_values: Option<Vec<f64>>,
    #[serde(default)]
    pub s_values: Option<Vec<f64>>,
    #[serde(default)]
    pub subsystem_values: Option<Vec<usize>>,
    #[serde(default)]
    pub beta_values: Option<Vec<f64>>,
    #[serde(default)]
    pub sweep_counts: Option<Vec<usize>>,
    #[serde(default)]
    pub anneal_times_ns: Option<Vec<f64>>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub plot: bool,
    #[serde(default)]
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            params: None,
            campaign: None,
            bath: None,
            variants: None,
            d_values: None,
            s_values: None,
            subsystem_values: None,
            beta_values: None,
            sweep_counts: None,
            anneal_times_ns: None,
            output_dir: None,
            seed: None,
            plot: false,
            threads: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Structural and range validation; collects every problem instead of
/// stopping at the first.
pub fn validate(config: &ExperimentConfig) -> std::result::Result<(), Vec<String>> {
    let mut errors = Vec::new();
    let kind = config.experiment;

    if let Some(params) = &config.params {
        if params.subsystems < 2 {
            errors.push(format!(
                "params.subsystems (M) must be >= 2, got {}",
                params.subsystems
            ));
        }
        if !(params.energy_scale > 0.0) {
            errors.push(format!(
                "params.energy_scale (R) must be positive, got {}",
                params.energy_scale
            ));
        }
        if !(params.perturbation > 0.0 && params.perturbation < 1.0) {
            errors.push(format!(
                "params.perturbation (d) must lie in (0, 1), got {}",
                params.perturbation
            ));
        }
    } else if !kind.is_preset() {
        errors.push("params is required for this experiment".into());
    }

    if let Some(campaign) = &config.campaign {
        if let Err(e) = campaign.validate() {
            errors.push(format!("campaign: {e}"));
        }
    }
    if let Some(bath) = &config.bath {
        if let Err(e) = bath.validate() {
            errors.push(format!("bath: {e}"));
        }
    } else if matches!(kind, ExperimentKind::QuantumOpen | ExperimentKind::RateProfile) {
        errors.push("bath is required for open-system experiments".into());
    }

    let check_range = |name: &str, values: &Option<Vec<f64>>, lo: f64, hi: f64,
                       errors: &mut Vec<String>| {
        if let Some(values) = values {
            if values.is_empty() {
                errors.push(format!("{name} must not be empty"));
            }
            for &v in values {
                if !(lo..=hi).contains(&v) || !v.is_finite() {
                    errors.push(format!("{name} entry {v} outside [{lo}, {hi}]"));
                }
            }
        }
    };
    check_range("d_values", &config.d_values, 1e-9, 1.0 - 1e-9, &mut errors);
    check_range("s_values", &config.s_values, 0.0, 1.0, &mut errors);
    check_range("beta_values", &config.beta_values, 1e-12, f64::INFINITY, &mut errors);
    check_range(
        "anneal_times_ns",
        &config.anneal_times_ns,
        1e-6,
        f64::INFINITY,
        &mut errors,
    );
    if let Some(counts) = &config.sweep_counts {
        if counts.is_empty() || counts.iter().any(|&c| c == 0) {
            errors.push("sweep_counts must be non-empty positive".into());
        }
    }
    if let Some(ms) = &config.subsystem_values {
        if ms.is_empty() || ms.iter().any(|&m| m < 2) {
            errors.push("subsystem_values entries must be >= 2".into());
        }
    }

    if errors.is_empty() {
        Ok(())
    } else {
        Err(errors)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProducedFile {
    pub path: String,
    pub sha256: String,
}

/// Record of one completed run: the resolved configuration, every produced
/// file with a content checksum, and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultManifest {
    pub experiment: String,
    pub config: ExperimentConfig,
    pub produced: Vec<ProducedFile>,
    pub wall_clock_seconds: f64,
    pub version: String,
    pub seed: u64,
}

struct Artifact {
    path: String,
    content: String,
}

/// Validate, resolve defaults, run the experiment, and write its outputs and
/// manifest under the configured output directory.
pub fn run(config: &ExperimentConfig) -> Result<ResultManifest> {
    validate(config).map_err(Error::Validation)?;
    let mut resolved = config.clone();
    resolve_defaults(&mut resolved);

    if let Some(threads) = resolved.threads {
        // First initialization wins; later runs in the same process reuse it.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global();
    }

    let started = Instant::now();
    let mut artifacts = dispatch(&resolved)?;
    if resolved.plot {
        artifacts.extend(render_plots(&resolved, &artifacts));
    }

    let out_dir = resolved
        .output_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("pfc-lab-out").join(resolved.experiment.name()));
    fs::create_dir_all(&out_dir)?;

    let mut written: Vec<PathBuf> = Vec::new();
    let mut produced = Vec::new();
    for artifact in &artifacts {
        let path = out_dir.join(&artifact.path);
        if let Err(e) = fs::write(&path, &artifact.content) {
            for p in &written {
                let _ = fs::remove_file(p);
            }
            return Err(e.into());
        }
        written.push(path);
        produced.push(ProducedFile {
            path: artifact.path.clone(),
            sha256: sha256_hex(&artifact.content),
        });
    }

    let manifest = ResultManifest {
        experiment: resolved.experiment.name().to_string(),
        seed: resolved.seed.unwrap_or(0),
        config: resolved,
        produced,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        version: env!("CARGO_PKG_VERSION").to_string(),
    };
    let manifest_json = serde_json::to_string_pretty(&manifest)?;
    let tmp = out_dir.join("manifest.json.tmp");
    fs::write(&tmp, &manifest_json)?;
    fs::rename(&tmp, out_dir.join("manifest.json"))?;
    Ok(manifest)
}

fn sha256_hex(content: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(content.as_bytes());
    let digest = hasher.finalize();
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn uniform_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

fn resolve_defaults(config: &mut ExperimentConfig) {
    use ExperimentKind::*;
    let kind = config.experiment;
    config.seed.get_or_insert(0);

    match kind {
        Fig2 => {
            config.params.get_or_insert(PfcParams {
                subsystems: 2,
                energy_scale: 1.0,
                perturbation: 0.09,
            });
            config
                .d_values
                .get_or_insert_with(|| (1..=49).map(|i| 0.02 * i as f64).collect());
            config.s_values.get_or_insert_with(|| uniform_grid(201));
        }
        Fig3 => {
            config.params.get_or_insert(PfcParams {
                subsystems: 2,
                energy_scale: 1.0,
                perturbation: 0.09,
            });
            // Panel times are not stated by the source figure; these span
            // the uni-modal, bi-modal, crossing, and classical stages.
            config
                .s_values
                .get_or_insert_with(|| vec![0.5, 0.78, 0.82, 0.841, 0.86, 1.0]);
        }
        Fig4 | Fig8 => {
            config.params.get_or_insert(PfcParams {
                subsystems: 3,
                energy_scale: 1.0,
                perturbation: 0.1,
            });
            config.subsystem_values.get_or_insert_with(|| vec![2, 4, 6, 8]);
            config
                .sweep_counts
                .get_or_insert_with(|| vec![10, 100, 1_000, 10_000, 100_000, 1_000_000]);
            config.variants.get_or_insert_with(|| {
                if kind == Fig4 {
                    vec![SvmcVariant::Svmc, SvmcVariant::SphericalSvmcTf]
                } else {
                    vec![SvmcVariant::SvmcTf, SvmcVariant::SphericalSvmc]
                }
            });
            config.campaign.get_or_insert(CampaignSpec {
                sweeps: 0,
                ..CampaignSpec::default()
            });
        }
        Fig5 => {
            config.params.get_or_insert(PfcParams {
                subsystems: 3,
                energy_scale: 1.0,
                perturbation: 0.1,
            });
            config.bath.get_or_insert_with(BathParams::default);
            config.anneal_times_ns.get_or_insert_with(|| vec![200.0]);
            config.sweep_counts.get_or_insert_with(|| vec![10_000]);
            config
                .variants
                .get_or_insert_with(|| vec![SvmcVariant::SphericalSvmcTf]);
            config.campaign.get_or_insert(CampaignSpec {
                sweeps: 10_000,
                ..CampaignSpec::default()
            });
        }
        Fig6 | Fig9 | Fig10 => {
            config.params.get_or_insert(PfcParams {
                subsystems: if kind == Fig10 { 2 } else { 3 },
                energy_scale: 1.0,
                perturbation: 0.1,
            });
            config
                .d_values
                .get_or_insert_with(|| vec![0.05, 0.1, 0.15, 0.227, 0.3]);
            config.bath.get_or_insert_with(BathParams::default);
            config
                .anneal_times_ns
                .get_or_insert_with(|| vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0]);
            config
                .sweep_counts
                .get_or_insert_with(|| vec![10, 100, 1_000, 10_000, 100_000, 1_000_000]);
            config.variants.get_or_insert_with(|| match kind {
                Fig6 => vec![SvmcVariant::Svmc, SvmcVariant::SphericalSvmcTf],
                Fig9 => vec![SvmcVariant::SvmcTf, SvmcVariant::SphericalSvmc],
                _ => SvmcVariant::ALL.to_vec(),
            });
            config.campaign.get_or_insert(CampaignSpec {
                sweeps: 0,
                ..CampaignSpec::default()
            });
        }
        Fig7 => {
            config.params.get_or_insert(PfcParams {
                subsystems: 3,
                energy_scale: 1.0,
                perturbation: 0.05,
            });
            config.bath.get_or_insert_with(BathParams::default);
            config.anneal_times_ns.get_or_insert_with(|| vec![200.0]);
        }
        Thermo => {
            config
                .beta_values
                .get_or_insert_with(|| vec![0.05, 0.1, 0.2, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0]);
        }
        Spectrum | PhaseDiagram => {
            config.s_values.get_or_insert_with(|| uniform_grid(201));
            if kind == PhaseDiagram {
                config
                    .d_values
                    .get_or_insert_with(|| (1..=49).map(|i| 0.02 * i as f64).collect());
            }
        }
        Landscape => {
            config
                .s_values
                .get_or_insert_with(|| vec![0.5, 0.78, 0.82, 0.841, 0.86, 1.0]);
        }
        TraceNorm => {
            config
                .s_values
                .get_or_insert_with(|| vec![0.830, 0.835, 0.841, 0.845]);
        }
        SvmcSweep => {
            config.campaign.get_or_insert_with(CampaignSpec::default);
            config
                .variants
                .get_or_insert_with(|| vec![SvmcVariant::SphericalSvmcTf]);
        }
        SvmcScaling => {
            config
                .subsystem_values
                .get_or_insert_with(|| vec![2, 4, 6]);
            config
                .sweep_counts
                .get_or_insert_with(|| vec![10, 100, 1_000, 10_000, 100_000]);
            config
                .variants
                .get_or_insert_with(|| vec![SvmcVariant::Svmc, SvmcVariant::SphericalSvmcTf]);
            config.campaign.get_or_insert(CampaignSpec {
                sweeps: 0,
                n_samples: 2_000,
                repeats: 10,
                temperature_mk: 12.0,
                seed: 0,
            });
        }
        QuantumClosed | QuantumOpen => {
            config
                .anneal_times_ns
                .get_or_insert_with(|| vec![1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0, 200.0]);
        }
        RateProfile => {
            config.s_values.get_or_insert_with(|| uniform_grid(401));
        }
    }
    if let (Some(campaign), Some(seed)) = (config.campaign.as_mut(), config.seed) {
        if campaign.seed == 0 {
            campaign.seed = seed;
        }
    }
}

fn dispatch(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    use ExperimentKind::*;
    match config.experiment {
        Thermo => run_thermo(config),
        Spectrum => run_spectrum(config),
        PhaseDiagram | Fig2 => run_phase_diagram(config),
        Landscape | Fig3 => run_landscape(config),
        TraceNorm => run_trace_norm(config),
        SvmcSweep => run_svmc_sweep(config),
        SvmcScaling | Fig4 | Fig8 => run_svmc_scaling(config),
        QuantumClosed => run_quantum(config, false),
        QuantumOpen => run_quantum(config, true),
        RateProfile => run_rate_profile(config),
        Fig5 => run_fig5(config),
        Fig6 | Fig9 | Fig10 => run_endpoint_grid(config),
        Fig7 => run_fig7(config),
    }
}

fn params_of(config: &ExperimentConfig) -> Result<PfcParams> {
    config
        .params
        .ok_or_else(|| Error::Validation(vec!["params is required".into()]))
}

fn run_thermo(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let base = params_of(config)?;
    let betas = config.beta_values.clone().expect("resolved");
    let params_list: Vec<PfcParams> = match &config.d_values {
        Some(ds) => ds
            .iter()
            .map(|&d| PfcParams {
                perturbation: d,
                ..base
            })
            .collect(),
        None => vec![base],
    };
    let rows = thermo::thermo_sweep(&params_list, &betas)?;
    Ok(vec![Artifact {
        path: "thermo.csv".into(),
        content: thermo::thermo_csv(&rows),
    }])
}

fn run_spectrum(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let s_values = config.s_values.clone().expect("resolved");
    let dim = 1usize << params.n_qubits();
    let k = dim.min((1 << params.subsystems) + 2);
    let rows: Vec<(f64, Vec<f64>)> = s_values
        .iter()
        .map(|&s| {
            spectral::snapshot(&problem, &schedule, s, k)
                .map(|snap| (s, snap.eigenvalues[..k].to_vec()))
        })
        .collect::<Result<_>>()?;
    let gap = spectral::min_gap(&problem, &schedule)?;
    let gap_csv = format!(
        "d,s_min,gap\n{},{},{}\n",
        params.perturbation, gap.s_min, gap.gap
    );
    Ok(vec![
        Artifact {
            path: "spectrum.csv".into(),
            content: spectral::spectrum_csv(&rows),
        },
        Artifact {
            path: "min_gap.csv".into(),
            content: gap_csv,
        },
    ])
}

fn run_phase_diagram(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let schedule = AnnealSchedule::linear();
    let d_values = config.d_values.clone().expect("resolved");
    let s_values = config.s_values.clone().expect("resolved");
    let diagram = spectral::phase_diagram(
        params.subsystems,
        params.energy_scale,
        &d_values,
        &s_values,
        &schedule,
    )?;

    let mut grid_csv = String::from("d,s,mag\n");
    for (di, &d) in diagram.d_values.iter().enumerate() {
        for (si, &s) in diagram.s_values.iter().enumerate() {
            grid_csv.push_str(&format!("{d},{s},{}\n", diagram.magnetization[di][si]));
        }
    }
    let mut boundary_csv = String::from("d,s_crossing,s_min,gap\n");
    for (di, &d) in diagram.d_values.iter().enumerate() {
        let problem = build_pfc(&PfcParams {
            perturbation: d,
            ..params
        })?;
        let gap = spectral::min_gap(&problem, &schedule)?;
        let crossing = diagram.crossings[di]
            .map(|c| c.to_string())
            .unwrap_or_default();
        boundary_csv.push_str(&format!("{d},{crossing},{},{}\n", gap.s_min, gap.gap));
    }
    Ok(vec![
        Artifact {
            path: "phase_diagram.csv".into(),
            content: grid_csv,
        },
        Artifact {
            path: "boundaries.csv".into(),
            content: boundary_csv,
        },
    ])
}

/// Endpoints for the scan line: through the two lowest potential minima, or
/// the full backbone-angle range through a single minimum.
fn hyperplane_endpoints(scan: &semiclassical::Landscape) -> (CoherentAngles, CoherentAngles) {
    if scan.local_minima.len() >= 2 {
        (scan.local_minima[1].0, scan.local_minima[0].0)
    } else {
        (
            CoherentAngles::new(scan.argmin.theta_aux, -std::f64::consts::PI),
            CoherentAngles::new(scan.argmin.theta_aux, std::f64::consts::PI),
        )
    }
}

fn run_landscape(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let schedule = AnnealSchedule::linear();
    let grid = angle_grid(201);
    let mut artifacts = Vec::new();
    for &s in config.s_values.as_ref().expect("resolved") {
        let scan = semiclassical::landscape(&params, &schedule, s, &grid);
        artifacts.push(Artifact {
            path: format!("landscape_s{s:.4}.csv"),
            content: semiclassical::landscape_csv(&scan, s, "V"),
        });
        let endpoints = hyperplane_endpoints(&scan);
        let profile = semiclassical::hyperplane_scan(&params, &schedule, s, endpoints, 201);
        let mut csv = format!(
            "# s = {s}, from = ({}, {}), to = ({}, {})\nt,V\n",
            endpoints.0.theta_aux,
            endpoints.0.theta_backbone,
            endpoints.1.theta_aux,
            endpoints.1.theta_backbone
        );
        for (t, v) in profile {
            csv.push_str(&format!("{t},{v}\n"));
        }
        artifacts.push(Artifact {
            path: format!("hyperplane_s{s:.4}.csv"),
            content: csv,
        });
    }
    Ok(artifacts)
}

fn run_trace_norm(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let grid = angle_grid(201);
    let mut artifacts = Vec::new();
    for &s in config.s_values.as_ref().expect("resolved") {
        let snap = spectral::snapshot(&problem, &schedule, s, 1)?;
        let scan = semiclassical::distance_landscape(&snap, &grid);
        artifacts.push(Artifact {
            path: format!("trace_norm_s{s:.4}.csv"),
            content: semiclassical::landscape_csv(&scan, s, "D"),
        });
        let potential_scan = semiclassical::landscape(&params, &schedule, s, &grid);
        let endpoints = hyperplane_endpoints(&potential_scan);
        let mut csv = format!(
            "# s = {s}, from = ({}, {}), to = ({}, {})\nt,V,D\n",
            endpoints.0.theta_aux,
            endpoints.0.theta_backbone,
            endpoints.1.theta_aux,
            endpoints.1.theta_backbone
        );
        for i in 0..201 {
            let t = i as f64 / 200.0;
            let angles = CoherentAngles::new(
                endpoints.0.theta_aux + t * (endpoints.1.theta_aux - endpoints.0.theta_aux),
                endpoints.0.theta_backbone
                    + t * (endpoints.1.theta_backbone - endpoints.0.theta_backbone),
            );
            let v = semiclassical::potential(&params, &schedule, s, &angles);
            let d = semiclassical::trace_norm_distance(&snap, &angles);
            csv.push_str(&format!("{t},{v},{d}\n"));
        }
        artifacts.push(Artifact {
            path: format!("trace_norm_hyperplane_s{s:.4}.csv"),
            content: csv,
        });
    }
    Ok(artifacts)
}

fn campaign_csv_row(
    variant: SvmcVariant,
    params: &PfcParams,
    sweeps: usize,
    spec: &CampaignSpec,
    result: &svmc::CampaignResult,
) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n",
        variant.name(),
        params.subsystems,
        params.energy_scale,
        params.perturbation,
        sweeps,
        result.p_ground.median,
        result.p_ground.lower,
        result.p_ground.upper,
        result.p_manifold.median,
        result.p_manifold.lower,
        result.p_manifold.upper,
        spec.n_samples,
        spec.repeats,
        spec.seed
    )
}

fn run_svmc_sweep(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let spec = config.campaign.expect("resolved");
    let variant = config.variants.as_ref().expect("resolved")[0];
    let result = svmc::campaign(&problem, variant, &spec)?;

    let mut csv = String::from(svmc::CAMPAIGN_CSV_HEADER);
    csv.push('\n');
    csv.push_str(&campaign_csv_row(variant, &params, spec.sweeps, &spec, &result));

    let histogram = svmc::readout_histogram(
        &problem,
        variant,
        spec.sweeps,
        spec.n_samples,
        spec.temperature_mk,
        spec.seed,
    )?;
    let census = low_energy_census(&problem)?;
    let manifold: std::collections::HashSet<usize> = census
        .first_excited
        .iter()
        .map(|c| c.index())
        .collect();
    let total: u64 = histogram.iter().sum();
    let mut hist_csv = String::from("state_index,energy,probability,is_ground,is_manifold\n");
    for (index, &count) in histogram.iter().enumerate() {
        hist_csv.push_str(&format!(
            "{index},{},{},{},{}\n",
            problem.energy_by_index(index),
            count as f64 / total as f64,
            u8::from(index == census.ground.index()),
            u8::from(manifold.contains(&index))
        ));
    }
    Ok(vec![
        Artifact {
            path: "campaign.csv".into(),
            content: csv,
        },
        Artifact {
            path: "histogram.csv".into(),
            content: hist_csv,
        },
    ])
}

fn run_svmc_scaling(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let base = config.params.unwrap_or(PfcParams {
        subsystems: 3,
        energy_scale: 1.0,
        perturbation: 0.1,
    });
    let spec_template = config.campaign.expect("resolved");
    let mut csv = String::from(svmc::CAMPAIGN_CSV_HEADER);
    csv.push('\n');
    for &m in config.subsystem_values.as_ref().expect("resolved") {
        let params = PfcParams {
            subsystems: m,
            ..base
        };
        let problem = build_pfc(&params)?;
        for &variant in config.variants.as_ref().expect("resolved") {
            for &sweeps in config.sweep_counts.as_ref().expect("resolved") {
                let spec = CampaignSpec {
                    sweeps,
                    ..spec_template
                };
                let result = svmc::campaign(&problem, variant, &spec)?;
                csv.push_str(&campaign_csv_row(variant, &params, sweeps, &spec, &result));
            }
        }
    }
    Ok(vec![Artifact {
        path: "scaling.csv".into(),
        content: csv,
    }])
}

fn trace_csv(trajectory: &ame::Trajectory, levels: usize) -> String {
    let mut csv = String::from("s");
    for j in 0..levels {
        csv.push_str(&format!(",P_E{j}"));
    }
    csv.push('\n');
    for (i, &s) in trajectory.s_values.iter().enumerate() {
        csv.push_str(&format!("{s}"));
        for j in 0..levels {
            csv.push_str(&format!(",{}", trajectory.populations[i][j]));
        }
        csv.push('\n');
    }
    csv
}

fn run_quantum(config: &ExperimentConfig, open: bool) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let gap = spectral::min_gap(&problem, &schedule)?;
    let outputs = ame::refined_grid(201, gap.s_min, 0.05, 200);
    let manifold_levels = 1usize << params.subsystems;
    let levels = (manifold_levels + 1).min(1 << params.n_qubits());

    let mut artifacts = Vec::new();
    let mut endpoint_csv = String::from("d,t_anneal_ns,P_ground_final,P_manifold_final\n");
    for &t in config.anneal_times_ns.as_ref().expect("resolved") {
        let trajectory = if open {
            let bath = config.bath.expect("validated");
            ame::evolve_ame(
                &problem,
                &schedule,
                &bath,
                t,
                &outputs,
                &AmeOptions::default(),
            )?
        } else {
            ame::evolve_closed(&problem, &schedule, t, &outputs)?
        };
        let last = trajectory.populations.last().expect("outputs nonempty");
        let p_ground = last[0];
        let p_manifold: f64 = last[1..levels.min(last.len())].iter().sum();
        endpoint_csv.push_str(&format!(
            "{},{t},{p_ground},{p_manifold}\n",
            params.perturbation
        ));
        artifacts.push(Artifact {
            path: format!(
                "{}_trace_t{t}.csv",
                if open { "ame" } else { "closed" }
            ),
            content: trace_csv(&trajectory, levels),
        });
    }
    artifacts.push(Artifact {
        path: "endpoints.csv".into(),
        content: endpoint_csv,
    });
    Ok(artifacts)
}

fn run_rate_profile(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let bath = config.bath.expect("validated");
    let s_values = config.s_values.clone().expect("resolved");
    let profile = ame::transition_rate_profile(&problem, &schedule, &bath, &s_values)?;
    let mut csv = String::from("s,gamma_10\n");
    for (s, rate) in profile {
        csv.push_str(&format!("{s},{rate}\n"));
    }
    Ok(vec![Artifact {
        path: "rate_profile.csv".into(),
        content: csv,
    }])
}

fn run_fig5(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let bath = config.bath.expect("resolved");
    let t_anneal = config.anneal_times_ns.as_ref().expect("resolved")[0];

    // Population snapshot just after the minimum gap.
    let gap = spectral::min_gap(&problem, &schedule)?;
    let mut outputs = ame::refined_grid(101, gap.s_min, 0.05, 100);
    outputs.push(0.83);
    outputs.sort_by(f64::total_cmp);
    outputs.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
    let trajectory = ame::evolve_ame(
        &problem,
        &schedule,
        &bath,
        t_anneal,
        &outputs,
        &AmeOptions::default(),
    )?;
    let idx = outputs
        .iter()
        .position(|&s| (s - 0.83).abs() < 1e-9)
        .expect("0.83 in grid");
    let mut csv = String::from("level,population\n");
    for (j, p) in trajectory.populations[idx].iter().enumerate().take(16) {
        csv.push_str(&format!("{j},{p}\n"));
    }
    let mut artifacts = vec![
        Artifact {
            path: "ame_populations_s0.83.csv".into(),
            content: csv,
        },
        Artifact {
            path: "ame_trace.csv".into(),
            content: trace_csv(&trajectory, (1 << params.subsystems) + 1),
        },
    ];

    // Classical histogram at matching sweep count.
    let mut histogram_config = config.clone();
    histogram_config.experiment = ExperimentKind::SvmcSweep;
    artifacts.extend(run_svmc_sweep(&histogram_config)?);
    Ok(artifacts)
}

fn run_endpoint_grid(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let base = params_of(config)?;
    let schedule = AnnealSchedule::linear();
    let bath = config.bath.expect("resolved");
    let spec_template = config.campaign.expect("resolved");
    let d_values = config.d_values.clone().expect("resolved");

    let mut closed_csv = String::from("d,t_anneal_ns,P_ground_final,P_manifold_final\n");
    let mut open_csv = closed_csv.clone();
    let mut svmc_csv = String::from(svmc::CAMPAIGN_CSV_HEADER);
    svmc_csv.push('\n');

    for &d in &d_values {
        let params = PfcParams {
            perturbation: d,
            ..base
        };
        let problem = build_pfc(&params)?;
        let gap = spectral::min_gap(&problem, &schedule)?;
        let outputs = ame::refined_grid(101, gap.s_min, 0.05, 200);
        let manifold_levels = 1usize << params.subsystems;
        let levels = (manifold_levels + 1).min(1 << params.n_qubits());

        for &t in config.anneal_times_ns.as_ref().expect("resolved") {
            let closed = ame::evolve_closed(&problem, &schedule, t, &outputs)?;
            let last = closed.populations.last().expect("nonempty");
            closed_csv.push_str(&format!(
                "{d},{t},{},{}\n",
                last[0],
                last[1..levels].iter().sum::<f64>()
            ));
            let open = ame::evolve_ame(
                &problem,
                &schedule,
                &bath,
                t,
                &outputs,
                &AmeOptions::default(),
            )?;
            let last = open.populations.last().expect("nonempty");
            open_csv.push_str(&format!(
                "{d},{t},{},{}\n",
                last[0],
                last[1..levels].iter().sum::<f64>()
            ));
        }
        for &variant in config.variants.as_ref().expect("resolved") {
            for &sweeps in config.sweep_counts.as_ref().expect("resolved") {
                let spec = CampaignSpec {
                    sweeps,
                    ..spec_template
                };
                let result = svmc::campaign(&problem, variant, &spec)?;
                svmc_csv.push_str(&campaign_csv_row(variant, &params, sweeps, &spec, &result));
            }
        }
    }
    Ok(vec![
        Artifact {
            path: "quantum_closed_endpoints.csv".into(),
            content: closed_csv,
        },
        Artifact {
            path: "quantum_open_endpoints.csv".into(),
            content: open_csv,
        },
        Artifact {
            path: "svmc_endpoints.csv".into(),
            content: svmc_csv,
        },
    ])
}

fn run_fig7(config: &ExperimentConfig) -> Result<Vec<Artifact>> {
    let params = params_of(config)?;
    let problem = build_pfc(&params)?;
    let schedule = AnnealSchedule::linear();
    let bath = config.bath.expect("resolved");
    let t_anneal = config.anneal_times_ns.as_ref().expect("resolved")[0];
    let beta = crate::units::inverse_temperature_ghz(bath.temperature_mk);

    let gap = spectral::min_gap(&problem, &schedule)?;
    let outputs = ame::refined_grid(201, gap.s_min, 0.05, 200);
    let trajectory = ame::evolve_ame(
        &problem,
        &schedule,
        &bath,
        t_anneal,
        &outputs,
        &AmeOptions::default(),
    )?;
    let rates = ame::transition_rate_profile(&problem, &schedule, &bath, &outputs)?;

    let mut csv = String::from("s,P0_ame,P0_gibbs,gamma_10\n");
    for (i, &s) in outputs.iter().enumerate() {
        let (_, p0_gibbs) = spectral::gibbs_state(&problem, &schedule, s, beta)?;
        csv.push_str(&format!(
            "{s},{},{p0_gibbs},{}\n",
            trajectory.populations[i][0], rates[i].1
        ));
    }
    Ok(vec![Artifact {
        path: "fig7_trace.csv".into(),
        content: csv,
    }])
}

/// Simple chart rendering for artifacts whose CSV shape is line-friendly.
fn render_plots(config: &ExperimentConfig, artifacts: &[Artifact]) -> Vec<Artifact> {
    let mut plots = Vec::new();
    for artifact in artifacts {
        if !artifact.path.ends_with(".csv") {
            continue;
        }
        let mut lines = artifact.content.lines().filter(|l| !l.starts_with('#'));
        let Some(header) = lines.next() else { continue };
        let columns: Vec<&str> = header.split(',').collect();
        if columns.len() < 2 {
            continue;
        }
        // Plot files with a leading abscissa column and numeric rows.
        let abscissa_ok = matches!(columns[0], "s" | "t" | "beta" | "sweeps" | "t_anneal_ns");
        if !abscissa_ok {
            continue;
        }
        let mut series: Vec<Series> = columns[1..]
            .iter()
            .map(|label| Series {
                label: (*label).to_string(),
                points: Vec::new(),
            })
            .collect();
        let mut rows = 0;
        for line in lines {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != columns.len() {
                continue;
            }
            let Ok(x) = fields[0].parse::<f64>() else { continue };
            rows += 1;
            for (i, field) in fields[1..].iter().enumerate() {
                if let Ok(y) = field.parse::<f64>() {
                    series[i].points.push((x, y));
                }
            }
        }
        if rows < 2 {
            continue;
        }
        let log_x = columns[0] == "sweeps";
        let chart = line_chart(
            &artifact.path,
            columns[0],
            "value",
            &series,
            log_x,
            false,
        );
        plots.push(Artifact {
            path: format!("{}.svg", artifact.path.trim_end_matches(".csv")),
            content: chart,
        });
    }
    let _ = config;
    plots
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_names_offending_fields() {
        let mut config = ExperimentConfig::new(ExperimentKind::Spectrum);
        config.params = Some(PfcParams {
            subsystems: 3,
            energy_scale: 1.0,
            perturbation: 1.5,
        });
        let errors = validate(&config).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("perturbation")));

        let config = ExperimentConfig::new(ExperimentKind::QuantumOpen);
        let errors = validate(&config).unwrap_err();
        assert!(errors.iter().any(|e| e.contains("bath")));
        assert!(errors.iter().any(|e| e.contains("params")));

        let config = ExperimentConfig::new(ExperimentKind::Fig4);
        assert!(validate(&config).is_ok());
    }

    #[test]
    fn malformed_json_is_an_error_not_a_panic() {
        assert!(ExperimentConfig::from_json("{ not json").is_err());
        assert!(ExperimentConfig::from_json("{\"experiment\": \"bogus\"}").is_err());
        assert!(
            ExperimentConfig::from_json("{\"experiment\": \"thermo\", \"unknown\": 1}").is_err()
        );
    }

    #[test]
    fn preset_resolution_fills_paper_values() {
        let mut config = ExperimentConfig::new(ExperimentKind::Fig5);
        resolve_defaults(&mut config);
        let params = config.params.unwrap();
        assert_eq!(params.subsystems, 3);
        assert_eq!(params.perturbation, 0.1);
        let bath = config.bath.unwrap();
        assert_eq!(bath.temperature_mk, 12.0);
        assert_eq!(bath.cutoff_ghz, 4.0);
        assert_eq!(bath.coupling, 1e-3);
        let campaign = config.campaign.unwrap();
        assert_eq!(campaign.sweeps, 10_000);
        assert_eq!(campaign.n_samples, 20_000);
        assert_eq!(campaign.repeats, 50);
    }

    #[test]
    fn sha_is_stable() {
        assert_eq!(
            sha256_hex("abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
