use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use gnli_core::config::{MonteCarloSection, Polarization, PsdSection};
use gnli_core::moments::{
    pairing_sum_check, standard_pair_cases, standard_process_bank, standard_six_field_cases,
    theorem1_discrete_check, theorem3_discrete_check, CheckReport,
};
use gnli_core::montecarlo::{estimate_nli_psd, z_score, PerturbationMode, TrialConfig};
use gnli_core::{nli_psd_x, nli_psd_y, GnRequest, KernelModel, NliError, RunConfig};

use crate::args::{Common, ModeArg, MomentsArgs, MonteCarloArgs, TheoremArg};
use crate::output::{num, CsvTable};

pub const EXIT_CONFIG: u8 = 1;
pub const EXIT_CONVERGENCE: u8 = 2;
pub const EXIT_STATISTICAL: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    fn config(error: impl Into<anyhow::Error>) -> Self {
        Self {
            code: EXIT_CONFIG,
            error: error.into(),
        }
    }
}

impl From<NliError> for Failure {
    fn from(e: NliError) -> Self {
        let code = if e.is_convergence() { EXIT_CONVERGENCE } else { EXIT_CONFIG };
        Self {
            code,
            error: e.into(),
        }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Self::config(error)
    }
}

type Outcome = Result<(), Failure>;

struct Loaded {
    config: RunConfig,
    base_dir: PathBuf,
}

fn load(path: &Path) -> Result<Loaded, Failure> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    let mut config: RunConfig =
        toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
    let base_dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."))
        .to_path_buf();
    config.resolve_paths(&base_dir);
    config.validate(&base_dir)?;
    Ok(Loaded { config, base_dir })
}

fn header(table: &mut CsvTable, command: &str, config: Option<&RunConfig>) -> Result<(), Failure> {
    table.comment(&format!("gnli {} {command}", env!("CARGO_PKG_VERSION")));
    if let Some(config) = config {
        let text = toml::to_string(config).map_err(|e| Failure::config(anyhow!(e)))?;
        table.comment("resolved configuration:");
        table.comment(&text);
    }
    Ok(())
}

fn kernel_model(config: &RunConfig) -> Result<KernelModel, Failure> {
    Ok(KernelModel::with_options(
        config.link.to_link()?,
        config.kernel.method,
        config.kernel.tolerance,
        KernelModel::DEFAULT_MAX_PANELS,
    )?)
}

pub fn kernel(args: &Common) -> Outcome {
    let Loaded { config, .. } = load(&args.config)?;
    let model = kernel_model(&config)?;
    let k0 = model.k0();
    let mut table = CsvTable::new(vec!["F_Hz2", "re_K", "im_K", "re_eta", "im_eta", "abs_eta"]);
    header(&mut table, "kernel", Some(&config))?;
    for f in config.kernel.grid()? {
        let k = model.kernel(f)?;
        let eta = k / k0;
        table.rows.push(vec![num(f), num(k.re), num(k.im), num(eta.re), num(eta.im), num(eta.norm())]);
    }
    table.write_atomic(&args.output)?;
    Ok(())
}

pub fn psd(args: &Common) -> Outcome {
    let Loaded { config, base_dir } = load(&args.config)?;
    let section: &PsdSection = config
        .psd
        .as_ref()
        .ok_or_else(|| Failure::config(anyhow!("config has no [psd] section")))?;
    let signal = config.signal.to_psd(&base_dir)?;
    let model = kernel_model(&config)?;
    let req = GnRequest {
        psd: &signal,
        kernel: &model,
        output_grid: section.grid()?,
        include_phase_term: section.include_phase_term,
        inner_grid_step: section.inner_step_hz,
    };
    let result = match section.polarization {
        Polarization::X => nli_psd_x(&req)?,
        Polarization::Y => nli_psd_y(&req)?,
    };
    let mut table = CsvTable::new(vec![
        "f_Hz",
        "spm",
        "xpolm",
        "phase",
        "total_normalized",
        "total_absolute_W_per_Hz",
    ]);
    header(&mut table, "psd", Some(&config))?;
    let absolute = result.total_absolute();
    for i in 0..result.len() {
        table.rows.push(vec![
            num(result.frequencies[i]),
            num(result.spm[i]),
            num(result.xpolm[i]),
            num(result.phase[i]),
            num(result.total[i]),
            num(absolute[i]),
        ]);
    }
    table.write_atomic(&args.output)?;
    Ok(())
}

pub fn montecarlo(args: &MonteCarloArgs) -> Outcome {
    let Loaded { mut config, base_dir } = load(&args.common.config)?;
    let mut section = match (config.montecarlo.take(), args.spacing_hz) {
        (Some(s), _) => s,
        (None, Some(spacing_hz)) => MonteCarloSection {
            lines: 64,
            spacing_hz,
            trials: 2000,
            seed: 0,
            mode: PerturbationMode::Rp1,
            polarization: Polarization::X,
            edge_margin: TrialConfig::DEFAULT_EDGE_MARGIN,
        },
        (None, None) => {
            return Err(Failure::config(anyhow!(
                "line spacing missing: pass --spacing-hz or add a [montecarlo] section"
            )))
        }
    };
    if let Some(m) = args.mode {
        section.mode = match m {
            ModeArg::Rp1 => PerturbationMode::Rp1,
            ModeArg::Erp1 => PerturbationMode::DpErp1,
        };
    }
    section.lines = args.lines.unwrap_or(section.lines);
    section.spacing_hz = args.spacing_hz.unwrap_or(section.spacing_hz);
    section.trials = args.trials.unwrap_or(section.trials);
    section.seed = args.seed.unwrap_or(section.seed);
    config.montecarlo = Some(section.clone());

    let signal = config.signal.to_psd(&base_dir)?;
    let model = kernel_model(&config)?;
    let mut trial = TrialConfig::new(
        section.spacing_hz,
        section.lines,
        section.trials,
        section.seed,
        section.mode,
    );
    trial.edge_margin = section.edge_margin;
    let estimate = estimate_nli_psd(&trial, &signal, &model)?;
    let req = GnRequest {
        psd: &signal,
        kernel: &model,
        output_grid: estimate.frequencies.clone(),
        include_phase_term: section.mode == PerturbationMode::Rp1,
        inner_grid_step: section.spacing_hz,
    };
    let (mc, analytic) = match section.polarization {
        Polarization::X => (&estimate.x, nli_psd_x(&req)?),
        Polarization::Y => (&estimate.y, nli_psd_y(&req)?),
    };

    let mut table = CsvTable::new(vec!["f_Hz", "mc_mean", "mc_stderr", "analytic", "abs_z_score"]);
    header(&mut table, "montecarlo", Some(&config))?;
    for (i, f) in estimate.frequencies.iter().enumerate() {
        table.rows.push(vec![
            num(*f),
            num(mc[i].mean),
            num(mc[i].stderr),
            num(analytic.total[i]),
            num(z_score(mc[i], analytic.total[i])),
        ]);
    }
    table.write_atomic(&args.common.output)?;
    Ok(())
}

pub fn moments(args: &MomentsArgs) -> Outcome {
    let config = match &args.config {
        Some(path) => Some(load(path)?.config),
        None => None,
    };
    let report: CheckReport = match args.theorem {
        TheoremArg::One => {
            let bank = standard_process_bank(args.grid_points, args.seed)?;
            theorem1_discrete_check(&bank, &standard_pair_cases(), args.trials, args.seed)?
        }
        TheoremArg::Two => pairing_sum_check(args.k, args.ensembles, args.trials, args.seed)?,
        TheoremArg::Three => {
            let bank = standard_process_bank(args.grid_points, args.seed)?;
            theorem3_discrete_check(&bank, &standard_six_field_cases(), args.trials, args.seed)?
        }
    };

    let mut table = CsvTable::new(vec![
        "check",
        "expected_re",
        "expected_im",
        "mean_re",
        "mean_im",
        "stderr_re",
        "stderr_im",
        "z_score",
        "pass",
    ]);
    header(&mut table, "moments", config.as_ref())?;
    let theorem = match args.theorem {
        TheoremArg::One => 1,
        TheoremArg::Two => 2,
        TheoremArg::Three => 3,
    };
    table.comment(&format!(
        "theorem = {theorem}, k = {}, trials = {}, seed = {}, ensembles = {}, grid_points = {}",
        args.k, args.trials, args.seed, args.ensembles, args.grid_points
    ));
    for c in &report.checks {
        println!("[{}] z = {:.3}  {}", if c.passed() { "PASS" } else { "FAIL" }, c.z, c.label);
        table.rows.push(vec![
            c.label.clone(),
            num(c.expected.re),
            num(c.expected.im),
            num(c.estimate.mean.re),
            num(c.estimate.mean.im),
            num(c.estimate.stderr.re),
            num(c.estimate.stderr.im),
            num(c.z),
            c.passed().to_string(),
        ]);
    }
    table.write_atomic(&args.output)?;
    if report.all_passed() {
        Ok(())
    } else {
        Err(Failure {
            code: EXIT_STATISTICAL,
            error: anyhow!(
                "{} of {} checks exceeded the z-score threshold",
                report.checks.iter().filter(|c| !c.passed()).count(),
                report.checks.len()
            ),
        })
    }
}
