use std::fmt::Display;
use std::path::Path;

use anyhow::{Context, Result};
use gsd_core::compare::{compare_batch, CompareResult, DiffHistogram, Variant};
use gsd_core::dist::{moments, sample};
use gsd_core::envelope::variance_envelope;
use gsd_core::estimate::{
    log_likelihood, mle_gradient, moments_estimate, FitMethod, FitResult, GridConfig, GridEstimator,
};
use gsd_core::gof::{
    pp_plot_data, BoundKind, GofConfig, GofModel, GofResult, GsdEstimator, ModelFitter, PpPlot,
};
use gsd_core::matrix::{fit_matrix, random_parameters, simulate_matrix, MatrixFitConfig};
use gsd_core::probit::{
    probit_induced_moments, ProbitEstimator, ProbitFit, ProbitGrid, ProbitParams,
};
use gsd_core::rng::derive_seed;
use gsd_core::study::{matrix_rmsd_study, rmsd_study, MatrixStudyConfig, Probe, StudyConfig};
use gsd_core::{CountSample, GsdParams};
use serde::Serialize;
use thiserror::Error;

use crate::cli::{
    Bound, Cli, Command, Common, CountsArg, Estimator, Figure, Method, Model, PlotArgs, StudyKind,
    VariantArg,
};
use crate::input::{read_p_values, ScoreData};
use crate::report::{csv_table, Report};

/// Bad flag values or combinations; exit code 1.
#[derive(Debug, Error)]
#[error("{0}")]
pub struct UsageError(pub String);

fn usage(message: impl Display) -> anyhow::Error {
    UsageError(message.to_string()).into()
}

fn emit(common: &Common, text: &str) -> Result<()> {
    match &common.output {
        Some(path) => {
            std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn grid(common: &Common) -> Result<GridConfig> {
    let grid = GridConfig::uniform(common.grid_step);
    grid.validate()
        .map_err(|e| usage(format!("--grid-step: {e}")))?;
    Ok(grid)
}

fn check_params(psi: f64, rho: f64, m: u32) -> Result<GsdParams> {
    GsdParams::new(psi, rho, m).map_err(usage)
}

/// `[lo, hi]` in steps of `step`, always including `hi`.
fn axis(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(usage("step must be positive"));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    let mut values: Vec<f64> = (0..=count).map(|i| lo + i as f64 * step).collect();
    if hi - values[count] > 1e-9 {
        values.push(hi);
    } else {
        values[count] = hi;
    }
    Ok(values)
}

fn load_stimuli(common: &Common, counts: &CountsArg) -> Result<Vec<(String, CountSample)>> {
    match (&counts.counts, &common.input) {
        (Some(c), _) => {
            if c.len() != common.m as usize {
                return Err(usage(format!(
                    "--counts has {} entries but --m is {}",
                    c.len(),
                    common.m
                )));
            }
            let sample =
                CountSample::new(c.clone()).map_err(|e| usage(format!("--counts: {e}")))?;
            Ok(vec![("counts".to_string(), sample)])
        }
        (None, Some(path)) => Ok(ScoreData::read(path, common.m)?.stimuli().to_vec()),
        (None, None) => Err(usage("give --input or --counts")),
    }
}

fn require_input(common: &Common) -> Result<&Path> {
    common
        .input
        .as_deref()
        .ok_or_else(|| usage("--input is required"))
}

#[derive(Serialize)]
struct SharedSettings<'a> {
    m: u32,
    seed: u64,
    grid_step: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    mc: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<&'a str>,
}

impl<'a> SharedSettings<'a> {
    fn of(common: &'a Common, with_mc: bool) -> Self {
        Self {
            m: common.m,
            seed: common.seed,
            grid_step: common.grid_step,
            mc: with_mc.then_some(common.mc),
            input: common.input.as_deref().and_then(Path::to_str),
        }
    }
}

#[derive(Serialize)]
struct Settings<'a, T: Serialize> {
    #[serde(flatten)]
    common: SharedSettings<'a>,
    #[serde(flatten)]
    extra: T,
}

#[derive(Serialize)]
struct StimulusRecord<'a, T> {
    stimulus: &'a str,
    n: u64,
    counts: &'a [u64],
    #[serde(flatten)]
    result: T,
}

pub fn run(cli: &Cli) -> Result<()> {
    let common = &cli.common;
    match &cli.command {
        Command::Fit { method, counts } => fit(common, *method, counts),
        Command::Gof {
            model,
            estimator,
            plot,
            counts,
        } => gof(common, *model, *estimator, plot, counts),
        Command::Sample { psi, rho, size } => {
            let params = check_params(*psi, *rho, common.m)?;
            let scores = sample(&params, *size, common.seed)?;
            let line: Vec<String> = scores.iter().map(u32::to_string).collect();
            emit(common, &format!("{}\n", line.join(",")))
        }
        Command::Compare {
            n_small,
            variant,
            bins,
            counts,
        } => compare(common, n_small, *variant, *bins, counts),
        Command::MatrixFit {
            max_sweeps,
            tolerance,
        } => matrix_fit(common, *max_sweeps, *tolerance),
        Command::Simulate {
            stimuli,
            raters,
            psi,
            rho,
            truth,
        } => simulate(common, *stimuli, *raters, *psi, *rho, truth.as_deref()),
        Command::RmsdStudy {
            kind,
            sizes,
            replicates,
            cell_step,
            probe_psi,
            probe_rho,
        } => rmsd(
            common,
            *kind,
            sizes,
            *replicates,
            *cell_step,
            probe_psi,
            probe_rho,
        ),
        Command::ProbitFit { counts } => probit_fit(common, counts),
        Command::PpPlot { plot } => {
            let values = read_p_values(require_input(common)?)?;
            let data = plot_data(&values, plot)?;
            emit(common, &pp_csv(&data)?)
        }
        Command::Envelope { figure, step, size } => envelope(common, *figure, *step, *size),
    }
}

fn fit(common: &Common, method: Method, counts: &CountsArg) -> Result<()> {
    let stimuli = load_stimuli(common, counts)?;
    let mut estimator = GridEstimator::new(common.m, grid(common)?)?;
    let mut records = Vec::new();
    for (name, data) in &stimuli {
        let result = match method {
            Method::Moments => {
                let params = moments_estimate(data);
                FitResult {
                    params,
                    log_likelihood: log_likelihood(&params, data)?,
                    method: FitMethod::Moments,
                }
            }
            Method::Grid => estimator.fit(data)?,
            Method::Constrained => estimator
                .fit_constrained(data)
                .with_context(|| format!("stimulus `{name}`"))?,
            Method::Gradient => mle_gradient(data, &moments_estimate(data))?,
        };
        records.push(StimulusRecord {
            stimulus: name,
            n: data.n(),
            counts: data.counts(),
            result,
        });
    }
    #[derive(Serialize)]
    struct Extra {
        method: &'static str,
    }
    let method_name = match method {
        Method::Moments => "moments",
        Method::Grid => "grid",
        Method::Gradient => "gradient",
        Method::Constrained => "constrained",
    };
    let settings = Settings {
        common: SharedSettings::of(common, false),
        extra: Extra {
            method: method_name,
        },
    };
    emit(common, &Report::new("fit", settings, records).to_json()?)
}

fn bound_kind(bound: Bound) -> BoundKind {
    match bound {
        Bound::Pointwise => BoundKind::PointwiseBinomial,
        Bound::Dkw => BoundKind::Dkw,
    }
}

fn plot_data(p_values: &[f64], plot: &PlotArgs) -> Result<PpPlot> {
    pp_plot_data(p_values, plot.alpha, plot.points, bound_kind(plot.bound)).map_err(usage)
}

fn pp_csv(plot: &PpPlot) -> Result<String> {
    let rows = (0..plot.x.len()).map(|i| {
        [
            plot.x[i].to_string(),
            plot.ecdf[i].to_string(),
            plot.bound[i].to_string(),
        ]
    });
    Ok(csv_table(&["x", "ecdf", "bound"], rows)?)
}

fn gof(
    common: &Common,
    model: Model,
    estimator: Estimator,
    plot: &PlotArgs,
    counts: &CountsArg,
) -> Result<()> {
    let stimuli = load_stimuli(common, counts)?;
    let config = GofConfig {
        mc: common.mc,
        seed: common.seed,
        grid: grid(common)?,
        gsd_estimator: match estimator {
            Estimator::Grid => GsdEstimator::Grid,
            Estimator::Constrained => GsdEstimator::ConstrainedGrid,
        },
        probit_grid: None,
    };
    let core_model = match model {
        Model::Gsd => GofModel::Gsd,
        Model::Probit => GofModel::OrderedProbit,
    };
    if common.mc == 0 {
        return Err(usage("--mc must be positive"));
    }
    let mut fitter = ModelFitter::new(core_model, common.m, &config)?;
    let mut records = Vec::new();
    for (index, (name, data)) in stimuli.iter().enumerate() {
        let result: GofResult = fitter
            .bootstrap_g_test(data, config.mc, derive_seed(common.seed, index as u64, 0))
            .with_context(|| format!("stimulus `{name}`"))?;
        records.push(StimulusRecord {
            stimulus: name,
            n: data.n(),
            counts: data.counts(),
            result,
        });
    }
    let p_values: Vec<f64> = records.iter().map(|r| r.result.p_value).collect();
    #[derive(Serialize)]
    struct Extra {
        model: GofModel,
        estimator: GsdEstimator,
        alpha: f64,
    }
    #[derive(Serialize)]
    struct Results<'a> {
        stimuli: Vec<StimulusRecord<'a, GofResult>>,
        pp_plot: PpPlot,
    }
    let pp_plot = plot_data(&p_values, plot)?;
    let settings = Settings {
        common: SharedSettings::of(common, true),
        extra: Extra {
            model: core_model,
            estimator: config.gsd_estimator,
            alpha: plot.alpha,
        },
    };
    emit(
        common,
        &Report::new(
            "gof",
            settings,
            Results {
                stimuli: records,
                pp_plot,
            },
        )
        .to_json()?,
    )
}

fn compare(
    common: &Common,
    n_small: &[u64],
    variant: VariantArg,
    bins: usize,
    counts: &CountsArg,
) -> Result<()> {
    let stimuli = load_stimuli(common, counts)?;
    let samples: Vec<CountSample> = stimuli.iter().map(|(_, s)| s.clone()).collect();
    let variant = match variant {
        VariantArg::Unmodified => Variant::Unmodified,
        VariantArg::Corrected => Variant::Corrected,
    };
    let batch = compare_batch(
        &samples,
        n_small,
        common.mc,
        variant,
        common.seed,
        &grid(common)?,
        bins,
    )?;
    #[derive(Serialize)]
    struct Entry<'a> {
        stimulus: &'a str,
        result: &'a CompareResult,
    }
    #[derive(Serialize)]
    struct Results<'a> {
        entries: Vec<Entry<'a>>,
        histograms: &'a [DiffHistogram],
    }
    #[derive(Serialize)]
    struct Extra<'a> {
        variant: Variant,
        n_small: &'a [u64],
        bins: usize,
    }
    let entries = batch
        .entries
        .iter()
        .map(|e| Entry {
            stimulus: &stimuli[e.stimulus].0,
            result: &e.result,
        })
        .collect();
    let settings = Settings {
        common: SharedSettings::of(common, true),
        extra: Extra {
            variant,
            n_small,
            bins,
        },
    };
    let results = Results {
        entries,
        histograms: &batch.histograms,
    };
    emit(
        common,
        &Report::new("compare", settings, results).to_json()?,
    )
}

fn matrix_fit(common: &Common, max_sweeps: u32, tolerance: f64) -> Result<()> {
    let labelled = ScoreData::read(require_input(common)?, common.m)?.rating_matrix()?;
    let config = MatrixFitConfig {
        max_sweeps,
        tolerance,
        ..MatrixFitConfig::default()
    };
    let fit = fit_matrix(&labelled.matrix, &config)?;
    #[derive(Serialize)]
    struct Psi<'a> {
        stimulus: &'a str,
        psi: f64,
    }
    #[derive(Serialize)]
    struct Rho<'a> {
        rater: &'a str,
        rho: f64,
    }
    #[derive(Serialize)]
    struct Results<'a> {
        psi: Vec<Psi<'a>>,
        rho: Vec<Rho<'a>>,
        log_likelihood: f64,
        sweeps: u32,
        converged: bool,
    }
    #[derive(Serialize)]
    struct Extra {
        max_sweeps: u32,
        tolerance: f64,
    }
    let results = Results {
        psi: labelled
            .stimuli
            .iter()
            .zip(&fit.psi)
            .map(|(s, &psi)| Psi { stimulus: s, psi })
            .collect(),
        rho: labelled
            .raters
            .iter()
            .zip(&fit.rho)
            .map(|(r, &rho)| Rho { rater: r, rho })
            .collect(),
        log_likelihood: fit.log_likelihood,
        sweeps: fit.sweeps,
        converged: fit.converged,
    };
    let settings = Settings {
        common: SharedSettings::of(common, false),
        extra: Extra {
            max_sweeps,
            tolerance,
        },
    };
    emit(
        common,
        &Report::new("matrix-fit", settings, results).to_json()?,
    )
}

fn simulate(
    common: &Common,
    stimuli: usize,
    raters: usize,
    psi: Option<f64>,
    rho: Option<f64>,
    truth: Option<&Path>,
) -> Result<()> {
    if stimuli == 0 || raters == 0 {
        return Err(usage("--stimuli and --raters must be positive"));
    }
    check_params(psi.unwrap_or(1.0), rho.unwrap_or(0.0), common.m)?;
    let (mut psi_values, mut rho_values) =
        random_parameters(raters, stimuli, common.m, common.seed);
    if let Some(p) = psi {
        psi_values.fill(p);
    }
    if let Some(r) = rho {
        rho_values.fill(r);
    }
    let matrix = simulate_matrix(&psi_values, &rho_values, common.m, common.seed)?;
    let mut ratings = matrix.ratings().to_vec();
    ratings.sort_by_key(|r| (r.stimulus, r.rater));
    let rows = ratings.iter().map(|r| {
        [
            format!("s{}", r.stimulus + 1),
            format!("r{}", r.rater + 1),
            r.score.to_string(),
        ]
    });
    let scores = csv_table(&["stimulus_id", "rater_id", "score"], rows)?;
    if let Some(path) = truth {
        let rows = psi_values
            .iter()
            .enumerate()
            .map(|(j, v)| ["psi".to_string(), format!("s{}", j + 1), v.to_string()])
            .chain(
                rho_values
                    .iter()
                    .enumerate()
                    .map(|(i, v)| ["rho".to_string(), format!("r{}", i + 1), v.to_string()]),
            );
        let text = csv_table(&["parameter", "id", "value"], rows)?;
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    emit(common, &scores)
}

fn rmsd(
    common: &Common,
    kind: StudyKind,
    sizes: &[u64],
    replicates: u32,
    cell_step: f64,
    probe_psi: &[f64],
    probe_rho: &[f64],
) -> Result<()> {
    if sizes.is_empty() || sizes.contains(&0) || replicates == 0 {
        return Err(usage("--sizes and --replicates must be positive"));
    }
    let text = match kind {
        StudyKind::Single => {
            let config = StudyConfig {
                m: common.m,
                sizes: sizes.to_vec(),
                psi_values: axis(1.0, f64::from(common.m), cell_step)?,
                rho_values: axis(0.0, 1.0, cell_step)?,
                replicates,
                grid: grid(common)?,
                seed: common.seed,
            };
            let cells = rmsd_study(&config)?;
            let rows = cells.iter().map(|c| {
                [
                    c.n.to_string(),
                    c.psi.to_string(),
                    c.rho.to_string(),
                    c.rmsd_psi.to_string(),
                    c.rmsd_rho.to_string(),
                ]
            });
            csv_table(&["n", "psi", "rho", "rmsd_psi", "rmsd_rho"], rows)?
        }
        StudyKind::Matrix => {
            let probes: Vec<Probe> = probe_psi
                .iter()
                .map(|&v| Probe::Psi(v))
                .chain(probe_rho.iter().map(|&v| Probe::Rho(v)))
                .collect();
            if probes.is_empty() {
                return Err(usage("the matrix study needs --probe-psi or --probe-rho"));
            }
            for probe in &probes {
                match *probe {
                    Probe::Psi(v) => check_params(v, 0.5, common.m)?,
                    Probe::Rho(v) => check_params(2.0, v, common.m)?,
                };
            }
            let config = MatrixStudyConfig {
                m: common.m,
                sizes: sizes.iter().map(|&n| n as usize).collect(),
                probes,
                replicates,
                seed: common.seed,
            };
            let rows = matrix_rmsd_study(&config, &MatrixFitConfig::default())?;
            let rows = rows.iter().map(|r| {
                let (parameter, value) = match r.probe {
                    Probe::Psi(v) => ("psi", v),
                    Probe::Rho(v) => ("rho", v),
                };
                [
                    r.size.to_string(),
                    parameter.to_string(),
                    value.to_string(),
                    r.rmsd.to_string(),
                    r.median_abs_psi.to_string(),
                    r.median_abs_rho.to_string(),
                ]
            });
            csv_table(
                &[
                    "size",
                    "parameter",
                    "value",
                    "rmsd",
                    "median_abs_psi",
                    "median_abs_rho",
                ],
                rows,
            )?
        }
    };
    emit(common, &text)
}

fn probit_fit(common: &Common, counts: &CountsArg) -> Result<()> {
    let stimuli = load_stimuli(common, counts)?;
    let grid = ProbitGrid::for_scale(common.m);
    let mut estimator = ProbitEstimator::new(common.m, grid)?;
    let mut records = Vec::new();
    for (name, data) in &stimuli {
        let result: ProbitFit = estimator.fit(data)?;
        records.push(StimulusRecord {
            stimulus: name,
            n: data.n(),
            counts: data.counts(),
            result,
        });
    }
    let settings = Settings {
        common: SharedSettings::of(common, false),
        extra: grid,
    };
    emit(
        common,
        &Report::new("probit-fit", settings, records).to_json()?,
    )
}

fn envelope(common: &Common, figure: Figure, step: f64, size: u64) -> Result<()> {
    let m = common.m;
    let mf = f64::from(m);
    let text = match figure {
        Figure::Variance => {
            let mut rows = Vec::new();
            for psi in axis(1.0, mf, step)? {
                let env = variance_envelope(psi, m)?;
                rows.push([psi, env.v_min, env.v_max, env.v_bin, env.c].map(|v| v.to_string()));
            }
            csv_table(&["psi", "v_min", "v_max", "v_bin", "c"], rows)?
        }
        Figure::GsdMapping => {
            let mut rows = Vec::new();
            for psi in axis(1.0, mf, step)? {
                for rho in axis(0.0, 1.0, step)? {
                    let (mean, var) = moments(&GsdParams::new(psi, rho, m)?);
                    rows.push([psi, rho, mean, var].map(|v| v.to_string()));
                }
            }
            csv_table(&["psi", "rho", "mean", "variance"], rows)?
        }
        Figure::ProbitMapping => {
            let mut rows = Vec::new();
            for mu in axis(0.0, mf + 1.0, step)? {
                for sigma in axis(step, 5.0, step)? {
                    let (mean, var) = probit_induced_moments(&ProbitParams::new(mu, sigma, m)?);
                    rows.push([mu, sigma, mean, var].map(|v| v.to_string()));
                }
            }
            csv_table(&["mu", "sigma", "mean", "variance"], rows)?
        }
        Figure::Feasible => {
            if size == 0 {
                return Err(usage("--size must be positive"));
            }
            let grid = GridConfig::uniform(step);
            grid.validate().map_err(|e| usage(format!("--step: {e}")))?;
            let region = GridEstimator::new(m, grid)?.feasible_region(size);
            let rows = region.iter().map(|&(psi, rho, ok)| {
                [psi.to_string(), rho.to_string(), u8::from(ok).to_string()]
            });
            csv_table(&["psi", "rho", "feasible"], rows)?
        }
    };
    emit(common, &text)
}
