use std::io::Write;
use std::path::Path;

use qprecision::bounds::{bound_report, BoundReport, MinimizerOptions};
use qprecision::estimate::{
    ks_critical_1pct, ks_to_normal, one_param_information, simulate_mse, two_step_simulate, SimulationRun,
    TwoStepOptions,
};
use qprecision::fisher::sld_qfi;
use qprecision::gaussian::{
    canonical_form, gaussian_tail_bound, is_d_invariant_submodel, measurement_covariance, qudit_tail_bound,
    rld_of_gaussian, CanonicalForm, GaussianModel, InvarianceReport, TailReport,
};
use qprecision::matcore::{imag_part, inverse_complex, real_part, serialize_rows, to_complex};
use qprecision::models::{ModelSpec, SharedModel};
use qprecision::RMatrix;
use serde::Serialize;

use crate::args::{parse_constants, parse_grid, parse_list, parse_weight, GridAxis};
use crate::cli::{BoundsArgs, Format, GaussianArgs, ModelArgs, SimulateArgs, SweepArgs, TailArgs};
use crate::CliError;

pub const SWEEP_SCHEMA: &str = "# qprecision-sweep v1";

/// Whether every minimizer a command ran reported convergence.
pub struct Outcome {
    pub converged: bool,
}

struct ResolvedModel {
    spec: ModelSpec,
    model: SharedModel,
    point: Vec<f64>,
}

fn resolve(args: &ModelArgs) -> Result<ResolvedModel, CliError> {
    let mut spec = match &args.model_file {
        Some(path) => ModelSpec::from_file(path)?,
        None => ModelSpec { name: String::new(), constants: Default::default(), point: vec![] },
    };
    if let Some(name) = &args.model {
        spec.name = name.clone();
    }
    if spec.name.is_empty() {
        return Err(CliError::Validation("no model given (use --model or --model-file)".into()));
    }
    if let Some(text) = &args.constants {
        spec.constants.extend(parse_constants(text)?);
    }
    if let Some(text) = &args.point {
        spec.point = parse_list(text, "point")?;
    }
    let model = spec.build()?;
    let point = spec.complete_point(&spec.point)?;
    check_point(&model, &point)?;
    Ok(ResolvedModel { spec, model, point })
}

fn check_point(model: &SharedModel, point: &[f64]) -> Result<(), CliError> {
    if point.len() != model.num_params() {
        return Err(CliError::Validation(format!(
            "{} takes {} parameters ({}), got {}",
            model.name(),
            model.num_params(),
            model.param_names().join(", "),
            point.len()
        )));
    }
    if !model.in_domain(point) {
        return Err(CliError::Validation(format!("point {point:?} is outside the domain of {}", model.name())));
    }
    Ok(())
}

fn write_output(bytes: &[u8], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(bytes).map_err(|e| CliError::Io(e.to_string())),
    }
}

fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    Ok(text.into_bytes())
}

fn nuisance_count(model: &SharedModel, requested: Option<usize>) -> usize {
    requested.unwrap_or_else(|| model.default_nuisance())
}

pub fn bounds(args: &BoundsArgs) -> Result<Outcome, CliError> {
    let m = resolve(&args.model)?;
    let s = nuisance_count(&m.model, args.nuisance);
    let k = m.model.num_params().saturating_sub(s);
    let w = parse_weight(&args.weight, k)?;
    let report = bound_report(m.model.clone(), &m.point, &w, s, &MinimizerOptions::default())?;
    let bytes = json_bytes(&report)?;
    std::io::stdout().write_all(&bytes).map_err(|e| CliError::Io(e.to_string()))?;
    if let Some(path) = &args.out {
        write_output(&bytes, Some(path))?;
    }
    Ok(Outcome { converged: report.converged() })
}

#[derive(Serialize)]
struct SweepRow {
    coordinates: Vec<f64>,
    sld: f64,
    rld: f64,
    holevo: f64,
    nuisance: Option<f64>,
    converged: bool,
}

fn axis_index(model: &SharedModel, axis: &GridAxis) -> Result<usize, CliError> {
    let names = model.param_names();
    names
        .iter()
        .position(|n| *n == axis.param)
        .or_else(|| axis.param.parse::<usize>().ok().filter(|&i| i < names.len()))
        .ok_or_else(|| {
            CliError::Validation(format!("grid parameter `{}` is not one of {}", axis.param, names.join(", ")))
        })
}

pub fn sweep(args: &SweepArgs) -> Result<Outcome, CliError> {
    let m = resolve(&args.model)?;
    let axes: Vec<GridAxis> = args.grid.iter().map(|g| parse_grid(g)).collect::<Result<_, _>>()?;
    if axes.is_empty() || axes.len() > 2 {
        return Err(CliError::Validation("sweep needs one or two --grid axes".into()));
    }
    let indices: Vec<usize> = axes.iter().map(|a| axis_index(&m.model, a)).collect::<Result<_, _>>()?;
    if indices.len() == 2 && indices[0] == indices[1] {
        return Err(CliError::Validation("the two grid axes name the same parameter".into()));
    }
    let s = nuisance_count(&m.model, args.nuisance);
    let k = m.model.num_params().saturating_sub(s);
    let w = parse_weight(&args.weight, k)?;

    let mut points: Vec<Vec<f64>> = vec![vec![]];
    for axis in &axes {
        let values = axis.values();
        points = points.iter().flat_map(|p| values.iter().map(move |&v| [p.as_slice(), &[v]].concat())).collect();
    }
    let full_points: Vec<Vec<f64>> = points
        .iter()
        .map(|coords| {
            let mut t = m.point.clone();
            for (&i, &v) in indices.iter().zip(coords) {
                t[i] = v;
            }
            t
        })
        .collect();
    for t in &full_points {
        if !m.model.in_domain(t) {
            return Err(CliError::Validation(format!("grid point {t:?} is outside the domain of {}", m.model.name())));
        }
    }

    let opts = MinimizerOptions::default();
    let mut rows = Vec::with_capacity(points.len());
    for (coords, t) in points.into_iter().zip(&full_points) {
        let r: BoundReport = bound_report(m.model.clone(), t, &w, s, &opts)?;
        rows.push(SweepRow {
            coordinates: coords,
            sld: r.sld,
            rld: r.rld,
            holevo: r.holevo,
            nuisance: r.nuisance,
            converged: r.converged(),
        });
    }
    let converged = rows.iter().all(|r| r.converged);
    let names: Vec<String> = axes.iter().map(|a| a.param.clone()).collect();
    let bytes = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => sweep_csv(&m.spec.name, s, &names, &rows)?,
        Format::Json => json_bytes(&rows)?,
    };
    write_output(&bytes, args.out.as_deref())?;
    Ok(Outcome { converged })
}

fn sweep_csv(model: &str, nuisance: usize, names: &[String], rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    let mut buf = format!("{SWEEP_SCHEMA} model={model} nuisance={nuisance}\n").into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        let mut header: Vec<&str> = names.iter().map(String::as_str).collect();
        header.extend(["sld", "rld", "holevo", "nuisance", "converged"]);
        w.write_record(&header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in rows {
            let mut record: Vec<String> = r.coordinates.iter().map(f64::to_string).collect();
            record.push(r.sld.to_string());
            record.push(r.rld.to_string());
            record.push(r.holevo.to_string());
            record.push(r.nuisance.map(|v| v.to_string()).unwrap_or_default());
            record.push(r.converged.to_string());
            w.write_record(&record).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
    }
    Ok(buf)
}

#[derive(Serialize)]
struct SimulationSummary {
    model: String,
    protocol: &'static str,
    seed: u64,
    n: u64,
    trials: usize,
    t_true: f64,
    t0: Option<f64>,
    information: f64,
    nmse: f64,
    nmse_std_error: f64,
    target: f64,
    mean: f64,
    fallback_frequency: f64,
    ks_distance: f64,
    ks_critical_1pct: f64,
    tail_frequencies: Vec<(f64, f64)>,
}

pub fn simulate(args: &SimulateArgs) -> Result<Outcome, CliError> {
    let m = resolve(&args.model)?;
    if m.model.num_params() != 1 {
        return Err(CliError::Validation("simulate handles one-parameter models only".into()));
    }
    if args.copies == 0 || args.trials == 0 {
        return Err(CliError::Validation("--copies and --trials must be positive".into()));
    }
    let t_true = m.point[0];
    let (run, t0, protocol) = if args.two_step {
        if !(args.x > 0.0 && args.x < 1.0) {
            return Err(CliError::Validation("--x must lie in (0, 1)".into()));
        }
        let opts = TwoStepOptions { x: args.x, ..TwoStepOptions::default() };
        (two_step_simulate(m.model.as_ref(), t_true, args.copies, args.trials, args.seed, &opts)?, None, "two-step")
    } else {
        let t0 = args.t0.unwrap_or(t_true);
        if !m.model.in_domain(&[t0]) {
            return Err(CliError::Validation(format!("t0 = {t0} is outside the domain")));
        }
        (simulate_mse(m.model.as_ref(), t_true, t0, args.copies, args.trials, args.seed)?, Some(t0), "local")
    };
    let bytes = match args.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut buf = Vec::new();
            run.write_csv(&mut buf)?;
            buf
        }
        Format::Json => json_bytes(&summary(&m, &run, t0, protocol)?)?,
    };
    write_output(&bytes, args.out.as_deref())?;
    Ok(Outcome { converged: true })
}

fn summary(
    m: &ResolvedModel,
    run: &SimulationRun,
    t0: Option<f64>,
    protocol: &'static str,
) -> Result<SimulationSummary, CliError> {
    let information = one_param_information(m.model.as_ref(), run.t_true)?;
    Ok(SimulationSummary {
        model: m.spec.name.clone(),
        protocol,
        seed: run.seed,
        n: run.n,
        trials: run.trials,
        t_true: run.t_true,
        t0,
        information,
        nmse: run.nmse(),
        nmse_std_error: run.nmse_std_error(),
        target: 1.0 / information,
        mean: run.mean(),
        fallback_frequency: run.fallback_frequency(),
        ks_distance: ks_to_normal(&run.rescaled, 1.0 / information)?,
        ks_critical_1pct: ks_critical_1pct(run.trials),
        tail_frequencies: run.tail_frequencies(),
    })
}

#[derive(Serialize)]
struct TailOutput {
    source: &'static str,
    c: f64,
    seed: u64,
    #[serde(flatten)]
    report: TailReport,
}

pub fn tail(args: &TailArgs) -> Result<Outcome, CliError> {
    let (source, report) = match (&args.gaussian, args.model.model.is_some() || args.model.model_file.is_some()) {
        (Some(_), true) => return Err(CliError::Validation("give either a model or --gaussian, not both".into())),
        (Some(path), false) => {
            let g = GaussianModel::from_file(path)?;
            let cf = canonical_form(&g.gamma()?)?;
            let w = parse_weight(&args.weight, g.dim())?;
            let gamma_c = RMatrix::from_diagonal(&nalgebra::DVector::from_vec(cf.classical.clone()));
            ("gaussian", gaussian_tail_bound(&gamma_c, &cf.nu, &w, args.c, args.samples, args.seed)?)
        }
        (None, _) => {
            let m = resolve(&args.model)?;
            let q = sld_qfi(m.model.as_ref(), &m.point)?;
            let w = parse_weight(&args.weight, q.k())?;
            ("qudit", qudit_tail_bound(&q.j, &q.d, &w, args.c, args.samples, args.seed)?)
        }
    };
    let out = TailOutput { source, c: args.c, seed: args.seed, report };
    write_output(&json_bytes(&out)?, args.out.as_deref())?;
    Ok(Outcome { converged: true })
}

#[derive(Serialize)]
struct GaussianOutput {
    d_c: usize,
    d_q: usize,
    canonical: CanonicalForm,
    canonical_residual: f64,
    #[serde(serialize_with = "serialize_rows")]
    rld_re: RMatrix,
    #[serde(serialize_with = "serialize_rows")]
    rld_im: RMatrix,
    d_invariance: InvarianceReport,
    /// `Re Z, Im Z` for `Z = (Tᵀ J̃ T)⁻¹`, the parameter-space correlation.
    #[serde(serialize_with = "serialize_rows")]
    z_re: RMatrix,
    #[serde(serialize_with = "serialize_rows")]
    z_im: RMatrix,
    /// Optimal covariant-measurement covariance; present only for D-invariant `T`.
    #[serde(serialize_with = "optional_rows")]
    covariance: Option<RMatrix>,
    holevo: Option<f64>,
}

fn optional_rows<S: serde::Serializer>(m: &Option<RMatrix>, s: S) -> Result<S::Ok, S::Error> {
    match m {
        Some(m) => serialize_rows(m, s),
        None => s.serialize_none(),
    }
}

pub fn gaussian(args: &GaussianArgs) -> Result<Outcome, CliError> {
    let g = GaussianModel::from_file(&args.file)?;
    let gamma = g.gamma()?;
    let t = g.displacement()?;
    let canonical = canonical_form(&gamma)?;
    let canonical_residual = canonical.residual(&gamma);
    let rld = rld_of_gaussian(&gamma)?;
    let d_invariance = is_d_invariant_submodel(&gamma, &t)?;
    let tc = to_complex(&t);
    let z = inverse_complex(&(tc.transpose() * &rld * &tc))?;
    let w = parse_weight(&args.weight, t.ncols())?;
    let (covariance, holevo) = if d_invariance.invariant {
        let v = measurement_covariance(&z, &w)?;
        let h = (&w * &v).trace();
        (Some(v), Some(h))
    } else {
        (None, None)
    };
    let out = GaussianOutput {
        d_c: g.d_c,
        d_q: g.d_q,
        canonical,
        canonical_residual,
        rld_re: real_part(&rld),
        rld_im: imag_part(&rld),
        d_invariance,
        z_re: real_part(&z),
        z_im: imag_part(&z),
        covariance,
        holevo,
    };
    write_output(&json_bytes(&out)?, args.out.as_deref())?;
    Ok(Outcome { converged: true })
}
