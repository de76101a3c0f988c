use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use schur_core::funccalc::{
    eval_at_row_tuple, row_contraction_check, von_neumann_check, Mode, OperatorTuple, SchurFunction,
};
use schur_core::kernels::{
    choi_spectrum, cp_kolmogorov, cp_positivity_check, debranges_kernel, kolmogorov,
    positivity_check, CpKernelSample, KernelSample, Setting,
};
use schur_core::matops::{op_norm, Matrix, C64};
use schur_core::realization::{
    eval_ball, lurking_isometry_ball, lurking_isometry_free, RealizationResult,
};
use schur_core::tvsystems::{
    io_map, tv_point_eval, tv_realize, LowerTriWindow, WeightedShiftArg, UNITARY_TOL,
};
use schur_core::Error;

use crate::report::RunReport;
use crate::schema::{
    self, matrix, matrix_json, parse, point, shaped, ColligationFile, CpKernelFile, JsonMatrix,
    KernelFile, PointsFile, SamplesFile, SeriesFile, TupleFile, TvSystemFile,
};
use crate::{CliError, EvalMode, KernelSetting, OutputFormat, RealizeSetting};

pub struct Common {
    pub tol: f64,
    pub seed: u64,
    pub format: OutputFormat,
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Input(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Library rejections become a failing report; validation errors abort.
fn reject(report: &mut RunReport, verdict: &str, e: Error) -> Result<(), CliError> {
    if !e.is_rejection() {
        return Err(e.into());
    }
    report.verdict(verdict, false);
    if let Error::NotSchur { deviation, .. } = &e {
        report.residual("deviation", *deviation);
    }
    report.rejection = Some(e.to_string());
    Ok(())
}

fn points_for(
    setting: Setting,
    raw: &[Vec<schema::JsonComplex>],
) -> Result<Vec<Vec<C64>>, CliError> {
    let d = setting.dim();
    for (i, p) in raw.iter().enumerate() {
        if p.len() != d {
            return Err(CliError::Input(format!(
                "`points[{i}]` has {} coordinates, expected {d}",
                p.len()
            )));
        }
    }
    Ok(raw.iter().map(|p| point(p)).collect())
}

fn ball_setting(raw: &[Vec<schema::JsonComplex>]) -> Result<Setting, CliError> {
    match raw.first().map(Vec::len) {
        Some(0) | None => Err(CliError::Input(
            "`points` must be non-empty with at least one coordinate".into(),
        )),
        Some(d) => Ok(Setting::Ball { d }),
    }
}

fn matrices(ms: &[JsonMatrix], field: &str) -> Result<Vec<Matrix>, CliError> {
    ms.iter()
        .enumerate()
        .map(|(i, m)| matrix(m, &format!("{field}[{i}]")))
        .collect()
}

pub fn kernel_check(
    input: &Path,
    setting: KernelSetting,
    c: &Common,
) -> Result<RunReport, CliError> {
    let bytes = read(input)?;
    let mut report = RunReport::new("kernel-check", &[&bytes], c.seed, c.tol);
    match setting {
        KernelSetting::Cp => {
            let f: CpKernelFile = parse(&bytes, input)?;
            let mut unit_values = Vec::with_capacity(f.unit_values.len());
            for (i, row) in f.unit_values.iter().enumerate() {
                let mut out_row = Vec::with_capacity(row.len());
                for (j, units) in row.iter().enumerate() {
                    out_row.push(matrices(units, &format!("unit_values[{i}][{j}]"))?);
                }
                unit_values.push(out_row);
            }
            let kernel = CpKernelSample::new(f.labels, f.alg_dim, f.rep_dim, unit_values)?;
            let rep = cp_positivity_check(&kernel, c.tol)?;
            report.verdict("completely_positive", rep.is_psd);
            report.residual("min_eigenvalue", rep.min_eigenvalue);
            report.residual("tolerance_used", rep.tolerance_used);
            if kernel.len() == 1 {
                let spec = choi_spectrum(&kernel)?;
                report.residual(
                    "choi_max_eigenvalue",
                    spec.last().copied().unwrap_or(f64::NAN),
                );
            }
            if rep.is_psd {
                let dec = cp_kolmogorov(&kernel, c.tol)?;
                report.residual("hilbert_dim", dec.hilbert_dim as f64);
                report.residual(
                    "reconstruction_residual",
                    dec.reconstruction_residual(&kernel),
                );
                report.residual("homomorphism_residual", dec.homomorphism_residual());
            }
        }
        KernelSetting::Disk | KernelSetting::Ball => {
            let f: KernelFile = parse(&bytes, input)?;
            let setting = match setting {
                KernelSetting::Disk => Setting::Disk,
                _ => ball_setting(&f.points)?,
            };
            let points = points_for(setting, &f.points)?;
            let kernel = match (&f.blocks, &f.values) {
                (Some(blocks), None) => {
                    let block_dim = blocks.first().and_then(|r| r.first()).map_or(1, Vec::len);
                    let mut rows = Vec::with_capacity(blocks.len());
                    for (i, row) in blocks.iter().enumerate() {
                        let mut out = Vec::with_capacity(row.len());
                        for (j, b) in row.iter().enumerate() {
                            out.push(shaped(
                                b,
                                block_dim,
                                block_dim,
                                &format!("blocks[{i}][{j}]"),
                            )?);
                        }
                        rows.push(out);
                    }
                    KernelSample::new(setting, points, block_dim, rows)?
                }
                (None, Some(values)) => {
                    debranges_kernel(setting, &points, &matrices(values, "values")?)?
                }
                _ => {
                    return Err(CliError::Input(
                        "give exactly one of `blocks` or `values`".into(),
                    ))
                }
            };
            let rep = positivity_check(&kernel, c.tol)?;
            report.verdict("psd", rep.is_psd);
            report.residual("min_eigenvalue", rep.min_eigenvalue);
            report.residual("tolerance_used", rep.tolerance_used);
            report.residual("hermitian_defect", kernel.hermitian_defect());
            if rep.is_psd {
                let k = kolmogorov(&kernel, c.tol)?;
                report.residual("kolmogorov_rank", k.dim() as f64);
                report.residual("kolmogorov_relative_residual", k.relative_residual(&kernel));
            }
        }
    }
    Ok(report)
}

/// Seeded split of sample indices into training and held-out parts. One in
/// five samples is held out once there are at least five.
fn split(len: usize, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let held = len / 5;
    let mut train = idx[held..].to_vec();
    let mut heldout = idx[..held].to_vec();
    train.sort_unstable();
    heldout.sort_unstable();
    (train, heldout)
}

fn record_realization(report: &mut RunReport, res: &RealizationResult) {
    let u = &res.colligation;
    report.verdict("flavor_verified", u.verified_flavor() == Some(u.flavor));
    report.residual("fit_residual", res.fit_residual);
    if let Some(h) = res.heldout_residual {
        report.residual("heldout_residual", h);
    }
    report.residual("isometry_residual", res.isometry_residual);
    report.residual("state_dim", u.n as f64);
    report.residual("rank_threshold", res.rank.threshold);
    report.residual("smallest_kept_eigenvalue", res.rank.smallest_kept);
    report.residual("largest_dropped_eigenvalue", res.rank.largest_dropped);
    report.residual("coisometry_defect", u.coisometry_defect());
}

pub fn realize(
    input: &Path,
    setting: RealizeSetting,
    out: Option<&PathBuf>,
    degree: Option<usize>,
    c: &Common,
) -> Result<RunReport, CliError> {
    let bytes = read(input)?;
    let mut report = RunReport::new("realize", &[&bytes], c.seed, c.tol);
    match setting {
        RealizeSetting::Disk | RealizeSetting::Ball => {
            let f: SamplesFile = parse(&bytes, input)?;
            if f.points.len() != f.values.len() {
                return Err(CliError::Input(format!(
                    "{} points but {} values",
                    f.points.len(),
                    f.values.len()
                )));
            }
            let setting_k = match setting {
                RealizeSetting::Disk => Setting::Disk,
                _ => ball_setting(&f.points)?,
            };
            let points = points_for(setting_k, &f.points)?;
            let values = matrices(&f.values, "values")?;
            let (train, held) = split(points.len(), c.seed);
            let tp: Vec<Vec<C64>> = train.iter().map(|&i| points[i].clone()).collect();
            let tv: Vec<Matrix> = train.iter().map(|&i| values[i].clone()).collect();
            let hp: Vec<Vec<C64>> = held.iter().map(|&i| points[i].clone()).collect();
            match lurking_isometry_ball(setting_k.dim(), &tp, &tv, c.tol) {
                Ok(mut res) => {
                    if !hp.is_empty() {
                        res.measure_heldout(&hp, |z| {
                            let k = held
                                .iter()
                                .position(|&i| points[i] == z)
                                .expect("held-out point");
                            Ok(values[held[k]].clone())
                        })?;
                    }
                    report.verdict("schur", true);
                    report.residual("training_samples", tp.len() as f64);
                    report.residual("heldout_samples", hp.len() as f64);
                    record_realization(&mut report, &res);
                    if let Some(path) = out {
                        write_json(path, &ColligationFile::from_colligation(&res.colligation))?;
                    }
                }
                Err(e) => reject(&mut report, "schur", e)?,
            }
        }
        RealizeSetting::Free => {
            let f: SeriesFile = parse(&bytes, input)?;
            let s = f.to_series()?;
            let n = degree.unwrap_or_else(|| s.degree());
            match lurking_isometry_free(&s, n, c.tol) {
                Ok(res) => {
                    report.verdict("schur", true);
                    report.residual("degree", n as f64);
                    record_realization(&mut report, &res);
                    if let Some(path) = out {
                        write_json(path, &ColligationFile::from_colligation(&res.colligation))?;
                    }
                }
                Err(e) => reject(&mut report, "schur", e)?,
            }
        }
        RealizeSetting::Tv => {
            let raw: JsonMatrix = parse(&bytes, input)?;
            let t = matrix(&raw, "window")?;
            let w = LowerTriWindow::new(t)?;
            match tv_realize(&w, c.tol) {
                Ok(r) => {
                    let defect = r.system.unitarity_defect();
                    report.verdict("contraction", true);
                    report.verdict("unitary_steps", defect <= UNITARY_TOL);
                    report.residual("reconstruction_residual", r.reconstruction_residual);
                    report.residual("unitarity_defect", defect);
                    report.residual(
                        "state_dim",
                        r.system.state_dims.iter().copied().max().unwrap_or(0) as f64,
                    );
                    if let Some(path) = out {
                        write_json(path, &TvSystemFile::from_system(&r.system))?;
                    }
                }
                Err(e) => reject(&mut report, "contraction", e)?,
            }
        }
    }
    Ok(report)
}

fn load_function(bytes: &[u8], path: &Path) -> Result<SchurFunction, CliError> {
    let v: Value = parse(bytes, path)?;
    if v.get("terms").is_some() {
        let f: SeriesFile = parse(bytes, path)?;
        Ok(SchurFunction::Series(f.to_series()?))
    } else {
        let f: ColligationFile = parse(bytes, path)?;
        Ok(SchurFunction::Colligation(f.to_colligation()?))
    }
}

fn function_dim(f: &SchurFunction) -> (usize, bool) {
    match f {
        SchurFunction::Series(s) => (s.d, s.commutative),
        SchurFunction::Colligation(u) => (u.d, true),
    }
}

fn eval_point(f: &SchurFunction, z: &[C64]) -> schur_core::Result<Matrix> {
    match f {
        SchurFunction::Colligation(u) => eval_ball(u, z),
        SchurFunction::Series(s) => {
            let blocks = z.iter().map(|&zj| Matrix::from_element(1, 1, zj)).collect();
            let t = OperatorTuple::new(blocks, s.commutative)?;
            let mode = if s.commutative {
                Mode::Commuting
            } else {
                Mode::Free
            };
            eval_at_row_tuple(s, &t, mode)
        }
    }
}

pub fn eval(
    function: &Path,
    points: Option<&PathBuf>,
    tuple: Option<&PathBuf>,
    mode: EvalMode,
    out: Option<&PathBuf>,
    c: &Common,
) -> Result<RunReport, CliError> {
    let fbytes = read(function)?;
    let v: Value = parse(&fbytes, function)?;
    if v.get("U_seq").is_some() {
        return eval_tv(function, &fbytes, points, mode, out, c);
    }
    let f = load_function(&fbytes, function)?;
    let (d, commutative) = function_dim(&f);
    let (arg_path, arg_bytes) = match (mode, points, tuple) {
        (EvalMode::Point, Some(p), None) => (p, read(p)?),
        (EvalMode::Operator, None, Some(t)) => (t, read(t)?),
        (EvalMode::Point, _, _) => {
            return Err(CliError::Input(
                "point mode needs --points and no --tuple".into(),
            ))
        }
        (EvalMode::Operator, _, _) => {
            return Err(CliError::Input(
                "operator mode needs --tuple and no --points".into(),
            ))
        }
    };
    let mut report = RunReport::new("eval", &[&fbytes, &arg_bytes], c.seed, c.tol);
    let mut values = Vec::new();
    match mode {
        EvalMode::Point => {
            let pf: PointsFile = parse(&arg_bytes, arg_path)?;
            let setting = if d == 1 {
                Setting::Disk
            } else {
                Setting::Ball { d }
            };
            let pts = points_for(setting, &pf.points)?;
            let mut worst: f64 = 0.0;
            for z in &pts {
                match eval_point(&f, z) {
                    Ok(v) => {
                        worst = worst.max(op_norm(&v));
                        values.push(v);
                    }
                    Err(e) => {
                        reject(&mut report, "evaluated", e)?;
                        return Ok(report);
                    }
                }
            }
            report.verdict("evaluated", true);
            report.residual("max_value_norm", worst);
        }
        EvalMode::Operator => {
            let tf: TupleFile = parse(&arg_bytes, arg_path)?;
            if tf.blocks.len() != d {
                return Err(CliError::Input(format!(
                    "`blocks` has {} operators, expected {d}",
                    tf.blocks.len()
                )));
            }
            let blocks = matrices(&tf.blocks, "blocks")?;
            let t = match OperatorTuple::new(blocks, tf.commuting || d == 1) {
                Ok(t) => t,
                Err(e) => {
                    reject(&mut report, "von_neumann", e)?;
                    return Ok(report);
                }
            };
            let rc = row_contraction_check(&t);
            report.residual("row_norm", rc.row_norm);
            let mode = if t.commuting && commutative {
                Mode::Commuting
            } else {
                Mode::Free
            };
            match von_neumann_check(&f, &t, mode) {
                Ok(vn) => {
                    report.verdict("certified", vn.certificate.certified);
                    report.verdict("von_neumann", vn.pass);
                    report.residual("value_norm", vn.norm);
                    report.residual("certificate_norm", vn.certificate.norm);
                    values.push(vn.value);
                }
                Err(e) => reject(&mut report, "von_neumann", e)?,
            }
        }
    }
    emit_values(&mut report, &values, out, c)?;
    Ok(report)
}

/// The input-output map of a time-varying system at the weighted shift with
/// weights `points[n][0]`, one per time step.
fn eval_tv(
    function: &Path,
    fbytes: &[u8],
    points: Option<&PathBuf>,
    mode: EvalMode,
    out: Option<&PathBuf>,
    c: &Common,
) -> Result<RunReport, CliError> {
    let (EvalMode::Point, Some(p)) = (mode, points) else {
        return Err(CliError::Input(
            "time-varying systems are evaluated in point mode with --points".into(),
        ));
    };
    let f: TvSystemFile = parse(fbytes, function)?;
    let sys = f.to_system()?;
    let arg_bytes = read(p)?;
    let pf: PointsFile = parse(&arg_bytes, p)?;
    if pf.points.len() != sys.len() || pf.points.iter().any(|w| w.len() != 1) {
        return Err(CliError::Input(format!(
            "`points` must list {} single weights",
            sys.len()
        )));
    }
    let mut report = RunReport::new("eval", &[fbytes, &arg_bytes], c.seed, c.tol);
    report.residual("unitarity_defect", sys.unitarity_defect());
    let weights = pf.points.iter().map(|w| schema::complex(&w[0])).collect();
    let value = WeightedShiftArg::new(weights).and_then(|eta| tv_point_eval(&io_map(&sys), &eta));
    let mut values = Vec::new();
    match value {
        Ok(v) => {
            report.verdict("evaluated", true);
            report.residual("value_norm", op_norm(&v));
            values.push(v);
        }
        Err(e) => {
            reject(&mut report, "evaluated", e)?;
            return Ok(report);
        }
    }
    emit_values(&mut report, &values, out, c)?;
    Ok(report)
}

fn emit_values(
    report: &mut RunReport,
    values: &[Matrix],
    out: Option<&PathBuf>,
    c: &Common,
) -> Result<(), CliError> {
    if report.rejection.is_some() {
        return Ok(());
    }
    let json: Vec<JsonMatrix> = values.iter().map(matrix_json).collect();
    match out {
        Some(path) => match c.format {
            OutputFormat::Json => write_json(path, &schema::ValuesFile { values: json })?,
            OutputFormat::Csv => {
                let file = std::fs::File::create(path)
                    .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
                let mut w = csv::Writer::from_writer(file);
                w.write_record(["section", "name", "value"])
                    .map_err(|e| CliError::Input(e.to_string()))?;
                crate::report::write_values_csv(&mut w, &json)?;
                w.flush().map_err(|e| CliError::Input(e.to_string()))?;
            }
        },
        None => report.values = Some(json),
    }
    Ok(())
}
