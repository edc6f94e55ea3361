use std::fs;
use std::path::{Path, PathBuf};

use roughchange_core::baselines::{
    self, diff_values, fcm_cluster, hcm_cluster, ClusterModel, DEFAULT_FUZZIFIER,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use roughchange_core::eval::{compare_masks, synth_pair, Metrics, Rect, SynthSpec};
use roughchange_core::imaging::{
    abs_difference, load_image, save_image, transform_to_scalar, RasterImage, ScalarField,
};
use roughchange_core::pipeline::{
    analyze, detect_changes, load_mask, preset_threshold, resolve_cutoff, save_mask,
    CandidateRule, ChangeMask, DetectionParams, DEFAULT_BINS, DEFAULT_THRESHOLD,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::Config;
use crate::error::CliError;
use crate::{ClusterArgs, DetectionArgs};

const IMAGE_EXTENSIONS: &[&str] = &["png", "pgm", "ppm", "pnm"];

fn has_extension(path: &Path, allowed: &[&str]) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| allowed.contains(&e.to_ascii_lowercase().as_str()))
}

fn check_mask_path(path: &Path) -> Result<(), CliError> {
    if has_extension(path, &["png", "pgm", "pnm"]) {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "mask output {} must end in .png or .pgm",
            path.display()
        )))
    }
}

fn parse_rule(s: &str) -> Result<CandidateRule, CliError> {
    s.parse().map_err(|e: roughchange_core::Error| CliError::Usage(e.to_string()))
}

/// Resolves threshold, bins and candidate rule: flags, then config, then
/// defaults. An explicit threshold beats a preset at the same level.
pub fn resolve_params(config: &Config, args: &DetectionArgs) -> Result<DetectionParams, CliError> {
    let preset = |name: &str| {
        preset_threshold(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))
    };
    let threshold = match (args.threshold, &args.preset) {
        (Some(t), _) => t,
        (None, Some(name)) => preset(name)?,
        (None, None) => match (config.get::<f64>("threshold")?, config.raw("preset")) {
            (Some(t), _) => t,
            (None, Some(name)) => preset(name)?,
            (None, None) => DEFAULT_THRESHOLD,
        },
    };
    let bins = config.pick(args.bins, "bins", DEFAULT_BINS)?;
    let rule = match args.candidate_rule.as_deref().or(config.raw("candidate_rule")) {
        Some(s) => parse_rule(s)?,
        None => CandidateRule::Otsu,
    };
    let params = DetectionParams {
        threshold,
        bins,
        candidate_rule: rule,
    };
    params.validate()?;
    Ok(params)
}

fn read_image(path: &Path) -> Result<RasterImage, CliError> {
    load_image(path).map_err(|e| CliError::at(path, e))
}

fn write_mask(mask: &ChangeMask, path: &Path) -> Result<(), CliError> {
    save_mask(mask, path).map_err(|e| CliError::at(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Writes `text` to `dest`, or stdout when there is no destination.
fn emit(text: &str, dest: Option<&Path>) -> Result<(), CliError> {
    match dest {
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn with_eval(mut report: Value, mask: &ChangeMask, truth: Option<&Path>) -> Result<Value, CliError> {
    if let Some(path) = truth {
        let truth = load_mask(path).map_err(|e| CliError::at(path, e))?;
        let metrics = compare_masks(mask, &truth)?;
        report["eval"] = serde_json::to_value(metrics).map_err(|e| CliError::Internal(e.to_string()))?;
    }
    Ok(report)
}

fn scalar_diff(before: &RasterImage, after: &RasterImage) -> Result<ScalarField, CliError> {
    Ok(abs_difference(
        &transform_to_scalar(before),
        &transform_to_scalar(after),
    )?)
}

pub fn detect(
    config: &Config,
    before: &Path,
    after: &Path,
    args: &DetectionArgs,
    output: Option<PathBuf>,
    report: Option<PathBuf>,
    truth: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = resolve_params(config, args)?;
    let output = config.pick(output, "output", PathBuf::from("mask.png"))?;
    let report = report.or(config.get("report")?);
    let truth = truth.or(config.get("truth")?);
    check_mask_path(&output)?;

    let img1 = read_image(before)?;
    let img2 = read_image(after)?;
    let (mask, summary) = detect_changes(&img1, &img2, &params)?;
    write_mask(&mask, &output)?;

    let json = serde_json::to_value(&summary).map_err(|e| CliError::Internal(e.to_string()))?;
    let json = with_eval(json, &mask, truth.as_deref())?;
    emit(&to_json(&json)?, report.as_deref())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Method {
    Hcm,
    Fcm,
    Diff,
}

impl Method {
    fn parse(s: &str) -> Result<Self, CliError> {
        match s {
            "hcm" => Ok(Method::Hcm),
            "fcm" => Ok(Method::Fcm),
            "diff" => Ok(Method::Diff),
            other => Err(CliError::Usage(format!(
                "unknown baseline method {other:?}; expected hcm, fcm or diff"
            ))),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Method::Hcm => "hcm",
            Method::Fcm => "fcm",
            Method::Diff => "diff",
        }
    }
}

fn cluster_report(method: Method, model: &ClusterModel, mask: &ChangeMask) -> Value {
    json!({
        "method": method.name(),
        "changed_count": mask.changed_count(),
        "centers": model.centers,
        "iterations_run": model.iterations_run,
        "converged": model.converged,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn baseline(
    config: &Config,
    inputs: &[String],
    method_flag: Option<String>,
    cluster: &ClusterArgs,
    candidate_rule: Option<String>,
    output: Option<PathBuf>,
    report: Option<PathBuf>,
    truth: Option<PathBuf>,
) -> Result<(), CliError> {
    let (method, before, after) = match inputs {
        [m, a, b] => (Some(m.clone()), a, b),
        [a, b] => (None, a, b),
        _ => return Err(CliError::Usage("expected [METHOD] BEFORE AFTER".into())),
    };
    let method = method
        .or(method_flag)
        .or(config.raw("method").map(str::to_string))
        .ok_or_else(|| CliError::Usage("no baseline method given (hcm, fcm or diff)".into()))?;
    let method = Method::parse(&method)?;

    let fuzzifier = config.pick(cluster.fuzzifier, "fuzzifier", DEFAULT_FUZZIFIER)?;
    let max_iter = config.pick(cluster.max_iter, "max_iter", DEFAULT_MAX_ITER)?;
    let tol = config.pick(cluster.tol, "tol", DEFAULT_TOL)?;
    let rule = match candidate_rule.as_deref().or(config.raw("candidate_rule")) {
        Some(s) => parse_rule(s)?,
        None => CandidateRule::Otsu,
    };
    let output = config.pick(output, "output", PathBuf::from("mask.png"))?;
    let report = report.or(config.get("report")?);
    let truth = truth.or(config.get("truth")?);
    check_mask_path(&output)?;

    let img1 = read_image(Path::new(before))?;
    let img2 = read_image(Path::new(after))?;
    let diff = scalar_diff(&img1, &img2)?;

    let (mask, json) = match method {
        Method::Hcm => {
            let model = hcm_cluster(&diff_values(&diff), max_iter, tol)?;
            let mask = model.change_mask(&diff)?;
            let json = cluster_report(method, &model, &mask);
            (mask, json)
        }
        Method::Fcm => {
            let model = fcm_cluster(&diff_values(&diff), fuzzifier, max_iter, tol)?;
            let mask = model.change_mask(&diff)?;
            let mut json = cluster_report(method, &model, &mask);
            json["fuzzifier"] = json!(fuzzifier);
            (mask, json)
        }
        Method::Diff => {
            let t0 = resolve_cutoff(&diff, rule);
            let mask = baselines::threshold_diff_detect(&diff, t0)?;
            let json = json!({
                "method": method.name(),
                "changed_count": mask.changed_count(),
                "candidate_t0": t0,
                "candidate_rule": rule.to_string(),
                "iom_approximation": true,
            });
            (mask, json)
        }
    };
    write_mask(&mask, &output)?;
    let json = with_eval(json, &mask, truth.as_deref())?;
    emit(&to_json(&json)?, report.as_deref())
}

fn frame_files(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let entries = fs::read_dir(dir)
        .map_err(|e| CliError::Io(format!("cannot list {}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && has_extension(p, IMAGE_EXTENSIONS))
        .collect();
    files.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(files)
}

#[derive(Debug, Serialize)]
struct FrameOutcome {
    frame: String,
    status: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    changed_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn process_frame(
    reference: &RasterImage,
    frame: &Path,
    params: &DetectionParams,
    out_dir: &Path,
) -> Result<usize, CliError> {
    let img = read_image(frame)?;
    let (mask, summary) = detect_changes(reference, &img, params)?;
    let stem = frame
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    write_mask(&mask, &out_dir.join(format!("{stem}_mask.png")))?;
    emit(
        &to_json(&summary)?,
        Some(&out_dir.join(format!("{stem}_report.json"))),
    )?;
    Ok(summary.changed_count)
}

pub fn batch(
    config: &Config,
    reference: &Path,
    frames_dir: &Path,
    args: &DetectionArgs,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = resolve_params(config, args)?;
    let out_dir = config
        .pick(output, "output", PathBuf::new())?;
    if out_dir.as_os_str().is_empty() {
        return Err(CliError::Usage("batch needs an output directory (-o)".into()));
    }
    if out_dir.exists() && fs::canonicalize(&out_dir).ok() == fs::canonicalize(frames_dir).ok() {
        return Err(CliError::Usage(
            "output directory must differ from the frame directory".into(),
        ));
    }

    let reference_img = read_image(reference)?;
    let frames = frame_files(frames_dir)?;
    if frames.is_empty() {
        return Err(CliError::Io(format!(
            "no image frames in {}",
            frames_dir.display()
        )));
    }
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;

    let mut outcomes = Vec::with_capacity(frames.len());
    for frame in &frames {
        let outcome = match process_frame(&reference_img, frame, &params, &out_dir) {
            Ok(count) => FrameOutcome {
                frame: file_name(frame),
                status: "ok",
                changed_count: Some(count),
                error: None,
            },
            Err(err) => {
                log::warn!("frame {}: {err}", frame.display());
                FrameOutcome {
                    frame: file_name(frame),
                    status: "failed",
                    changed_count: None,
                    error: Some(err.to_string()),
                }
            }
        };
        outcomes.push(outcome);
    }

    let succeeded = outcomes.iter().filter(|o| o.status == "ok").count();
    let summary = json!({
        "reference": file_name(reference),
        "params": params,
        "succeeded": succeeded,
        "failed": outcomes.len() - succeeded,
        "frames": outcomes,
    });
    emit(&to_json(&summary)?, Some(&out_dir.join("summary.json")))?;
    if succeeded == 0 {
        return Err(CliError::Io("no frame could be processed".into()));
    }
    Ok(())
}

pub struct SynthArgs {
    pub size: Option<String>,
    pub patch: Option<String>,
    pub noise: Option<u8>,
    pub seed: Option<u64>,
    pub background: Option<String>,
    pub patch_color: Option<String>,
    pub output: Option<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(s: &str, sep: char, n: usize, what: &str) -> Result<Vec<T>, CliError> {
    let parts: Vec<T> = s
        .split(sep)
        .map(|p| p.trim().parse::<T>())
        .collect::<Result<_, _>>()
        .map_err(|_| CliError::Usage(format!("malformed {what} {s:?}")))?;
    if parts.len() != n {
        return Err(CliError::Usage(format!("malformed {what} {s:?}")));
    }
    Ok(parts)
}

fn parse_rgb(s: &str, what: &str) -> Result<[u8; 3], CliError> {
    let v = parse_list::<u8>(s, ',', 3, what)?;
    Ok([v[0], v[1], v[2]])
}

pub fn synth(config: &Config, args: SynthArgs) -> Result<(), CliError> {
    let size = config.pick(args.size, "size", "64x64".to_string())?;
    let patch = config.pick(args.patch, "patch", "16,16,32,32".to_string())?;
    let background = config.pick(args.background, "background", "30,60,30".to_string())?;
    let patch_color = config.pick(args.patch_color, "patch_color", "200,180,150".to_string())?;
    let dims = parse_list::<usize>(&size.to_ascii_lowercase(), 'x', 2, "size")?;
    let rect = parse_list::<usize>(&patch, ',', 4, "patch")?;
    let spec = SynthSpec {
        width: dims[0],
        height: dims[1],
        patch: Rect {
            x: rect[0],
            y: rect[1],
            w: rect[2],
            h: rect[3],
        },
        background_rgb: parse_rgb(&background, "background color")?,
        patch_rgb: parse_rgb(&patch_color, "patch color")?,
        noise_amplitude: config.pick(args.noise, "noise", 0)?,
        seed: config.pick(args.seed, "seed", 0)?,
    };
    let out_dir = config.pick(args.output, "output", PathBuf::from("."))?;

    let (before, after, truth) = synth_pair(&spec)?;
    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_dir.display())))?;
    for (name, img) in [("before.png", &before), ("after.png", &after)] {
        let path = out_dir.join(name);
        save_image(img, &path).map_err(|e| CliError::at(&path, e))?;
    }
    write_mask(&truth, &out_dir.join("truth.png"))
}

pub fn eval(pred: &Path, truth: &Path, report: Option<PathBuf>) -> Result<(), CliError> {
    let p = load_mask(pred).map_err(|e| CliError::at(pred, e))?;
    let t = load_mask(truth).map_err(|e| CliError::at(truth, e))?;
    let metrics = compare_masks(&p, &t)?;
    emit(&to_json(&json!({ "eval": metrics }))?, report.as_deref())
}

fn csv_row(threshold: f64, changed: usize, m: &Metrics) -> String {
    format!(
        "{threshold:.1},{changed},{},{},{},{},{},{},{}\n",
        m.true_positives,
        m.false_positives,
        m.false_negatives,
        m.true_negatives,
        m.precision,
        m.recall,
        m.f1
    )
}

pub fn sweep(
    config: &Config,
    before: &Path,
    after: &Path,
    truth: &Path,
    args: &DetectionArgs,
    output: Option<PathBuf>,
) -> Result<(), CliError> {
    let params = resolve_params(config, args)?;
    let img1 = read_image(before)?;
    let img2 = read_image(after)?;
    let truth = load_mask(truth).map_err(|e| CliError::at(truth, e))?;
    let analysis = analyze(&img1, &img2, &params)?;

    let mut csv = String::from(
        "threshold,changed_count,true_positives,false_positives,false_negatives,true_negatives,precision,recall,f1\n",
    );
    for step in 1..=10 {
        let t = f64::from(step) / 10.0;
        let mask = analysis.mask(t);
        let metrics = compare_masks(&mask, &truth)?;
        csv.push_str(&csv_row(t, mask.changed_count(), &metrics));
    }
    emit(&csv, output.as_deref())
}
