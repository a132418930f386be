use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde_json::json;
use signfit::classifier::{fit_tree, read_training_data, DecisionTree, TreeParams};
use signfit::hamnosys::{label_corpus, read_corpus, write_labels, HandshapeEquality, SymbolTable};
use signfit::keypoints::load_keypoint_sequence;
use signfit::linguistic::{RpsFile, SignClass};
use signfit::metrics_synth::{
    ablation_run, evaluate_sequence, gradient_trials, synth_sequence, SequenceMetrics, SynthSpec, Toggle,
};
use signfit::optimizer::{fit_sequence, init_camera, ClassChoice, PoseFile, SequenceInputs};

use crate::config::RunConfig;
use crate::failure::Failure;

type CmdResult = Result<(), Failure>;

fn write_file(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn header_comment(cfg: &RunConfig) -> String {
    cfg.to_toml()
        .lines()
        .map(|l| format!("# {l}\n"))
        .collect()
}

// ---------------------------------------------------------------------------
// fit

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Directory of per-frame keypoint JSON files.
    #[arg(long)]
    pub keypoints: PathBuf,
    /// Output pose file.
    #[arg(long)]
    pub out: PathBuf,
    /// Sign class (`0a` .. `3b`) or `auto` to predict the group.
    #[arg(long, default_value = "auto")]
    pub class: String,
    /// Write the estimated reference poses here.
    #[arg(long)]
    pub rps_out: Option<PathBuf>,
    /// Reuse reference poses from an earlier run instead of re-estimating them.
    #[arg(long)]
    pub rps_in: Option<PathBuf>,
    /// Decision tree for `--class auto` (default: the fallback thresholds).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Per-frame solver report (default: `<out>.report.json`).
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[arg(long)]
    pub fps: Option<f64>,
}

fn parse_class(s: &str) -> Result<ClassChoice, Failure> {
    if s == "auto" {
        Ok(ClassChoice::Auto)
    } else {
        Ok(ClassChoice::Class(SignClass::from_str(s)?))
    }
}

pub fn fit(mut cfg: RunConfig, a: FitArgs) -> CmdResult {
    if !a.keypoints.is_dir() {
        return Err(Failure::input(format!("keypoint directory not found: {}", a.keypoints.display())));
    }
    if let Some(fps) = a.fps {
        cfg.fps = fps;
    }
    let class = parse_class(&a.class)?;
    let skel = cfg.skeleton()?;
    let basis = cfg.basis()?;
    let seq = load_keypoint_sequence(&a.keypoints, cfg.fps)?;
    let tree = a.tree.as_ref().map(DecisionTree::load).transpose()?;
    let rps = a.rps_in.as_ref().map(RpsFile::load).transpose()?;
    let camera = if cfg.camera.is_empty() {
        None
    } else {
        Some(cfg.camera.apply(init_camera(&seq, &skel, cfg.sequence.focal)?))
    };
    let inputs = SequenceInputs {
        class,
        tree: tree.as_ref(),
        rps: rps.as_ref(),
        camera,
        basis: basis.as_ref(),
    };
    let fit = fit_sequence(&skel, &seq, &cfg.sequence, &inputs, cfg.execution())?;

    let mut echo = cfg.to_json();
    echo["class"] = json!(a.class);
    PoseFile::from_fit(&skel, &fit, echo.clone()).save(&a.out)?;
    if let Some(p) = &a.rps_out {
        fit.rps.save(p)?;
    }

    let frames: Vec<_> = fit
        .frames
        .iter()
        .zip(&fit.reports)
        .map(|(f, r)| {
            json!({
                "frame": f,
                "iterations": r.iterations,
                "convergence": r.reason,
                "initial_value": r.initial_value,
                "final_value": r.final_value,
                "gradient_norm": r.gradient_norm,
                "monotone": r.is_monotone(),
            })
        })
        .collect();
    let report = json!({
        "config": echo,
        "class": fit.class,
        "group": fit.group,
        "constraints": fit.constraints,
        "features": fit.features,
        "trim": fit.trim,
        "core": fit.core,
        "camera": fit.camera,
        "bone_scale": fit.bone_scale,
        "warnings": fit.warnings,
        "frames": frames,
    });
    let report_path = a.report.unwrap_or_else(|| {
        let mut p = a.out.clone().into_os_string();
        p.push(".report.json");
        p.into()
    });
    write_file(&report_path, &serde_json::to_string_pretty(&report).expect("report serialises"))?;

    let unconverged = fit
        .reports
        .iter()
        .filter(|r| r.reason != signfit::optimizer::Convergence::GradientNorm)
        .count();
    println!(
        "fitted {} frames (trim {}..={}), class {}, group {}, {} frames stopped before the gradient tolerance",
        fit.frames.len(),
        fit.trim.0,
        fit.trim.1,
        fit.class.map_or_else(|| "-".into(), |c| c.to_string()),
        fit.group.map_or_else(|| "-".into(), |g| g.to_string()),
        unconverged
    );
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// parse-hamnosys

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Equality {
    Exact,
    KindOnly,
}

#[derive(Debug, Args)]
pub struct ParseArgs {
    /// Tab-separated `gloss<TAB>annotation` file.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Labelled output (default: stdout summary only).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Replacement symbol table (`name<TAB>U+XXXX<TAB>KIND`).
    #[arg(long)]
    pub symbols: Option<PathBuf>,
    /// How two handshape blocks are compared.
    #[arg(long, value_enum, default_value = "exact")]
    pub equality: Equality,
}

pub fn parse_hamnosys(cfg: RunConfig, a: ParseArgs) -> CmdResult {
    let records = read_corpus(&a.corpus)?;
    let table = match &a.symbols {
        Some(p) => SymbolTable::load(p)?,
        None => SymbolTable::default(),
    };
    let equality = match a.equality {
        Equality::Exact => HandshapeEquality::Exact,
        Equality::KindOnly => HandshapeEquality::KindOnly,
    };
    let labels = label_corpus(&records, &table, equality, cfg.execution());
    if let Some(out) = &a.out {
        write_labels(&labels, out, &cfg.to_toml())?;
    }
    for r in labels.records.iter().filter(|r| !r.diagnostics.is_empty()) {
        eprintln!("{}: {}", r.gloss, r.diagnostics.join("; "));
    }
    for (class, n) in &labels.counts {
        println!("{class}\t{n}");
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// train-classifier / classify

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// CSV with an `f1,f2,f3,group` header.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Maximum depth; 0 grows until the leaves are pure.
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
}

pub fn train_classifier(mut cfg: RunConfig, a: TrainArgs) -> CmdResult {
    if let Some(d) = a.max_depth {
        cfg.tree.max_depth = (d > 0).then_some(d);
    }
    if let Some(m) = a.min_leaf {
        cfg.tree.min_leaf = m;
    }
    let data = read_training_data(&a.features)?;
    let params: TreeParams = cfg.tree;
    let tree = fit_tree(&data, params)?;
    let mut file: serde_json::Value = serde_json::from_str(&tree.to_json()).expect("tree JSON is valid");
    file["config"] = cfg.to_json();
    write_file(&a.out, &serde_json::to_string_pretty(&file).expect("tree serialises"))?;
    println!(
        "training accuracy: {:.1}% on {} samples, depth {}",
        100.0 * tree.accuracy(&data),
        data.len(),
        tree.metadata.depth
    );
    Ok(())
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Tree file from `train-classifier` (default: the fallback thresholds).
    #[arg(long)]
    pub tree: Option<PathBuf>,
    /// Labelled feature file; prints one prediction per row and the accuracy.
    #[arg(long, conflicts_with = "keypoints", required_unless_present = "keypoints")]
    pub features: Option<PathBuf>,
    /// Keypoint directory; runs the fitting front end to obtain features.
    #[arg(long)]
    pub keypoints: Option<PathBuf>,
    /// Reference poses from `fit --rps-out` for `--keypoints`.
    #[arg(long)]
    pub rps_in: Option<PathBuf>,
}

pub fn classify(cfg: RunConfig, a: ClassifyArgs) -> CmdResult {
    let tree = match &a.tree {
        Some(p) => DecisionTree::load(p)?,
        None => DecisionTree::fallback(&cfg.sequence.fallback),
    };
    if let Some(path) = &a.features {
        let data = read_training_data(path)?;
        for (i, (f, label)) in data.iter().enumerate() {
            println!("{i}\t{}\t{label}", tree.predict(f));
        }
        println!("accuracy: {:.1}%", 100.0 * tree.accuracy(&data));
        return Ok(());
    }
    let dir = a.keypoints.as_ref().expect("clap requires one input");
    if !dir.is_dir() {
        return Err(Failure::input(format!("keypoint directory not found: {}", dir.display())));
    }
    let skel = cfg.skeleton()?;
    let seq = load_keypoint_sequence(dir, cfg.fps)?;
    let rps = a.rps_in.as_ref().map(RpsFile::load).transpose()?;
    let inputs = SequenceInputs {
        class: ClassChoice::Auto,
        tree: Some(&tree),
        rps: rps.as_ref(),
        ..Default::default()
    };
    let fit = fit_sequence(&skel, &seq, &cfg.sequence, &inputs, cfg.execution())?;
    for w in &fit.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(f) = fit.features {
        println!("features\t{:.6}\t{:.6}\t{:.6}", f.f1_min_wrist_range, f.f2_init_pose_dist, f.f3_max_pose_change);
    }
    println!("group\t{}", fit.group.map_or_else(|| "-".into(), |g| g.to_string()));
    Ok(())
}

// ---------------------------------------------------------------------------
// synth / eval / ablate

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub class: SignClass,
    /// Output directory (`keypoints/`, `clean/`, `ground_truth.json`, `run.toml`).
    #[arg(long)]
    pub out: PathBuf,
    /// Gaussian pixel noise (standard deviation).
    #[arg(long)]
    pub noise: Option<f64>,
    /// Per-frame probability of dropping each hand's keypoints.
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub frames: Option<usize>,
}

pub fn synth(mut cfg: RunConfig, a: SynthArgs) -> CmdResult {
    let spec = &mut cfg.synth;
    spec.class = a.class;
    spec.seed = cfg.seed;
    if let Some(n) = a.noise {
        spec.noise_px = n;
    }
    if let Some(d) = a.dropout {
        spec.dropout = d;
    }
    if let Some(f) = a.frames {
        spec.frames = f;
    }
    let skel = cfg.skeleton()?;
    let seq = synth_sequence(&skel, &cfg.synth)?;
    seq.save(&skel, &a.out)?;
    write_file(&a.out.join("run.toml"), &cfg.to_toml())?;
    println!("wrote {} frames of class {} to {}", cfg.synth.frames, a.class, a.out.display());
    Ok(())
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Fitted pose file.
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth pose file.
    #[arg(long)]
    pub gt: PathBuf,
}

fn metrics_rows(m: &SequenceMetrics) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "frames\t{}", m.frames);
    let _ = writeln!(s, "left_hand\t{:.3} mm\t{:.6} rad", m.left_mm, m.left_rad);
    let _ = writeln!(s, "right_hand\t{:.3} mm\t{:.6} rad", m.right_mm, m.right_rad);
    let _ = writeln!(s, "both_hands\t{:.3} mm\t{:.6} rad", m.both_mm, m.both_rad);
    let _ = writeln!(s, "upper_body\t{:.3} mm", m.upper_body_mm);
    let _ = writeln!(s, "all_joints\t{:.6} rad", m.all_rad);
    s
}

pub fn eval(cfg: RunConfig, a: EvalArgs) -> CmdResult {
    let skel = cfg.skeleton()?;
    let pred = PoseFile::load(&a.pred)?;
    let gt = PoseFile::load(&a.gt)?;
    pred.check_against(&skel)?;
    gt.check_against(&skel)?;
    let m = evaluate_sequence(&skel, &pred.states(), &gt.states())?;
    print!("{}", metrics_rows(&m));
    Ok(())
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    /// `symmetric`, `asymmetric`, `all` or a comma list such as `1a,2b`.
    #[arg(long, default_value = "symmetric")]
    pub classes: String,
    /// Inclusive range `0..9`, or a comma list.
    #[arg(long, default_value = "0..9")]
    pub seeds: String,
    /// Comma list of `none`, `sym_only`, `inv_only`, `both`.
    #[arg(long, default_value = "none,sym_only,inv_only,both")]
    pub toggles: String,
    #[arg(long, default_value_t = 2.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0.3)]
    pub dropout: f64,
    #[arg(long)]
    pub frames: Option<usize>,
    /// Write the table here as well as to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Column separator.
    #[arg(long, default_value = "\t")]
    pub delimiter: String,
}

pub fn parse_classes(s: &str) -> Result<Vec<SignClass>, Failure> {
    use SignClass::*;
    Ok(match s {
        "symmetric" => vec![C1a, C1b, C2a],
        "asymmetric" => vec![C0a, C0b, C2b, C3a, C3b],
        "all" => SignClass::ALL.to_vec(),
        list => list
            .split(',')
            .map(|c| SignClass::from_str(c.trim()))
            .collect::<Result<_, _>>()?,
    })
}

/// `a..b` (inclusive), `a..=b`, or a comma list.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::input(format!("bad seed list {s:?}"));
    let num = |t: &str| t.trim().parse::<u64>().map_err(|_| bad());
    if let Some((lo, hi)) = s.split_once("..") {
        let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
        if hi < lo {
            return Err(bad());
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',').map(num).collect()
}

pub fn ablate(cfg: RunConfig, a: AblateArgs) -> CmdResult {
    let classes = parse_classes(&a.classes)?;
    let seeds = parse_seeds(&a.seeds)?;
    let toggles = a
        .toggles
        .split(',')
        .map(|t| Toggle::from_str(t.trim()))
        .collect::<Result<Vec<_>, _>>()?;
    let specs: Vec<SynthSpec> = classes
        .iter()
        .flat_map(|&class| {
            seeds.iter().map(move |&seed| SynthSpec {
                class,
                seed,
                noise_px: a.noise,
                dropout: a.dropout,
                frames: a.frames.unwrap_or(cfg.synth.frames),
                ..cfg.synth
            })
        })
        .collect();
    let skel = cfg.skeleton()?;
    let table = ablation_run(&skel, &specs, &toggles, &cfg.sequence, cfg.execution())?;
    let sep = match a.delimiter.as_str() {
        "\\t" | "tab" => '\t',
        other => {
            let mut chars = other.chars();
            match (chars.next(), chars.next()) {
                (Some(c), None) => c,
                _ => return Err(Failure::input(format!("delimiter must be one character, got {other:?}"))),
            }
        }
    };
    let mut text = header_comment(&cfg);
    let _ = writeln!(
        text,
        "# classes = {:?}, seeds = {:?}, noise = {}, dropout = {}",
        a.classes, a.seeds, a.noise, a.dropout
    );
    text.push_str(&table.to_delimited(sep));
    if let Some(p) = &a.out {
        write_file(p, &text)?;
    }
    print!("{}", table.to_delimited(sep));
    Ok(())
}

// ---------------------------------------------------------------------------
// check-grad

#[derive(Debug, Args)]
pub struct CheckGradArgs {
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Central-difference step.
    #[arg(long, default_value_t = 1e-5)]
    pub eps: f64,
    /// Drop the observations and the bend term, leaving only quadratic terms.
    #[arg(long)]
    pub quadratic: bool,
    /// Exit with status 2 when the worst relative error exceeds this.
    #[arg(long)]
    pub tol: Option<f64>,
}

pub fn check_grad(cfg: RunConfig, a: CheckGradArgs) -> CmdResult {
    let skel = cfg.skeleton()?;
    let mut objective = cfg.sequence.fit.objective;
    if a.quadratic {
        objective.weights.lambda_alpha = 0.0;
    }
    let errors = gradient_trials(&skel, &objective, a.trials, cfg.seed, a.eps, !a.quadratic, cfg.execution())?;
    let worst = errors.iter().copied().fold(0.0, f64::max);
    let mean = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    println!("trials {}\tmax {worst:.3e}\tmean {mean:.3e}", errors.len());
    match a.tol {
        Some(t) if worst > t => Err(Failure::numerical(format!("gradient error {worst:.3e} exceeds {t:.1e}"))),
        _ => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_lists() {
        assert_eq!(parse_seeds("0..9").unwrap(), (0..10).collect::<Vec<_>>());
        assert_eq!(parse_seeds("2..=4").unwrap(), vec![2, 3, 4]);
        assert_eq!(parse_seeds("5, 1").unwrap(), vec![5, 1]);
        assert!(parse_seeds("3..1").is_err());
        assert!(parse_seeds("x").is_err());
    }

    #[test]
    fn class_sets() {
        assert_eq!(parse_classes("symmetric").unwrap().len(), 3);
        assert_eq!(parse_classes("asymmetric").unwrap().len(), 5);
        assert_eq!(parse_classes("1a, 3b").unwrap(), vec![SignClass::C1a, SignClass::C3b]);
        assert!(parse_classes("4c").is_err());
    }
}
