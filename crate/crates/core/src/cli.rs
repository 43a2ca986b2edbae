//! Command-line surface. Exit codes: 0 success, 2 configuration or
//! parameter errors, 3 I/O or corruption, 4 generation failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{self, Dataset};
use crate::error::{Error, Result};
use crate::exec::{with_workers, Execution};
use crate::formats;
use crate::pointops::{self, PatchParams};
use crate::primitives::TriangleMesh;
use crate::procgen::{realize_parts, sample_program_attempt, sample_surface_points, GenConfig};

pub const SEED_ENV: &str = "PROCGEN3D_SEED";

#[derive(Debug, Parser)]
#[command(name = "procgen3d", version, about = "Procedural 3D shape datasets and point-cloud kernels")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a sharded dataset of synthetic shapes.
    Generate(GenerateArgs),
    /// Turn one shape into masked patches and write a patch file.
    Patchify(PatchifyArgs),
    /// Score predicted point sets against ground truth with Chamfer-L2.
    Chamfer(ChamferArgs),
    /// Summary statistics of a dataset.
    Stats(StatsArgs),
    /// Export one shape as an OBJ mesh or an XYZ point list.
    Inspect(InspectArgs),
    /// Assign shapes to named splits and record them in the manifest.
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// TOML config file: optional `out`, `count`, `workers` plus a `[generation]` table.
    pub config: Option<PathBuf>,
    /// Number of shapes to generate.
    #[arg(long)]
    pub count: Option<u64>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Master seed; falls back to the config file, then PROCGEN3D_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PatchifyArgs {
    /// Dataset directory or manifest file.
    pub manifest: PathBuf,
    /// Shape index.
    #[arg(long)]
    pub index: u64,
    /// Points subsampled from the shape.
    #[arg(long, default_value_t = 1024)]
    pub points: usize,
    /// Number of patches (FPS centers).
    #[arg(long, default_value_t = 64)]
    pub patches: usize,
    /// Points per patch (KNN group size).
    #[arg(long = "group-size", default_value_t = 32)]
    pub group_size: usize,
    /// Fraction of patches to mask.
    #[arg(long = "mask-ratio", default_value_t = 0.6)]
    pub mask_ratio: f64,
    /// Seed for subsampling and masking; falls back to PROCGEN3D_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output patch file.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ChamferArgs {
    /// Predicted point sets (point-set file, shard, or XYZ text).
    pub pred: PathBuf,
    /// Ground-truth point sets, same shape count.
    pub gt: PathBuf,
    /// Include per-shape values in the report.
    #[arg(long = "per-shape")]
    pub per_shape: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StatsFormat {
    Table,
    Csv,
    Json,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset directory or manifest file.
    pub manifest: PathBuf,
    /// Output format.
    #[arg(long, value_enum, default_value_t = StatsFormat::Table)]
    pub format: StatsFormat,
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("export").required(true).multiple(true).args(["obj", "xyz"]))]
pub struct InspectArgs {
    /// Dataset directory or manifest file.
    pub manifest: PathBuf,
    /// Shape index.
    #[arg(long)]
    pub index: u64,
    /// Write the shape's realized part meshes as OBJ.
    #[arg(long)]
    pub obj: Option<PathBuf>,
    /// Write the stored point cloud as `x y z` lines.
    #[arg(long)]
    pub xyz: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Dataset directory or manifest file.
    pub manifest: PathBuf,
    /// `name=fraction`, repeatable (e.g. `--fraction test=0.8 --fraction val=0.2`).
    #[arg(long = "fraction", required = true)]
    pub fractions: Vec<String>,
    /// Shuffle seed; falls back to PROCGEN3D_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Contents of a `generate` config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CliConfigFile {
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub count: Option<u64>,
    #[serde(default)]
    pub workers: Option<usize>,
    pub generation: GenConfig,
}

impl CliConfigFile {
    /// Parses and validates a config document. Also reports whether the
    /// generation table sets `master_seed` explicitly.
    pub fn parse(text: &str) -> Result<(CliConfigFile, bool)> {
        let cfg: CliConfigFile = toml::from_str(text).map_err(|e| Error::param("config", e.message().to_string()))?;
        cfg.generation.validate()?;
        let table: toml::Table = toml::from_str(text).map_err(|e| Error::param("config", e.to_string()))?;
        let has_seed = table
            .get("generation")
            .and_then(|g| g.get("master_seed"))
            .is_some();
        Ok((cfg, has_seed))
    }
}

fn env_seed() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::param(SEED_ENV, format!("not an unsigned 64-bit integer: {v:?}"))),
        Err(_) => Ok(None),
    }
}

fn print_json(out: &mut dyn Write, value: &serde_json::Value) -> Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value).unwrap()).map_err(|e| Error::io("<stdout>", e))
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    f(&mut w).and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

pub fn cmd_generate(args: &GenerateArgs, out: &mut dyn Write) -> Result<()> {
    let (file, file_seed) = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            let (cfg, has_seed) = CliConfigFile::parse(&text)?;
            (Some(cfg), has_seed)
        }
        None => (None, false),
    };
    let mut config = file.as_ref().map(|f| f.generation.clone()).unwrap_or_default();
    config.master_seed = match (args.seed, file_seed) {
        (Some(s), _) => s,
        (None, true) => config.master_seed,
        (None, false) => env_seed()?.unwrap_or(0),
    };
    config.validate()?;
    let count = args
        .count
        .or(file.as_ref().and_then(|f| f.count))
        .ok_or_else(|| Error::param("count", "give --count or set `count` in the config file"))?;
    let out_dir = args
        .out
        .clone()
        .or(file.as_ref().and_then(|f| f.out.clone()))
        .ok_or_else(|| Error::param("out", "give --out or set `out` in the config file"))?;
    let workers = args.workers.or(file.as_ref().and_then(|f| f.workers)).unwrap_or(1);
    if workers == 0 {
        return Err(Error::param("workers", "must be >= 1"));
    }

    let exec = if workers > 1 { Execution::Parallel } else { Execution::Sequential };
    let manifest = with_workers(workers, || {
        dataset::build_dataset_with(&config, count, &out_dir, exec, |done, total| {
            eprintln!("generated {done}/{total} shapes");
        })
    })?;
    print_json(
        out,
        &json!({
            "manifest": out_dir.join(dataset::MANIFEST_FILE),
            "total_shapes": manifest.total_shapes,
            "points_per_shape": manifest.points_per_shape,
            "shards": manifest.shards.len(),
            "config_hash": manifest.config_hash,
            "manifest_hash": format!("{:016x}", manifest.content_hash()),
        }),
    )
}

fn seed_or_env(seed: Option<u64>) -> Result<u64> {
    Ok(match seed {
        Some(s) => s,
        None => env_seed()?.unwrap_or(0),
    })
}

pub fn cmd_patchify(args: &PatchifyArgs, out: &mut dyn Write) -> Result<()> {
    let params = PatchParams {
        input_points: args.points,
        num_patches: args.patches,
        group_size: args.group_size,
        mask_ratio: args.mask_ratio,
    };
    params.validate()?;
    let seed = seed_or_env(args.seed)?;
    let ds = Dataset::open(&args.manifest)?;
    let cloud = ds.read_shape(args.index)?;
    let patches = pointops::patchify(&cloud, &params, seed)?;
    let bytes = formats::encode_patch_file(&patches, args.index);
    fs::write(&args.out, &bytes).map_err(|e| Error::io(&args.out, e))?;
    print_json(
        out,
        &json!({
            "out": args.out,
            "shape_index": args.index,
            "num_patches": patches.num_patches(),
            "group_size": patches.group_size(),
            "masked": patches.masked(),
        }),
    )
}

/// Per-shape Chamfer-L2 between matching sets, and their arithmetic mean.
pub fn chamfer_report(pred: &[Vec<crate::primitives::Vec3>], gt: &[Vec<crate::primitives::Vec3>]) -> Result<(Vec<f64>, f64)> {
    if pred.len() != gt.len() {
        return Err(Error::Validation(format!(
            "shape count mismatch: {} predicted vs {} ground truth",
            pred.len(),
            gt.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::Validation("no shapes to score".into()));
    }
    let per_shape = pred
        .iter()
        .zip(gt)
        .map(|(p, g)| pointops::chamfer_l2(p, g))
        .collect::<Result<Vec<f64>>>()?;
    let mean = per_shape.iter().sum::<f64>() / per_shape.len() as f64;
    Ok((per_shape, mean))
}

pub fn cmd_chamfer(args: &ChamferArgs, out: &mut dyn Write) -> Result<()> {
    let pred = formats::read_point_sets(&args.pred)?;
    let gt = formats::read_point_sets(&args.gt)?;
    let (per_shape, mean) = chamfer_report(&pred, &gt)?;
    let mut report = json!({
        "shape_count": per_shape.len(),
        "mean_chamfer_l2": mean,
    });
    if args.per_shape {
        report["per_shape"] = json!(per_shape);
    }
    print_json(out, &report)
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> Result<()> {
    let ds = Dataset::open(&args.manifest)?;
    let s = dataset::stats(&ds)?;
    let io = |e| Error::io("<stdout>", e);
    match args.format {
        StatsFormat::Json => print_json(out, &serde_json::to_value(&s).unwrap()),
        StatsFormat::Csv => {
            writeln!(out, "scope,metric,value").map_err(io)?;
            for [scope, metric, value] in s.rows() {
                writeln!(out, "{scope},{metric},{value}").map_err(io)?;
            }
            Ok(())
        }
        StatsFormat::Table => {
            let rows = s.rows();
            let w0 = rows.iter().map(|r| r[0].len()).max().unwrap_or(0).max(5);
            let w1 = rows.iter().map(|r| r[1].len()).max().unwrap_or(0).max(6);
            writeln!(out, "{:<w0$}  {:<w1$}  value", "scope", "metric").map_err(io)?;
            for [scope, metric, value] in rows {
                writeln!(out, "{scope:<w0$}  {metric:<w1$}  {value}").map_err(io)?;
            }
            Ok(())
        }
    }
}

pub fn cmd_inspect(args: &InspectArgs, out: &mut dyn Write) -> Result<()> {
    let ds = Dataset::open(&args.manifest)?;
    let m = &ds.manifest;
    if args.index >= m.total_shapes {
        return Err(Error::param("index", format!("{} out of range for {} shapes", args.index, m.total_shapes)));
    }
    if let Some(path) = &args.obj {
        let program = sample_program_attempt(&m.config, args.index, m.attempt_of(args.index))?;
        let meta = sample_surface_points(&program, m.config.points_per_shape)?
            .norm_meta
            .expect("sampled clouds are normalized");
        let meshes = realize_parts(&program, program.resolution)?;
        let merged = TriangleMesh::merge(&meshes);
        let normalized = TriangleMesh::new(
            merged.vertices().iter().map(|v| (v - meta.centroid) / meta.scale).collect(),
            merged.triangles().to_vec(),
        )?;
        write_file(path, |w| normalized.write_obj(w))?;
    }
    if let Some(path) = &args.xyz {
        let cloud = ds.read_shape(args.index)?;
        write_file(path, |w| formats::write_xyz(&cloud.points, w))?;
    }
    print_json(out, &json!({ "shape_index": args.index, "obj": args.obj, "xyz": args.xyz }))
}

fn parse_fraction(s: &str) -> Result<(String, f64)> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| Error::param("fraction", format!("expected name=value, got {s:?}")))?;
    let value: f64 = value
        .parse()
        .map_err(|_| Error::param("fraction", format!("bad number in {s:?}")))?;
    Ok((name.to_string(), value))
}

pub fn cmd_split(args: &SplitArgs, out: &mut dyn Write) -> Result<()> {
    let fractions = args
        .fractions
        .iter()
        .map(|s| parse_fraction(s))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let mut ds = Dataset::open(&args.manifest)?;
    ds.manifest = dataset::split(&ds.manifest, &fractions, seed_or_env(args.seed)?)?;
    ds.save_manifest()?;
    let sizes: BTreeMap<&String, usize> = ds.manifest.splits.iter().flatten().map(|(k, v)| (k, v.len())).collect();
    print_json(out, &json!({ "splits": sizes }))
}

pub fn execute(cli: &Cli, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate(a) => cmd_generate(a, out),
        Command::Patchify(a) => cmd_patchify(a, out),
        Command::Chamfer(a) => cmd_chamfer(a, out),
        Command::Stats(a) => cmd_stats(a, out),
        Command::Inspect(a) => cmd_inspect(a, out),
        Command::Split(a) => cmd_split(a, out),
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
