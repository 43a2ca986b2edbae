use std::path::Path;
use std::process::{Command, Output};

use procgen3d::formats;
use procgen3d::pointops;

fn procgen(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_procgen3d"))
        .args(args)
        .env_remove("PROCGEN3D_SEED")
        .output()
        .expect("run procgen3d")
}

fn ok(args: &[&str]) -> String {
    let out = procgen(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    procgen(args).status.code().unwrap()
}

fn json(s: &str) -> serde_json::Value {
    serde_json::from_str(s).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn small_dataset(dir: &Path, complexity: &str, count: u32) {
    let cfg = dir.join("gen.toml");
    std::fs::write(
        &cfg,
        format!("[generation]\ncomplexity = \"{complexity}\"\npoints_per_shape = 1024\nmaster_seed = 5\n"),
    )
    .unwrap();
    ok(&["generate", p(&cfg), "--count", &count.to_string(), "--out", p(&dir.join("ds"))]);
}

#[test]
fn help_lists_every_flag() {
    let expected: &[(&str, &[&str])] = &[
        ("generate", &["--count", "--out", "--workers", "--seed", "[CONFIG]"]),
        (
            "patchify",
            &["--index", "--points", "--patches", "--group-size", "--mask-ratio", "--seed", "--out"],
        ),
        ("chamfer", &["<PRED>", "<GT>", "--per-shape"]),
        ("stats", &["--format", "table", "csv", "json"]),
        ("inspect", &["--index", "--obj", "--xyz"]),
        ("split", &["--fraction", "--seed"]),
    ];
    let top = ok(&["--help"]);
    for (cmd, flags) in expected {
        assert!(top.contains(cmd), "top-level help misses {cmd}");
        let help = ok(&[cmd, "--help"]);
        for flag in *flags {
            assert!(help.contains(flag), "{cmd} --help misses {flag}");
        }
    }
}

#[test]
fn usage_and_config_errors_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["generate", "--out", p(tmp.path())]), 2);
    assert_eq!(code(&["generate", "--count", "0", "--out", p(&tmp.path().join("z"))]), 2);

    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[generation]\ncomplexity = \"d\"\ntorus_minor_ratio = [0.2, 1.5]\n").unwrap();
    let out = procgen(&["generate", p(&bad), "--count", "1", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("torus_minor_ratio"));

    std::fs::write(&bad, "[generation]\ncomplexity = \"d\"\nshapes = 3\n").unwrap();
    let out = procgen(&["generate", p(&bad), "--count", "1", "--out", p(&tmp.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("shapes"));
}

#[test]
fn io_and_corruption_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&["stats", p(&tmp.path().join("missing"))]), 3);
    small_dataset(tmp.path(), "a", 4);
    let shard = tmp.path().join("ds/shard_00000.pgpc");
    let mut bytes = std::fs::read(&shard).unwrap();
    bytes[100] ^= 0x10;
    std::fs::write(&shard, &bytes).unwrap();
    assert_eq!(code(&["stats", p(&tmp.path().join("ds"))]), 3);
}

#[test]
fn generate_is_deterministic_and_seed_flag_wins() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gen.toml");
    std::fs::write(&cfg, "count = 6\n[generation]\ncomplexity = \"c\"\npoints_per_shape = 256\nmaster_seed = 1\n").unwrap();
    let run = |name: &str, extra: &[&str]| {
        let mut args = vec!["generate", p(&cfg), "--out"];
        let out = tmp.path().join(name);
        let out = out.to_str().unwrap().to_string();
        args.push(&out);
        args.extend_from_slice(extra);
        json(&ok(&args))["manifest_hash"].as_str().unwrap().to_string()
    };
    let a = run("a", &["--workers", "1"]);
    let b = run("b", &["--workers", "4"]);
    let c = run("c", &["--seed", "2"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(
        std::fs::read(tmp.path().join("a/shard_00000.pgpc")).unwrap(),
        std::fs::read(tmp.path().join("b/shard_00000.pgpc")).unwrap()
    );

    // Environment seed applies only when neither flag nor file sets one.
    std::fs::write(&cfg, "count = 6\n[generation]\ncomplexity = \"c\"\npoints_per_shape = 256\n").unwrap();
    let env_run = Command::new(env!("CARGO_BIN_EXE_procgen3d"))
        .args(["generate", p(&cfg), "--out", p(&tmp.path().join("d"))])
        .env("PROCGEN3D_SEED", "1")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(json(&String::from_utf8(env_run.stdout).unwrap())["manifest_hash"], a.as_str());
}

#[test]
fn inspect_xyz_round_trips_through_chamfer() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "d", 3);
    let ds = tmp.path().join("ds");
    let xyz = tmp.path().join("s1.xyz");
    let obj = tmp.path().join("s1.obj");
    ok(&["inspect", p(&ds), "--index", "1", "--xyz", p(&xyz), "--obj", p(&obj)]);

    let from_text = formats::read_point_sets(&xyz).unwrap();
    let stored = procgen3d::dataset::Dataset::open(&ds).unwrap().read_shape(1).unwrap();
    assert_eq!(from_text[0], stored.points);

    let gt = tmp.path().join("gt.pgps");
    std::fs::write(&gt, formats::encode_point_sets(std::slice::from_ref(&stored.points))).unwrap();
    let report = json(&ok(&["chamfer", p(&xyz), p(&gt), "--per-shape"]));
    assert_eq!(report["shape_count"], 1);
    assert!(report["mean_chamfer_l2"].as_f64().unwrap() <= 1e-6);
    assert_eq!(report["per_shape"].as_array().unwrap().len(), 1);

    let obj_text = std::fs::read_to_string(&obj).unwrap();
    assert!(obj_text.lines().any(|l| l.starts_with("v ")));
    assert!(obj_text.lines().any(|l| l.starts_with("f ")));

    assert_eq!(code(&["inspect", p(&ds), "--index", "3", "--xyz", p(&xyz)]), 2);
    assert_eq!(code(&["inspect", p(&ds), "--index", "0"]), 2);
}

#[test]
fn chamfer_shape_count_mismatch_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "b", 3);
    let one = tmp.path().join("one.pgps");
    let z = procgen3d::primitives::Vec3::zeros();
    std::fs::write(&one, formats::encode_point_sets(&[vec![z]])).unwrap();
    let shard = tmp.path().join("ds/shard_00000.pgpc");
    assert_eq!(code(&["chamfer", p(&one), p(&shard)]), 2);
    let report = json(&ok(&["chamfer", p(&shard), p(&shard)]));
    assert_eq!(report["shape_count"], 3);
    assert_eq!(report["mean_chamfer_l2"], 0.0);
    assert!(report.get("per_shape").is_none());
}

#[test]
fn patchify_defaults_give_38_of_64() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "d", 2);
    let out = tmp.path().join("p.pgpt");
    let summary = json(&ok(&["patchify", p(&tmp.path().join("ds")), "--index", "1", "--out", p(&out)]));
    assert_eq!(summary["num_patches"], 64);
    assert_eq!(summary["group_size"], 32);
    assert_eq!(summary["masked"], 38);
    let file = formats::decode_patch_file(&std::fs::read(&out).unwrap(), &out).unwrap();
    assert_eq!(file.mask.iter().filter(|&&m| m).count(), 38);
    assert_eq!(file.groups.len(), 64);
    assert!(file.groups.iter().all(|g| g.len() == 32));

    // More input points than the shape holds.
    let too_many = procgen(&["patchify", p(&tmp.path().join("ds")), "--index", "0", "--points", "4096", "--out", p(&out)]);
    assert_eq!(too_many.status.code(), Some(2));
    assert_eq!(pointops::masked_count(0.6, 64), 38);
}

#[test]
fn stats_formats_agree_and_tier_a_is_single_primitive() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "single_primitive", 5);
    let ds = tmp.path().join("ds");
    let csv = ok(&["stats", p(&ds), "--format", "csv"]);
    let table = ok(&["stats", p(&ds), "--format", "table"]);
    let js = json(&ok(&["stats", p(&ds), "--format", "json"]));

    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("scope,metric,value"));
    let csv_rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    let table_rows: Vec<Vec<String>> = table
        .lines()
        .skip(1)
        .map(|l| l.split_whitespace().map(String::from).collect())
        .collect();
    assert_eq!(csv_rows, table_rows);

    assert!(csv_rows.contains(&vec!["all".into(), "primitives_1".into(), "5".into()]));
    assert!(!csv_rows.iter().any(|r| r[1].starts_with("primitives_") && r[1] != "primitives_1"));
    assert_eq!(js["total_shapes"], 5);
}

#[test]
fn split_records_fractions_in_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "a", 10);
    let ds = tmp.path().join("ds");
    let out = json(&ok(&["split", p(&ds), "--fraction", "train=0.8", "--fraction", "val=0.2", "--seed", "1"]));
    assert_eq!(out["splits"]["train"], 8);
    assert_eq!(out["splits"]["val"], 2);
    let stats = ok(&["stats", p(&ds), "--format", "csv"]);
    assert!(stats.contains("split:val,count,2"));
    assert_eq!(code(&["split", p(&ds), "--fraction", "train=0.9", "--fraction", "val=0.2"]), 2);
}

#[test]
fn patchify_mask_ratio_zero_and_segmentation_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gen.toml");
    std::fs::write(&cfg, "[generation]\ncomplexity = \"c\"\npoints_per_shape = 2048\n").unwrap();
    let ds = tmp.path().join("ds");
    ok(&["generate", p(&cfg), "--count", "1", "--out", p(&ds)]);
    let out = tmp.path().join("p.pgpt");

    let zero = json(&ok(&["patchify", p(&ds), "--index", "0", "--mask-ratio", "0", "--out", p(&out)]));
    assert_eq!(zero["masked"], 0);
    let file = formats::decode_patch_file(&std::fs::read(&out).unwrap(), &out).unwrap();
    assert!(file.mask.iter().all(|&m| !m));

    let seg = json(&ok(&["patchify", p(&ds), "--index", "0", "--points", "2048", "--patches", "128", "--out", p(&out)]));
    assert_eq!(seg["num_patches"], 128);
    assert_eq!(seg["masked"], 76);
    assert_eq!(code(&["patchify", p(&ds), "--index", "0", "--mask-ratio", "1.5", "--out", p(&out)]), 2);
}

#[test]
fn chamfer_singletons_score_two() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a.xyz"), tmp.path().join("b.xyz"));
    std::fs::write(&a, "0 0 0\n").unwrap();
    std::fs::write(&b, "1 0 0\n").unwrap();
    let report = json(&ok(&["chamfer", p(&a), p(&b), "--per-shape"]));
    assert_eq!(report["mean_chamfer_l2"], 2.0);
    assert_eq!(report["per_shape"][0], 2.0);
}

#[test]
fn xyz_export_has_one_line_per_point() {
    let tmp = tempfile::tempdir().unwrap();
    small_dataset(tmp.path(), "b", 1);
    let xyz = tmp.path().join("s.xyz");
    ok(&["inspect", p(&tmp.path().join("ds")), "--index", "0", "--xyz", p(&xyz)]);
    let text = std::fs::read_to_string(&xyz).unwrap();
    assert_eq!(text.lines().count(), 1024);
    assert!(text.lines().all(|l| l.split_whitespace().count() == 3));
}

#[test]
fn stats_inventory_and_augmentation_histogram() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("gen.toml");
    std::fs::write(
        &cfg,
        "[generation]\ncomplexity = \"augmented\"\naugmentation_probability = 1.0\npoints_per_shape = 128\n",
    )
    .unwrap();
    let ds = tmp.path().join("ds");
    ok(&["generate", p(&cfg), "--count", "150", "--out", p(&ds)]);
    let js = json(&ok(&["stats", p(&ds), "--format", "json"]));
    assert_eq!(js["total_shapes"], 150);
    let aug = &js["all"]["augmentation_histogram"];
    assert_eq!(aug["none"], 0);
    assert_eq!(
        aug["boolean_difference"].as_u64().unwrap() + aug["wireframe"].as_u64().unwrap(),
        150
    );
}
