use std::fs;
use std::path::Path;

use riskrnn_cli::main_with_args;
use riskrnn_core::model::RiskModel;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("riskrnn").chain(args.iter().copied()))
}

const SMALL: [&str; 14] = [
    "--data.train_videos",
    "10",
    "--data.val_videos",
    "4",
    "--data.test_videos",
    "10",
    "--scenario.feature_dim",
    "8",
    "--model.d_agent",
    "8",
    "--model.d_region",
    "8",
    "--model.h_agent",
    "8",
];

fn small(cmd: &[&str]) -> Vec<String> {
    cmd.iter()
        .chain(SMALL.iter())
        .chain(["--model.h_aa", "8"].iter())
        .map(|s| s.to_string())
        .collect()
}

fn run_small(cmd: &[&str]) -> i32 {
    let args = small(cmd);
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_is_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run_small(&["generate", "--seed", "5", "--out", s(&a)]), 0);
    assert_eq!(run_small(&["generate", "--seed", "5", "--out", s(&b)]), 0);
    for split in ["train", "val", "test"] {
        let fa = fs::read(a.join(format!("{split}.jsonl"))).unwrap();
        let fb = fs::read(b.join(format!("{split}.jsonl"))).unwrap();
        assert_eq!(fa, fb, "{split}");
    }
    let c = dir.path().join("c");
    assert_eq!(run_small(&["generate", "--seed", "6", "--out", s(&c)]), 0);
    assert_ne!(
        fs::read(a.join("test.jsonl")).unwrap(),
        fs::read(c.join("test.jsonl")).unwrap()
    );
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("d");
    assert_eq!(
        run(&["generate", "--out", s(&out), "--scenario.colour", "1"]),
        2
    );
    assert_eq!(run(&["generate", "--out", s(&out), "--train.lr", "0"]), 2);
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[model]\nhidden = 3\n").unwrap();
    assert_eq!(run(&["generate", "--config", s(&cfg), "--out", s(&out)]), 2);
    assert_eq!(run(&["generate", "--out", s(&out), "stray"]), 2);
    assert!(!out.exists());
}

#[test]
fn missing_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let nowhere = dir.path().join("nowhere");
    assert_eq!(
        run(&["train", "--data", s(&nowhere), "--out", s(&nowhere)]),
        1
    );
}

#[test]
fn train_eval_infer_riskmap_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let (data, runs, eval) = (
        dir.path().join("data"),
        dir.path().join("runs"),
        dir.path().join("eval"),
    );
    assert_eq!(run_small(&["generate", "--out", s(&data)]), 0);
    let train = [
        "train",
        "--data",
        s(&data),
        "--out",
        s(&runs),
        "--variant",
        "all",
        "--train.epochs",
        "1",
    ];
    assert_eq!(run_small(&train), 0);
    for v in ["RA", "RAI", "L-RA", "L-RAI"] {
        let text = fs::read_to_string(runs.join(format!("{v}.model"))).unwrap();
        let model = RiskModel::from_text(&text).unwrap();
        assert_eq!(model.config.variant().to_string(), v);
        // reloading and re-saving is lossless
        assert_eq!(model.to_text(), text);
        let log = fs::read_to_string(runs.join(format!("{v}.log.csv"))).unwrap();
        assert!(log.starts_with("epoch,train_loss,val_loss,val_map\n"));
        assert_eq!(log.lines().count(), 2);
    }
    let ra = fs::read_to_string(runs.join("RA.model")).unwrap();
    assert!(!ra.contains("rnn_a.W") && !ra.contains("rnn_aa.W"));

    let ev = [
        "eval",
        "--data",
        s(&data),
        "--models",
        s(&runs),
        "--out",
        s(&eval),
        "--riskmaps",
    ];
    assert_eq!(run_small(&ev), 0);
    let report = fs::read_to_string(eval.join("metrics.json")).unwrap();
    for key in [
        "anticipation_map",
        "atta_frames",
        "atta_seconds",
        "region_map",
        "oracle_region_map",
        "per_variant",
    ] {
        assert!(report.contains(&format!("\"{key}\"")), "{key}");
    }
    assert!(eval.join("curve_L-RAI.csv").exists());
    assert!(eval.join("ablation.txt").exists());
    assert_eq!(fs::read_dir(eval.join("riskmaps")).unwrap().count(), 10);

    // same model and data give the same report
    let again = dir.path().join("again");
    let ev2 = [
        "eval",
        "--data",
        s(&data),
        "--models",
        s(&runs),
        "--out",
        s(&again),
    ];
    assert_eq!(run_small(&ev2), 0);
    assert_eq!(
        report,
        fs::read_to_string(again.join("metrics.json")).unwrap()
    );

    let csv = dir.path().join("v.csv");
    let model = runs.join("L-RAI.model");
    let test = data.join("test.jsonl");
    let infer = [
        "infer",
        "--model",
        s(&model),
        "--split",
        s(&test),
        "--video",
        "test-00000",
        "--out",
        s(&csv),
    ];
    assert_eq!(run(&infer), 0);
    let rows = fs::read_to_string(&csv).unwrap();
    assert_eq!(rows.lines().count(), 13);
    assert!(rows.starts_with("frame,y_0,y_1,yf_0,yf_1,s_0,"));

    let pgm = dir.path().join("m.pgm");
    let riskmap = [
        "riskmap",
        "--model",
        s(&model),
        "--split",
        s(&test),
        "--video",
        "3",
        "--frame",
        "11",
        "--out",
        s(&pgm),
    ];
    assert_eq!(run(&riskmap), 0);
    assert!(fs::read_to_string(&pgm)
        .unwrap()
        .starts_with("P2\n64 64\n255\n"));

    // model built for 8-dimensional features against 32-dimensional data
    let wide = dir.path().join("wide");
    assert_eq!(
        run(&[
            "generate",
            "--out",
            s(&wide),
            "--data.train_videos",
            "2",
            "--data.val_videos",
            "0",
            "--data.test_videos",
            "2"
        ]),
        0
    );
    let mismatch = [
        "eval",
        "--data",
        s(&wide),
        "--model",
        s(&model),
        "--out",
        s(&eval),
    ];
    assert_eq!(run(&mismatch), 2);
}
