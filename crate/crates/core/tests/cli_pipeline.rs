use std::path::Path;
use std::process::Command;

use hetbot::cli::run;
use serde_json::Value;

const SMALL: &str = r#"{
  "synth": {"n_per_class": 60, "mean_degree": 6.0},
  "train": {"hidden": 8, "heads": 2, "max_epochs": 15, "patience": 5, "mlp_hidden": 8}
}"#;

fn hetbot(args: &[&str]) -> i32 {
    let mut full = vec!["hetbot"];
    full.extend_from_slice(args);
    run(full)
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synth_to_attention_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let root = tmp.path();
    let config = root.join("config.json");
    std::fs::write(&config, SMALL).unwrap();
    let cfg = s(&config);
    let (synth, analysis, perturbed, augmented) = (
        root.join("synth"),
        root.join("analysis"),
        root.join("perturbed"),
        root.join("augmented"),
    );
    let (trained, evaluated, attention) =
        (root.join("train"), root.join("eval"), root.join("attn"));

    assert_eq!(
        hetbot(&[
            "synth",
            "--config",
            cfg,
            "--out",
            s(&synth),
            "--homophily",
            "0.2",
            "--seed",
            "4"
        ]),
        0
    );
    assert_eq!(
        hetbot(&[
            "analyze",
            "--config",
            cfg,
            "--data",
            s(&synth),
            "--out",
            s(&analysis)
        ]),
        0
    );
    let a = json(&analysis.join("analysis.json"));
    let h = a["edge_homophily"].as_f64().unwrap();
    assert!((0.15..=0.25).contains(&h), "edge homophily {h}");
    assert_eq!(json(&analysis.join("summary.json"))["schema_version"], 1);
    let hist = std::fs::read_to_string(analysis.join("homophily_histogram.csv")).unwrap();
    assert_eq!(hist.lines().count(), 1 + 3 * 4);

    assert_eq!(
        hetbot(&[
            "perturb",
            "--config",
            cfg,
            "--data",
            s(&synth),
            "--out",
            s(&perturbed),
            "--target",
            "0.1"
        ]),
        0
    );
    let p = json(&perturbed.join("summary.json"));
    assert!(p["edge_homophily_after"].as_f64().unwrap() <= 0.1 + 1e-12);

    assert_eq!(
        hetbot(&[
            "augment",
            "--config",
            cfg,
            "--data",
            s(&perturbed),
            "--out",
            s(&augmented),
            "--k",
            "2"
        ]),
        0
    );
    let aug = json(&augmented.join("augment.json"));
    for key in ["k", "knn_edge_homophily", "combined_edge_homophily"] {
        assert!(aug.get(key).is_some(), "augment.json lacks {key}");
    }
    let knn = std::fs::read_to_string(augmented.join("knn_edges.csv")).unwrap();
    assert!(knn.starts_with("src,dst,relation\n"));
    assert!(knn.lines().skip(1).all(|l| l.ends_with(",knn")));

    assert_eq!(
        hetbot(&[
            "train",
            "--config",
            cfg,
            "--data",
            s(&augmented),
            "--out",
            s(&trained),
            "--seed",
            "7"
        ]),
        0
    );
    let m = json(&trained.join("metrics.json"));
    for key in [
        "schema_version",
        "accuracy",
        "f1",
        "balanced_accuracy",
        "confusion",
        "epochs_ran",
        "best_epoch",
        "seed",
    ] {
        assert!(m.get(key).is_some(), "metrics.json lacks {key}");
    }
    let ckpt = trained.join("checkpoint.json");

    assert_eq!(
        hetbot(&[
            "evaluate",
            "--config",
            cfg,
            "--data",
            s(&augmented),
            "--checkpoint",
            s(&ckpt),
            "--out",
            s(&evaluated)
        ]),
        0
    );
    let e = json(&evaluated.join("metrics.json"));
    assert_eq!(e["accuracy"], m["accuracy"]);
    assert_eq!(e["confusion"], m["confusion"]);

    // a bundle without the knn relation also works: the checkpoint carries it
    assert_eq!(
        hetbot(&[
            "export-attention",
            "--config",
            cfg,
            "--data",
            s(&perturbed),
            "--checkpoint",
            s(&ckpt),
            "--out",
            s(&attention)
        ]),
        0
    );
    let exported = std::fs::read_to_string(attention.join("attention.csv")).unwrap();
    assert_eq!(
        exported,
        std::fs::read_to_string(trained.join("attention.csv")).unwrap()
    );
    assert!(exported.starts_with("src,dst,relation,alpha_bar,edge_kind\n"));
}

#[test]
fn train_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, SMALL).unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for out in [&a, &b] {
        assert_eq!(
            hetbot(&[
                "train",
                "--config",
                s(&config),
                "--out",
                s(out),
                "--seed",
                "7"
            ]),
            0
        );
    }
    for file in [
        "metrics.json",
        "attention.csv",
        "checkpoint.json",
        "summary.json",
    ] {
        assert_eq!(
            std::fs::read(a.join(file)).unwrap(),
            std::fs::read(b.join(file)).unwrap(),
            "{file} differs"
        );
    }
}

#[test]
fn sweeps_write_long_csv() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, SMALL).unwrap();
    let out = tmp.path().join("k");
    let code = hetbot(&[
        "train",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--sweep-k",
        "1,2",
        "--seeds",
        "2",
        "--variants",
        "full,mean_pooling",
    ]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.starts_with("sweep,level,seed,variant,metric,value\n"));
    let accuracy_rows = text.lines().filter(|l| l.contains(",accuracy,")).count();
    assert_eq!(accuracy_rows, 2 * 2 * 2);

    let synth = tmp.path().join("synth");
    assert_eq!(
        hetbot(&["synth", "--config", s(&config), "--out", s(&synth)]),
        0
    );
    let out = tmp.path().join("aug");
    assert_eq!(
        hetbot(&[
            "augment",
            "--config",
            s(&config),
            "--data",
            s(&synth),
            "--out",
            s(&out),
            "--sweep-k",
            "1,2,5,10",
            "--seeds",
            "2"
        ]),
        0
    );
    let text = std::fs::read_to_string(out.join("knn_sweep.csv")).unwrap();
    assert_eq!(text.lines().count(), 1 + 4 * 2 * 2);

    let out = tmp.path().join("h");
    let code = hetbot(&[
        "train",
        "--config",
        s(&config),
        "--out",
        s(&out),
        "--sweep-homophily",
        "0.2:0.6:0.4",
    ]);
    assert_eq!(code, 0);
    let summary = json(&out.join("summary.json"));
    assert_eq!(summary["means"].as_array().unwrap().len(), 2);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_hetbot");
    let tmp = tempfile::tempdir().unwrap();
    let status = Command::new(bin).arg("--no-such-flag").output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    assert!(!status.stderr.is_empty());
    let status = Command::new(bin).args(["explode"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
    let missing = tmp.path().join("missing");
    let out = Command::new(bin)
        .args([
            "analyze",
            "--data",
            s(&missing),
            "--out",
            s(&tmp.path().join("o")),
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(bin)
        .args(["gradcheck", "--out", s(&tmp.path().join("g"))])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let report = json(&tmp.path().join("g").join("gradcheck.json"));
    assert!(report["max_rel_err"].as_f64().unwrap() <= 1e-4);
}

#[test]
fn bad_inputs_are_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    std::fs::create_dir_all(&data).unwrap();
    std::fs::write(data.join("nodes.csv"), "id,label\n0,0\n1,1\n2,1\n").unwrap();
    std::fs::write(
        data.join("edges.csv"),
        "src,dst,relation\n0,1,follower\n2,9,follower\n",
    )
    .unwrap();
    std::fs::write(
        data.join("features_numerical.csv"),
        "id,f0\n0,1\n1,2\n2,3\n",
    )
    .unwrap();
    let out = tmp.path().join("out");
    assert_eq!(
        hetbot(&["analyze", "--data", s(&data), "--out", s(&out)]),
        1
    );

    let config = tmp.path().join("bad.json");
    std::fs::write(&config, r#"{"trian": {}}"#).unwrap();
    assert_eq!(hetbot(&["gradcheck"]), 0);
    assert_eq!(
        hetbot(&[
            "analyze",
            "--config",
            s(&config),
            "--data",
            s(&data),
            "--out",
            s(&out)
        ]),
        2
    );
    assert_eq!(
        hetbot(&["perturb", "--data", s(&data), "--out", s(&out)]),
        2
    );
}
