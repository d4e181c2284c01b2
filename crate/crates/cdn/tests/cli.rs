mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cdn::checkpoint;
use cdn_core::smiles::normalize;
use tempfile::TempDir;

fn cdn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cdn")).args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const TINY: [&str; 10] = [
    "--config",
    "embed_dim=8",
    "--config",
    "filters_per_width=4",
    "--config",
    "latent_dim=6",
    "--config",
    "lstm_units=8",
    "--config",
    "max_epochs=3",
];

struct Run {
    dir: TempDir,
}

impl Run {
    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn s(&self, name: &str) -> String {
        self.path(name).to_str().unwrap().to_string()
    }

    fn checkpoint(&self) -> String {
        self.s("run/checkpoint.cdn")
    }
}

/// Trains a tiny model on the small corpus with `extra` flags.
fn trained(extra: &[&str]) -> Run {
    let run = Run { dir: tempfile::tempdir().unwrap() };
    fs::write(run.path("corpus.smi"), common::SMALL.join("\n")).unwrap();
    let (corpus, out) = (run.s("corpus.smi"), run.s("run"));
    let mut args = vec!["train", "--corpus", &corpus, "--out", &out, "--validation-size", "2", "--test-size", "2"];
    args.extend(TINY);
    args.extend(extra);
    let o = cdn(&args);
    assert!(o.status.success(), "{}", stderr(&o));
    run
}

fn lines(p: &Path) -> Vec<String> {
    fs::read_to_string(p).unwrap().lines().map(String::from).collect()
}

#[test]
fn usage_errors_exit_with_2() {
    assert_eq!(cdn(&["train", "--out", "x"]).status.code(), Some(2));
    assert_eq!(cdn(&["eval", "bogus"]).status.code(), Some(2));
    assert_eq!(cdn(&["generate", "--checkpoint", "c", "--prototype", "C", "--prototypes", "p"]).status.code(), Some(2));
    assert_eq!(cdn(&["generate", "--checkpoint", "c"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.smi");
    fs::write(&corpus, "CCO\n").unwrap();
    let out = dir.path().join("o");
    let (c, o) = (corpus.to_str().unwrap(), out.to_str().unwrap());
    for bad in ["foo=1", "embed_dim", "embed_dim=-3", "filter_widths=3,3"] {
        let r = cdn(&["train", "--corpus", c, "--out", o, "--config", bad]);
        assert_eq!(r.status.code(), Some(2), "{bad}: {}", stderr(&r));
    }
}

#[test]
fn train_writes_splits_curve_checkpoint_and_manifest() {
    let run = trained(&[]);
    let splits: Vec<Vec<String>> = ["train", "validation", "test"].iter().map(|n| lines(&run.path(&format!("run/{n}.smi")))).collect();
    assert_eq!((splits[0].len(), splits[1].len(), splits[2].len()), (8, 2, 2));
    let mut all: Vec<&String> = splits.iter().flatten().collect();
    all.sort();
    all.dedup();
    assert_eq!(all.len(), 12);

    let curve = lines(&run.path("run/loss_curve.csv"));
    assert!(curve[0].starts_with("epoch,"));
    assert!(curve[1].starts_with("0,"));
    assert_eq!(curve.len(), 5);

    let ck = checkpoint::load(&run.path("run/checkpoint.cdn")).unwrap();
    let model = ck.into_model().unwrap();
    assert_eq!(model.config.embed_dim, 8);

    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.path("run/manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "ok");
    assert_eq!(m["command"], "train");
    assert_eq!(m["settings"]["config.lstm_units"], "8");
    assert_eq!(m["inputs"].as_object().unwrap().len(), 1);
    assert!(m["outputs"].as_array().unwrap().iter().any(|o| o == "checkpoint.cdn"));
}

#[test]
fn output_does_not_depend_on_threads() {
    let a = trained(&["--threads", "1"]);
    let b = trained(&["--threads", "3"]);
    assert_eq!(fs::read(a.path("run/checkpoint.cdn")).unwrap(), fs::read(b.path("run/checkpoint.cdn")).unwrap());
    let g = |r: &Run, threads: &str| {
        let (ck, out) = (r.checkpoint(), r.s("gen"));
        let args = [
            "--threads",
            threads,
            "generate",
            "--checkpoint",
            &ck,
            "--prototype",
            "CCO",
            "--samples",
            "30",
            "--decoder",
            "sampling",
            "--out",
            &out,
        ];
        assert!(cdn(&args).status.success());
        fs::read(r.path("gen/candidates.tsv")).unwrap()
    };
    assert_eq!(g(&a, "1"), g(&b, "4"));
}

#[test]
fn excluded_molecules_stay_out_of_every_split() {
    let dir = tempfile::tempdir().unwrap();
    let run = Run { dir };
    fs::write(run.path("corpus.smi"), common::SMALL.join("\n")).unwrap();
    // Other spellings of two corpus members.
    fs::write(run.path("exclude.smi"), "OCC\nC(C)(C)O\n").unwrap();
    let (corpus, ex, out) = (run.s("corpus.smi"), run.s("exclude.smi"), run.s("run"));
    let mut args = vec!["train", "--corpus", &corpus, "--exclude", &ex, "--out", &out];
    args.extend(TINY);
    assert!(cdn(&args).status.success());
    let kept: Vec<String> = ["train", "validation", "test"]
        .iter()
        .flat_map(|n| lines(&run.path(&format!("run/{n}.smi"))))
        .map(|s| normalize(&s).unwrap())
        .collect();
    assert_eq!(kept.len(), 10);
    for s in ["CCO", "CC(C)O"] {
        assert!(!kept.contains(&normalize(s).unwrap()), "{s}");
    }
}

#[test]
fn generation_and_reports() {
    let run = trained(&[]);
    fs::write(run.path("protos.smi"), "CCO\n# comment\nc1ccccc1\n").unwrap();
    let (ck, protos) = (run.checkpoint(), run.s("protos.smi"));

    let out = run.s("g");
    let o = cdn(&["generate", "--checkpoint", &ck, "--prototypes", &protos, "--samples", "7", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cands = lines(&run.path("g/candidates.tsv"));
    assert_eq!(cands.len(), 1 + 14);
    assert_eq!(cands[0], "prototype\tcandidate\tvalid");
    assert!(cands[1..8].iter().all(|l| l.starts_with("CCO\t")));
    let metrics = lines(&run.path("g/metrics.csv"));
    let rows: Vec<&String> = metrics.iter().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "metric,D,mode,k,value");
    assert_eq!(rows.len(), 8);

    let out = run.s("s");
    let o = cdn(&["eval", "sweep", "--checkpoint", &ck, "--prototype", "CCO", "--samples", "5", "--diversities", "1,2", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = lines(&run.path("s/sweep.csv")).into_iter().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 2 * 2 * 7);

    let out = run.s("d");
    let o = cdn(&["eval", "distances", "--checkpoint", &ck, "--prototype", "CCO", "--samples", "5", "--diversities", "1,3", "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["histogram_D1_prototype_vs_generated.csv", "histogram_D3_within_population.csv", "distances.csv"] {
        assert!(run.path("d").join(f).exists(), "{f}");
    }

    fs::write(run.path("fda.smi"), "CCN\nOCC\n").unwrap();
    let (fda, out) = (run.s("fda.smi"), run.s("h"));
    let o = cdn(&["eval", "drugs", "--checkpoint", &ck, "--prototype", "CCO", "--samples", "5", "--fda", &fda, "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(lines(&run.path("h/drug_hits.csv"))[0], "hit_count,valid_generated,percent");
}

#[test]
fn bad_inputs_fail_with_1_and_a_failed_manifest() {
    let run = trained(&[]);
    let (ck, out) = (run.checkpoint(), run.s("bad"));
    let o = cdn(&["generate", "--checkpoint", &ck, "--prototype", "CCS", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("token \"S\" at position 2"), "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(run.path("bad/manifest.json")).unwrap()).unwrap();
    assert!(m["status"].as_str().unwrap().starts_with("failed"));

    assert_eq!(cdn(&["generate", "--checkpoint", &ck, "--prototype", "CCO", "--samples", "0", "--out", &out]).status.code(), Some(2));
    assert_eq!(cdn(&["generate", "--checkpoint", &ck, "--prototype", "CCO", "--diversity", "0", "--out", &out]).status.code(), Some(2));

    fs::write(run.path("junk.cdn"), "not a model").unwrap();
    let junk = run.s("junk.cdn");
    let o = cdn(&["generate", "--checkpoint", &junk, "--prototype", "CCO", "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("magic"), "{}", stderr(&o));

    fs::write(run.path("classes.tsv"), "a\tCCO\na\tCCN\nb\tCCC\n").unwrap();
    let classes = run.s("classes.tsv");
    let o = cdn(&["analyze-latent", "--checkpoint", &ck, "--classes", &classes, "--out", &out]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains('b'), "{}", stderr(&o));
}

#[test]
fn analyze_latent_writes_one_row_per_class_and_the_baseline() {
    let run = trained(&[]);
    fs::write(run.path("classes.tsv"), "alcohols\tCCO\nalcohols\tCC(C)O\namines\tCCN\namines\tCN(C)C\n").unwrap();
    let (ck, classes, out) = (run.checkpoint(), run.s("classes.tsv"), run.s("lat"));
    let o = cdn(&["analyze-latent", "--checkpoint", &ck, "--classes", &classes, "--out", &out]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = lines(&run.path("lat/class_distances.csv"));
    assert_eq!(rows[0], "class,cosine,l2,l1");
    assert_eq!(rows.len(), 4);
    assert!(rows[3].starts_with("Across Drugs,1.000000,1.000000,1.000000"), "{}", rows[3]);
}
