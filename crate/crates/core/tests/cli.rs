use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use wsfilter::ranking_filter::load_pairs;

fn bundled(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data/synthetic")
        .join(name)
}

fn setup() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "corpus.tsv",
        "templates.tsv",
        "embeddings.txt",
        "pipeline.toml",
    ] {
        fs::copy(bundled(name), dir.path().join(name)).unwrap();
    }
    dir
}

fn wsfilter(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wsfilter"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn pipeline_prints_stage_summary() {
    let dir = setup();
    let out = wsfilter(dir.path(), &["pipeline", "--config", "pipeline.toml"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    for stage in [
        "ingest",
        "index",
        "filter rank",
        "filter interaction",
        "emit",
        "sample",
    ] {
        assert!(
            text.lines().any(|l| l.starts_with(stage)),
            "missing {stage} in\n{text}"
        );
    }
    for file in [
        "admitted.tsv",
        "index.json",
        "pairs.tsv",
        "selected.txt",
        "triples.tsv",
        "batches.tsv",
    ] {
        assert!(dir.path().join("out").join(file).exists(), "{file}");
    }
}

#[test]
fn missing_corpus_fails_at_validation() {
    let dir = setup();
    fs::remove_file(dir.path().join("corpus.tsv")).unwrap();
    let out = wsfilter(dir.path(), &["pipeline", "--config", "pipeline.toml"]);
    assert!(!out.status.success());
    let err = stderr(&out);
    assert!(err.contains("validate"), "{err}");
    assert!(err.contains("corpus.tsv"), "{err}");
    assert!(!dir.path().join("out/triples.tsv").exists());
}

#[test]
fn missing_file_fails_for_single_stage() {
    let dir = setup();
    let out = wsfilter(dir.path(), &["ingest", "--corpus", "absent.tsv"]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("absent.tsv"));
}

#[test]
fn skipping_interaction_filter_keeps_every_pair() {
    let dir = setup();
    let out = wsfilter(
        dir.path(),
        &[
            "pipeline",
            "--config",
            "pipeline.toml",
            "--skip-interaction-filter",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).contains("skipped"));
    assert!(!dir.path().join("out/selected.txt").exists());
    let pairs = load_pairs(&dir.path().join("out/pairs.tsv")).unwrap();
    let triples = fs::read_to_string(dir.path().join("out/triples.tsv")).unwrap();
    let expected: usize = pairs.iter().map(|p| p.negative_ids.len()).sum();
    assert_eq!(triples.lines().count(), expected);
    let mut positives: Vec<&str> = triples
        .lines()
        .map(|l| l.split('\t').nth(1).unwrap())
        .collect();
    positives.dedup();
    assert_eq!(
        positives.len(),
        pairs.iter().filter(|p| !p.negative_ids.is_empty()).count()
    );
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = setup();
    let run = |workers: &str| {
        let out = wsfilter(
            dir.path(),
            &[
                "--workers",
                workers,
                "pipeline",
                "--config",
                "pipeline.toml",
            ],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        (
            fs::read(dir.path().join("out/triples.tsv")).unwrap(),
            fs::read(dir.path().join("out/selected.txt")).unwrap(),
        )
    };
    assert_eq!(run("1"), run("4"));
}

#[test]
fn seed_changes_batches_only() {
    let dir = setup();
    let run = |seed: &str| {
        let out = wsfilter(
            dir.path(),
            &["pipeline", "--config", "pipeline.toml", "--seed", seed],
        );
        assert!(out.status.success(), "{}", stderr(&out));
        (
            fs::read(dir.path().join("out/triples.tsv")).unwrap(),
            fs::read(dir.path().join("out/batches.tsv")).unwrap(),
        )
    };
    let (t1, b1) = run("1");
    let (t2, b2) = run("2");
    assert_eq!(t1, t2);
    assert_ne!(b1, b2);
}

#[test]
fn eval_prints_per_query_and_mean() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.txt"),
        "1 Q0 a 1 3 ql\n1 Q0 b 2 2 ql\n2 Q0 c 1 1 ql\n",
    )
    .unwrap();
    fs::write(dir.path().join("qrels.txt"), "1 0 a 4\n1 0 b 0\n2 0 c 0\n").unwrap();
    let out = wsfilter(
        dir.path(),
        &[
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--metric",
            "err@20",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out), "1\t0.9375\n2\t0.0000\nmean\t0.4688\n");

    let out = wsfilter(
        dir.path(),
        &[
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--metric",
            "ndcg@2",
        ],
    );
    assert_eq!(stdout(&out), "1\t1.0000\n2\t0.0000\nmean\t0.5000\n");
}

#[test]
fn eval_reranks_with_external_scores() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.txt"),
        "1 Q0 a 1 3 ql\n1 Q0 b 2 2 ql\n1 Q0 c 3 1 ql\n",
    )
    .unwrap();
    fs::write(dir.path().join("qrels.txt"), "1 0 c 4\n").unwrap();
    fs::write(dir.path().join("scores.txt"), "1 a 0.1\n1 b 0.2\n1 c 0.9\n").unwrap();
    let out = wsfilter(
        dir.path(),
        &[
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--metric",
            "ndcg@3",
            "--scores",
            "scores.txt",
            "--rerank-out",
            "reranked.txt",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(stdout(&out).starts_with("1\t1.0000\n"));
    let reranked = fs::read_to_string(dir.path().join("reranked.txt")).unwrap();
    let order: Vec<&str> = reranked
        .lines()
        .map(|l| l.split_whitespace().nth(2).unwrap())
        .collect();
    assert_eq!(order, ["c", "b", "a"]);
}

#[test]
fn eval_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("run.txt"), "1 Q0 a 2 3 ql\n").unwrap();
    fs::write(dir.path().join("qrels.txt"), "1 0 a 1\n").unwrap();
    let out = wsfilter(
        dir.path(),
        &["eval", "--run", "run.txt", "--qrels", "qrels.txt"],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("run.txt"));
    let out = wsfilter(
        dir.path(),
        &[
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--metric",
            "map@5",
        ],
    );
    assert!(!out.status.success());
}

#[test]
fn bundled_data_is_reproducible_from_synth() {
    let dir = tempfile::tempdir().unwrap();
    let out = wsfilter(
        dir.path(),
        &[
            "synth",
            "--out-dir",
            "gen",
            "--docs",
            "200",
            "--templates",
            "8",
            "--seed",
            "7",
        ],
    );
    assert!(out.status.success(), "{}", stderr(&out));
    for name in [
        "corpus.tsv",
        "templates.tsv",
        "embeddings.txt",
        "pipeline.toml",
    ] {
        assert_eq!(
            fs::read(dir.path().join("gen").join(name)).unwrap(),
            fs::read(bundled(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn interaction_stage_needs_a_corpus() {
    let dir = setup();
    let out = wsfilter(dir.path(), &["pipeline", "--config", "pipeline.toml"]);
    assert!(out.status.success());
    let out = wsfilter(
        dir.path(),
        &[
            "filter",
            "interaction",
            "--pairs",
            "out/pairs.tsv",
            "--templates",
            "templates.tsv",
            "--embeddings",
            "embeddings.txt",
            "--out",
            "sel.txt",
        ],
    );
    assert!(!out.status.success());
    assert!(stderr(&out).contains("--corpus"));
}

#[test]
fn eval_takes_rerank_depth_from_config() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.txt"),
        "1 Q0 a 1 3 ql\n1 Q0 b 2 2 ql\n1 Q0 c 3 1 ql\n",
    )
    .unwrap();
    fs::write(dir.path().join("qrels.txt"), "1 0 c 4\n").unwrap();
    fs::write(dir.path().join("scores.txt"), "1 a 0.1\n1 b 0.2\n1 c 0.9\n").unwrap();
    fs::write(dir.path().join("eval.toml"), "rerank_depth = 2\n").unwrap();
    let order = |extra: &[&str]| {
        let mut args = vec![
            "eval",
            "--run",
            "run.txt",
            "--qrels",
            "qrels.txt",
            "--scores",
            "scores.txt",
            "--rerank-out",
            "reranked.txt",
        ];
        args.extend(extra);
        let out = wsfilter(dir.path(), &args);
        assert!(out.status.success(), "{}", stderr(&out));
        fs::read_to_string(dir.path().join("reranked.txt"))
            .unwrap()
            .lines()
            .map(|l| l.split_whitespace().nth(2).unwrap().to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(order(&["--config", "eval.toml"]), ["b", "a", "c"]);
    assert_eq!(
        order(&["--config", "eval.toml", "--depth", "3"]),
        ["c", "b", "a"]
    );
}
