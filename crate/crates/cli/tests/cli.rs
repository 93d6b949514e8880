use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use memesim_core::embedding::{decode_embeddings, read_manifest};
use serde_json::Value;
use sha2::{Digest, Sha256};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/synthetic").join(name)
}

fn memesim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memesim"))
        .args(args)
        .env_remove("MEMESIM_OUT")
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout:\n{}\nstderr:\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn json(path: &Path) -> Value {
    serde_json::from_slice(&fs::read(path).unwrap()).unwrap()
}

fn pipeline_args<'a>(out: &'a str, extra: &[&'a str]) -> Vec<String> {
    let mut v: Vec<String> = vec!["--out".into(), out.into()];
    v.extend(extra.iter().map(|s| s.to_string()));
    v.extend(
        [
            "pipeline",
            "--corpus",
            p(&fixture("corpus.csv")),
            "--img-emb",
            p(&fixture("image.bin")),
            "--txt-emb",
            p(&fixture("text.bin")),
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    v
}

fn run_pipeline(out: &Path, extra: &[&str]) -> Output {
    let args = pipeline_args(p(out), extra);
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    memesim(&refs)
}

#[test]
fn help_lists_flags_with_defaults() {
    let top = ok(&memesim(&["--help"]));
    for sub in ["ingest", "similarity", "group", "emotions", "analyze", "evaluate", "serve", "pipeline", "explain"] {
        assert!(top.contains(sub), "missing subcommand {sub}");
    }
    let help = ok(&memesim(&["pipeline", "--help"]));
    for flag in [
        "--corpus", "--schema", "--img-emb", "--txt-emb", "--threshold", "--agg", "--emotions", "--responses",
        "--out", "--threads", "--yates", "--clique-check", "--stdout",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    assert!(help.contains("[default: 0.8]"));
    assert!(help.contains("[default: mean]"));
    assert!(help.contains("[default: lexicon]"));
}

#[test]
fn shipped_fixture_is_reproducible_by_synth() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&memesim(&["--out", p(tmp.path()), "synth"]));
    for name in ["corpus.csv", "image.bin", "image.ids", "text.bin", "text.ids", "emotions.csv", "clusters.csv", "responses.jsonl", "manifest.json"] {
        assert_eq!(fs::read(tmp.path().join(name)).unwrap(), fs::read(fixture(name)).unwrap(), "{name} drifted");
    }
}

#[test]
fn pipeline_is_deterministic_and_recovers_planted_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    ok(&run_pipeline(&a, &["--threads", "1"]));
    ok(&run_pipeline(&b, &["--threads", "3"]));
    for name in ["edges.csv", "edges.bin", "groups.json", "groups.csv", "analysis.json", "emotions.csv", "manifest.json"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name} differs");
    }
    // Every planted cluster becomes exactly one group.
    let clusters = fs::read_to_string(fixture("clusters.csv")).unwrap();
    let mut planted: std::collections::BTreeMap<String, Vec<String>> = Default::default();
    for line in clusters.lines().skip(1) {
        let (id, c) = line.split_once(',').unwrap();
        let key = if c.is_empty() { format!("solo:{id}") } else { c.to_string() };
        planted.entry(key).or_default().push(id.to_string());
    }
    let groups = json(&a.join("groups.json"));
    let mut found: Vec<Vec<String>> = groups
        .as_array()
        .unwrap()
        .iter()
        .map(|g| {
            let mut m: Vec<String> = g["members"].as_array().unwrap().iter().map(|v| v.as_str().unwrap().to_string()).collect();
            m.sort();
            m
        })
        .collect();
    let mut want: Vec<Vec<String>> = planted
        .into_values()
        .map(|mut v| {
            v.sort();
            v
        })
        .collect();
    found.sort();
    want.sort();
    assert_eq!(found, want);
}

#[test]
fn manifest_hashes_match_outputs_and_meta_holds_threads() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&run_pipeline(tmp.path(), &["--threads", "2"]));
    let manifest = json(&tmp.path().join("manifest.json"));
    let outputs = manifest["outputs"].as_object().unwrap();
    assert!(outputs.contains_key("groups.json") && outputs.contains_key("edges.csv"));
    for (name, sha) in outputs {
        let bytes = fs::read(tmp.path().join(name)).unwrap();
        assert_eq!(sha.as_str().unwrap(), hex::encode(Sha256::digest(&bytes)), "{name}");
    }
    let roles: Vec<&str> = manifest["inputs"].as_array().unwrap().iter().map(|i| i["role"].as_str().unwrap()).collect();
    assert!(roles.contains(&"corpus") && roles.contains(&"image_embeddings") && roles.contains(&"text_embeddings_ids"));
    assert_eq!(manifest["flags"]["scoring"]["threshold"], 0.8);
    assert!(manifest.get("threads").is_none());
    let meta = json(&tmp.path().join("run_meta.json"));
    assert_eq!(meta["threads"], 2);
}

#[test]
fn stdout_carries_the_primary_artifact() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&run_pipeline(tmp.path(), &["--stdout"]));
    let on_disk = fs::read_to_string(tmp.path().join("groups.json")).unwrap();
    assert_eq!(stdout, on_disk);
    let quiet = ok(&run_pipeline(tmp.path(), &[]));
    assert!(quiet.contains("groups:"));
    assert!(serde_json::from_str::<Value>(&quiet).is_err());
}

#[test]
fn environment_overrides_out_flag() {
    let tmp = tempfile::tempdir().unwrap();
    let env_dir = tmp.path().join("env");
    let flag_dir = tmp.path().join("flag");
    let out = Command::new(env!("CARGO_BIN_EXE_memesim"))
        .args(["--out", p(&flag_dir), "ingest", "--corpus", p(&fixture("corpus.csv"))])
        .env("MEMESIM_OUT", &env_dir)
        .output()
        .unwrap();
    ok(&out);
    assert!(env_dir.join("corpus_report.json").is_file());
    assert!(!flag_dir.exists());
}

#[test]
fn ingest_reports_attribute_distributions() {
    let tmp = tempfile::tempdir().unwrap();
    ok(&memesim(&["--out", p(tmp.path()), "ingest", "--corpus", p(&fixture("corpus.csv"))]));
    let r = json(&tmp.path().join("corpus_report.json"));
    assert_eq!(r["memes"], 100);
    for attr in ["humour", "sarcasm", "offensive", "motivational", "sentiment"] {
        let total: f64 = r["attributes"][attr]["rows"].as_array().unwrap().iter().map(|x| x["percent"].as_f64().unwrap()).sum();
        assert!((total - 100.0).abs() < 1e-9, "{attr}");
    }
}

#[test]
fn stepwise_commands_match_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let (sim, grp, pipe) = (tmp.path().join("sim"), tmp.path().join("grp"), tmp.path().join("pipe"));
    let corpus = fixture("corpus.csv");
    ok(&memesim(&[
        "--out", p(&sim), "similarity", "--corpus", p(&corpus),
        "--img-emb", p(&fixture("image.bin")), "--txt-emb", p(&fixture("text.bin")),
    ]));
    ok(&memesim(&["--out", p(&grp), "group", "--corpus", p(&corpus), "--edges", p(&sim.join("edges.csv")), "--clique-check"]));
    ok(&run_pipeline(&pipe, &[]));
    assert_eq!(fs::read(sim.join("edges.csv")).unwrap(), fs::read(pipe.join("edges.csv")).unwrap());
    assert_eq!(fs::read(grp.join("groups.json")).unwrap(), fs::read(pipe.join("groups.json")).unwrap());
    let checks = json(&grp.join("clique_check.json"));
    assert!(checks.as_array().unwrap().iter().all(|c| c["density"].is_null() || c["density"].as_f64().unwrap() > 0.0));
}

#[test]
fn evaluate_prints_published_average() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&memesim(&["--out", p(tmp.path()), "evaluate", "--responses", p(&fixture("responses.jsonl"))]));
    assert!(stdout.contains("average 67.23%"), "{stdout}");
    assert!(stdout.contains("min 45.10%") && stdout.contains("max 82.35%"));
    let r = json(&tmp.path().join("agreement.json"));
    assert_eq!(r["agreement"]["average"], 67.23);
    assert_eq!(r["agreement"]["n_participants"], 51);
    let csv = fs::read_to_string(tmp.path().join("agreement.csv")).unwrap();
    assert_eq!(csv.lines().count(), 22);
}

#[test]
fn evaluate_scores_emotions_against_groups() {
    let tmp = tempfile::tempdir().unwrap();
    let log = tmp.path().join("r.jsonl");
    let groups = tmp.path().join("groups.json");
    fs::write(&groups, r#"[{"group_id":0,"members":["image_1.jpg"]},{"group_id":1,"members":["image_10.jpg"]}]"#).unwrap();
    fs::write(
        &log,
        "{\"participant_id\":\"a\",\"group_id\":0,\"similar\":true,\"emotion\":\"joy\",\"timestamp\":1}\n\
         {\"participant_id\":\"a\",\"group_id\":1,\"similar\":false,\"emotion\":\"joy\",\"timestamp\":2}\n",
    )
    .unwrap();
    let sidecar = format!("sidecar:{}", p(&fixture("emotions.csv")));
    ok(&memesim(&[
        "--out", p(&tmp.path().join("o")), "evaluate", "--responses", p(&log), "--groups", p(&groups), "--emotions", &sidecar,
    ]));
    let r = json(&tmp.path().join("o/agreement.json"));
    assert_eq!(r["emotion_agreement"]["matched"], 1);
    assert_eq!(r["emotion_agreement"]["accuracy"], 50.0);
    assert_eq!(r["agreement"]["average"], 50.0);
}

#[test]
fn analyze_motivational_gives_p_in_unit_interval() {
    let tmp = tempfile::tempdir().unwrap();
    let sidecar = format!("sidecar:{}", p(&fixture("emotions.csv")));
    ok(&memesim(&[
        "--out", p(tmp.path()), "analyze", "--corpus", p(&fixture("corpus.csv")),
        "--emotions", &sidecar, "--attribute", "motivational", "--yates",
    ]));
    let r = json(&tmp.path().join("analysis.json"));
    let tests = r["chi_square"].as_array().unwrap();
    assert_eq!(tests.len(), 1);
    assert_eq!(tests[0]["attribute"], "motivational");
    let pv = tests[0]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&pv));
    assert!(tests[0]["df"].as_u64().unwrap() >= 1);
    let dist = fs::read_to_string(tmp.path().join("emotion_distribution.csv")).unwrap();
    assert!(dist.starts_with("emotion,count,percent\n"));
}

#[test]
fn emotions_sidecar_and_lexicon_agree_on_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let sidecar = format!("sidecar:{}", p(&fixture("emotions.csv")));
    ok(&memesim(&["--out", p(&a), "emotions", "--corpus", p(&fixture("corpus.csv")), "--emotions", &sidecar]));
    ok(&memesim(&["--out", p(&b), "emotions", "--corpus", p(&fixture("corpus.csv"))]));
    assert_eq!(fs::read(a.join("emotion_distribution.csv")).unwrap(), fs::read(b.join("emotion_distribution.csv")).unwrap());
}

fn write_pair_fixture(dir: &Path) -> (PathBuf, PathBuf, PathBuf) {
    let corpus = dir.join("c.csv");
    fs::write(
        &corpus,
        "image_name,text_corrected,humour,sarcasm,offensive,motivational,overall_sentiment\n\
         a.jpg,one,funny,general,not_offensive,motivational,positive\n\
         b.jpg,one again,funny,general,not_offensive,motivational,positive\n\
         c.jpg,other,funny,general,not_offensive,motivational,positive\n",
    )
    .unwrap();
    let rows = "{\"id\":\"a.jpg\",\"vec\":[0.6,0.8,0.0]}\n{\"id\":\"b.jpg\",\"vec\":[0.6,0.8,0.0]}\n{\"id\":\"c.jpg\",\"vec\":[0.0,0.0,2.0]}\n";
    let (img, txt) = (dir.join("img.jsonl"), dir.join("txt.jsonl"));
    fs::write(&img, rows).unwrap();
    fs::write(&txt, rows).unwrap();
    (corpus, img, txt)
}

fn explain(dir: &Path, a: &str, b: &str) -> Output {
    let (corpus, img, txt) = write_pair_fixture(dir);
    memesim(&[
        "--out", p(&dir.join("out")), "explain", "--corpus", p(&corpus),
        "--img-emb", p(&img), "--txt-emb", p(&txt), a, b,
    ])
}

#[test]
fn explain_duplicate_and_orthogonal_pairs() {
    let tmp = tempfile::tempdir().unwrap();
    let stdout = ok(&explain(tmp.path(), "a.jpg", "b.jpg"));
    assert!(stdout.contains("verdict: similar"), "{stdout}");
    let e = json(&tmp.path().join("out/explain.json"));
    for k in ["ii", "tt", "it", "ti"] {
        assert!((e["scores"][k].as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    let stdout = ok(&explain(tmp.path(), "a.jpg", "c.jpg"));
    assert!(stdout.contains("verdict: not similar"), "{stdout}");
    let e = json(&tmp.path().join("out/explain.json"));
    assert_eq!(e["combined"], 0.0);
    assert_eq!(e["similar"], false);
}

#[test]
fn explain_random_pair_matches_naive_recomputation() {
    let tmp = tempfile::tempdir().unwrap();
    let out = memesim(&[
        "--out", p(tmp.path()), "explain", "--corpus", p(&fixture("corpus.csv")),
        "--img-emb", p(&fixture("image.bin")), "--txt-emb", p(&fixture("text.bin")), "image_3.jpg", "image_77.jpg",
    ]);
    ok(&out);
    let e = json(&tmp.path().join("explain.json"));
    let load = |name: &str| {
        let m = decode_embeddings(&fs::read(fixture(&format!("{name}.bin"))).unwrap()).unwrap();
        let ids = read_manifest(fixture(&format!("{name}.ids"))).unwrap();
        (m, ids)
    };
    let (img, ids) = load("image");
    let (txt, _) = load("text");
    let row = |id: &str| ids.ids().iter().position(|x| x == id).unwrap();
    let (a, b) = (row("image_3.jpg"), row("image_77.jpg"));
    let cos = |x: &[f32], y: &[f32]| {
        let d: f64 = x.iter().zip(y).map(|(&p, &q)| p as f64 * q as f64).sum();
        let n = |v: &[f32]| v.iter().map(|&t| (t as f64).powi(2)).sum::<f64>().sqrt();
        d / (n(x) * n(y))
    };
    let want = [
        cos(img.row(a), img.row(b)),
        cos(txt.row(a), txt.row(b)),
        cos(img.row(a), txt.row(b)),
        cos(txt.row(a), img.row(b)),
    ];
    for (k, w) in ["ii", "tt", "it", "ti"].iter().zip(want) {
        assert!((e["scores"][k].as_f64().unwrap() - w).abs() < 1e-9, "{k}");
    }
    let mean = want.iter().sum::<f64>() / 4.0;
    assert!((e["combined"].as_f64().unwrap() - mean).abs() < 1e-9);
}

#[test]
fn exit_codes_are_categorized() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = |name: &str| p(&d.join(name)).to_string();

    // usage
    assert_eq!(code(&memesim(&["pipeline", "--bogus"])), 2);
    assert_eq!(code(&memesim(&["analyze", "--corpus", "x", "--emotions", "model"])), 2);

    // io: missing corpus
    assert_eq!(code(&memesim(&["--out", &out("o1"), "ingest", "--corpus", &out("missing.csv")])), 3);

    // input: corrupted embedding magic
    let bad = d.join("bad.bin");
    let mut bytes = fs::read(fixture("image.bin")).unwrap();
    bytes[0] = b'X';
    fs::write(&bad, &bytes).unwrap();
    fs::copy(fixture("image.ids"), d.join("bad.ids")).unwrap();
    let corpus = fixture("corpus.csv");
    let sim = |img: &str, extra: &[&str]| {
        let mut args = vec!["--out".to_string(), out("o2"), "similarity".into(), "--corpus".into(), p(&corpus).into(), "--img-emb".into(), img.into(), "--txt-emb".into(), p(&fixture("text.bin")).into()];
        args.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        memesim(&refs)
    };
    assert_eq!(code(&sim(p(&bad), &[])), 4);

    // alignment: manifest lists the wrong number of ids
    let short = d.join("short.bin");
    fs::copy(fixture("image.bin"), &short).unwrap();
    fs::write(d.join("short.ids"), "image_1.jpg\n").unwrap();
    assert_eq!(code(&sim(p(&short), &[])), 5);

    // config: threshold out of range
    assert_eq!(code(&sim(p(&fixture("image.bin")), &["--threshold", "1.5"])), 7);

    // conflict: duplicate responses
    let dup = d.join("dup.jsonl");
    let line = "{\"participant_id\":\"p1\",\"group_id\":0,\"similar\":true,\"timestamp\":1}\n";
    fs::write(&dup, format!("{line}{line}")).unwrap();
    let o = memesim(&["--out", &out("o3"), "evaluate", "--responses", p(&dup)]);
    assert_eq!(code(&o), 8);
    assert!(String::from_utf8_lossy(&o.stderr).contains("conflict error"));

    // empty: header-only corpus
    let empty = d.join("empty.csv");
    fs::write(&empty, "image_name,text_corrected,humour,sarcasm,offensive,motivational,overall_sentiment\n").unwrap();
    assert_eq!(code(&memesim(&["--out", &out("o4"), "ingest", "--corpus", p(&empty)])), 9);

    // lookup: unknown id
    assert_eq!(code(&explain(d, "a.jpg", "zzz.jpg")), 10);
}

#[test]
fn serve_startup_failures_have_their_own_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = fixture("corpus.csv");
    let o = memesim(&["serve", "--corpus", p(&corpus), "--groups", p(&tmp.path().join("nope.json")), "--bind", "127.0.0.1:18081"]);
    assert_eq!(code(&o), 11);
    assert!(String::from_utf8_lossy(&o.stderr).contains("nope.json"));

    let groups = tmp.path().join("groups.json");
    fs::write(&groups, "[{\"group_id\":0,\"members\":[\"image_1.jpg\"]}]").unwrap();
    let taken = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = memesim(&[
        "serve", "--corpus", p(&corpus), "--groups", p(&groups),
        "--responses", p(&tmp.path().join("r.jsonl")), "--bind", &addr,
    ]);
    assert_eq!(code(&o), 12, "{}", String::from_utf8_lossy(&o.stderr));
}
