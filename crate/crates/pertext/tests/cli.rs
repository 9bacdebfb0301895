mod common;

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use common::{fixture_corpus, only_in_class_marks, pertext, sentence_text, stderr, stdout, stub_cmd, suffix_rule_dataset, write_fixture};
use pertext::dataset::{read_dataset_file, write_dataset_file};
use pertext_core::corpus::{build_ezafe_dataset, build_punct_dataset, build_zwnj_dataset, tag_has_ezafe, write_corpus, CorpusSentence};
use pertext_core::pipeline::KASRA;
use pertext_core::textproc::normalize;
use pertext_core::types::ZWNJ;
use pertext_core::{Label, NormalizationConfig, Task};
use tempfile::tempdir;

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn build(corpus: &Path, task: &str, out: &Path, extra: &[&str]) -> std::process::Output {
    let mut args = vec!["build-dataset", "--corpus", p(corpus), "--task", task, "--out", p(out)];
    args.extend_from_slice(extra);
    pertext(&args, "")
}

#[test]
fn build_dataset_sizes_stats_and_determinism() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_fixture(&corpus, 100, 7);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = build(&corpus, "punct", out, &["--ratios", "0.8:0.1:0.1", "--seed", "42"]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for (name, n) in [("train", 80), ("val", 10), ("test", 10)] {
        let file = format!("{name}.jsonl");
        let bytes = fs::read(a.join(&file)).unwrap();
        assert_eq!(bytes, fs::read(b.join(&file)).unwrap(), "{file}");
        assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), n);
        let data = read_dataset_file(&a.join(&file), Some(Task::Punctuation)).unwrap();
        let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("stats.json")).unwrap()).unwrap();
        assert_eq!(stats[name]["sequences"], n);
        let tokens: usize = data.iter().map(|s| s.len()).sum();
        assert_eq!(stats[name]["tokens"], tokens);
        let unk = data.iter().flat_map(|s| s.labels()).filter(|l| l.name() == "UNK").count();
        assert_eq!(stats[name]["classes"]["UNK"], unk);
    }
    assert_eq!(fs::read(a.join("stats.json")).unwrap(), fs::read(b.join("stats.json")).unwrap());
    let other = dir.path().join("c");
    build(&corpus, "punct", &other, &["--seed", "7"]);
    assert_ne!(fs::read(a.join("train.jsonl")).unwrap(), fs::read(other.join("train.jsonl")).unwrap());
}

#[test]
fn build_dataset_zwnj_only_filters() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_fixture(&corpus, 100, 3);
    let out = dir.path().join("z");
    assert!(build(&corpus, "ezafe", &out, &["--zwnj-only"]).status.success());
    let stats: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("stats.json")).unwrap()).unwrap();
    let kept: u64 = ["train", "val", "test"].iter().map(|s| stats[s]["sequences"].as_u64().unwrap()).sum();
    let bearing = fixture_corpus(100, 3).iter().filter(|s| s.entries.iter().any(|e| e.word.contains(ZWNJ))).count();
    assert_eq!(kept as usize, bearing);
    assert!(bearing < 100);
}

#[test]
fn build_dataset_errors() {
    let dir = tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    fs::write(&bad, "کتاب\tN\n#\nno tab\n").unwrap();
    let o = build(&bad, "punct", &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    let o = build(&dir.path().join("missing.txt"), "punct", &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));

    let good = dir.path().join("good.txt");
    write_fixture(&good, 10, 1);
    let o = build(&good, "punct", &dir.path().join("o"), &["--ratios", "0.5:0.6:0.1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = pertext(&["build-dataset", "--corpus", p(&good), "--task", "pos", "--out", "x"], "");
    assert_eq!(o.status.code(), Some(2));
}

fn write_suffix_sets(dir: &Path, task: Task) -> (String, String) {
    let data = suffix_rule_dataset(1000, task, 11);
    let (train, val) = data.split_at(800);
    let (t, v) = (dir.join("train.jsonl"), dir.join("val.jsonl"));
    write_dataset_file(&t, train).unwrap();
    write_dataset_file(&v, val).unwrap();
    (p(&t).to_string(), p(&v).to_string())
}

#[test]
fn train_is_deterministic_and_learns() {
    let dir = tempdir().unwrap();
    let (train, val) = write_suffix_sets(dir.path(), Task::Ezafe);
    let (m1, m2) = (dir.path().join("m1.bin"), dir.path().join("m2.bin"));
    let mut printed = Vec::new();
    for m in [&m1, &m2] {
        let o = pertext(&["train", "--train", &train, "--val", &val, "--task", "ezafe", "-o", p(m)], "");
        assert!(o.status.success(), "{}", stderr(&o));
        printed.push(stdout(&o));
    }
    assert_eq!(fs::read(&m1).unwrap(), fs::read(&m2).unwrap());
    assert_eq!(printed[0], printed[1]);
    let last = printed[0].lines().last().unwrap();
    let f1: f64 = last.rsplit(' ').next().unwrap().parse().unwrap();
    assert!(f1 >= 99.0, "{last}");
    assert_eq!(printed[0].lines().count(), 5);
}

#[test]
fn train_task_mismatch_exits_1() {
    let dir = tempdir().unwrap();
    let (train, _) = write_suffix_sets(dir.path(), Task::Ezafe);
    let o = pertext(&["train", "--train", &train, "--task", "zwnj", "-o", p(&dir.path().join("m"))], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("m").exists());
}

#[test]
fn eval_majority_baseline_matches_majority_rate() {
    let dir = tempdir().unwrap();
    let (train, val) = write_suffix_sets(dir.path(), Task::Zwnj);
    let model = dir.path().join("maj.bin");
    assert!(pertext(&["train", "--train", &train, "--task", "zwnj", "--majority", "-o", p(&model)], "").status.success());
    let o = pertext(&["eval", "--model", p(&model), "--dataset", &val, "--json"], "");
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let train_set = read_dataset_file(Path::new(&train), None).unwrap();
    let ones = train_set.iter().flat_map(|s| s.labels()).filter(|l| **l == Label::Zwnj(true)).count();
    let total: usize = train_set.iter().map(|s| s.len()).sum();
    let majority = Label::Zwnj(ones * 2 > total);
    let val_set = read_dataset_file(Path::new(&val), None).unwrap();
    let hits = val_set.iter().flat_map(|s| s.labels()).filter(|l| **l == majority).count();
    let val_total: usize = val_set.iter().map(|s| s.len()).sum();
    let rate = (hits as f64 / val_total as f64 * 10_000.0).round() / 100.0;
    assert_eq!(report["accuracy"].as_f64().unwrap(), rate);
    let table = pertext(&["eval", "--model", p(&model), "--dataset", &val], "");
    assert!(stdout(&table).contains(&format!("accuracy: {rate:.2}")));
}

#[test]
fn eval_gold_replay_is_perfect() {
    let dir = tempdir().unwrap();
    let corpus = dir.path().join("corpus.txt");
    write_fixture(&corpus, 300, 5);
    let out = dir.path().join("d");
    assert!(build(&corpus, "punct", &out, &["--ratios", "1:0:0"]).status.success());
    let data = out.join("train.jsonl");
    let stub = stub_cmd(&["--mode", "replay", "--dataset", p(&data)]);
    let o = pertext(&["eval", "--endpoint", &stub, "--dataset", p(&data), "--json", "--max-inflight", "4"], "");
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    for row in report["per_class"].as_array().unwrap() {
        assert!(row["support"].as_u64().unwrap() > 0, "{row}");
        for k in ["precision", "recall", "f1"] {
            assert_eq!(row[k], 100.0, "{row}");
        }
    }
    assert_eq!(report["macro_f1"], 100.0);
    assert_eq!(report["accuracy"], 100.0);
}

#[test]
fn eval_dead_endpoint_exits_1() {
    let dir = tempdir().unwrap();
    let (_, val) = write_suffix_sets(dir.path(), Task::Zwnj);
    let o = pertext(&["eval", "--endpoint", "/nonexistent/tagger", "--dataset", &val], "");
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("transport error"), "{}", stderr(&o));
}

#[test]
fn refine_empty_stdin() {
    let stub = stub_cmd(&[]);
    let o = pertext(&["refine", "--punct-endpoint", &stub], "");
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn refine_requires_a_stage() {
    let o = pertext(&["refine"], "سلام\n");
    assert_eq!(o.status.code(), Some(1));
    let stub = stub_cmd(&[]);
    let o = pertext(&["refine", "--keep-punct", "--punct-endpoint", &stub], "سلام\n");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn refine_identity_stubs_give_normal_form() {
    let stub = stub_cmd(&[]);
    let input = "من  به مدرسه، رفتم.\n\nآیا او 12 کتاب دارد؟ \n";
    let o = pertext(
        &["refine", "--punct-endpoint", &stub, "--zwnj-endpoint", &stub, "--ezafe-endpoint", &stub],
        input,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "من به مدرسه رفتم\n\nآیا او ۱۲ کتاب دارد\n");
}

/// Corpus sentences with distinct surface sequences, so replayed gold
/// labels are unambiguous.
fn distinct_sentences(n: usize, seed: u64) -> Vec<CorpusSentence> {
    let mut seen = HashSet::new();
    fixture_corpus(n, seed)
        .into_iter()
        .filter(only_in_class_marks)
        .filter(|s| {
            let words: Vec<String> = s.entries.iter().filter(|e| !e.is_delimiter()).map(|e| e.word.replace(ZWNJ, " ")).collect();
            seen.insert(words.join(" "))
        })
        .collect()
}

fn raw_line(s: &CorpusSentence) -> String {
    let words: Vec<String> = s.entries.iter().filter(|e| !e.is_delimiter()).map(|e| e.word.replace(ZWNJ, " ")).collect();
    words.join(" ")
}

#[test]
fn refine_gold_oracle_replays_corpus_text() {
    let dir = tempdir().unwrap();
    let sentences = distinct_sentences(150, 9);
    let files = [
        ("punct", build_punct_dataset(&sentences)),
        ("zwnj", build_zwnj_dataset(&sentences)),
        ("ezafe", build_ezafe_dataset(&sentences, &tag_has_ezafe)),
    ];
    let mut args = vec!["refine".to_string(), "--marker".into(), "tag-only".into()];
    for (task, data) in &files {
        let path = dir.path().join(format!("{task}.jsonl"));
        write_dataset_file(&path, data).unwrap();
        args.push(format!("--{task}-endpoint"));
        args.push(stub_cmd(&["--mode", "replay", "--dataset", p(&path)]));
    }
    let input: String = sentences.iter().map(|s| raw_line(s) + "\n").collect();
    let expected: String = sentences
        .iter()
        .map(|s| normalize(&sentence_text(s), &NormalizationConfig::default()) + "\n")
        .collect();
    let argv: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = pertext(&argv, &input);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), expected);

    let mut kasra_args = argv.clone();
    kasra_args[2] = "kasra";
    let jobs = ["--jobs", "3"];
    kasra_args.extend_from_slice(&jobs);
    let o = pertext(&kasra_args, &input);
    assert!(o.status.success(), "{}", stderr(&o));
    let marked = stdout(&o);
    let ez: usize = sentences.iter().flat_map(|s| &s.entries).filter(|e| tag_has_ezafe(&e.tag)).count();
    assert_eq!(marked.chars().filter(|&c| c == KASRA).count(), ez);
    assert_eq!(marked.replace(KASRA, ""), expected);
}

#[test]
fn refine_jobs_preserve_order_and_trace() {
    let dir = tempdir().unwrap();
    let sentences = distinct_sentences(120, 4);
    let data = dir.path().join("zwnj.jsonl");
    write_dataset_file(&data, &build_zwnj_dataset(&sentences)).unwrap();
    let stub = stub_cmd(&["--mode", "replay", "--dataset", p(&data)]);
    let input: String = sentences.iter().map(|s| raw_line(s) + "\n").collect();
    let run = |jobs: &str, trace: &Path| {
        let o = pertext(&["refine", "--zwnj-endpoint", &stub, "--jobs", jobs, "--trace", p(trace)], &input);
        assert!(o.status.success(), "{}", stderr(&o));
        stdout(&o)
    };
    let (t1, t4) = (dir.path().join("t1.jsonl"), dir.path().join("t4.jsonl"));
    let one = run("1", &t1);
    assert_eq!(one, run("4", &t4));
    assert_eq!(fs::read(&t1).unwrap(), fs::read(&t4).unwrap());
    let trace = fs::read_to_string(&t1).unwrap();
    assert_eq!(trace.lines().count(), sentences.len());
    for (line, out) in trace.lines().zip(one.lines()) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["output"], out);
        assert_eq!(v["stages"][0]["stage"], "zwnj");
        assert_eq!(v["stages"][0]["tokens"].as_array().unwrap().len(), v["stages"][0]["labels"].as_array().unwrap().len());
    }
}

#[test]
fn refine_failure_suppresses_output() {
    let stub = stub_cmd(&["--mode", "error"]);
    let o = pertext(&["refine", "--ezafe-endpoint", &stub, "--jobs", "2"], "یک\nدو\nسه\n");
    assert_eq!(o.status.code(), Some(1));
    assert!(o.stdout.is_empty());
    assert!(stderr(&o).contains("stub failure"), "{}", stderr(&o));
}

#[test]
fn refine_with_native_models() {
    let dir = tempdir().unwrap();
    let (train, _) = write_suffix_sets(dir.path(), Task::Ezafe);
    let model = dir.path().join("ez.bin");
    assert!(pertext(&["train", "--train", &train, "--task", "ezafe", "-o", p(&model)], "").status.success());
    let o = pertext(&["refine", "--ezafe-model", p(&model), "--jobs", "2"], "کتدارها سرپام\n");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), format!("کتدارها{KASRA} سرپام\n"));
    let o = pertext(&["refine", "--zwnj-model", p(&model)], "x\n");
    assert_eq!(o.status.code(), Some(1));
    let o = pertext(&["refine", "--zwnj-model", p(&dir.path().join("none.bin"))], "x\n");
    assert_eq!(o.status.code(), Some(2));
    let garbage = dir.path().join("garbage.bin");
    fs::write(&garbage, b"not a model").unwrap();
    let o = pertext(&["refine", "--zwnj-model", p(&garbage)], "x\n");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn healthcheck_reports_hello() {
    let stub = stub_cmd(&["--name", "fixture", "--tasks", "punct,zwnj"]);
    let o = pertext(&["healthcheck", "--endpoint", &stub, "--json"], "");
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "{\"proto\":1,\"name\":\"fixture\",\"tasks\":[\"punct\",\"zwnj\"]}\n");
    let o = pertext(&["healthcheck", "--endpoint", &stub_cmd(&["--mode", "bad-hello"])], "");
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn corpus_writer_round_trips_fixture() {
    let corpus = fixture_corpus(50, 2);
    assert_eq!(pertext_core::corpus::parse_corpus(&write_corpus(&corpus)).unwrap(), corpus);
}
