//! Seeded fixture generators shared by the integration tests.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::io::Write;

use pertext_core::corpus::{write_corpus, CorpusEntry, CorpusSentence, DELIMITER_TAG};
use pertext_core::{Label, LabeledSequence, Separator, Task, Token};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NOUNS: [&str; 16] = [
    "کتاب", "خانه", "مدرسه", "شهر", "دانشجو", "نامه", "دوست", "روز", "کار", "دریا", "آسمان", "پدر", "مادر", "باغ", "راه", "۱۳۹۹",
];
const JOINED: [&str; 10] = [
    "می\u{200C}رود", "کتاب\u{200C}ها", "خانه\u{200C}ای", "نمی\u{200C}دانم", "درس\u{200C}ها", "می\u{200C}خواهم",
    "دانش\u{200C}آموز", "بی\u{200C}کار", "هم\u{200C}کلاسی", "می\u{200C}شود",
];
const ADJECTIVES: [&str; 8] = ["بزرگ", "زیبا", "کوچک", "خوب", "تازه", "سبز", "بلند", "قدیمی"];
const OTHERS: [&str; 10] = ["من", "او", "به", "از", "در", "رفت", "آمد", "دیدم", "گفت", "است"];
const MID_MARKS: [&str; 2] = ["،", ":"];
const END_MARKS: [&str; 2] = [".", "؟"];

pub fn fixture_corpus(n: usize, seed: u64) -> Vec<CorpusSentence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sentence(&mut rng)).collect()
}

fn sentence(rng: &mut ChaCha8Rng) -> CorpusSentence {
    let len = rng.random_range(3..=12);
    let mut entries = Vec::new();
    for i in 0..len {
        let (word, tag) = match rng.random_range(0..10) {
            0..=3 => {
                let ez = rng.random_bool(0.4);
                (*NOUNS.choose(rng).unwrap(), if ez { "N_SING_EZ" } else { "N_SING" })
            }
            4..=5 => (*JOINED.choose(rng).unwrap(), if rng.random_bool(0.3) { "N_PL_EZ" } else { "V_PRS" }),
            6..=7 => (*ADJECTIVES.choose(rng).unwrap(), if rng.random_bool(0.2) { "ADJ_SIM_EZ" } else { "ADJ_SIM" }),
            _ => (*OTHERS.choose(rng).unwrap(), "P"),
        };
        entries.push(CorpusEntry::new(word, tag));
        if i + 1 < len && rng.random_bool(0.12) {
            entries.push(CorpusEntry::new(*MID_MARKS.choose(rng).unwrap(), DELIMITER_TAG));
        }
    }
    match rng.random_range(0..20) {
        0 => {}
        1 => entries.push(CorpusEntry::new("!", DELIMITER_TAG)),
        _ => entries.push(CorpusEntry::new(*END_MARKS.choose(rng).unwrap(), DELIMITER_TAG)),
    }
    CorpusSentence { entries }
}

/// Written form: words separated by spaces, marks attached to the word
/// before them.
pub fn sentence_text(s: &CorpusSentence) -> String {
    let mut out = String::new();
    for e in &s.entries {
        if !out.is_empty() && !e.is_delimiter() {
            out.push(' ');
        }
        out.push_str(&e.word);
    }
    out
}

pub fn only_in_class_marks(s: &CorpusSentence) -> bool {
    s.entries
        .iter()
        .filter(|e| e.is_delimiter())
        .all(|e| MID_MARKS.contains(&e.word.as_str()) || END_MARKS.contains(&e.word.as_str()))
}

pub fn write_fixture(path: &Path, n: usize, seed: u64) {
    std::fs::write(path, write_corpus(&fixture_corpus(n, seed))).unwrap();
}

const STEMS: [&str; 12] = ["کت", "دار", "رس", "گل", "بار", "نم", "سر", "پا", "دست", "بر", "خو", "تر"];
const POSITIVE_SUFFIXES: [&str; 3] = ["ان", "ها", "ستان"];
const NEGATIVE_SUFFIXES: [&str; 4] = ["ی", "م", "ش", "ک"];

/// Binary sequences whose label is fixed by the word's suffix.
pub fn suffix_rule_dataset(n: usize, task: Task, seed: u64) -> Vec<LabeledSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let len = rng.random_range(3..=10);
            let mut tokens = Vec::with_capacity(len);
            let mut labels = Vec::with_capacity(len);
            for i in 0..len {
                let positive = rng.random_bool(0.3);
                let suffix = if positive { POSITIVE_SUFFIXES.choose(&mut rng) } else { NEGATIVE_SUFFIXES.choose(&mut rng) };
                let word = format!("{}{}{}", STEMS.choose(&mut rng).unwrap(), STEMS.choose(&mut rng).unwrap(), suffix.unwrap());
                let sep = if i + 1 == len { Separator::None } else { Separator::Space };
                tokens.push(Token::word(word, sep));
                labels.push(match task {
                    Task::Zwnj => Label::Zwnj(positive),
                    _ => Label::Ezafe(positive),
                });
            }
            LabeledSequence::new(task, tokens, labels).unwrap()
        })
        .collect()
}

pub fn bin(name: &str) -> PathBuf {
    match name {
        "pertext" => PathBuf::from(env!("CARGO_BIN_EXE_pertext")),
        "stub-tagger" => PathBuf::from(env!("CARGO_BIN_EXE_stub-tagger")),
        other => panic!("unknown binary {other}"),
    }
}

/// Shell-quoted stub command line for `--*-endpoint` flags.
pub fn stub_cmd(args: &[&str]) -> String {
    let stub = bin("stub-tagger");
    let mut parts = vec![stub.to_str().unwrap().to_string()];
    parts.extend(args.iter().map(|a| a.to_string()));
    shlex::try_join(parts.iter().map(String::as_str)).unwrap()
}

pub fn pertext(args: &[&str], stdin: &str) -> Output {
    let mut child = Command::new(bin("pertext"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(stdin.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}
