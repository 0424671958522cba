#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use prosodyeval::{build_plan, ExperimentPlan, Rendition, TaskConfig, TextItem};

pub const TOKEN: &str = "secret-token";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_prosodyeval"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn texts(n: usize) -> Vec<TextItem> {
    (0..n)
        .map(|i| {
            TextItem::plain(
                format!("t{i:02}"),
                &format!("Sentence {i} has, some words here."),
            )
            .unwrap()
        })
        .collect()
}

/// Plan over `n_texts` audiobook texts and systems `a`, `b`, `c`, with a
/// one-byte WAV per rendition written under `dir/audio`.
pub fn fixture(dir: &Path, n_texts: usize, groups: usize, seed: u64) -> (ExperimentPlan, PathBuf) {
    let systems: Vec<String> = ["a", "b", "c"].iter().map(|s| s.to_string()).collect();
    let texts = texts(n_texts);
    let audio = dir.join("audio");
    std::fs::create_dir_all(&audio).unwrap();
    let mut renditions = Vec::new();
    for t in &texts {
        for s in &systems {
            let audio_ref = format!("{}_{}.wav", t.id, s);
            std::fs::write(audio.join(&audio_ref), format!("RIFF{}{}", t.id, s)).unwrap();
            renditions.push(Rendition {
                text_id: t.id.clone(),
                system_id: s.clone(),
                audio_ref,
            });
        }
    }
    let plan = build_plan(
        "exp1",
        texts,
        systems,
        renditions,
        groups,
        TaskConfig::augmented(vec![]),
        seed,
    )
    .unwrap();
    let path = dir.join("plan.json");
    std::fs::write(&path, plan.to_json_pretty()).unwrap();
    (plan, path)
}

pub struct Server {
    pub child: Child,
    pub url: String,
}

impl Server {
    pub fn start(plan: &Path, audio: &Path, store: &Path) -> Self {
        let mut child = bin()
            .args([
                "serve",
                "--port",
                "0",
                "--admin-token",
                TOKEN,
                "--experiment",
            ])
            .arg(plan)
            .arg("--audio-dir")
            .arg(audio)
            .arg("--store")
            .arg(store)
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .expect("server spawns");
        let mut line = String::new();
        BufReader::new(child.stdout.take().unwrap())
            .read_line(&mut line)
            .unwrap();
        let url = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner {line:?}"))
            .to_string();
        Self { child, url }
    }

    pub fn kill(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        self.kill();
    }
}
