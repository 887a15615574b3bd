#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use memcontract::frontend::{self, Resolved};
use memcontract::summary::{Mode, Options};

pub struct Sample {
    pub name: String,
    pub src: String,
    pub mode: Mode,
    pub faulty: bool,
}

impl Sample {
    pub fn resolved(&self) -> Resolved {
        load(&self.src)
    }

    pub fn options(&self) -> Options {
        Options::with_mode(self.mode)
    }
}

pub fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn read_dir(dir: PathBuf, faulty: bool) -> Vec<Sample> {
    let mut paths: Vec<PathBuf> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "mcl"))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let src = fs::read_to_string(&p).unwrap();
            let mode = if src.contains("object>") { Mode::ObjectCount } else { Mode::ByType };
            Sample {
                name: p.file_stem().unwrap().to_string_lossy().into_owned(),
                src,
                mode,
                faulty,
            }
        })
        .collect()
}

pub fn positives() -> Vec<Sample> {
    read_dir(corpus_dir(), false)
}

pub fn faulty() -> Vec<Sample> {
    read_dir(corpus_dir().join("faulty"), true)
}

pub fn all() -> Vec<Sample> {
    let mut v = positives();
    v.extend(faulty());
    v
}

pub fn sample(name: &str) -> Sample {
    all().into_iter().find(|s| s.name == name).unwrap_or_else(|| panic!("no corpus program {name}"))
}

pub fn load(src: &str) -> Resolved {
    frontend::parse(src)
        .and_then(frontend::resolve)
        .unwrap_or_else(|d| panic!("{d:?}"))
}
