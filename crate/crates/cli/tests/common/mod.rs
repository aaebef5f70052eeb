#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use phonalign::synthetic::{frame_time, plant, ConfusionProfile, PlantedUtterance};
use phonalign::{FeatureConfig, PhoneSet, TargetSequence};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub const PHONES: [&str; 6] = ["sil", "k", "ae", "t", "d", "ao"];

/// Words over [`PHONES`]; every neighbouring phone pair differs.
pub const DICT: &str = "\
;;; fixture dictionary
CAT  K AE1 T
DOG  D AO1 G
TACK  T AE1 K
DOT  D AO1 T
";

pub fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phonalign"))
}

pub fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn phone_set() -> PhoneSet {
    PhoneSet::new(PHONES).unwrap()
}

pub fn word_phones(word: &str) -> Vec<&'static str> {
    match word {
        "cat" => vec!["k", "ae", "t"],
        "tack" => vec!["t", "ae", "k"],
        "dot" => vec!["d", "ao", "t"],
        "sil" => vec!["sil"],
        other => panic!("no fixture pronunciation for {other}"),
    }
}

/// A planted posteriorgram for `words`, with boundaries 2 to 6 steps apart.
pub fn planted_for_words(
    rng: &mut StdRng,
    words: &[&str],
    profile: ConfusionProfile,
) -> PlantedUtterance {
    let phones = phone_set();
    let cfg = FeatureConfig::default();
    let ids: Vec<usize> = words
        .iter()
        .flat_map(|w| word_phones(w))
        .map(|p| phones.id(p).unwrap().0)
        .collect();
    let step = cfg.frame_step;
    let mut boundaries = Vec::new();
    let mut b = frame_time(1, &cfg) + step * rng.gen_range(1.0..3.0);
    for _ in 1..ids.len() {
        boundaries.push(b);
        b += step * rng.gen_range(2.0..6.0);
    }
    let last = boundaries.last().copied().unwrap_or(frame_time(1, &cfg));
    let frames = ((last - frame_time(1, &cfg)) / step).ceil() as usize + 4;
    plant(
        &phones,
        &TargetSequence::from(ids),
        &boundaries,
        frames,
        0.9,
        profile,
        &cfg,
    )
    .unwrap()
}

pub const TRANSCRIPTS: [&str; 5] = [
    "sil cat sil",
    "cat tack",
    "dot cat sil",
    "tack dot cat",
    "sil dot",
];

/// Writes a dictionary, one posteriorgram per transcript and a manifest
/// into `dir`; returns the manifest path.
pub fn write_fixture(dir: &Path, seed: u64) -> PathBuf {
    let mut rng = StdRng::seed_from_u64(seed);
    std::fs::write(dir.join("dict.txt"), DICT).unwrap();
    let mut manifest = String::new();
    for (i, t) in TRANSCRIPTS.iter().enumerate() {
        let words: Vec<&str> = t.split(' ').collect();
        let u = planted_for_words(&mut rng, &words, ConfusionProfile::LinearRamp);
        let name = format!("utt{i}");
        std::fs::write(dir.join(format!("{name}.pgram")), u.posteriorgram.to_text()).unwrap();
        manifest.push_str(&format!("{name}.pgram\t{t}\tout/{name}.TextGrid\n"));
    }
    let path = dir.join("manifest.tsv");
    std::fs::write(&path, manifest).unwrap();
    path
}

pub fn write_wav(path: &Path, channels: u16, bits: u16, samples: &[i32]) {
    let spec = hound::WavSpec {
        channels,
        sample_rate: 16_000,
        bits_per_sample: bits,
        sample_format: hound::SampleFormat::Int,
    };
    let mut w = hound::WavWriter::create(path, spec).unwrap();
    for &s in samples {
        match bits {
            8 => w.write_sample(s as i8).unwrap(),
            _ => w.write_sample(s as i16).unwrap(),
        }
    }
    w.finalize().unwrap();
}
