use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use phonalign::features::read_wav;
use phonalign::loss::LinearScorer;
use phonalign::{
    align_audio, align_posteriorgram, transcription_to_targets, write_textgrid, AcousticScorer,
    AlignOptions, FoldingTable, LinearAcousticScorer, PhoneSet, Posteriorgram,
    PronunciationDictionary,
};
use rayon::prelude::*;

use crate::output::{load_folding, write_atomic};
use crate::{AlignArgs, Status};

#[derive(Debug, Clone, PartialEq)]
struct Job {
    /// Shown in error reports.
    id: String,
    input: PathBuf,
    transcript: String,
    output: PathBuf,
}

struct Resources {
    dict: PronunciationDictionary,
    folding: FoldingTable,
    options: AlignOptions,
    scorer: Option<LinearAcousticScorer>,
}

pub fn run(args: &AlignArgs) -> Result<Status> {
    let jobs = match &args.manifest {
        Some(path) => read_manifest(path)?,
        None => vec![single_job(args)?],
    };
    let dict_text = std::fs::read_to_string(&args.dict)
        .with_context(|| format!("reading {}", args.dict.display()))?;
    let ctx = Resources {
        dict: PronunciationDictionary::parse(&dict_text)
            .with_context(|| format!("parsing {}", args.dict.display()))?,
        folding: load_folding(&args.folding)?,
        options: AlignOptions {
            tier_name: args.tier_name.clone(),
            ..AlignOptions::default()
        }
        .with_interpolation(!args.no_interp),
        scorer: load_scorer(args)?,
    };

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = args.workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build()?;
    let results: Vec<Result<()>> =
        pool.install(|| jobs.par_iter().map(|job| align_one(job, &ctx)).collect());

    let mut failed = 0;
    for (job, result) in jobs.iter().zip(&results) {
        if let Err(e) = result {
            failed += 1;
            eprintln!("utterance {}: {e:#}", job.id);
        }
    }
    log::info!(
        "aligned {} of {} utterances",
        jobs.len() - failed,
        jobs.len()
    );
    Ok(if failed == 0 {
        Status::Ok
    } else {
        Status::PartialFailure
    })
}

fn single_job(args: &AlignArgs) -> Result<Job> {
    let input = match (&args.audio, &args.pgram) {
        (Some(a), None) => a.clone(),
        (None, Some(p)) => p.clone(),
        _ => bail!("give exactly one of --audio, --pgram or --manifest"),
    };
    Ok(Job {
        id: input.display().to_string(),
        input,
        transcript: args.transcript.clone().unwrap_or_default(),
        output: args
            .out
            .clone()
            .context("--out is required without --manifest")?,
    })
}

fn read_manifest(path: &Path) -> Result<Vec<Job>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading manifest {}", path.display()))?;
    let base = path.parent().unwrap_or(Path::new(""));
    let mut jobs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [input, transcript, output] = fields[..] else {
            bail!(
                "{}:{}: expected 3 tab-separated fields, found {}",
                path.display(),
                i + 1,
                fields.len()
            );
        };
        jobs.push(Job {
            id: format!("{} (manifest line {})", input, i + 1),
            input: base.join(input),
            transcript: transcript.to_string(),
            output: base.join(output),
        });
    }
    if jobs.is_empty() {
        bail!("manifest {} lists no utterances", path.display());
    }
    Ok(jobs)
}

fn load_scorer(args: &AlignArgs) -> Result<Option<LinearAcousticScorer>> {
    match (&args.scorer, &args.phones) {
        (None, None) => Ok(None),
        (Some(scorer), Some(phones)) => {
            let file = std::fs::File::open(scorer)
                .with_context(|| format!("opening {}", scorer.display()))?;
            let linear = LinearScorer::read_from(std::io::BufReader::new(file))
                .with_context(|| format!("reading scorer {}", scorer.display()))?;
            let text = std::fs::read_to_string(phones)
                .with_context(|| format!("reading {}", phones.display()))?;
            let phones = PhoneSet::parse(&text)?;
            Ok(Some(LinearAcousticScorer::new(linear, phones)?))
        }
        _ => bail!("--scorer and --phones go together"),
    }
}

fn is_wav(path: &Path) -> bool {
    path.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
}

fn align_one(job: &Job, ctx: &Resources) -> Result<()> {
    let words: Vec<&str> = job.transcript.split_whitespace().collect();
    let (tier, duration) = if is_wav(&job.input) {
        let scorer = ctx
            .scorer
            .as_ref()
            .context("audio input needs --scorer and --phones")?;
        let audio =
            read_wav(&job.input).with_context(|| format!("reading {}", job.input.display()))?;
        let targets = transcription_to_targets(&words, &ctx.dict, &ctx.folding, scorer.phones())?;
        (
            align_audio(&audio, &targets, scorer, &ctx.options)?,
            audio.duration(),
        )
    } else {
        let text = std::fs::read_to_string(&job.input)
            .with_context(|| format!("reading {}", job.input.display()))?;
        let pg = Posteriorgram::parse(&text)
            .with_context(|| format!("parsing {}", job.input.display()))?;
        let targets = transcription_to_targets(&words, &ctx.dict, &ctx.folding, pg.phones())?;
        let tier = align_posteriorgram(&pg, &targets, &ctx.options, None)?;
        let end = tier.end();
        (tier, end)
    };
    write_atomic(&job.output, write_textgrid(&[tier], duration).as_bytes())
}
