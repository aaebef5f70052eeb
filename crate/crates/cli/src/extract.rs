use anyhow::{Context, Result};
use phonalign::features::read_wav;
use phonalign::{compute_features, FeatureConfig};

use crate::output::write_atomic;
use crate::{FeaturesArgs, Status};

pub fn run(args: &FeaturesArgs) -> Result<Status> {
    let audio = read_wav(&args.wav).with_context(|| format!("reading {}", args.wav.display()))?;
    let config = FeatureConfig::with_sample_rate(audio.sample_rate);
    let features = compute_features(&audio.samples, &config)?;
    let mut buf = Vec::new();
    features.write_dump(&mut buf)?;
    write_atomic(&args.out, &buf)?;
    log::info!(
        "{}: {} frames x {} coefficients",
        args.wav.display(),
        features.num_frames(),
        features.dim()
    );
    Ok(Status::Ok)
}
