//! Key-expansion timing across the five registered strengths.
//!
//! Four experiments per strength: (1) caterpillar → cocoon, one key;
//! (2) cocoon → butterfly, one key; (3) and (4) the same at batch size.
//! Each cell runs ten untimed warm-up iterations, then `iterations` timed
//! samples of the expansion computation only — setup and serialization stay
//! outside the clock. Cells run strictly serially.

use std::time::Instant;

use pseudonym_pki::bke::{butterfly_public, cocoon_public, gen_caterpillar};
use pseudonym_pki::curve::{curve_for_strength, CurveParams};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;

use crate::HarnessError;

const WARMUP_ITERATIONS: u32 = 10;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub strengths: Vec<u16>,
    pub iterations: u32,
    pub batch_size: u32,
    pub experiments: Vec<u8>,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            strengths: vec![80, 112, 128, 192, 256],
            iterations: 1000,
            batch_size: 20,
            experiments: vec![1, 2, 3, 4],
            seed: 7,
        }
    }
}

/// One (strength, experiment) measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchCell {
    pub strength: u16,
    pub experiment: u8,
    /// Keys expanded per timed sample: 1 for experiments 1–2, the batch
    /// size for 3–4.
    pub batch: u32,
    pub mean_us: f64,
    pub sd_us: f64,
    pub samples: u32,
}

impl BenchCell {
    pub fn keys_per_second(&self) -> f64 {
        if self.mean_us <= 0.0 {
            return f64::INFINITY;
        }
        f64::from(self.batch) * 1_000_000.0 / self.mean_us
    }
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub host: String,
    pub profile: &'static str,
    pub iterations: u32,
    pub batch_size: u32,
    pub cells: Vec<BenchCell>,
}

impl BenchReport {
    pub fn cell(&self, strength: u16, experiment: u8) -> Option<&BenchCell> {
        self.cells
            .iter()
            .find(|c| c.strength == strength && c.experiment == experiment)
    }
}

fn sample_stats(samples: &[f64]) -> (f64, f64) {
    let n = samples.len();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = samples.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let variance = samples
        .iter()
        .map(|x| (x - mean) * (x - mean))
        .sum::<f64>()
        / (n - 1) as f64;
    (mean, variance.sqrt())
}

fn host_description() -> String {
    let cpu = std::fs::read_to_string("/proc/cpuinfo")
        .ok()
        .and_then(|info| {
            info.lines()
                .find(|l| l.starts_with("model name"))
                .and_then(|l| l.split(':').nth(1).map(|v| v.trim().to_string()))
        })
        .unwrap_or_else(|| "unknown cpu".to_string());
    format!("{cpu}, {} ({})", std::env::consts::OS, std::env::consts::ARCH)
}

fn build_profile() -> &'static str {
    if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    }
}

fn measure_cell(
    curve: &'static CurveParams,
    experiment: u8,
    iterations: u32,
    batch_size: u32,
    seed: u64,
) -> Result<BenchCell, HarnessError> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let material =
        gen_caterpillar(curve, &mut rng).map_err(pseudonym_pki::entities::EntityError::Bke)?;
    let share = material.public_share();
    let pca = curve
        .keygen(&mut rng)
        .map_err(pseudonym_pki::entities::EntityError::Curve)?;
    // warm the fixed-base table before any clock starts
    let _ = cocoon_public(&share, u32::MAX - 1, curve)
        .map_err(pseudonym_pki::entities::EntityError::Bke)?;

    let per_sample = match experiment {
        1 | 2 => 1u32,
        3 | 4 => batch_size,
        other => {
            return Err(HarnessError::InvalidConfig(format!(
                "unknown experiment {other}"
            )))
        }
    };
    // cocoon inputs for the butterfly experiments, prepared outside timing
    let cocoon_inputs: Vec<_> = if experiment == 2 || experiment == 4 {
        (0..per_sample)
            .map(|i| cocoon_public(&share, i, curve))
            .collect::<Result<_, _>>()
            .map_err(pseudonym_pki::entities::EntityError::Bke)?
    } else {
        Vec::new()
    };

    let mut samples = Vec::with_capacity(iterations as usize);
    let mut next_index = 0u32;
    for round in 0..(WARMUP_ITERATIONS + iterations) {
        let start = Instant::now();
        match experiment {
            1 | 3 => {
                for _ in 0..per_sample {
                    let cocoon = cocoon_public(&share, next_index, curve)
                        .map_err(pseudonym_pki::entities::EntityError::Bke)?;
                    std::hint::black_box(&cocoon);
                    next_index = next_index.wrapping_add(1);
                }
            }
            _ => {
                for cocoon in &cocoon_inputs {
                    let response = butterfly_public(cocoon, &pca, curve, &mut rng)
                        .map_err(pseudonym_pki::entities::EntityError::Bke)?;
                    std::hint::black_box(&response);
                }
            }
        }
        let elapsed = start.elapsed().as_secs_f64() * 1_000_000.0;
        if round >= WARMUP_ITERATIONS {
            samples.push(elapsed);
        }
    }
    let (mean_us, sd_us) = sample_stats(&samples);
    Ok(BenchCell {
        strength: curve.strength_bits(),
        experiment,
        batch: per_sample,
        mean_us,
        sd_us,
        samples: samples.len() as u32,
    })
}

pub fn bench(config: &BenchConfig) -> Result<BenchReport, HarnessError> {
    if config.iterations < 1 {
        return Err(HarnessError::InvalidConfig(
            "iterations must be at least 1".into(),
        ));
    }
    if config.batch_size < 1 {
        return Err(HarnessError::InvalidConfig(
            "batch size must be at least 1".into(),
        ));
    }
    for experiment in &config.experiments {
        if !(1..=4).contains(experiment) {
            return Err(HarnessError::InvalidConfig(format!(
                "unknown experiment {experiment}"
            )));
        }
    }
    let mut curves = Vec::with_capacity(config.strengths.len());
    for strength in &config.strengths {
        curves.push(
            curve_for_strength(*strength).map_err(|_| HarnessError::UnknownStrength(*strength))?,
        );
    }
    let mut cells = Vec::new();
    for curve in curves {
        for experiment in &config.experiments {
            let cell_seed = config
                .seed
                .wrapping_mul(31)
                .wrapping_add(u64::from(curve.strength_bits()) * 10 + u64::from(*experiment));
            cells.push(measure_cell(
                curve,
                *experiment,
                config.iterations,
                config.batch_size,
                cell_seed,
            )?);
        }
    }
    Ok(BenchReport {
        host: host_description(),
        profile: build_profile(),
        iterations: config.iterations,
        batch_size: config.batch_size,
        cells,
    })
}
