//! Runtime scaling of mask generation and attribution.

use timereise_core::attribution::{occlusion, timereise, AttributionRequest, Baseline, Perturbation, Target};
use timereise_core::bench::{fit_linear, time_median, CallCountingClassifier, LinearFit};
use timereise_core::dataio::{generate_anomaly_dataset, AnomalyGenSpec};
use timereise_core::rng::derive_seed;
use timereise_core::{generate_maskset, MaskGenSpec, OracleAnomalyClassifier, Shape};

use crate::config::RunConfig;
use crate::error::CliResult;
use crate::layout::{write_text, RunDir, StageLog};
use crate::pipeline::snapshot_config;

/// One grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub timesteps: usize,
    /// Masks per (density, granularity) combination.
    pub per_combo: usize,
    pub masks: usize,
    pub timereise_passes: u64,
    pub maskgen_ms: f64,
    pub attribution_ms: f64,
}

/// Occlusion at window 1, stride 1 for one length.
#[derive(Debug, Clone, PartialEq)]
pub struct OcclusionRow {
    pub timesteps: usize,
    pub channels: usize,
    /// Passes on occluded inputs.
    pub perturbed_passes: u64,
    /// Including the single unperturbed reference pass.
    pub total_passes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitRow {
    pub timesteps: usize,
    pub stage: &'static str,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub occlusion: Vec<OcclusionRow>,
    pub fits: Vec<FitRow>,
}

fn ms(d: std::time::Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

pub fn cmd_bench(cfg: &RunConfig) -> CliResult<BenchReport> {
    let dir = snapshot_config(cfg)?;
    let b = &cfg.bench;
    let seeds = cfg.seeds();
    let mut log = StageLog::new();
    let mut rows = Vec::new();
    let mut occ = Vec::new();
    let mut fits = Vec::new();

    for &t in &b.timesteps {
        let shape = Shape::new(b.channels, t);
        let data = generate_anomaly_dataset(&AnomalyGenSpec {
            n_train: 1,
            n_test: 1,
            timesteps: t,
            channels: b.channels,
            anomaly_rate: 1.0,
            seed: derive_seed(cfg.seed, "bench"),
            ..AnomalyGenSpec::default()
        })?;
        let x = data.test.samples()[0].values();
        let means = data.train.channel_means();
        let oracle = OracleAnomalyClassifier::new(shape);
        let counted = CallCountingClassifier::new(&oracle);
        // A fixed target keeps the pass count at exactly one per mask.
        let req = AttributionRequest::new(x, &counted, means).with_target(Target::Class(1));

        occlusion(&req, 1, 1, Baseline::ChannelMean)?;
        let total = counted.count();
        occ.push(OcclusionRow {
            timesteps: t,
            channels: b.channels,
            perturbed_passes: total - 1,
            total_passes: total,
        });

        let mut per_t = Vec::new();
        for &n in &b.mask_counts {
            let spec = MaskGenSpec {
                densities: b.densities.clone(),
                granularities: vec![t.div_ceil(8)],
                per_combo_count: n,
                channel_joint: false,
                seed: seeds.masks,
            };
            let (gen_time, masks) = time_median(|| generate_maskset(shape, &spec))?;
            counted.reset();
            timereise(&req, &masks, Perturbation::Multiply)?;
            let passes = counted.count();
            let (attr_time, _) = time_median(|| timereise(&req, &masks, Perturbation::Multiply))?;
            log.info(format!("T={t} N={n}: {} masks, {passes} passes", masks.len()));
            per_t.push(BenchRow {
                timesteps: t,
                per_combo: n,
                masks: masks.len(),
                timereise_passes: passes,
                maskgen_ms: ms(gen_time),
                attribution_ms: ms(attr_time),
            });
        }
        let ns: Vec<f64> = per_t.iter().map(|r| r.per_combo as f64).collect();
        for (stage, ys) in [
            ("mask_generation", per_t.iter().map(|r| r.maskgen_ms).collect::<Vec<_>>()),
            ("attribution", per_t.iter().map(|r| r.attribution_ms).collect()),
        ] {
            if ns.len() >= 3 {
                fits.push(FitRow {
                    timesteps: t,
                    stage,
                    fit: fit_linear(&ns, &ys)?,
                });
            }
        }
        rows.extend(per_t);
    }

    if fits.is_empty() {
        log.warn("fewer than three mask counts, no linear fits");
    }
    write_bench_tables(&dir, &rows, &occ, &fits)?;
    log.save(&dir.log("bench"))?;
    Ok(BenchReport {
        rows,
        occlusion: occ,
        fits,
    })
}

fn write_bench_tables(
    dir: &RunDir,
    rows: &[BenchRow],
    occ: &[OcclusionRow],
    fits: &[FitRow],
) -> CliResult<()> {
    // Wall-clock columns vary between runs; pass counts do not.
    let mut runtime = String::from("timesteps\tper_combo\tmasks\tmaskgen_ms\tattribution_ms\n");
    let mut passes = String::from("method\ttimesteps\tper_combo\tmasks\tpasses\n");
    for r in rows {
        runtime.push_str(&format!(
            "{}\t{}\t{}\t{:.4}\t{:.4}\n",
            r.timesteps, r.per_combo, r.masks, r.maskgen_ms, r.attribution_ms
        ));
        passes.push_str(&format!(
            "timereise\t{}\t{}\t{}\t{}\n",
            r.timesteps, r.per_combo, r.masks, r.timereise_passes
        ));
    }
    for o in occ {
        passes.push_str(&format!(
            "occlusion\t{}\t-\t-\t{}\nocclusion_with_reference\t{}\t-\t-\t{}\n",
            o.timesteps, o.perturbed_passes, o.timesteps, o.total_passes
        ));
    }
    let mut fit_tsv = String::from("timesteps\tstage\tslope_ms_per_mask\tintercept_ms\tr_squared\n");
    for f in fits {
        fit_tsv.push_str(&format!(
            "{}\t{}\t{:.6}\t{:.6}\t{:.4}\n",
            f.timesteps, f.stage, f.fit.slope, f.fit.intercept, f.fit.r_squared
        ));
    }
    write_text(&dir.bench("runtime.tsv"), &runtime)?;
    write_text(&dir.bench("passes.tsv"), &passes)?;
    write_text(&dir.bench("fits.tsv"), &fit_tsv)
}

impl BenchReport {
    /// Worst R² over all fits of one stage.
    pub fn min_r_squared(&self, stage: &str) -> Option<f64> {
        self.fits
            .iter()
            .filter(|f| f.stage == stage)
            .map(|f| f.fit.r_squared)
            .reduce(f64::min)
    }
}

