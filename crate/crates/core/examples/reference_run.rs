//! Trains on the bundled MNIST subset and prints per-epoch diagnostics.
//!
//! ```text
//! cargo run --release -p vsc-core --example reference_run -- [epochs] [lambda_max] [dataset]
//! ```

use std::path::Path;

use vsc_core::analysis::{
    active_dimension_sets, category_contrast, similarity_matrix, Metric, alignment_score, class_gamma_matrix, mean_active_fraction};
use vsc_core::data::DatasetTag;
use vsc_core::{LabeledDataset, TrainConfig, Trainer};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: u32 = args.get(1).map_or(Ok(60), |s| s.parse())?;
    let lambda_max: f64 = args.get(2).map_or(Ok(10.0), |s| s.parse())?;
    let tag: DatasetTag = args.get(3).map_or(Ok(DatasetTag::Mnist), |s| s.parse())?;

    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(tag.as_str());
    let train = LabeledDataset::load(
        &root.join("train-images-idx3-ubyte.gz"),
        &root.join("train-labels-idx1-ubyte.gz"),
        tag,
    )?;

    let mut config = TrainConfig {
        epochs,
        ..TrainConfig::default()
    };
    config.sched.start_epoch = 30;
    config.sched.lambda_max = lambda_max;
    if let Ok(v) = std::env::var("VSC_ALPHA") {
        config.model.alpha = v.parse()?;
    }
    if let Ok(v) = std::env::var("VSC_LR") {
        config.learning_rate = v.parse()?;
    }
    if let Ok(v) = std::env::var("VSC_BATCH") {
        config.batch_size = v.parse()?;
    }
    if let Ok(v) = std::env::var("VSC_SEED") {
        config.seed = v.parse()?;
    }
    let alpha = config.model.alpha;

    let mut trainer = Trainer::new(config)?;
    println!("epoch,neg_elbo,jsd,lambda,alignment,active_fraction,global,specific");
    while !trainer.is_finished() {
        let rec = trainer.run_epoch(&train)?;
        let model = trainer.model();
        let align = alignment_score(model, &train, 1024, 0)?;
        let frac = mean_active_fraction(model, &train, 0.5)?;
        let sets = active_dimension_sets(&class_gamma_matrix(model, &train)?, 0.5)?;
        let specific: usize = sets.class_specific.values().map(|s| s.len()).sum();
        println!(
            "{},{:.3},{:.4},{},{:.4},{:.4},{},{}",
            rec.epoch,
            rec.neg_elbo,
            rec.jsd,
            rec.lambda,
            align,
            frac,
            sets.global.len(),
            specific
        );
    }
    let m = class_gamma_matrix(trainer.model(), &train)?;
    let best = (0..m.latent_dim())
        .map(|i| {
            let lowest = m.values.iter_rows().map(|r| r[i]).fold(f64::INFINITY, f64::min);
            (lowest, i)
        })
        .fold((f64::NEG_INFINITY, 0), |a, b| if b.0 > a.0 { b } else { a });
    eprintln!("most shared dimension {} (lowest class-mean gamma {:.3})", best.1, best.0);
    for (c, row) in m.classes.iter().zip(m.values.iter_rows()) {
        let active: Vec<String> = row.iter().enumerate().filter(|(_, &g)| g > 0.2).map(|(i, g)| format!("{i}:{g:.2}")).collect();
        eprintln!("class {c}: {}", active.join(" "));
    }
    let pearson = similarity_matrix(&m, Metric::Pearson)?;
    if let Some((within, cross)) = category_contrast(&pearson, tag) {
        eprintln!("pearson within-category {within:.4}, cross-category {cross:.4}");
    }
    eprintln!("sparsity budget 3α = {}", 3.0 * alpha);
    Ok(())
}
