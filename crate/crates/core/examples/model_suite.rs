// Multimodal data, its summary statistics and the suite of competing models.

use mgdro::datagen::{
    assemble_model_suite, sample_mixture_labeled, MixtureSpec, ModelName, SampleSummary,
    SuiteConfig,
};

pub fn run_example() -> mgdro::Result<usize> {
    let mix = MixtureSpec::trimodal();
    let (samples, labels) = sample_mixture_labeled(&mix, 120, 3)?;
    let config = SuiteConfig::benchmark(mix.num_components());
    let summary = SampleSummary::from_samples(&samples, &config, 3)?;
    println!(
        "moment radii gamma1 = {:.4}, gamma2 = {:.4}",
        summary.gamma1, summary.gamma2
    );
    println!(
        "coverage radii 50% = {:.3}, 100% = {:.3}",
        summary.gamma_bar1, summary.gamma_bar2
    );
    for (c, center) in summary.clusters.centers.iter().enumerate() {
        println!(
            "cluster {c}: {} samples, center {:.2?}, 50% radius {:.3}",
            summary.clusters.counts[c],
            center.as_slice(),
            summary.class_gammas[c]
        );
    }
    let true_counts: Vec<usize> = (0..mix.num_components())
        .map(|k| labels.iter().filter(|&&l| l == k).count())
        .collect();
    println!("true component counts {true_counts:?}");

    let suite = assemble_model_suite(&samples, &config, &ModelName::default_suite(), 3)?;
    for m in &suite {
        println!(
            "{:12} core sets {}  sample space bounded: {}",
            m.name.to_string(),
            m.problem.core_sets.len(),
            !m.problem.sample_space.is_full_space()
        );
    }
    Ok(suite.len())
}

fn main() -> mgdro::Result<()> {
    run_example().map(|_| ())
}
