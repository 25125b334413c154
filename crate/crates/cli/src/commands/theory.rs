//! `sgcl theory-check`: executable verification of the noise-tolerance
//! properties the symmetric loss is built on.

use anyhow::{bail, Result};
use clap::Args;

use sgcl_core::losses::pairwise_exponential_loss;
use sgcl_core::theory::{
    exact_noisy_risk_binary, exact_noisy_risk_multiclass, gradient_symmetry_probe,
    minimizer_invariance_binary, minimizer_invariance_multiclass, pair_symmetry_sum, random_labels,
    random_margins, random_pair_labels, random_score_vectors, symmetry_sum, CrossEntropyLoss,
    MaeLoss, MulticlassLoss,
};

use crate::artifacts::{manifest, RunDir};
use crate::config::{Overrides, RunConfig};

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub common: Overrides,
    /// Probe points per label-sum check.
    #[arg(long, default_value_t = 200)]
    pub probes: usize,
    /// Random scorers per risk-identity check.
    #[arg(long, default_value_t = 20)]
    pub scorers: usize,
    /// Score configurations for the gradient probe.
    #[arg(long, default_value_t = 100)]
    pub configs: usize,
    /// Seed for the randomized probes.
    #[arg(long, default_value_t = 7)]
    pub probe_seed: u64,
}

#[derive(serde::Serialize)]
struct Check {
    name: &'static str,
    detail: String,
    pass: bool,
}

fn check(name: &'static str, pass: bool, detail: String) -> Check {
    Check { name, detail, pass }
}

pub fn run(cfg: &RunConfig, args: &TheoryArgs) -> Result<()> {
    let etas = [0.1, 0.2, 0.3, 0.4];
    let mut checks = Vec::new();

    let margins = random_margins(args.probes, 3.0, args.probe_seed);
    let pair_sum = pair_symmetry_sum(pairwise_exponential_loss, &margins)?;
    checks.push(check(
        "exponential pair label sums cancel",
        pair_sum.mean_sum.abs() <= 1e-12 && pair_sum.range <= 1e-12,
        format!(
            "mean {:.3e}, range {:.3e}",
            pair_sum.mean_sum, pair_sum.range
        ),
    ));

    for k in [3usize, 5] {
        let probes = random_score_vectors(args.probes, k, 3.0, args.probe_seed + k as u64);
        let sum = symmetry_sum(&MaeLoss, k, &probes)?;
        let constant = MaeLoss.symmetry_constant(k).expect("constant for every k");
        checks.push(check(
            if k == 3 {
                "absolute-error label sums are constant (k=3)"
            } else {
                "absolute-error label sums are constant (k=5)"
            },
            (sum.mean_sum - constant).abs() <= 1e-12 && sum.range <= 1e-12,
            format!(
                "mean {:.12}, target {constant}, range {:.3e}",
                sum.mean_sum, sum.range
            ),
        ));
    }

    let ce_sum = symmetry_sum(
        &CrossEntropyLoss,
        4,
        &random_score_vectors(args.probes, 4, 3.0, args.probe_seed + 11),
    )?;
    checks.push(check(
        "cross-entropy label sums move (negative control)",
        ce_sum.range > 0.1,
        format!("range {:.3}", ce_sum.range),
    ));

    let pair_labels = random_pair_labels(50, args.probe_seed + 13);
    let scorer_margins: Vec<Vec<f64>> = (0..args.scorers)
        .map(|i| random_margins(50, 3.0, args.probe_seed + 100 + i as u64))
        .collect();
    let mut max_dev_binary = 0.0f64;
    for margins in &scorer_margins {
        for &eta in &etas {
            let report = exact_noisy_risk_binary(
                margins,
                &pair_labels,
                eta,
                pairwise_exponential_loss,
                0.0,
            )?;
            max_dev_binary = max_dev_binary.max(report.deviation);
        }
    }
    checks.push(check(
        "binary noisy risk matches the affine prediction",
        max_dev_binary <= 1e-12,
        format!("max deviation {max_dev_binary:.3e}"),
    ));

    let mut max_dev_multi = 0.0f64;
    for k in [3usize, 5] {
        let scores = random_score_vectors(50, k, 3.0, args.probe_seed + 200 + k as u64);
        let labels = random_labels(50, k, args.probe_seed + 300 + k as u64);
        let constant = MaeLoss.symmetry_constant(k).expect("constant for every k");
        for &eta in &etas {
            let report = exact_noisy_risk_multiclass(&scores, &labels, k, eta, &MaeLoss, constant)?;
            max_dev_multi = max_dev_multi.max(report.deviation);
        }
    }
    checks.push(check(
        "k-class noisy risk matches the affine prediction",
        max_dev_multi <= 1e-12,
        format!("max deviation {max_dev_multi:.3e}"),
    ));

    let ce_scores = random_score_vectors(200, 4, 3.0, args.probe_seed + 17);
    let ce_labels = random_labels(200, 4, args.probe_seed + 19);
    let ce_risk =
        exact_noisy_risk_multiclass(&ce_scores, &ce_labels, 4, 0.3, &CrossEntropyLoss, 0.0)?;
    checks.push(check(
        "cross-entropy breaks the affine prediction (negative control)",
        ce_risk.deviation > 0.1,
        format!("deviation {:.3}", ce_risk.deviation),
    ));

    let binary_min = minimizer_invariance_binary(
        &scorer_margins,
        &pair_labels,
        &etas,
        pairwise_exponential_loss,
    )?;
    checks.push(check(
        "binary risk minimizer is noise-invariant",
        binary_min.invariant,
        format!("clean argmin {}", binary_min.clean_argmin),
    ));

    let multi_candidates: Vec<Vec<Vec<f64>>> = (0..6)
        .map(|i| random_score_vectors(30, 3, 3.0, args.probe_seed + 400 + i as u64))
        .collect();
    let multi_labels = random_labels(30, 3, args.probe_seed + 23);
    let multi_min =
        minimizer_invariance_multiclass(&multi_candidates, &multi_labels, 3, &etas, &MaeLoss)?;
    checks.push(check(
        "k-class risk minimizer is noise-invariant",
        multi_min.invariant,
        format!("clean argmin {}", multi_min.clean_argmin),
    ));

    let probe = gradient_symmetry_probe(args.configs, args.probe_seed + 29)?;
    checks.push(check(
        "only the exponential form has cancelling gradients",
        probe.softmax_contrastive_range > 1e-3 && probe.exponential_range <= 1e-12,
        format!(
            "softmax gradient-sum range {:.3e}, exponential {:.3e}",
            probe.softmax_contrastive_range, probe.exponential_range
        ),
    ));

    let failed = checks.iter().filter(|c| !c.pass).count();
    for c in &checks {
        println!(
            "check [{}] {}: {}",
            if c.pass { "ok" } else { "FAIL" },
            c.name,
            c.detail
        );
    }

    let dir = RunDir::create(&cfg.output.dir)?;
    dir.write_json("manifest.json", &manifest("theory-check", cfg))?;
    dir.write_json(
        "theory_report.json",
        &serde_json::json!({
            "probes": args.probes,
            "scorers": args.scorers,
            "configs": args.configs,
            "seed": args.probe_seed,
            "checks": checks,
            "failed": failed,
        }),
    )?;

    if failed > 0 {
        bail!("{failed} theory check(s) failed");
    }
    println!("all {} theory checks passed", checks.len());
    Ok(())
}
