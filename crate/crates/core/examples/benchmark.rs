//! Trains on the bundled four-class benchmark and prints one report per
//! decision rule.
//!
//!     cargo run --release -p evsvm --example benchmark [seed] [spec.toml]

use std::time::Instant;

use evsvm::data::{generate_synthetic, split, SyntheticSpec};
use evsvm::multiclass::train_multiclass;
use evsvm::report::evaluate;
use evsvm::{DecisionRule, Kernel, RunConfig, Strategy, TrainConfig};

fn main() -> Result<(), evsvm::Error> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(2024);
    let spec = match std::env::args().nth(2) {
        Some(path) => SyntheticSpec::load(path)?,
        None => SyntheticSpec::benchmark(),
    };
    let data = generate_synthetic(&spec, seed)?;
    let (train, test) = split(&data, 2.0 / 3.0, seed)?;
    let (x, y) = train.learned();
    let kernel = Kernel::Rbf {
        gamma: 1.0 / data.dim() as f64,
    };
    for strategy in [Strategy::Ovo, Strategy::Ovr] {
        let start = Instant::now();
        let model = train_multiclass(
            &x,
            &y,
            train.frame.clone(),
            &TrainConfig::new(strategy, kernel, 1.0),
        )?;
        println!("== {strategy} (trained in {:.2?})", start.elapsed());
        for c in &model.classifiers {
            println!(
                "   {:?}: {} SVs, λp {:.4}, λn {:.4}, α {:.4}",
                c.scope,
                c.svm.support_vectors.len(),
                c.calibration.lambda_p,
                c.calibration.lambda_n,
                c.calibration.alpha
            );
        }
        let mut rules = vec![
            DecisionRule::Pignistic,
            DecisionRule::Appriou,
            DecisionRule::Process12,
            DecisionRule::Process21,
        ];
        rules.push(match strategy {
            Strategy::Ovo => DecisionRule::Vote,
            Strategy::Ovr => DecisionRule::Argmax,
        });
        for rule in rules {
            let report = evaluate(&model, &test, &RunConfig { rule, r: 0.6 })?;
            println!("{}", report.to_text());
        }
    }
    Ok(())
}
