//! Train the full detector on the desk benchmark, then save and reload it.

use hetbot::experiments::Benchmark;
use hetbot::faat::{forward, Mode};
use hetbot::train::{ablation_run, evaluate, AblationVariant, Checkpoint};

fn main() -> hetbot::Result<()> {
    let bench = Benchmark::desk();
    let ds = bench.instance(0.3, 0)?;
    let splits = ds.splits.clone().expect("benchmark instances carry splits");
    let cfg = bench.train_config(0);

    let run = ablation_run(
        AblationVariant::Full,
        &ds.graph,
        &ds.features,
        &ds.labels,
        &splits,
        &cfg,
    )?;
    let t = &run.train;
    println!(
        "test accuracy {:.4}  f1 {:.4}  balanced accuracy {:.4}  best epoch {}/{}",
        t.test.accuracy, t.test.f1, t.test.balanced_accuracy, t.best_epoch, t.epochs_ran
    );
    for log in t.history.iter().step_by(20) {
        println!(
            "  epoch {:>3}: loss {:.4} (ce {:.4}, guidance {:.4})  val {:.4}",
            log.epoch, log.loss.total, log.loss.cross_entropy, log.loss.guidance, log.val_accuracy
        );
    }

    let path = std::env::temp_dir().join("hetbot_example_checkpoint.json");
    Checkpoint::new(&t.params, &cfg, run.injected.as_ref()).save(&path)?;
    let params = Checkpoint::load(&path)?.to_params()?;
    let (logits, _) = forward(&run.graph, &ds.features, &params, Mode::Eval)?;
    let again = evaluate(&logits, &ds.labels, &splits.test)?;
    assert_eq!(again, t.test);
    println!(
        "reloaded checkpoint from {} reproduces the metrics",
        path.display()
    );
    Ok(())
}
