use isrl::eval::{evaluate, format_key_values, format_table, read_gold, read_predictions};
use serde_json::json;

use super::write_manifest;
use super::{create, finish, open};
use crate::config::{self, existing, PipelineConfig};
use crate::manifest::Manifest;
use crate::{EvaluateArgs, Global};

pub fn run(args: EvaluateArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    use std::io::Write;

    config::set_some(&mut config.paths.gold, args.gold);
    config::set_some(&mut config.paths.predictions, args.predictions);
    let gold_path = existing(&config.paths.gold, "gold")?;
    let predictions_path = existing(&config.paths.predictions, "predictions")?;

    let gold = read_gold(open(&gold_path)?)?;
    let predictions = read_predictions(open(&predictions_path)?)?;
    let result = evaluate(&predictions, &gold)?;
    let table = format_table(&result);
    print!("{table}");

    let mut w = create(&args.out)?;
    w.write_all(format_key_values(&result).as_bytes())?;
    finish(w)?;
    if let Some(path) = &args.table {
        let mut w = create(path)?;
        w.write_all(table.as_bytes())?;
        finish(w)?;
    }

    let mut manifest = Manifest::new("evaluate", &config);
    manifest.input("gold", &gold_path)?;
    manifest.input("predictions", &predictions_path)?;
    manifest.output("metrics", &args.out)?;
    if let Some(path) = &args.table {
        manifest.output("table", path)?;
    }
    let m = &result.overall;
    manifest.summary = json!({
        "precision": m.precision,
        "recall": m.recall,
        "f1": m.f1,
        "predicted": m.n_predicted,
        "gold_filled": m.n_gold_filled,
    });
    write_manifest(&manifest, global, &args.out)
}
