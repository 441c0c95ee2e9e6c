use isrl::frames::ArgumentUnit;
use isrl::selpref::{read_triples, selectional_preference_exhaustive, write_scored_triples, PreferenceScorer};
use serde_json::json;

use super::{apply_selpref, create, finish, open, read_model, write_manifest};
use crate::config::{self, existing, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Global, SelprefArgs};

pub fn run(args: SelprefArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set_some(&mut config.paths.model, args.model);
    config::set_some(&mut config.paths.triples, args.triples);
    apply_selpref(&mut config, &args.selpref);

    let model_path = existing(&config.paths.model, "model")?;
    let triples_path = existing(&config.paths.triples, "triples")?;
    let model = read_model(&model_path)?;
    let triples = read_triples(open(&triples_path)?)?;
    let settings = config.selpref_config();
    let scorer = PreferenceScorer::new(&model, settings)?;

    let mut rows = Vec::with_capacity(triples.len());
    for t in triples {
        let mut scores = vec![scorer.score(&t.predicate, &t.word, &t.label)?];
        if args.oracle {
            let target = ArgumentUnit::new(t.word.as_str(), t.label.as_str());
            scores.push(selectional_preference_exhaustive(
                &model,
                &t.predicate,
                &target,
                settings.depth,
            )?);
        }
        rows.push((t, scores));
    }
    let mut w = create(&args.out)?;
    write_scored_triples(&mut w, &rows)?;
    finish(w)?;

    let max_gap = rows
        .iter()
        .filter(|(_, s)| s.len() == 2)
        .map(|(_, s)| (s[1] - s[0]).abs())
        .fold(0.0f64, f64::max);
    println!("triples scored  {}", rows.len());
    println!("k / depth       {} / {}", settings.k, settings.depth);
    if args.oracle {
        println!("max |exhaustive - pruned|  {max_gap:.3e}");
    }

    let mut manifest = Manifest::new("selpref", &config);
    manifest.input("model", &model_path)?;
    manifest.input("triples", &triples_path)?;
    manifest.output("scores", &args.out)?;
    manifest.summary = json!({
        "triples": rows.len(),
        "oracle": args.oracle,
        "max_oracle_gap": args.oracle.then_some(max_gap),
    });
    write_manifest(&manifest, global, &args.out)
}
