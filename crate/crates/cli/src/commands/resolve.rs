use isrl::frames::{Lexicon, VerbMap};
use isrl::resolver::{read_documents, read_queries, resolve_all, write_predictions, CandidateScorer, Provenance};
use isrl::selpref::PreferenceScorer;
use serde_json::json;

use super::{apply_selpref, create, finish, open, output, read_model, threads, write_manifest};
use crate::config::{self, existing, existing_opt, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Failure, Global, ResolveArgs};

pub fn run(args: ResolveArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set_some(&mut config.paths.model, args.model);
    config::set_some(&mut config.paths.documents, args.documents);
    config::set_some(&mut config.paths.queries, args.queries);
    config::set_some(&mut config.paths.lexicon, args.lexicon);
    config::set_some(&mut config.paths.predictions, args.out);
    config::set(&mut config.resolver.threshold, args.threshold);
    config::set(&mut config.resolver.recency_magnitude, args.recency_magnitude);
    config::set(&mut config.resolver.recency_decay, args.recency_decay);
    config::set(&mut config.resolver.window, args.window);
    config::set(&mut config.resolver.candidates, args.candidates);
    config::set(&mut config.resolver.threads, args.threads);
    config.resolver.threshold_on_raw |= args.threshold_on_raw;
    config.resolver.baseline_only |= args.baseline_only;
    apply_selpref(&mut config, &args.selpref);

    let baseline = config.resolver.baseline_only;
    let model_path = if baseline {
        None
    } else if config.paths.model.is_none() {
        return Err(Failure::Usage("resolve needs a model (--model) unless --baseline-only is set".into()).into());
    } else {
        Some(existing(&config.paths.model, "model")?)
    };
    let documents_path = existing(&config.paths.documents, "documents")?;
    let queries_path = existing(&config.paths.queries, "queries")?;
    let lexicon_path = existing_opt(&config.paths.lexicon, "lexicon")?;
    let out = output(&config.paths.predictions, "predictions")?;

    let documents = read_documents(open(&documents_path)?)?;
    let queries = read_queries(open(&queries_path)?)?;
    let lexicon = match &lexicon_path {
        Some(p) => Lexicon::read(open(p)?)?,
        None => Lexicon::default(),
    };
    let model = model_path.as_deref().map(read_model).transpose()?;
    let verb_map = match &model {
        Some(m) => VerbMap::from_lexicon(&lexicon, m.vocab().predicate_words()),
        None => VerbMap::from_lexicon(&lexicon, std::iter::empty()),
    };
    let resolver = config.resolver_config();
    let scorer = model
        .as_ref()
        .map(|m| PreferenceScorer::new(m, resolver.selpref))
        .transpose()?;
    let scorer_ref = scorer.as_ref().map(|s| s as &(dyn CandidateScorer + Sync));
    let resolutions = resolve_all(
        &documents,
        &queries,
        scorer_ref,
        &verb_map,
        &resolver,
        threads(config.resolver.threads),
    )?;

    let mut w = create(&out)?;
    write_predictions(&mut w, &resolutions)?;
    finish(w)?;

    let count = |p: Provenance| {
        resolutions
            .iter()
            .filter(|r| r.prediction.as_ref().is_some_and(|f| f.provenance == p))
            .count()
    };
    let (fallback, scored) = (count(Provenance::Fallback), count(Provenance::Model));
    let unfilled = resolutions.len() - fallback - scored;
    println!("queries     {}", resolutions.len());
    println!("fallback    {fallback}");
    println!("model       {scored}");
    println!("unfilled    {unfilled}");

    let mut manifest = Manifest::new("resolve", &config);
    if let Some(p) = &model_path {
        manifest.input("model", p)?;
    }
    manifest.input("documents", &documents_path)?;
    manifest.input("queries", &queries_path)?;
    if let Some(p) = &lexicon_path {
        manifest.input("lexicon", p)?;
    }
    manifest.output("predictions", &out)?;
    manifest.summary = json!({
        "queries": resolutions.len(),
        "fallback": fallback,
        "model": scored,
        "unfilled": unfilled,
    });
    write_manifest(&manifest, global, &out)
}
