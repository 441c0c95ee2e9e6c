use anyhow::Context;
use isrl::frames::{
    build_vocabularies, encode_frame, load_pretrained_embeddings, parse_frames, FrameFormat, InputMode, ParseOptions,
    Vocabulary,
};
use isrl::prnsfm::{save_model, train, PrnsfmModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{create, finish, open, output, write_manifest};
use crate::config::{self, existing, existing_opt, Architecture, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Failure, Global, TrainArgs};

pub fn run(args: TrainArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set_some(&mut config.paths.frames, args.frames);
    config::set_some(&mut config.paths.vocab, args.vocab);
    config::set_some(&mut config.paths.embeddings, args.embeddings);
    config::set_some(&mut config.paths.model, args.model);
    config::set(&mut config.model.mode, args.mode);
    config::set(&mut config.model.word_dim, args.word_dim);
    config::set(&mut config.model.label_dim, args.label_dim);
    config::set(&mut config.model.joint_dim, args.joint_dim);
    config::set(&mut config.model.init_range, args.init_range);
    config::set(&mut config.training.epochs, args.epochs);
    config::set_some(&mut config.training.max_grad_norm, args.max_grad_norm);
    config.training.freeze_word_embeddings |= args.freeze_word_embeddings;
    config::set(&mut config.data.min_count, args.min_count);
    config::set(&mut config.seeds.model, args.seed);
    config::set(&mut config.seeds.shuffle, args.shuffle_seed);
    config::set(&mut config.seeds.embeddings, args.embedding_seed);

    let frames_path = existing(&config.paths.frames, "frames")?;
    let vocab_path = existing_opt(&config.paths.vocab, "vocab")?;
    let embeddings_path = existing_opt(&config.paths.embeddings, "embeddings")?;
    let model_path = output(&config.paths.model, "model")?;
    let report_path = args.report.unwrap_or_else(|| {
        let name = model_path.file_name().unwrap_or_default().to_string_lossy();
        model_path.with_file_name(format!("{name}.report.json"))
    });
    if embeddings_path.is_some() && config.model.mode == Architecture::Joint {
        return Err(Failure::Usage("pretrained word vectors need --mode separate".into()).into());
    }

    let parsed = parse_frames(open(&frames_path)?, FrameFormat::Records, ParseOptions::default())?;
    if parsed.frames.is_empty() {
        return Err(Failure::Input(format!("no frames in {}", frames_path.display())).into());
    }
    let vocab = match &vocab_path {
        Some(p) => Vocabulary::read(open(p)?).with_context(|| format!("reading vocabulary {}", p.display()))?,
        None => build_vocabularies(&parsed.frames, config.data.min_count, parsed.word_form),
    };
    let model_config = config.model_config();
    let pretrained = match &embeddings_path {
        Some(p) => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seeds.embeddings);
            let loaded = load_pretrained_embeddings(open(p)?, &vocab, config.model.word_dim, &mut rng)?;
            println!(
                "pretrained vectors cover {}/{} words ({:.1}%)",
                loaded.coverage.found,
                loaded.coverage.total,
                100.0 * loaded.coverage.fraction()
            );
            Some(loaded.matrix)
        }
        None => None,
    };
    let mode: InputMode = config.model.mode.into();
    let encoded: Vec<_> = parsed.frames.iter().map(|f| encode_frame(f, &vocab, mode)).collect();
    let mut model = PrnsfmModel::new(model_config, vocab, pretrained.as_ref())?;
    log::info!(
        "training {mode} model: {} frames, {} output units, hidden {}",
        encoded.len(),
        model.num_outputs(),
        model.config().hidden_size()
    );
    let report = train(&mut model, &encoded, &config.train_config())?;

    let mut w = create(&model_path)?;
    save_model(&model, &mut w)?;
    finish(w)?;
    let mut w = create(&report_path)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    finish(w)?;

    let first = report.epoch_mean_nll.first().copied().unwrap_or(f64::NAN);
    let last = report.epoch_mean_nll.last().copied().unwrap_or(f64::NAN);
    println!("frames        {}", encoded.len());
    println!("epochs        {}", report.epochs);
    println!("mean NLL      {first:.4} -> {last:.4}");
    println!("wall time     {:.1}s", report.wall_time_secs);

    let mut manifest = Manifest::new("train", &config);
    manifest.input("frames", &frames_path)?;
    if let Some(p) = &vocab_path {
        manifest.input("vocab", p)?;
    }
    if let Some(p) = &embeddings_path {
        manifest.input("embeddings", p)?;
    }
    manifest.output("model", &model_path)?;
    manifest.output("report", &report_path)?;
    manifest.summary = json!({
        "frames": encoded.len(),
        "epochs": report.epochs,
        "first_epoch_mean_nll": first,
        "last_epoch_mean_nll": last,
        "output_units": model.num_outputs(),
    });
    write_manifest(&manifest, global, &model_path)
}
