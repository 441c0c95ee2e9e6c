use isrl::frames::{build_vocabularies, encode_frame, ArgumentUnit, FrameSequence, InputMode, WordForm};
use isrl::nn::{grad_check, GradCheckOptions, GradientCheckable, Matrix, NnError};
use isrl::prnsfm::{FrameObjective, ModelConfig, PrnsfmModel};
use isrl::selpref::{selectional_preference, selectional_preference_exhaustive, SelPrefConfig};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use super::{create, finish, write_manifest};
use crate::config::{self, PipelineConfig};
use crate::manifest::Manifest;
use crate::{Failure, Global, VerifyArgs};

/// Output vocabulary cap for the oracle models; the exhaustive sum is
/// exponential in it.
const ORACLE_MAX_OUTPUTS: usize = 12;
const ORACLE_TOLERANCE: f64 = 1e-10;

/// Scales the analytic gradient of the last tensor so a working check has
/// something to catch.
#[derive(Clone)]
struct Faulty(FrameObjective);

impl GradientCheckable for Faulty {
    fn tensor_names(&self) -> Vec<String> {
        self.0.tensor_names()
    }

    fn tensors_mut(&mut self) -> Vec<&mut Matrix> {
        self.0.tensors_mut()
    }

    fn loss(&self) -> Result<f64, NnError> {
        self.0.loss()
    }

    fn analytic_gradient(&self) -> Result<Vec<Matrix>, NnError> {
        let mut grads = self.0.analytic_gradient()?;
        if let Some(last) = grads.last_mut() {
            last.as_mut_slice().iter_mut().for_each(|g| *g *= 1.01);
        }
        Ok(grads)
    }

    fn extended_central_difference(&self, tensor: usize, index: usize, epsilon: f64) -> Option<Result<f64, NnError>> {
        self.0.extended_central_difference(tensor, index, epsilon)
    }
}

#[derive(Serialize)]
struct GradientCase {
    mode: String,
    seed: u64,
    parameters: usize,
    coordinates_checked: usize,
    max_relative_error: f64,
    worst: Option<(String, usize)>,
    extended_precision: bool,
}

#[derive(Serialize)]
struct OracleCase {
    seed: u64,
    outputs: usize,
    depth: usize,
    pruned: f64,
    exhaustive: f64,
}

fn random_frames(rng: &mut ChaCha8Rng, preds: usize, words: usize, n: usize) -> Vec<FrameSequence> {
    const LABELS: [&str; 3] = ["A0", "A1", "A2"];
    (0..n)
        .map(|i| {
            let predicate = format!("p{}", rng.gen_range(0..preds));
            let args = (0..rng.gen_range(1..=3))
                .map(|_| {
                    let word = format!("w{}", rng.gen_range(0..words));
                    ArgumentUnit::new(word, LABELS[rng.gen_range(0..LABELS.len())])
                })
                .collect();
            FrameSequence::new(format!("v{i}"), predicate, args).expect("generated frames are well formed")
        })
        .collect()
}

fn gradient_case(seed: u64, mode: InputMode, args: &VerifyArgs, init_range: f64) -> anyhow::Result<GradientCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = random_frames(&mut rng, 3, 8, 12);
    let vocab = build_vocabularies(&frames, 1, WordForm::Surface);
    let dim = args.dim.max(1);
    let cfg = match mode {
        InputMode::Joint => ModelConfig::joint(dim),
        InputMode::Separate => ModelConfig::separate(dim, (dim / 2).max(1)),
    };
    let frame = encode_frame(&frames[rng.gen_range(0..frames.len())], &vocab, mode);
    let model = PrnsfmModel::new(cfg.with_seed(seed).with_init_range(init_range), vocab, None)?;
    let parameters = model.tensors().iter().map(|t| t.len()).sum();
    let options = GradCheckOptions {
        seed,
        extended_precision: !args.plain_f64,
        ..GradCheckOptions::default()
    };
    let objective = FrameObjective { model, frame };
    let report = if args.inject_gradient_fault {
        grad_check(&Faulty(objective), args.epsilon, options)?
    } else {
        grad_check(&objective, args.epsilon, options)?
    };
    Ok(GradientCase {
        mode: mode.to_string(),
        seed,
        parameters,
        coordinates_checked: report.coordinates_checked,
        max_relative_error: report.max_relative_error,
        worst: report.worst,
        extended_precision: report.extended_precision,
    })
}

fn oracle_case(seed: u64) -> anyhow::Result<OracleCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mode = if seed.is_multiple_of(2) {
        InputMode::Joint
    } else {
        InputMode::Separate
    };
    let vocab = loop {
        let n = rng.gen_range(2..6);
        let frames = random_frames(&mut rng, 2, 4, n);
        let vocab = build_vocabularies(&frames, 1, WordForm::Surface);
        if vocab.num_units() <= ORACLE_MAX_OUTPUTS && vocab.predicate_unit("p0").is_some() {
            break vocab;
        }
    };
    let cfg = match mode {
        InputMode::Joint => ModelConfig::joint(rng.gen_range(4..=8)),
        InputMode::Separate => ModelConfig::separate(rng.gen_range(3..=6), rng.gen_range(2..=4)),
    };
    let model = PrnsfmModel::new(cfg.with_seed(seed).with_init_range(0.5), vocab, None)?;
    let outputs = model.num_outputs();
    let target = model.vocab().unit(rng.gen_range(0..outputs));
    let depth = 1 + (seed % 4) as usize;
    let full = SelPrefConfig::new(outputs - 1, depth);
    Ok(OracleCase {
        seed,
        outputs,
        depth,
        pruned: selectional_preference(&model, "p0", &target, &full)?,
        exhaustive: selectional_preference_exhaustive(&model, "p0", &target, depth)?,
    })
}

pub fn run(args: VerifyArgs, mut config: PipelineConfig, global: &Global) -> anyhow::Result<()> {
    config::set(&mut config.seeds.verify, args.seed);
    let base = config.seeds.verify;

    let mut gradients = Vec::new();
    for i in 0..args.models as u64 {
        for mode in [InputMode::Joint, InputMode::Separate] {
            gradients.push(gradient_case(base + i, mode, &args, config.model.init_range)?);
        }
    }
    let worst_gradient = gradients.iter().map(|c| c.max_relative_error).fold(0.0f64, f64::max);
    let gradient_pass = worst_gradient < args.tolerance;

    let oracle = (0..args.oracle_models as u64)
        .map(|i| oracle_case(base + i))
        .collect::<anyhow::Result<Vec<_>>>()?;
    let worst_oracle = oracle
        .iter()
        .map(|c| (c.pruned - c.exhaustive).abs())
        .fold(0.0f64, f64::max);
    let oracle_pass = worst_oracle < ORACLE_TOLERANCE;

    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let differences = if args.plain_f64 { "f64" } else { "double-double" };
    println!(
        "{} gradient check: {} models, max relative error {worst_gradient:.3e} (tolerance {:.0e}, {differences} differences)",
        verdict(gradient_pass),
        gradients.len(),
        args.tolerance
    );
    println!(
        "{} marginalization oracle: {} models, max |full-width - exhaustive| {worst_oracle:.3e} (tolerance {ORACLE_TOLERANCE:.0e})",
        verdict(oracle_pass),
        oracle.len()
    );

    let report = json!({
        "epsilon": args.epsilon,
        "tolerance": args.tolerance,
        "plain_f64": args.plain_f64,
        "gradient_fault_injected": args.inject_gradient_fault,
        "gradient_pass": gradient_pass,
        "max_relative_error": worst_gradient,
        "gradient_cases": gradients,
        "oracle_pass": oracle_pass,
        "oracle_tolerance": ORACLE_TOLERANCE,
        "max_oracle_difference": worst_oracle,
        "oracle_cases": oracle,
    });
    let mut w = create(&args.out)?;
    serde_json::to_writer_pretty(&mut w, &report)?;
    finish(w)?;

    let mut manifest = Manifest::new("verify", &config);
    manifest.output("report", &args.out)?;
    manifest.summary = json!({
        "gradient_pass": gradient_pass,
        "max_relative_error": worst_gradient,
        "oracle_pass": oracle_pass,
        "max_oracle_difference": worst_oracle,
    });
    write_manifest(&manifest, global, &args.out)?;

    if gradient_pass && oracle_pass {
        Ok(())
    } else {
        Err(Failure::Verification(format!(
            "gradient max relative error {worst_gradient:.3e}, oracle max difference {worst_oracle:.3e}"
        ))
        .into())
    }
}
