//! Corpus-level checks on the synthetic LogHub-style fixtures.

use logptr::ingest::{
    align_template, annotate_all, apply_target, read_structured_csv, AnnotatedRecord, LabelSet,
};
use logptr::model::{ModelConfig, ModelInput, PointerModel};
use logptr::numcore::{Adam, Graph};
use logptr::tokenizer::train_vocab;
use logptr_fixtures::{loghub_dataset, Annotation, SYSTEMS};
use rand::{RngExt, SeedableRng};
use rand_xoshiro::SplitMix64;

fn annotated(system: &str, annotation: Annotation, labels: &LabelSet) -> Vec<AnnotatedRecord> {
    let ds = loghub_dataset(system, 2000, 0).unwrap();
    let raw = read_structured_csv(ds.to_csv(annotation).as_bytes(), labels).unwrap();
    let (ok, failed) = annotate_all(&raw, labels);
    assert!(failed.is_empty(), "{system}: {:?}", failed.first());
    ok
}

#[test]
fn every_fixture_aligns_and_round_trips() {
    for system in SYSTEMS {
        for (annotation, labels) in [
            (Annotation::General, LabelSet::general()),
            (Annotation::Categories, LabelSet::variable_aware()),
        ] {
            for r in annotated(system, annotation, &labels) {
                let back = apply_target(&r.message_tokens, &r.target, &labels).unwrap();
                assert_eq!(back, r.template_tokens, "{system} line {}", r.line_id);
                let again = align_template(&r.message_tokens, &back, &labels).unwrap();
                assert_eq!(again, r.target);
            }
        }
    }
}

/// A fresh default-size model fits any single example within 200 steps.
#[test]
fn single_examples_are_fitted_within_200_steps() {
    let labels = LabelSet::general();
    let mut rng = SplitMix64::seed_from_u64(11);
    for k in 0..10 {
        let system = SYSTEMS[rng.random_range(0..SYSTEMS.len())];
        let records = annotated(system, Annotation::General, &labels);
        let r = &records[rng.random_range(0..records.len())];

        let vocab = train_vocab(&r.message_tokens, 200).unwrap();
        let config = ModelConfig::new(labels.len(), vocab.len());
        let mut model = PointerModel::<f32>::new(config, k).unwrap();
        let input = ModelInput::new(&r.message_tokens, &vocab);
        let adam = Adam::default();
        let mut dropout = SplitMix64::seed_from_u64(k);
        let mut fitted_at = None;
        for step in 1..=200 {
            let grads = {
                let mut g = Graph::new(model.params());
                let loss = model
                    .batch_loss(&mut g, &[&input], &[&r.target], Some(&mut dropout))
                    .unwrap();
                g.backward(loss).unwrap()
            };
            let params = model.params_mut();
            params.accumulate(&grads);
            params.clip_grad_norm(5.0);
            adam.step(params);
            if step % 10 == 0 && model.greedy_decode(&input).unwrap() == r.target {
                fitted_at = Some(step);
                break;
            }
        }
        println!("{system} line {}: fitted at {fitted_at:?}", r.line_id);
        assert!(
            fitted_at.is_some(),
            "{system} line {} not fitted",
            r.line_id
        );
    }
}
