use syntaxprobe::pipeline;
use syntaxprobe::refmodel::{self, EncoderConfig, EncoderParams};
use syntaxprobe::tuples::TupleKind;
use syntaxprobe::{synth, Language};

#[test]
fn reference_encoder_classifies_held_out_pairs() {
    let corpus = synth::generate_synthetic_corpus(7, 100, Language::Java).unwrap();
    let trees = pipeline::parse_corpus(&corpus).unwrap();
    let (vocab, _) =
        pipeline::build_vocabularies(TupleKind::WholeTree, &corpus, &trees, 1).unwrap();
    let tuples = pipeline::build_tuples(TupleKind::WholeTree, &corpus, &trees, &vocab).unwrap();
    // every fourth pair is held out; clones and non-clones are interleaved in both halves
    let (train, test): (Vec<_>, Vec<_>) = corpus
        .pairs()
        .iter()
        .cloned()
        .enumerate()
        .partition(|(i, _)| i % 4 != 0);
    let train: Vec<_> = train.into_iter().map(|(_, p)| p).collect();
    let test: Vec<_> = test.into_iter().map(|(_, p)| p).collect();
    assert!(test.iter().any(|p| p.is_clone) && test.iter().any(|p| !p.is_clone));

    let config = EncoderConfig::default();
    let init: EncoderParams<f64> = refmodel::init_encoder(&config, &vocab);
    let before = refmodel::pair_accuracy(&init, &tuples, &test).unwrap();
    let trained = refmodel::train_encoder(&init, &tuples, &train, &config).unwrap();
    let after = refmodel::pair_accuracy(&trained.params, &tuples, &test).unwrap();
    assert!(
        after >= 0.8,
        "held-out accuracy {after} (untrained {before})"
    );
    assert!(trained.epoch_losses.last() < trained.epoch_losses.first());
}
