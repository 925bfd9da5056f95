//! End-to-end behaviour of training and analysis on small inputs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vecprobe::analysis::{analyze, fit_linear};
use vecprobe::cbow::{train, TrainingConfig};
use vecprobe::corpus::{build_vocabulary, SentenceCorpus};
use vecprobe::pseudoword::{build_noise_experiment, NoiseExperiment};
use vecprobe::synth::{generate, SynthConfig};

#[test]
fn loss_falls_on_alternating_corpus() {
    let line = vec!["a b"; 50].join(" ");
    let corpus = SentenceCorpus::from_text(&format!("{line}\n").repeat(100));
    assert_eq!(corpus.num_tokens(), 10_000);
    let vocab = build_vocabulary(&corpus, 1);
    let cfg = TrainingConfig {
        dimension: 10,
        min_count: 1,
        epochs: 3,
        report_interval: 100,
        table_size: 1000,
        ..TrainingConfig::default()
    };
    let (model, stats) = train(&corpus, &vocab, &cfg).unwrap();
    assert!(model.is_finite());
    let trace: Vec<f64> = stats.loss_trace.iter().map(|p| p.mean_loss).collect();
    let tenth = trace.len() / 10;
    assert!(tenth >= 5, "{} trace points", trace.len());
    let mean = |xs: &[f64]| xs.iter().sum::<f64>() / xs.len() as f64;
    let (first, last) = (mean(&trace[..tenth]), mean(&trace[trace.len() - tenth..]));
    assert!(last < first, "first {first} last {last}");
}

#[test]
fn regression_recovers_slope() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let xs: Vec<f64> = (0..100).map(|k| k as f64 / 99.0).collect();
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| {
            // Box-Muller, sigma 0.01.
            let (u, v): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random());
            2.0 * x + 0.01 * (-2.0 * u.ln()).sqrt() * (std::f64::consts::TAU * v).cos()
        })
        .collect();
    let fit = fit_linear(&xs, &ys).unwrap();
    assert!((1.99..=2.01).contains(&fit.slope), "slope {}", fit.slope);
    assert!(fit.r_squared > 0.99);
}

#[test]
fn noise_report_has_one_row_per_index() {
    let cfg = SynthConfig {
        target_bytes: 400_000,
        ..SynthConfig::default()
    };
    let mut raw = Vec::new();
    generate(&cfg, &mut raw).unwrap();
    let mut corpus = SentenceCorpus::from_raw_reader(&raw[..]).unwrap();
    let words = vec![cfg.topic_word(0, 0), cfg.topic_word(1, 0)];
    let exp = NoiseExperiment {
        words: words.clone(),
        min_count: 5,
        floor: 100,
        ..NoiseExperiment::default()
    };
    let manifests = build_noise_experiment(&mut corpus, &exp, 3).unwrap();
    let vocab = build_vocabulary(&corpus, 5);
    let tc = TrainingConfig {
        dimension: 16,
        epochs: 1,
        min_count: 5,
        table_size: 100_000,
        ..TrainingConfig::default()
    };
    let (model, _) = train(&corpus, &vocab, &tc).unwrap();
    let report = analyze(&model, &manifests).unwrap();
    for w in &words {
        let rows: Vec<_> = report.series.family(w).collect();
        assert_eq!(rows.len(), 7, "{w}");
        let counts: Vec<u64> = rows.iter().map(|r| r.frequency).collect();
        assert!(counts.iter().all(|&c| c == counts[0] && corpus.count(&rows[0].pseudoword) == c));
        assert_eq!(rows[0].noise_proportion, Some(0.0));
        assert_eq!(rows[6].noise_proportion, Some(1.0));
    }
    assert_eq!(report.matrices.len(), 2);
    assert_eq!(report.fits.iter().filter(|f| f.points == 7).count(), 2 * 2);
}
