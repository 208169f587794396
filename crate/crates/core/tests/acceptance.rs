//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use hypesent::forecasting::{
    classification_report, lda_fit, lda_predict, logistic_fit, logistic_predict, ols_fit, random_state_sweep,
    LogisticOptions, ModelKind, SweepConfig,
};
use hypesent::hype_measure::{
    build_rn_weights, change_measure, conditional_expectation_adjusted, expectation, expectation_weighted,
    DiscreteMeasure, HypeState, RNWeights,
};
use hypesent::market_data::{parse_prices_csv, write_prices_csv};
use hypesent::news_ingest::{
    appendix_a_fixture, bias_vector, parse_news_csv, parse_weight_table_csv, write_news_csv, write_weight_table_csv,
};
use hypesent::pipeline::{forecast, prepare, MeasureMode, PipelineConfig, PipelineInputs};
use hypesent::sentiment_engine::{sent_all_series, write_sentiment_csv, SentimentParams};
use hypesent::synthetic::{generate, GeneratorSpec, HypeInjection};
use hypesent::Dataset;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let took = start.elapsed();
    check(took < limit, format!("took {took:?}, limit {limit:?}"))?;
    Ok(took)
}

fn days(n: usize) -> Vec<NaiveDate> {
    let d0 = NaiveDate::from_ymd_opt(2024, 7, 1).unwrap();
    (0..n).map(|i| d0 + chrono::Days::new(i as u64)).collect()
}

fn reference_scores() -> Outcome {
    let start = Instant::now();
    let sent = [0.043192, 0.186383, 0.040962, -0.036497, 0.078847];
    let daily: Vec<(NaiveDate, f64)> = days(5).into_iter().zip(sent).collect();
    let cases = [
        (0.5, [0.043192, 0.207979, 0.144951, -0.036497, 0.078847]),
        (1.0, [0.043192, 0.229574, 0.270536, -0.036497, 0.078847]),
    ];
    let mut worst: f64 = 0.0;
    for (w3, want) in cases {
        let params = SentimentParams::with_weights(1.0, 0.0, 0.0, w3);
        let got = sent_all_series(&daily, &params)
            .map_err(|e| e.to_string())?
            .sent_all_values();
        for (g, w) in got.iter().zip(want) {
            worst = worst.max((g - w).abs());
        }
    }
    check(worst <= 1e-5, format!("max deviation {worst:e} > 1e-5"))?;
    let took = within_time(start, Duration::from_secs(1))?;
    Ok(format!("both reference parameter sets within {worst:.1e} in {took:?}"))
}

fn random_measure(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure<f64> {
    let states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
    let masses: Vec<f64> = (0..n)
        .map(|_| {
            if rng.random::<f64>() < 0.05 {
                1e-9
            } else {
                rng.random::<f64>()
            }
        })
        .collect();
    DiscreteMeasure::from_masses(states, masses).unwrap()
}

fn measure_normalization() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut ok, mut declared, mut silent) = (0, 0, 0);
    for _ in 0..10_000 {
        let n = rng.random_range(2..=8);
        let p = random_measure(&mut rng, n);
        let level = p.states()[rng.random_range(0..n)].clone();
        let hype: BTreeMap<String, HypeState> = p
            .states()
            .iter()
            .map(|s| {
                let h = match rng.random_range(0..3) {
                    0 => HypeState::Overhyped,
                    1 => HypeState::Underhyped,
                    _ => HypeState::Neutral,
                };
                (s.clone(), h)
            })
            .collect();
        let kappa = rng.random_range(0.001..0.999);
        let result = build_rn_weights(&p, &hype, &level, kappa).and_then(|z| change_measure(&p, &z).map(|pa| (z, pa)));
        match result {
            Err(_) => declared += 1,
            Ok((z, pa)) => {
                let mean_z: f64 = p.probs().iter().zip(&z.z).map(|(a, b)| a * b).sum();
                let mass: f64 = pa.probs().iter().sum();
                let positive = z.z.iter().all(|v| *v > 0.0) && pa.probs().iter().all(|v| *v >= 0.0);
                if (mean_z - 1.0).abs() <= 1e-12 && (mass - 1.0).abs() <= 1e-9 && positive {
                    ok += 1;
                } else {
                    silent += 1;
                }
            }
        }
    }
    check(silent == 0, format!("{silent} silent violations"))?;
    let took = within_time(start, Duration::from_secs(5))?;
    Ok(format!(
        "{ok} normalized, {declared} declared errors, 0 silent, {took:?}"
    ))
}

fn random_density(rng: &mut ChaCha8Rng, p: &DiscreteMeasure<f64>) -> RNWeights<f64> {
    let raw: Vec<f64> = (0..p.len()).map(|_| rng.random_range(0.05..3.0)).collect();
    let mean: f64 = p.probs().iter().zip(&raw).map(|(a, b)| a * b).sum();
    RNWeights {
        states: p.states().to_vec(),
        z: raw.into_iter().map(|v| v / mean).collect(),
    }
}

fn change_of_measure_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=10);
        let p = random_measure(&mut rng, n);
        let z = random_density(&mut rng, &p);
        let x: BTreeMap<String, f64> = p
            .states()
            .iter()
            .map(|s| (s.clone(), rng.random_range(-5.0..5.0)))
            .collect();
        let pa = change_measure(&p, &z).map_err(|e| e.to_string())?;
        let lhs = expectation(&pa, &x).map_err(|e| e.to_string())?;
        let rhs = expectation_weighted(&p, &x, &z).map_err(|e| e.to_string())?;
        worst = worst.max((lhs - rhs).abs());
    }
    check(worst <= 1e-12, format!("one-period identity off by {worst:e}"))?;

    // Two-epoch trees: root -> nodes {a, b} at s -> leaves {aa, ab, ba, bb} at t.
    let mut worst_tree: f64 = 0.0;
    for _ in 0..1000 {
        let p_a: f64 = rng.random_range(0.05..0.95);
        let cond = [rng.random_range(0.05..0.95), rng.random_range(0.05..0.95)];
        let leaves = ["aa", "ab", "ba", "bb"];
        let p_leaf = [
            p_a * cond[0],
            p_a * (1.0 - cond[0]),
            (1.0 - p_a) * cond[1],
            (1.0 - p_a) * (1.0 - cond[1]),
        ];
        let raw: Vec<f64> = (0..4).map(|_| rng.random_range(0.05..3.0)).collect();
        let norm: f64 = p_leaf.iter().zip(&raw).map(|(a, b)| a * b).sum();
        let z_leaf: Vec<f64> = raw.iter().map(|v| v / norm).collect();
        let x_leaf: Vec<f64> = (0..4).map(|_| rng.random_range(-5.0..5.0)).collect();
        let z_t = RNWeights {
            states: leaves.iter().map(|s| s.to_string()).collect(),
            z: z_leaf.clone(),
        };
        let x_t: BTreeMap<String, f64> = leaves
            .iter()
            .map(|s| s.to_string())
            .zip(x_leaf.iter().copied())
            .collect();
        for (lo, c) in [(0usize, cond[0]), (2usize, cond[1])] {
            let conditional = DiscreteMeasure::new(vec![leaves[lo].into(), leaves[lo + 1].into()], vec![c, 1.0 - c])
                .map_err(|e| e.to_string())?;
            let z_s = c * z_leaf[lo] + (1.0 - c) * z_leaf[lo + 1];
            let got = conditional_expectation_adjusted(&x_t, &z_t, z_s, &conditional).map_err(|e| e.to_string())?;
            // Enumerate the two paths through this node under P^a directly.
            let pa_paths = [p_leaf[lo] * z_leaf[lo], p_leaf[lo + 1] * z_leaf[lo + 1]];
            let want = (pa_paths[0] * x_leaf[lo] + pa_paths[1] * x_leaf[lo + 1]) / (pa_paths[0] + pa_paths[1]);
            worst_tree = worst_tree.max((got - want).abs());
        }
    }
    check(worst_tree <= 1e-12, format!("two-epoch identity off by {worst_tree:e}"))?;
    Ok(format!(
        "one-period max error {worst:.1e}, 4-leaf trees max error {worst_tree:.1e}"
    ))
}

fn fixture_integrity() -> Outcome {
    let t = appendix_a_fixture::<f64>();
    let cap = t.capital_weight_sum();
    let news = t.news_weight_sum();
    check(t.rows.len() == 30, format!("{} rows", t.rows.len()))?;
    check((cap - 0.9999).abs() <= 0.005, format!("capital sum {cap}"))?;
    check((news - 0.9978).abs() <= 0.005, format!("news sum {news}"))?;
    let bias = bias_vector(&t.news_weights(), &t.capital_weights()).map_err(|e| e.to_string())?;
    let nvda = bias.entries["NVDA.OQ"];
    check((nvda - 0.1586).abs() <= 1e-4, format!("NVDA bias {nvda}"))?;
    Ok(format!(
        "capital sum {cap:.4}, news sum {news:.4}, NVDA bias {nvda:+.4}"
    ))
}

/// Explicit history expansion: find the reset days from the carry coefficients,
/// then sum every surviving day's contribution with its product of carries.
fn expanded_sent_all(sent: &[f64], p: &SentimentParams<f64>) -> Vec<f64> {
    let n = sent.len();
    let coef: Vec<f64> = (0..n)
        .map(|d| {
            if d == 0 {
                return 0.0;
            }
            let (prev, cur) = (sent[d - 1], sent[d]);
            if prev * cur < 0.0 {
                if prev > 0.0 {
                    -p.w_past1
                } else {
                    p.w_past2
                }
            } else {
                p.w_past3
            }
        })
        .collect();
    let mut reset = vec![0usize; n];
    let mut last = 0usize;
    for (d, slot) in reset.iter_mut().enumerate().skip(1) {
        let product: f64 = (last + 1..=d).map(|j| coef[j].abs()).product();
        if product < p.memory_cutoff {
            last = d;
        }
        *slot = last;
    }
    (0..n)
        .map(|d| {
            (reset[d]..=d)
                .map(|k| {
                    let own = if k == 0 { 1.0 } else { p.w_today };
                    let carry: f64 = (k + 1..=d).map(|j| coef[j]).product();
                    carry * own * sent[k]
                })
                .sum()
        })
        .collect()
}

fn sent_all_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let mut worst: f64 = 0.0;
    let mut resets = 0usize;
    for _ in 0..500 {
        let len = rng.random_range(1..=50);
        let sent: Vec<f64> = (0..len)
            .map(|_| {
                if rng.random::<f64>() < 0.1 {
                    0.0
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
            .collect();
        let mut p = SentimentParams::with_weights(
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
            rng.random::<f64>(),
        );
        p.memory_cutoff = if rng.random::<bool>() {
            0.005
        } else {
            rng.random_range(0.001..0.5)
        };
        let daily: Vec<(NaiveDate, f64)> = days(len).into_iter().zip(sent.iter().copied()).collect();
        let got = sent_all_series(&daily, &p)
            .map_err(|e| e.to_string())?
            .sent_all_values();
        let want = expanded_sent_all(&sent, &p);
        for (g, w) in got.iter().zip(&want) {
            worst = worst.max((g - w).abs());
        }
        let oracle_without_cutoff = expanded_sent_all(
            &sent,
            &SentimentParams {
                memory_cutoff: 1e-300,
                ..p.clone()
            },
        );
        if oracle_without_cutoff != want {
            resets += 1;
        }
    }
    check(worst <= 1e-12, format!("max deviation {worst:e}"))?;
    check(resets > 0, "no series exercised a memory-cutoff reset")?;
    Ok(format!(
        "500 series, {resets} with cutoff resets, max deviation {worst:.1e}"
    ))
}

fn separable(n: usize, rng: &mut ChaCha8Rng) -> Dataset<f64> {
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let label = (i % 2) as u8;
        let offset: f64 = 0.5 + rng.sample::<f64, _>(StandardNormal).abs();
        x.push(if label == 1 { offset } else { -offset });
        y.push(label);
    }
    Dataset::from_column("x", &x, &y).unwrap()
}

fn classifier_oracles() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let train = separable(400, &mut rng);
    let test = separable(400, &mut rng);
    let lda = lda_fit(&train).map_err(|e| e.to_string())?;
    let lda_acc: f64 = hypesent::forecasting::accuracy(&test.targets, &lda_predict(&lda, &test.features));
    let opts = LogisticOptions::default();
    let logit = logistic_fit(&train, &opts).map_err(|e| e.to_string())?;
    let logit_acc: f64 = hypesent::forecasting::accuracy(&test.targets, &logistic_predict(&logit, &test.features));
    check(lda_acc >= 0.95, format!("LDA accuracy {lda_acc}"))?;
    check(logit_acc >= 0.95, format!("logistic accuracy {logit_acc}"))?;

    let n = 5000;
    let x: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let y: Vec<u8> = x
        .iter()
        .map(|v| u8::from(rng.random::<f64>() < 1.0 / (1.0 + (-(2.0 * v - 1.0)).exp())))
        .collect();
    let planted = logistic_fit(&Dataset::from_column("x", &x, &y).unwrap(), &opts).map_err(|e| e.to_string())?;
    let beta = planted.coefficients()[1];
    check((beta - 2.0).abs() <= 0.15, format!("recovered beta {beta}"))?;

    let xs: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64 * 0.1 - 2.0]).collect();
    let ys: Vec<f64> = xs.iter().map(|r| 2.0 * r[0] + 1.0).collect();
    let r2 = ols_fit(&xs, &ys).map_err(|e| e.to_string())?.r_squared;
    check((r2 - 1.0).abs() <= 1e-9, format!("OLS R^2 {r2}"))?;
    let took = within_time(start, Duration::from_secs(10))?;
    Ok(format!(
        "LDA {lda_acc:.3}, logistic {logit_acc:.3}, beta {beta:.3}, OLS R^2 - 1 = {:.1e}, {took:?}",
        r2 - 1.0
    ))
}

fn hype_spec(seed: u64) -> GeneratorSpec<f64> {
    GeneratorSpec {
        seed,
        days: 250,
        signal_strength: 0.8,
        hype: Some(HypeInjection {
            ticker: 5,
            start_day: 100,
            end_day: 160,
            multiplier: 5.0,
            tone: 1.5,
        }),
        ..GeneratorSpec::default()
    }
}

fn inputs_from(spec: &GeneratorSpec<f64>) -> Result<PipelineInputs<f64>, String> {
    let d = generate(spec).map_err(|e| e.to_string())?;
    Ok(PipelineInputs {
        corpus: d.corpus,
        prices: d.prices,
        weights: d.weights,
    })
}

fn hype_benefit() -> Outcome {
    let start = Instant::now();
    let seeds = 24u64;
    let mut acc = BTreeMap::<MeasureMode, Vec<f64>>::new();
    for seed in 0..seeds {
        let spec = hype_spec(seed);
        let inputs = inputs_from(&spec)?;
        for mode in [MeasureMode::Off, MeasureMode::SectorReweight] {
            let config = PipelineConfig {
                param_sets: vec![spec.params.clone()],
                measure: mode,
                sweep: SweepConfig {
                    n_states: 20,
                    model: ModelKind::Logistic,
                    ..SweepConfig::default()
                },
                ..PipelineConfig::default()
            };
            let prepared = prepare(&inputs, &config).map_err(|e| e.to_string())?;
            let out = random_state_sweep(&prepared.dataset, &["adjusted_p0".to_string()], &config.sweep)
                .map_err(|e| e.to_string())?;
            acc.entry(mode).or_default().push(out[0].test_accuracy);
        }
    }
    let mean = |m: MeasureMode| acc[&m].iter().sum::<f64>() / acc[&m].len() as f64;
    let (off, rew) = (mean(MeasureMode::Off), mean(MeasureMode::SectorReweight));
    check(rew >= off, format!("sector_reweight mean {rew:.4} < off mean {off:.4}"))?;
    check(
        off >= 0.65 && rew >= 0.65,
        format!("means off {off:.4}, sector_reweight {rew:.4} below 0.65"),
    )?;
    let took = within_time(start, Duration::from_secs(120))?;
    Ok(format!(
        "{seeds} seeds: sector_reweight {rew:.4} >= off {off:.4}, {took:?}"
    ))
}

fn report_fidelity() -> Outcome {
    let r = classification_report::<f64>(&[0, 0, 1, 1], &[0, 1, 1, 1]).map_err(|e| e.to_string())?;
    check(
        (r.classes[1].precision - 0.6667).abs() <= 1e-4,
        format!("precision {}", r.classes[1].precision),
    )?;
    check(r.classes[1].recall == 1.0, format!("recall {}", r.classes[1].recall))?;
    check(r.accuracy == 0.75, format!("accuracy {}", r.accuracy))?;
    check(
        r.weighted_avg.recall == r.accuracy,
        "weighted recall differs from accuracy",
    )?;
    let text = r.to_text();
    let header: Vec<&str> = text.lines().next().unwrap_or("").split_whitespace().collect();
    check(
        header == ["Class", "Precision", "Recall", "F1-Score", "Support"],
        format!("header {header:?}"),
    )?;
    let rows: Vec<&str> = text.lines().skip(1).collect();
    for (row, want) in rows.iter().zip(["0", "1", "Accuracy", "Macro Avg", "Weighted Avg"]) {
        check(row.starts_with(want), format!("row `{row}` should start with {want}"))?;
    }
    check(rows.len() == 5, format!("{} body rows", rows.len()))?;
    Ok("class-1 precision 0.6667, recall 1.0, accuracy 0.75, all report rows present".into())
}

/// Generate, round-trip through the CSV formats, forecast, and serialize everything.
fn pipeline_bytes() -> Result<Vec<u8>, String> {
    let spec = hype_spec(7);
    let d = generate(&spec).map_err(|e| e.to_string())?;
    let mut news = Vec::new();
    let mut prices = Vec::new();
    let mut weights = Vec::new();
    write_news_csv(&d.corpus, &mut news).map_err(|e| e.to_string())?;
    write_prices_csv(&d.prices, &mut prices).map_err(|e| e.to_string())?;
    write_weight_table_csv(&d.weights, &mut weights).map_err(|e| e.to_string())?;
    let inputs = PipelineInputs {
        corpus: parse_news_csv(news.as_slice()).map_err(|e| e.to_string())?,
        prices: parse_prices_csv(prices.as_slice()).map_err(|e| e.to_string())?,
        weights: parse_weight_table_csv(weights.as_slice()).map_err(|e| e.to_string())?,
    };
    let config = PipelineConfig {
        param_sets: vec![spec.params.clone(), SentimentParams::with_weights(1.0, 0.0, 0.0, 0.5)],
        grid: SentimentParams::grid(
            &SentimentParams::default(),
            &[1.0],
            &[0.0, 0.3],
            &[0.0, 0.3],
            &[0.0, 0.5, 1.0],
        ),
        measure: MeasureMode::SectorReweight,
        sweep: SweepConfig {
            n_states: 40,
            model: ModelKind::Logistic,
            ..SweepConfig::default()
        },
        ..PipelineConfig::default()
    };
    let run = forecast(&inputs, &config).map_err(|e| e.to_string())?;
    let mut out = [news, prices, weights].concat();
    write_sentiment_csv(&run.prepared.series, &mut out).map_err(|e| e.to_string())?;
    for o in &run.outcomes {
        out.extend(format!("{} {} {}\n", o.indicator, o.best.seed, o.best.validation_score).bytes());
        out.extend(o.report.to_text().bytes());
        o.report.write_csv(&mut out).map_err(|e| e.to_string())?;
    }
    Ok(out)
}

fn determinism() -> Outcome {
    let in_pool = |threads: usize| -> Result<Vec<u8>, String> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| e.to_string())?
            .install(pipeline_bytes)
    };
    let reference = pipeline_bytes()?;
    let again = pipeline_bytes()?;
    let single = in_pool(1)?;
    let many = in_pool(8)?;
    check(reference == again, "repeated runs differ")?;
    check(reference == single, "single-thread run differs")?;
    check(reference == many, "eight-thread run differs")?;
    Ok(format!(
        "{} output bytes identical across repeats and 1/8/default threads",
        reference.len()
    ))
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 9] = [
        ("reference compound scores", reference_scores),
        ("measure normalization", measure_normalization),
        ("change-of-measure identities", change_of_measure_identities),
        ("weight fixture integrity", fixture_integrity),
        ("compound score oracle", sent_all_oracle),
        ("classifier oracles", classifier_oracles),
        ("hype benefit end to end", hype_benefit),
        ("classification report fidelity", report_fidelity),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match std::panic::catch_unwind(run) {
            Ok(Ok(detail)) => println!("criterion {} PASS {name}: {detail}", i + 1),
            Ok(Err(why)) => {
                failed += 1;
                println!("criterion {} FAIL {name}: {why}", i + 1);
            }
            Err(_) => {
                failed += 1;
                println!("criterion {} FAIL {name}: panicked", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
