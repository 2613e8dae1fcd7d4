//! Acceptance suite. Prints one PASS or FAIL line per criterion with its
//! runtime and exits nonzero if any criterion fails. Criterion ids given as
//! arguments (`cargo test --test acceptance -- C2 C7`) restrict the run.

#![allow(clippy::excessive_precision)]

use std::time::{Duration, Instant};

use qkd_core::bounds::{
    asymptotic_threshold, hoeffding_basis_count_bounds, max_key_rate, mc_basis_counts,
    mc_partition_tail, security_bound, MFactor, ProtocolParams, Thresholds, Variant,
};
use qkd_core::coding::{
    mc_decoding_failure_rate, mc_low_weight_coset_word, verify_decoder_equivalence, LinearCode,
    WeightMode,
};
use qkd_core::gf2::BitString;
use qkd_core::par::Exec;
use qkd_core::protocol::BasisPartition;
use qkd_core::quantum::{
    check_symmetrization, composable_campaign, info_disturbance_campaign, symmetrize, AttackSpec,
    CampaignConfig,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Tolerance of the symmetrization identities.
const SYMMETRY_TOL: f64 = 1e-10;

/// `1 − 2·H2(0.05)` evaluated with 50-digit arithmetic.
const KEY_RATE_AT_5_PERCENT: f64 = 0.42720608576808774;

type Outcome = Result<String, String>;

fn cli(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["qkd".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = qkd_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap_or_default(),
        String::from_utf8(err).unwrap_or_default(),
    )
}

/// Parses a one-row CSV into `(header, row)`.
fn single_row(csv: &str) -> Result<(Vec<String>, Vec<String>), String> {
    let mut lines = csv.lines();
    let header = lines
        .next()
        .ok_or("empty CSV")?
        .split(',')
        .map(String::from)
        .collect();
    let row = lines
        .next()
        .ok_or("CSV has no data row")?
        .split(',')
        .map(String::from)
        .collect();
    Ok((header, row))
}

fn column(header: &[String], row: &[String], name: &str) -> Result<String, String> {
    let i = header
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| format!("missing column {name}"))?;
    Ok(row[i].clone())
}

fn entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        0.0
    } else {
        -x * x.log2() - (1.0 - x) * (1.0 - x).log2()
    }
}

fn c1_threshold() -> Outcome {
    let t = asymptotic_threshold(Variant::Bb84, None).map_err(|e| e.to_string())?;
    if (0.1099..=0.1101).contains(&t) {
        Ok(format!("threshold {t:.12} in [0.1099, 0.1101]"))
    } else {
        Err(format!("threshold {t} outside [0.1099, 0.1101]"))
    }
}

fn c2_curve() -> Outcome {
    let (code, out, err) = cli(&["curve", "--steps", "101"]);
    if code != 0 {
        return Err(format!("curve exited {code}: {err}"));
    }
    let points: Vec<(f64, f64)> = out
        .lines()
        .skip(1)
        .map(|l| {
            let (a, b) = l.split_once(',').ok_or("malformed row")?;
            Ok((
                a.parse().map_err(|_| "bad float")?,
                b.parse().map_err(|_| "bad float")?,
            ))
        })
        .collect::<Result<_, &str>>()?;
    let worst = points
        .iter()
        .map(|&(a, b)| (entropy(a) + entropy(b) - 1.0).abs())
        .fold(0.0, f64::max);
    if worst > 1e-6 {
        return Err(format!("H2(p_az) + H2(p_ax) deviates from 1 by {worst:e}"));
    }
    let through_diagonal = points
        .iter()
        .any(|&(a, b)| (a - 0.110).abs() <= 0.001 && (b - 0.110).abs() <= 0.001);
    if !through_diagonal {
        return Err("no point within 0.001 of (0.110, 0.110)".into());
    }
    if !points.contains(&(0.0, 0.5)) {
        return Err("curve does not contain (0, 0.5)".into());
    }
    Ok(format!(
        "{} points, max |H2+H2-1| = {worst:.1e}, passes (0.110, 0.110) and (0, 0.5)",
        points.len()
    ))
}

fn c3_key_rate() -> Outcome {
    let rate = max_key_rate(Variant::Bb84, Thresholds::Single(0.05), 0.0, 0.0)
        .map_err(|e| e.to_string())?;
    let diff = (rate - KEY_RATE_AT_5_PERCENT).abs();
    if diff <= 1e-9 {
        Ok(format!("rate {rate:.15}, |diff| = {diff:.1e}"))
    } else {
        Err(format!(
            "rate {rate} differs from {KEY_RATE_AT_5_PERCENT} by {diff:e}"
        ))
    }
}

fn c4_coding_lemmas() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut codes = 0;
    for n in 1..=10 {
        for k in 1..=n.min(5) {
            for _ in 0..50 {
                let code = LinearCode::random(n, k, &mut rng).map_err(|e| e.to_string())?;
                if !verify_decoder_equivalence(&code, 64, &mut rng).map_err(|e| e.to_string())? {
                    return Err(format!("decoder equivalence fails for an [{n}, {k}] code"));
                }
                codes += 1;
            }
        }
    }
    for (n, t) in [(3, 1), (5, 2)] {
        let code = LinearCode::repetition(n).map_err(|e| e.to_string())?;
        for c in [BitString::zeros(n), BitString::ones(n)] {
            for idx in 0..(1u64 << n) {
                let e = BitString::from_index(idx, n);
                if e.weight() > t {
                    continue;
                }
                let w = c.xor(&e).map_err(|e| e.to_string())?;
                let decoded = qkd_core::coding::nearest_codeword_decode(&code, &w)
                    .map_err(|e| e.to_string())?;
                if decoded.word() != Some(&c) {
                    return Err(format!("repetition-{n} misdecodes {w}"));
                }
            }
        }
    }
    Ok(format!(
        "{codes} random codes equivalent; rep-3 and rep-5 correct all errors up to t"
    ))
}

fn c5_random_code_bounds() -> Outcome {
    let mut checked = 0;
    let mut min_gap = f64::INFINITY;
    for n in [8usize, 10, 12] {
        for k in 1..=5 {
            for t in 1..=2 {
                let seed = (n * 100 + k * 10 + t) as u64;
                let ell_zero = BitString::zeros(n);
                let ell_heavy = BitString::from_bits((0..n).map(|i| i <= t));
                let reports = [
                    mc_decoding_failure_rate(
                        n,
                        k,
                        t,
                        100_000,
                        seed,
                        Exec::default(),
                        WeightMode::Exact,
                    ),
                    mc_low_weight_coset_word(&ell_zero, k, t, 100_000, seed + 1, Exec::default()),
                    mc_low_weight_coset_word(&ell_heavy, k, t, 100_000, seed + 2, Exec::default()),
                ];
                for r in reports {
                    let r = r.map_err(|e| e.to_string())?;
                    if r.estimate.ci_high > r.bound {
                        return Err(format!(
                            "n={n} k={k} t={t}: upper CI edge {} above bound {}",
                            r.estimate.ci_high, r.bound
                        ));
                    }
                    min_gap = min_gap.min(r.bound - r.estimate.ci_high);
                    checked += 1;
                }
            }
        }
    }
    Ok(format!(
        "{checked} estimates of 1e5 trials, smallest bound minus upper CI edge {min_gap:.4}"
    ))
}

fn c6_hoeffding() -> Outcome {
    let mut worst_ratio: f64 = 0.0;
    let mut points = 0;
    for (n, n_prime) in [
        (20, 20),
        (20, 40),
        (40, 20),
        (50, 50),
        (60, 120),
        (100, 100),
    ] {
        for eps in [0.1, 0.2] {
            let tail = mc_partition_tail(
                n,
                n_prime,
                0.1,
                eps,
                4_000,
                (n * 1000 + n_prime) as u64 ^ eps.to_bits(),
                Exec::default(),
            )
            .map_err(|e| e.to_string())?;
            if !tail.within_bound() {
                return Err(format!(
                    "partition tail n={n} n'={n_prime} eps={eps} exceeds {}",
                    tail.bound
                ));
            }
            worst_ratio = worst_ratio.max(tail.max.estimate / tail.bound);
            points += 1;
        }
    }
    for p in [0.3, 0.5] {
        let (ones, zeros) = mc_basis_counts(200, p, 100_000, 6, Exec::default());
        let (b_ones, b_zeros) = hoeffding_basis_count_bounds(200, p);
        if !ones.consistent_with_upper_bound(b_ones) || !zeros.consistent_with_upper_bound(b_zeros)
        {
            return Err(format!(
                "basis counts at p={p}: ({}, {}) vs bounds ({b_ones}, {b_zeros})",
                ones.estimate, zeros.estimate
            ));
        }
    }
    Ok(format!("{points} partition points within bound (largest estimate/bound {worst_ratio:.3}); basis counts at N=200 within bound"))
}

fn c7_end_to_end() -> Outcome {
    // n(p_a + eps) must be an integer: 512 * (0.12 + 0.07140625) = 98.
    let eps = "0.07140625";
    let (code, out, err) = cli(&[
        "simulate",
        "--variant",
        "bb84",
        "--n",
        "512",
        "--r",
        "400",
        "--m",
        "112",
        "--pa",
        "0.12",
        "--eps-sec",
        eps,
        "--eps-rel",
        eps,
        "--flip",
        "0.05",
        "--runs",
        "1000",
        "--seed",
        "7",
    ]);
    let (header, row) = single_row(&out)?;
    let get = |name: &str| column(&header, &row, name);
    let bound = get("reliability_bound")?;
    let summary = format!(
        "failures {}/{} (CI [{}, {}]), aborts {}, ties {}, fallback decodes {}, bound {bound}",
        get("failures")?,
        get("runs")?,
        get("failure_ci_low")?,
        get("failure_ci_high")?,
        get("aborts")?,
        get("tie_fails")?,
        get("best_found")?
    );
    if code == 0 && get("within_bound")? == "true" {
        Ok(summary)
    } else {
        Err(format!("{summary}; exit {code}: {}", err.trim()))
    }
}

fn c8_quantum() -> Outcome {
    let rows = info_disturbance_campaign(&CampaignConfig::new(100, 3, 2, 0, 8))
        .map_err(|e| e.to_string())?;
    let held = rows.iter().filter(|r| r.holds).count();
    let sym_dev = rows
        .iter()
        .filter_map(|r| r.symmetry.as_ref())
        .map(|s| s.max_deviation())
        .fold(0.0, f64::max);
    let sym_cases = rows.iter().filter(|r| r.symmetry.is_some()).count();
    let max_lhs = rows.iter().map(|r| r.lhs).fold(0.0, f64::max);
    if held != 100 || rows.len() != 100 {
        return Err(format!(
            "info-disturbance held in {held}/{} cases",
            rows.len()
        ));
    }
    if sym_cases != 100 || sym_dev > SYMMETRY_TOL {
        return Err(format!(
            "symmetrization checked in {sym_cases} cases, max deviation {sym_dev:e}"
        ));
    }
    let params = ProtocolParams::bb84(1, 0, 1, 0.0, 0.0, 0.0).map_err(|e| e.to_string())?;
    let comp =
        composable_campaign(&params, 50, 4, 9, Exec::default()).map_err(|e| e.to_string())?;
    let comp_held = comp.iter().filter(|r| r.holds).count();
    if comp_held != 50 || comp.len() != 50 {
        return Err(format!(
            "composable bound held in {comp_held}/{} cases",
            comp.len()
        ));
    }
    // The identities must fail when the symmetrized attack belongs to a
    // different original attack.
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let original = AttackSpec::random(3, 8, &mut rng).map_err(|e| e.to_string())?;
    let other = symmetrize(&AttackSpec::random(3, 8, &mut rng).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let part = BasisPartition::new(
        BitString::random(3, &mut rng),
        "110".parse().map_err(|_| "bad bits")?,
    )
    .map_err(|e| e.to_string())?;
    let control = check_symmetrization(&original, &other, &part, 0)
        .map_err(|e| e.to_string())?
        .max_deviation();
    if control <= 1e-3 {
        return Err(format!(
            "negative control: mismatched symmetrization deviates only {control:e}"
        ));
    }
    Ok(format!(
        "info-disturbance 100/100 (max lhs {max_lhs:.3}), composable 50/50, symmetry max deviation {sym_dev:.1e}, mismatched control deviates {control:.2}"
    ))
}

struct Frozen {
    params: Result<ProtocolParams, qkd_core::Error>,
    rel: &'static [f64],
    sec: &'static [f64],
    total: f64,
}

fn frozen_points() -> Vec<Frozen> {
    vec![
        Frozen {
            params: ProtocolParams::bb84_info_z(1000, 500, 500, 330, 300, 0.02, 0.02, 0.03, 0.03),
            rel: &[0.81873075307798186, 7.4847308826784242e-14],
            sec: &[0.81873075307798186, 6.8073230819922394e-26],
            total: 543.7211815746538,
        },
        Frozen {
            params: ProtocolParams::bb84_info_z(2000, 1000, 1500, 800, 100, 0.03, 0.05, 0.05, 0.03),
            rel: &[0.6703200460356393, 2.077249462880593e-44],
            sec: &[0.15933686121653332, 1.7001521102293491e-49],
            total: 80.504363214732367,
        },
        Frozen {
            params: ProtocolParams::bb84_info_z(500, 250, 300, 200, 100, 0.04, 0.06, 0.04, 0.04),
            rel: &[0.83712843136076367, 2.1281430081612],
            sec: &[0.79851621875937704, 24258928781.447663],
            total: 31150559.160784983,
        },
        Frozen {
            params: ProtocolParams::bb84(1000, 330, 300, 0.02, 0.03, 0.03),
            rel: &[0.63762815162177329, 7.4847308826784242e-14],
            sec: &[0.63762815162177329, 6.8073230819922394e-26],
            total: 479.74735940724807,
        },
        Frozen {
            params: ProtocolParams::bb84(4000, 1500, 800, 0.03, 0.02, 0.04),
            rel: &[0.040762203978366215, 1.1775698547558273e-11],
            sec: &[0.44932896411722159, 1.2744018886305016e-167],
            total: 1072.552835861013,
        },
        Frozen {
            params: ProtocolParams::bb84(512, 256, 64, 0.125, 0.0625, 0.0625),
            rel: &[0.36787944117144232, 1.7445250787949734e+30],
            sec: &[0.36787944117144232, 3.2180807658698863e+49],
            total: 1.7452511988626482e+30,
        },
        Frozen {
            params: ProtocolParams::efficient(1000, 200, 300, 0.4, 330, 300, 0.02, 0.03, 0.03),
            rel: &[
                7.6676480737219996e-53,
                0.99501247919268231,
                5.5016110817404568e-118,
                0.98572418157367445,
                7.4847308826784242e-14,
            ],
            sec: &[
                7.6676480737219996e-53,
                0.99045999850146239,
                5.5016110817404568e-118,
                0.99252805481913843,
                6.8073230819922394e-26,
            ],
            total: 846.89238837082321,
        },
        Frozen {
            params: ProtocolParams::efficient(2000, 400, 600, 0.5, 600, 300, 0.04, 0.06, 0.03),
            rel: &[
                1.3790159402541388e-163,
                0.98265223566507316,
                1.3790159402541388e-163,
                0.98572418157367445,
                4.8977057473725344e+39,
            ],
            sec: &[
                1.3790159402541388e-163,
                0.87441412927081585,
                1.3790159402541388e-163,
                0.97044553354850818,
                1.7001521102293491e-49,
            ],
            total: 4.8977057473725344e+39,
        },
        Frozen {
            params: ProtocolParams::efficient(800, 100, 200, 0.3, 300, 100, 0.05, 0.075, 0.05),
            rel: &[
                3.1799709001977495e-22,
                0.99599569302496466,
                9.0706232135850325e-118,
                0.96367613534905345,
                4.3290689651823197e+22,
            ],
            sec: &[
                3.1799709001977495e-22,
                0.97117364070472312,
                9.0706232135850325e-118,
                0.97463284859699187,
                31000115932.148962,
            ],
            total: 4.3290689651823232e+22,
        },
        Frozen {
            params: ProtocolParams::modified_efficient(
                500, 500, 300, 300, 330, 300, 0.02, 0.03, 0.03,
            ),
            rel: &[
                0.88111907788017644,
                0.88111907788017644,
                7.4847308826784242e-14,
            ],
            sec: &[
                0.88111907788017644,
                0.88111907788017644,
                6.8073230819922394e-26,
            ],
            total: 798.25814905155846,
        },
        Frozen {
            params: ProtocolParams::modified_efficient(
                1200, 800, 400, 600, 700, 300, 0.04, 0.06, 0.03,
            ),
            rel: &[0.87371591168803443, 0.76759748145497237, 3863608589.3784497],
            sec: &[
                0.38289288597511202,
                0.52729242404304856,
                2.1551988430115252e-19,
            ],
            total: 3863609163.4415583,
        },
        Frozen {
            params: ProtocolParams::modified_efficient(
                300, 200, 150, 100, 150, 50, 0.06, 0.04, 0.04,
            ),
            rel: &[
                0.89882523147160883,
                0.93135840211135197,
                2.7313125655133774e+25,
            ],
            sec: &[
                0.94176453358424871,
                0.88909514859185744,
                1.9136920518224861e-20,
            ],
            total: 2.7313125655133774e+25,
        },
    ]
}

fn c9_bound_oracle() -> Outcome {
    let close = |a: f64, e: f64| (a - e).abs() <= 1e-12 * e.abs();
    let mut worst: f64 = 0.0;
    let points = frozen_points();
    for f in &points {
        let params = f.params.as_ref().map_err(|e| e.to_string())?;
        let b = security_bound(params, MFactor::Keep).map_err(|e| e.to_string())?;
        let terms: Vec<f64> = b
            .reliability_terms
            .iter()
            .chain(&b.secrecy_terms_under_radical)
            .map(|t| t.value())
            .collect();
        let expected: Vec<f64> = f.rel.iter().chain(f.sec).copied().collect();
        if terms.len() != expected.len() {
            return Err(format!(
                "{}: {} terms, expected {}",
                params.variant,
                terms.len(),
                expected.len()
            ));
        }
        for (a, e) in terms
            .into_iter()
            .chain([b.total])
            .zip(expected.into_iter().chain([f.total]))
        {
            if !close(a, e) {
                return Err(format!("{}: {a} vs {e}", params.variant));
            }
            worst = worst.max((a - e).abs() / e.abs());
        }
    }
    Ok(format!(
        "{} parameter points, 4 variants, max relative error {worst:.1e}",
        points.len()
    ))
}

fn c10_determinism() -> Outcome {
    let commands: [&[&str]; 5] = [
        &[
            "simulate", "--n", "24", "--pa", "0.1", "--r", "12", "--m", "4", "--flip", "0.05",
            "--runs", "300", "--seed", "11",
        ],
        &[
            "mc-code", "--n", "10", "--k", "4", "--t", "1", "--trials", "5000", "--seed", "3",
        ],
        &[
            "verify",
            "--suite",
            "composable",
            "--seed",
            "2",
            "--cases",
            "5",
        ],
        &[
            "bound",
            "--n",
            "1000",
            "--pa",
            "0.02",
            "--eps-sec",
            "0.03",
            "--eps-rel",
            "0.03",
            "--r-frac",
            "0.33",
            "--m-frac",
            "0.3",
        ],
        &["curve", "--steps", "11"],
    ];
    for args in commands {
        let first = cli(args);
        let second = cli(args);
        if first.0 != 0 {
            return Err(format!("{} exited {}: {}", args[0], first.0, first.2));
        }
        if first.1 != second.1 || first.1.is_empty() {
            return Err(format!("{} output differs between runs", args[0]));
        }
        let mut seq = args.to_vec();
        seq.push("--sequential");
        if cli(&seq).1 != first.1 {
            return Err(format!("{} output differs with --sequential", args[0]));
        }
    }
    Ok("simulate, mc-code, verify, bound and curve reproduce byte-identical CSV".into())
}

/// Criterion id, description, time limit and check.
type Criterion = (&'static str, &'static str, Duration, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            "C1",
            "asymptotic threshold",
            Duration::from_secs(1),
            c1_threshold,
        ),
        (
            "C2",
            "BB84-INFO-Z boundary curve",
            Duration::from_secs(1),
            c2_curve,
        ),
        (
            "C3",
            "key rate formula",
            Duration::from_secs(1),
            c3_key_rate,
        ),
        (
            "C4",
            "coding lemmas",
            Duration::from_secs(120),
            c4_coding_lemmas,
        ),
        (
            "C5",
            "random-code bounds (MC)",
            Duration::from_secs(300),
            c5_random_code_bounds,
        ),
        (
            "C6",
            "Hoeffding corollaries (MC)",
            Duration::from_secs(180),
            c6_hoeffding,
        ),
        (
            "C7",
            "end-to-end reliability",
            Duration::from_secs(600),
            c7_end_to_end,
        ),
        (
            "C8",
            "quantum inequality campaigns",
            Duration::from_secs(900),
            c8_quantum,
        ),
        (
            "C9",
            "finite-key bound oracle",
            Duration::from_secs(1),
            c9_bound_oracle,
        ),
        (
            "C10",
            "determinism",
            Duration::from_secs(60),
            c10_determinism,
        ),
    ];
    let selected: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (id, name, limit, check) in criteria {
        if !selected.is_empty() && !selected.iter().any(|s| s == id) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()));
            Err(format!("panicked: {}", msg.unwrap_or_default()))
        });
        let elapsed = start.elapsed();
        let timing = format!("{:.2}s, limit {}s", elapsed.as_secs_f64(), limit.as_secs());
        let outcome = match outcome {
            Ok(detail) if elapsed > limit => Err(format!("{detail}; too slow")),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS {id} {name}: {detail} ({timing})"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id} {name}: {detail} ({timing})");
            }
        }
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
