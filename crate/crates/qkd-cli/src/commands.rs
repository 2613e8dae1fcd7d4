use std::io::Write;

use qkd_core::bounds::{
    asymptotic_threshold, reliability_bound, security_bound, MFactor, ProtocolParams, Variant,
};
use qkd_core::coding::{
    mc_decoding_failure_rate, mc_low_weight_coset_word, DecoderSettings, WeightMode,
};
use qkd_core::gf2::BitString;
use qkd_core::par::map_trials;
use qkd_core::protocol::{keyrate_experiment, run_protocol_with_decoder, ChannelModel, RunMode};
use qkd_core::quantum::{
    composable_campaign, info_disturbance_campaign, symmetry_campaign, CampaignConfig,
};

use crate::{
    report, BoundArgs, Cli, CliError, Command, CurveArgs, Estimator, McCodeArgs, ModeArg,
    ParamArgs, SimulateArgs, Suite, VerifyArgs, WeightArg,
};

/// Largest deviation accepted for the symmetrization identities.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Successful command output.
pub struct Output {
    pub csv: String,
}

/// A failed command, with any CSV produced before the failure was detected.
pub struct Failure {
    pub error: CliError,
    pub csv: Option<String>,
}

impl From<CliError> for Failure {
    fn from(error: CliError) -> Self {
        Failure { error, csv: None }
    }
}

impl From<qkd_core::Error> for Failure {
    fn from(e: qkd_core::Error) -> Self {
        CliError::from(e).into()
    }
}

type CmdResult = Result<Output, Failure>;

pub fn dispatch(cli: &Cli, stderr: &mut dyn Write) -> CmdResult {
    match &cli.command {
        Command::Simulate(a) => simulate(cli, a, stderr),
        Command::Bound(a) => bound(a, stderr),
        Command::Curve(a) => curve(a),
        Command::Verify(a) => verify(cli, a),
        Command::McCode(a) => mc_code(cli, a),
    }
}

fn need<T>(v: Option<T>, flag: &str, variant: Variant) -> Result<T, CliError> {
    v.ok_or_else(|| CliError::Validation(format!("--{flag} is required for variant {variant}")))
}

/// Builds and validates the parameters of the selected variant.
pub fn build_params(a: &ParamArgs, r: usize, m: usize) -> Result<ProtocolParams, CliError> {
    let variant: Variant = a.variant.parse()?;
    let params = match variant {
        Variant::Bb84 => ProtocolParams::bb84(
            need(a.n, "n", variant)?,
            r,
            m,
            need(a.pa, "pa", variant)?,
            a.eps_sec,
            a.eps_rel,
        )?,
        Variant::Bb84InfoZ => {
            let p_az = need(a.p_az.or(a.pa), "p-az", variant)?;
            let p_ax = need(a.p_ax.or(a.pa), "p-ax", variant)?;
            ProtocolParams::bb84_info_z(
                need(a.n, "n", variant)?,
                need(a.n_z, "n-z", variant)?,
                need(a.n_x, "n-x", variant)?,
                r,
                m,
                p_az,
                p_ax,
                a.eps_sec,
                a.eps_rel,
            )?
        }
        Variant::Efficient => ProtocolParams::efficient(
            need(a.n, "n", variant)?,
            need(a.n_z, "n-z", variant)?,
            need(a.n_x, "n-x", variant)?,
            a.p.unwrap_or(0.5),
            r,
            m,
            need(a.pa, "pa", variant)?,
            a.eps_sec,
            a.eps_rel,
        )?,
        Variant::ModifiedEfficient => {
            let (t_z, t_x) = (need(a.t_z, "t-z", variant)?, need(a.t_x, "t-x", variant)?);
            if let Some(n) = a.n {
                if n != t_z + t_x {
                    return Err(CliError::Validation(format!(
                        "--n {n} differs from t-z + t-x = {}",
                        t_z + t_x
                    )));
                }
            }
            ProtocolParams::modified_efficient(
                t_z,
                t_x,
                need(a.n_z, "n-z", variant)?,
                need(a.n_x, "n-x", variant)?,
                r,
                m,
                need(a.pa, "pa", variant)?,
                a.eps_sec,
                a.eps_rel,
            )?
        }
    };
    Ok(params)
}

fn info_len(a: &ParamArgs) -> Result<usize, CliError> {
    match (a.n, a.t_z, a.t_x) {
        (Some(n), _, _) => Ok(n),
        (None, Some(z), Some(x)) => Ok(z + x),
        _ => Err(CliError::Validation("--n is required".into())),
    }
}

/// `frac·n` as an integer, rejecting fractions that do not land on one.
fn length_from_fraction(frac: f64, n: usize, flag: &str) -> Result<usize, CliError> {
    let x = frac * n as f64;
    if !(0.0..=n as f64).contains(&x) || (x - x.round()).abs() > 1e-9 * x.max(1.0) {
        return Err(CliError::Validation(format!(
            "--{flag} {frac} times n = {n} is not an integer in [0, n]"
        )));
    }
    Ok(x.round() as usize)
}

fn simulate(cli: &Cli, a: &SimulateArgs, stderr: &mut dyn Write) -> CmdResult {
    let params = build_params(&a.params, a.r, a.m)?;
    let flip_z = a.flip_z.or(a.flip).unwrap_or(0.0);
    let flip_x = a.flip_x.or(a.flip).unwrap_or(0.0);
    let channel = if flip_z == 0.0 && flip_x == 0.0 {
        ChannelModel::noiseless()
    } else {
        ChannelModel::independent_flip(flip_z, flip_x)?
    };
    let mode = match a.mode {
        ModeArg::Real => RunMode::Real,
        ModeArg::InvertedInfoBasis => RunMode::InvertedInfoBasis,
    };
    let exec = cli.exec();
    let decoder = DecoderSettings {
        budget: a.decode_budget,
        isd_iterations: a.isd_iterations,
    };
    let summary = keyrate_experiment(&params, &channel, mode, a.runs, a.seed, exec, decoder)?;
    if let Some(path) = &a.transcripts {
        let records = map_trials(a.runs, a.seed, exec, |_, rng| {
            run_protocol_with_decoder(&params, &channel, mode, decoder, rng).map(|t| t.to_record())
        });
        let text = records
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?
            .join("\n");
        std::fs::write(path, text)
            .map_err(|e| CliError::Io(format!("cannot write {path}: {e}")))?;
    }
    let bound = match reliability_bound(&params) {
        Ok(b) => Some(b),
        Err(e) => {
            let _ = writeln!(
                stderr,
                "note: no reliability bound for these parameters ({e})"
            );
            None
        }
    };
    let csv = report::simulate(params.variant, &mode.to_string(), &summary, bound)?;
    match bound {
        Some(b) if !summary.reliability_failures.consistent_with_upper_bound(b) => Err(Failure {
            error: CliError::Verification(format!(
                "failure rate interval [{}, {}] lies above the bound {b}",
                summary.reliability_failures.ci_low, summary.reliability_failures.ci_high
            )),
            csv: Some(csv),
        }),
        _ => Ok(Output { csv }),
    }
}

fn bound(a: &BoundArgs, stderr: &mut dyn Write) -> CmdResult {
    let n = info_len(&a.params)?;
    let mf = if a.drop_m_factor {
        let _ = writeln!(
            stderr,
            "warning: --drop-m-factor output is exploratory and not a proven bound"
        );
        MFactor::DropExploratory
    } else {
        MFactor::Keep
    };
    let mut rows = Vec::new();
    for &rf in &a.r_frac {
        for &mf_frac in &a.m_frac {
            let r = length_from_fraction(rf, n, "r-frac")?;
            let m = length_from_fraction(mf_frac, n, "m-frac")?;
            let params = build_params(&a.params, r, m)?;
            let b = security_bound(&params, mf)?;
            rows.push((params, b, mf == MFactor::Keep));
        }
    }
    Ok(Output {
        csv: report::bound_table(&rows)?,
    })
}

fn curve(a: &CurveArgs) -> CmdResult {
    let variant: Variant = a.variant.parse()?;
    if variant != Variant::Bb84InfoZ {
        return Err(CliError::Validation(format!(
            "curve is defined for bb84-info-z, not {variant}"
        ))
        .into());
    }
    if a.steps < 2 {
        return Err(CliError::Validation("--steps must be at least 2".into()).into());
    }
    let points = (0..a.steps)
        .map(|i| {
            let p_az = i as f64 / (a.steps - 1) as f64 * 0.5;
            asymptotic_threshold(variant, Some(p_az)).map(|p_ax| (p_az, p_ax))
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Output {
        csv: report::curve(&points)?,
    })
}

fn verify(cli: &Cli, a: &VerifyArgs) -> CmdResult {
    let exec = cli.exec();
    match a.suite {
        Suite::Quantum => {
            let n = a.n.unwrap_or(2);
            let mut cfg = CampaignConfig::new(a.cases.unwrap_or(100), a.n_qubits, n, a.r, a.seed);
            cfg.probe_dim = a.probe_dim.unwrap_or(1 << a.n_qubits);
            cfg.exec = exec;
            let rows = info_disturbance_campaign(&cfg)?;
            let csv = report::verify(&rows)?;
            let failed = rows.iter().filter(|r| !r.holds).count();
            let worst = rows
                .iter()
                .filter_map(|r| r.symmetry.as_ref())
                .map(|s| s.max_deviation())
                .fold(0.0, f64::max);
            if failed > 0 || worst > SYMMETRY_TOL {
                return Err(Failure {
                    error: CliError::Verification(format!(
                        "{failed} of {} cases violate the inequality; largest symmetry deviation {worst:e}",
                        rows.len()
                    )),
                    csv: Some(csv),
                });
            }
            Ok(Output { csv })
        }
        Suite::Composable => {
            let n = a.n.unwrap_or(1);
            let params = ProtocolParams::bb84(n, a.r, a.m, a.pa, 0.0, 0.0)?;
            let probe_dim = a.probe_dim.unwrap_or(1 << params.big_n);
            let rows =
                composable_campaign(&params, a.cases.unwrap_or(50), probe_dim, a.seed, exec)?;
            let csv = report::verify(&rows)?;
            let failed = rows.iter().filter(|r| !r.holds).count();
            if failed > 0 {
                return Err(Failure {
                    error: CliError::Verification(format!(
                        "{failed} of {} cases violate the bound",
                        rows.len()
                    )),
                    csv: Some(csv),
                });
            }
            Ok(Output { csv })
        }
        Suite::Symmetry => {
            let n = a.n.unwrap_or(2);
            let mut cfg = CampaignConfig::new(a.cases.unwrap_or(20), a.n_qubits, n, a.r, a.seed);
            cfg.probe_dim = a.probe_dim.unwrap_or(1 << a.n_qubits);
            cfg.exec = exec;
            let checks = symmetry_campaign(&cfg)?;
            let csv = report::symmetry(&checks, SYMMETRY_TOL)?;
            let failed = checks
                .iter()
                .filter(|c| c.max_deviation() > SYMMETRY_TOL)
                .count();
            if failed > 0 {
                return Err(Failure {
                    error: CliError::Verification(format!(
                        "{failed} of {} cases break an identity",
                        checks.len()
                    )),
                    csv: Some(csv),
                });
            }
            Ok(Output { csv })
        }
    }
}

fn mc_code(cli: &Cli, a: &McCodeArgs) -> CmdResult {
    let exec = cli.exec();
    let report = match a.estimator {
        Estimator::Failure => {
            if a.ell.is_some() {
                return Err(CliError::Validation(
                    "--ell applies to the coset estimator only".into(),
                )
                .into());
            }
            let mode = match a.weight_mode {
                WeightArg::Exact => WeightMode::Exact,
                WeightArg::UniformUpTo => WeightMode::UniformUpTo,
            };
            mc_decoding_failure_rate(a.n, a.k, a.t, a.trials, a.seed, exec, mode)?
        }
        Estimator::Coset => {
            let ell: BitString = match &a.ell {
                Some(s) => s.parse()?,
                None => BitString::zeros(a.n),
            };
            if ell.len() != a.n {
                return Err(CliError::Validation(format!(
                    "--ell has length {}, expected n = {}",
                    ell.len(),
                    a.n
                ))
                .into());
            }
            mc_low_weight_coset_word(&ell, a.k, a.t, a.trials, a.seed, exec)?
        }
    };
    let csv = report::mc_code(&report)?;
    if !report.estimate.consistent_with_upper_bound(report.bound) {
        return Err(Failure {
            error: CliError::Verification(format!(
                "interval [{}, {}] lies above the bound {}",
                report.estimate.ci_low, report.estimate.ci_high, report.bound
            )),
            csv: Some(csv),
        });
    }
    Ok(Output { csv })
}
