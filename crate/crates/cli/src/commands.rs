use std::path::Path;

use hjm_american::additive::{critical_time, value_put_additive, DEFAULT_CURVE_STEPS};
use hjm_american::curve::ForwardCurve;
use hjm_american::format::{fmt_num, round_sig};
use hjm_american::gain::power_gain;
use hjm_american::multiplicative::{critical_time_mult, value_multiplicative};
use hjm_american::numerics::TimeGrid;
use hjm_american::oracles::{comparison_report, ComparisonRow};
use hjm_american::verify::{run_all, SuiteResult};
use hjm_american::MarketParams;
use serde::Serialize;

use crate::config::{Format, Model, RunConfig};
use crate::CliError;

/// What a command produced: the rendered document and whether every check held.
pub struct Outcome {
    pub body: String,
    pub ok: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self { body, ok: true }
    }
}

#[derive(Serialize)]
struct ParamsEcho {
    r: f64,
    delta: f64,
    b: f64,
    s0: f64,
    k: f64,
    maturity: f64,
    quad_tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exponent: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    flat_forward: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    curve_file: Option<String>,
}

impl ParamsEcho {
    fn new(cfg: &RunConfig) -> Self {
        let p = cfg.params;
        let mult = cfg.model == Model::Multiplicative;
        Self {
            r: p.r,
            delta: p.delta,
            b: p.b,
            s0: p.s0,
            k: p.k,
            maturity: p.maturity,
            quad_tol: cfg.quad_tol,
            exponent: mult.then_some(cfg.exponent),
            flat_forward: (mult && cfg.curve_file.is_none()).then_some(cfg.flat_forward),
            curve_file: if mult {
                cfg.curve_file.as_ref().map(|p| p.display().to_string())
            } else {
                None
            },
        }
    }
}

#[derive(Serialize)]
struct PriceDoc {
    price: f64,
    intrinsic: f64,
    critical_time: f64,
    model: &'static str,
    params_echo: ParamsEcho,
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable document");
    s.push('\n');
    s
}

/// Multiplicative forward curve from `--curve-file`, or flat at `--flat-forward`.
fn mult_curve(cfg: &RunConfig) -> Result<ForwardCurve, CliError> {
    let maturity = cfg.params.maturity;
    match &cfg.curve_file {
        None => {
            let grid = TimeGrid::new(0.0, maturity, DEFAULT_CURVE_STEPS)?;
            Ok(ForwardCurve::constant(grid, cfg.flat_forward)?)
        }
        Some(path) => read_curve(path, maturity),
    }
}

fn read_curve(path: &Path, maturity: f64) -> Result<ForwardCurve, CliError> {
    let mut reader = csv::Reader::from_path(path)
        .map_err(|e| CliError::Io(format!("cannot read curve file {}: {e}", path.display())))?;
    let headers = reader
        .headers()
        .map_err(|e| CliError::Invalid(format!("bad curve file: {e}")))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["u", "forward_rate"] {
        return Err(CliError::Invalid(
            "curve file header must be `u,forward_rate`".into(),
        ));
    }
    let mut us = Vec::new();
    let mut rates = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CliError::Invalid(format!("bad curve file: {e}")))?;
        let num = |i: usize| -> Result<f64, CliError> {
            record[i].trim().parse().map_err(|_| {
                CliError::Invalid(format!("bad number `{}` in curve file", &record[i]))
            })
        };
        us.push(num(0)?);
        rates.push(num(1)?);
    }
    if us.len() < 2 {
        return Err(CliError::Invalid(
            "curve file needs at least two rows".into(),
        ));
    }
    let n = us.len() - 1;
    let (first, last) = (us[0], us[n]);
    let scale = maturity.max(1.0);
    if first.abs() > 1e-9 * scale || (last - maturity).abs() > 1e-9 * scale {
        return Err(CliError::Invalid(format!(
            "curve file must span [0, {maturity}], got [{first}, {last}]"
        )));
    }
    let grid = TimeGrid::new(0.0, maturity, n)?;
    if us
        .iter()
        .enumerate()
        .any(|(i, u)| (u - grid.node(i)).abs() > 1e-9 * scale)
    {
        return Err(CliError::Invalid(
            "curve file nodes must be uniformly spaced".into(),
        ));
    }
    Ok(ForwardCurve::new(grid, rates)?)
}

pub fn price(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let doc = match cfg.model {
        Model::Additive => {
            let v = value_put_additive(0.0, p.s0, p, cfg.quad_tol)?;
            PriceDoc {
                price: v.price,
                intrinsic: v.intrinsic,
                critical_time: v.critical_time,
                model: "additive",
                params_echo: ParamsEcho::new(cfg),
            }
        }
        Model::Multiplicative => {
            let gain = power_gain(cfg.exponent, p)?.payoff(p.s0);
            let curve = mult_curve(cfg)?;
            PriceDoc {
                price: value_multiplicative(gain, &curve, 0.0, p.maturity, cfg.quad_tol)?,
                intrinsic: gain,
                critical_time: critical_time_mult(&curve, 0.0, p.maturity)?,
                model: "multiplicative",
                params_echo: ParamsEcho::new(cfg),
            }
        }
    };
    let doc = PriceDoc {
        price: round_sig(doc.price),
        intrinsic: round_sig(doc.intrinsic),
        critical_time: round_sig(doc.critical_time),
        ..doc
    };
    Ok(Outcome::ok(match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&doc),
        Format::Csv => format!(
            "price,intrinsic,critical_time,model\n{},{},{},{}\n",
            fmt_num(doc.price),
            fmt_num(doc.intrinsic),
            fmt_num(doc.critical_time),
            doc.model
        ),
    }))
}

#[derive(Serialize)]
struct CurvePoint {
    u: f64,
    forward_rate: f64,
}

#[derive(Serialize)]
struct CurveDoc {
    model: &'static str,
    params_echo: ParamsEcho,
    points: Vec<CurvePoint>,
}

pub fn curve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let curve = match cfg.model {
        Model::Additive => value_put_additive(0.0, p.s0, p, cfg.quad_tol)?.curve,
        Model::Multiplicative => mult_curve(cfg)?,
    };
    Ok(Outcome::ok(match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => curve.to_csv(),
        Format::Json => to_json(&CurveDoc {
            model: cfg.model.name(),
            params_echo: ParamsEcho::new(cfg),
            points: curve
                .nodes()
                .map(|(u, f)| CurvePoint {
                    u: round_sig(u),
                    forward_rate: round_sig(f),
                })
                .collect(),
        }),
    }))
}

#[derive(Serialize)]
struct CriticalTimeDoc {
    critical_time: f64,
    model: &'static str,
    params_echo: ParamsEcho,
}

pub fn critical_time_cmd(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.params;
    let t_star = match cfg.model {
        Model::Additive => critical_time(0.0, p.s0, p)?,
        Model::Multiplicative => critical_time_mult(&mult_curve(cfg)?, 0.0, p.maturity)?,
    };
    let t_star = round_sig(t_star);
    Ok(Outcome::ok(match cfg.format.unwrap_or(Format::Json) {
        Format::Json => to_json(&CriticalTimeDoc {
            critical_time: t_star,
            model: cfg.model.name(),
            params_echo: ParamsEcho::new(cfg),
        }),
        Format::Csv => format!(
            "critical_time,model\n{},{}\n",
            fmt_num(t_star),
            cfg.model.name()
        ),
    }))
}

#[derive(Serialize)]
struct VerifyDoc<'a> {
    passed: bool,
    seed: u64,
    paths: usize,
    suites: &'a [SuiteResult],
}

pub fn verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let suites = run_all(&cfg.verify_config())?;
    let ok = suites.iter().all(|s| s.passed);
    let body = match cfg.format {
        Some(Format::Json) => {
            let rounded: Vec<SuiteResult> = suites
                .iter()
                .map(|s| SuiteResult {
                    measured: round_sig(s.measured),
                    threshold: round_sig(s.threshold),
                    ..s.clone()
                })
                .collect();
            to_json(&VerifyDoc {
                passed: ok,
                seed: cfg.seed,
                paths: cfg.n_paths,
                suites: &rounded,
            })
        }
        Some(Format::Csv) => {
            let mut out = String::from("suite,passed,measured,threshold\n");
            for s in &suites {
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    s.name,
                    s.passed,
                    fmt_num(s.measured),
                    fmt_num(s.threshold)
                ));
            }
            out
        }
        None => {
            let mut out: String = suites.iter().map(|s| s.line() + "\n").collect();
            let failed = suites.iter().filter(|s| !s.passed).count();
            out.push_str(&format!(
                "{} of {} suites passed\n",
                suites.len() - failed,
                suites.len()
            ));
            out
        }
    };
    Ok(Outcome { body, ok })
}

#[derive(Serialize)]
struct CompareDoc {
    params: MarketParams,
    crr_steps: usize,
    rows: Vec<ComparisonRow>,
}

pub fn compare(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let report = comparison_report(&cfg.params, &cfg.spots, cfg.crr_steps, cfg.quad_tol)?;
    Ok(Outcome::ok(match cfg.format.unwrap_or(Format::Csv) {
        Format::Csv => report.to_csv(),
        Format::Json => to_json(&CompareDoc {
            params: report.params,
            crr_steps: report.crr_steps,
            rows: report.rows.iter().map(ComparisonRow::rounded).collect(),
        }),
    }))
}
