//! Output formats for test reports and tables.

use serde::Serialize;
use serde_json::{json, Value};

use hdsign::inference::TestReport;
use hdsign::montecarlo::SubsampleTable;

use crate::Format;

pub const SCHEMA: u32 = 1;

fn report_json(rep: &TestReport, method: &str) -> Value {
    let nuisance = rep.nuisance.map(|n| {
        json!({
            "tr1": n.tr_sigma1_sq,
            "tr2": n.tr_sigma2_sq,
            "tr12": n.tr_sigma1_sigma2,
            "gamma": n.gamma,
            "sigma1_sq": n.sigma1_sq,
            "sigma2_sq": n.sigma2_sq,
        })
    });
    json!({
        "schema": SCHEMA,
        "stat_kind": rep.statistic.kind.name(),
        "statistic": rep.statistic.value,
        "z": rep.z,
        "p_value": rep.p_value,
        "reject": rep.reject,
        "alpha": rep.alpha,
        "method": method,
        "n_resamples": rep.n_resamples,
        "seed": rep.seed,
        "nuisance": nuisance,
    })
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

const CSV_COLUMNS: [&str; 16] = [
    "schema",
    "stat_kind",
    "statistic",
    "z",
    "p_value",
    "reject",
    "alpha",
    "method",
    "n_resamples",
    "seed",
    "tr1",
    "tr2",
    "tr12",
    "gamma",
    "sigma1_sq",
    "sigma2_sq",
];

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Shortest round-trip decimal, switching to exponent form for tiny values.
fn num(v: f64) -> String {
    serde_json::to_string(&v).expect("finite")
}

pub fn render(rep: &TestReport, method: &str, format: Format) -> String {
    match format {
        Format::Json => to_json(&report_json(rep, method)),
        Format::Csv => {
            let n = rep.nuisance;
            let fields = [
                SCHEMA.to_string(),
                rep.statistic.kind.name().to_string(),
                num(rep.statistic.value),
                opt(rep.z.map(num)),
                num(rep.p_value),
                rep.reject.to_string(),
                rep.alpha.to_string(),
                method.to_string(),
                opt(rep.n_resamples),
                opt(rep.seed),
                opt(n.map(|n| num(n.tr_sigma1_sq))),
                opt(n.and_then(|n| n.tr_sigma2_sq).map(num)),
                opt(n.and_then(|n| n.tr_sigma1_sigma2).map(num)),
                opt(n.map(|n| num(n.gamma))),
                opt(n.map(|n| num(n.sigma1_sq))),
                opt(n.and_then(|n| n.sigma2_sq).map(num)),
            ];
            format!("{}\n{}\n", CSV_COLUMNS.join(","), fields.join(","))
        }
        Format::Text => {
            let mut s = format!(
                "{} = {}\nmethod: {method}\n",
                rep.statistic.kind.name(),
                rep.statistic.value
            );
            if let Some(z) = rep.z {
                s.push_str(&format!("z = {z}\n"));
            }
            if let Some(r) = rep.n_resamples {
                s.push_str(&format!("resamples: {r} (seed {})\n", opt(rep.seed)));
            }
            s.push_str(&format!(
                "p-value = {}\n{} at alpha = {}\n",
                rep.p_value,
                if rep.reject {
                    "reject H0"
                } else {
                    "do not reject H0"
                },
                rep.alpha
            ));
            s
        }
    }
}

pub fn subsample_csv(t: &SubsampleTable) -> String {
    let mut s = String::from("stat,method,size,size_se,power,power_se\n");
    for r in &t.rows {
        s.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.test.stat.name(),
            r.test.method.name(),
            r.size,
            r.size_se,
            r.power,
            r.power_se
        ));
    }
    s
}
