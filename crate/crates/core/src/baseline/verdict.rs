use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::metrics::MetricsReport;

use super::BaselineError;

pub const DEFAULT_ACC_THRESHOLD: f64 = 10.0;
pub const DEFAULT_ASPL_THRESHOLD: f64 = 1.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum subject/baseline ACC ratio.
    pub acc: f64,
    /// Maximum subject/baseline ASPL ratio.
    pub aspl: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            acc: DEFAULT_ACC_THRESHOLD,
            aspl: DEFAULT_ASPL_THRESHOLD,
        }
    }
}

/// Main-component ACC and ASPL of one graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentMetrics {
    pub acc: f64,
    pub aspl: f64,
}

impl ComponentMetrics {
    pub fn from_report(report: &MetricsReport, role: &'static str) -> Result<Self, BaselineError> {
        match (report.main_component_acc, report.main_component_aspl) {
            (Some(acc), Some(aspl)) => Ok(ComponentMetrics { acc, aspl }),
            (None, _) => Err(BaselineError::UndefinedMetric {
                role,
                metric: "main-component ACC",
            }),
            (_, None) => Err(BaselineError::UndefinedMetric {
                role,
                metric: "main-component ASPL",
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: impl Iterator<Item = f64> + Clone) -> Spread {
        let count = values.clone().count() as f64;
        Spread {
            mean: values.clone().sum::<f64>() / count,
            min: values.clone().fold(f64::INFINITY, f64::min),
            max: values.fold(f64::NEG_INFINITY, f64::max),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmallWorldVerdict {
    #[serde(with = "ratio")]
    pub acc_ratio: f64,
    #[serde(with = "ratio")]
    pub aspl_ratio: f64,
    pub acc_threshold: f64,
    pub aspl_threshold: f64,
    pub is_small_world: bool,
    pub subject: ComponentMetrics,
    pub baseline_acc: Spread,
    pub baseline_aspl: Spread,
    pub baseline_samples: usize,
}

/// Classifies from main-component values. Ratios use the mean over the
/// baseline samples. A zero baseline ACC gives an infinite ACC ratio unless
/// the subject ACC is zero too, in which case the two are equal (ratio 1).
pub fn verdict_from_values(
    subject: ComponentMetrics,
    baselines: &[ComponentMetrics],
    thresholds: Thresholds,
) -> Result<SmallWorldVerdict, BaselineError> {
    if baselines.is_empty() {
        return Err(BaselineError::NoSamples);
    }
    let baseline_acc = Spread::of(baselines.iter().map(|b| b.acc));
    let baseline_aspl = Spread::of(baselines.iter().map(|b| b.aspl));
    let acc_ratio = if baseline_acc.mean > 0.0 {
        subject.acc / baseline_acc.mean
    } else if subject.acc > 0.0 {
        f64::INFINITY
    } else {
        1.0
    };
    if baseline_aspl.mean <= 0.0 {
        return Err(BaselineError::UndefinedMetric {
            role: "baseline",
            metric: "main-component ASPL",
        });
    }
    let aspl_ratio = subject.aspl / baseline_aspl.mean;
    Ok(SmallWorldVerdict {
        acc_ratio,
        aspl_ratio,
        acc_threshold: thresholds.acc,
        aspl_threshold: thresholds.aspl,
        is_small_world: acc_ratio >= thresholds.acc && aspl_ratio <= thresholds.aspl,
        subject,
        baseline_acc,
        baseline_aspl,
        baseline_samples: baselines.len(),
    })
}

pub fn small_world_verdict(
    subject: &MetricsReport,
    baselines: &[MetricsReport],
    thresholds: Thresholds,
) -> Result<SmallWorldVerdict, BaselineError> {
    let subject = ComponentMetrics::from_report(subject, "subject")?;
    let baselines = baselines
        .iter()
        .map(|b| ComponentMetrics::from_report(b, "baseline"))
        .collect::<Result<Vec<_>, _>>()?;
    verdict_from_values(subject, &baselines, thresholds)
}

/// Ratios as JSON numbers, with `"inf"` for an infinite ratio.
mod ratio {
    use super::*;

    pub fn serialize<S: Serializer>(value: &f64, s: S) -> Result<S::Ok, S::Error> {
        if value.is_infinite() && *value > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*value)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(v) => Ok(v),
            Repr::Text(t) if t == "inf" => Ok(f64::INFINITY),
            Repr::Text(t) => Err(serde::de::Error::custom(format!("invalid ratio {t:?}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(acc: f64, aspl: f64) -> ComponentMetrics {
        ComponentMetrics { acc, aspl }
    }

    #[test]
    fn self_comparison_is_not_small_world() {
        let m = values(0.3, 2.5);
        let v = verdict_from_values(m, &[m], Thresholds::default()).unwrap();
        assert_eq!((v.acc_ratio, v.aspl_ratio), (1.0, 1.0));
        assert!(!v.is_small_world);
    }

    #[test]
    fn zero_baseline_acc_is_infinite() {
        let v = verdict_from_values(values(0.1, 2.0), &[values(0.0, 2.0)], Thresholds::default()).unwrap();
        assert!(v.acc_ratio.is_infinite());
        assert!(v.is_small_world);
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"acc_ratio\":\"inf\""), "{json}");
        let back: SmallWorldVerdict = serde_json::from_str(&json).unwrap();
        assert_eq!(back, v);

        let both_zero = verdict_from_values(values(0.0, 2.0), &[values(0.0, 2.0)], Thresholds::default()).unwrap();
        assert_eq!(both_zero.acc_ratio, 1.0);
    }

    #[test]
    fn sample_mean_is_used() {
        let v = verdict_from_values(
            values(0.5, 3.0),
            &[values(0.01, 2.0), values(0.03, 4.0)],
            Thresholds::default(),
        )
        .unwrap();
        assert!((v.acc_ratio - 25.0).abs() < 1e-12);
        assert_eq!(v.aspl_ratio, 1.0);
        assert_eq!(v.baseline_acc.min, 0.01);
        assert_eq!(v.baseline_aspl.max, 4.0);
        assert!(v.is_small_world);
    }

    #[test]
    fn thresholds_are_inclusive() {
        let t = Thresholds { acc: 2.0, aspl: 1.0 };
        let v = verdict_from_values(values(0.2, 2.0), &[values(0.1, 2.0)], t).unwrap();
        assert!(v.is_small_world);
    }

    #[test]
    fn empty_baseline_set() {
        assert!(matches!(
            verdict_from_values(values(0.1, 1.0), &[], Thresholds::default()),
            Err(BaselineError::NoSamples)
        ));
    }
}
