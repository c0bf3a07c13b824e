use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::special::student_t_two_tailed;
use super::AnalyticsError;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TTestVariant {
    /// Equal-variance Student test, `df = n_a + n_b - 2`.
    #[default]
    Pooled,
    /// Unequal variances with Welch–Satterthwaite degrees of freedom.
    Welch,
}

impl fmt::Display for TTestVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TTestVariant::Pooled => "pooled",
            TTestVariant::Welch => "welch",
        })
    }
}

impl FromStr for TTestVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pooled" => Ok(TTestVariant::Pooled),
            "welch" => Ok(TTestVariant::Welch),
            other => Err(format!("unknown t-test variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t_statistic: f64,
    pub degrees_of_freedom: f64,
    /// Two-tailed.
    pub p_value: f64,
    pub variant: TTestVariant,
}

fn mean_and_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn check(sample: char, xs: &[f64]) -> Result<(), AnalyticsError> {
    if xs.len() < 2 {
        return Err(AnalyticsError::InsufficientData { sample, len: xs.len() });
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(AnalyticsError::NonFinite { sample });
    }
    Ok(())
}

/// Two-sample, two-tailed t-test of `mean(a) == mean(b)`.
///
/// When both samples are constant the standard error is zero: equal means
/// give `t = 0, p = 1`, different means give `t = ±inf, p = 0`. Welch's
/// degrees of freedom are undefined in that case and fall back to the pooled value.
pub fn t_test_two_sample(a: &[f64], b: &[f64], variant: TTestVariant) -> Result<TTestResult, AnalyticsError> {
    check('a', a)?;
    check('b', b)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (ma, va) = mean_and_variance(a);
    let (mb, vb) = mean_and_variance(b);
    let pooled_df = na + nb - 2.0;

    let (se, df) = match variant {
        TTestVariant::Pooled => {
            let sp2 = ((na - 1.0) * va + (nb - 1.0) * vb) / pooled_df;
            ((sp2 * (1.0 / na + 1.0 / nb)).sqrt(), pooled_df)
        }
        TTestVariant::Welch => {
            let (qa, qb) = (va / na, vb / nb);
            let se2 = qa + qb;
            let df = if se2 > 0.0 {
                se2 * se2 / (qa * qa / (na - 1.0) + qb * qb / (nb - 1.0))
            } else {
                pooled_df
            };
            (se2.sqrt(), df)
        }
    };

    let diff = ma - mb;
    let t = if se > 0.0 {
        diff / se
    } else if diff == 0.0 {
        0.0
    } else {
        diff.signum() * f64::INFINITY
    };
    Ok(TTestResult {
        t_statistic: t,
        degrees_of_freedom: df,
        p_value: student_t_two_tailed(t, df),
        variant,
    })
}
