use serde::Serialize;

/// One row of a pass/fail verification table.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Check {
    pub name: String,
    /// The measured quantity (worst case over the samples).
    pub value: f64,
    /// The bound the measured quantity is compared against.
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes when `value < threshold`.
    pub fn below(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value < threshold,
        }
    }

    /// Passes when `value > threshold`.
    pub fn above(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value > threshold,
        }
    }

    /// Passes when `value >= threshold`.
    pub fn at_least(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value >= threshold,
        }
    }

    /// Passes when `value <= threshold`.
    pub fn at_most(name: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            pass: value <= threshold,
        }
    }
}

/// Renders checks as an aligned text table, one line per check.
pub fn render_table(checks: &[Check]) -> String {
    let width = checks.iter().map(|c| c.name.len()).max().unwrap_or(4).max(4);
    let mut out = format!("{:<width$}  {:>14}  {:>14}  verdict\n", "check", "value", "threshold");
    for c in checks {
        out.push_str(&format!(
            "{:<width$}  {:>14.6e}  {:>14.6e}  {}\n",
            c.name,
            c.value,
            c.threshold,
            if c.pass { "PASS" } else { "FAIL" }
        ));
    }
    out
}
