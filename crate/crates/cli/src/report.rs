use dcf_core::{Diagnostics64, MCPlan, TestConfig, TestResult64};
use serde::{Deserialize, Serialize};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub wall_time_secs: f64,
}

/// JSON written by `dcf test --json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultDocument {
    pub format_version: String,
    pub statistic: f64,
    pub critical_value: f64,
    pub p_value: f64,
    pub reject: bool,
    pub alpha: f64,
    pub n_boot: usize,
    pub seed: u64,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub diagnostics: Diagnostics64,
    #[serde(default)]
    pub warnings: Vec<String>,
    pub timing: Timing,
}

impl ResultDocument {
    pub fn new(
        result: &TestResult64,
        config: &TestConfig,
        sizes: (usize, usize, usize),
        diagnostics: Diagnostics64,
        wall_time_secs: f64,
    ) -> Self {
        let mut warnings = Vec::new();
        if result.degenerate_bootstrap {
            warnings.push(
                "degenerate bootstrap: every draw is 0 (no variation in the centered data); \
                 statistic 0 meets critical value 0 and the test rejects"
                    .to_string(),
            );
        }
        Self {
            format_version: FORMAT_VERSION.to_string(),
            statistic: result.statistic,
            critical_value: result.critical_value,
            p_value: result.p_value,
            reject: result.reject,
            alpha: config.alpha,
            n_boot: config.n_boot,
            seed: config.seed,
            n: sizes.0,
            m: sizes.1,
            p: sizes.2,
            diagnostics,
            warnings,
            timing: Timing { wall_time_secs },
        }
    }

    /// Multi-line human-readable summary (no timing, so it is reproducible).
    pub fn summary(&self) -> String {
        let mut out = format!(
            "DCF two-sample test (n={}, m={}, p={})\n\
             statistic       {:.6}\n\
             critical value  {:.6}  (alpha={}, N={}, seed={})\n\
             p-value         {:.4}\n\
             decision        {}\n",
            self.n,
            self.m,
            self.p,
            self.statistic,
            self.critical_value,
            self.alpha,
            self.n_boot,
            self.seed,
            self.p_value,
            if self.reject { "reject H0" } else { "do not reject H0" },
        );
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

/// JSON sidecar written next to the `simulate` CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationMetadata {
    pub format_version: String,
    pub software_version: String,
    pub plan: MCPlan,
    pub scale_reduced: bool,
    pub fast_transform: bool,
    pub replace_all_innovations: bool,
    pub threads: usize,
    pub wall_time_secs: f64,
}
