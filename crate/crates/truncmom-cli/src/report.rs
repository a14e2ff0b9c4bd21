//! Report documents emitted by the commands, in deterministic text and
//! machine (JSON) renderings. All floating point output is rounded to 12
//! significant digits so identical inputs produce byte-identical reports.

use serde::Serialize;

use truncmom::moments::AtomicMeasure;
use truncmom::problem::format_significant;

/// Rounds to the fixed 12-significant-digit grid before serialization.
pub fn round12(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    format!("{x:.11e}").parse().expect("finite round trip")
}

#[derive(Debug, Clone, Serialize)]
pub struct Tolerances {
    pub rank: f64,
    pub solve: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckReport {
    pub dimension: usize,
    pub truncation: String,
    pub moment_count: usize,
    pub gamma_size: usize,
    pub tolerances: Tolerances,
    pub psd_ok: bool,
    pub min_eigenvalue: f64,
    pub kernel_ok: Vec<bool>,
    /// Space dimensions; absent when the moment matrix is not positive
    /// semidefinite and the space cannot be built.
    pub dim_h: Option<usize>,
    pub dim_h0: Option<usize>,
    pub index: Option<usize>,
    /// Block-level necessary checks; absent when they do not apply (not a
    /// two-axis problem, or the blocks are unavailable for the indexation).
    pub block_checks_ok: Option<bool>,
    pub all_ok: bool,
}

impl CheckReport {
    pub fn render_text(&self, out: &mut String) {
        out.push_str(&format!("dimension            {}\n", self.dimension));
        out.push_str(&format!("truncation           {}\n", self.truncation));
        out.push_str(&format!("moments              {}\n", self.moment_count));
        out.push_str(&format!("gamma size           {0} x {0}\n", self.gamma_size));
        out.push_str(&format!(
            "tolerances           rank {} solve {}\n",
            format_significant(self.tolerances.rank),
            format_significant(self.tolerances.solve)
        ));
        out.push_str(&format!(
            "psd                  {} (min eigenvalue {})\n",
            verdict(self.psd_ok),
            format_significant(self.min_eigenvalue)
        ));
        for (i, ok) in self.kernel_ok.iter().enumerate() {
            out.push_str(&format!("kernel inclusion {}   {}\n", i + 1, verdict(*ok)));
        }
        match (self.dim_h, self.dim_h0, self.index) {
            (Some(h), Some(h0), Some(i)) => {
                out.push_str(&format!("dim H                {h}\n"));
                out.push_str(&format!("dim H0               {h0}\n"));
                out.push_str(&format!("index i_s            {i}\n"));
            }
            _ => out.push_str("space                unavailable (moment matrix not PSD)\n"),
        }
        match self.block_checks_ok {
            Some(ok) => out.push_str(&format!("block conditions     {}\n", verdict(ok))),
            None => out.push_str("block conditions     not applicable\n"),
        }
        out.push_str(&format!("necessary conditions {}\n", verdict(self.all_ok)));
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexEntry {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<ComplexEntry>>,
}

impl MatrixDump {
    pub fn from_cmat(m: &truncmom::CMat) -> Self {
        let entries = (0..m.nrows())
            .map(|i| {
                (0..m.ncols())
                    .map(|j| ComplexEntry {
                        re: round12(m[(i, j)].re),
                        im: round12(m[(i, j)].im),
                    })
                    .collect()
            })
            .collect();
        Self { rows: m.nrows(), cols: m.ncols(), entries }
    }

    pub fn render_text(&self, label: &str, out: &mut String) {
        out.push_str(&format!("{label} ({} x {})\n", self.rows, self.cols));
        for row in &self.entries {
            out.push_str("  ");
            for e in row {
                if e.im == 0.0 {
                    out.push_str(&format!("{} ", format_significant(e.re)));
                } else {
                    out.push_str(&format!(
                        "{}{}{}i ",
                        format_significant(e.re),
                        if e.im >= 0.0 { "+" } else { "-" },
                        format_significant(e.im.abs())
                    ));
                }
            }
            out.push('\n');
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AtomDump {
    pub point: Vec<f64>,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeasureDump {
    pub dimension: usize,
    pub atoms: Vec<AtomDump>,
    pub total_mass: f64,
}

impl MeasureDump {
    pub fn from_measure(mu: &AtomicMeasure) -> Self {
        Self {
            dimension: mu.dim(),
            atoms: mu
                .atoms()
                .iter()
                .map(|a| AtomDump {
                    point: a.point.iter().map(|&c| round12(c)).collect(),
                    mass: round12(a.mass),
                })
                .collect(),
            total_mass: round12(mu.total_mass()),
        }
    }

    pub fn render_text(&self, out: &mut String) {
        out.push_str(&format!("atoms ({})\n", self.atoms.len()));
        for a in &self.atoms {
            out.push_str("  ");
            for c in &a.point {
                out.push_str(&format!("{} ", format_significant(*c)));
            }
            out.push_str(&format!("mass {}\n", format_significant(a.mass)));
        }
        out.push_str(&format!("total mass           {}\n", format_significant(self.total_mass)));
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub check: CheckReport,
    pub status: String,
    pub diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corner_blocks: Option<Vec<MatrixDump>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extensions: Option<Vec<MatrixDump>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verification_pass: Option<bool>,
}

impl SolveReport {
    pub fn render_text(&self, trace: bool) -> String {
        let mut out = String::new();
        self.check.render_text(&mut out);
        out.push_str(&format!("status               {}\n", self.status));
        if trace {
            for d in &self.diagnostics {
                out.push_str(&format!("trace                {d}\n"));
            }
        }
        if let Some(blocks) = &self.corner_blocks {
            for (i, b) in blocks.iter().enumerate() {
                b.render_text(&format!("corner C_{}", i + 1), &mut out);
            }
        }
        if let Some(exts) = &self.extensions {
            for (i, e) in exts.iter().enumerate() {
                e.render_text(&format!("extension R_{}", i + 1), &mut out);
            }
        }
        if let Some(m) = &self.measure {
            m.render_text(&mut out);
        }
        if let Some(dev) = self.verification_deviation {
            out.push_str(&format!(
                "verification         {} (max deviation {})\n",
                verdict(self.verification_pass.unwrap_or(false)),
                format_significant(dev)
            ));
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundtripReport {
    pub solve: SolveReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extension_dimensionally_stable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roundtrip_deviation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub roundtrip_pass: Option<bool>,
    pub skipped: bool,
}

impl RoundtripReport {
    pub fn render_text(&self, trace: bool) -> String {
        let mut out = self.solve.render_text(trace);
        if self.skipped {
            out.push_str("roundtrip            skipped (no canonical solution)\n");
            return out;
        }
        if let Some(stable) = self.extension_dimensionally_stable {
            out.push_str(&format!("extension stable     {}\n", verdict(stable)));
        }
        if let Some(dev) = self.roundtrip_deviation {
            out.push_str(&format!(
                "roundtrip            {} (max deviation {})\n",
                verdict(self.roundtrip_pass.unwrap_or(false)),
                format_significant(dev)
            ));
        }
        out
    }
}
