//! Flat `[section]` / `key = value` run configuration.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use msft_core::kernels::{BaseKind, MomentumMode};
use msft_core::lattice::Boundary;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowsMode {
    /// Center row plus `extra_rows` random rows.
    Center,
    /// Every row; errors for the center row.
    Full,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleMode {
    GaussianFree,
    Metropolis,
}

impl OracleMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMode::GaussianFree => "gaussian_free",
            OracleMode::Metropolis => "metropolis",
        }
    }
}

impl FromStr for OracleMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "gaussian_free" => Ok(OracleMode::GaussianFree),
            "metropolis" => Ok(OracleMode::Metropolis),
            _ => Err(format!("unknown oracle mode '{s}'")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramSource {
    /// Free kernel divided by beta.
    Exact,
    /// Accumulated two-point function of a previous run.
    Sampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub extent: usize,
    pub boundary: Boundary,
    pub kind: BaseKind,
    pub mass: f64,
    pub alpha: f64,
    pub momentum_mode: MomentumMode,
    pub pv_displacement: f64,
    pub beta: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub dlambda: f64,
    pub n_equil: u64,
    pub n_prod: u64,
    pub seed: u64,
    pub checkpoint_every: u64,
    pub thin: u64,
    pub rows: RowsMode,
    pub extra_rows: usize,
    pub block_len: u64,
    pub oracle_mode: OracleMode,
    pub oracle_samples: u64,
    pub proposal_width: f64,
    pub gram_source: GramSource,
    pub j_max: usize,
    pub alphas: Vec<f64>,
    pub causality_threshold: f64,
    pub output: PathBuf,
    pub kernel_cache: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            extent: 9,
            boundary: Boundary::Periodic,
            kind: BaseKind::C,
            mass: 1.0,
            alpha: 1.0 / 9.0,
            momentum_mode: MomentumMode::Brillouin,
            pv_displacement: 1.0 / 36.0,
            beta: 1.0,
            kappa1: 0.0,
            kappa2: 0.0,
            dlambda: 0.01,
            n_equil: 250_000,
            n_prod: 1_000_000,
            seed: 1,
            checkpoint_every: 10_000,
            thin: 1,
            rows: RowsMode::Center,
            extra_rows: 0,
            block_len: 1000,
            oracle_mode: OracleMode::GaussianFree,
            oracle_samples: 100_000,
            proposal_width: 0.5,
            gram_source: GramSource::Exact,
            j_max: 4,
            alphas: vec![1.0 / 9.0, 1.0 / 27.0, 1.0 / 81.0],
            causality_threshold: 10.0,
            output: PathBuf::from("out"),
            kernel_cache: PathBuf::from("kernel-cache"),
        }
    }
}

/// Reals may be written as fractions, e.g. `1/9`.
fn parse_real(s: &str) -> Result<f64, String> {
    let v = match s.split_once('/') {
        Some((a, b)) => {
            let a: f64 = a.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            let b: f64 = b.trim().parse().map_err(|_| format!("bad number '{s}'"))?;
            a / b
        }
        None => s.parse().map_err(|_| format!("bad number '{s}'"))?,
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

fn parse_int<T: FromStr>(s: &str) -> Result<T, String> {
    s.replace('_', "").parse().map_err(|_| format!("bad integer '{s}'"))
}

fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|p| parse_real(p.trim())).collect()
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ")
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split(['#', ';']).next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                section = name.trim().to_string();
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(&format!("{section}.{}", key.trim()), value.trim())
                .map_err(|e| CliError::Validation(format!("line {}: {e}", lineno + 1)))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Set one dotted `section.key` to a textual value.
    pub fn set(&mut self, dotted: &str, value: &str) -> Result<(), String> {
        let v = value;
        match dotted {
            "lattice.extent" => self.extent = parse_int(v)?,
            "lattice.boundary" => self.boundary = v.parse().map_err(|_| format!("bad boundary '{v}'"))?,
            "kernel.kind" => self.kind = v.parse().map_err(|_| format!("bad kernel kind '{v}'"))?,
            "kernel.mass" => self.mass = parse_real(v)?,
            "kernel.alpha" => self.alpha = parse_real(v)?,
            "kernel.momentum_mode" => {
                self.momentum_mode = v.parse().map_err(|_| format!("bad momentum mode '{v}'"))?
            }
            "kernel.pv_displacement" => self.pv_displacement = parse_real(v)?,
            "model.beta" => self.beta = parse_real(v)?,
            "model.kappa1" => self.kappa1 = parse_real(v)?,
            "model.kappa2" => self.kappa2 = parse_real(v)?,
            "dynamics.dlambda" => self.dlambda = parse_real(v)?,
            "dynamics.n_equil" => self.n_equil = parse_int(v)?,
            "dynamics.n_prod" => self.n_prod = parse_int(v)?,
            "dynamics.seed" => self.seed = parse_int(v)?,
            "dynamics.checkpoint_every" => self.checkpoint_every = parse_int(v)?,
            "dynamics.thin" => self.thin = parse_int(v)?,
            "measure.rows" => {
                self.rows = match v {
                    "center" => RowsMode::Center,
                    "full" => RowsMode::Full,
                    _ => return Err(format!("bad rows mode '{v}'")),
                }
            }
            "measure.extra_rows" => self.extra_rows = parse_int(v)?,
            "measure.block_len" => self.block_len = parse_int(v)?,
            "oracle.mode" => self.oracle_mode = v.parse()?,
            "oracle.samples" => self.oracle_samples = parse_int(v)?,
            "oracle.proposal_width" => self.proposal_width = parse_real(v)?,
            "algebra.source" => {
                self.gram_source = match v {
                    "exact" => GramSource::Exact,
                    "sampled" => GramSource::Sampled,
                    _ => return Err(format!("bad gram source '{v}'")),
                }
            }
            "algebra.j_max" => self.j_max = parse_int(v)?,
            "algebra.alphas" => self.alphas = parse_list(v)?,
            "algebra.causality_threshold" => self.causality_threshold = parse_real(v)?,
            "paths.output" => self.output = PathBuf::from(v),
            "paths.kernel_cache" => self.kernel_cache = PathBuf::from(v),
            _ => return Err(format!("unknown key '{dotted}'")),
        }
        Ok(())
    }

    /// Apply `section.key=value` overrides, then revalidate.
    pub fn with_overrides(mut self, overrides: &[String]) -> Result<Self, CliError> {
        for o in overrides {
            let (k, v) = o
                .split_once('=')
                .ok_or_else(|| CliError::Validation(format!("override '{o}' is not section.key=value")))?;
            self.set(k.trim(), v.trim()).map_err(CliError::Validation)?;
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Validation(m));
        let positive = [
            ("kernel.mass", self.mass),
            ("kernel.alpha", self.alpha),
            ("kernel.pv_displacement", self.pv_displacement),
            ("model.beta", self.beta),
            ("dynamics.dlambda", self.dlambda),
            ("oracle.proposal_width", self.proposal_width),
            ("algebra.causality_threshold", self.causality_threshold),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return bad(format!("{name} must be positive, got {v}"));
            }
        }
        if self.extent == 0 {
            return bad("lattice.extent must be at least 1".into());
        }
        if self.kappa2 < 0.0 {
            return bad(format!("model.kappa2 must be non-negative, got {}", self.kappa2));
        }
        for (name, v) in [("dynamics.thin", self.thin), ("measure.block_len", self.block_len)] {
            if v == 0 {
                return bad(format!("{name} must be at least 1"));
            }
        }
        if self.alphas.is_empty() || self.alphas.iter().any(|a| !(*a > 0.0)) {
            return bad("algebra.alphas must be a non-empty list of positive reals".into());
        }
        if self.j_max == 0 {
            return bad("algebra.j_max must be at least 1".into());
        }
        Ok(())
    }

    /// Fully resolved config; parsing it back yields an identical value.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let rows = match self.rows {
            RowsMode::Center => "center",
            RowsMode::Full => "full",
        };
        let source = match self.gram_source {
            GramSource::Exact => "exact",
            GramSource::Sampled => "sampled",
        };
        let _ = write!(
            s,
            "[lattice]\nextent = {}\nboundary = {}\n\n\
             [kernel]\nkind = {}\nmass = {:?}\nalpha = {:?}\nmomentum_mode = {}\npv_displacement = {:?}\n\n\
             [model]\nbeta = {:?}\nkappa1 = {:?}\nkappa2 = {:?}\n\n\
             [dynamics]\ndlambda = {:?}\nn_equil = {}\nn_prod = {}\nseed = {}\ncheckpoint_every = {}\nthin = {}\n\n\
             [measure]\nrows = {}\nextra_rows = {}\nblock_len = {}\n\n\
             [oracle]\nmode = {}\nsamples = {}\nproposal_width = {:?}\n\n\
             [algebra]\nsource = {}\nj_max = {}\nalphas = {}\ncausality_threshold = {:?}\n\n\
             [paths]\noutput = {}\nkernel_cache = {}\n",
            self.extent,
            self.boundary.as_str(),
            self.kind.as_str(),
            self.mass,
            self.alpha,
            self.momentum_mode.as_str(),
            self.pv_displacement,
            self.beta,
            self.kappa1,
            self.kappa2,
            self.dlambda,
            self.n_equil,
            self.n_prod,
            self.seed,
            self.checkpoint_every,
            self.thin,
            rows,
            self.extra_rows,
            self.block_len,
            self.oracle_mode.as_str(),
            self.oracle_samples,
            self.proposal_width,
            source,
            self.j_max,
            fmt_list(&self.alphas),
            self.causality_threshold,
            self.output.display(),
            self.kernel_cache.display(),
        );
        s
    }

    /// Canonical description of everything that determines the kernel matrix.
    pub fn kernel_key(&self) -> String {
        // kernel C ignores the momentum mode; A and B ignore the displacement
        let (mode, pv) = match self.kind {
            BaseKind::C => ("-", format!("{:?}", self.pv_displacement)),
            _ => (self.momentum_mode.as_str(), "-".to_string()),
        };
        format!(
            "kind={} extent={} boundary={} mass={:?} alpha={:?} mode={} pv={}",
            self.kind.as_str(),
            self.extent,
            self.boundary.as_str(),
            self.mass,
            self.alpha,
            mode,
            pv
        )
    }
}
