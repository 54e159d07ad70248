//! Experiment configuration: one TOML file with a `[group]` table, global
//! keys, and one optional table per subcommand.

use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use cayperc::group::{
    standard_generators, symmetrize, Element, GeneratorSet, GroupFamily, GroupModel,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub group: Option<GroupSpec>,
    /// Window radius for ball-based commands.
    pub radius: Option<u32>,
    /// Radius for the bounded minimality search when no exact test applies.
    #[serde(default = "default_minimality_radius")]
    pub minimality_radius: u32,
    #[serde(default)]
    pub growth: GrowthParams,
    #[serde(default)]
    pub kernel: KernelParams,
    #[serde(default)]
    pub green: ScalesParams,
    #[serde(default)]
    pub verify_blocks: VerifyParams,
    #[serde(default)]
    pub profile: ProfileParams,
    #[serde(default)]
    pub isop_check: ProfileParams,
    #[serde(default)]
    pub pn_check: PnParams,
    #[serde(default)]
    pub gff_sample: GffParams,
    #[serde(default)]
    pub schedules: ScheduleParams,
    #[serde(default)]
    pub russo: RussoParams,
    #[serde(default)]
    pub percolate: PercolateParams,
    #[serde(default)]
    pub pc: PcParams,
    #[serde(default)]
    pub comparison: ComparisonParams,
    #[serde(default)]
    pub quotient: QuotientParams,
    #[serde(default)]
    pub return_bounds: ReturnParams,
}

fn default_minimality_radius() -> u32 {
    4
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSpec {
    /// `free_abelian`, `heisenberg`, `free_group` or `product`.
    pub family: String,
    pub rank: Option<usize>,
    pub factors: Option<Vec<GroupSpec>>,
    /// Integer tuples, `[a, b, c]` triples, letter strings, or per-factor
    /// lists for products. Standard generators when absent.
    pub generators: Option<Vec<toml::Value>>,
}

impl GroupSpec {
    pub fn family(&self) -> Result<GroupFamily> {
        Ok(match self.family.as_str() {
            "free_abelian" => GroupFamily::FreeAbelian {
                rank: self
                    .rank
                    .ok_or_else(|| anyhow!("free_abelian needs `rank`"))?,
            },
            "heisenberg" => GroupFamily::Heisenberg3,
            "free_group" => GroupFamily::FreeGroup {
                rank: self
                    .rank
                    .ok_or_else(|| anyhow!("free_group needs `rank`"))?,
            },
            "product" => GroupFamily::DirectProduct {
                factors: self
                    .factors
                    .as_ref()
                    .ok_or_else(|| anyhow!("product needs `factors`"))?
                    .iter()
                    .map(GroupSpec::family)
                    .collect::<Result<_>>()?,
            },
            other => bail!("unknown group family {other:?}"),
        })
    }

    pub fn build(&self) -> Result<(GroupModel, GeneratorSet)> {
        let model = GroupModel::new(self.family()?)?;
        let gens = match &self.generators {
            None => standard_generators(&model),
            Some(list) => {
                let raw = list
                    .iter()
                    .map(|v| parse_element(model.family(), v))
                    .collect::<Result<Vec<_>>>()?;
                symmetrize(&model, &raw)?
            }
        };
        Ok((model, gens))
    }
}

fn ints(v: &toml::Value) -> Result<Vec<i64>> {
    v.as_array()
        .ok_or_else(|| anyhow!("expected an integer array, got {v}"))?
        .iter()
        .map(|x| {
            x.as_integer()
                .ok_or_else(|| anyhow!("expected an integer, got {x}"))
        })
        .collect()
}

fn parse_element(family: &GroupFamily, v: &toml::Value) -> Result<Element> {
    Ok(match family {
        GroupFamily::FreeAbelian { .. } => Element::Vector(ints(v)?),
        GroupFamily::Heisenberg3 => {
            let x = ints(v)?;
            let [a, b, c] = x[..] else {
                bail!("heisenberg generators are [a, b, c] triples")
            };
            Element::Heisenberg([a, b, c])
        }
        GroupFamily::FreeGroup { .. } => Element::word_from_letters(
            v.as_str()
                .ok_or_else(|| anyhow!("free group generators are letter strings"))?,
        )?,
        GroupFamily::DirectProduct { factors } => {
            let parts = v
                .as_array()
                .ok_or_else(|| anyhow!("product generators are per-factor lists"))?;
            if parts.len() != factors.len() {
                bail!(
                    "product generator has {} parts for {} factors",
                    parts.len(),
                    factors.len()
                );
            }
            Element::Tuple(
                factors
                    .iter()
                    .zip(parts)
                    .map(|(f, p)| parse_element(f, p))
                    .collect::<Result<_>>()?,
            )
        }
    })
}

/// An explicit list of values or an evenly spaced range.
#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { lo: f64, hi: f64, steps: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        match self {
            Grid::List(v) => Ok(v.clone()),
            Grid::Range { lo, hi, steps } => {
                if *steps < 2 || !(lo < hi) {
                    bail!("grid range needs lo < hi and steps >= 2");
                }
                Ok((0..*steps)
                    .map(|k| lo + (hi - lo) * k as f64 / (*steps - 1) as f64)
                    .collect())
            }
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GrowthParams {
    pub n_max: u32,
}

impl Default for GrowthParams {
    fn default() -> Self {
        GrowthParams { n_max: 4 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct KernelParams {
    pub steps: u32,
    /// `exact` or `float`.
    pub arithmetic: String,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            steps: 4,
            arithmetic: "exact".into(),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalesParams {
    pub scales: u32,
}

impl Default for ScalesParams {
    fn default() -> Self {
        ScalesParams { scales: 3 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyParams {
    pub scales: Vec<u32>,
}

impl Default for VerifyParams {
    fn default() -> Self {
        VerifyParams {
            scales: vec![1, 2, 3],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProfileParams {
    pub s_max: usize,
    /// Sets visited per size beyond the exhaustive cap.
    pub heuristic_budget: Option<u64>,
}

impl Default for ProfileParams {
    fn default() -> Self {
        ProfileParams {
            s_max: 8,
            heuristic_budget: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PnParams {
    pub epsilons: Vec<f64>,
}

impl Default for PnParams {
    fn default() -> Self {
        PnParams {
            epsilons: vec![1.0, 0.5, 0.25],
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct GffParams {
    /// Truncation `N`; largest scale fitting the window when absent.
    pub scales: Option<u32>,
    pub samples: u64,
    /// Scales entering the pigeonhole check; all of them when absent.
    pub domination_scales: Option<u32>,
}

impl Default for GffParams {
    fn default() -> Self {
        GffParams {
            scales: None,
            samples: 10,
            domination_scales: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScheduleParams {
    pub scales: u32,
    /// Overrides the derived `C_0 = 16/a`.
    pub c0: Option<f64>,
}

impl Default for ScheduleParams {
    fn default() -> Self {
        ScheduleParams {
            scales: 3,
            c0: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RussoParams {
    /// `clock` (derivative in t) or `level` (derivative in λ).
    pub variant: String,
    /// Bernoulli density `1 - e^{-t}`; converted to `t`.
    pub p: Option<f64>,
    pub t: Option<f64>,
    pub n: u32,
    pub lambda: f64,
    pub delta: f64,
    pub samples: u64,
}

impl Default for RussoParams {
    fn default() -> Self {
        RussoParams {
            variant: "clock".into(),
            p: Some(0.6),
            t: None,
            n: 1,
            lambda: 0.0,
            delta: 0.05,
            samples: 100_000,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PercolateParams {
    /// `bernoulli`, `excursion` or `hybrid`.
    pub model: String,
    /// Bernoulli densities; one estimate per value.
    pub p: Option<Grid>,
    /// Excursion levels.
    pub h: Option<Grid>,
    pub t: f64,
    pub n: u32,
    pub lambda: f64,
    pub scales: Option<u32>,
    pub samples: u64,
}

impl Default for PercolateParams {
    fn default() -> Self {
        PercolateParams {
            model: "bernoulli".into(),
            p: None,
            h: None,
            t: 1.0,
            n: 1,
            lambda: 0.0,
            scales: None,
            samples: 1000,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PcParams {
    /// Box half-widths for `ℤ^d`, ball radii otherwise.
    pub sizes: Vec<u32>,
    pub grid: Grid,
    pub samples: u64,
    /// `face_crossing` or `origin_to_shell`; face crossing on boxes by default.
    pub event: Option<String>,
    /// Asserted interval for the estimate on the largest window.
    pub expect: Option<[f64; 2]>,
}

impl Default for PcParams {
    fn default() -> Self {
        PcParams {
            sizes: vec![16, 32, 64],
            grid: Grid::Range {
                lo: 0.01,
                hi: 0.99,
                steps: 99,
            },
            samples: 1000,
            event: None,
            expect: None,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ComparisonParams {
    pub scales: Option<u32>,
    pub epsilons: Vec<f64>,
    pub samples: u64,
}

impl Default for ComparisonParams {
    fn default() -> Self {
        ComparisonParams {
            scales: None,
            epsilons: vec![0.999, 0.5, 0.1, 0.01],
            samples: 1000,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuotientParams {
    /// Integer matrix of a homomorphism `ℤ^n → ℤ^m`, one row per target coordinate.
    pub matrix: Vec<Vec<i64>>,
    pub sizes: Vec<u32>,
    pub grid: Grid,
    pub samples: u64,
    /// Also assert a separation of three standard errors.
    pub require_separation: bool,
}

impl Default for QuotientParams {
    fn default() -> Self {
        QuotientParams {
            matrix: Vec::new(),
            sizes: vec![12, 24],
            grid: Grid::Range {
                lo: 0.01,
                hi: 0.99,
                steps: 99,
            },
            samples: 1000,
            require_separation: false,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReturnParams {
    pub n_max: u32,
}

impl Default for ReturnParams {
    fn default() -> Self {
        ReturnParams { n_max: 10 }
    }
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| anyhow!("`seed` is required (no wall-clock default)"))
    }

    pub fn group(&self) -> Result<(GroupModel, GeneratorSet)> {
        self.group
            .as_ref()
            .ok_or_else(|| anyhow!("a [group] table is required"))?
            .build()
    }

    pub fn radius(&self) -> Result<u32> {
        self.radius
            .ok_or_else(|| anyhow!("`radius` is required for this command"))
    }

    /// Checks the seed and the documented parameter ranges.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if self.workers == Some(0) {
            bail!("`workers` must be at least 1");
        }
        let positive = |name: &str, v: u64| {
            if v == 0 {
                bail!("{name} must be positive")
            } else {
                Ok(())
            }
        };
        positive("gff_sample.samples", self.gff_sample.samples)?;
        positive("russo.samples", self.russo.samples)?;
        positive("percolate.samples", self.percolate.samples)?;
        positive("pc.samples", self.pc.samples)?;
        positive("comparison.samples", self.comparison.samples)?;
        positive("quotient.samples", self.quotient.samples)?;
        positive("green.scales", self.green.scales as u64)?;
        positive("schedules.scales", self.schedules.scales as u64)?;
        if self.verify_blocks.scales.contains(&0) {
            bail!("verify_blocks.scales must be at least 1");
        }
        if let Some(p) = self.russo.p {
            if !(0.0..1.0).contains(&p) {
                bail!("russo.p must lie in [0, 1)");
            }
        }
        if !(self.russo.delta > 0.0) {
            bail!("russo.delta must be positive");
        }
        if self.pn_check.epsilons.iter().any(|e| !(*e > 0.0)) {
            bail!("pn_check.epsilons must be positive");
        }
        if self
            .comparison
            .epsilons
            .iter()
            .any(|e| !(*e > 0.0 && *e <= 1.0))
        {
            bail!("comparison.epsilons must lie in (0, 1]");
        }
        for (name, grid) in [
            ("pc.grid", &self.pc.grid),
            ("quotient.grid", &self.quotient.grid),
        ] {
            let v = grid.values().with_context(|| name.to_string())?;
            if v.iter().any(|p| !(0.0..=1.0).contains(p)) {
                bail!("{name} values must lie in [0, 1]");
            }
        }
        Ok(())
    }
}
