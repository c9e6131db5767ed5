//! End-to-end scenarios: build a base code, lift it, store a random file,
//! verify everything, audit repair bandwidth, and compare the stored file size
//! against the lifting bound.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytics::{rational_serde, Rational};
use crate::codes::{toy, MdsMsrCode, RbtMbrCode};
use crate::error::{Error, Result};
use crate::gf::Gf256;
use crate::lift::{LiftVariant, LiftedCode};
use crate::model::{
    repair_node, subsets, verify_all, BetaProfile, CodeParams, Coverage, RegeneratingCode, ReportSummary,
    StorageInstance, VerificationReport,
};

pub const DEFAULT_SEED: u64 = 42;

/// Enumeration cap for reconstruction subsets and per-node helper sets.
pub const ENUMERATION_CAP: usize = 500;

/// A base code, as written on the command line: `toy`, `msr:N,K` or `mbr:N,K`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaseCode {
    Toy,
    Msr { n: usize, k: usize },
    Mbr { n: usize, k: usize },
}

impl BaseCode {
    pub fn build(&self) -> Result<Arc<dyn RegeneratingCode>> {
        Ok(match *self {
            BaseCode::Toy => Arc::new(toy()),
            BaseCode::Msr { n, k } => Arc::new(MdsMsrCode::new(n, k, 1)?),
            BaseCode::Mbr { n, k } => Arc::new(RbtMbrCode::new(n, k)?),
        })
    }
}

impl FromStr for BaseCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "toy" {
            return Ok(BaseCode::Toy);
        }
        let bad = || Error::InvalidParams(format!("base code must be toy, msr:N,K or mbr:N,K; got `{s}`"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let (n, k) = rest.split_once(',').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        let k: usize = k.trim().parse().map_err(|_| bad())?;
        match kind {
            "msr" => Ok(BaseCode::Msr { n, k }),
            "mbr" => Ok(BaseCode::Mbr { n, k }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for BaseCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BaseCode::Toy => f.write_str("toy"),
            BaseCode::Msr { n, k } => write!(f, "msr:{n},{k}"),
            BaseCode::Mbr { n, k } => write!(f, "mbr:{n},{k}"),
        }
    }
}

/// A registered base code plus the lifts applied to it.
#[derive(Clone, Copy, Debug)]
pub struct Scenario {
    pub name: &'static str,
    pub base: BaseCode,
    pub chain: &'static [LiftVariant],
    pub description: &'static str,
}

use LiftVariant::{Cyclic, Permutation};

pub const SCENARIOS: &[Scenario] = &[
    Scenario { name: "toy-322", base: BaseCode::Toy, chain: &[], description: "x, y, x+y over three nodes" },
    Scenario { name: "msr-522", base: BaseCode::Msr { n: 5, k: 2 }, chain: &[], description: "MDS MSR code, d = k" },
    Scenario {
        name: "mbr-423",
        base: BaseCode::Mbr { n: 4, k: 2 },
        chain: &[],
        description: "repair-by-transfer MBR code",
    },
    Scenario {
        name: "mbr-534",
        base: BaseCode::Mbr { n: 5, k: 3 },
        chain: &[],
        description: "repair-by-transfer MBR code",
    },
    Scenario {
        name: "toy-cyclic-433",
        base: BaseCode::Toy,
        chain: &[Cyclic],
        description: "shifted-copies lift of the toy code",
    },
    Scenario {
        name: "toy-perm-433",
        base: BaseCode::Toy,
        chain: &[Permutation],
        description: "all-permutations lift of the toy code",
    },
    Scenario {
        name: "toy-cyclic-544",
        base: BaseCode::Toy,
        chain: &[Cyclic, Cyclic],
        description: "two shifted-copies lifts of the toy code",
    },
    Scenario {
        name: "toy-cyclic-655",
        base: BaseCode::Toy,
        chain: &[Cyclic, Cyclic, Cyclic],
        description: "three shifted-copies lifts of the toy code",
    },
    Scenario {
        name: "mbr-cyclic-534",
        base: BaseCode::Mbr { n: 4, k: 2 },
        chain: &[Cyclic],
        description: "shifted-copies lift of the (4,2,3) MBR code",
    },
    Scenario {
        name: "msr-perm-633",
        base: BaseCode::Msr { n: 5, k: 2 },
        chain: &[Permutation],
        description: "all-permutations lift of the (5,2,2) MSR code",
    },
    Scenario {
        name: "msr-cyclic-533",
        base: BaseCode::Msr { n: 4, k: 2 },
        chain: &[Cyclic],
        description: "shifted-copies lift of the (4,2,2) MSR code; helpers carry unequal loads",
    },
];

pub fn scenario(name: &str) -> Result<&'static Scenario> {
    SCENARIOS.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

impl Scenario {
    /// Every stage of the chain, base first.
    pub fn stages(&self) -> Result<Vec<Arc<dyn RegeneratingCode>>> {
        let mut stages = vec![self.base.build()?];
        for &variant in self.chain {
            let prev = stages.last().expect("base stage").clone();
            stages.push(Arc::new(LiftedCode::new(prev, variant)?));
        }
        Ok(stages)
    }

    pub fn build(&self) -> Result<Arc<dyn RegeneratingCode>> {
        Ok(self.stages()?.pop().expect("at least the base stage"))
    }
}

/// A seeded random file of `size` symbols.
pub fn random_file(size: usize, seed: u64) -> Vec<Gf256> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..size).map(|_| Gf256(rng.random())).collect()
}

/// One stage of a lift chain.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainStep {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    pub alpha: usize,
    pub gamma: usize,
    pub file_size: usize,
    pub beta: BetaProfile,
    /// The lift that produced this stage; `None` for the base code.
    pub variant: Option<LiftVariant>,
}

impl ChainStep {
    fn new(p: &CodeParams, variant: Option<LiftVariant>) -> Self {
        ChainStep {
            n: p.n,
            k: p.k,
            d: p.d,
            alpha: p.max_alpha(),
            gamma: p.gamma,
            file_size: p.file_size,
            beta: p.beta,
            variant,
        }
    }
}

fn ratio(a: usize, b: usize) -> Rational {
    Rational::new(BigInt::from(a), BigInt::from(b))
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Per-helper bandwidth as stated for the permutation lift: `n·n!·β` with the
/// base `n` and `β`. `None` when the last step is not a permutation lift of a
/// homogeneous code. For an unlifted code this is just its own `β`.
fn stated_beta(stages: &[Arc<dyn RegeneratingCode>], chain: &[LiftVariant]) -> Option<Rational> {
    match chain.last() {
        None => stages[0].params().beta().map(|b| ratio(b, 1)),
        Some(LiftVariant::Permutation) => {
            let prev = stages[stages.len() - 2].params();
            prev.beta().map(|b| ratio(prev.n * factorial(prev.n) * b, 1))
        }
        Some(LiftVariant::Cyclic) => None,
    }
}

/// Symbols each helper sent in one repair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HelperProfile {
    pub helpers: Vec<usize>,
    pub sent: BTreeMap<usize, usize>,
    pub total: usize,
}

/// Per-helper bandwidth of repairing one node, over its admissible helper sets.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthAudit {
    pub failed: usize,
    pub gamma: usize,
    pub profiles: Vec<HelperProfile>,
    /// Largest amount any single helper sent.
    pub measured_beta2: usize,
    #[serde(with = "rational_serde::option")]
    pub stated_beta2: Option<Rational>,
    /// Every helper sent the same amount in every profile.
    pub balanced: bool,
    pub sampled: bool,
}

pub fn bandwidth_audit(
    code: &dyn RegeneratingCode,
    instance: &StorageInstance,
    failed: usize,
    coverage: Coverage,
) -> Result<BandwidthAudit> {
    let p = &instance.params;
    p.check_node(failed)?;
    let pool: Vec<usize> = (1..=p.n).filter(|&j| j != failed).collect();
    let (sets, sampled) = subsets(&pool, p.d, coverage, failed as u64);
    let mut profiles = Vec::with_capacity(sets.len());
    for helpers in sets {
        let trace = repair_node(code, instance, failed, &helpers)?;
        profiles.push(HelperProfile { total: trace.total_sent(), sent: trace.sent, helpers });
    }
    let measured_beta2 = profiles.iter().flat_map(|pr| pr.sent.values().copied()).max().unwrap_or(0);
    let balanced = profiles.iter().all(|pr| {
        let mut it = pr.sent.values();
        let first = it.next();
        it.all(|v| Some(v) == first)
    });
    Ok(BandwidthAudit { failed, gamma: p.gamma, profiles, measured_beta2, stated_beta2: None, balanced, sampled })
}

/// A stored symbol to flip before verification.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corruption {
    pub node: usize,
    pub offset: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SuiteResult {
    pub scenario: String,
    pub code_id: String,
    pub chain: Vec<ChainStep>,
    pub seed: u64,
    pub corruption: Option<Corruption>,
    pub report: ReportSummary,
    pub achieved_b: usize,
    pub alpha: usize,
    /// `B / α` of the final code.
    #[serde(with = "rational_serde")]
    pub normalized_rate: Rational,
    /// `n_final / n_base`.
    #[serde(with = "rational_serde")]
    pub lift_factor: Rational,
    /// `lift_factor` times the base code's `B / α`.
    #[serde(with = "rational_serde")]
    pub predicted_bound: Rational,
    #[serde(with = "rational_serde::option")]
    pub stated_beta2: Option<Rational>,
    #[serde(with = "rational_serde")]
    pub measured_beta2: Rational,
    pub helpers_balanced: bool,
    pub pass: bool,
}

impl SuiteResult {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("suite result serializes")
    }

    /// Human-readable summary for the terminal.
    pub fn table(&self) -> String {
        let last = self.chain.last().expect("non-empty chain");
        let mut out = String::new();
        let chain: Vec<String> = self
            .chain
            .iter()
            .map(|s| match s.variant {
                None => format!("({},{},{})", s.n, s.k, s.d),
                Some(v) => format!("-{v}-> ({},{},{})", s.n, s.k, s.d),
            })
            .collect();
        let _ = writeln!(out, "{:<18}{}", "scenario", self.scenario);
        let _ = writeln!(out, "{:<18}{}", "code", self.code_id);
        let _ = writeln!(out, "{:<18}{}", "chain", chain.join(" "));
        let _ = writeln!(out, "{:<18}{}", "params", self.report.params);
        let _ = writeln!(
            out,
            "{:<18}{} run, {} failed{}",
            "checks",
            self.report.total_checks,
            self.report.failures.len(),
            if self.report.sampled { " (sampled)" } else { "" }
        );
        let _ = writeln!(
            out,
            "{:<18}max total {} (gamma {}), max per helper {}",
            "bandwidth", self.report.max_bandwidth_used, last.gamma, self.report.per_helper_max
        );
        let _ = writeln!(
            out,
            "{:<18}{} (bound {}, factor {})",
            "B/alpha", self.normalized_rate, self.predicted_bound, self.lift_factor
        );
        let stated = self.stated_beta2.as_ref().map_or("-".to_string(), |b| b.to_string());
        let _ = writeln!(
            out,
            "{:<18}measured {}, stated {}, balanced {}",
            "beta2", self.measured_beta2, stated, self.helpers_balanced
        );
        if let Some(c) = self.corruption {
            let _ = writeln!(out, "{:<18}node {} offset {}", "corrupted", c.node, c.offset);
        }
        for f in self.report.failures.iter().take(5) {
            let _ = writeln!(out, "{:<18}{}", "failure", serde_json::to_string(f).unwrap_or_default());
        }
        let _ = writeln!(out, "{:<18}{}", "result", if self.pass { "PASS" } else { "FAIL" });
        out
    }
}

pub fn run_construction_suite(name: &str, seed: u64) -> Result<SuiteResult> {
    run_construction_suite_with(name, seed, None)
}

/// Runs a scenario, optionally flipping one stored symbol first.
pub fn run_construction_suite_with(name: &str, seed: u64, corruption: Option<Corruption>) -> Result<SuiteResult> {
    let sc = scenario(name)?;
    let stages = sc.stages()?;
    let code = stages.last().expect("base stage").clone();
    let params = code.params().clone();
    let mut instance = code.store(&random_file(params.file_size, seed))?;
    if let Some(c) = corruption {
        instance.corrupt(c.node, c.offset, 0x01)?;
    }

    let coverage = Coverage::Capped { limit: ENUMERATION_CAP, seed };
    let report: VerificationReport = verify_all(code.as_ref(), &instance, coverage);

    let mut measured = 0usize;
    let mut balanced = true;
    if report.all_pass {
        for failed in 1..=params.n {
            let audit = bandwidth_audit(code.as_ref(), &instance, failed, coverage)?;
            measured = measured.max(audit.measured_beta2);
            balanced &= audit.balanced;
        }
    }

    let base = stages[0].params();
    let alpha = params.uniform_alpha().ok_or_else(|| Error::InvalidParams("lifted code is not uniform".into()))?;
    let base_alpha = base.uniform_alpha().ok_or_else(|| Error::InvalidParams("base code is not uniform".into()))?;
    let normalized_rate = ratio(params.file_size, alpha);
    let lift_factor = ratio(params.n, base.n);
    let predicted_bound = &lift_factor * ratio(base.file_size, base_alpha);
    let pass = report.all_pass && normalized_rate >= predicted_bound;

    Ok(SuiteResult {
        scenario: sc.name.to_string(),
        code_id: code.code_id(),
        chain: stages
            .iter()
            .enumerate()
            .map(|(i, s)| ChainStep::new(s.params(), i.checked_sub(1).map(|j| sc.chain[j])))
            .collect(),
        seed,
        corruption,
        report: report.summary(),
        achieved_b: params.file_size,
        alpha,
        normalized_rate,
        lift_factor,
        predicted_bound,
        stated_beta2: stated_beta(&stages, sc.chain),
        measured_beta2: ratio(measured, 1),
        helpers_balanced: balanced,
        pass,
    })
}

/// Audits the repair of `failed` in a registered scenario, including the
/// stated per-helper figure for comparison.
pub fn audit_scenario(name: &str, failed: usize, seed: u64) -> Result<BandwidthAudit> {
    let sc = scenario(name)?;
    let stages = sc.stages()?;
    let code = stages.last().expect("base stage");
    let instance = code.store(&random_file(code.params().file_size, seed))?;
    let mut audit = bandwidth_audit(code.as_ref(), &instance, failed, Coverage::Capped { limit: ENUMERATION_CAP, seed })?;
    audit.stated_beta2 = stated_beta(&stages, sc.chain);
    Ok(audit)
}

impl BandwidthAudit {
    pub fn table(&self) -> String {
        let mut out = String::new();
        let stated = self.stated_beta2.as_ref().map_or("-".to_string(), |b| b.to_string());
        let _ = writeln!(
            out,
            "failed node {}: gamma {}, measured per-helper max {}, stated {}, balanced {}",
            self.failed, self.gamma, self.measured_beta2, stated, self.balanced
        );
        for pr in &self.profiles {
            let sent: Vec<String> = pr.sent.iter().map(|(h, c)| format!("{h}:{c}")).collect();
            let _ = writeln!(out, "  helpers {:?} -> {} (total {})", pr.helpers, sent.join(" "), pr.total);
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("audit serializes")
    }
}
