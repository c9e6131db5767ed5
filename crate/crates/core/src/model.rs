//! The distributed-storage code abstraction.
//!
//! A [`RegeneratingCode`] turns a file into `n` node contents, rebuilds the
//! file from any `k` nodes, and rebuilds any single node from `d` helpers.
//! Node indices are 1-based everywhere.
//!
//! Repairs read helper data only through [`HelperSet::read`], which counts
//! every symbol handed out. The resulting [`RepairTrace`] therefore reports
//! the bandwidth actually consumed, not a figure the code claims for itself.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::Range;

use itertools::Itertools;
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gf::Gf256;
use crate::lift::LiftVariant;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Field {
    #[serde(rename = "GF(2^8)")]
    Gf256,
}

/// How repair bandwidth is split across the `d` helpers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BetaProfile {
    /// Every helper sends at most `β` symbols and `γ = d·β`.
    Homogeneous(usize),
    /// Only the total `γ` is bounded; per-helper amounts may vary.
    Bounded,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeParams {
    pub n: usize,
    pub k: usize,
    pub d: usize,
    /// Symbols stored on each node, indexed from node 1.
    pub alpha_per_node: Vec<usize>,
    /// Total repair bandwidth in symbols.
    pub gamma: usize,
    pub beta: BetaProfile,
    /// Stored file size `B` in symbols.
    pub file_size: usize,
    pub field: Field,
}

impl CodeParams {
    pub fn new(
        n: usize,
        k: usize,
        d: usize,
        alpha_per_node: Vec<usize>,
        gamma: usize,
        beta: BetaProfile,
        file_size: usize,
    ) -> Result<Self> {
        if k == 0 || k > d || d >= n {
            return Err(Error::InvalidParams(format!("need 1 <= k <= d < n, got (n,k,d)=({n},{k},{d})")));
        }
        if alpha_per_node.len() != n {
            return Err(Error::InvalidParams(format!(
                "alpha profile has {} entries for {n} nodes",
                alpha_per_node.len()
            )));
        }
        if file_size == 0 {
            return Err(Error::InvalidParams("file size must be at least 1".into()));
        }
        if let BetaProfile::Homogeneous(beta) = beta {
            if gamma != d * beta {
                return Err(Error::InvalidParams(format!("gamma {gamma} != d*beta = {d}*{beta}")));
            }
        }
        Ok(CodeParams { n, k, d, alpha_per_node, gamma, beta, file_size, field: Field::Gf256 })
    }

    /// Symbols stored on 1-based node `node`.
    pub fn alpha(&self, node: usize) -> usize {
        self.alpha_per_node[node - 1]
    }

    /// The common node size, if every node stores the same amount.
    pub fn uniform_alpha(&self) -> Option<usize> {
        let first = *self.alpha_per_node.first()?;
        self.alpha_per_node.iter().all(|&a| a == first).then_some(first)
    }

    pub fn max_alpha(&self) -> usize {
        self.alpha_per_node.iter().copied().max().unwrap_or(0)
    }

    pub fn total_storage(&self) -> usize {
        self.alpha_per_node.iter().sum()
    }

    /// Per-helper cap, if the profile is homogeneous.
    pub fn beta(&self) -> Option<usize> {
        match self.beta {
            BetaProfile::Homogeneous(b) => Some(b),
            BetaProfile::Bounded => None,
        }
    }

    pub fn check_node(&self, node: usize) -> Result<()> {
        if node == 0 || node > self.n {
            return Err(Error::PositionOutOfRange { position: node, n: self.n });
        }
        Ok(())
    }

    /// Validates a reconstruction request: exactly `k` distinct in-range nodes
    /// whose contents have the declared sizes.
    pub fn check_reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<()> {
        if nodes.len() != self.k {
            return Err(Error::InvalidParams(format!(
                "reconstruction needs exactly {} nodes, got {}",
                self.k,
                nodes.len()
            )));
        }
        let mut seen = BTreeSet::new();
        for &(idx, content) in nodes {
            self.check_node(idx)?;
            if !seen.insert(idx) {
                return Err(Error::DuplicatePosition(idx));
            }
            if content.len() != self.alpha(idx) {
                return Err(Error::LengthMismatch { expected: self.alpha(idx), actual: content.len() });
            }
        }
        Ok(())
    }

    /// Validates a repair request: `d` distinct helpers, none of them the
    /// failed node, with contents of the declared sizes.
    pub fn check_repair(&self, failed: usize, helpers: &HelperSet<'_>) -> Result<()> {
        self.check_node(failed)?;
        if helpers.len() != self.d {
            return Err(Error::InvalidHelpers(format!("need exactly {} helpers, got {}", self.d, helpers.len())));
        }
        if helpers.contains(failed) {
            return Err(Error::InvalidHelpers(format!("failed node {failed} listed as a helper")));
        }
        for idx in helpers.indices() {
            self.check_node(idx)?;
            let len = helpers.content_len(idx);
            if len != self.alpha(idx) {
                return Err(Error::LengthMismatch { expected: self.alpha(idx), actual: len });
            }
        }
        Ok(())
    }
}

impl fmt::Display for CodeParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(n,k,d)=({},{},{})", self.n, self.k, self.d)?;
        match self.uniform_alpha() {
            Some(a) => write!(f, " alpha={a}")?,
            None => write!(f, " alpha={:?}", self.alpha_per_node)?,
        }
        write!(f, " gamma={} B={}", self.gamma, self.file_size)?;
        if let BetaProfile::Homogeneous(b) = self.beta {
            write!(f, " beta={b}")?;
        }
        Ok(())
    }
}

/// A node index paired with its stored content.
pub type NodeView<'a> = (usize, &'a [Gf256]);

/// Helper contents made available to a repair, with a running count of the
/// symbols each helper has transmitted.
#[derive(Debug)]
pub struct HelperSet<'a> {
    contents: BTreeMap<usize, &'a [Gf256]>,
    sent: BTreeMap<usize, usize>,
}

impl<'a> HelperSet<'a> {
    pub fn new(views: impl IntoIterator<Item = NodeView<'a>>) -> Result<Self> {
        let mut contents = BTreeMap::new();
        for (idx, content) in views {
            if contents.insert(idx, content).is_some() {
                return Err(Error::DuplicatePosition(idx));
            }
        }
        let sent = contents.keys().map(|&i| (i, 0)).collect();
        Ok(HelperSet { contents, sent })
    }

    pub fn len(&self) -> usize {
        self.contents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.contents.is_empty()
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.contents.contains_key(&idx)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.contents.keys().copied()
    }

    /// Size of a helper's content. This is metadata, not a transfer.
    pub fn content_len(&self, idx: usize) -> usize {
        self.contents.get(&idx).map_or(0, |c| c.len())
    }

    /// Transfers `range` of helper `idx`'s content to the newcomer.
    pub fn read(&mut self, idx: usize, range: Range<usize>) -> Result<&'a [Gf256]> {
        let content = *self
            .contents
            .get(&idx)
            .ok_or_else(|| Error::InvalidHelpers(format!("node {idx} is not a helper")))?;
        let slice = content
            .get(range.clone())
            .ok_or(Error::LengthMismatch { expected: range.end, actual: content.len() })?;
        *self.sent.get_mut(&idx).expect("sent tracks every helper") += slice.len();
        Ok(slice)
    }

    /// Transfers the helper's whole content.
    pub fn read_all(&mut self, idx: usize) -> Result<&'a [Gf256]> {
        let len = self.content_len(idx);
        self.read(idx, 0..len)
    }

    pub fn sent(&self) -> &BTreeMap<usize, usize> {
        &self.sent
    }

    pub fn total_sent(&self) -> usize {
        self.sent.values().sum()
    }

    /// Raw access for composite codes that hand a slice to a nested
    /// [`HelperSet`]; the nested set's counts must be folded back with
    /// [`HelperSet::charge`].
    pub(crate) fn raw(&self, idx: usize) -> &'a [Gf256] {
        self.contents[&idx]
    }

    pub(crate) fn charge(&mut self, idx: usize, count: usize) {
        *self.sent.get_mut(&idx).expect("sent tracks every helper") += count;
    }
}

/// The outcome of one single-node repair.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RepairTrace {
    pub failed: usize,
    pub helpers: Vec<usize>,
    pub sent: BTreeMap<usize, usize>,
    pub rebuilt: Vec<Gf256>,
}

impl RepairTrace {
    pub fn total_sent(&self) -> usize {
        self.sent.values().sum()
    }

    pub fn max_per_helper(&self) -> usize {
        self.sent.values().copied().max().unwrap_or(0)
    }
}

/// An exact-repair regenerating code.
pub trait RegeneratingCode: Send + Sync {
    fn params(&self) -> &CodeParams;

    /// Short human-readable identifier such as `msr(3,2)` or `cyclic(msr(3,2))`.
    fn code_id(&self) -> String;

    /// Encodes a `B`-symbol file into `n` node contents.
    fn encode(&self, file: &[Gf256]) -> Result<Vec<Vec<Gf256>>>;

    /// Recovers the file from exactly `k` nodes.
    fn reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Gf256>>;

    /// Rebuilds node `failed` from `d` helpers, reading only through `helpers`.
    fn repair(&self, failed: usize, helpers: &mut HelperSet<'_>) -> Result<Vec<Gf256>>;

    /// Lift steps applied on top of the base code, innermost first.
    fn lift_chain(&self) -> Vec<LiftVariant> {
        Vec::new()
    }

    /// Hex digest identifying the node layout, for golden comparisons.
    fn layout_digest(&self) -> String {
        use sha2::{Digest, Sha256};
        hex::encode(Sha256::digest(self.code_id().as_bytes()))
    }

    fn store(&self, file: &[Gf256]) -> Result<StorageInstance> {
        let params = self.params();
        if file.len() != params.file_size {
            return Err(Error::LengthMismatch { expected: params.file_size, actual: file.len() });
        }
        let nodes = self.encode(file)?;
        Ok(StorageInstance { params: params.clone(), nodes, file: file.to_vec(), code_id: self.code_id() })
    }
}

/// Runs a repair of `failed` on `instance` using the listed helper nodes and
/// returns the trace.
pub fn repair_node(
    code: &dyn RegeneratingCode,
    instance: &StorageInstance,
    failed: usize,
    helpers: &[usize],
) -> Result<RepairTrace> {
    let views = helpers
        .iter()
        .map(|&h| {
            instance.params.check_node(h)?;
            Ok((h, instance.node(h)))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut set = HelperSet::new(views)?;
    let rebuilt = code.repair(failed, &mut set)?;
    if rebuilt.len() != code.params().alpha(failed) {
        return Err(Error::LengthMismatch { expected: code.params().alpha(failed), actual: rebuilt.len() });
    }
    Ok(RepairTrace { failed, helpers: set.indices().collect(), sent: set.sent().clone(), rebuilt })
}

/// Reconstructs the file of `instance` from the listed nodes.
pub fn reconstruct_from(code: &dyn RegeneratingCode, instance: &StorageInstance, nodes: &[usize]) -> Result<Vec<Gf256>> {
    let views = nodes
        .iter()
        .map(|&j| {
            instance.params.check_node(j)?;
            Ok((j, instance.node(j)))
        })
        .collect::<Result<Vec<_>>>()?;
    code.reconstruct(&views)
}

/// An encoded file laid out over `n` nodes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageInstance {
    pub params: CodeParams,
    pub nodes: Vec<Vec<Gf256>>,
    pub file: Vec<Gf256>,
    pub code_id: String,
}

impl StorageInstance {
    /// Content of 1-based node `j`.
    pub fn node(&self, j: usize) -> &[Gf256] {
        &self.nodes[j - 1]
    }

    pub fn node_sizes(&self) -> Vec<usize> {
        self.nodes.iter().map(Vec::len).collect()
    }

    /// Flips one stored symbol (XOR with `mask`, which must be nonzero).
    pub fn corrupt(&mut self, node: usize, offset: usize, mask: u8) -> Result<()> {
        self.params.check_node(node)?;
        let content = &mut self.nodes[node - 1];
        let len = content.len();
        let sym = content
            .get_mut(offset)
            .ok_or(Error::LengthMismatch { expected: offset + 1, actual: len })?;
        sym.0 ^= mask;
        Ok(())
    }
}

/// How many subsets the verifiers visit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coverage {
    Exhaustive,
    /// Enumerate exhaustively up to `limit` subsets, otherwise draw a seeded
    /// sample of `limit` distinct subsets.
    Capped { limit: usize, seed: u64 },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Failure {
    Reconstruction { nodes: Vec<usize>, reason: String },
    Repair { failed: usize, helpers: Vec<usize>, reason: String },
}

/// Pass/fail matrix over reconstruction subsets and repair scenarios.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VerificationReport {
    pub params: CodeParams,
    pub reconstruction_results: BTreeMap<Vec<usize>, bool>,
    pub repair_results: BTreeMap<(usize, Vec<usize>), bool>,
    pub failures: Vec<Failure>,
    pub max_bandwidth_used: usize,
    pub per_helper_max: usize,
    /// True when some enumeration was sampled rather than exhaustive.
    pub sampled: bool,
    pub all_pass: bool,
}

/// JSON form of a [`VerificationReport`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportSummary {
    pub params: CodeParams,
    pub total_checks: usize,
    pub failures: Vec<Failure>,
    pub max_bandwidth_used: usize,
    pub per_helper_max: usize,
    pub sampled: bool,
    pub all_pass: bool,
}

impl VerificationReport {
    fn empty(params: &CodeParams) -> Self {
        VerificationReport {
            params: params.clone(),
            reconstruction_results: BTreeMap::new(),
            repair_results: BTreeMap::new(),
            failures: Vec::new(),
            max_bandwidth_used: 0,
            per_helper_max: 0,
            sampled: false,
            all_pass: true,
        }
    }

    pub fn total_checks(&self) -> usize {
        self.reconstruction_results.len() + self.repair_results.len()
    }

    pub fn merge(mut self, other: VerificationReport) -> Self {
        self.reconstruction_results.extend(other.reconstruction_results);
        self.repair_results.extend(other.repair_results);
        self.failures.extend(other.failures);
        self.max_bandwidth_used = self.max_bandwidth_used.max(other.max_bandwidth_used);
        self.per_helper_max = self.per_helper_max.max(other.per_helper_max);
        self.sampled |= other.sampled;
        self.refresh();
        self
    }

    fn refresh(&mut self) {
        self.all_pass = self.reconstruction_results.values().all(|&ok| ok) && self.repair_results.values().all(|&ok| ok);
    }

    pub fn summary(&self) -> ReportSummary {
        ReportSummary {
            params: self.params.clone(),
            total_checks: self.total_checks(),
            failures: self.failures.clone(),
            max_bandwidth_used: self.max_bandwidth_used,
            per_helper_max: self.per_helper_max,
            sampled: self.sampled,
            all_pass: self.all_pass,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.summary()).expect("report serializes")
    }
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// `k`-subsets of `pool` (sorted ascending), honouring `coverage`.
/// Returns the subsets and whether they were sampled.
pub(crate) fn subsets(pool: &[usize], k: usize, coverage: Coverage, salt: u64) -> (Vec<Vec<usize>>, bool) {
    let total = binomial(pool.len(), k);
    match coverage {
        Coverage::Capped { limit, seed } if total > limit => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15));
            let mut picked = BTreeSet::new();
            while picked.len() < limit {
                let mut s: Vec<usize> = index::sample(&mut rng, pool.len(), k).into_iter().map(|i| pool[i]).collect();
                s.sort_unstable();
                picked.insert(s);
            }
            (picked.into_iter().collect(), true)
        }
        _ => (pool.iter().copied().combinations(k).collect(), false),
    }
}

/// Checks that every `k`-subset of nodes recovers the stored file.
pub fn verify_reconstruction(code: &dyn RegeneratingCode, instance: &StorageInstance, coverage: Coverage) -> VerificationReport {
    let params = &instance.params;
    let mut report = VerificationReport::empty(params);
    let pool: Vec<usize> = (1..=params.n).collect();
    let (sets, sampled) = subsets(&pool, params.k, coverage, 0);
    report.sampled = sampled;
    for set in sets {
        let ok = match reconstruct_from(code, instance, &set) {
            Ok(file) if file == instance.file => true,
            Ok(_) => {
                report.failures.push(Failure::Reconstruction { nodes: set.clone(), reason: "file mismatch".into() });
                false
            }
            Err(e) => {
                report.failures.push(Failure::Reconstruction { nodes: set.clone(), reason: e.to_string() });
                false
            }
        };
        report.reconstruction_results.insert(set, ok);
    }
    report.refresh();
    report
}

/// Checks that every node is rebuilt bit-exactly from every admissible helper
/// set within the bandwidth budget.
pub fn verify_exact_repair(code: &dyn RegeneratingCode, instance: &StorageInstance, coverage: Coverage) -> VerificationReport {
    let params = &instance.params;
    let mut report = VerificationReport::empty(params);
    for failed in 1..=params.n {
        let pool: Vec<usize> = (1..=params.n).filter(|&j| j != failed).collect();
        let (sets, sampled) = subsets(&pool, params.d, coverage, failed as u64);
        report.sampled |= sampled;
        for helpers in sets {
            let ok = match repair_node(code, instance, failed, &helpers) {
                Ok(trace) => {
                    report.max_bandwidth_used = report.max_bandwidth_used.max(trace.total_sent());
                    report.per_helper_max = report.per_helper_max.max(trace.max_per_helper());
                    let mut reasons = Vec::new();
                    if trace.rebuilt != instance.node(failed) {
                        reasons.push("rebuilt content differs".to_string());
                    }
                    if trace.total_sent() > params.gamma {
                        reasons.push(format!("sent {} > gamma {}", trace.total_sent(), params.gamma));
                    }
                    if let Some(beta) = params.beta() {
                        if trace.max_per_helper() > beta {
                            reasons.push(format!("helper sent {} > beta {}", trace.max_per_helper(), beta));
                        }
                    }
                    let ok = reasons.is_empty();
                    if !ok {
                        report.failures.push(Failure::Repair {
                            failed,
                            helpers: helpers.clone(),
                            reason: reasons.join("; "),
                        });
                    }
                    ok
                }
                Err(e) => {
                    report.failures.push(Failure::Repair { failed, helpers: helpers.clone(), reason: e.to_string() });
                    false
                }
            };
            report.repair_results.insert((failed, helpers), ok);
        }
    }
    report.refresh();
    report
}

pub fn verify_reconstruction_all(code: &dyn RegeneratingCode, instance: &StorageInstance) -> VerificationReport {
    verify_reconstruction(code, instance, Coverage::Exhaustive)
}

pub fn verify_exact_repair_all(code: &dyn RegeneratingCode, instance: &StorageInstance) -> VerificationReport {
    verify_exact_repair(code, instance, Coverage::Exhaustive)
}

/// Both verifications, merged into one report.
pub fn verify_all(code: &dyn RegeneratingCode, instance: &StorageInstance, coverage: Coverage) -> VerificationReport {
    verify_reconstruction(code, instance, coverage).merge(verify_exact_repair(code, instance, coverage))
}
