//! Lifting an `(n, k, d)` exact-repair code to `(n+1, k+1, d+1)`.
//!
//! The base code is padded with an extra node that stores nothing. Several
//! copies of the padded system (subsystems) are laid side by side, each with
//! its nodes reordered so the empty slot lands on a different position, and
//! lifted node `j` stores position `j` of every subsystem.
//!
//! - [`LiftVariant::Permutation`]: one subsystem per permutation of the
//!   `n + 1` positions, enumerated lexicographically. `(n+1)!` subsystems.
//! - [`LiftVariant::Cyclic`]: subsystem `i` leaves position `i` empty and keeps
//!   the base order elsewhere. `n + 1` subsystems.
//!
//! The lifted file interleaves the subsystem files symbol by symbol: symbol
//! `t` of subsystem `i` (0-based) is lifted symbol `t * S + i` for `S`
//! subsystems, which gives `(x1, x2, x3, x4, y1, y2, y3, y4)` for the toy
//! code.

use std::fmt;
use std::sync::Arc;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gf::Gf256;
use crate::model::{BetaProfile, CodeParams, HelperSet, NodeView, RegeneratingCode, StorageInstance};

/// Largest base `n` accepted by [`permutation_lift`]; 720 subsystems.
pub const MAX_PERMUTATION_BASE_N: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiftVariant {
    Permutation,
    Cyclic,
}

impl fmt::Display for LiftVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LiftVariant::Permutation => "perm",
            LiftVariant::Cyclic => "cyclic",
        })
    }
}

impl std::str::FromStr for LiftVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "perm" | "permutation" => Ok(LiftVariant::Permutation),
            "cyclic" => Ok(LiftVariant::Cyclic),
            other => Err(Error::InvalidParams(format!("unknown lift variant `{other}`"))),
        }
    }
}

/// What a subsystem stores at one lifted position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Slot {
    Empty,
    /// 1-based node of the base code.
    Base(usize),
}

/// Placement of the padded base system inside every subsystem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubsystemLayout {
    /// `placements[i][p - 1]` is what subsystem `i` stores at position `p`.
    placements: Vec<Vec<Slot>>,
    /// `positions[i][b - 1]` is the position of base node `b` in subsystem `i`.
    positions: Vec<Vec<usize>>,
}

impl SubsystemLayout {
    /// All `(n+1)!` orderings. Base node `b` goes to position `σ(b)` and the
    /// empty node `n + 1` to `σ(n + 1)`.
    pub fn permutation(base_n: usize) -> Self {
        let sigmas = (1..=base_n + 1).permutations(base_n + 1);
        Self::from_sigmas(base_n, sigmas)
    }

    /// `n + 1` shifted copies: subsystem `i` stores nothing at position `i`,
    /// base node `p` at `p < i` and base node `p - 1` at `p > i`.
    pub fn cyclic(base_n: usize) -> Self {
        let sigmas = (1..=base_n + 1).map(|empty| {
            let mut sigma: Vec<usize> = (1..=base_n).map(|b| if b < empty { b } else { b + 1 }).collect();
            sigma.push(empty);
            sigma
        });
        Self::from_sigmas(base_n, sigmas)
    }

    fn from_sigmas(base_n: usize, sigmas: impl Iterator<Item = Vec<usize>>) -> Self {
        let mut placements = Vec::new();
        let mut positions = Vec::new();
        for sigma in sigmas {
            let mut placement = vec![Slot::Empty; base_n + 1];
            for (b, &pos) in sigma.iter().enumerate().take(base_n) {
                placement[pos - 1] = Slot::Base(b + 1);
            }
            positions.push(sigma[..base_n].to_vec());
            placements.push(placement);
        }
        SubsystemLayout { placements, positions }
    }

    pub fn subsystems(&self) -> usize {
        self.placements.len()
    }

    /// Number of lifted positions, `n + 1`.
    pub fn width(&self) -> usize {
        self.placements.first().map_or(0, Vec::len)
    }

    pub fn slot(&self, subsystem: usize, position: usize) -> Slot {
        self.placements[subsystem][position - 1]
    }

    pub fn position_of(&self, subsystem: usize, base_node: usize) -> usize {
        self.positions[subsystem][base_node - 1]
    }

    /// Number of subsystems in which `position` stores nothing.
    pub fn empty_count(&self, position: usize) -> usize {
        self.placements.iter().filter(|p| p[position - 1] == Slot::Empty).count()
    }

    pub fn digest(&self) -> String {
        let mut h = Sha256::new();
        for placement in &self.placements {
            for slot in placement {
                let v: u16 = match *slot {
                    Slot::Empty => 0,
                    Slot::Base(b) => b as u16,
                };
                h.update(v.to_le_bytes());
            }
        }
        hex::encode(h.finalize())
    }
}

/// The padded system: the base code plus one node that stores nothing.
/// Parameters `(n+1, k+1, d+1)`, same file.
pub struct PaddedCode {
    base: Arc<dyn RegeneratingCode>,
    params: CodeParams,
}

impl PaddedCode {
    pub fn new(base: Arc<dyn RegeneratingCode>) -> Result<Self> {
        let bp = base.params();
        let mut alpha = bp.alpha_per_node.clone();
        alpha.push(0);
        let params = CodeParams::new(bp.n + 1, bp.k + 1, bp.d + 1, alpha, bp.gamma, BetaProfile::Bounded, bp.file_size)?;
        Ok(PaddedCode { base, params })
    }
}

impl RegeneratingCode for PaddedCode {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn code_id(&self) -> String {
        format!("padded({})", self.base.code_id())
    }

    fn encode(&self, file: &[Gf256]) -> Result<Vec<Vec<Gf256>>> {
        let mut nodes = self.base.encode(file)?;
        nodes.push(Vec::new());
        Ok(nodes)
    }

    fn reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Gf256>> {
        self.params.check_reconstruct(nodes)?;
        let empty = self.params.n;
        let mut real: Vec<NodeView<'_>> = nodes.iter().copied().filter(|&(j, _)| j != empty).collect();
        real.sort_by_key(|&(j, _)| j);
        real.truncate(self.base.params().k);
        self.base.reconstruct(&real)
    }

    fn repair(&self, failed: usize, helpers: &mut HelperSet<'_>) -> Result<Vec<Gf256>> {
        self.params.check_repair(failed, helpers)?;
        let empty = self.params.n;
        if failed == empty {
            return Ok(Vec::new());
        }
        let mut real: Vec<usize> = helpers.indices().filter(|&j| j != empty).collect();
        real.truncate(self.base.params().d);
        let mut child = HelperSet::new(real.iter().map(|&j| (j, helpers.raw(j))))?;
        let rebuilt = self.base.repair(failed, &mut child)?;
        for (&j, &count) in child.sent() {
            helpers.charge(j, count);
        }
        Ok(rebuilt)
    }
}

/// A code built from subsystem copies of a base code.
pub struct LiftedCode {
    base: Arc<dyn RegeneratingCode>,
    variant: LiftVariant,
    layout: SubsystemLayout,
    params: CodeParams,
    /// `offsets[p - 1][i]`: where subsystem `i`'s slice starts inside node `p`.
    offsets: Vec<Vec<usize>>,
}

impl LiftedCode {
    pub fn new(base: Arc<dyn RegeneratingCode>, variant: LiftVariant) -> Result<Self> {
        let bp = base.params().clone();
        let layout = match variant {
            LiftVariant::Permutation => {
                if bp.n > MAX_PERMUTATION_BASE_N {
                    return Err(Error::Capacity(format!(
                        "permutation lift of n={} needs {}! subsystems; limit is base n <= {}",
                        bp.n,
                        bp.n + 1,
                        MAX_PERMUTATION_BASE_N
                    )));
                }
                SubsystemLayout::permutation(bp.n)
            }
            LiftVariant::Cyclic => SubsystemLayout::cyclic(bp.n),
        };
        let width = bp.n + 1;
        let subsystems = layout.subsystems();

        let mut offsets = vec![Vec::with_capacity(subsystems); width];
        let mut alpha = vec![0usize; width];
        for pos in 1..=width {
            for sub in 0..subsystems {
                offsets[pos - 1].push(alpha[pos - 1]);
                if let Slot::Base(b) = layout.slot(sub, pos) {
                    alpha[pos - 1] += bp.alpha(b);
                }
            }
        }

        // A repair costs γ in every subsystem where the failed slot is occupied.
        let gamma = (1..=width).map(|pos| (subsystems - layout.empty_count(pos)) * bp.gamma).max().unwrap_or(0);
        let d = bp.d + 1;
        let beta = match (variant, bp.beta) {
            (LiftVariant::Permutation, BetaProfile::Homogeneous(_)) if gamma % d == 0 => BetaProfile::Homogeneous(gamma / d),
            _ => BetaProfile::Bounded,
        };
        let params = CodeParams::new(width, bp.k + 1, d, alpha, gamma, beta, subsystems * bp.file_size)?;
        Ok(LiftedCode { base, variant, layout, params, offsets })
    }

    pub fn base(&self) -> &Arc<dyn RegeneratingCode> {
        &self.base
    }

    pub fn variant(&self) -> LiftVariant {
        self.variant
    }

    pub fn layout(&self) -> &SubsystemLayout {
        &self.layout
    }

    fn slice<'a>(&self, content: &'a [Gf256], pos: usize, sub: usize, base_node: usize) -> &'a [Gf256] {
        let start = self.offsets[pos - 1][sub];
        &content[start..start + self.base.params().alpha(base_node)]
    }
}

impl RegeneratingCode for LiftedCode {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn code_id(&self) -> String {
        format!("{}({})", self.variant, self.base.code_id())
    }

    fn encode(&self, file: &[Gf256]) -> Result<Vec<Vec<Gf256>>> {
        if file.len() != self.params.file_size {
            return Err(Error::LengthMismatch { expected: self.params.file_size, actual: file.len() });
        }
        let subsystems = self.layout.subsystems();
        let mut nodes: Vec<Vec<Gf256>> = self.params.alpha_per_node.iter().map(|&a| Vec::with_capacity(a)).collect();
        for sub in 0..subsystems {
            let base_file: Vec<Gf256> = file.iter().skip(sub).step_by(subsystems).copied().collect();
            let base_nodes = self.base.encode(&base_file)?;
            for (pos, node) in nodes.iter_mut().enumerate() {
                if let Slot::Base(b) = self.layout.slot(sub, pos + 1) {
                    node.extend_from_slice(&base_nodes[b - 1]);
                }
            }
        }
        Ok(nodes)
    }

    fn reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Gf256>> {
        self.params.check_reconstruct(nodes)?;
        let mut given: Vec<NodeView<'_>> = nodes.to_vec();
        given.sort_by_key(|&(j, _)| j);
        let subsystems = self.layout.subsystems();
        let base_k = self.base.params().k;
        let mut file = vec![Gf256::ZERO; self.params.file_size];
        for sub in 0..subsystems {
            let views: Vec<NodeView<'_>> = given
                .iter()
                .filter_map(|&(pos, content)| match self.layout.slot(sub, pos) {
                    Slot::Base(b) => Some((b, self.slice(content, pos, sub, b))),
                    Slot::Empty => None,
                })
                .take(base_k)
                .collect();
            let base_file = self.base.reconstruct(&views)?;
            for (t, sym) in base_file.into_iter().enumerate() {
                file[t * subsystems + sub] = sym;
            }
        }
        Ok(file)
    }

    fn repair(&self, failed: usize, helpers: &mut HelperSet<'_>) -> Result<Vec<Gf256>> {
        self.params.check_repair(failed, helpers)?;
        let base_d = self.base.params().d;
        let helper_positions: Vec<usize> = helpers.indices().collect();
        let mut rebuilt = Vec::with_capacity(self.params.alpha(failed));
        // Subsystems where all d+1 helpers are occupied need one helper to sit
        // out. Rotating the idle rank over these subsystems spreads the drops
        // evenly across the helper set.
        let mut surplus = 0usize;
        for sub in 0..self.layout.subsystems() {
            let Slot::Base(base_failed) = self.layout.slot(sub, failed) else {
                continue;
            };
            let mut active: Vec<(usize, usize)> = helper_positions
                .iter()
                .filter_map(|&pos| match self.layout.slot(sub, pos) {
                    Slot::Base(b) => Some((pos, b)),
                    Slot::Empty => None,
                })
                .collect();
            if active.len() > base_d {
                active.remove(surplus % active.len());
                surplus += 1;
            }
            let mut child = HelperSet::new(
                active.iter().map(|&(pos, b)| (b, self.slice(helpers.raw(pos), pos, sub, b))),
            )?;
            let piece = self.base.repair(base_failed, &mut child)?;
            rebuilt.extend_from_slice(&piece);
            for (&b, &count) in child.sent() {
                helpers.charge(self.layout.position_of(sub, b), count);
            }
        }
        Ok(rebuilt)
    }

    fn lift_chain(&self) -> Vec<LiftVariant> {
        let mut chain = self.base.lift_chain();
        chain.push(self.variant);
        chain
    }

    fn layout_digest(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.base.layout_digest().as_bytes());
        h.update(self.variant.to_string().as_bytes());
        h.update(self.layout.digest().as_bytes());
        hex::encode(h.finalize())
    }
}

pub fn cyclic_lift(base: Arc<dyn RegeneratingCode>) -> Result<LiftedCode> {
    LiftedCode::new(base, LiftVariant::Cyclic)
}

pub fn permutation_lift(base: Arc<dyn RegeneratingCode>) -> Result<LiftedCode> {
    LiftedCode::new(base, LiftVariant::Permutation)
}

/// Applies `times` lifts of the same variant, giving `(n+j, k+j, d+j)`.
pub fn iterated_lift(base: Arc<dyn RegeneratingCode>, times: usize, variant: LiftVariant) -> Result<Arc<dyn RegeneratingCode>> {
    (0..times).try_fold(base, |code, _| Ok(Arc::new(LiftedCode::new(code, variant)?) as Arc<dyn RegeneratingCode>))
}

/// Applies a mixed sequence of lifts, innermost first.
pub fn lift_chain(base: Arc<dyn RegeneratingCode>, chain: &[LiftVariant]) -> Result<Arc<dyn RegeneratingCode>> {
    chain
        .iter()
        .try_fold(base, |code, &v| Ok(Arc::new(LiftedCode::new(code, v)?) as Arc<dyn RegeneratingCode>))
}

/// JSON description of a stored instance of a (possibly lifted) code.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub code_id: String,
    pub params: CodeParams,
    pub variant_chain: Vec<LiftVariant>,
    pub node_symbol_counts: Vec<usize>,
    pub file_size: usize,
    pub layout_digest: String,
    pub seed: Option<u64>,
}

pub fn summarize(code: &dyn RegeneratingCode, instance: &StorageInstance, seed: Option<u64>) -> InstanceSummary {
    InstanceSummary {
        code_id: code.code_id(),
        params: instance.params.clone(),
        variant_chain: code.lift_chain(),
        node_symbol_counts: instance.node_sizes(),
        file_size: instance.file.len(),
        layout_digest: code.layout_digest(),
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{toy, MdsMsrCode};
    use crate::gf::symbols;
    use crate::model::{repair_node, verify_all, verify_exact_repair_all, Coverage};

    fn toy_arc() -> Arc<dyn RegeneratingCode> {
        Arc::new(toy())
    }

    #[test]
    fn cyclic_layout_matches_shift_rule() {
        let l = SubsystemLayout::cyclic(3);
        assert_eq!(l.subsystems(), 4);
        // subsystem 2 (index 1): position 2 empty, 1 -> v1, 3 -> v2, 4 -> v3
        assert_eq!(l.slot(1, 1), Slot::Base(1));
        assert_eq!(l.slot(1, 2), Slot::Empty);
        assert_eq!(l.slot(1, 3), Slot::Base(2));
        assert_eq!(l.slot(1, 4), Slot::Base(3));
        for pos in 1..=4 {
            assert_eq!(l.empty_count(pos), 1);
        }
    }

    #[test]
    fn permutation_layout_counts() {
        let l = SubsystemLayout::permutation(3);
        assert_eq!(l.subsystems(), 24);
        for pos in 1..=4 {
            assert_eq!(l.empty_count(pos), 6);
        }
        // lexicographic: first is the identity, last is the reversal
        assert_eq!((1..=4).map(|p| l.slot(0, p)).collect::<Vec<_>>(), vec![
            Slot::Base(1),
            Slot::Base(2),
            Slot::Base(3),
            Slot::Empty
        ]);
        assert_eq!((1..=4).map(|p| l.slot(23, p)).collect::<Vec<_>>(), vec![
            Slot::Empty,
            Slot::Base(3),
            Slot::Base(2),
            Slot::Base(1)
        ]);
        for sub in 0..24 {
            assert_eq!((1..=4).filter(|&p| l.slot(sub, p) == Slot::Empty).count(), 1);
            for b in 1..=3 {
                assert_eq!(l.slot(sub, l.position_of(sub, b)), Slot::Base(b));
            }
        }
        assert_ne!(l.digest(), SubsystemLayout::cyclic(3).digest());
    }

    #[test]
    fn padded_system_has_an_empty_node() {
        let padded = PaddedCode::new(toy_arc()).unwrap();
        assert_eq!(padded.params().alpha_per_node, vec![1, 1, 1, 0]);
        let inst = padded.store(&symbols(&[0x05, 0x07])).unwrap();
        assert!(inst.node(4).is_empty());
        let t = repair_node(&padded, &inst, 4, &[1, 2, 3]).unwrap();
        assert!(t.rebuilt.is_empty());
        assert_eq!(t.total_sent(), 0);
        let report = verify_all(&padded, &inst, Coverage::Exhaustive);
        assert!(report.all_pass, "{:?}", report.failures);
    }

    #[test]
    fn cyclic_toy_accounting() {
        let lifted = cyclic_lift(toy_arc()).unwrap();
        let p = lifted.params();
        assert_eq!((p.n, p.k, p.d), (4, 3, 3));
        assert_eq!(p.alpha_per_node, vec![3; 4]);
        assert_eq!(p.gamma, 6);
        assert_eq!(p.file_size, 8);
        assert_eq!(p.beta, BetaProfile::Bounded);
    }

    #[test]
    fn permutation_toy_accounting() {
        let lifted = permutation_lift(toy_arc()).unwrap();
        let p = lifted.params();
        assert_eq!(lifted.layout().subsystems(), 24);
        assert_eq!(p.alpha_per_node, vec![18; 4]);
        assert_eq!(p.gamma, 36);
        assert_eq!(p.file_size, 48);
        assert_eq!(p.beta, BetaProfile::Homogeneous(12));
    }

    #[test]
    fn permutation_lift_refuses_large_bases() {
        let base: Arc<dyn RegeneratingCode> = Arc::new(MdsMsrCode::new(6, 2, 1).unwrap());
        assert!(matches!(permutation_lift(base), Err(Error::Capacity(_))));
    }

    #[test]
    fn iterated_zero_is_identity() {
        let code = iterated_lift(toy_arc(), 0, LiftVariant::Cyclic).unwrap();
        assert_eq!(code.code_id(), "msr(3,2)");
        assert_eq!(code.params(), toy().params());
    }

    #[test]
    fn iterated_cyclic_to_five_four_four() {
        let code = iterated_lift(toy_arc(), 2, LiftVariant::Cyclic).unwrap();
        let p = code.params();
        assert_eq!((p.n, p.k, p.d), (5, 4, 4));
        assert_eq!(p.alpha_per_node, vec![12; 5]);
        assert_eq!(p.file_size, 40);
        assert_eq!(code.lift_chain(), vec![LiftVariant::Cyclic, LiftVariant::Cyclic]);
        let file: Vec<Gf256> = (0..40u8).map(|v| Gf256(v.wrapping_mul(37) ^ 0x5A)).collect();
        let inst = code.store(&file).unwrap();
        assert!(verify_all(code.as_ref(), &inst, Coverage::Exhaustive).all_pass);
    }

    #[test]
    fn lifted_repair_rejects_failed_helper() {
        let lifted = cyclic_lift(toy_arc()).unwrap();
        let inst = lifted.store(&symbols(&[1, 2, 3, 4, 5, 6, 7, 8])).unwrap();
        assert!(matches!(repair_node(&lifted, &inst, 1, &[1, 2, 3]), Err(Error::InvalidHelpers(_))));
    }

    #[test]
    fn surplus_helpers_are_dropped_evenly() {
        // msr(4,2) has d = 2 < n - 1, so lifted subsystems can see 3 occupied helpers.
        let base: Arc<dyn RegeneratingCode> = Arc::new(MdsMsrCode::new(4, 2, 1).unwrap());
        let lifted = permutation_lift(base).unwrap();
        let file: Vec<Gf256> = (0..lifted.params().file_size).map(|i| Gf256((i * 7 + 3) as u8)).collect();
        let inst = lifted.store(&file).unwrap();
        let report = verify_exact_repair_all(&lifted, &inst);
        assert!(report.all_pass, "{:?}", report.failures);
        let t = repair_node(&lifted, &inst, 1, &[2, 3, 5]).unwrap();
        let counts: Vec<usize> = t.sent.values().copied().collect();
        assert!(counts.iter().all(|&c| c == counts[0]), "{counts:?}");
        assert_eq!(t.total_sent(), lifted.params().gamma);
    }
}
