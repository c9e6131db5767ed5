//! Concrete exact-repair base codes.
//!
//! - [`MdsMsrCode`]: an MDS code with `d = k` and decode-then-re-encode repair.
//!   It sits at the MSR point: `α = B/k`, `γ = B`.
//! - [`RbtMbrCode`]: repair-by-transfer MBR code with `d = n - 1`. An outer
//!   MDS code produces one symbol per node pair; each node stores the symbols
//!   of the `n - 1` pairs it belongs to, and a newcomer receives exactly the
//!   shared symbol from every survivor.

use crate::error::{Error, Result};
use crate::gf::{Gf256, MdsCodec};
use crate::model::{BetaProfile, CodeParams, HelperSet, NodeView, RegeneratingCode, RepairTrace, StorageInstance};

/// The `(3, 2, 2)` code storing `x`, `y`, `x + y`.
pub fn toy() -> MdsMsrCode {
    MdsMsrCode::new(3, 2, 1).expect("toy parameters are valid")
}

#[derive(Clone, Debug)]
pub struct MdsMsrCode {
    codec: MdsCodec,
    params: CodeParams,
}

impl MdsMsrCode {
    /// `alpha` symbols per node; the file holds `k * alpha` symbols.
    pub fn new(n: usize, k: usize, alpha: usize) -> Result<Self> {
        if alpha == 0 {
            return Err(Error::InvalidParams("alpha must be at least 1".into()));
        }
        let codec = MdsCodec::new(n, k)?;
        let params = CodeParams::new(n, k, k, vec![alpha; n], k * alpha, BetaProfile::Homogeneous(alpha), k * alpha)?;
        Ok(MdsMsrCode { codec, params })
    }

    pub fn alpha(&self) -> usize {
        self.params.alpha_per_node[0]
    }

    fn decode_stripes(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Vec<Gf256>>> {
        let positions: Vec<usize> = nodes.iter().map(|&(j, _)| j).collect();
        let decoder = self.codec.decoder(&positions)?;
        Ok((0..self.alpha())
            .map(|s| {
                let column: Vec<Gf256> = nodes.iter().map(|&(_, c)| c[s]).collect();
                decoder.apply(&column)
            })
            .collect())
    }
}

impl RegeneratingCode for MdsMsrCode {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn code_id(&self) -> String {
        format!("msr({},{})", self.params.n, self.params.k)
    }

    // Stripe s is file[s*k .. (s+1)*k]; node j holds coded symbol j of every stripe.
    fn encode(&self, file: &[Gf256]) -> Result<Vec<Vec<Gf256>>> {
        let p = &self.params;
        if file.len() != p.file_size {
            return Err(Error::LengthMismatch { expected: p.file_size, actual: file.len() });
        }
        let mut nodes = vec![Vec::with_capacity(self.alpha()); p.n];
        for stripe in file.chunks(p.k) {
            for (node, sym) in nodes.iter_mut().zip(self.codec.encode(stripe)?) {
                node.push(sym);
            }
        }
        Ok(nodes)
    }

    fn reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Gf256>> {
        self.params.check_reconstruct(nodes)?;
        Ok(self.decode_stripes(nodes)?.concat())
    }

    fn repair(&self, failed: usize, helpers: &mut HelperSet<'_>) -> Result<Vec<Gf256>> {
        self.params.check_repair(failed, helpers)?;
        let indices: Vec<usize> = helpers.indices().collect();
        let received = indices
            .iter()
            .map(|&h| Ok((h, helpers.read_all(h)?)))
            .collect::<Result<Vec<_>>>()?;
        self.decode_stripes(&received)?
            .iter()
            .map(|stripe| self.codec.encode_symbol(stripe, failed))
            .collect()
    }
}

/// Stores `file` with an MSR code whose node size is `file.len() / k`.
pub fn msr_store(n: usize, k: usize, file: &[Gf256]) -> Result<StorageInstance> {
    if k == 0 || file.is_empty() || !file.len().is_multiple_of(k) {
        return Err(Error::InvalidParams(format!("file of {} symbols does not split into k={k} stripes", file.len())));
    }
    MdsMsrCode::new(n, k, file.len() / k)?.store(file)
}

/// Repairs node `failed` of an instance produced by [`msr_store`].
pub fn msr_repair(instance: &StorageInstance, failed: usize, helpers: &[usize]) -> Result<RepairTrace> {
    let p = &instance.params;
    let alpha = p.uniform_alpha().ok_or_else(|| Error::InvalidParams("MSR instance must be uniform".into()))?;
    let code = MdsMsrCode::new(p.n, p.k, alpha)?;
    crate::model::repair_node(&code, instance, failed, helpers)
}

#[derive(Clone, Debug)]
pub struct RbtMbrCode {
    codec: MdsCodec,
    /// Node pairs `(i, j)`, `i < j`, in lexicographic order; pair `e` carries coded symbol `e`.
    edges: Vec<(usize, usize)>,
    params: CodeParams,
}

impl RbtMbrCode {
    pub fn new(n: usize, k: usize) -> Result<Self> {
        if n < 2 || k == 0 || k > n - 1 {
            return Err(Error::InvalidParams(format!("MBR code needs 1 <= k <= n-1, got n={n}, k={k}")));
        }
        let d = n - 1;
        let edges: Vec<(usize, usize)> = (1..=n).flat_map(|i| (i + 1..=n).map(move |j| (i, j))).collect();
        if edges.len() > 255 {
            return Err(Error::Capacity(format!("C({n},2) = {} coded symbols exceeds 255", edges.len())));
        }
        let file_size = k * d - k * (k - 1) / 2;
        let codec = MdsCodec::new(edges.len(), file_size)?;
        let params = CodeParams::new(n, k, d, vec![d; n], d, BetaProfile::Homogeneous(1), file_size)?;
        Ok(RbtMbrCode { codec, edges, params })
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Edge indices incident to `node`, in the order the node stores them.
    fn incident(&self, node: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .enumerate()
            .filter(move |(_, &(i, j))| i == node || j == node)
            .map(|(e, _)| e)
    }

    /// Offset within `node`'s content of the symbol it shares with `other`.
    fn slot(&self, node: usize, other: usize) -> usize {
        let (a, b) = if node < other { (node, other) } else { (other, node) };
        self.incident(node)
            .position(|e| self.edges[e] == (a, b))
            .expect("every pair of distinct nodes shares an edge")
    }
}

impl RegeneratingCode for RbtMbrCode {
    fn params(&self) -> &CodeParams {
        &self.params
    }

    fn code_id(&self) -> String {
        format!("mbr({},{})", self.params.n, self.params.k)
    }

    fn encode(&self, file: &[Gf256]) -> Result<Vec<Vec<Gf256>>> {
        let coded = self.codec.encode(file)?;
        Ok((1..=self.params.n).map(|node| self.incident(node).map(|e| coded[e]).collect()).collect())
    }

    fn reconstruct(&self, nodes: &[NodeView<'_>]) -> Result<Vec<Gf256>> {
        self.params.check_reconstruct(nodes)?;
        let mut known: Vec<Option<Gf256>> = vec![None; self.edges.len()];
        for &(node, content) in nodes {
            for (slot, e) in self.incident(node).enumerate() {
                known[e] = Some(content[slot]);
            }
        }
        // k nodes cover exactly C(n,2) - C(n-k,2) = B edges.
        let symbols: Vec<(usize, Gf256)> = known
            .iter()
            .enumerate()
            .filter_map(|(e, s)| s.map(|s| (e + 1, s)))
            .take(self.params.file_size)
            .collect();
        self.codec.decode(&symbols)
    }

    fn repair(&self, failed: usize, helpers: &mut HelperSet<'_>) -> Result<Vec<Gf256>> {
        self.params.check_repair(failed, helpers)?;
        self.incident(failed)
            .map(|e| {
                let (i, j) = self.edges[e];
                let other = if i == failed { j } else { i };
                let slot = self.slot(other, failed);
                Ok(helpers.read(other, slot..slot + 1)?[0])
            })
            .collect()
    }
}

/// Stores `file` with the repair-by-transfer MBR code for `(n, k)`.
pub fn mbr_store(n: usize, k: usize, file: &[Gf256]) -> Result<StorageInstance> {
    RbtMbrCode::new(n, k)?.store(file)
}

/// Repairs node `failed` of an instance produced by [`mbr_store`].
pub fn mbr_repair(instance: &StorageInstance, failed: usize, helpers: &[usize]) -> Result<RepairTrace> {
    let code = RbtMbrCode::new(instance.params.n, instance.params.k)?;
    crate::model::repair_node(&code, instance, failed, helpers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gf::symbols;
    use crate::model::{verify_exact_repair_all, verify_reconstruction_all};

    #[test]
    fn toy_layout() {
        let inst = msr_store(3, 2, &symbols(&[0x05, 0x07])).unwrap();
        assert_eq!(inst.nodes, vec![symbols(&[0x05]), symbols(&[0x07]), symbols(&[0x02])]);
        let zero = msr_store(3, 2, &symbols(&[0, 0])).unwrap();
        assert!(zero.nodes.iter().flatten().all(|s| s.is_zero()));
    }

    #[test]
    fn toy_repairs() {
        let inst = msr_store(3, 2, &symbols(&[0x05, 0x07])).unwrap();
        let t = msr_repair(&inst, 1, &[2, 3]).unwrap();
        assert_eq!(t.rebuilt, symbols(&[0x05]));
        assert_eq!(t.sent.into_iter().collect::<Vec<_>>(), vec![(2, 1), (3, 1)]);
        let t = msr_repair(&inst, 3, &[1, 2]).unwrap();
        assert_eq!(t.rebuilt, symbols(&[0x02]));
        assert!(matches!(msr_repair(&inst, 3, &[1]), Err(Error::InvalidHelpers(_))));
        assert!(matches!(msr_repair(&inst, 1, &[1, 2]), Err(Error::InvalidHelpers(_))));
    }

    #[test]
    fn msr_store_rejects_indivisible_file() {
        assert!(msr_store(3, 2, &symbols(&[1, 2, 3])).is_err());
    }

    #[test]
    fn msr_five_two_exhaustive() {
        let inst = msr_store(5, 2, &symbols(&[0x31, 0xC4])).unwrap();
        let code = MdsMsrCode::new(5, 2, 1).unwrap();
        let rec = verify_reconstruction_all(&code, &inst);
        assert!(rec.all_pass);
        assert_eq!(rec.reconstruction_results.len(), 10);
        let rep = verify_exact_repair_all(&code, &inst);
        assert!(rep.all_pass);
        assert_eq!(rep.repair_results.len(), 5 * 6);
        assert_eq!(rep.max_bandwidth_used, 2);
    }

    #[test]
    fn msr_params_sit_at_msr_point() {
        let c = MdsMsrCode::new(6, 3, 4).unwrap();
        let p = c.params();
        assert_eq!((p.d, p.file_size, p.gamma), (3, 12, 12));
        assert_eq!(p.alpha(1) * p.k, p.file_size);
    }

    #[test]
    fn mbr_sizes() {
        let c = RbtMbrCode::new(3, 2).unwrap();
        assert_eq!(c.params().file_size, 3);
        assert_eq!(c.params().alpha_per_node, vec![2, 2, 2]);
        let c = RbtMbrCode::new(5, 3).unwrap();
        assert_eq!(c.params().file_size, 9);
        assert_eq!(c.edges().len(), 10);
        assert!(mbr_store(3, 2, &symbols(&[1, 2])).is_err());
        assert!(RbtMbrCode::new(24, 3).is_err());
    }

    #[test]
    fn mbr_edge_placement() {
        let inst = mbr_store(3, 2, &symbols(&[0x11, 0x22, 0x33])).unwrap();
        // edges (1,2), (1,3), (2,3); codec(3,3) is the identity
        assert_eq!(inst.nodes[0], symbols(&[0x11, 0x22]));
        assert_eq!(inst.nodes[1], symbols(&[0x11, 0x33]));
        assert_eq!(inst.nodes[2], symbols(&[0x22, 0x33]));
        let zero = mbr_store(5, 3, &[Gf256::ZERO; 9]).unwrap();
        assert!(zero.nodes.iter().flatten().all(|s| s.is_zero()));
    }

    #[test]
    fn mbr_repair_by_transfer() {
        let inst = mbr_store(3, 2, &symbols(&[0x11, 0x22, 0x33])).unwrap();
        let t = mbr_repair(&inst, 1, &[2, 3]).unwrap();
        assert_eq!(t.rebuilt, inst.nodes[0]);
        assert_eq!(t.sent.into_iter().collect::<Vec<_>>(), vec![(2, 1), (3, 1)]);
        assert!(mbr_repair(&inst, 1, &[2]).is_err());
    }

    #[test]
    fn mbr_five_three_exhaustive() {
        let file: Vec<Gf256> = (1..=9u8).map(|v| Gf256(v * 17)).collect();
        let code = RbtMbrCode::new(5, 3).unwrap();
        let inst = code.store(&file).unwrap();
        assert!(verify_reconstruction_all(&code, &inst).all_pass);
        let rep = verify_exact_repair_all(&code, &inst);
        assert!(rep.all_pass);
        assert_eq!(rep.max_bandwidth_used, 4);
        assert_eq!(rep.per_helper_max, 1);
        for failed in 1..=5 {
            let helpers: Vec<usize> = (1..=5).filter(|&j| j != failed).collect();
            let t = crate::model::repair_node(&code, &inst, failed, &helpers).unwrap();
            assert!(t.sent.values().all(|&c| c == 1));
        }
    }
}
