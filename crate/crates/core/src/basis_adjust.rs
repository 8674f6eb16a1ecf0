//! Binary aesthetic stage: pick the padding-region bits so the symbol's
//! modules match a target binary image wherever the code structure allows.
//!
//! Every padding bit yields one XOR operator (the bit itself plus the parity
//! delta that keeps each block a valid codeword). Gauss-Jordan elimination
//! over GF(2) re-pivots the operator set onto the highest-priority modules,
//! which may sit in parity positions; applying any subset never changes the
//! message bits, so the decoded payload is untouched.

use crate::galois::rs_encode;
use crate::qr_symbol::{ModuleMatrix, Payload, QrError, QrSpec, SymbolMap};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdjustError {
    /// payload fills capacity exactly; nothing is controllable
    NoPaddingAvailable,
    Qr(QrError),
}

impl fmt::Display for AdjustError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdjustError::NoPaddingAvailable => {
                write!(f, "payload leaves no padding codewords to adjust")
            }
            AdjustError::Qr(e) => write!(f, "{}", e),
        }
    }
}

impl std::error::Error for AdjustError {}

impl From<QrError> for AdjustError {
    fn from(e: QrError) -> AdjustError {
        AdjustError::Qr(e)
    }
}

/// Dense GF(2) vector over the symbol's codeword bits.
#[derive(Clone)]
struct BitVec {
    words: Vec<u64>,
}

impl BitVec {
    fn zeros(bits: usize) -> BitVec {
        BitVec {
            words: vec![0; (bits + 63) / 64],
        }
    }
    #[inline]
    fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }
    #[inline]
    fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }
    fn xor_assign(&mut self, other: &BitVec) {
        for (w, &o) in self.words.iter_mut().zip(other.words.iter()) {
            *w ^= o;
        }
    }
    fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(wi, &w)| {
            (0..64).filter_map(move |b| (w >> b & 1 == 1).then_some(wi * 64 + b))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisKind {
    A,
    B,
}

/// A set of decodability-preserving XOR operators over the module grid.
pub struct OperatorBasis {
    side: usize,
    n_bits: usize,
    kind: BasisKind,
    /// module position of every codeword bit, in transmitted order
    bit_modules: Vec<(usize, usize)>,
    ops: Vec<BitVec>,
    /// bit index each operator uniquely controls; parallel to ops, set B only
    pivots: Vec<Option<usize>>,
}

impl OperatorBasis {
    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Module positions flipped by operator `i`.
    pub fn flips_of(&self, i: usize) -> Vec<(usize, usize)> {
        self.ops[i].ones().map(|g| self.bit_modules[g]).collect()
    }

    /// Pivot module of operator `i`, once eliminated.
    pub fn pivot_module(&self, i: usize) -> Option<(usize, usize)> {
        self.pivots[i].map(|g| self.bit_modules[g])
    }

    /// XOR operator `i` into the matrix.
    pub fn apply(&self, m: &mut ModuleMatrix, i: usize) {
        for g in self.ops[i].ones() {
            let (r, c) = self.bit_modules[g];
            m.flip(r, c);
        }
    }
}

/// One operator per padding bit: that bit set, message bits zero, parity
/// bits the encode of the unit delta.
pub fn build_operator_set_a(spec: &QrSpec, payload: &Payload) -> Result<OperatorBasis, AdjustError> {
    let map = SymbolMap::build(spec, payload.bytes.len())?;
    if map.padding_codewords() == 0 {
        return Err(AdjustError::NoPaddingAvailable);
    }
    let n_blocks = map.block_data_lens.len();
    let total = map.data_codewords + map.ecc_per_block * n_blocks;
    let n_bits = total * 8;
    let bit_modules: Vec<(usize, usize)> = map.layout.bit_positions[..n_bits].to_vec();

    let mut ops = Vec::with_capacity(8 * map.padding_codewords());
    for b in 0..n_blocks {
        let (start, end) = map.block_span(b);
        let len = map.block_data_lens[b];
        for j in 0..len {
            if start + j < map.message_codewords || start + j >= end {
                continue;
            }
            for bit in 0..8usize {
                let mut delta = vec![0u8; len];
                delta[j] = 1 << (7 - bit);
                let ecc = rs_encode(&delta, map.ecc_per_block)
                    .expect("block geometry fits the field")
                    .ecc;
                let mut v = BitVec::zeros(n_bits);
                v.set(map.transmit_of[b][j] * 8 + bit);
                for (jj, &byte) in ecc.iter().enumerate() {
                    for idx in 0..8usize {
                        if byte >> (7 - idx) & 1 == 1 {
                            v.set(map.transmit_of[b][len + jj] * 8 + idx);
                        }
                    }
                }
                ops.push(v);
            }
        }
    }
    let n_ops = ops.len();
    Ok(OperatorBasis {
        side: map.layout.side,
        n_bits,
        kind: BasisKind::A,
        bit_modules,
        ops,
        pivots: vec![None; n_ops],
    })
}

/// Gauss-Jordan elimination, visiting candidate pivot columns in descending
/// module priority. After reduction each operator owns one pivot bit that no
/// other operator touches.
pub fn eliminate_to_set_b(a: OperatorBasis, priority: &[f32]) -> OperatorBasis {
    assert_eq!(
        priority.len(),
        a.side * a.side,
        "priority grid must cover the module matrix"
    );
    let mut columns: Vec<usize> = (0..a.n_bits)
        .filter(|&g| a.ops.iter().any(|op| op.get(g)))
        .collect();
    columns.sort_by(|&x, &y| {
        let (rx, cx) = a.bit_modules[x];
        let (ry, cy) = a.bit_modules[y];
        let px = priority[rx * a.side + cx];
        let py = priority[ry * a.side + cy];
        py.partial_cmp(&px).unwrap().then(x.cmp(&y))
    });

    let mut ops = a.ops;
    let mut pivots: Vec<Option<usize>> = vec![None; ops.len()];
    let mut assigned = 0usize;
    for g in columns {
        if assigned == ops.len() {
            break;
        }
        let Some(p) = (0..ops.len()).find(|&i| pivots[i].is_none() && ops[i].get(g)) else {
            continue;
        };
        let pivot_op = ops[p].clone();
        for (i, op) in ops.iter_mut().enumerate() {
            if i != p && op.get(g) {
                op.xor_assign(&pivot_op);
            }
        }
        pivots[p] = Some(g);
        assigned += 1;
    }

    OperatorBasis {
        side: a.side,
        n_bits: a.n_bits,
        kind: BasisKind::B,
        bit_modules: a.bit_modules,
        ops,
        pivots,
    }
}

/// Outcome of matching the symbol against a target binary image.
pub struct MatchReport {
    pub matrix: ModuleMatrix,
    pub operators_applied: usize,
    /// modules equal to the target, before / after adjustment
    pub matched_before: usize,
    pub matched_after: usize,
}

/// Greedy module matching: each pivot module is set to the target by XORing
/// its operator when needed. `target_dark[r*side+c]` is the wanted state;
/// priority only orders the (independent) pivot decisions.
pub fn match_target(
    base: &ModuleMatrix,
    basis: &OperatorBasis,
    target_dark: &[bool],
    priority: &[f32],
) -> MatchReport {
    let side = base.side();
    assert_eq!(side, basis.side, "basis built for a different version");
    assert_eq!(target_dark.len(), side * side);
    assert_eq!(priority.len(), side * side);
    assert_eq!(basis.kind, BasisKind::B, "match_target expects set B");

    let count_matches = |m: &ModuleMatrix| {
        let mut n = 0;
        for r in 0..side {
            for c in 0..side {
                if m.is_dark(r, c) == target_dark[r * side + c] {
                    n += 1;
                }
            }
        }
        n
    };

    let mut order: Vec<usize> = (0..basis.len()).filter(|&i| basis.pivots[i].is_some()).collect();
    order.sort_by(|&i, &j| {
        let (ri, ci) = basis.pivot_module(i).unwrap();
        let (rj, cj) = basis.pivot_module(j).unwrap();
        let pi = priority[ri * side + ci];
        let pj = priority[rj * side + cj];
        pj.partial_cmp(&pi).unwrap().then(i.cmp(&j))
    });

    let matched_before = count_matches(base);
    let mut out = base.clone();
    let mut applied = 0usize;
    for i in order {
        let (r, c) = basis.pivot_module(i).unwrap();
        // pivots are untouched by every other operator, so deciding against
        // the evolving matrix equals deciding against the base
        if out.is_dark(r, c) != target_dark[r * side + c] {
            basis.apply(&mut out, i);
            applied += 1;
        }
    }
    let matched_after = count_matches(&out);
    MatchReport {
        matrix: out,
        operators_applied: applied,
        matched_before,
        matched_after,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qr_symbol::{decode_matrix, encode_symbol, EcLevel, ModuleRole};
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn spec_v1l() -> QrSpec {
        QrSpec::new(1, EcLevel::L, 0).unwrap()
    }

    #[test]
    fn set_a_has_one_operator_per_padding_bit() {
        // 5-byte payload in v1-L leaves 12 padding codewords
        let payload = Payload::new(*b"hello");
        let a = build_operator_set_a(&spec_v1l(), &payload).unwrap();
        assert_eq!(a.len(), 12 * 8);
        assert_eq!(a.kind(), BasisKind::A);
    }

    #[test]
    fn full_payload_has_no_operators() {
        let payload = Payload::new(vec![3u8; 17]);
        assert!(matches!(
            build_operator_set_a(&spec_v1l(), &payload),
            Err(AdjustError::NoPaddingAvailable)
        ));
    }

    #[test]
    fn operators_are_involutions_preserving_decode() {
        let payload = Payload::new(*b"involution");
        let spec = QrSpec::new(2, EcLevel::M, 4).unwrap();
        let base = encode_symbol(&payload, &spec).unwrap();
        let a = build_operator_set_a(&spec, &payload).unwrap();
        for i in 0..a.len() {
            let mut m = base.clone();
            a.apply(&mut m, i);
            let report = decode_matrix(&m).unwrap();
            assert_eq!(report.payload, payload, "operator {} broke the payload", i);
            assert_eq!(report.corrections, 0, "operator {} is not a codeword", i);
            a.apply(&mut m, i);
            assert!(m.same_bits(&base), "operator {} is not an involution", i);
        }
    }

    #[test]
    fn operators_never_touch_function_or_message_modules() {
        let payload = Payload::new(*b"roles");
        let spec = QrSpec::new(3, EcLevel::Q, 1).unwrap();
        let base = encode_symbol(&payload, &spec).unwrap();
        let a = build_operator_set_a(&spec, &payload).unwrap();
        for i in 0..a.len() {
            for (r, c) in a.flips_of(i) {
                match base.role(r, c) {
                    ModuleRole::Controllable | ModuleRole::Ecc => {}
                    role => panic!("operator {} flips {:?} module at {},{}", i, role, r, c),
                }
            }
        }
    }

    #[test]
    fn elimination_gives_distinct_pivots_and_preserves_span() {
        let payload = Payload::new(*b"pivots!");
        let spec = QrSpec::new(2, EcLevel::L, 0).unwrap();
        let base = encode_symbol(&payload, &spec).unwrap();
        let a = build_operator_set_a(&spec, &payload).unwrap();
        let n = a.len();
        let priority = vec![0.5f32; base.side() * base.side()];
        let b = eliminate_to_set_b(a, &priority);
        assert_eq!(b.len(), n);

        let mut pivots: Vec<(usize, usize)> =
            (0..b.len()).map(|i| b.pivot_module(i).unwrap()).collect();
        let before = pivots.len();
        pivots.sort();
        pivots.dedup();
        assert_eq!(pivots.len(), before, "pivots must be pairwise distinct");

        // every eliminated operator still preserves decode: span(B) = span(A)
        for i in 0..b.len() {
            let mut m = base.clone();
            b.apply(&mut m, i);
            let report = decode_matrix(&m).unwrap();
            assert_eq!(report.payload, payload);
            assert_eq!(report.corrections, 0);
        }
    }

    #[test]
    fn pivot_flips_exactly_its_own_module_among_pivots() {
        let payload = Payload::new(*b"own");
        let spec = spec_v1l();
        let base = encode_symbol(&payload, &spec).unwrap();
        let a = build_operator_set_a(&spec, &payload).unwrap();
        let priority = vec![1.0f32; base.side() * base.side()];
        let b = eliminate_to_set_b(a, &priority);
        let pivot_set: Vec<(usize, usize)> =
            (0..b.len()).map(|i| b.pivot_module(i).unwrap()).collect();
        for i in 0..b.len() {
            let mut m = base.clone();
            b.apply(&mut m, i);
            for (k, &(r, c)) in pivot_set.iter().enumerate() {
                let flipped = m.is_dark(r, c) != base.is_dark(r, c);
                assert_eq!(flipped, k == i, "operator {} at pivot {}", i, k);
            }
        }
    }

    #[test]
    fn match_target_fixed_point_and_forced_flip() {
        let payload = Payload::new(*b"match");
        let spec = QrSpec::new(2, EcLevel::M, 7).unwrap();
        let base = encode_symbol(&payload, &spec).unwrap();
        let side = base.side();
        let priority = vec![0.5f32; side * side];
        let a = build_operator_set_a(&spec, &payload).unwrap();
        let b = eliminate_to_set_b(a, &priority);

        // target = the base itself: nothing applied
        let mut target: Vec<bool> = Vec::with_capacity(side * side);
        for r in 0..side {
            for c in 0..side {
                target.push(base.is_dark(r, c));
            }
        }
        let report = match_target(&base, &b, &target, &priority);
        assert_eq!(report.operators_applied, 0);
        assert!(report.matrix.same_bits(&base));

        // complement every pivot: all operators applied, pivots all match
        let mut flipped = target.clone();
        for i in 0..b.len() {
            let (r, c) = b.pivot_module(i).unwrap();
            flipped[r * side + c] = !flipped[r * side + c];
        }
        let report = match_target(&base, &b, &flipped, &priority);
        assert_eq!(report.operators_applied, b.len());
        for i in 0..b.len() {
            let (r, c) = b.pivot_module(i).unwrap();
            assert_eq!(report.matrix.is_dark(r, c), flipped[r * side + c]);
        }
        assert_eq!(decode_matrix(&report.matrix).unwrap().payload, payload);
    }

    #[test]
    fn random_targets_never_lose_ground_and_stay_decodable() {
        let payload = Payload::new(*b"stat");
        let spec = QrSpec::new(2, EcLevel::L, 2).unwrap();
        let base = encode_symbol(&payload, &spec).unwrap();
        let side = base.side();
        let priority = vec![0.5f32; side * side];
        let a = build_operator_set_a(&spec, &payload).unwrap();
        let b = eliminate_to_set_b(a, &priority);

        let mut rng = StdRng::seed_from_u64(99);
        for _ in 0..100 {
            let target: Vec<bool> = (0..side * side).map(|_| rng.gen()).collect();
            let report = match_target(&base, &b, &target, &priority);
            assert!(
                report.matched_after >= report.matched_before,
                "adjustment must not reduce agreement"
            );
            let decoded = decode_matrix(&report.matrix).unwrap();
            assert_eq!(decoded.payload, payload);
            assert_eq!(decoded.corrections, 0);
        }
    }
}
