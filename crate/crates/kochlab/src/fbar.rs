//! The f-bar matching metric on equal-length symbolic words, together with
//! the matching combinatorics used downstream: good matchings, matching
//! balls, dyadic stratification of matched times, the isometry dichotomy for
//! nearby base points, isometric-close-match counts, annular witness search,
//! and the shadow-set measure.
//!
//! f-bar(A, B) = 1 - r/len where r is the maximum cardinality of a matching
//! (a pair of strictly increasing index sequences on which symbols agree);
//! r is a longest-common-subsequence length.

use crate::coding::SymbolicWord;
use crate::error::{Error, Result};
use crate::flow::{flow_distance, time_one_product, ProductPoint};
use crate::roof::RoofFunction;
use crate::rotation::{orbit_point, CirclePos, Rotation};

const EXHAUSTIVE_CAP: usize = 14;
const ISOM_TOL: f64 = 1e-12;
const DICHOTOMY_SMALLNESS: f64 = 1e-2;

/// A matching between two words of common length `len`: strictly increasing
/// index pairs on which the symbols agree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    pairs: Vec<(u32, u32)>,
    len: u32,
}

impl Matching {
    pub fn new(pairs: Vec<(u32, u32)>, len: u32) -> Result<Matching> {
        for w in pairs.windows(2) {
            if w[1].0 <= w[0].0 || w[1].1 <= w[0].1 {
                return Err(Error::Precondition(format!(
                    "matching indices not strictly increasing: {:?} then {:?}",
                    w[0], w[1]
                )));
            }
        }
        if let Some(&(i, j)) = pairs.last() {
            if i >= len || j >= len {
                return Err(Error::Precondition(format!(
                    "matching index ({i},{j}) outside word length {len}"
                )));
            }
        }
        Ok(Matching { pairs, len })
    }

    /// Checks the symbol-agreement invariant against the two words.
    pub fn validate_against(&self, a: &SymbolicWord, b: &SymbolicWord) -> Result<()> {
        if a.len() != self.len as usize || b.len() != self.len as usize {
            return Err(Error::LengthMismatch {
                a: a.len(),
                b: b.len(),
            });
        }
        for &(i, j) in &self.pairs {
            if a.symbols[i as usize] != b.symbols[j as usize] {
                return Err(Error::Precondition(format!(
                    "matched symbols differ at pair ({i},{j})"
                )));
            }
        }
        Ok(())
    }

    pub fn pairs(&self) -> &[(u32, u32)] {
        &self.pairs
    }

    pub fn cardinality(&self) -> usize {
        self.pairs.len()
    }

    pub fn len_ref(&self) -> u32 {
        self.len
    }

    /// Index pair at position k; past the end both coordinates read as the
    /// sentinel value `len` (one past the last valid index).
    pub fn pair_or_sentinel(&self, k: usize) -> (u32, u32) {
        self.pairs
            .get(k)
            .copied()
            .unwrap_or((self.len, self.len))
    }
}

fn check_words(a: &SymbolicWord, b: &SymbolicWord) -> Result<()> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyWord);
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            a: a.len(),
            b: b.len(),
        });
    }
    Ok(())
}

/// Final row of the LCS table of `a` against `b` (lengths of LCS of `a`
/// with every prefix of `b`).
fn lcs_row(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut prev = vec![0u32; b.len() + 1];
    let mut cur = vec![0u32; b.len() + 1];
    for &x in a {
        cur[0] = 0;
        for (j, &y) in b.iter().enumerate() {
            cur[j + 1] = if x == y {
                prev[j] + 1
            } else {
                prev[j + 1].max(cur[j])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev
}

pub fn lcs_length(a: &[u32], b: &[u32]) -> usize {
    *lcs_row(a, b).last().unwrap_or(&0) as usize
}

/// Linear-memory divide-and-conquer reconstruction of one optimal matching.
/// Ties split at the smallest cut, and a lone row matches its first partner,
/// so the witness is deterministic.
fn hirschberg(a: &[u32], b: &[u32], ai: u32, bi: u32, out: &mut Vec<(u32, u32)>) {
    if a.is_empty() || b.is_empty() {
        return;
    }
    if a.len() == 1 {
        if let Some(j) = b.iter().position(|&y| y == a[0]) {
            out.push((ai, bi + j as u32));
        }
        return;
    }
    let mid = a.len() / 2;
    let left = lcs_row(&a[..mid], b);
    let a_rev: Vec<u32> = a[mid..].iter().rev().copied().collect();
    let b_rev: Vec<u32> = b.iter().rev().copied().collect();
    let right = lcs_row(&a_rev, &b_rev);
    let mut best = 0u32;
    let mut cut = 0usize;
    for j in 0..=b.len() {
        let total = left[j] + right[b.len() - j];
        if total > best {
            best = total;
            cut = j;
        }
    }
    hirschberg(&a[..mid], &b[..cut], ai, bi, out);
    hirschberg(&a[mid..], &b[cut..], ai + mid as u32, bi + cut as u32, out);
}

/// Exact f-bar distance with an optimal witness matching.
pub fn fbar_distance(a: &SymbolicWord, b: &SymbolicWord) -> Result<(f64, Matching)> {
    check_words(a, b)?;
    let r = lcs_length(&a.symbols, &b.symbols);
    let mut pairs = Vec::with_capacity(r);
    hirschberg(&a.symbols, &b.symbols, 0, 0, &mut pairs);
    debug_assert_eq!(pairs.len(), r);
    let witness = Matching::new(pairs, a.len() as u32)?;
    witness.validate_against(a, b)?;
    Ok((1.0 - r as f64 / a.len() as f64, witness))
}

/// Banded approximation: matchings restricted to |i - j| <= band. The
/// returned value is an upper bound on the exact f-bar; exploratory use
/// only.
pub fn fbar_banded(a: &SymbolicWord, b: &SymbolicWord, band: usize) -> Result<f64> {
    check_words(a, b)?;
    let n = a.len();
    let width = 2 * band + 1;
    // dp[i][j - (i - band)] over the diagonal band, two rolling rows
    let mut prev = vec![0u32; width + 2];
    let mut cur = vec![0u32; width + 2];
    for i in 0..n {
        for slot in 0..width {
            let j = i as i64 + slot as i64 - band as i64;
            if j < 0 || j >= n as i64 {
                cur[slot + 1] = 0;
                continue;
            }
            let j = j as usize;
            let diag = prev[slot + 1]; // (i-1, j-1) sits at the same slot
            let up = if slot + 2 <= width + 1 { prev[slot + 2] } else { 0 };
            let left = cur[slot];
            cur[slot + 1] = if a.symbols[i] == b.symbols[j] {
                (diag + 1).max(up).max(left)
            } else {
                up.max(left)
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let slot = (n - 1) as i64 - (n - 1) as i64 + band as i64; // j = i = n-1
    let r = prev[slot as usize + 1] as usize;
    Ok(1.0 - r as f64 / n as f64)
}

/// Ground-truth oracle: enumerates every strictly-increasing matching and
/// returns all matchings of maximum cardinality. Capped at length 14.
pub fn fbar_exhaustive(a: &SymbolicWord, b: &SymbolicWord) -> Result<(f64, Vec<Matching>)> {
    check_words(a, b)?;
    let n = a.len();
    if n > EXHAUSTIVE_CAP {
        return Err(Error::ExhaustiveCap {
            cap: EXHAUSTIVE_CAP,
            len: n,
        });
    }
    let mut best = 0usize;
    let mut optimal: Vec<Vec<(u32, u32)>> = Vec::new();
    let mut cur: Vec<(u32, u32)> = Vec::new();
    fn recurse(
        a: &[u32],
        b: &[u32],
        si: usize,
        sj: usize,
        cur: &mut Vec<(u32, u32)>,
        best: &mut usize,
        optimal: &mut Vec<Vec<(u32, u32)>>,
    ) {
        if cur.len() > *best {
            *best = cur.len();
            optimal.clear();
        }
        if cur.len() == *best {
            optimal.push(cur.clone());
        }
        for i in si..a.len() {
            // even with every extension the branch cannot reach the best
            if cur.len() + (a.len() - i).min(b.len() - sj) < *best {
                break;
            }
            for j in sj..b.len() {
                if a[i] == b[j] {
                    cur.push((i as u32, j as u32));
                    recurse(a, b, i + 1, j + 1, cur, best, optimal);
                    cur.pop();
                }
            }
        }
    }
    recurse(
        &a.symbols, &b.symbols, 0, 0, &mut cur, &mut best, &mut optimal,
    );
    let value = 1.0 - best as f64 / n as f64;
    let matchings = optimal
        .into_iter()
        .map(|p| Matching::new(p, n as u32))
        .collect::<Result<Vec<_>>>()?;
    Ok((value, matchings))
}

/// True iff the matching covers at least a (1 - eps) fraction of the word,
/// boundary inclusive.
pub fn is_good_matching(m: &Matching, n: usize, eps: f64) -> bool {
    m.cardinality() as f64 + 1e-9 >= (1.0 - eps) * n as f64
}

/// Indices r whose pair lies within u of pair w in both coordinates.
pub fn matching_ball(m: &Matching, w: usize, u: f64) -> Vec<usize> {
    let (iw, jw) = m.pairs[w];
    m.pairs
        .iter()
        .enumerate()
        .filter(|(_, &(i, j))| {
            (i as f64 - iw as f64).abs() <= u && (j as f64 - jw as f64).abs() <= u
        })
        .map(|(r, _)| r)
        .collect()
}

/// Geometry of one matched pair of times along two product orbits: per-factor
/// horizontal distances, their max L_H, and the full-metric max L.
#[derive(Clone, Copy, Debug)]
pub struct PairAnnotation {
    pub i: u32,
    pub j: u32,
    pub dh1: f64,
    pub dh2: f64,
    pub l_h: f64,
    pub l: f64,
}

/// Evaluates the pair geometry at every matched time of `m`, flowing `p`
/// to times i_r and `q` to times j_r with the time-one map.
pub fn annotate_matching(
    f1: &RoofFunction,
    f2: &RoofFunction,
    rot1: &Rotation,
    rot2: &Rotation,
    p: &ProductPoint,
    q: &ProductPoint,
    m: &Matching,
) -> Result<Vec<PairAnnotation>> {
    let max_i = m.pairs.iter().map(|&(i, _)| i).max().unwrap_or(0) as usize;
    let max_j = m.pairs.iter().map(|&(_, j)| j).max().unwrap_or(0) as usize;
    let mut orbit_p = Vec::with_capacity(max_i + 1);
    let mut orbit_q = Vec::with_capacity(max_j + 1);
    orbit_p.push(*p);
    orbit_q.push(*q);
    for _ in 0..max_i {
        let last = *orbit_p.last().unwrap();
        orbit_p.push(time_one_product(f1, f2, rot1, rot2, &last)?.0);
    }
    for _ in 0..max_j {
        let last = *orbit_q.last().unwrap();
        orbit_q.push(time_one_product(f1, f2, rot1, rot2, &last)?.0);
    }
    Ok(m.pairs
        .iter()
        .map(|&(i, j)| {
            let a = &orbit_p[i as usize];
            let b = &orbit_q[j as usize];
            let dh1 = a.first.x_h.dist(b.first.x_h).value();
            let dh2 = a.second.x_h.dist(b.second.x_h).value();
            let d1 = flow_distance(&a.first, &b.first);
            let d2 = flow_distance(&a.second, &b.second);
            PairAnnotation {
                i,
                j,
                dh1,
                dh2,
                l_h: dh1.max(dh2),
                l: d1.max(d2),
            }
        })
        .collect())
}

/// One dyadic stratum: matched indices r with L(r) < 2/m and
/// 2^{-j-1} < L_H(r) <= 2^{-j} (right-closed).
#[derive(Clone, Debug)]
pub struct StratificationRow {
    pub j: u32,
    pub members: Vec<usize>,
}

#[derive(Clone, Debug)]
pub struct StratifyReport {
    pub rows: Vec<StratificationRow>,
    /// r with L(r) >= 2/m, outside every stratum
    pub unassigned: Vec<usize>,
    /// r with L(r) < 2/m but L_H(r) = 0, in no dyadic bracket
    pub zero_horizontal: Vec<usize>,
}

/// The dyadic scale of x in (0, 1/2]: the unique j with 2^{-j-1} < x <= 2^{-j}.
pub fn dyadic_scale(x: f64) -> u32 {
    let k = -x.log2();
    let r = k.round();
    if (k - r).abs() < 1e-12 {
        r as u32
    } else {
        k.floor() as u32
    }
}

/// Stratifies the matched times of an annotated matching by the dyadic scale
/// of their horizontal distance, restricted to L(r) < 2/m.
pub fn stratify(ann: &[PairAnnotation], m: u32) -> StratifyReport {
    let cutoff = 2.0 / m as f64;
    let mut by_j: std::collections::BTreeMap<u32, Vec<usize>> = std::collections::BTreeMap::new();
    let mut unassigned = Vec::new();
    let mut zero_horizontal = Vec::new();
    for (r, a) in ann.iter().enumerate() {
        if a.l >= cutoff {
            unassigned.push(r);
        } else if a.l_h <= 0.0 {
            zero_horizontal.push(r);
        } else {
            by_j.entry(dyadic_scale(a.l_h)).or_default().push(r);
        }
    }
    StratifyReport {
        rows: by_j
            .into_iter()
            .map(|(j, members)| StratificationRow { j, members })
            .collect(),
        unassigned,
        zero_horizontal,
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DichotomyRow {
    pub t: f64,
    pub m: i64,
    pub n: i64,
    pub d_h: f64,
    pub isometric: bool,
    pub pass: bool,
}

#[derive(Clone, Debug)]
pub struct DichotomyReport {
    pub d0: f64,
    pub t_max: f64,
    pub rows: Vec<DichotomyRow>,
    pub violations: usize,
    pub all_pass: bool,
}

/// Checks, for two nearby base points and every t in [0, t_max], that the
/// horizontal distance is either exactly preserved (equal crossing counts)
/// or expanded by a factor greater than 100.
///
/// The sweep is exact, not a grid: crossing counts are constant between the
/// roof-crossing times of the two points, so one t per inter-event interval
/// covers all of [0, t_max].
pub fn dichotomy_check(
    f: &RoofFunction,
    rot: &Rotation,
    z: &crate::flow::FlowPoint,
    z2: &crate::flow::FlowPoint,
    t_max: f64,
) -> Result<DichotomyReport> {
    let d0 = z.x_h.dist(z2.x_h).value();
    if d0 > 0.0 {
        if d0 > DICHOTOMY_SMALLNESS {
            return Err(Error::Precondition(format!(
                "initial distance {d0} above smallness threshold {DICHOTOMY_SMALLNESS}"
            )));
        }
        let w = 1.0 / d0;
        let limit = w / w.ln().powi(4);
        if t_max > limit * (1.0 + 1e-12) {
            return Err(Error::Precondition(format!(
                "t_max {t_max} exceeds W/ln^4(W) = {limit}"
            )));
        }
    }

    // crossing times of a point: f^{(k)}(x_h) - x_v for k = 1, 2, ...
    let crossings = |p: &crate::flow::FlowPoint| -> Result<Vec<f64>> {
        let mut times = Vec::new();
        let mut s = -p.x_v;
        let mut k = 0i64;
        loop {
            let (base, _) = orbit_point(rot, p.x_h, k)?;
            s += f.eval(base, crate::roof::DerivOrder::Value)?;
            if s > t_max {
                break;
            }
            times.push(s);
            k += 1;
        }
        Ok(times)
    };
    let ev1 = crossings(z)?;
    let ev2 = crossings(z2)?;
    let mut events: Vec<f64> = ev1.iter().chain(ev2.iter()).copied().collect();
    events.push(0.0);
    events.push(t_max);
    events.sort_by(|a, b| a.partial_cmp(b).unwrap());
    events.dedup();

    let mut rows = Vec::new();
    let mut violations = 0;
    for pair in events.windows(2) {
        let t = 0.5 * (pair[0] + pair[1]);
        if !(0.0..=t_max).contains(&t) {
            continue;
        }
        let m = ev1.partition_point(|&e| e <= t) as i64;
        let n = ev2.partition_point(|&e| e <= t) as i64;
        let (b1, _) = orbit_point(rot, z.x_h, m)?;
        let (b2, _) = orbit_point(rot, z2.x_h, n)?;
        let d_h = b1.dist(b2).value();
        let isometric = m == n;
        // equal crossing counts shift both points by the same rotation, so
        // the distance is exactly preserved in the circle arithmetic
        let pass = if isometric {
            d_h == d0
        } else {
            d_h > 100.0 * d0
        };
        if !pass {
            violations += 1;
        }
        rows.push(DichotomyRow {
            t,
            m,
            n,
            d_h,
            isometric,
            pass,
        });
    }
    Ok(DichotomyReport {
        d0,
        t_max,
        all_pass: violations == 0,
        violations,
        rows,
    })
}

/// Counts matched indices r inside the ball B((i_w, j_w), window) whose
/// per-factor horizontal distances equal those at w to within 1e-12 and
/// whose full distance L(r) is below `closeness`.
pub fn count_isometric_close(
    ann: &[PairAnnotation],
    w: usize,
    window: f64,
    closeness: f64,
) -> usize {
    let aw = &ann[w];
    ann.iter()
        .filter(|a| {
            (a.i as f64 - aw.i as f64).abs() <= window
                && (a.j as f64 - aw.j as f64).abs() <= window
                && (a.dh1 - aw.dh1).abs() <= ISOM_TOL
                && (a.dh2 - aw.dh2).abs() <= ISOM_TOL
                && a.l < closeness
        })
        .count()
}

#[derive(Clone, Debug)]
pub struct WitnessReport {
    pub r_w: f64,
    /// outer and inner radii of the first annulus
    pub window1: (f64, f64),
    /// outer and inner radii of the second annulus
    pub window2: (f64, f64),
    pub first: Option<usize>,
    pub second: Option<usize>,
    pub reason: Option<String>,
}

impl WitnessReport {
    pub fn found_both(&self) -> bool {
        self.first.is_some() && self.second.is_some()
    }
}

/// Searches for r1 > r0 > w in the two annular matching balls around w, at
/// radii R_w^{1/(1+|gamma2|)+eps0} and R_w^{1-eps0} with inner radii shrunk
/// by 2 ln^2(R_w), whose time offsets pass the supplied good-set test.
pub fn claim_witness_search(
    ann: &[PairAnnotation],
    w: usize,
    eps0: f64,
    gamma2_abs: f64,
    good_test: &dyn Fn(i64) -> bool,
) -> Result<WitnessReport> {
    let aw = &ann[w];
    if aw.l_h <= 0.0 {
        return Err(Error::Precondition(
            "horizontal distance at w is zero; R_w is infinite".into(),
        ));
    }
    let r_w = 1.0 / aw.l_h;
    let ln2 = r_w.ln().powi(2);
    let z1 = r_w.powf(1.0 / (1.0 + gamma2_abs) + eps0);
    let z2 = r_w.powf(1.0 - eps0);
    let windows = [(z1, 0.5 * z1 / ln2), (z2, 0.5 * z2 / ln2)];
    let mut report = WitnessReport {
        r_w,
        window1: windows[0],
        window2: windows[1],
        first: None,
        second: None,
        reason: None,
    };
    if z1 < 1.0 {
        report.reason = Some(format!("first annulus empty: outer radius {z1} < 1"));
        return Ok(report);
    }
    let in_annulus = |a: &PairAnnotation, outer: f64, inner: f64| {
        let di = (a.i as f64 - aw.i as f64).abs();
        let dj = (a.j as f64 - aw.j as f64).abs();
        di <= outer && dj <= outer && !(di <= inner && dj <= inner)
    };
    for (r, a) in ann.iter().enumerate().skip(w + 1) {
        if in_annulus(a, windows[0].0, windows[0].1) && good_test(a.i as i64 - aw.i as i64) {
            report.first = Some(r);
            break;
        }
    }
    let Some(r0) = report.first else {
        report.reason = Some("no index in the first annulus passes the good-set test".into());
        return Ok(report);
    };
    for (r, a) in ann.iter().enumerate().skip(r0 + 1) {
        if in_annulus(a, windows[1].0, windows[1].1) && good_test(a.i as i64 - aw.i as i64) {
            report.second = Some(r);
            break;
        }
    }
    if report.second.is_none() {
        report.reason = Some("no index past r0 in the second annulus passes the test".into());
    }
    Ok(report)
}

/// Exact Lebesgue measure of the union of intervals of radius
/// R^{-1/(1-eps0)} centered on the orbit points i*alpha for |i| <= 2*C1*R.
/// Translation invariance makes the center point irrelevant, so it is 0.
pub fn shadow_set_measure(rot: &Rotation, r: u64, eps0: f64, c1: f64) -> Result<f64> {
    if r < 2 {
        return Err(Error::Precondition("R must be at least 2".into()));
    }
    let radius = (r as f64).powf(-1.0 / (1.0 - eps0));
    if radius >= 0.5 {
        return Ok(1.0);
    }
    let k_max = (2.0 * c1 * r as f64).floor() as i64;
    let mut intervals: Vec<(f64, f64)> = Vec::with_capacity(2 * k_max as usize + 3);
    for i in -k_max..=k_max {
        let (c, _) = orbit_point(rot, CirclePos::from_bits(0), i)?;
        let c = c.to_f64();
        let lo = c - radius;
        let hi = c + radius;
        // unwrap across 0/1 by splitting
        if lo < 0.0 {
            intervals.push((lo + 1.0, 1.0));
            intervals.push((0.0, hi));
        } else if hi > 1.0 {
            intervals.push((lo, 1.0));
            intervals.push((0.0, hi - 1.0));
        } else {
            intervals.push((lo, hi));
        }
    }
    intervals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut total = 0.0;
    let mut cur_lo = intervals[0].0;
    let mut cur_hi = intervals[0].1;
    for &(lo, hi) in &intervals[1..] {
        if lo > cur_hi {
            total += cur_hi - cur_lo;
            cur_lo = lo;
            cur_hi = hi;
        } else {
            cur_hi = cur_hi.max(hi);
        }
    }
    total += cur_hi - cur_lo;
    Ok(total.min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::FlowPoint;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn word(symbols: &[u32], alphabet: u32) -> SymbolicWord {
        SymbolicWord::new(symbols.to_vec(), alphabet).unwrap()
    }

    #[test]
    fn identical_words_at_distance_zero() {
        let a = word(&[0, 1, 2, 1, 0, 2], 3);
        let (v, m) = fbar_distance(&a, &a).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(m.cardinality(), 6);
        for (k, &(i, j)) in m.pairs().iter().enumerate() {
            assert_eq!((i, j), (k as u32, k as u32));
        }
    }

    #[test]
    fn disjoint_alphabets_at_distance_one() {
        let a = word(&[0, 0, 1, 1], 4);
        let b = word(&[2, 3, 2, 3], 4);
        let (v, m) = fbar_distance(&a, &b).unwrap();
        assert_eq!(v, 1.0);
        assert_eq!(m.cardinality(), 0);
    }

    #[test]
    fn alternating_example_is_one_quarter() {
        let a = word(&[0, 1, 0, 1], 2);
        let b = word(&[1, 0, 1, 0], 2);
        let (v, m) = fbar_distance(&a, &b).unwrap();
        assert_eq!(m.cardinality(), 3);
        assert!((v - 0.25).abs() < 1e-15);
        let (ve, all) = fbar_exhaustive(&a, &b).unwrap();
        assert_eq!(ve, v);
        assert!(all.iter().all(|m| m.cardinality() == 3));
        assert!(!all.is_empty());
    }

    #[test]
    fn single_symbol_words() {
        let a = word(&[1], 2);
        let b = word(&[1], 2);
        let c = word(&[0], 2);
        assert_eq!(fbar_exhaustive(&a, &b).unwrap().0, 0.0);
        assert_eq!(fbar_exhaustive(&a, &c).unwrap().0, 1.0);
    }

    #[test]
    fn dp_matches_oracle_on_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..300 {
            let len = rng.gen_range(1..=12);
            let alphabet = rng.gen_range(2..=5);
            let a: Vec<u32> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
            let b: Vec<u32> = (0..len).map(|_| rng.gen_range(0..alphabet)).collect();
            let a = word(&a, alphabet);
            let b = word(&b, alphabet);
            let (dp, wit) = fbar_distance(&a, &b).unwrap();
            let (ex, _) = fbar_exhaustive(&a, &b).unwrap();
            assert_eq!(dp, ex, "a={:?} b={:?}", a.symbols, b.symbols);
            wit.validate_against(&a, &b).unwrap();
        }
    }

    #[test]
    fn exhaustive_cap_enforced() {
        let a = word(&vec![0; 15], 2);
        assert!(matches!(
            fbar_exhaustive(&a, &a),
            Err(Error::ExhaustiveCap { .. })
        ));
    }

    #[test]
    fn triangle_inequality_sampled() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let len = rng.gen_range(1..=60);
            let alphabet = rng.gen_range(2..=4);
            let gen = |rng: &mut ChaCha8Rng| -> SymbolicWord {
                word(
                    &(0..len)
                        .map(|_| rng.gen_range(0..alphabet))
                        .collect::<Vec<_>>(),
                    alphabet,
                )
            };
            let a = gen(&mut rng);
            let b = gen(&mut rng);
            let c = gen(&mut rng);
            let ab = fbar_distance(&a, &b).unwrap().0;
            let bc = fbar_distance(&b, &c).unwrap().0;
            let ac = fbar_distance(&a, &c).unwrap().0;
            assert!(ac <= ab + bc + 1e-12);
            assert_eq!(ab, fbar_distance(&b, &a).unwrap().0);
        }
    }

    #[test]
    fn coarsening_never_increases_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..100 {
            let len = rng.gen_range(1..=50);
            let a: Vec<u32> = (0..len).map(|_| rng.gen_range(0..6)).collect();
            let b: Vec<u32> = (0..len).map(|_| rng.gen_range(0..6)).collect();
            let merge = |s: u32| s / 2; // 6 symbols folded onto 3
            let fine = fbar_distance(&word(&a, 6), &word(&b, 6)).unwrap().0;
            let am: Vec<u32> = a.iter().map(|&s| merge(s)).collect();
            let bm: Vec<u32> = b.iter().map(|&s| merge(s)).collect();
            let coarse = fbar_distance(&word(&am, 3), &word(&bm, 3)).unwrap().0;
            assert!(coarse <= fine + 1e-12);
        }
    }

    #[test]
    fn banded_upper_bounds_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let len = rng.gen_range(2..=80);
            let a: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let b: Vec<u32> = (0..len).map(|_| rng.gen_range(0..3)).collect();
            let a = word(&a, 3);
            let b = word(&b, 3);
            let exact = fbar_distance(&a, &b).unwrap().0;
            let banded = fbar_banded(&a, &b, 5).unwrap();
            assert!(banded >= exact - 1e-12);
            let wide = fbar_banded(&a, &b, len).unwrap();
            assert!((wide - exact).abs() < 1e-12, "full band must be exact");
        }
    }

    #[test]
    fn error_cases() {
        let a = word(&[0, 1], 2);
        let b = word(&[0, 1, 1], 2);
        assert!(matches!(
            fbar_distance(&a, &b),
            Err(Error::LengthMismatch { .. })
        ));
        let empty = SymbolicWord::new(vec![], 2).unwrap();
        assert!(matches!(fbar_distance(&empty, &empty), Err(Error::EmptyWord)));
    }

    #[test]
    fn sentinel_convention() {
        let m = Matching::new(vec![(0, 1), (2, 3)], 5).unwrap();
        assert_eq!(m.pair_or_sentinel(1), (2, 3));
        assert_eq!(m.pair_or_sentinel(2), (5, 5));
    }

    #[test]
    fn good_matching_boundary() {
        let pairs: Vec<(u32, u32)> = (0..99).map(|k| (k, k)).collect();
        let m = Matching::new(pairs, 100).unwrap();
        assert!(is_good_matching(&m, 100, 0.01));
        let m_full = Matching::new((0..100).map(|k| (k, k)).collect(), 100).unwrap();
        assert!(is_good_matching(&m_full, 100, 1e-9));
        let empty = Matching::new(vec![], 100).unwrap();
        assert!(!is_good_matching(&empty, 100, 0.5));
    }

    #[test]
    fn matching_ball_cases() {
        let pairs: Vec<(u32, u32)> = vec![(0, 0), (2, 1), (4, 6), (9, 9), (12, 11)];
        let m = Matching::new(pairs, 13).unwrap();
        assert_eq!(matching_ball(&m, 1, 0.0), vec![1]);
        assert_eq!(matching_ball(&m, 0, 20.0).len(), 5);
        // brute scan agreement
        let u = 5.0;
        let by_scan: Vec<usize> = (0..5)
            .filter(|&r| {
                let (i, j) = m.pairs()[r];
                (i as i64 - 2).abs() as f64 <= u && (j as i64 - 1).abs() as f64 <= u
            })
            .collect();
        assert_eq!(matching_ball(&m, 1, u), by_scan);
    }

    fn synthetic_annotation(entries: &[(u32, u32, f64, f64, f64)]) -> Vec<PairAnnotation> {
        entries
            .iter()
            .map(|&(i, j, dh1, dh2, l)| PairAnnotation {
                i,
                j,
                dh1,
                dh2,
                l_h: dh1.max(dh2),
                l,
            })
            .collect()
    }

    #[test]
    fn dyadic_scale_brackets() {
        assert_eq!(dyadic_scale(0.01), 6);
        assert_eq!(dyadic_scale(0.25), 2); // exact power: right-closed
        assert_eq!(dyadic_scale(0.2), 2);
        assert_eq!(dyadic_scale(0.3), 1);
    }

    #[test]
    fn stratify_disjoint_and_exhaustive() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let ann: Vec<PairAnnotation> = (0..500)
            .map(|k| {
                let dh1 = rng.gen::<f64>() * 0.5;
                let dh2 = rng.gen::<f64>() * 0.5;
                PairAnnotation {
                    i: k,
                    j: k,
                    dh1,
                    dh2,
                    l_h: dh1.max(dh2),
                    l: dh1.max(dh2) + rng.gen::<f64>() * 0.3,
                }
            })
            .collect();
        let m = 4;
        let rep = stratify(&ann, m);
        let mut seen = std::collections::HashSet::new();
        for row in &rep.rows {
            for &r in &row.members {
                assert!(seen.insert(r), "index {r} in two strata");
                let a = &ann[r];
                assert!(a.l < 2.0 / m as f64);
                let upper = 2f64.powi(-(row.j as i32));
                assert!(a.l_h <= upper && a.l_h > upper / 2.0);
            }
        }
        for &r in rep.unassigned.iter().chain(&rep.zero_horizontal) {
            assert!(seen.insert(r));
        }
        assert_eq!(seen.len(), ann.len());
    }

    #[test]
    fn dichotomy_identical_points() {
        let f = RoofFunction::new(-0.5, true).unwrap();
        let rot = Rotation::golden(40).unwrap();
        let z = FlowPoint::new(&f, CirclePos::from_f64(0.37), 0.2).unwrap();
        let rep = dichotomy_check(&f, &rot, &z, &z, 3.0).unwrap();
        assert!(rep.all_pass);
        assert!(rep.rows.iter().all(|r| r.isometric));
    }

    #[test]
    fn dichotomy_no_crossing_branch() {
        let f = RoofFunction::new(-0.5, true).unwrap();
        let rot = Rotation::golden(40).unwrap();
        let z = FlowPoint::new(&f, CirclePos::from_f64(0.3), 0.0).unwrap();
        let z2 = FlowPoint::new(&f, CirclePos::from_f64(0.3 + 1e-4), 0.0).unwrap();
        let rep = dichotomy_check(&f, &rot, &z, &z2, 0.25).unwrap();
        let first = rep.rows.first().unwrap();
        assert_eq!((first.m, first.n), (0, 0));
        assert!(first.isometric && first.pass);
    }

    #[test]
    fn dichotomy_full_sweep_golden() {
        let f = RoofFunction::new(-0.5, true).unwrap();
        let rot = Rotation::golden(40).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for _ in 0..20 {
            let w = 1e4;
            let x = rng.gen::<f64>();
            let z = FlowPoint::new_unchecked(CirclePos::from_f64(x), 0.0);
            let z2 = FlowPoint::new_unchecked(CirclePos::from_f64(x + 1.0 / w), 0.0);
            let t_max = w / w.ln().powi(4);
            let rep = dichotomy_check(&f, &rot, &z, &z2, t_max).unwrap();
            assert!(rep.all_pass, "violations: {}", rep.violations);
        }
    }

    #[test]
    fn dichotomy_preconditions() {
        let f = RoofFunction::new(-0.5, true).unwrap();
        let rot = Rotation::golden(40).unwrap();
        let z = FlowPoint::new(&f, CirclePos::from_f64(0.3), 0.0).unwrap();
        let z2 = FlowPoint::new(&f, CirclePos::from_f64(0.45), 0.0).unwrap();
        assert!(dichotomy_check(&f, &rot, &z, &z2, 1.0).is_err());
        let z3 = FlowPoint::new(&f, CirclePos::from_f64(0.3001), 0.0).unwrap();
        assert!(dichotomy_check(&f, &rot, &z, &z3, 1e6).is_err());
    }

    #[test]
    fn isometric_close_count_cases() {
        let ann = synthetic_annotation(&[
            (10, 10, 0.001, 0.002, 0.01),
            (12, 12, 0.001, 0.002, 0.01),
            (13, 13, 0.001, 0.002, 0.5),  // too far in L
            (14, 14, 0.004, 0.002, 0.01), // different dh1
            (40, 40, 0.001, 0.002, 0.01), // outside window
        ]);
        assert_eq!(count_isometric_close(&ann, 0, 5.0, 0.1), 2);
        assert_eq!(count_isometric_close(&ann, 0, 0.0, 0.1), 1);
        assert_eq!(count_isometric_close(&ann, 0, 5.0, 0.0), 0);
        // brute recount from the definition
        let w = 0;
        let window = 50.0;
        let closeness = 0.1;
        let brute = ann
            .iter()
            .filter(|a| {
                (a.i as f64 - ann[w].i as f64).abs() <= window
                    && (a.j as f64 - ann[w].j as f64).abs() <= window
                    && (a.dh1 - ann[w].dh1).abs() <= 1e-12
                    && (a.dh2 - ann[w].dh2).abs() <= 1e-12
                    && a.l < closeness
            })
            .count();
        assert_eq!(count_isometric_close(&ann, w, window, closeness), brute);
    }

    #[test]
    fn witness_search_absence_and_presence() {
        // l_h at w = 0.01 -> R_w = 100; gamma2 = -0.5, eps0 = 0.05:
        // z1 = 100^(2/3 + 0.05) ~ 27.1, inner1 ~ 0.64
        // z2 = 100^0.95 ~ 79.4, inner2 ~ 1.87
        let mut entries = vec![(100u32, 100u32, 0.01, 0.0, 0.02)];
        let all_good = |_: i64| true;
        let ann = synthetic_annotation(&entries);
        let rep = claim_witness_search(&ann, 0, 0.05, 0.5, &all_good).unwrap();
        assert!(rep.first.is_none() && rep.reason.is_some());

        entries.push((110, 110, 0.002, 0.0, 0.004)); // offset 10: first annulus
        entries.push((140, 141, 0.002, 0.0, 0.004)); // offset 40: second annulus
        let ann = synthetic_annotation(&entries);
        let rep = claim_witness_search(&ann, 0, 0.05, 0.5, &all_good).unwrap();
        assert_eq!((rep.first, rep.second), (Some(1), Some(2)));
        // recompute the annulus inequalities for the found witnesses
        let ln2 = rep.r_w.ln().powi(2);
        let off1 = (ann[1].i - ann[0].i) as f64;
        assert!(off1 <= rep.window1.0 && off1 > 0.5 * rep.window1.0 / ln2);
        let off2 = (ann[2].i - ann[0].i) as f64;
        assert!(off2 <= rep.window2.0 && off2 > 0.5 * rep.window2.0 / ln2);

        let none_good = |_: i64| false;
        let rep = claim_witness_search(&ann, 0, 0.05, 0.5, &none_good).unwrap();
        assert!(!rep.found_both());

        // zero horizontal distance at w is rejected
        let bad = synthetic_annotation(&[(0, 0, 0.0, 0.0, 0.1)]);
        assert!(claim_witness_search(&bad, 0, 0.05, 0.5, &all_good).is_err());
    }

    #[test]
    fn shadow_measure_disjoint_formula() {
        let rot = Rotation::golden(40).unwrap();
        // small R with tiny radius: the five intervals at i*alpha, |i| <= 2,
        // radius 1/16, are pairwise disjoint (closest centers are 0.146
        // apart), so the union measure is exactly the disjoint sum
        let r = 4u64;
        let eps0 = 0.5; // radius = 4^-2 = 1/16
        let c1 = 0.25; // k_max = floor(2 * 0.25 * 4) = 2
        let radius = (r as f64).powf(-1.0 / (1.0 - eps0));
        let measure = shadow_set_measure(&rot, r, eps0, c1).unwrap();
        let expected = 5.0 * 2.0 * radius;
        assert!((measure - expected).abs() < 1e-12, "measure {measure}");
    }

    #[test]
    fn shadow_measure_bound_and_trend() {
        let rot = Rotation::golden(60).unwrap();
        let c1 = 1.0 / RoofFunction::new(-0.5, true).unwrap().min_value();
        // small eps0 (the regime the bound is used in): intervals overlap
        // heavily and the count bound exceeds the trivial measure 1
        let eps0 = 0.01;
        for k in [10u32, 14, 18] {
            let r = 1u64 << k;
            let m = shadow_set_measure(&rot, r, eps0, c1).unwrap();
            let bound = (4.0 * c1 * r as f64 + 2.0) * (r as f64).powf(-1.0 / (1.0 - eps0));
            assert!(m <= bound + 1e-12);
        }
        // large eps0: disjoint regime, the union measure shrinks with R
        let mut last = f64::INFINITY;
        for k in [10u32, 12, 14, 16] {
            let m = shadow_set_measure(&rot, 1u64 << k, 0.5, c1).unwrap();
            assert!(m < last, "measure should shrink as R grows");
            last = m;
        }
    }

    #[test]
    fn annotate_matching_geometry() {
        let f1 = RoofFunction::new(-0.3, true).unwrap();
        let f2 = RoofFunction::new(-0.7, true).unwrap();
        let rot1 = Rotation::golden(40).unwrap();
        let rot2 = Rotation::sqrt2m1(30).unwrap();
        let p = ProductPoint {
            first: FlowPoint::new(&f1, CirclePos::from_f64(0.3), 0.1).unwrap(),
            second: FlowPoint::new(&f2, CirclePos::from_f64(0.6), 0.2).unwrap(),
        };
        let q = ProductPoint {
            first: FlowPoint::new(&f1, CirclePos::from_f64(0.3002), 0.1).unwrap(),
            second: FlowPoint::new(&f2, CirclePos::from_f64(0.6003), 0.2).unwrap(),
        };
        let m = Matching::new(vec![(0, 0), (3, 3), (7, 8)], 10).unwrap();
        let ann = annotate_matching(&f1, &f2, &rot1, &rot2, &p, &q, &m).unwrap();
        assert_eq!(ann.len(), 3);
        // first pair is at time zero for both: distances match direct ones
        let g = crate::flow::pair_geometry(&p, &q);
        assert!((ann[0].l_h - g.l_h).abs() < 1e-15);
        assert!((ann[0].l - g.l).abs() < 1e-15);
        for a in &ann {
            assert!(a.l_h <= a.l + 1e-15);
            assert_eq!(a.l_h, a.dh1.max(a.dh2));
        }
    }
}
