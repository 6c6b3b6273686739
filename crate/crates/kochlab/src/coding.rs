//! Cusp-cut partitions of the flow space and symbolic codings of time-one
//! orbits.
//!
//! The compact part {f < 2^m} is tiled by columns of half-open cells clipped
//! against the roof graph. Column widths adapt to the roof slope so that
//! every atom's diameter in the sum metric lands inside [1/m, 2/m]; the cusp
//! {f >= 2^m} is the single atom 0.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::flow::{time_one_product, FlowPoint, ProductPoint};
use crate::roof::{DerivOrder, RoofFunction};
use crate::rotation::{CirclePos, Rotation};

const ATOM_CAP: usize = 500_000;
const BISECT_TOL: f64 = 1e-15;
const DIAM_TOL: f64 = 1e-9;

/// Geometry of one compact atom, for inspection and diameter verification.
#[derive(Clone, Copy, Debug)]
pub struct AtomInfo {
    pub x_lo: f64,
    pub x_hi: f64,
    pub v_lo: f64,
    /// Upper vertical extent; for a roof-clipped top cell this is the max of
    /// the roof over the column.
    pub v_hi: f64,
    pub diameter: f64,
}

#[derive(Clone, Debug)]
struct Column {
    x_lo: f64,
    /// Lower edges of the cells, ascending, starting at 0.
    edges: Vec<f64>,
    first_atom: u32,
}

/// The partition P_m: one cusp atom (symbol 0) plus a grid of compact atoms
/// with diameters in [1/m, 2/m].
#[derive(Clone, Debug)]
pub struct Partition {
    m: u32,
    cusp_height: f64,
    base_lo: f64,
    base_hi: f64,
    columns: Vec<Column>,
    atoms: Vec<AtomInfo>,
}

impl Partition {
    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn cusp_height(&self) -> f64 {
        self.cusp_height
    }

    /// Base interval [x-, x+] on which the roof stays below the cut height.
    pub fn base_interval(&self) -> (f64, f64) {
        (self.base_lo, self.base_hi)
    }

    pub fn compact_atoms(&self) -> &[AtomInfo] {
        &self.atoms
    }

    /// Number of symbols including the cusp atom 0.
    pub fn alphabet_size(&self) -> u32 {
        self.atoms.len() as u32 + 1
    }
}

fn bisect_root(f: &RoofFunction, target: f64, mut lo: f64, mut hi: f64, increasing: bool) -> f64 {
    // invariant: sign change of f - target between lo and hi
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        let v = f
            .eval(CirclePos::from_f64(mid), DerivOrder::Value)
            .unwrap_or(f64::INFINITY);
        let above = v > target;
        if above == increasing {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

fn roof_range(f: &RoofFunction, a: f64, b: f64) -> (f64, f64) {
    // f decreases on (0, 1/2], increases on [1/2, 1)
    let fa = f.eval(CirclePos::from_f64(a), DerivOrder::Value).unwrap();
    let fb = f.eval(CirclePos::from_f64(b), DerivOrder::Value).unwrap();
    if a <= 0.5 && b >= 0.5 {
        (f.min_value(), fa.max(fb))
    } else {
        (fa.min(fb), fa.max(fb))
    }
}

/// Horizontal extent of {x in [a, b] : f(x) > c}, measured between its
/// leftmost and rightmost points (the roof is decreasing, then increasing).
fn level_width(f: &RoofFunction, a: f64, b: f64, c: f64) -> f64 {
    let fv = |x: f64| {
        f.eval(CirclePos::from_f64(x), DerivOrder::Value)
            .unwrap_or(f64::INFINITY)
    };
    let fa = fv(a);
    let fb = fv(b);
    if fa > c && fb > c {
        return b - a;
    }
    if fa > c {
        // decreasing crossing in [a, min(b, 1/2)]
        let right = bisect_root(f, c, a, b.min(0.5), false).min(b);
        return right - a;
    }
    if fb > c {
        // increasing crossing in [max(a, 1/2), b]
        let left = bisect_root(f, c, a.max(0.5), b, true).max(a);
        return b - left;
    }
    0.0
}

/// Builds P_m. The cut endpoints solve f(x) = 2^m by bisection to 1e-15.
pub fn build_partition(f: &RoofFunction, m: u32) -> Result<Partition> {
    if m < 2 {
        return Err(Error::PartitionParameter { m });
    }
    let cusp_height = 2f64.powi(m as i32);
    if cusp_height <= f.min_value() {
        return Err(Error::Precondition(format!(
            "cut height 2^{m} does not clear the roof minimum"
        )));
    }
    let base_lo = bisect_root(f, cusp_height, 1e-300, 0.5, false);
    let base_hi = bisect_root(f, cusp_height, 0.5, 1.0 - 1e-16, true);

    // target atom diameter is the lower bracket edge 2h = 1/m: a slab with
    // horizontal extent e gets height 2h - e, and a short final remainder is
    // folded into the slab below it, which keeps the merged diameter < 4h
    let h = 1.0 / (2.0 * m as f64);
    let mut columns = Vec::new();
    let mut atoms: Vec<AtomInfo> = Vec::new();

    let mut x = base_lo;
    while x < base_hi - BISECT_TOL {
        // column width h, widened only when the fiber is too short for the
        // diameter bracket (shallow roof, small m)
        let mut w = h.min(base_hi - x);
        loop {
            let (_, f_hi) = roof_range(f, x, x + w);
            if w + f_hi >= 2.0 * h + DIAM_TOL || x + w >= base_hi - BISECT_TOL {
                break;
            }
            w = (w * 1.25).min(base_hi - x).min(1.9 * h);
            if w >= 1.9 * h - BISECT_TOL {
                break;
            }
        }
        let x_hi_col = (x + w).min(base_hi);
        let w = x_hi_col - x;
        let (_, f_hi) = roof_range(f, x, x_hi_col);

        // stack slabs bottom-up; each records (bottom, horizontal extent at
        // its bottom). A slab of extent e and height s has diameter e + s in
        // the sum metric, so interior slabs use s = 2h - e (diameter exactly
        // 2h = 1/m) and the final slab absorbs a remainder of up to 4h - e.
        let mut slabs: Vec<(f64, f64)> = Vec::new();
        let mut c = 0.0;
        loop {
            let extent = if slabs.is_empty() {
                w
            } else {
                level_width(f, x, x_hi_col, c)
            };
            let rem = f_hi - c;
            if slabs.is_empty() && rem <= 2.0 * h - extent {
                return Err(Error::Precondition(format!(
                    "column at x = {x} has fiber {rem} too short for diameter 1/{m}"
                )));
            }
            slabs.push((c, extent));
            if rem <= 4.0 * h - extent + DIAM_TOL {
                break; // the remainder itself sits inside the bracket
            }
            c += 2.0 * h - extent;
            if atoms.len() + slabs.len() > ATOM_CAP {
                return Err(Error::AtomCountCap {
                    count: atoms.len() + slabs.len(),
                    cap: ATOM_CAP,
                });
            }
        }

        let first_atom = atoms.len() as u32;
        let mut edges = Vec::with_capacity(slabs.len());
        for (k, &(lo, extent)) in slabs.iter().enumerate() {
            let v_hi = if k + 1 < slabs.len() {
                slabs[k + 1].0
            } else {
                f_hi
            };
            let diameter = extent + (v_hi - lo);
            if !(1.0 / m as f64 - DIAM_TOL..=2.0 / m as f64 + DIAM_TOL).contains(&diameter) {
                return Err(Error::Precondition(format!(
                    "atom diameter {diameter} outside [1/{m}, 2/{m}] at x = {x}, v = {lo}"
                )));
            }
            edges.push(lo);
            atoms.push(AtomInfo {
                x_lo: x,
                x_hi: x_hi_col,
                v_lo: lo,
                v_hi,
                diameter,
            });
        }
        columns.push(Column {
            x_lo: x,
            edges,
            first_atom,
        });
        x = x_hi_col;
    }

    Ok(Partition {
        m,
        cusp_height,
        base_lo,
        base_hi,
        columns,
        atoms,
    })
}

/// The unique atom containing `p`. Cells are half-open (closed on their
/// lower-left faces), so boundary points resolve deterministically.
pub fn atom_index(part: &Partition, p: &FlowPoint) -> u32 {
    let x = p.x_h.to_f64();
    if x < part.base_lo || x >= part.base_hi {
        return 0;
    }
    // binary search for the column with x_lo <= x < x_hi
    let mut lo = 0usize;
    let mut hi = part.columns.len();
    while hi - lo > 1 {
        let mid = (lo + hi) / 2;
        if part.columns[mid].x_lo <= x {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let col = &part.columns[lo];
    let v = p.x_v;
    let mut cell = 0usize;
    for (k, &edge) in col.edges.iter().enumerate() {
        if v >= edge {
            cell = k;
        } else {
            break;
        }
    }
    col.first_atom + cell as u32 + 1
}

/// A finite word over a finite alphabet.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymbolicWord {
    pub symbols: Vec<u32>,
    pub alphabet_size: u32,
}

impl SymbolicWord {
    pub fn new(symbols: Vec<u32>, alphabet_size: u32) -> Result<SymbolicWord> {
        if let Some(&s) = symbols.iter().find(|&&s| s >= alphabet_size) {
            return Err(Error::WordFormat(format!(
                "symbol {s} outside alphabet of size {alphabet_size}"
            )));
        }
        Ok(SymbolicWord {
            symbols,
            alphabet_size,
        })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Codes the time-one orbit of a single flow over atoms of `part`:
/// word length n + 1.
pub fn code_orbit_single(
    f: &RoofFunction,
    rot: &Rotation,
    part: &Partition,
    p: &FlowPoint,
    n: usize,
) -> Result<SymbolicWord> {
    let mut symbols = Vec::with_capacity(n + 1);
    let mut cur = *p;
    symbols.push(atom_index(part, &cur));
    for _ in 0..n {
        cur = crate::flow::flow(f, rot, &cur, 1.0)?.point;
        symbols.push(atom_index(part, &cur));
    }
    SymbolicWord::new(symbols, part.alphabet_size())
}

/// Codes the product orbit under the product partition. The product symbol
/// is index1 * |alphabet2| + index2, which fixes a bit-exact word format.
pub fn code_orbit(
    f1: &RoofFunction,
    f2: &RoofFunction,
    rot1: &Rotation,
    rot2: &Rotation,
    part1: &Partition,
    part2: &Partition,
    pp: &ProductPoint,
    n: usize,
) -> Result<SymbolicWord> {
    let a2 = part2.alphabet_size();
    let mut symbols = Vec::with_capacity(n + 1);
    let mut cur = *pp;
    symbols.push(atom_index(part1, &cur.first) * a2 + atom_index(part2, &cur.second));
    for _ in 0..n {
        cur = time_one_product(f1, f2, rot1, rot2, &cur)?.0;
        symbols.push(atom_index(part1, &cur.first) * a2 + atom_index(part2, &cur.second));
    }
    SymbolicWord::new(symbols, part1.alphabet_size() * a2)
}

const WORD_MAGIC: &[u8; 4] = b"KWRD";
const WORD_VERSION: u8 = 1;

/// Binary word format: magic "KWRD", version u8, alphabet_size u32 LE,
/// length u64 LE, then symbols as u32 LE.
pub fn write_word_binary<W: Write>(mut out: W, word: &SymbolicWord) -> Result<()> {
    out.write_all(WORD_MAGIC)?;
    out.write_all(&[WORD_VERSION])?;
    out.write_all(&word.alphabet_size.to_le_bytes())?;
    out.write_all(&(word.symbols.len() as u64).to_le_bytes())?;
    for &s in &word.symbols {
        out.write_all(&s.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_word_binary<R: Read>(mut inp: R) -> Result<SymbolicWord> {
    let mut magic = [0u8; 4];
    inp.read_exact(&mut magic)?;
    if &magic != WORD_MAGIC {
        return Err(Error::WordFormat("bad magic".into()));
    }
    let mut ver = [0u8; 1];
    inp.read_exact(&mut ver)?;
    if ver[0] != WORD_VERSION {
        return Err(Error::WordFormat(format!("unsupported version {}", ver[0])));
    }
    let mut buf4 = [0u8; 4];
    inp.read_exact(&mut buf4)?;
    let alphabet_size = u32::from_le_bytes(buf4);
    let mut buf8 = [0u8; 8];
    inp.read_exact(&mut buf8)?;
    let len = u64::from_le_bytes(buf8) as usize;
    let mut symbols = Vec::with_capacity(len);
    for _ in 0..len {
        inp.read_exact(&mut buf4)?;
        symbols.push(u32::from_le_bytes(buf4));
    }
    SymbolicWord::new(symbols, alphabet_size)
}

/// Text word format: one decimal symbol per line; the alphabet size is the
/// first line, prefixed with '#'.
pub fn write_word_text<W: Write>(mut out: W, word: &SymbolicWord) -> Result<()> {
    writeln!(out, "# alphabet {}", word.alphabet_size)?;
    for &s in &word.symbols {
        writeln!(out, "{s}")?;
    }
    Ok(())
}

pub fn read_word_text<R: Read>(mut inp: R) -> Result<SymbolicWord> {
    let mut text = String::new();
    inp.read_to_string(&mut text)?;
    let mut alphabet_size = 0u32;
    let mut symbols = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(a) = rest.trim().strip_prefix("alphabet") {
                alphabet_size = a
                    .trim()
                    .parse()
                    .map_err(|_| Error::WordFormat("bad alphabet header".into()))?;
            }
            continue;
        }
        symbols.push(
            line.parse()
                .map_err(|_| Error::WordFormat(format!("bad symbol line: {line}")))?,
        );
    }
    if alphabet_size == 0 {
        alphabet_size = symbols.iter().max().map_or(1, |&m| m + 1);
    }
    SymbolicWord::new(symbols, alphabet_size)
}
