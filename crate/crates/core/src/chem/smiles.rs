//! SMILES reader producing heavy-atom graphs.
//!
//! Supported: the organic subset (`B C N O P S F Cl Br I` and aromatic
//! `b c n o p s`), bracket atoms, the wildcard `*`, bonds `- = # : / \`,
//! branches, ring closures (`1`..`9`, `%nn`) and `.` separated fragments.
//! Stereo marks, isotopes, charges and atom classes inside brackets are
//! parsed and discarded; explicit hydrogens are dropped together with their
//! bonds.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use super::{Atom, Bond, BondType, MolGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SmilesErrorKind {
    Empty,
    NonAscii,
    UnknownToken(char),
    UnbalancedParenthesis,
    UnmatchedRingClosure(u32),
    BondWithoutAtom,
    BranchWithoutAtom,
    RingClosureWithoutAtom,
    DuplicateBond,
    SelfBond,
    InvalidBracketAtom(String),
    UnsupportedBond(char),
    NoHeavyAtoms,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct SmilesError {
    /// Byte offset into the input where the problem was detected.
    pub offset: usize,
    pub kind: SmilesErrorKind,
}

impl fmt::Display for SmilesError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use SmilesErrorKind::*;
        match &self.kind {
            Empty => write!(f, "empty SMILES"),
            NonAscii => write!(f, "non-ASCII character at byte {}", self.offset),
            UnknownToken(c) => write!(f, "unknown token `{c}` at byte {}", self.offset),
            UnbalancedParenthesis => write!(f, "unbalanced parenthesis at byte {}", self.offset),
            UnmatchedRingClosure(n) => {
                write!(f, "ring closure {n} opened at byte {} is never closed", self.offset)
            }
            BondWithoutAtom => write!(f, "bond symbol without a following atom at byte {}", self.offset),
            BranchWithoutAtom => write!(f, "branch without a preceding atom at byte {}", self.offset),
            RingClosureWithoutAtom => {
                write!(f, "ring closure without a preceding atom at byte {}", self.offset)
            }
            DuplicateBond => write!(f, "duplicate bond at byte {}", self.offset),
            SelfBond => write!(f, "ring closure bonds an atom to itself at byte {}", self.offset),
            InvalidBracketAtom(s) => write!(f, "invalid bracket atom `[{s}]` at byte {}", self.offset),
            UnsupportedBond(c) => write!(f, "unsupported bond `{c}` at byte {}", self.offset),
            NoHeavyAtoms => write!(f, "no heavy atoms"),
        }
    }
}

fn err<T>(offset: usize, kind: SmilesErrorKind) -> Result<T, SmilesError> {
    Err(SmilesError { offset, kind })
}

const ELEMENTS: &[&str] = &[
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl",
    "Ar", "K", "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As",
    "Se", "Br", "Kr", "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In",
    "Sn", "Sb", "Te", "I", "Xe", "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb",
    "Dy", "Ho", "Er", "Tm", "Yb", "Lu", "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl",
    "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra", "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk",
    "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db", "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh",
    "Fl", "Mc", "Lv", "Ts", "Og",
];

const AROMATIC_BRACKET: &[&str] = &["se", "as", "te", "b", "c", "n", "o", "p", "s"];

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum BondSym {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondSym {
    fn from_char(c: char) -> Option<BondSym> {
        match c {
            '-' | '/' | '\\' => Some(BondSym::Single),
            '=' => Some(BondSym::Double),
            '#' => Some(BondSym::Triple),
            ':' => Some(BondSym::Aromatic),
            _ => None,
        }
    }

    fn bond_type(self) -> BondType {
        match self {
            BondSym::Single => BondType::Single,
            BondSym::Double => BondType::Double,
            BondSym::Triple => BondType::Triple,
            BondSym::Aromatic => BondType::Aromatic,
        }
    }
}

struct RawBond {
    a: usize,
    b: usize,
    sym: Option<BondSym>,
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<RawBond>,
    pairs: HashSet<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(BondSym, usize)>,
    branches: Vec<(Option<usize>, usize)>,
    rings: BTreeMap<u32, (usize, Option<BondSym>, usize)>,
}

/// Parses a SMILES string into a heavy-atom [`MolGraph`].
///
/// Bonds without an explicit symbol are single, except between two aromatic
/// atoms that lie on a common ring, which are aromatic.
pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    if s.is_empty() {
        return err(0, SmilesErrorKind::Empty);
    }
    if let Some(pos) = s.bytes().position(|b| !b.is_ascii()) {
        return err(pos, SmilesErrorKind::NonAscii);
    }
    let mut p = Parser {
        s: s.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        pairs: HashSet::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn peek(&self) -> Option<char> {
        self.s.get(self.pos).map(|&b| b as char)
    }

    fn peek_at(&self, i: usize) -> Option<char> {
        self.s.get(i).map(|&b| b as char)
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let start = self.pos;
            match c {
                '(' => {
                    if self.prev.is_none() {
                        return err(start, SmilesErrorKind::BranchWithoutAtom);
                    }
                    if let Some((_, at)) = self.pending {
                        return err(at, SmilesErrorKind::BondWithoutAtom);
                    }
                    self.branches.push((self.prev, start));
                    self.pos += 1;
                }
                ')' => {
                    if let Some((_, at)) = self.pending {
                        return err(at, SmilesErrorKind::BondWithoutAtom);
                    }
                    let Some((prev, _)) = self.branches.pop() else {
                        return err(start, SmilesErrorKind::UnbalancedParenthesis);
                    };
                    self.prev = prev;
                    self.pos += 1;
                }
                '.' => {
                    if let Some((_, at)) = self.pending {
                        return err(at, SmilesErrorKind::BondWithoutAtom);
                    }
                    self.prev = None;
                    self.pos += 1;
                }
                '$' => return err(start, SmilesErrorKind::UnsupportedBond(c)),
                '0'..='9' | '%' => self.ring_closure()?,
                '[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, start)?;
                }
                _ => {
                    if let Some(sym) = BondSym::from_char(c) {
                        if self.pending.is_some() {
                            return err(start, SmilesErrorKind::UnknownToken(c));
                        }
                        self.pending = Some((sym, start));
                        self.pos += 1;
                    } else {
                        let atom = self.organic_atom()?;
                        self.add_atom(atom, start)?;
                    }
                }
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let start = self.pos;
        let c = self.peek().expect("caller checked");
        let next = self.peek_at(start + 1);
        let (symbol, aromatic, len) = match (c, next) {
            ('C', Some('l')) => ("Cl".to_string(), false, 2),
            ('B', Some('r')) => ("Br".to_string(), false, 2),
            ('B' | 'C' | 'N' | 'O' | 'P' | 'S' | 'F' | 'I' | '*', _) => (c.to_string(), false, 1),
            ('b' | 'c' | 'n' | 'o' | 'p' | 's', _) => (c.to_ascii_uppercase().to_string(), true, 1),
            _ => return err(start, SmilesErrorKind::UnknownToken(c)),
        };
        self.pos += len;
        Ok(Atom { symbol, aromatic })
    }

    fn s_str(&self, start: usize, len: usize) -> String {
        String::from_utf8_lossy(&self.s[start..start + len]).into_owned()
    }

    /// `[` isotope? symbol chirality? hcount? charge? class? `]`
    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.pos;
        let Some(close) = self.s[open..].iter().position(|&b| b == b']').map(|i| open + i) else {
            return err(open, SmilesErrorKind::InvalidBracketAtom(self.s_str(open + 1, self.s.len() - open - 1)));
        };
        let body = self.s_str(open + 1, close - open - 1);
        let bad = || {
            Err(SmilesError {
                offset: open,
                kind: SmilesErrorKind::InvalidBracketAtom(body.clone()),
            })
        };
        let b = body.as_bytes();
        let mut i = 0;
        while i < b.len() && b[i].is_ascii_digit() {
            i += 1;
        }
        // element symbol
        let rest = &body[i..];
        let (symbol, aromatic, len) = if rest.starts_with('*') {
            ("*".to_string(), false, 1)
        } else if let Some(ar) = AROMATIC_BRACKET.iter().find(|a| rest.starts_with(**a)) {
            let mut sym = ar.to_string();
            sym[..1].make_ascii_uppercase();
            (sym, true, ar.len())
        } else {
            let two = rest.get(..2).filter(|t| ELEMENTS.contains(t));
            let one = rest.get(..1).filter(|t| ELEMENTS.contains(t));
            match (two, one) {
                (Some(t), _) => (t.to_string(), false, 2),
                (None, Some(o)) => (o.to_string(), false, 1),
                _ => return bad(),
            }
        };
        i += len;
        // chirality: @, @@, or @TH1 / @AL2 / @SP3 / @TB12 / @OH30
        if i < b.len() && b[i] == b'@' {
            i += 1;
            if i < b.len() && b[i] == b'@' {
                i += 1;
            } else if i + 1 < b.len() && b[i].is_ascii_uppercase() && b[i + 1].is_ascii_uppercase() {
                i += 2;
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            }
        }
        // hydrogen count
        if i < b.len() && b[i] == b'H' {
            i += 1;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
        }
        // charge
        if i < b.len() && (b[i] == b'+' || b[i] == b'-') {
            let sign = b[i];
            i += 1;
            if i < b.len() && b[i].is_ascii_digit() {
                while i < b.len() && b[i].is_ascii_digit() {
                    i += 1;
                }
            } else {
                while i < b.len() && b[i] == sign {
                    i += 1;
                }
            }
        }
        // atom class
        if i < b.len() && b[i] == b':' {
            i += 1;
            let digits = i;
            while i < b.len() && b[i].is_ascii_digit() {
                i += 1;
            }
            if digits == i {
                return bad();
            }
        }
        if i != b.len() {
            return bad();
        }
        self.pos = close + 1;
        Ok(Atom { symbol, aromatic })
    }

    fn ring_closure(&mut self) -> Result<(), SmilesError> {
        let start = self.pos;
        let number = if self.peek() == Some('%') {
            let digits = self.s.get(start + 1..start + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
            let Some(d) = digits else {
                return err(start, SmilesErrorKind::UnknownToken('%'));
            };
            self.pos += 3;
            u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0')
        } else {
            self.pos += 1;
            u32::from(self.s[start] - b'0')
        };
        let Some(atom) = self.prev else {
            return err(start, SmilesErrorKind::RingClosureWithoutAtom);
        };
        let sym = self.pending.take().map(|(s, _)| s);
        match self.rings.remove(&number) {
            Some((other, open_sym, _)) => {
                if other == atom {
                    return err(start, SmilesErrorKind::SelfBond);
                }
                self.push_bond(other, atom, sym.or(open_sym), start)?;
            }
            None => {
                self.rings.insert(number, (atom, sym, start));
            }
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        let sym = self.pending.take().map(|(s, _)| s);
        if let Some(prev) = self.prev {
            self.push_bond(prev, idx, sym, offset)?;
        } else if sym.is_some() {
            return err(offset, SmilesErrorKind::BondWithoutAtom);
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn push_bond(&mut self, a: usize, b: usize, sym: Option<BondSym>, offset: usize) -> Result<(), SmilesError> {
        if !self.pairs.insert((a.min(b), a.max(b))) {
            return err(offset, SmilesErrorKind::DuplicateBond);
        }
        self.bonds.push(RawBond { a, b, sym });
        Ok(())
    }

    fn finish(self) -> Result<MolGraph, SmilesError> {
        if let Some((_, at)) = self.pending {
            return err(at, SmilesErrorKind::BondWithoutAtom);
        }
        if let Some(&(_, at)) = self.branches.last() {
            return err(at, SmilesErrorKind::UnbalancedParenthesis);
        }
        if let Some((&n, &(_, _, at))) = self.rings.iter().next() {
            return err(at, SmilesErrorKind::UnmatchedRingClosure(n));
        }
        if self.atoms.is_empty() {
            return err(0, SmilesErrorKind::Empty);
        }

        let ring_bond = ring_bonds(self.atoms.len(), &self.bonds);
        let typed: Vec<(usize, usize, BondType)> = self
            .bonds
            .iter()
            .zip(&ring_bond)
            .map(|(rb, &in_ring)| {
                let kind = match rb.sym {
                    Some(s) => s.bond_type(),
                    None if in_ring && self.atoms[rb.a].aromatic && self.atoms[rb.b].aromatic => {
                        BondType::Aromatic
                    }
                    None => BondType::Single,
                };
                (rb.a, rb.b, kind)
            })
            .collect();

        // drop explicit hydrogens and renumber
        let mut remap = vec![None; self.atoms.len()];
        let mut atoms = Vec::new();
        for (i, atom) in self.atoms.into_iter().enumerate() {
            if atom.symbol != "H" {
                remap[i] = Some(atoms.len());
                atoms.push(atom);
            }
        }
        if atoms.is_empty() {
            return err(0, SmilesErrorKind::NoHeavyAtoms);
        }
        let bonds = typed
            .into_iter()
            .filter_map(|(a, b, kind)| {
                Some(Bond {
                    a: remap[a]?,
                    b: remap[b]?,
                    kind,
                })
            })
            .collect();
        Ok(MolGraph::new(atoms, bonds).expect("parser maintains graph invariants"))
    }
}

/// For each bond, whether it lies on a cycle (its endpoints stay connected
/// without it).
fn ring_bonds(n: usize, bonds: &[RawBond]) -> Vec<bool> {
    let mut adj: HashMap<usize, Vec<(usize, usize)>> = HashMap::new();
    for (i, b) in bonds.iter().enumerate() {
        adj.entry(b.a).or_default().push((b.b, i));
        adj.entry(b.b).or_default().push((b.a, i));
    }
    bonds
        .iter()
        .enumerate()
        .map(|(skip, bond)| {
            let mut seen = vec![false; n];
            let mut stack = vec![bond.a];
            seen[bond.a] = true;
            while let Some(u) = stack.pop() {
                for &(v, e) in adj.get(&u).into_iter().flatten() {
                    if e != skip && !seen[v] {
                        if v == bond.b {
                            return true;
                        }
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
            false
        })
        .collect()
}
