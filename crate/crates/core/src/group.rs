//! Exact arithmetic for a small menu of finitely generated groups.
//!
//! Elements are kept in a canonical form per family so that equality of
//! elements is equality of representations, and every element has an
//! injective byte encoding ([`GroupModel::canonical_code`]) used as a hash
//! key by ball enumeration.

use std::collections::VecDeque;
use std::fmt;

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::GroupError;

/// Largest free-group rank; letters are encoded as one signed byte.
pub const MAX_FREE_RANK: usize = 127;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    /// Integer vector of a free abelian group.
    Vector(Vec<i64>),
    /// Upper unitriangular matrix `[[1, a, c], [0, 1, b], [0, 0, 1]]` stored as `[a, b, c]`.
    Heisenberg([i64; 3]),
    /// Freely reduced word; letter `i` is `+(i+1)`, its inverse `-(i+1)`.
    Word(Vec<i8>),
    /// Component-wise element of a direct product.
    Tuple(Vec<Element>),
}

impl Element {
    /// Parses a free-group word written with lowercase letters for generators
    /// and uppercase letters for their inverses, e.g. `"aB"`.
    pub fn word_from_letters(s: &str) -> Result<Element, GroupError> {
        let mut letters = Vec::with_capacity(s.len());
        for ch in s.chars() {
            let letter = match ch {
                'a'..='z' => (ch as u8 - b'a' + 1) as i8,
                'A'..='Z' => -((ch as u8 - b'A' + 1) as i8),
                _ => {
                    return Err(GroupError::InvalidParameter(format!(
                        "bad letter {ch:?} in word {s:?}"
                    )))
                }
            };
            push_reduced(&mut letters, letter);
        }
        Ok(Element::Word(letters))
    }
}

fn letter_char(l: i8) -> char {
    let base = if l > 0 { b'a' } else { b'A' };
    let idx = l.unsigned_abs() - 1;
    if idx < 26 {
        (base + idx) as char
    } else {
        '?'
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Element::Vector(v) => {
                write!(f, "(")?;
                for (i, x) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{x}")?;
                }
                write!(f, ")")
            }
            Element::Heisenberg([a, b, c]) => write!(f, "H({a},{b},{c})"),
            Element::Word(w) if w.is_empty() => write!(f, "e"),
            Element::Word(w) => {
                for &l in w {
                    if l.unsigned_abs() as usize <= 26 {
                        write!(f, "{}", letter_char(l))?;
                    } else {
                        write!(f, "<{l}>")?;
                    }
                }
                Ok(())
            }
            Element::Tuple(parts) => {
                write!(f, "[")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, "]")
            }
        }
    }
}

fn push_reduced(word: &mut Vec<i8>, letter: i8) {
    if word.last() == Some(&-letter) {
        word.pop();
    } else {
        word.push(letter);
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GroupFamily {
    FreeAbelian { rank: usize },
    Heisenberg3,
    FreeGroup { rank: usize },
    DirectProduct { factors: Vec<GroupFamily> },
}

impl fmt::Display for GroupFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupFamily::FreeAbelian { rank } => write!(f, "Z^{rank}"),
            GroupFamily::Heisenberg3 => write!(f, "H3(Z)"),
            GroupFamily::FreeGroup { rank } => write!(f, "F{rank}"),
            GroupFamily::DirectProduct { factors } => {
                for (i, x) in factors.iter().enumerate() {
                    if i > 0 {
                        write!(f, " x ")?;
                    }
                    write!(f, "{x}")?;
                }
                Ok(())
            }
        }
    }
}

/// A concrete finitely generated group with exact element arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupModel {
    family: GroupFamily,
    factors: Vec<GroupModel>,
}

impl GroupModel {
    pub fn new(family: GroupFamily) -> Result<Self, GroupError> {
        let factors = match &family {
            GroupFamily::FreeAbelian { rank } if *rank == 0 => {
                return Err(GroupError::InvalidParameter(
                    "free abelian rank must be >= 1".into(),
                ))
            }
            GroupFamily::FreeGroup { rank } if *rank == 0 || *rank > MAX_FREE_RANK => {
                return Err(GroupError::InvalidParameter(format!(
                    "free group rank must be in 1..={MAX_FREE_RANK}"
                )))
            }
            GroupFamily::DirectProduct { factors } => {
                if factors.is_empty() {
                    return Err(GroupError::InvalidParameter(
                        "direct product needs at least one factor".into(),
                    ));
                }
                factors
                    .iter()
                    .cloned()
                    .map(GroupModel::new)
                    .collect::<Result<Vec<_>, _>>()?
            }
            _ => Vec::new(),
        };
        Ok(GroupModel { family, factors })
    }

    pub fn free_abelian(rank: usize) -> Result<Self, GroupError> {
        Self::new(GroupFamily::FreeAbelian { rank })
    }

    pub fn heisenberg() -> Self {
        Self::new(GroupFamily::Heisenberg3).expect("heisenberg has no parameters")
    }

    pub fn free_group(rank: usize) -> Result<Self, GroupError> {
        Self::new(GroupFamily::FreeGroup { rank })
    }

    pub fn family(&self) -> &GroupFamily {
        &self.family
    }

    pub fn factors(&self) -> &[GroupModel] {
        &self.factors
    }

    pub fn identity(&self) -> Element {
        match &self.family {
            GroupFamily::FreeAbelian { rank } => Element::Vector(vec![0; *rank]),
            GroupFamily::Heisenberg3 => Element::Heisenberg([0; 3]),
            GroupFamily::FreeGroup { .. } => Element::Word(Vec::new()),
            GroupFamily::DirectProduct { .. } => {
                Element::Tuple(self.factors.iter().map(|f| f.identity()).collect())
            }
        }
    }

    pub fn contains(&self, g: &Element) -> bool {
        match (&self.family, g) {
            (GroupFamily::FreeAbelian { rank }, Element::Vector(v)) => v.len() == *rank,
            (GroupFamily::Heisenberg3, Element::Heisenberg(_)) => true,
            (GroupFamily::FreeGroup { rank }, Element::Word(w)) => {
                w.iter()
                    .all(|&l| l != 0 && (l.unsigned_abs() as usize) <= *rank)
                    && w.windows(2).all(|p| p[0] != -p[1])
            }
            (GroupFamily::DirectProduct { .. }, Element::Tuple(parts)) => {
                parts.len() == self.factors.len()
                    && self.factors.iter().zip(parts).all(|(f, p)| f.contains(p))
            }
            _ => false,
        }
    }

    fn check(&self, g: &Element) -> Result<(), GroupError> {
        if self.contains(g) {
            Ok(())
        } else {
            Err(GroupError::Mismatch {
                element: g.to_string(),
                group: self.family.to_string(),
            })
        }
    }

    pub fn multiply(&self, g: &Element, h: &Element) -> Result<Element, GroupError> {
        self.check(g)?;
        self.check(h)?;
        Ok(self.mul_unchecked(g, h))
    }

    pub fn inverse(&self, g: &Element) -> Result<Element, GroupError> {
        self.check(g)?;
        Ok(self.inv_unchecked(g))
    }

    pub fn is_identity(&self, g: &Element) -> bool {
        match g {
            Element::Vector(v) => v.iter().all(|&x| x == 0),
            Element::Heisenberg(t) => *t == [0; 3],
            Element::Word(w) => w.is_empty(),
            Element::Tuple(parts) => parts
                .iter()
                .zip(&self.factors)
                .all(|(p, f)| f.is_identity(p)),
        }
    }

    /// Product of two elements already known to belong to this group.
    pub(crate) fn mul_unchecked(&self, g: &Element, h: &Element) -> Element {
        match (g, h) {
            (Element::Vector(a), Element::Vector(b)) => {
                Element::Vector(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            (Element::Heisenberg([a, b, c]), Element::Heisenberg([a2, b2, c2])) => {
                Element::Heisenberg([a + a2, b + b2, c + c2 + a * b2])
            }
            (Element::Word(u), Element::Word(v)) => {
                let mut w = Vec::with_capacity(u.len() + v.len());
                w.extend_from_slice(u);
                for &l in v {
                    push_reduced(&mut w, l);
                }
                Element::Word(w)
            }
            (Element::Tuple(x), Element::Tuple(y)) => Element::Tuple(
                self.factors
                    .iter()
                    .zip(x.iter().zip(y))
                    .map(|(f, (p, q))| f.mul_unchecked(p, q))
                    .collect(),
            ),
            _ => unreachable!("mixed element kinds"),
        }
    }

    pub(crate) fn inv_unchecked(&self, g: &Element) -> Element {
        match g {
            Element::Vector(a) => Element::Vector(a.iter().map(|x| -x).collect()),
            Element::Heisenberg([a, b, c]) => Element::Heisenberg([-a, -b, -c + a * b]),
            Element::Word(w) => Element::Word(w.iter().rev().map(|l| -l).collect()),
            Element::Tuple(parts) => Element::Tuple(
                self.factors
                    .iter()
                    .zip(parts)
                    .map(|(f, p)| f.inv_unchecked(p))
                    .collect(),
            ),
        }
    }

    /// Injective byte encoding: little-endian `i64` coordinates for vectors and
    /// matrices, a `u32` length prefix followed by one signed byte per letter
    /// for words, and the concatenation of factor codes for products.
    pub fn canonical_code(&self, g: &Element) -> Result<Vec<u8>, GroupError> {
        self.check(g)?;
        let mut buf = Vec::new();
        encode_into(g, &mut buf);
        Ok(buf)
    }

    /// Image in the abelianization `Z^k`, for families where generation can
    /// be decided there (free abelian, Heisenberg and their products).
    /// A subset of a nilpotent group generates iff its abelianized image does.
    pub fn abelianization(&self, g: &Element) -> Option<Vec<i64>> {
        match (&self.family, g) {
            (GroupFamily::FreeAbelian { .. }, Element::Vector(v)) => Some(v.clone()),
            (GroupFamily::Heisenberg3, Element::Heisenberg([a, b, _])) => Some(vec![*a, *b]),
            (GroupFamily::DirectProduct { .. }, Element::Tuple(parts)) => {
                let mut out = Vec::new();
                for (f, p) in self.factors.iter().zip(parts) {
                    out.extend(f.abelianization(p)?);
                }
                Some(out)
            }
            _ => None,
        }
    }

    /// Whether every element is a single-letter word (or its inverse); used by
    /// the exact free-group generation test.
    fn single_letter(&self, g: &Element) -> Option<i8> {
        match g {
            Element::Word(w) if w.len() == 1 => Some(w[0].abs()),
            _ => None,
        }
    }

    /// Decides whether `elems` generates the whole group when a family-specific
    /// exact procedure exists.
    pub fn generates_exact(&self, elems: &[&Element]) -> Option<bool> {
        if let Some(images) = elems
            .iter()
            .map(|g| self.abelianization(g))
            .collect::<Option<Vec<_>>>()
        {
            let dim = self.abelian_rank()?;
            return Some(lattice_index(&images, dim) == Some(1));
        }
        if let GroupFamily::FreeGroup { rank } = self.family {
            let letters = elems
                .iter()
                .map(|g| self.single_letter(g))
                .collect::<Option<Vec<_>>>()?;
            let mut seen = vec![false; rank];
            for l in letters {
                seen[(l - 1) as usize] = true;
            }
            return Some(seen.into_iter().all(|s| s));
        }
        None
    }

    fn abelian_rank(&self) -> Option<usize> {
        match &self.family {
            GroupFamily::FreeAbelian { rank } => Some(*rank),
            GroupFamily::Heisenberg3 => Some(2),
            GroupFamily::FreeGroup { .. } => None,
            GroupFamily::DirectProduct { .. } => {
                self.factors.iter().map(|f| f.abelian_rank()).sum()
            }
        }
    }
}

pub(crate) fn encode_into(g: &Element, buf: &mut Vec<u8>) {
    match g {
        Element::Vector(v) => {
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        Element::Heisenberg(t) => {
            for x in t {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        Element::Word(w) => {
            buf.extend_from_slice(&(w.len() as u32).to_le_bytes());
            buf.extend(w.iter().map(|&l| l as u8));
        }
        Element::Tuple(parts) => {
            for p in parts {
                encode_into(p, buf);
            }
        }
    }
}

/// Index of the sublattice of `Z^dim` spanned by `vectors`, or `None` when it
/// has rank below `dim`.
pub fn lattice_index(vectors: &[Vec<i64>], dim: usize) -> Option<u128> {
    let mut rows: Vec<Vec<i128>> = vectors
        .iter()
        .map(|v| v.iter().map(|&x| x as i128).collect())
        .collect();
    let mut rank = 0;
    let mut index: u128 = 1;
    for col in 0..dim {
        loop {
            let mut pivot: Option<usize> = None;
            for r in rank..rows.len() {
                if rows[r][col] != 0
                    && pivot.is_none_or(|p| rows[r][col].abs() < rows[p][col].abs())
                {
                    pivot = Some(r);
                }
            }
            let Some(p) = pivot else { break };
            rows.swap(rank, p);
            let mut done = true;
            for r in rank + 1..rows.len() {
                let q = rows[r][col] / rows[rank][col];
                if q != 0 {
                    for c in col..dim {
                        rows[r][c] -= q * rows[rank][c];
                    }
                }
                if rows[r][col] != 0 {
                    done = false;
                }
            }
            if done {
                index *= rows[rank][col].unsigned_abs();
                rank += 1;
                break;
            }
        }
        if rank != col + 1 {
            return None;
        }
    }
    Some(index)
}

/// A finite generating set without the identity and without duplicates.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GeneratorSet {
    elements: Vec<Element>,
    inverse: Vec<usize>,
    symmetric: bool,
}

impl GeneratorSet {
    pub fn elements(&self) -> &[Element] {
        &self.elements
    }

    pub fn degree(&self) -> usize {
        self.elements.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Index of `g^{-1}` for generator `i`.
    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverse[i]
    }

    /// Inverse-closed classes `{g, g^{-1}}` in first-occurrence order.
    pub fn classes(&self) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        for i in 0..self.elements.len() {
            let j = self.inverse[i];
            if j == i {
                out.push(vec![i]);
            } else if i < j {
                out.push(vec![i, j]);
            }
        }
        out
    }

    /// Sub-generating set keeping the listed indices (in increasing order).
    /// The caller keeps inverse classes together.
    pub fn subset(&self, model: &GroupModel, keep: &[usize]) -> Result<GeneratorSet, GroupError> {
        let raw: Vec<Element> = keep.iter().map(|&i| self.elements[i].clone()).collect();
        symmetrize(model, &raw)
    }

    pub fn position(&self, model: &GroupModel, g: &Element) -> Option<usize> {
        let code = model.canonical_code(g).ok()?;
        self.elements
            .iter()
            .position(|e| model.canonical_code(e).ok().as_deref() == Some(&code[..]))
    }
}

/// Closes `raw` under inversion, drops the identity and duplicates.
/// Each raw element is followed immediately by its inverse when new.
pub fn symmetrize(model: &GroupModel, raw: &[Element]) -> Result<GeneratorSet, GroupError> {
    let mut elements: Vec<Element> = Vec::new();
    let mut seen: FxHashMap<Vec<u8>, usize> = FxHashMap::default();
    for g in raw {
        let g_inv = model.inverse(g)?;
        if model.is_identity(g) {
            continue;
        }
        for h in [g.clone(), g_inv] {
            let code = model.canonical_code(&h)?;
            if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(code) {
                e.insert(elements.len());
                elements.push(h);
            }
        }
    }
    if elements.is_empty() {
        return Err(GroupError::EmptyGenerators);
    }
    let inverse = elements
        .iter()
        .map(|g| {
            let code = model
                .canonical_code(&model.inv_unchecked(g))
                .expect("member");
            seen[&code]
        })
        .collect();
    Ok(GeneratorSet {
        elements,
        inverse,
        symmetric: true,
    })
}

/// Standard generators: `±e_i` for `Z^d`, `a^{±1}, b^{±1}` for the Heisenberg
/// group, the letters and their inverses for free groups, and the union of
/// the factor generators (embedded with identities elsewhere) for products.
pub fn standard_generators(model: &GroupModel) -> GeneratorSet {
    symmetrize(model, &standard_raw(model)).expect("standard generators are nonempty")
}

fn standard_raw(model: &GroupModel) -> Vec<Element> {
    match model.family() {
        GroupFamily::FreeAbelian { rank } => (0..*rank)
            .map(|i| {
                let mut v = vec![0; *rank];
                v[i] = 1;
                Element::Vector(v)
            })
            .collect(),
        GroupFamily::Heisenberg3 => {
            vec![
                Element::Heisenberg([1, 0, 0]),
                Element::Heisenberg([0, 1, 0]),
            ]
        }
        GroupFamily::FreeGroup { rank } => {
            (1..=*rank).map(|l| Element::Word(vec![l as i8])).collect()
        }
        GroupFamily::DirectProduct { .. } => {
            let ids: Vec<Element> = model.factors().iter().map(|f| f.identity()).collect();
            let mut out = Vec::new();
            for (i, f) in model.factors().iter().enumerate() {
                for g in standard_raw(f) {
                    let mut parts = ids.clone();
                    parts[i] = g;
                    out.push(Element::Tuple(parts));
                }
            }
            out
        }
    }
}

/// Evaluates a word given as generator indices.
pub fn evaluate_word(model: &GroupModel, gens: &GeneratorSet, word: &[usize]) -> Element {
    word.iter().fold(model.identity(), |acc, &i| {
        model.mul_unchecked(&acc, &gens.elements[i])
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Minimality {
    /// Generator `generator` lies in the subgroup generated by the others.
    /// `word` (indices into the set, avoiding the generator's class) evaluates
    /// to it; it is absent when an exact procedure proved redundancy but no
    /// word was found within the certification radius.
    NotMinimal {
        generator: usize,
        word: Option<Vec<usize>>,
    },
    MinimalCertified,
    MinimalUpToRadius {
        radius: u32,
    },
    /// An exact procedure showed the set does not generate the group.
    NotGenerating,
}

impl Minimality {
    pub fn is_certified(&self) -> bool {
        matches!(self, Minimality::MinimalCertified)
    }
}

const WITNESS_SEARCH_BUDGET: usize = 2_000_000;

pub fn check_minimality(model: &GroupModel, gens: &GeneratorSet, radius: u32) -> Minimality {
    let classes = gens.classes();
    let all: Vec<&Element> = gens.elements.iter().collect();
    if let Some(generates) = model.generates_exact(&all) {
        if !generates {
            return Minimality::NotGenerating;
        }
        for class in &classes {
            let rest: Vec<&Element> = (0..gens.degree())
                .filter(|i| !class.contains(i))
                .map(|i| &gens.elements[i])
                .collect();
            if model.generates_exact(&rest) == Some(true) {
                return Minimality::NotMinimal {
                    generator: class[0],
                    word: find_witness(model, gens, class, radius),
                };
            }
        }
        return Minimality::MinimalCertified;
    }
    for class in &classes {
        if let Some(word) = find_witness(model, gens, class, radius) {
            return Minimality::NotMinimal {
                generator: class[0],
                word: Some(word),
            };
        }
    }
    Minimality::MinimalUpToRadius { radius }
}

/// Breadth-first search for a word over the generators outside `class` that
/// evaluates to `class[0]`.
fn find_witness(
    model: &GroupModel,
    gens: &GeneratorSet,
    class: &[usize],
    radius: u32,
) -> Option<Vec<usize>> {
    let target = model.canonical_code(&gens.elements[class[0]]).ok()?;
    let allowed: Vec<usize> = (0..gens.degree()).filter(|i| !class.contains(i)).collect();
    if allowed.is_empty() {
        return None;
    }
    // (element, parent node, generator used)
    let mut nodes: Vec<(Element, usize, usize)> = vec![(model.identity(), usize::MAX, usize::MAX)];
    let mut seen: FxHashMap<Vec<u8>, usize> = FxHashMap::default();
    seen.insert(model.canonical_code(&nodes[0].0).ok()?, 0);
    let mut queue = VecDeque::from([(0usize, 0u32)]);
    while let Some((node, depth)) = queue.pop_front() {
        if depth == radius {
            continue;
        }
        for &g in &allowed {
            let next = model.mul_unchecked(&nodes[node].0, &gens.elements[g]);
            let mut code = Vec::new();
            encode_into(&next, &mut code);
            if seen.contains_key(&code) {
                continue;
            }
            let id = nodes.len();
            let found = code == target;
            seen.insert(code, id);
            nodes.push((next, node, g));
            if found {
                let mut word = Vec::new();
                let mut cur = id;
                while nodes[cur].1 != usize::MAX {
                    word.push(nodes[cur].2);
                    cur = nodes[cur].1;
                }
                word.reverse();
                return Some(word);
            }
            if nodes.len() > WITNESS_SEARCH_BUDGET {
                return None;
            }
            queue.push_back((id, depth + 1));
        }
    }
    None
}

/// Images of source generators under a homomorphism into `target`.
#[derive(Clone, Debug)]
pub struct HomSpec {
    pub target: GroupModel,
    pub images: Vec<(Element, Element)>,
}

impl HomSpec {
    /// Homomorphism `Z^n -> Z^m` given by an `m x n` integer matrix, evaluated
    /// on every generator of `gens`.
    pub fn linear(
        source: &GroupModel,
        gens: &GeneratorSet,
        matrix: &[Vec<i64>],
    ) -> Result<HomSpec, GroupError> {
        let GroupFamily::FreeAbelian { rank } = *source.family() else {
            return Err(GroupError::InconsistentHom(
                "linear maps need a free abelian source".into(),
            ));
        };
        if matrix.is_empty() || matrix.iter().any(|row| row.len() != rank) {
            return Err(GroupError::InconsistentHom(format!(
                "matrix must have rows of length {rank}"
            )));
        }
        let target = GroupModel::free_abelian(matrix.len())?;
        let images = gens
            .elements()
            .iter()
            .map(|g| {
                let Element::Vector(v) = g else {
                    unreachable!()
                };
                let img = matrix
                    .iter()
                    .map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum())
                    .collect();
                (g.clone(), Element::Vector(img))
            })
            .collect();
        Ok(HomSpec { target, images })
    }
}

/// Target model and the generator set induced by a homomorphism, with
/// identity images dropped and duplicates merged.
pub fn quotient_hom(
    source: &GroupModel,
    gens: &GeneratorSet,
    spec: &HomSpec,
) -> Result<(GroupModel, GeneratorSet), GroupError> {
    let mut table: FxHashMap<Vec<u8>, &Element> = FxHashMap::default();
    for (g, img) in &spec.images {
        let code = source.canonical_code(g)?;
        spec.target.check(img)?;
        table.insert(code, img);
    }
    let mut induced = Vec::with_capacity(gens.degree());
    for (i, g) in gens.elements().iter().enumerate() {
        let img = table
            .get(&source.canonical_code(g)?)
            .ok_or_else(|| GroupError::MissingImage(g.to_string()))?;
        let inv = &gens.elements()[gens.inverse_index(i)];
        let inv_img = table
            .get(&source.canonical_code(inv)?)
            .ok_or_else(|| GroupError::MissingImage(inv.to_string()))?;
        let prod = spec.target.mul_unchecked(img, inv_img);
        if !spec.target.is_identity(&prod) {
            return Err(GroupError::InconsistentHom(format!(
                "images of {g} and its inverse are not inverse"
            )));
        }
        induced.push((*img).clone());
    }
    let set = symmetrize(&spec.target, &induced)?;
    Ok((spec.target.clone(), set))
}
