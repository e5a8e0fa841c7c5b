//! Teaching dimension over a finite concept class.
//!
//! With a uniform prior over concepts and a noiseless learner, the posterior
//! after a labeled set is uniform over its version space. Minimizing
//! `−log P(c* | D) + γ|D|` with small enough `γ` then recovers a minimum
//! teaching set.

use std::fmt;

use serde::Serialize;

use crate::error::{Result, TeachError};

/// Fixed-width bitset over concept indices.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn full(len: usize) -> Self {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if len % 64 != 0 {
            *words.last_mut().expect("nonempty") = (1u64 << (len % 64)) - 1;
        }
        Bits(words)
    }

    fn empty(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn indices(&self) -> Vec<usize> {
        (0..self.0.len() * 64).filter(|i| self.contains(*i)).collect()
    }
}

/// Concepts as `+`/`−` labelings of `m` items.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConceptClass {
    items: usize,
    concepts: Vec<Vec<bool>>,
    names: Vec<String>,
}

impl ConceptClass {
    pub fn new(items: usize, concepts: Vec<Vec<bool>>, names: Option<Vec<String>>) -> Result<Self> {
        let bad = |m: String| Err(TeachError::ConceptClass(m));
        if concepts.is_empty() {
            return bad("a concept class needs at least one concept".into());
        }
        if let Some(c) = concepts.iter().position(|c| c.len() != items) {
            return bad(format!("concept {} has {} labels, expected {items}", c + 1, concepts[c].len()));
        }
        for (i, c) in concepts.iter().enumerate() {
            if let Some(j) = concepts[..i].iter().position(|d| d == c) {
                return bad(format!("concepts {} and {} are identical", j + 1, i + 1));
            }
        }
        let names = names.unwrap_or_else(|| (1..=concepts.len()).map(|i| format!("c{i}")).collect());
        if names.len() != concepts.len() {
            return bad(format!("{} names for {} concepts", names.len(), concepts.len()));
        }
        for (i, n) in names.iter().enumerate() {
            if names[..i].contains(n) {
                return bad(format!("duplicate concept name `{n}`"));
            }
        }
        Ok(Self { items, concepts, names })
    }

    /// Parses the text format: a header `items m`, then one concept per line
    /// as a string of `+` and `-` (or `−`) of length `m`, optionally followed
    /// by a name. Blank lines and `#` comments are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, m: &str| TeachError::ConceptClass(format!("line {line}: {m}"));
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let (hl, header) = lines.next().ok_or_else(|| bad(1, "missing `items m` header"))?;
        let items = match header.split_whitespace().collect::<Vec<_>>().as_slice() {
            ["items", m] => m.parse::<usize>().map_err(|_| bad(hl, "item count is not a number"))?,
            _ => return Err(bad(hl, "expected `items m`")),
        };
        let mut concepts = Vec::new();
        let mut names = Vec::new();
        for (ln, line) in lines {
            let mut parts = line.split_whitespace();
            let labels = parts.next().expect("nonempty line");
            let concept = labels
                .chars()
                .map(|ch| match ch {
                    '+' => Ok(true),
                    '-' | '−' => Ok(false),
                    other => Err(bad(ln, &format!("unexpected label `{other}`"))),
                })
                .collect::<Result<Vec<bool>>>()?;
            let name = match (parts.next(), parts.next()) {
                (None, _) => format!("c{}", concepts.len() + 1),
                (Some(n), None) => n.to_string(),
                (Some(_), Some(_)) => return Err(bad(ln, "expected a label string and at most one name")),
            };
            concepts.push(concept);
            names.push(name);
        }
        Self::new(items, concepts, Some(names))
    }

    pub fn items(&self) -> usize {
        self.items
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concept(&self, i: usize) -> &[bool] {
        &self.concepts[i]
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn find(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    fn check_target(&self, target: usize) -> Result<()> {
        if target < self.len() {
            Ok(())
        } else {
            Err(TeachError::ConceptClass(format!("target {target} out of range for {} concepts", self.len())))
        }
    }

    /// For each item, the concepts that give it the target's label.
    fn agreement(&self, target: usize) -> Vec<Bits> {
        (0..self.items)
            .map(|i| {
                let mut b = Bits::empty(self.len());
                for (c, concept) in self.concepts.iter().enumerate() {
                    if concept[i] == self.concepts[target][i] {
                        b.set(c);
                    }
                }
                b
            })
            .collect()
    }
}

/// Labeled items (zero-based indices); each item at most once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Default)]
pub struct LabeledSet {
    pairs: Vec<(usize, bool)>,
}

impl LabeledSet {
    pub fn new(pairs: Vec<(usize, bool)>) -> Result<Self> {
        for (i, (item, _)) in pairs.iter().enumerate() {
            if pairs[..i].iter().any(|(j, _)| j == item) {
                return Err(TeachError::ConceptClass(format!("item {} labeled twice", item + 1)));
            }
        }
        Ok(Self { pairs })
    }

    /// Items labeled as the target concept labels them.
    pub fn forced(cc: &ConceptClass, target: usize, items: &[usize]) -> Self {
        Self { pairs: items.iter().map(|&i| (i, cc.concept(target)[i])).collect() }
    }

    pub fn pairs(&self) -> &[(usize, bool)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

impl fmt::Display for LabeledSet {
    /// One-based items, e.g. `{(1,-), (2,+)}`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.pairs.iter().map(|(i, l)| format!("({},{})", i + 1, if *l { '+' } else { '-' })).collect();
        write!(f, "{{{}}}", parts.join(", "))
    }
}

/// Concepts agreeing with every labeled pair.
pub fn version_space(cc: &ConceptClass, d: &LabeledSet) -> Result<Vec<usize>> {
    let mut vs = Bits::full(cc.len());
    for &(item, label) in d.pairs() {
        if item >= cc.items() {
            return Err(TeachError::ConceptClass(format!("item {} out of range", item + 1)));
        }
        let mut agree = Bits::empty(cc.len());
        for c in 0..cc.len() {
            if cc.concept(c)[item] == label {
                agree.set(c);
            }
        }
        vs = vs.and(&agree);
    }
    Ok(vs.indices())
}

/// Uniform over the version space.
pub fn posterior(cc: &ConceptClass, d: &LabeledSet) -> Result<Vec<f64>> {
    let vs = version_space(cc, d)?;
    if vs.is_empty() {
        return Err(TeachError::EmptyVersionSpace);
    }
    let mut p = vec![0.0; cc.len()];
    let w = 1.0 / vs.len() as f64;
    vs.iter().for_each(|&c| p[c] = w);
    Ok(p)
}

/// Calls `visit` on every `k`-subset of `0..m` in lexicographic order until it
/// returns true.
fn for_each_combination(m: usize, k: usize, mut visit: impl FnMut(&[usize]) -> bool) -> bool {
    if k > m {
        return false;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        if visit(&idx) {
            return true;
        }
        let Some(i) = (0..k).rev().find(|&i| idx[i] < m - k + i) else { return false };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Smallest target-labeled set whose version space is exactly `{target}`,
/// searched by increasing size and then lexicographically.
pub fn teaching_dim(cc: &ConceptClass, target: usize) -> Result<(usize, LabeledSet)> {
    cc.check_target(target)?;
    let agree = cc.agreement(target);
    let full = Bits::full(cc.len());
    for k in 0..=cc.items() {
        let mut witness = None;
        let found = for_each_combination(cc.items(), k, |items| {
            let vs = items.iter().fold(full.clone(), |acc, &i| acc.and(&agree[i]));
            if vs.count() == 1 {
                witness = Some(items.to_vec());
                true
            } else {
                false
            }
        });
        if found {
            return Ok((k, LabeledSet::forced(cc, target, &witness.expect("set on success"))));
        }
    }
    unreachable!("labeling every item isolates a concept in a duplicate-free class")
}

/// `−log P(c* | D) + γ|D|`, infinite when `D` rules out the target.
pub fn penalized_objective(cc: &ConceptClass, target: usize, d: &LabeledSet, gamma: f64) -> Result<f64> {
    cc.check_target(target)?;
    let vs = version_space(cc, d)?;
    if !vs.contains(&target) {
        return Ok(f64::INFINITY);
    }
    Ok((vs.len() as f64).ln() + gamma * d.len() as f64)
}

const EXHAUSTIVE_MAX_ITEMS: usize = 24;

/// Exhaustive minimizer of [`penalized_objective`] over target-labeled subsets.
/// Ties (within 1e-12) go to the smaller set, then to the lexicographically
/// first one.
pub fn penalized_minimizer(cc: &ConceptClass, target: usize, gamma: f64) -> Result<(LabeledSet, f64)> {
    cc.check_target(target)?;
    if cc.items() > EXHAUSTIVE_MAX_ITEMS {
        return Err(TeachError::ConceptClass(format!(
            "exhaustive search is limited to {EXHAUSTIVE_MAX_ITEMS} items, got {}",
            cc.items()
        )));
    }
    let agree = cc.agreement(target);
    let full = Bits::full(cc.len());
    let mut best: Option<(Vec<usize>, f64)> = None;
    for k in 0..=cc.items() {
        for_each_combination(cc.items(), k, |items| {
            let vs = items.iter().fold(full.clone(), |acc, &i| acc.and(&agree[i]));
            let v = (vs.count() as f64).ln() + gamma * k as f64;
            if best.as_ref().is_none_or(|(_, b)| v < b - 1e-12) {
                best = Some((items.to_vec(), v));
            }
            false
        });
    }
    let (items, v) = best.expect("the empty set is always a candidate");
    Ok((LabeledSet::forced(cc, target, &items), v))
}
