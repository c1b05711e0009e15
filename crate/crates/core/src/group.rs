//! Finite Abelian groups given as products of cyclic groups.
//!
//! Elements are k-tuples enumerated lexicographically (first factor most
//! significant), so element `i` is the i-th tuple in that order. All group
//! arithmetic goes through precomputed addition and negation tables.

use std::collections::{BTreeSet, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{PolarError, Result};

/// Default cap on |G|. Subgroups are tracked as `u64` member masks, so the
/// cap can never exceed 64.
pub const DEFAULT_GROUP_CAP: usize = 64;

#[derive(Debug)]
struct Tables {
    size: usize,
    add: Vec<usize>,
    neg: Vec<usize>,
}

/// A finite Abelian group `Z_{d_1} x ... x Z_{d_k}`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Group {
    orders: Vec<usize>,
    tables: Arc<Tables>,
}

impl PartialEq for Group {
    fn eq(&self, other: &Self) -> bool {
        self.orders == other.orders
    }
}

impl Eq for Group {}

impl fmt::Debug for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Group({self})")
    }
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.orders.iter().map(|d| format!("Z{d}")).collect();
        write!(f, "{}", parts.join("x"))
    }
}

impl std::str::FromStr for Group {
    type Err = PolarError;

    /// Parses `Z4`, `Z2xZ4` or `2x4`.
    fn from_str(s: &str) -> Result<Group> {
        let orders = s
            .split(['x', 'X', '×'])
            .map(|part| {
                let t = part.trim().trim_start_matches(['Z', 'z']);
                t.parse::<usize>().map_err(|_| PolarError::InvalidArgument(format!("bad group factor '{part}' in '{s}'")))
            })
            .collect::<Result<Vec<_>>>()?;
        make_group(&orders)
    }
}

impl TryFrom<Vec<usize>> for Group {
    type Error = PolarError;

    fn try_from(orders: Vec<usize>) -> Result<Self> {
        make_group(&orders)
    }
}

impl From<Group> for Vec<usize> {
    fn from(g: Group) -> Self {
        g.orders
    }
}

/// Builds a group from its cyclic factor orders with the default size cap.
pub fn make_group(orders: &[usize]) -> Result<Group> {
    make_group_with_cap(orders, DEFAULT_GROUP_CAP)
}

pub fn make_group_with_cap(orders: &[usize], cap: usize) -> Result<Group> {
    if orders.is_empty() {
        return Err(PolarError::InvalidArgument(
            "a group needs at least one cyclic factor".into(),
        ));
    }
    if let Some(&bad) = orders.iter().find(|&&d| d < 2) {
        return Err(PolarError::InvalidOrder(bad));
    }
    let cap = cap.min(DEFAULT_GROUP_CAP);
    let mut size: usize = 1;
    for &d in orders {
        size = size.saturating_mul(d);
        if size > cap {
            return Err(PolarError::GroupTooLarge { size, cap });
        }
    }

    let tuple = |mut idx: usize| -> Vec<usize> {
        let mut t = vec![0; orders.len()];
        for (slot, &d) in t.iter_mut().zip(orders).rev() {
            *slot = idx % d;
            idx /= d;
        }
        t
    };
    let index = |t: &[usize]| -> usize { t.iter().zip(orders).fold(0, |acc, (&c, &d)| acc * d + c) };

    let tuples: Vec<Vec<usize>> = (0..size).map(tuple).collect();
    let mut add = vec![0; size * size];
    let mut neg = vec![0; size];
    for a in 0..size {
        let ta = &tuples[a];
        let na: Vec<usize> = ta.iter().zip(orders).map(|(&c, &d)| (d - c) % d).collect();
        neg[a] = index(&na);
        for b in 0..size {
            let sum: Vec<usize> = ta
                .iter()
                .zip(&tuples[b])
                .zip(orders)
                .map(|((&x, &y), &d)| (x + y) % d)
                .collect();
            add[a * size + b] = index(&sum);
        }
    }

    Ok(Group {
        orders: orders.to_vec(),
        tables: Arc::new(Tables { size, add, neg }),
    })
}

impl Group {
    pub fn orders(&self) -> &[usize] {
        &self.orders
    }

    pub fn size(&self) -> usize {
        self.tables.size
    }

    pub fn identity(&self) -> usize {
        0
    }

    #[inline]
    pub fn add(&self, a: usize, b: usize) -> usize {
        self.tables.add[a * self.tables.size + b]
    }

    #[inline]
    pub fn neg(&self, a: usize) -> usize {
        self.tables.neg[a]
    }

    #[inline]
    pub fn sub(&self, a: usize, b: usize) -> usize {
        self.add(a, self.neg(b))
    }

    /// The tuple form of element `idx`.
    pub fn element(&self, idx: usize) -> Vec<usize> {
        let mut t = vec![0; self.orders.len()];
        let mut rest = idx;
        for (slot, &d) in t.iter_mut().zip(&self.orders).rev() {
            *slot = rest % d;
            rest /= d;
        }
        t
    }

    /// Index of a tuple, or `None` if a component is out of range.
    pub fn index_of(&self, tuple: &[usize]) -> Option<usize> {
        if tuple.len() != self.orders.len() || tuple.iter().zip(&self.orders).any(|(&c, &d)| c >= d) {
            return None;
        }
        Some(tuple.iter().zip(&self.orders).fold(0, |acc, (&c, &d)| acc * d + c))
    }

    pub fn format_element(&self, idx: usize) -> String {
        let t = self.element(idx);
        if t.len() == 1 {
            t[0].to_string()
        } else {
            let parts: Vec<String> = t.iter().map(|c| c.to_string()).collect();
            format!("({})", parts.join(","))
        }
    }

    fn check_element(&self, idx: usize) -> Result<()> {
        if idx >= self.size() {
            Err(PolarError::ElementOutOfRange { index: idx, size: self.size() })
        } else {
            Ok(())
        }
    }

    /// Smallest subgroup containing every member of `seed`.
    fn closure_mask(&self, seed: u64) -> u64 {
        let mut mask = seed | 1;
        loop {
            let members = self.mask_members(mask);
            let mut next = mask;
            for &a in &members {
                next |= 1u64 << self.neg(a);
                for &b in &members {
                    next |= 1u64 << self.add(a, b);
                }
            }
            if next == mask {
                return mask;
            }
            mask = next;
        }
    }

    fn mask_members(&self, mask: u64) -> Vec<usize> {
        (0..self.size()).filter(|&i| mask >> i & 1 == 1).collect()
    }
}

/// A subgroup, stored as its sorted member set plus a generating witness.
/// Equality and hashing use the members only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "Vec<usize>", from = "Vec<usize>")]
pub struct Subgroup {
    members: Vec<usize>,
    generators: Vec<usize>,
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.members == other.members
    }
}

impl Eq for Subgroup {}

impl std::hash::Hash for Subgroup {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.members.hash(state);
    }
}

impl From<Subgroup> for Vec<usize> {
    fn from(h: Subgroup) -> Self {
        h.members
    }
}

// Deserialization only records the member list; `Subgroup::from_members`
// re-verifies closure when a group is available.
impl From<Vec<usize>> for Subgroup {
    fn from(mut members: Vec<usize>) -> Self {
        members.sort_unstable();
        members.dedup();
        let generators = members.iter().copied().filter(|&m| m != 0).collect();
        Subgroup { members, generators }
    }
}

impl fmt::Display for Subgroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

impl Subgroup {
    /// Parses a member list such as `{0,2}` (element indices).
    pub fn parse(g: &Group, s: &str) -> Result<Subgroup> {
        let inner = s.trim().trim_start_matches('{').trim_end_matches('}');
        let members = inner
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.trim().parse::<usize>().map_err(|_| PolarError::NotASubgroup(format!("bad member '{t}' in '{s}'"))))
            .collect::<Result<Vec<_>>>()?;
        Subgroup::from_members(g, &members)
    }

    /// Verifies that `members` is a subgroup of `g` (identity, closure under
    /// addition and negation, Lagrange) and builds it.
    pub fn from_members(g: &Group, members: &[usize]) -> Result<Subgroup> {
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        for &m in &sorted {
            g.check_element(m)?;
        }
        let set: HashSet<usize> = sorted.iter().copied().collect();
        if !set.contains(&g.identity()) {
            return Err(PolarError::NotASubgroup(format!("{sorted:?} misses the identity")));
        }
        for &a in &sorted {
            if !set.contains(&g.neg(a)) {
                return Err(PolarError::NotASubgroup(format!("{sorted:?} is not closed under negation")));
            }
            for &b in &sorted {
                if !set.contains(&g.add(a, b)) {
                    return Err(PolarError::NotASubgroup(format!("{sorted:?} is not closed under +")));
                }
            }
        }
        if !g.size().is_multiple_of(sorted.len()) {
            return Err(PolarError::NotASubgroup(format!(
                "order {} does not divide {}",
                sorted.len(),
                g.size()
            )));
        }
        let generators = minimal_witness(g, &sorted);
        Ok(Subgroup { members: sorted, generators })
    }

    pub fn trivial(_g: &Group) -> Subgroup {
        Subgroup { members: vec![0], generators: vec![] }
    }

    pub fn full(g: &Group) -> Subgroup {
        let members: Vec<usize> = (0..g.size()).collect();
        let generators = minimal_witness(g, &members);
        Subgroup { members, generators }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn generators(&self) -> &[usize] {
        &self.generators
    }

    pub fn order(&self) -> usize {
        self.members.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    /// Number of cosets, |G|/|H|.
    pub fn index_in(&self, g: &Group) -> usize {
        g.size() / self.order()
    }
}

/// Greedy generating set: add members in order whenever they are not yet
/// generated.
fn minimal_witness(g: &Group, members: &[usize]) -> Vec<usize> {
    let mut gens = Vec::new();
    let mut mask = 1u64;
    for &m in members {
        if mask >> m & 1 == 0 {
            gens.push(m);
            mask = g.closure_mask(gens.iter().fold(0u64, |acc, &x| acc | 1u64 << x));
        }
    }
    gens
}

/// All subgroups of `g`, sorted by (order, member list).
///
/// Starting from the trivial subgroup, every subgroup found is extended by
/// each element outside it and closed again; closures are memoized by their
/// member mask.
pub fn enumerate_subgroups(g: &Group) -> Vec<Subgroup> {
    let mut seen: HashSet<u64> = HashSet::new();
    let mut queue: VecDeque<(u64, Vec<usize>)> = VecDeque::new();
    seen.insert(1);
    queue.push_back((1, vec![]));
    let mut found: Vec<(u64, Vec<usize>)> = Vec::new();
    while let Some((mask, gens)) = queue.pop_front() {
        for x in 0..g.size() {
            if mask >> x & 1 == 1 {
                continue;
            }
            let next = g.closure_mask(mask | 1u64 << x);
            if seen.insert(next) {
                let mut next_gens = gens.clone();
                next_gens.push(x);
                queue.push_back((next, next_gens));
            }
        }
        found.push((mask, gens));
    }
    let mut subgroups: Vec<Subgroup> = found
        .into_iter()
        .map(|(mask, generators)| Subgroup { members: g.mask_members(mask), generators })
        .collect();
    subgroups.sort_by(|a, b| (a.order(), &a.members).cmp(&(b.order(), &b.members)));
    subgroups
}

/// Cosets of a subgroup: index per element and the smallest member of each
/// coset as its representative (cosets ordered by representative).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuotientMap {
    coset_of: Vec<usize>,
    representatives: Vec<usize>,
    coset_size: usize,
}

impl QuotientMap {
    pub fn coset_of(&self, x: usize) -> usize {
        self.coset_of[x]
    }

    pub fn representatives(&self) -> &[usize] {
        &self.representatives
    }

    pub fn coset_count(&self) -> usize {
        self.representatives.len()
    }

    pub fn coset_size(&self) -> usize {
        self.coset_size
    }

    /// Members of coset `c`, in enumeration order.
    pub fn coset_members(&self, c: usize) -> Vec<usize> {
        (0..self.coset_of.len()).filter(|&x| self.coset_of[x] == c).collect()
    }
}

pub fn quotient(g: &Group, h: &Subgroup) -> Result<QuotientMap> {
    let h = Subgroup::from_members(g, h.members())?;
    let n = g.size();
    let mut coset_of = vec![usize::MAX; n];
    let mut representatives = Vec::new();
    for x in 0..n {
        if coset_of[x] != usize::MAX {
            continue;
        }
        let c = representatives.len();
        representatives.push(x);
        for &m in h.members() {
            coset_of[g.add(x, m)] = c;
        }
    }
    Ok(QuotientMap { coset_of, representatives, coset_size: h.order() })
}

/// The subgroup generated by all differences `u - u'` of `support`.
pub fn difference_span(g: &Group, support: &[usize]) -> Result<Subgroup> {
    if support.is_empty() {
        return Err(PolarError::EmptySupport);
    }
    for &u in support {
        g.check_element(u)?;
    }
    let diffs: BTreeSet<usize> = support
        .iter()
        .flat_map(|&a| support.iter().map(move |&b| (a, b)))
        .map(|(a, b)| g.sub(a, b))
        .filter(|&d| d != 0)
        .collect();
    let mask = g.closure_mask(diffs.iter().fold(1u64, |acc, &d| acc | 1u64 << d));
    let members = g.mask_members(mask);
    let generators = minimal_witness(g, &members);
    Ok(Subgroup { members, generators })
}
