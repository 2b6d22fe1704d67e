//! Sorts, sort sets and the terminological alphabet.
//!
//! A [`SortSystem`] holds any number of named [`SortSet`]s. Each set carries
//! its own subsort hierarchy; hierarchies of different sets never interact.
//! Sort sets may additionally be ranked against each other, and an
//! [`Alphabet`] assigns one or more sorts to each symbol of the domain.
//!
//! Subsort edges are stored as declared (a Hasse-style edge set). The stored
//! relation is strict: self-edges and cycles are rejected when declared, and
//! reflexivity is supplied by the queries.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SortError {
    #[error("sort set `{0}` is already declared")]
    DuplicateSortSet(String),
    #[error("unknown sort set `{0}`")]
    UnknownSortSet(String),
    #[error("unknown sort `{sort}` in sort set `{set}`")]
    UnknownSort { set: String, sort: String },
    #[error("declaring `{sub}` below `{sup}` would introduce a cycle")]
    CycleIntroduced { sub: String, sup: String },
    #[error("`{0}` is not a valid identifier")]
    InvalidIdent(String),
}

/// Identifiers match `[A-Za-z_][A-Za-z0-9_-]*`.
pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn check_ident(s: &str) -> Result<(), SortError> {
    if is_ident(s) {
        Ok(())
    } else {
        Err(SortError::InvalidIdent(s.to_string()))
    }
}

/// Name of a sort set inside a [`SortSystem`].
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SortSetId(pub String);

impl std::fmt::Display for SortSetId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Memoized upward reachability: sort -> every strict supersort.
type UpSets = BTreeMap<String, BTreeSet<String>>;

/// A named set of sorts ordered by a sort-subsort hierarchy.
#[derive(Debug, Clone, Default)]
pub struct SortSet {
    name: String,
    sorts: BTreeSet<String>,
    edges: BTreeSet<(String, String)>,
    up: OnceLock<UpSets>,
}

impl PartialEq for SortSet {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name && self.sorts == other.sorts && self.edges == other.edges
    }
}

impl Eq for SortSet {}

impl SortSet {
    pub fn new(name: impl Into<String>) -> Self {
        SortSet {
            name: name.into(),
            ..SortSet::default()
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn sorts(&self) -> impl Iterator<Item = &str> {
        self.sorts.iter().map(String::as_str)
    }

    pub fn contains(&self, sort: &str) -> bool {
        self.sorts.contains(sort)
    }

    pub fn len(&self) -> usize {
        self.sorts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorts.is_empty()
    }

    /// Declared (sub, super) pairs, in lexicographic order.
    pub fn subsort_edges(&self) -> impl Iterator<Item = (&str, &str)> {
        self.edges.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }

    /// Direct supersorts of `sort` as declared.
    pub fn direct_supersorts<'a>(&'a self, sort: &'a str) -> impl Iterator<Item = &'a str> + 'a {
        self.edges
            .range((sort.to_string(), String::new())..)
            .take_while(move |(a, _)| a == sort)
            .map(|(_, b)| b.as_str())
    }

    /// Adds a sort. Returns `false` when it was already present.
    pub fn declare_sort(&mut self, sort: &str) -> Result<bool, SortError> {
        check_ident(sort)?;
        let added = self.sorts.insert(sort.to_string());
        if added {
            self.up = OnceLock::new();
        }
        Ok(added)
    }

    pub fn declare_subsort(&mut self, sub: &str, sup: &str) -> Result<(), SortError> {
        for s in [sub, sup] {
            if !self.sorts.contains(s) {
                return Err(SortError::UnknownSort {
                    set: self.name.clone(),
                    sort: s.to_string(),
                });
            }
        }
        if sub == sup || self.reaches(sup, sub) {
            return Err(SortError::CycleIntroduced {
                sub: sub.to_string(),
                sup: sup.to_string(),
            });
        }
        if self.edges.insert((sub.to_string(), sup.to_string())) {
            self.up = OnceLock::new();
        }
        Ok(())
    }

    fn up_sets(&self) -> &UpSets {
        self.up.get_or_init(|| {
            let mut out = UpSets::new();
            for s in &self.sorts {
                let mut seen = BTreeSet::new();
                let mut stack: Vec<&str> = self.direct_supersorts(s).collect();
                while let Some(next) = stack.pop() {
                    if seen.insert(next.to_string()) {
                        stack.extend(self.direct_supersorts(next));
                    }
                }
                out.insert(s.clone(), seen);
            }
            out
        })
    }

    /// Strict reachability `from < to` along declared edges.
    fn reaches(&self, from: &str, to: &str) -> bool {
        self.up_sets().get(from).is_some_and(|ups| ups.contains(to))
    }

    /// Reflexive-transitive subsort test. Errors when either sort is absent.
    pub fn leq(&self, t: &str, t1: &str) -> Result<bool, SortError> {
        for s in [t, t1] {
            if !self.sorts.contains(s) {
                return Err(SortError::UnknownSort {
                    set: self.name.clone(),
                    sort: s.to_string(),
                });
            }
        }
        Ok(t == t1 || self.reaches(t, t1))
    }

    /// Every sort `s` with `sort <= s`, including `sort` itself.
    pub fn upset(&self, sort: &str) -> BTreeSet<String> {
        let mut out = self.up_sets().get(sort).cloned().unwrap_or_default();
        if self.sorts.contains(sort) {
            out.insert(sort.to_string());
        }
        out
    }
}

/// The collection of sort sets plus the ranking among them.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SortSystem {
    sets: BTreeMap<String, SortSet>,
    /// (below, above) pairs as declared.
    ranks: BTreeSet<(String, String)>,
}

impl SortSystem {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_sort_set(&mut self, name: &str) -> Result<SortSetId, SortError> {
        check_ident(name)?;
        if self.sets.contains_key(name) {
            return Err(SortError::DuplicateSortSet(name.to_string()));
        }
        self.sets.insert(name.to_string(), SortSet::new(name));
        Ok(SortSetId(name.to_string()))
    }

    /// Inserts a fully built sort set.
    pub fn insert_sort_set(&mut self, set: SortSet) -> Result<SortSetId, SortError> {
        let name = set.name().to_string();
        check_ident(&name)?;
        if self.sets.contains_key(&name) {
            return Err(SortError::DuplicateSortSet(name));
        }
        self.sets.insert(name.clone(), set);
        Ok(SortSetId(name))
    }

    pub fn sort_set(&self, name: &str) -> Result<&SortSet, SortError> {
        self.sets
            .get(name)
            .ok_or_else(|| SortError::UnknownSortSet(name.to_string()))
    }

    pub fn sort_set_mut(&mut self, name: &str) -> Result<&mut SortSet, SortError> {
        self.sets
            .get_mut(name)
            .ok_or_else(|| SortError::UnknownSortSet(name.to_string()))
    }

    pub fn sort_sets(&self) -> impl Iterator<Item = &SortSet> {
        self.sets.values()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    /// `t <= t1` in the named sort set. Sorts of other sets are unknown here.
    pub fn is_subsort(&self, set: &str, t: &str, t1: &str) -> Result<bool, SortError> {
        self.sort_set(set)?.leq(t, t1)
    }

    /// `t <= t1` in some sort set that contains both sorts.
    ///
    /// Sort sets need not be disjoint, so a pair of sort names can be related
    /// through any set they share. Sorts with no common set are incomparable.
    pub fn leq_any(&self, t: &str, t1: &str) -> bool {
        self.sets
            .values()
            .any(|s| s.contains(t) && s.contains(t1) && s.leq(t, t1).unwrap_or(false))
    }

    /// True when `sort` belongs to at least one sort set.
    pub fn knows_sort(&self, sort: &str) -> bool {
        self.sets.values().any(|s| s.contains(sort))
    }

    pub fn rank_sort_sets(&mut self, below: &str, above: &str) -> Result<(), SortError> {
        for s in [below, above] {
            if !self.sets.contains_key(s) {
                return Err(SortError::UnknownSortSet(s.to_string()));
            }
        }
        if below == above || self.ranked_below(above, below)? {
            return Err(SortError::CycleIntroduced {
                sub: below.to_string(),
                sup: above.to_string(),
            });
        }
        self.ranks.insert((below.to_string(), above.to_string()));
        Ok(())
    }

    /// Strict rank order: `below` is ranked under `above`, transitively.
    pub fn ranked_below(&self, below: &str, above: &str) -> Result<bool, SortError> {
        for s in [below, above] {
            if !self.sets.contains_key(s) {
                return Err(SortError::UnknownSortSet(s.to_string()));
            }
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![below];
        while let Some(cur) = stack.pop() {
            for (b, a) in &self.ranks {
                if b == cur {
                    if a == above {
                        return Ok(true);
                    }
                    if seen.insert(a.as_str()) {
                        stack.push(a);
                    }
                }
            }
        }
        Ok(false)
    }

    /// Declared (below, above) rank pairs.
    pub fn ranks(&self) -> impl Iterator<Item = (&str, &str)> {
        self.ranks.iter().map(|(a, b)| (a.as_str(), b.as_str()))
    }
}

/// One sort carried by a symbol.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SortAssignment {
    pub sort_set: String,
    pub sort: String,
}

impl SortAssignment {
    pub fn new(sort_set: impl Into<String>, sort: impl Into<String>) -> Self {
        SortAssignment {
            sort_set: sort_set.into(),
            sort: sort.into(),
        }
    }
}

/// The terminological alphabet: symbol name -> sorts it carries.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    symbols: BTreeMap<String, BTreeSet<SortAssignment>>,
}

impl Alphabet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Merges `assignments` into the symbol's existing sorts. Nothing is
    /// recorded unless every assignment names an existing sort.
    pub fn assign_symbol_sorts(
        &mut self,
        system: &SortSystem,
        symbol: &str,
        assignments: impl IntoIterator<Item = SortAssignment>,
    ) -> Result<(), SortError> {
        check_ident(symbol)?;
        let assignments: Vec<_> = assignments.into_iter().collect();
        for a in &assignments {
            let set = system.sort_set(&a.sort_set)?;
            if !set.contains(&a.sort) {
                return Err(SortError::UnknownSort {
                    set: a.sort_set.clone(),
                    sort: a.sort.clone(),
                });
            }
        }
        self.symbols.entry(symbol.to_string()).or_default().extend(assignments);
        Ok(())
    }

    pub fn sorts_of(&self, symbol: &str) -> Option<&BTreeSet<SortAssignment>> {
        self.symbols.get(symbol)
    }

    pub fn symbols(&self) -> impl Iterator<Item = (&str, &BTreeSet<SortAssignment>)> {
        self.symbols.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn route_hierarchy() -> SortSystem {
        let mut sys = SortSystem::new();
        sys.declare_sort_set("mfg").unwrap();
        let set = sys.sort_set_mut("mfg").unwrap();
        for s in ["StraightTrack", "Track", "RouteElement", "Speed", "AGV"] {
            set.declare_sort(s).unwrap();
        }
        set.declare_subsort("StraightTrack", "Track").unwrap();
        set.declare_subsort("Track", "RouteElement").unwrap();
        sys
    }

    #[test]
    fn declare_sort_set_once() {
        let mut sys = SortSystem::new();
        assert_eq!(sys.declare_sort_set("mfg").unwrap(), SortSetId("mfg".into()));
        assert!(sys.sort_set("mfg").unwrap().is_empty());
        assert_eq!(
            sys.declare_sort_set("mfg"),
            Err(SortError::DuplicateSortSet("mfg".into()))
        );
    }

    #[test]
    fn independent_view_sets() {
        let mut sys = SortSystem::new();
        sys.declare_sort_set("cost_view").unwrap();
        sys.declare_sort_set("logistics_view").unwrap();
        assert_eq!(sys.sort_sets().count(), 2);
    }

    #[test]
    fn subsort_chain_and_queries() {
        let sys = route_hierarchy();
        assert_eq!(sys.is_subsort("mfg", "StraightTrack", "RouteElement"), Ok(true));
        assert_eq!(sys.is_subsort("mfg", "Track", "Track"), Ok(true));
        assert_eq!(sys.is_subsort("mfg", "RouteElement", "Track"), Ok(false));
        assert_eq!(sys.is_subsort("mfg", "Speed", "Track"), Ok(false));
    }

    #[test]
    fn cycles_and_self_edges_rejected() {
        let mut set = SortSet::new("s");
        set.declare_sort("X").unwrap();
        set.declare_sort("Y").unwrap();
        set.declare_subsort("X", "Y").unwrap();
        assert!(matches!(
            set.declare_subsort("Y", "X"),
            Err(SortError::CycleIntroduced { .. })
        ));
        assert!(matches!(
            set.declare_subsort("X", "X"),
            Err(SortError::CycleIntroduced { .. })
        ));
        assert!(matches!(
            set.declare_subsort("X", "Z"),
            Err(SortError::UnknownSort { .. })
        ));
    }

    #[test]
    fn cross_set_query_is_unknown_sort() {
        let mut sys = route_hierarchy();
        sys.declare_sort_set("cost_view").unwrap();
        sys.sort_set_mut("cost_view")
            .unwrap()
            .declare_sort("CostCarrier")
            .unwrap();
        assert!(matches!(
            sys.is_subsort("mfg", "Track", "CostCarrier"),
            Err(SortError::UnknownSort { .. })
        ));
        assert!(!sys.leq_any("Track", "CostCarrier"));
    }

    #[test]
    fn symbols_carry_many_sorts() {
        let mut sys = route_hierarchy();
        sys.declare_sort_set("cost_view").unwrap();
        sys.sort_set_mut("cost_view")
            .unwrap()
            .declare_sort("CostCarrier")
            .unwrap();
        let mut alpha = Alphabet::new();
        alpha
            .assign_symbol_sorts(&sys, "agv_speed", [SortAssignment::new("mfg", "Speed")])
            .unwrap();
        assert_eq!(alpha.sorts_of("agv_speed").unwrap().len(), 1);
        alpha
            .assign_symbol_sorts(
                &sys,
                "agv1",
                [
                    SortAssignment::new("mfg", "AGV"),
                    SortAssignment::new("cost_view", "CostCarrier"),
                ],
            )
            .unwrap();
        assert_eq!(alpha.sorts_of("agv1").unwrap().len(), 2);
        let err = alpha.assign_symbol_sorts(&sys, "x", [SortAssignment::new("mfg", "Nope")]);
        assert!(matches!(err, Err(SortError::UnknownSort { .. })));
        assert!(alpha.sorts_of("x").is_none());
    }

    #[test]
    fn ranking() {
        let mut sys = SortSystem::new();
        for s in ["A", "B", "C"] {
            sys.declare_sort_set(s).unwrap();
        }
        sys.rank_sort_sets("A", "B").unwrap();
        sys.rank_sort_sets("B", "C").unwrap();
        assert_eq!(sys.ranked_below("A", "C"), Ok(true));
        assert_eq!(sys.ranked_below("C", "A"), Ok(false));
        assert!(matches!(
            sys.rank_sort_sets("C", "A"),
            Err(SortError::CycleIntroduced { .. })
        ));
        assert!(matches!(
            sys.rank_sort_sets("A", "Q"),
            Err(SortError::UnknownSortSet(_))
        ));
    }

    #[test]
    fn identifiers() {
        assert!(is_ident("Straight_Track-2"));
        assert!(is_ident("_x"));
        assert!(!is_ident("2x"));
        assert!(!is_ident(""));
        assert!(!is_ident("a b"));
    }
}
