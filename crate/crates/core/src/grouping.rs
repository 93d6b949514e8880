//! Meme groups as connected components of the similarity graph.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::similarity::SimilarityEdge;

/// Union-find with path compression and union by rank.
#[derive(Debug, Clone)]
pub struct DisjointSet {
    parent: Vec<usize>,
    rank: Vec<u8>,
    components: usize,
}

impl DisjointSet {
    pub fn new(n: usize) -> Self {
        DisjointSet {
            parent: (0..n).collect(),
            rank: vec![0; n],
            components: n,
        }
    }

    pub fn len(&self) -> usize {
        self.parent.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parent.is_empty()
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    /// Merges the sets of `a` and `b`; returns false if already joined.
    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        self.components -= 1;
        true
    }

    pub fn component_count(&self) -> usize {
        self.components
    }
}

/// A component of row indices, members ascending.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub group_id: usize,
    pub members: Vec<usize>,
}

/// Connected components of the graph on `0..n` with the given undirected
/// pairs. Singletons are included; groups are numbered by smallest member.
pub fn connected_components<I>(n: usize, pairs: I) -> Result<Vec<Component>>
where
    I: IntoIterator<Item = (usize, usize)>,
{
    let mut ds = DisjointSet::new(n);
    for (a, b) in pairs {
        for idx in [a, b] {
            if idx >= n {
                return Err(Error::Index { index: idx, len: n });
            }
        }
        ds.union(a, b);
    }
    let mut slot_of_root: HashMap<usize, usize> = HashMap::with_capacity(ds.component_count());
    let mut groups: Vec<Vec<usize>> = Vec::with_capacity(ds.component_count());
    // Walking members in ascending order numbers groups by their smallest
    // member and leaves each member list sorted.
    for v in 0..n {
        let root = ds.find(v);
        let slot = *slot_of_root.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[slot].push(v);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .map(|(group_id, members)| Component { group_id, members })
        .collect())
}

pub fn group_edges(n: usize, edges: &[SimilarityEdge]) -> Result<Vec<Component>> {
    connected_components(n, edges.iter().map(|e| (e.src, e.dst)))
}

/// A named meme group, members listed in corpus order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemeGroup {
    pub group_id: usize,
    pub members: Vec<String>,
}

impl MemeGroup {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

pub fn name_groups(components: &[Component], ids: &[String]) -> Result<Vec<MemeGroup>> {
    components
        .iter()
        .map(|c| {
            let members = c
                .members
                .iter()
                .map(|&i| {
                    ids.get(i).cloned().ok_or(Error::Index {
                        index: i,
                        len: ids.len(),
                    })
                })
                .collect::<Result<_>>()?;
            Ok(MemeGroup {
                group_id: c.group_id,
                members,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SizeHistogram {
    #[serde(rename = "1")]
    pub one: usize,
    #[serde(rename = "2")]
    pub two: usize,
    #[serde(rename = "3-5")]
    pub three_to_five: usize,
    #[serde(rename = "6-10")]
    pub six_to_ten: usize,
    #[serde(rename = ">10")]
    pub over_ten: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GroupReport {
    pub count: usize,
    pub memes: usize,
    pub largest: usize,
    pub singletons: usize,
    pub histogram: SizeHistogram,
}

pub fn group_stats(groups: &[MemeGroup]) -> Result<GroupReport> {
    let mut seen = HashSet::new();
    let mut hist = SizeHistogram {
        one: 0,
        two: 0,
        three_to_five: 0,
        six_to_ten: 0,
        over_ten: 0,
    };
    let mut largest = 0;
    for g in groups {
        if g.members.is_empty() {
            return Err(Error::PartitionViolation(format!("group {} is empty", g.group_id)));
        }
        for m in &g.members {
            if !seen.insert(m.as_str()) {
                return Err(Error::PartitionViolation(format!("meme `{m}` appears in more than one group")));
            }
        }
        let size = g.size();
        largest = largest.max(size);
        match size {
            1 => hist.one += 1,
            2 => hist.two += 1,
            3..=5 => hist.three_to_five += 1,
            6..=10 => hist.six_to_ten += 1,
            _ => hist.over_ten += 1,
        }
    }
    Ok(GroupReport {
        count: groups.len(),
        memes: seen.len(),
        largest,
        singletons: hist.one,
        histogram: hist,
    })
}

/// Fraction of a group's internal pairs that are themselves edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliqueCheck {
    pub group_id: usize,
    pub size: usize,
    pub internal_pairs: u64,
    pub linked_pairs: u64,
    /// `None` for singletons.
    pub density: Option<f64>,
}

/// Single-link chaining diagnostic: a group whose density is far below 1
/// was joined through intermediaries rather than direct similarity.
pub fn clique_check(components: &[Component], edges: &[SimilarityEdge]) -> Vec<CliqueCheck> {
    let mut group_of = HashMap::new();
    for c in components {
        for &m in &c.members {
            group_of.insert(m, c.group_id);
        }
    }
    let mut linked: HashMap<usize, HashSet<(usize, usize)>> = HashMap::new();
    for e in edges {
        if let (Some(a), Some(b)) = (group_of.get(&e.src), group_of.get(&e.dst)) {
            if a == b {
                linked.entry(*a).or_default().insert((e.src.min(e.dst), e.src.max(e.dst)));
            }
        }
    }
    components
        .iter()
        .map(|c| {
            let k = c.members.len() as u64;
            let internal = k * k.saturating_sub(1) / 2;
            let l = linked.get(&c.group_id).map_or(0, |s| s.len() as u64);
            CliqueCheck {
                group_id: c.group_id,
                size: c.members.len(),
                internal_pairs: internal,
                linked_pairs: l,
                density: (internal > 0).then(|| l as f64 / internal as f64),
            }
        })
        .collect()
}

/// Groups CSV: `meme_id,group_id`, one row per meme.
pub fn write_groups_csv<W: Write>(groups: &[MemeGroup], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["meme_id", "group_id"]).map_err(|e| Error::csv("<groups>", e))?;
    for g in groups {
        for m in &g.members {
            w.write_record([m.as_str(), &g.group_id.to_string()])
                .map_err(|e| Error::csv("<groups>", e))?;
        }
    }
    w.flush().map_err(|e| Error::io("<groups>", e))?;
    Ok(())
}

/// Groups JSON: `[{"group_id":0,"members":[…]},…]`.
pub fn write_groups_json<W: Write>(groups: &[MemeGroup], mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, groups).map_err(|e| Error::Format(e.to_string()))?;
    writer.write_all(b"\n").map_err(|e| Error::io("<groups>", e))
}

pub fn read_groups_json<R: Read>(reader: R) -> Result<Vec<MemeGroup>> {
    let groups: Vec<MemeGroup> =
        serde_json::from_reader(reader).map_err(|e| Error::Parse { line: e.line(), message: e.to_string() })?;
    let mut ids = HashSet::new();
    for g in &groups {
        if !ids.insert(g.group_id) {
            return Err(Error::Conflict(format!("group id {} appears twice", g.group_id)));
        }
    }
    group_stats(&groups)?;
    Ok(groups)
}

pub fn load_groups_json(path: impl AsRef<Path>) -> Result<Vec<MemeGroup>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_groups_json(std::io::BufReader::new(file))
}
