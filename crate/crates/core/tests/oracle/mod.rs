//! Brute-force reference implementations computed straight from the
//! document, without any of the library's derived caches.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use capslice_core::synthesis::{SynthFunction, SynthInput};
use capslice_core::GraphDocument;

pub struct Oracle {
    pub names: Vec<String>,
    children: Vec<Vec<(usize, u8)>>,
    parents: Vec<Vec<(usize, u8)>>,
    pub root: usize,
    pub leaves: Vec<usize>,
    /// Functions: neither root nor leaf.
    pub functions: Vec<usize>,
}

impl Oracle {
    pub fn new(doc: &GraphDocument) -> Self {
        let names: Vec<String> = doc.nodes.iter().map(|n| n.id.clone()).collect();
        let ix: BTreeMap<&str, usize> = names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let n = names.len();
        let mut children = vec![Vec::new(); n];
        let mut parents = vec![Vec::new(); n];
        for e in &doc.edges {
            let (p, c) = (ix[e.from.as_str()], ix[e.to.as_str()]);
            children[p].push((c, e.weight as u8));
            parents[c].push((p, e.weight as u8));
        }
        let root = (0..n).find(|&v| parents[v].is_empty()).expect("root");
        let leaves = (0..n).filter(|&v| children[v].is_empty()).collect();
        let functions = (0..n)
            .filter(|&v| v != root && !children[v].is_empty())
            .collect();
        Oracle {
            names,
            children,
            parents,
            root,
            leaves,
            functions,
        }
    }

    pub fn index(&self, name: &str) -> usize {
        self.names.iter().position(|n| n == name).expect("known node")
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        self.children[v].is_empty()
    }

    /// Strict descendants by depth-first search.
    pub fn descendants(&self, v: usize) -> BTreeSet<usize> {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = self.children[v].iter().map(|c| c.0).collect();
        while let Some(x) = stack.pop() {
            if seen.insert(x) {
                stack.extend(self.children[x].iter().map(|c| c.0));
            }
        }
        seen
    }

    pub fn leaves_under(&self, v: usize) -> BTreeSet<usize> {
        if self.is_leaf(v) {
            return BTreeSet::from([v]);
        }
        self.descendants(v).into_iter().filter(|&x| self.is_leaf(x)).collect()
    }

    /// Unit-length shortest path ignoring edge direction.
    pub fn distance(&self, a: usize, b: usize) -> usize {
        let mut dist = vec![usize::MAX; self.names.len()];
        dist[a] = 0;
        let mut queue = VecDeque::from([a]);
        while let Some(x) = queue.pop_front() {
            if x == b {
                return dist[x];
            }
            for &(y, _) in self.children[x].iter().chain(&self.parents[x]) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        panic!("disconnected")
    }

    fn relevance(w: u8) -> f64 {
        match w {
            1 => 0.1,
            3 => 0.3,
            7 => 0.7,
            10 => 1.0,
            _ => panic!("function edge has no relevance"),
        }
    }

    /// Size-weighted mean of child cohesions, recomputed recursively.
    pub fn cohesion(&self, v: usize) -> f64 {
        self.scaled_cohesion(v, 1.0)
    }

    /// Cohesion with every relevance multiplied by `factor`.
    pub fn scaled_cohesion(&self, v: usize, factor: f64) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for &(c, w) in &self.children[v] {
            if self.is_leaf(c) {
                num += factor * Self::relevance(w);
                den += 1.0;
            } else {
                let size = self.leaves_under(c).len() as f64;
                num += size * self.scaled_cohesion(c, factor);
                den += size;
            }
        }
        num / den
    }

    /// Coupling of directive sets as the plain double sum.
    pub fn coupling(&self, dp: &BTreeSet<usize>, dq: &BTreeSet<usize>) -> f64 {
        let mut sum = 0.0;
        for &di in dp {
            for &dj in dq {
                let p = 1.0 / dq.len() as f64;
                sum += p / self.distance(di, dj) as f64;
            }
        }
        sum / (dp.len() * dq.len()) as f64
    }

    fn strength(&self, member: usize, leaf: usize, below: &BTreeSet<usize>) -> u8 {
        self.parents[leaf]
            .iter()
            .filter(|(p, _)| *p == member || below.contains(p))
            .map(|&(_, w)| w)
            .max()
            .unwrap_or(0)
    }

    /// Owner per leaf under the heaviest-edge rule, or `None` if a leaf is
    /// unreachable. The second value reports whether any leaf was shared.
    pub fn assign(&self, members: &[usize]) -> Option<(BTreeMap<usize, usize>, bool)> {
        let below: Vec<BTreeSet<usize>> = members.iter().map(|&m| self.descendants(m)).collect();
        let mut owner = BTreeMap::new();
        let mut shared = false;
        for &leaf in &self.leaves {
            let reaching: Vec<usize> = (0..members.len()).filter(|&i| below[i].contains(&leaf)).collect();
            if reaching.is_empty() {
                return None;
            }
            shared |= reaching.len() > 1;
            let best = reaching
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let (sa, sb) = (self.strength(members[a], leaf, &below[a]), self.strength(members[b], leaf, &below[b]));
                    sa.cmp(&sb).then(self.names[members[b]].cmp(&self.names[members[a]]))
                })
                .unwrap();
            owner.insert(leaf, members[best]);
        }
        Some((owner, shared))
    }

    /// Every function subset passing the slice constraints, by brute force.
    pub fn basic_sets(&self) -> Vec<Vec<String>> {
        let f = &self.functions;
        let mut out = Vec::new();
        for mask in 1u32..(1 << f.len()) {
            let members: Vec<usize> = (0..f.len()).filter(|i| mask >> i & 1 == 1).map(|i| f[i]).collect();
            let nested = members
                .iter()
                .any(|&a| members.iter().any(|&b| a != b && self.descendants(a).contains(&b)));
            if nested {
                continue;
            }
            let Some((owner, _)) = self.assign(&members) else {
                continue;
            };
            if members.iter().all(|m| owner.values().any(|o| o == m)) {
                let mut names: Vec<String> = members.iter().map(|&m| self.names[m].clone()).collect();
                names.sort();
                out.push(names);
            }
        }
        out.sort_by(|a, b| (a.len(), a).cmp(&(b.len(), b)));
        out
    }
}

/// Maximal functions by pairwise comparison; equal member sets keep the
/// smallest id.
pub fn maximal(fs: &[SynthFunction]) -> Vec<SynthFunction> {
    let mut keep: Vec<SynthFunction> = fs
        .iter()
        .filter(|f| {
            !fs.iter().any(|g| {
                (f.members != g.members && f.members.is_subset(&g.members))
                    || (f.members == g.members && g.id < f.id)
            })
        })
        .cloned()
        .collect();
    keep.sort();
    keep
}

/// Member unions of the overlap graph's components via breadth-first search.
pub fn components(fs: &[SynthFunction]) -> BTreeSet<BTreeSet<String>> {
    let mut seen = vec![false; fs.len()];
    let mut out = BTreeSet::new();
    for s in 0..fs.len() {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut union = BTreeSet::new();
        let mut queue = VecDeque::from([s]);
        while let Some(x) = queue.pop_front() {
            union.extend(fs[x].members.iter().cloned());
            for y in 0..fs.len() {
                if !seen[y] && !fs[x].members.is_disjoint(&fs[y].members) {
                    seen[y] = true;
                    queue.push_back(y);
                }
            }
        }
        out.insert(union);
    }
    out
}

pub fn initial(input: &SynthInput, d: &str) -> Vec<SynthFunction> {
    input.associations[d]
        .iter()
        .map(|id| input.functions.iter().find(|f| &f.id == id).unwrap().clone())
        .collect()
}
